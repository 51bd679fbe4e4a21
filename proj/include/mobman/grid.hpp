#pragma once
//
// Grid-cell primitives: Bresenham ray walking, an occupancy grid with
// unknown/free/occupied states, and deterministic 8-connected A*.
//

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <vector>

namespace mobman {

struct Cell {
    int x = 0;
    int y = 0;
    friend auto operator<=>(const Cell&, const Cell&) = default;
};

// Cells on the integer line segment from a to b, inclusive, in walk order.
inline std::vector<Cell> bresenham(Cell a, Cell b) {
    std::vector<Cell> out;
    int dx = std::abs(b.x - a.x), dy = -std::abs(b.y - a.y);
    int sx = a.x < b.x ? 1 : -1, sy = a.y < b.y ? 1 : -1;
    int err = dx + dy;
    Cell c = a;
    while (true) {
        out.push_back(c);
        if (c == b) break;
        const int e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            c.x += sx;
        }
        if (e2 <= dx) {
            err += dx;
            c.y += sy;
        }
    }
    return out;
}

enum class CellState : std::uint8_t { Unknown = 0, Free = 1, Occupied = 2 };

// Row-major knowledge grid built up from observations.
class OccupancyGrid {
public:
    OccupancyGrid() = default;
    OccupancyGrid(int width, int height)
        : width_(width), height_(height),
          cells_(static_cast<std::size_t>(width * height), CellState::Unknown) {}

    int width() const { return width_; }
    int height() const { return height_; }

    bool in_bounds(Cell c) const {
        return c.x >= 0 && c.x < width_ && c.y >= 0 && c.y < height_;
    }

    CellState at(Cell c) const { return cells_[index(c)]; }
    void set(Cell c, CellState s) { cells_[index(c)] = s; }

    bool fully_known() const {
        return std::none_of(cells_.begin(), cells_.end(),
                            [](CellState s) { return s == CellState::Unknown; });
    }

private:
    std::size_t index(Cell c) const {
        return static_cast<std::size_t>(c.y) * static_cast<std::size_t>(width_) + c.x;
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<CellState> cells_;
};

// 8-connected A* with unit/diagonal costs. Passability is a predicate so the
// same routine plans on known-free cells and on the ground-truth map.
// Diagonal moves through an impassable orthogonal neighbor are forbidden.
// Expansion order is deterministic: ties resolve by (f, g, row-major index).
template <typename Passable>
std::optional<std::vector<Cell>> astar(int width, int height, Passable passable,
                                       Cell start, Cell goal) {
    if (start.x < 0 || start.x >= width || start.y < 0 || start.y >= height) return std::nullopt;
    if (goal.x < 0 || goal.x >= width || goal.y < 0 || goal.y >= height) return std::nullopt;
    if (!passable(start) || !passable(goal)) return std::nullopt;

    const auto idx = [width](Cell c) {
        return static_cast<std::size_t>(c.y) * static_cast<std::size_t>(width) + c.x;
    };
    const auto heuristic = [goal](Cell c) {
        const double dx = std::abs(c.x - goal.x), dy = std::abs(c.y - goal.y);
        return std::max(dx, dy) + (std::sqrt(2.0) - 1.0) * std::min(dx, dy);
    };

    struct Node {
        double f;
        double g;
        std::size_t order;
        Cell cell;
        bool operator>(const Node& o) const {
            if (f != o.f) return f > o.f;
            if (g != o.g) return g > o.g;
            return order > o.order;
        }
    };

    const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    std::vector<double> best_g(n, std::numeric_limits<double>::infinity());
    std::vector<Cell> parent(n);
    std::priority_queue<Node, std::vector<Node>, std::greater<Node>> open;

    best_g[idx(start)] = 0.0;
    open.push({heuristic(start), 0.0, idx(start), start});

    static constexpr int kDx[8] = {1, -1, 0, 0, 1, 1, -1, -1};
    static constexpr int kDy[8] = {0, 0, 1, -1, 1, -1, 1, -1};

    while (!open.empty()) {
        const Node cur = open.top();
        open.pop();
        if (cur.g > best_g[idx(cur.cell)]) continue;
        if (cur.cell == goal) {
            std::vector<Cell> path;
            Cell c = goal;
            path.push_back(c);
            while (!(c == start)) {
                c = parent[idx(c)];
                path.push_back(c);
            }
            std::reverse(path.begin(), path.end());
            return path;
        }
        for (int k = 0; k < 8; ++k) {
            const Cell nb{cur.cell.x + kDx[k], cur.cell.y + kDy[k]};
            if (nb.x < 0 || nb.x >= width || nb.y < 0 || nb.y >= height) continue;
            if (!passable(nb)) continue;
            const bool diagonal = kDx[k] != 0 && kDy[k] != 0;
            if (diagonal) {
                if (!passable(Cell{cur.cell.x + kDx[k], cur.cell.y}) ||
                    !passable(Cell{cur.cell.x, cur.cell.y + kDy[k]}))
                    continue;
            }
            const double g = cur.g + (diagonal ? std::sqrt(2.0) : 1.0);
            if (g < best_g[idx(nb)]) {
                best_g[idx(nb)] = g;
                parent[idx(nb)] = cur.cell;
                open.push({g + heuristic(nb), g, idx(nb), nb});
            }
        }
    }
    return std::nullopt;
}

// Length in cell units of an 8-connected path (1 per step, sqrt2 diagonal).
inline double path_cost(const std::vector<Cell>& path) {
    double cost = 0.0;
    for (std::size_t i = 1; i < path.size(); ++i) {
        const bool diagonal = path[i].x != path[i - 1].x && path[i].y != path[i - 1].y;
        cost += diagonal ? std::sqrt(2.0) : 1.0;
    }
    return cost;
}

} // namespace mobman
