#pragma once
//
// Deterministic 2D grid world: walls, semantic objects, a unicycle robot,
// and a field-of-view raycast sensor standing in for onboard RGB-D.
//

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "mobman/errors.hpp"
#include "mobman/geometry.hpp"
#include "mobman/grid.hpp"
#include "mobman/rng.hpp"

namespace mobman {

struct SemanticObject {
    int id = 0;
    std::string category;
    std::set<std::string> attributes;
    Eigen::Vector2d position{0.0, 0.0};  // meters
};

struct WorldModel {
    int width = 0;   // cells
    int height = 0;  // cells
    double cell_size = 0.25;
    std::set<Cell> walls;
    std::vector<SemanticObject> objects;
    std::uint64_t seed = 0;

    Cell cell_of(const Eigen::Vector2d& p) const {
        return {static_cast<int>(std::floor(p.x() / cell_size)),
                static_cast<int>(std::floor(p.y() / cell_size))};
    }

    Eigen::Vector2d cell_center(Cell c) const {
        return {(c.x + 0.5) * cell_size, (c.y + 0.5) * cell_size};
    }

    bool in_bounds(Cell c) const { return c.x >= 0 && c.x < width && c.y >= 0 && c.y < height; }

    bool is_wall(Cell c) const { return walls.count(c) > 0; }

    bool is_free(Cell c) const { return in_bounds(c) && !is_wall(c); }
};

struct RobotPose {
    double x = 0.0;
    double y = 0.0;
    double heading = 0.0;  // radians, (-pi, pi]

    Eigen::Vector2d xy() const { return {x, y}; }
};

struct VelocityCommand {
    double v = 0.0;      // m/s
    double omega = 0.0;  // rad/s
};

struct SensorParams {
    double range = 5.0;       // meters
    double fov = kPi / 2.0;   // radians, full cone
};

struct VisibleObject {
    int id = 0;
    std::string category;
    std::set<std::string> attributes;
    Eigen::Vector2d position{0.0, 0.0};  // measured, meters
};

struct Observation {
    std::vector<VisibleObject> visible_objects;
    std::set<Cell> free_cells;
    std::set<Cell> occupied_cells;
    double timestamp = 0.0;
};

// Unicycle step with midpoint heading integration, free space only.
inline RobotPose integrate_unicycle(const RobotPose& pose, VelocityCommand cmd, double dt) {
    const double mid = pose.heading + 0.5 * cmd.omega * dt;
    RobotPose out;
    out.x = pose.x + cmd.v * dt * std::cos(mid);
    out.y = pose.y + cmd.v * dt * std::sin(mid);
    out.heading = wrap_angle(pose.heading + cmd.omega * dt);
    return out;
}

// World-aware step: when the target cell is occupied or out of bounds the
// position holds but the heading still updates, so the robot can turn out
// of contact.
inline RobotPose step_unicycle(const WorldModel& world, const RobotPose& pose,
                               VelocityCommand cmd, double dt) {
    RobotPose next = integrate_unicycle(pose, cmd, dt);
    if (!world.is_free(world.cell_of(next.xy()))) {
        next.x = pose.x;
        next.y = pose.y;
    }
    return next;
}

inline RobotPose step_unicycle(const RobotPose& pose, VelocityCommand cmd, double dt) {
    return integrate_unicycle(pose, cmd, dt);
}

namespace detail {

inline bool within_fov(const RobotPose& pose, const Eigen::Vector2d& target, double range,
                       double fov) {
    const Eigen::Vector2d d = target - pose.xy();
    const double dist = d.norm();
    if (dist > range) return false;
    if (dist < 1e-12) return true;
    const double bearing = std::atan2(d.y(), d.x());
    return std::abs(wrap_angle(bearing - pose.heading)) <= 0.5 * fov + 1e-12;
}

// Ray is clear up to (not counting) the last cell.
inline bool line_of_sight(const WorldModel& world, Cell from, Cell to) {
    for (const Cell& c : bresenham(from, to)) {
        if (c == to) break;
        if (world.is_wall(c)) return false;
    }
    return !world.is_wall(to);
}

} // namespace detail

// Raycast observation. An object is visible iff it is within range, within
// half-FOV of the heading, and the Bresenham ray from the robot cell to the
// object cell crosses no wall. Sensed cells are every ray-traversed cell:
// one ray per in-cone cell, walked until the first wall (which is sensed as
// occupied).
inline Observation observe(const WorldModel& world, const RobotPose& pose,
                           const SensorParams& sensor, double timestamp = 0.0) {
    Observation obs;
    obs.timestamp = timestamp;
    const Cell robot_cell = world.cell_of(pose.xy());

    const int reach = static_cast<int>(std::ceil(sensor.range / world.cell_size)) + 1;
    for (int y = std::max(0, robot_cell.y - reach);
         y <= std::min(world.height - 1, robot_cell.y + reach); ++y) {
        for (int x = std::max(0, robot_cell.x - reach);
             x <= std::min(world.width - 1, robot_cell.x + reach); ++x) {
            const Cell target{x, y};
            if (!detail::within_fov(pose, world.cell_center(target), sensor.range, sensor.fov))
                continue;
            for (const Cell& c : bresenham(robot_cell, target)) {
                if (world.is_wall(c)) {
                    obs.occupied_cells.insert(c);
                    break;
                }
                obs.free_cells.insert(c);
            }
        }
    }

    for (const SemanticObject& o : world.objects) {
        if (!detail::within_fov(pose, o.position, sensor.range, sensor.fov)) continue;
        if (!detail::line_of_sight(world, robot_cell, world.cell_of(o.position))) continue;
        obs.visible_objects.push_back({o.id, o.category, o.attributes, o.position});
    }
    return obs;
}

struct GenParams {
    int width = 20;
    int height = 20;
    double cell_size = 0.25;
    int n_objects = 8;
    double wall_density = 0.1;                // fraction of cells, in [0, 0.3]
    std::vector<std::string> categories{"chair", "table", "plant", "sofa", "lamp", "box"};
    std::vector<std::string> attribute_pool{"black", "white", "red", "office", "small", "large"};
    double min_object_separation = 0.75;      // meters, keeps same-category merges apart
};

namespace detail {

// Free-cell connected components, 4-connected, labeled in row-major order.
inline std::vector<int> free_components(const WorldModel& w, int& count) {
    std::vector<int> label(static_cast<std::size_t>(w.width * w.height), -1);
    const auto idx = [&w](Cell c) { return static_cast<std::size_t>(c.y) * w.width + c.x; };
    count = 0;
    for (int y = 0; y < w.height; ++y) {
        for (int x = 0; x < w.width; ++x) {
            const Cell seed{x, y};
            if (!w.is_free(seed) || label[idx(seed)] >= 0) continue;
            std::vector<Cell> stack{seed};
            label[idx(seed)] = count;
            while (!stack.empty()) {
                const Cell c = stack.back();
                stack.pop_back();
                const Cell nbs[4] = {{c.x + 1, c.y}, {c.x - 1, c.y}, {c.x, c.y + 1}, {c.x, c.y - 1}};
                for (const Cell& nb : nbs) {
                    if (w.is_free(nb) && label[idx(nb)] < 0) {
                        label[idx(nb)] = count;
                        stack.push_back(nb);
                    }
                }
            }
            ++count;
        }
    }
    return label;
}

} // namespace detail

// Procedural world: sprinkle walls at the requested density, carve until the
// free cells form one component, then place objects at cell centers with a
// minimum mutual separation. Deterministic for a fixed (seed, params).
inline WorldModel generate_world(std::uint64_t seed, const GenParams& params) {
    if (params.n_objects < 1) throw ScenarioInvalid("generate_world: n_objects must be >= 1");
    if (params.wall_density < 0.0 || params.wall_density > 0.3)
        throw ScenarioInvalid("generate_world: wall_density outside [0, 0.3]");
    if (params.width < 4 || params.height < 4)
        throw ScenarioInvalid("generate_world: world must be at least 4x4 cells");

    Rng rng(seed);
    WorldModel w;
    w.width = params.width;
    w.height = params.height;
    w.cell_size = params.cell_size;
    w.seed = seed;

    const int total = params.width * params.height;
    const int n_walls = static_cast<int>(std::floor(params.wall_density * total));
    while (static_cast<int>(w.walls.size()) < n_walls) {
        const Cell c{rng.uniform_int(0, params.width - 1), rng.uniform_int(0, params.height - 1)};
        w.walls.insert(c);
    }

    // Carve an axis-aligned (4-connected) corridor between component
    // representatives until the free space is a single component.
    int carves = 0;
    while (true) {
        int count = 0;
        const std::vector<int> label = detail::free_components(w, count);
        if (count <= 1) break;
        if (++carves > 100) throw InfeasibleWorld("generate_world: carving budget exhausted");

        const auto idx = [&w](Cell c) { return static_cast<std::size_t>(c.y) * w.width + c.x; };
        Cell rep0{-1, -1}, rep1{-1, -1};
        for (int y = 0; y < w.height && rep1.x < 0; ++y) {
            for (int x = 0; x < w.width && rep1.x < 0; ++x) {
                const Cell c{x, y};
                if (!w.is_free(c)) continue;
                if (label[idx(c)] == 0 && rep0.x < 0) rep0 = c;
                if (label[idx(c)] == 1) rep1 = c;
            }
        }
        const int sx = rep0.x <= rep1.x ? 1 : -1;
        for (int x = rep0.x; x != rep1.x + sx; x += sx) w.walls.erase({x, rep0.y});
        const int sy = rep0.y <= rep1.y ? 1 : -1;
        for (int y = rep0.y; y != rep1.y + sy; y += sy) w.walls.erase({rep1.x, y});
    }

    // Object placement on free cells, min separation apart.
    std::vector<Cell> free_cells;
    for (int y = 0; y < w.height; ++y)
        for (int x = 0; x < w.width; ++x)
            if (w.is_free({x, y})) free_cells.push_back({x, y});

    int attempts = 0;
    while (static_cast<int>(w.objects.size()) < params.n_objects) {
        if (++attempts > 100 * params.n_objects)
            throw InfeasibleWorld("generate_world: cannot place objects with requested separation");
        const Cell c = free_cells[rng.uniform_index(free_cells.size())];
        const Eigen::Vector2d pos = w.cell_center(c);
        bool ok = true;
        for (const SemanticObject& o : w.objects) {
            if ((o.position - pos).norm() < params.min_object_separation) {
                ok = false;
                break;
            }
        }
        if (!ok) continue;
        SemanticObject obj;
        obj.id = static_cast<int>(w.objects.size());
        obj.category = params.categories[rng.uniform_index(params.categories.size())];
        const int n_attrs = rng.uniform_int(0, 2);
        for (int k = 0; k < n_attrs; ++k)
            obj.attributes.insert(params.attribute_pool[rng.uniform_index(params.attribute_pool.size())]);
        obj.position = pos;
        w.objects.push_back(obj);
    }
    return w;
}

// A deterministic free-cell start pose drawn from the world's seed stream.
inline RobotPose random_start_pose(const WorldModel& world, std::uint64_t seed) {
    Rng rng(seed ^ 0x9e3779b97f4a7c15ull);
    std::vector<Cell> free_cells;
    for (int y = 0; y < world.height; ++y)
        for (int x = 0; x < world.width; ++x)
            if (world.is_free({x, y})) free_cells.push_back({x, y});
    if (free_cells.empty()) throw InfeasibleWorld("random_start_pose: no free cells");
    const Cell c = free_cells[rng.uniform_index(free_cells.size())];
    const Eigen::Vector2d p = world.cell_center(c);
    const double headings[4] = {0.0, kPi / 2.0, kPi, -kPi / 2.0};
    RobotPose pose;
    pose.x = p.x();
    pose.y = p.y();
    pose.heading = headings[rng.uniform_index(4)];
    return pose;
}

} // namespace mobman
