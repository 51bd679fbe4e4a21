#pragma once
//
// Pluggable stand-in for the vision-language reasoner. The deterministic
// mock reads the ground-truth world; the HTTP client speaks the wire
// protocol so an external reasoner can be attached instead.
//

#include <memory>
#include <queue>
#include <string>
#include <vector>

#include <json.hpp>

#include "mobman/actions.hpp"
#include "mobman/errors.hpp"
#include "mobman/grid.hpp"
#include "mobman/scenegraph.hpp"
#include "mobman/world.hpp"

namespace mobman {

enum class QueryKind { RankFrontiers, EstimateImprovement };

struct ReasonerQuery {
    QueryKind kind = QueryKind::RankFrontiers;
    SemanticGraph scene;                     // scene summary: labels + positions + edges
    std::vector<SubGoal> subgoals;
    std::vector<Cell> frontiers;             // RankFrontiers candidates
    std::vector<DiscreteAction> actions;     // EstimateImprovement candidates
    RobotPose pose;
};

struct ReasonerReply {
    std::vector<double> scores;  // one per candidate, same order
};

class Reasoner {
public:
    virtual ~Reasoner() = default;
    virtual ReasonerReply rank_frontiers(const ReasonerQuery& query) = 0;
    virtual ReasonerReply estimate_improvement(const ReasonerQuery& query) = 0;
};

// Parameters the mock needs to run its one-tick lookahead.
struct MockReasonerConfig {
    SensorParams sensor;
    double decision_dt = 1.0;
    double control_dt = 0.02;
    double d_merge = 0.5;
};

// Ground-truth-assisted reasoner. Frontier ranking pulls exploration toward
// scene nodes whose category appears in any sub-goal; improvement estimates
// run a one-tick lookahead against the true world and report the resulting
// matching-score delta. Both are pure in (query, world, goal).
//
// Distances are geodesic over the true free grid (multi-source Dijkstra), so
// a frontier right behind a wall ranks by the cost of actually reaching it;
// unreachable pockets rank last.
class MockReasoner : public Reasoner {
public:
    MockReasoner(const WorldModel& world, GoalSpec goal, MockReasonerConfig config = {})
        : world_(&world), goal_(std::move(goal)), config_(config) {}

    ReasonerReply rank_frontiers(const ReasonerQuery& query) override {
        if (query.frontiers.empty())
            throw Error("mock rank_frontiers: empty candidate list");
        std::vector<Cell> sources;
        for (const GraphNode& n : query.scene.nodes) {
            if (!n.position) continue;
            for (const SubGoal& sg : query.subgoals)
                if (sg.category == n.category) {
                    sources.push_back(world_->cell_of(*n.position));
                    break;
                }
        }
        if (sources.empty()) sources.push_back(world_->cell_of(query.pose.xy()));

        const std::vector<double> field = geodesic_field(sources);
        ReasonerReply reply;
        reply.scores.reserve(query.frontiers.size());
        for (const Cell& f : query.frontiers) {
            const double d = world_->in_bounds(f)
                                 ? field[static_cast<std::size_t>(f.y) * world_->width + f.x]
                                 : std::numeric_limits<double>::infinity();
            reply.scores.push_back(std::isinf(d) ? -1e18 : -d);
        }
        return reply;
    }

    ReasonerReply estimate_improvement(const ReasonerQuery& query) override {
        if (query.actions.empty())
            throw Error("mock estimate_improvement: empty candidate list");
        const double base = match_score(query.scene, goal_.graph).score;
        ReasonerReply reply;
        reply.scores.reserve(query.actions.size());
        for (DiscreteAction a : query.actions) {
            const RobotPose next = simulate_decision_tick(*world_, query.pose, a,
                                                          config_.decision_dt, config_.control_dt);
            const Observation obs = observe(*world_, next, config_.sensor);
            const SemanticGraph merged =
                integrate_observation(query.scene, obs, /*step=*/0, config_.d_merge);
            reply.scores.push_back(match_score(merged, goal_.graph).score - base);
        }
        return reply;
    }

private:
    // Metric distance from the nearest source over the true free grid,
    // 8-connected, corner cuts forbidden. Unreachable cells are +inf.
    std::vector<double> geodesic_field(const std::vector<Cell>& sources) const {
        const int w = world_->width, h = world_->height;
        const auto idx = [w](Cell c) { return static_cast<std::size_t>(c.y) * w + c.x; };
        std::vector<double> dist(static_cast<std::size_t>(w) * h,
                                 std::numeric_limits<double>::infinity());
        using Entry = std::pair<double, std::size_t>;
        std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> pq;
        for (const Cell& s : sources) {
            if (!world_->is_free(s)) continue;
            dist[idx(s)] = 0.0;
            pq.push({0.0, idx(s)});
        }
        while (!pq.empty()) {
            const auto [d, at] = pq.top();
            pq.pop();
            if (d > dist[at]) continue;
            const Cell c{static_cast<int>(at % w), static_cast<int>(at / w)};
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    if (dx == 0 && dy == 0) continue;
                    const Cell nb{c.x + dx, c.y + dy};
                    if (!world_->is_free(nb)) continue;
                    if (dx != 0 && dy != 0 &&
                        (!world_->is_free({c.x + dx, c.y}) || !world_->is_free({c.x, c.y + dy})))
                        continue;
                    const double step =
                        (dx != 0 && dy != 0 ? std::sqrt(2.0) : 1.0) * world_->cell_size;
                    if (d + step < dist[idx(nb)]) {
                        dist[idx(nb)] = d + step;
                        pq.push({d + step, idx(nb)});
                    }
                }
        }
        return dist;
    }

    const WorldModel* world_;
    GoalSpec goal_;
    MockReasonerConfig config_;
};

// --- wire protocol -------------------------------------------------------
//
// POST /rank_frontiers and POST /estimate_improvement with JSON bodies:
//   {
//     "kind": "rank_frontiers" | "estimate_improvement",
//     "scene_nodes": [{"id", "category", "attributes", "position": [x, y]}],
//     "scene_edges": [[id, id]],
//     "subgoals": [{"goal_node_id", "category", "attributes", "related": []}],
//     "frontiers": [[cx, cy], ...]        (rank_frontiers only)
//     "actions": ["move_forward", ...]    (estimate_improvement only)
//     "robot_pose": [x, y, heading]
//   }
// Reply: {"scores": [...]} with one finite value per candidate.

inline nlohmann::json query_to_json(const ReasonerQuery& query) {
    nlohmann::json j;
    j["kind"] = query.kind == QueryKind::RankFrontiers ? "rank_frontiers"
                                                       : "estimate_improvement";
    j["scene_nodes"] = nlohmann::json::array();
    for (const GraphNode& n : query.scene.nodes) {
        nlohmann::json jn;
        jn["id"] = n.id;
        jn["category"] = n.category;
        jn["attributes"] = n.attributes;
        if (n.position) jn["position"] = {n.position->x(), n.position->y()};
        j["scene_nodes"].push_back(jn);
    }
    j["scene_edges"] = nlohmann::json::array();
    for (const GraphEdge& e : query.scene.edges) j["scene_edges"].push_back({e.a, e.b});
    j["subgoals"] = nlohmann::json::array();
    for (const SubGoal& sg : query.subgoals) {
        nlohmann::json js;
        js["goal_node_id"] = sg.goal_node_id;
        js["category"] = sg.category;
        js["attributes"] = sg.attributes;
        js["related"] = sg.related_nodes;
        j["subgoals"].push_back(js);
    }
    if (query.kind == QueryKind::RankFrontiers) {
        j["frontiers"] = nlohmann::json::array();
        for (const Cell& c : query.frontiers) j["frontiers"].push_back({c.x, c.y});
    } else {
        j["actions"] = nlohmann::json::array();
        for (DiscreteAction a : query.actions) j["actions"].push_back(to_string(a));
    }
    j["robot_pose"] = {query.pose.x, query.pose.y, query.pose.heading};
    return j;
}

inline ReasonerReply reply_from_json(const nlohmann::json& j, std::size_t expected) {
    if (!j.is_object() || !j.contains("scores") || !j["scores"].is_array())
        throw ReasonerUnavailable("reasoner reply missing 'scores' array");
    ReasonerReply reply;
    for (const auto& v : j["scores"]) {
        if (!v.is_number()) throw ReasonerUnavailable("reasoner reply has non-numeric score");
        const double x = v.get<double>();
        if (!std::isfinite(x)) throw ReasonerUnavailable("reasoner reply has non-finite score");
        reply.scores.push_back(x);
    }
    if (reply.scores.size() != expected)
        throw ReasonerUnavailable("reasoner reply length does not match candidate count");
    return reply;
}

} // namespace mobman
