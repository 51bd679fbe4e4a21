#pragma once
//
// Semantic graphs over observed objects: incremental construction from
// observations, goal parsing and decomposition, the matching score driving
// the stage machine, anchor-based alignment, and verification/correction.
//

#include <Eigen/Core>

#include <algorithm>
#include <cctype>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mobman/errors.hpp"
#include "mobman/geometry.hpp"
#include "mobman/world.hpp"

namespace mobman {

struct GraphNode {
    int id = 0;
    std::string category;
    std::set<std::string> attributes;
    std::optional<Eigen::Vector2d> position;  // meters; scene nodes always carry one
    int last_seen = -1;                       // step index
    std::set<std::string> negative_labels;    // claims contradicted by re-observation
    int obs_count = 0;
};

struct GraphEdge {
    int a = 0;  // node ids, a < b
    int b = 0;
    std::string relation = "near";
    friend bool operator==(const GraphEdge&, const GraphEdge&) = default;
};

struct SemanticGraph {
    std::vector<GraphNode> nodes;
    std::vector<GraphEdge> edges;
    double d_near = 1.5;  // meters; "near" edge iff node distance < d_near

    const GraphNode* find_node(int id) const {
        for (const GraphNode& n : nodes)
            if (n.id == id) return &n;
        return nullptr;
    }

    bool has_edge(int a, int b) const {
        if (a > b) std::swap(a, b);
        for (const GraphEdge& e : edges)
            if (e.a == a && e.b == b) return true;
        return false;
    }
};

struct MatchResult {
    double score = 0.0;                                // in [0, 1]
    std::vector<std::pair<int, int>> node_assignment;  // (goal node id, scene node id)
    int matched_edges = 0;
};

struct SubGoal {
    int goal_node_id = 0;
    std::string category;
    std::set<std::string> attributes;
    std::vector<int> related_nodes;  // neighbors through "near" edges
};

struct GoalSpec {
    SemanticGraph graph;
    int target_id = 0;
};

// Goal node i can be realized by scene node j: categories equal, required
// attributes present, and nothing required has been contradicted.
inline bool node_matches(const GraphNode& goal, const GraphNode& scene) {
    if (goal.category != scene.category) return false;
    if (scene.negative_labels.count(goal.category)) return false;
    for (const std::string& a : goal.attributes) {
        if (!scene.attributes.count(a)) return false;
        if (scene.negative_labels.count(a)) return false;
    }
    return true;
}

namespace detail {

inline void upsert_near_edges(SemanticGraph& g, const std::vector<std::size_t>& touched) {
    for (std::size_t i : touched) {
        GraphNode& u = g.nodes[i];
        if (!u.position) continue;
        for (std::size_t j = 0; j < g.nodes.size(); ++j) {
            if (j == i) continue;
            GraphNode& v = g.nodes[j];
            if (!v.position) continue;
            const bool near = ((*u.position) - (*v.position)).norm() < g.d_near;
            int a = u.id, b = v.id;
            if (a > b) std::swap(a, b);
            const auto it = std::find_if(g.edges.begin(), g.edges.end(), [&](const GraphEdge& e) {
                return e.a == a && e.b == b;
            });
            if (near && it == g.edges.end()) g.edges.push_back({a, b, "near"});
            if (!near && it != g.edges.end()) g.edges.erase(it);
        }
    }
    std::sort(g.edges.begin(), g.edges.end(), [](const GraphEdge& x, const GraphEdge& y) {
        return std::tie(x.a, x.b) < std::tie(y.a, y.b);
    });
}

} // namespace detail

// Merge each visible object into the nearest same-category node within
// d_merge (running-mean position, attribute union) or append a new node,
// then recompute "near" edges for every touched node.
inline SemanticGraph integrate_observation(const SemanticGraph& g, const Observation& obs,
                                           int step, double d_merge = 0.5) {
    SemanticGraph out = g;
    std::vector<std::size_t> touched;
    for (const VisibleObject& vo : obs.visible_objects) {
        std::size_t best = out.nodes.size();
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < out.nodes.size(); ++i) {
            const GraphNode& n = out.nodes[i];
            if (n.category != vo.category || !n.position) continue;
            const double d = ((*n.position) - vo.position).norm();
            if (d < best_d) {
                best_d = d;
                best = i;
            }
        }
        if (best < out.nodes.size() && best_d <= d_merge) {
            GraphNode& n = out.nodes[best];
            n.position = ((*n.position) * n.obs_count + vo.position) / (n.obs_count + 1);
            n.obs_count += 1;
            n.last_seen = step;
            n.attributes.insert(vo.attributes.begin(), vo.attributes.end());
            touched.push_back(best);
        } else {
            GraphNode n;
            n.id = 0;
            for (const GraphNode& existing : out.nodes) n.id = std::max(n.id, existing.id + 1);
            n.category = vo.category;
            n.attributes = vo.attributes;
            n.position = vo.position;
            n.last_seen = step;
            n.obs_count = 1;
            out.nodes.push_back(n);
            touched.push_back(out.nodes.size() - 1);
        }
    }
    detail::upsert_near_edges(out, touched);
    return out;
}

namespace detail {

inline std::string lowercase(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

inline void reject_unknown_keys(const nlohmann::json& j, const std::set<std::string>& allowed,
                                const char* where) {
    for (const auto& [key, value] : j.items()) {
        if (!allowed.count(key))
            throw MalformedGoalSpec(std::string("goal spec: unknown key '") + key + "' in " + where);
    }
}

} // namespace detail

// Parse the goal file format: {nodes:[{id,category,attributes[],position?,
// target?}], edges:[[id,id]]}. Exactly one node must be flagged target.
inline GoalSpec parse_goal(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw MalformedGoalSpec(std::string("goal spec: invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw MalformedGoalSpec("goal spec: root must be an object");
    detail::reject_unknown_keys(j, {"nodes", "edges"}, "root");
    if (!j.contains("nodes") || !j["nodes"].is_array() || j["nodes"].empty())
        throw MalformedGoalSpec("goal spec: 'nodes' must be a non-empty array");

    GoalSpec out;
    out.graph.d_near = 1.5;
    std::set<int> ids;
    std::vector<int> targets;
    for (const auto& jn : j["nodes"]) {
        if (!jn.is_object()) throw MalformedGoalSpec("goal spec: node must be an object");
        detail::reject_unknown_keys(jn, {"id", "category", "attributes", "position", "target"},
                                    "node");
        if (!jn.contains("id") || !jn["id"].is_number_integer())
            throw MalformedGoalSpec("goal spec: node requires integer 'id'");
        if (!jn.contains("category") || !jn["category"].is_string() ||
            jn["category"].get<std::string>().empty())
            throw MalformedGoalSpec("goal spec: node requires non-empty 'category'");
        GraphNode n;
        n.id = jn["id"].get<int>();
        if (!ids.insert(n.id).second)
            throw MalformedGoalSpec("goal spec: duplicate node id");
        n.category = detail::lowercase(jn["category"].get<std::string>());
        if (jn.contains("attributes")) {
            if (!jn["attributes"].is_array())
                throw MalformedGoalSpec("goal spec: 'attributes' must be an array");
            for (const auto& a : jn["attributes"]) {
                if (!a.is_string()) throw MalformedGoalSpec("goal spec: attribute must be a string");
                n.attributes.insert(detail::lowercase(a.get<std::string>()));
            }
        }
        if (jn.contains("position")) {
            if (!jn["position"].is_array() || jn["position"].size() != 2)
                throw MalformedGoalSpec("goal spec: 'position' must be [x, y]");
            n.position = Eigen::Vector2d(jn["position"][0].get<double>(),
                                         jn["position"][1].get<double>());
        }
        if (jn.contains("target") && jn["target"].get<bool>()) targets.push_back(n.id);
        out.graph.nodes.push_back(n);
    }
    if (targets.size() != 1)
        throw MalformedGoalSpec("goal spec: exactly one node must set target=true");
    out.target_id = targets[0];

    std::sort(out.graph.nodes.begin(), out.graph.nodes.end(),
              [](const GraphNode& a, const GraphNode& b) { return a.id < b.id; });

    if (j.contains("edges")) {
        if (!j["edges"].is_array()) throw MalformedGoalSpec("goal spec: 'edges' must be an array");
        for (const auto& je : j["edges"]) {
            if (!je.is_array() || je.size() != 2)
                throw MalformedGoalSpec("goal spec: edge must be [id, id]");
            int a = je[0].get<int>(), b = je[1].get<int>();
            if (a == b) throw MalformedGoalSpec("goal spec: self edge");
            if (!ids.count(a) || !ids.count(b))
                throw MalformedGoalSpec("goal spec: edge references unknown node");
            if (a > b) std::swap(a, b);
            if (!out.graph.has_edge(a, b)) out.graph.edges.push_back({a, b, "near"});
        }
        std::sort(out.graph.edges.begin(), out.graph.edges.end(),
                  [](const GraphEdge& x, const GraphEdge& y) {
                      return std::tie(x.a, x.b) < std::tie(y.a, y.b);
                  });
    }
    return out;
}

namespace detail {

// Exact search for the injective assignment maximizing
// 0.5 * matched/|Vg| + 0.5 * edges/|Eg| (node term alone when |Eg| = 0).
// Goal graphs are tiny, so branch and bound with a suffix bound is enough.
struct AssignmentSearch {
    const SemanticGraph& scene;
    const SemanticGraph& goal;
    int ng, ne;
    int forced_goal = -1;   // optional: this goal idx must take forced_scene
    int forced_scene = -1;
    std::vector<std::vector<int>> compat;   // goal idx -> compatible scene idxs
    std::vector<std::vector<int>> adj;      // goal idx -> earlier goal idxs sharing an edge
    std::vector<int> undecided_edges;       // suffix count per goal idx
    std::vector<int> current;               // goal idx -> scene idx or -1
    std::vector<bool> used;
    std::vector<int> best_assignment;
    double best_score = -1.0;
    int best_edges = 0;

    double blend(int matched, int edges) const {
        const double nq = static_cast<double>(matched) / ng;
        if (ne == 0) return nq;
        return 0.5 * nq + 0.5 * static_cast<double>(edges) / ne;
    }

    void run() {
        compat.assign(ng, {});
        for (int i = 0; i < ng; ++i)
            for (int s = 0; s < static_cast<int>(scene.nodes.size()); ++s)
                if (node_matches(goal.nodes[i], scene.nodes[s])) compat[i].push_back(s);
        if (forced_goal >= 0) {
            const bool ok = std::find(compat[forced_goal].begin(), compat[forced_goal].end(),
                                      forced_scene) != compat[forced_goal].end();
            compat[forced_goal] = ok ? std::vector<int>{forced_scene} : std::vector<int>{};
        }

        adj.assign(ng, {});
        undecided_edges.assign(ng + 1, 0);
        for (const GraphEdge& e : goal.edges) {
            int ia = -1, ib = -1;
            for (int i = 0; i < ng; ++i) {
                if (goal.nodes[i].id == e.a) ia = i;
                if (goal.nodes[i].id == e.b) ib = i;
            }
            const int lo = std::min(ia, ib), hi = std::max(ia, ib);
            adj[hi].push_back(lo);
            for (int i = 0; i <= hi; ++i) ++undecided_edges[i];
        }

        current.assign(ng, -1);
        used.assign(scene.nodes.size(), false);
        dfs(0, 0, 0);
    }

    void dfs(int i, int matched, int edges) {
        if (i == ng) {
            const double s = blend(matched, edges);
            if (s > best_score + 1e-15) {
                best_score = s;
                best_assignment = current;
                best_edges = edges;
            }
            return;
        }
        if (blend(matched + (ng - i), edges + undecided_edges[i]) <= best_score + 1e-15) return;

        for (int s : compat[i]) {
            if (used[s]) continue;
            int gained = 0;
            for (int j : adj[i]) {
                if (current[j] >= 0 &&
                    scene.has_edge(scene.nodes[current[j]].id, scene.nodes[s].id))
                    ++gained;
            }
            current[i] = s;
            used[s] = true;
            dfs(i + 1, matched + 1, edges + gained);
            used[s] = false;
            current[i] = -1;
        }
        if (i != forced_goal) dfs(i + 1, matched, edges);  // leave goal node i unmatched
    }
};

} // namespace detail

inline MatchResult match_score(const SemanticGraph& scene, const SemanticGraph& goal) {
    if (goal.nodes.empty()) throw EmptyGoalGraph("match_score: goal graph has no nodes");
    detail::AssignmentSearch search{scene, goal,
                                    static_cast<int>(goal.nodes.size()),
                                    static_cast<int>(goal.edges.size())};
    search.run();
    MatchResult out;
    out.score = std::max(0.0, search.best_score);
    out.matched_edges = search.best_edges;
    for (int i = 0; i < search.ng; ++i)
        if (search.best_assignment[i] >= 0)
            out.node_assignment.push_back(
                {goal.nodes[i].id, scene.nodes[search.best_assignment[i]].id});
    return out;
}

// Best achievable score when one goal node is pinned to one scene node.
// Returns a negative value when the pinning admits no assignment at all.
inline double match_score_forced(const SemanticGraph& scene, const SemanticGraph& goal,
                                 int goal_node_id, int scene_node_id) {
    if (goal.nodes.empty()) throw EmptyGoalGraph("match_score_forced: goal graph has no nodes");
    detail::AssignmentSearch search{scene, goal,
                                    static_cast<int>(goal.nodes.size()),
                                    static_cast<int>(goal.edges.size())};
    for (int i = 0; i < search.ng; ++i)
        if (goal.nodes[i].id == goal_node_id) search.forced_goal = i;
    for (int s = 0; s < static_cast<int>(scene.nodes.size()); ++s)
        if (scene.nodes[s].id == scene_node_id) search.forced_scene = s;
    if (search.forced_goal < 0 || search.forced_scene < 0) return -1.0;
    search.run();
    return search.best_score;
}

// One sub-goal per goal node; the designated target leads, the rest follow
// in node-id order.
inline std::vector<SubGoal> decompose_goal(const GoalSpec& goal) {
    std::vector<SubGoal> out;
    const auto make = [&goal](const GraphNode& n) {
        SubGoal sg;
        sg.goal_node_id = n.id;
        sg.category = n.category;
        sg.attributes = n.attributes;
        for (const GraphEdge& e : goal.graph.edges) {
            if (e.a == n.id) sg.related_nodes.push_back(e.b);
            if (e.b == n.id) sg.related_nodes.push_back(e.a);
        }
        std::sort(sg.related_nodes.begin(), sg.related_nodes.end());
        return sg;
    };
    for (const GraphNode& n : goal.graph.nodes)
        if (n.id == goal.target_id) out.push_back(make(n));
    for (const GraphNode& n : goal.graph.nodes)
        if (n.id != goal.target_id) out.push_back(make(n));
    return out;
}

struct AlignResult {
    Transform2D transform;
    Eigen::Vector2d projected_target{0.0, 0.0};
};

// Rigid alignment over (goal position, assigned scene position) anchor
// pairs. A directly matched target anchors the projection exactly; the
// fitted transform is only used to project an unmatched target.
inline AlignResult align(const SemanticGraph& scene, const GoalSpec& goal,
                         const MatchResult& match) {
    if (match.node_assignment.empty())
        throw NoCorrespondences("align: no assigned node pairs");

    std::vector<std::pair<Eigen::Vector2d, Eigen::Vector2d>> pairs;
    const GraphNode* target_scene = nullptr;
    for (const auto& [gid, sid] : match.node_assignment) {
        const GraphNode* gn = goal.graph.find_node(gid);
        const GraphNode* sn = scene.find_node(sid);
        if (gn == nullptr || sn == nullptr || !sn->position) continue;
        if (gid == goal.target_id) target_scene = sn;
        if (gn->position) pairs.push_back({*gn->position, *sn->position});
    }

    AlignResult out;
    if (!pairs.empty()) out.transform = rigid_align_2d(pairs).first;

    if (target_scene != nullptr) {
        out.projected_target = *target_scene->position;
        return out;
    }
    const GraphNode* target_goal = goal.graph.find_node(goal.target_id);
    if (pairs.empty() || target_goal == nullptr || !target_goal->position)
        throw NoCorrespondences("align: target unmatched and no positioned anchors");
    out.projected_target = out.transform.apply(*target_goal->position);
    return out;
}

enum class VerifyStatus { Verified, Corrected, Unverifiable };

struct VerifyOutcome {
    VerifyStatus status = VerifyStatus::Unverifiable;
    std::optional<SemanticGraph> corrected;  // set iff status == Corrected
};

struct VerifyParams {
    double r_verify = 2.0;       // meters
    int staleness_steps = 20;    // reserved; outcome logic keys off the live observation
    double sensor_range = 5.0;   // meters
    double d_merge = 0.5;        // meters, observation-to-node association radius
};

// Re-observe the scene node assigned to the goal target. Consistent labels
// near the robot verify the goal; a contradicted category or missing
// required attribute pushes the claim into negative_labels (Corrected); an
// unobservable target is Unverifiable.
inline VerifyOutcome verify_and_correct(const SemanticGraph& scene, const GoalSpec& goal,
                                        const MatchResult& match, const Observation& obs,
                                        const RobotPose& pose, const VerifyParams& params) {
    VerifyOutcome out;
    const GraphNode* node = nullptr;
    for (const auto& [gid, sid] : match.node_assignment)
        if (gid == goal.target_id) node = scene.find_node(sid);
    if (node == nullptr || !node->position) return out;

    const VisibleObject* seen = nullptr;
    double best_d = params.d_merge;
    for (const VisibleObject& vo : obs.visible_objects) {
        const double d = (vo.position - *node->position).norm();
        if (d <= best_d) {
            best_d = d;
            seen = &vo;
        }
    }
    if (seen == nullptr) return out;  // target's node not observable this step

    const GraphNode* target_goal = goal.graph.find_node(goal.target_id);
    std::set<std::string> contradicted;
    if (seen->category != node->category) contradicted.insert(node->category);
    if (target_goal != nullptr)
        for (const std::string& a : target_goal->attributes)
            if (!seen->attributes.count(a)) contradicted.insert(a);

    if (!contradicted.empty()) {
        SemanticGraph fixed = scene;
        for (GraphNode& n : fixed.nodes)
            if (n.id == node->id)
                n.negative_labels.insert(contradicted.begin(), contradicted.end());
        out.status = VerifyStatus::Corrected;
        out.corrected = std::move(fixed);
        return out;
    }

    const double robot_dist = (*node->position - pose.xy()).norm();
    if (robot_dist <= params.r_verify || robot_dist <= params.sensor_range) {
        out.status = VerifyStatus::Verified;
    }
    return out;
}

} // namespace mobman
