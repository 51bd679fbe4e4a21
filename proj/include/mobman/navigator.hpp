#pragma once
//
// Three-stage goal-conditioned navigation: threshold stage machine,
// frontier extraction, discrete action decoding against the reasoner, and
// the fixed-rate episode loop with metrics.
//

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "mobman/actions.hpp"
#include "mobman/errors.hpp"
#include "mobman/grid.hpp"
#include "mobman/reasoner.hpp"
#include "mobman/scenegraph.hpp"
#include "mobman/world.hpp"

namespace mobman {

enum class Stage { Explore = 0, Align = 1, Verify = 2, Done = 3 };

inline const char* to_string(Stage s) {
    switch (s) {
        case Stage::Explore: return "explore";
        case Stage::Align: return "align";
        case Stage::Verify: return "verify";
        case Stage::Done: return "done";
    }
    return "explore";
}

struct NavConfig {
    double sigma1 = 0.3;
    double sigma2 = 0.7;
    double decision_dt = 1.0;
    double control_dt = 0.02;  // contract: exactly 50 Hz
    double r_stop = 0.5;
    int max_steps = 500;       // decision ticks
    double d_merge = 0.5;
    double d_near = 1.5;
    double r_verify = 2.0;
    int staleness_steps = 20;
    SensorParams sensor;

    void validate() const {
        if (!(0.0 < sigma1 && sigma1 < sigma2 && sigma2 <= 1.0))
            throw ScenarioInvalid("nav config requires 0 < sigma1 < sigma2 <= 1");
        if (control_dt != 0.02)
            throw ScenarioInvalid("nav config requires control_dt = 0.02 exactly");
        if (decision_dt <= 0.0 || max_steps < 0)
            throw ScenarioInvalid("nav config requires decision_dt > 0 and max_steps >= 0");
    }

    int substeps_per_tick() const {
        return static_cast<int>(std::llround(decision_dt / control_dt));
    }
};

// Threshold case analysis; verification can only promote out of Verify.
inline Stage stage_of(double score, const NavConfig& cfg, bool verified) {
    if (score < cfg.sigma1) return Stage::Explore;
    if (score < cfg.sigma2) return Stage::Align;
    return verified ? Stage::Done : Stage::Verify;
}

// Known-free cells with at least one unknown 4-neighbor, row-major order.
inline std::vector<Cell> frontiers(const OccupancyGrid& grid) {
    std::vector<Cell> out;
    for (int y = 0; y < grid.height(); ++y) {
        for (int x = 0; x < grid.width(); ++x) {
            const Cell c{x, y};
            if (grid.at(c) != CellState::Free) continue;
            const Cell nbs[4] = {{x + 1, y}, {x - 1, y}, {x, y + 1}, {x, y - 1}};
            for (const Cell& nb : nbs) {
                if (grid.in_bounds(nb) && grid.at(nb) == CellState::Unknown) {
                    out.push_back(c);
                    break;
                }
            }
        }
    }
    return out;
}

// Everything the decoder needs about the episode's current belief.
struct NavState {
    Stage stage = Stage::Explore;
    OccupancyGrid grid;
    SemanticGraph scene;
    double score = 0.0;
    std::optional<Eigen::Vector2d> projected_target;
};

namespace detail {

// Heading-error steering toward a world point: forward within pi/12 of the
// bearing, otherwise turn toward it.
inline DiscreteAction steer_toward(const RobotPose& pose, const Eigen::Vector2d& target) {
    const Eigen::Vector2d d = target - pose.xy();
    if (d.norm() < 1e-9) return DiscreteAction::MoveForward;
    const double err = wrap_angle(std::atan2(d.y(), d.x()) - pose.heading);
    if (std::abs(err) <= kPi / 12.0) return DiscreteAction::MoveForward;
    return err > 0.0 ? DiscreteAction::TurnLeft : DiscreteAction::TurnRight;
}

// No known-occupied cell on the line, diagonal corner squeezes included.
inline bool grid_los(const OccupancyGrid& grid, Cell from, Cell to) {
    const auto blocked = [&grid](Cell c) {
        return grid.in_bounds(c) && grid.at(c) == CellState::Occupied;
    };
    const std::vector<Cell> line = bresenham(from, to);
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (blocked(line[i])) return false;
        if (i > 0 && line[i].x != line[i - 1].x && line[i].y != line[i - 1].y &&
            (blocked({line[i - 1].x, line[i].y}) || blocked({line[i].x, line[i - 1].y})))
            return false;
    }
    return true;
}

// Steer straight at the target when the known grid shows a clear line;
// otherwise plan optimistically (unknown passable) and head for the first
// path cell. Direct bearing is the last resort when no grid path exists.
inline DiscreteAction steer_via_grid(const WorldModel& world, const OccupancyGrid& grid,
                                     const RobotPose& pose, const Eigen::Vector2d& target) {
    const Cell start = world.cell_of(pose.xy());
    const Cell goal = world.cell_of(target);
    if (start == goal || grid_los(grid, start, goal)) return steer_toward(pose, target);
    const auto passable = [&grid](Cell c) { return grid.at(c) != CellState::Occupied; };
    const auto path = astar(grid.width(), grid.height(), passable, start, goal);
    if (!path || path->size() < 2) return steer_toward(pose, target);
    return steer_toward(pose, world.cell_center((*path)[1]));
}

} // namespace detail

// Tiebreak weight for the improvement argmax. Score increments are rational
// with denominator 2*|Vg|*|Eg|, so anything below 1/(2*50*50) never
// overrides a genuine improvement difference for goal graphs of sane size.
inline constexpr double kPathTiebreak = 1e-4;

namespace detail {

// Every cell within `radius` of the point has been sensed.
inline bool area_known(const OccupancyGrid& grid, const WorldModel& world,
                       const Eigen::Vector2d& point, double radius) {
    const Cell center = world.cell_of(point);
    const int reach = static_cast<int>(std::ceil(radius / world.cell_size));
    for (int dy = -reach; dy <= reach; ++dy)
        for (int dx = -reach; dx <= reach; ++dx) {
            const Cell c{center.x + dx, center.y + dy};
            if (!grid.in_bounds(c)) continue;
            if ((world.cell_center(c) - point).norm() > radius) continue;
            if (grid.at(c) == CellState::Unknown) return false;
        }
    return true;
}

inline DiscreteAction explore_decode(const NavState& nav, const WorldModel& world,
                                     const std::vector<SubGoal>& subgoals, const RobotPose& pose,
                                     Reasoner& reasoner, const SensorParams& sensor) {
    std::vector<Cell> fronts = frontiers(nav.grid);
    if (fronts.empty()) throw NoFrontiersLeft("decode_action: frontier list exhausted");

    // Look before leaving: when a glance would clear a nearby frontier's
    // unknown neighbor (in range, clear line, currently outside the FOV),
    // turn toward it. Turning costs no path and each successful glance
    // removes its frontier, so the rule cannot loop.
    const Cell robot_cell_early = world.cell_of(pose.xy());
    const Cell* best_front = nullptr;
    Eigen::Vector2d best_view{0, 0};
    double best_dist = std::numeric_limits<double>::infinity();
    for (const Cell& f : fronts) {
        const Cell nbs[4] = {{f.x, f.y + 1}, {f.x + 1, f.y}, {f.x, f.y - 1}, {f.x - 1, f.y}};
        for (const Cell& u : nbs) {
            if (!nav.grid.in_bounds(u) || nav.grid.at(u) != CellState::Unknown) continue;
            const Eigen::Vector2d view = world.cell_center(u);
            const double d = (view - pose.xy()).norm();
            if (d > sensor.range || d >= best_dist) continue;
            const double err = wrap_angle(std::atan2(view.y() - pose.y, view.x() - pose.x) -
                                          pose.heading);
            if (std::abs(err) <= 0.5 * sensor.fov) continue;  // already in view
            if (!grid_los(nav.grid, robot_cell_early, u)) continue;
            best_dist = d;
            best_view = view;
            best_front = &f;
        }
    }
    if (best_front != nullptr) {
        const double err = wrap_angle(
            std::atan2(best_view.y() - pose.y, best_view.x() - pose.x) - pose.heading);
        return err > 0.0 ? DiscreteAction::TurnLeft : DiscreteAction::TurnRight;
    }

    ReasonerQuery query;
    query.kind = QueryKind::RankFrontiers;
    query.scene = nav.scene;
    query.subgoals = subgoals;
    query.frontiers = fronts;
    query.pose = pose;
    const ReasonerReply reply = reasoner.rank_frontiers(query);
    if (reply.scores.size() != fronts.size())
        throw ReasonerUnavailable("rank_frontiers reply length mismatch");

    // Candidates in descending score, stable within ties (row-major).
    std::vector<std::size_t> order(fronts.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&reply](std::size_t a, std::size_t b) {
        return reply.scores[a] > reply.scores[b];
    });

    const Cell robot_cell = world.cell_of(pose.xy());
    const auto passable = [&nav](Cell c) { return nav.grid.at(c) != CellState::Occupied; };
    for (std::size_t i : order) {
        const Cell f = fronts[i];
        if (f == robot_cell) return DiscreteAction::TurnLeft;  // scan in place
        if (grid_los(nav.grid, robot_cell, f))
            return steer_toward(pose, world.cell_center(f));
        const auto path = astar(nav.grid.width(), nav.grid.height(), passable, robot_cell, f);
        if (!path || path->size() < 2) continue;
        return steer_toward(pose, world.cell_center((*path)[1]));
    }
    throw NoFrontiersLeft("decode_action: no frontier reachable");
}

} // namespace detail

// Select the next discrete action.
//   Explore: head for the best-ranked frontier over the known grid.
//   Align/Verify/Done: score the four actions by expected matching-score
//   improvement, preferring the action that steers toward the projected
//   target as tiebreaker; Stop fires only in Verify/Done within r_stop.
//   An Align hypothesis that has been reached and offers no improvement is
//   exhausted, so the decoder resumes frontier exploration instead of
//   orbiting the projection.
inline DiscreteAction decode_action(const NavState& nav, const WorldModel& world,
                                    const GoalSpec& goal, const std::vector<SubGoal>& subgoals,
                                    const RobotPose& pose, Reasoner& reasoner,
                                    const NavConfig& cfg) {
    (void)goal;
    if (nav.stage == Stage::Explore || !nav.projected_target)
        return detail::explore_decode(nav, world, subgoals, pose, reasoner, cfg.sensor);

    const Eigen::Vector2d target = *nav.projected_target;
    const bool can_stop = nav.stage == Stage::Verify || nav.stage == Stage::Done;
    if (can_stop && (target - pose.xy()).norm() <= cfg.r_stop) return DiscreteAction::Stop;

    ReasonerQuery query;
    query.kind = QueryKind::EstimateImprovement;
    query.scene = nav.scene;
    query.subgoals = subgoals;
    query.actions = {DiscreteAction::MoveForward, DiscreteAction::TurnLeft,
                     DiscreteAction::TurnRight, DiscreteAction::Stop};
    query.pose = pose;
    const ReasonerReply reply = reasoner.estimate_improvement(query);
    if (reply.scores.size() != query.actions.size())
        throw ReasonerUnavailable("estimate_improvement reply length mismatch");

    const double best_improvement = *std::max_element(reply.scores.begin(), reply.scores.end());
    if (nav.stage == Stage::Align && best_improvement <= 0.0 &&
        detail::area_known(nav.grid, world, target, cfg.r_stop))
        return detail::explore_decode(nav, world, subgoals, pose, reasoner, cfg.sensor);

    const DiscreteAction steer = detail::steer_via_grid(world, nav.grid, pose, target);
    DiscreteAction best = DiscreteAction::MoveForward;
    double best_utility = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < 3; ++i) {  // Stop only via the proximity rule
        const DiscreteAction a = query.actions[i];
        const double utility = reply.scores[i] - (a == steer ? 0.0 : kPathTiebreak);
        if (utility > best_utility) {
            best_utility = utility;
            best = a;
        }
    }
    return best;
}

struct StageSample {
    int step = 0;
    Stage stage = Stage::Explore;
    double score = 0.0;
};

struct PoseSample {
    int step = 0;
    double t = 0.0;
    double x = 0.0;
    double y = 0.0;
    double heading = 0.0;
};

struct CommandSample {
    int step = 0;
    DiscreteAction action = DiscreteAction::Stop;
    double v = 0.0;
    double omega = 0.0;
};

struct EpisodeResult {
    bool success = false;
    int steps = 0;           // decision ticks executed
    int control_steps = 0;   // 50 per tick
    double path_length = 0.0;
    double spl = 0.0;
    double shortest_path = -1.0;   // meters; -1 when no target object exists
    bool stop_issued = false;
    int first_verified_step = -1;  // tick of the first Verified outcome, -1 if never
    std::string failure_reason;    // "", "no_frontiers", "max_steps", "stopped_off_target"
    std::vector<StageSample> stage_trace;
    std::vector<PoseSample> pose_trace;
    std::vector<CommandSample> cmd_trace;
};

namespace detail {

// World objects that satisfy the goal target's category + attribute spec.
inline std::vector<const SemanticObject*> true_targets(const WorldModel& world,
                                                       const GoalSpec& goal) {
    std::vector<const SemanticObject*> out;
    const GraphNode* t = goal.graph.find_node(goal.target_id);
    if (t == nullptr) return out;
    for (const SemanticObject& o : world.objects) {
        if (o.category != t->category) continue;
        const bool all = std::all_of(t->attributes.begin(), t->attributes.end(),
                                     [&o](const std::string& a) { return o.attributes.count(a) > 0; });
        if (all) out.push_back(&o);
    }
    return out;
}

inline double shortest_path_to_targets(const WorldModel& world, const RobotPose& start,
                                       const std::vector<const SemanticObject*>& targets) {
    double best = -1.0;
    const auto passable = [&world](Cell c) { return world.is_free(c); };
    const Cell s = world.cell_of(start.xy());
    for (const SemanticObject* o : targets) {
        const auto path = astar(world.width, world.height, passable, s, world.cell_of(o->position));
        if (!path) continue;
        const double len = path_cost(*path) * world.cell_size;
        if (best < 0.0 || len < best) best = len;
    }
    return best;
}

} // namespace detail

// Run one episode: observe, integrate, match, stage, align/verify, decode,
// then hold the command for a full decision tick at 50 Hz. Terminates on
// Stop, frontier exhaustion, or the step budget.
inline EpisodeResult run_episode(const WorldModel& world, const RobotPose& start,
                                 const GoalSpec& goal, const NavConfig& cfg,
                                 Reasoner& reasoner) {
    cfg.validate();
    if (!world.is_free(world.cell_of(start.xy())))
        throw ScenarioInvalid("run_episode: start pose is not on a free cell");

    EpisodeResult result;
    const std::vector<const SemanticObject*> targets = detail::true_targets(world, goal);
    result.shortest_path = detail::shortest_path_to_targets(world, start, targets);

    const std::vector<SubGoal> subgoals = decompose_goal(goal);
    VerifyParams vparams;
    vparams.r_verify = cfg.r_verify;
    vparams.staleness_steps = cfg.staleness_steps;
    vparams.sensor_range = cfg.sensor.range;
    vparams.d_merge = cfg.d_merge;

    NavState nav;
    nav.grid = OccupancyGrid(world.width, world.height);
    nav.scene.d_near = cfg.d_near;

    RobotPose pose = start;
    double t = 0.0;
    bool verified = false;
    const int substeps = cfg.substeps_per_tick();
    result.pose_trace.push_back({0, t, pose.x, pose.y, pose.heading});
    result.failure_reason = "max_steps";

    for (int step = 0; step < cfg.max_steps; ++step) {
        const Observation obs = observe(world, pose, cfg.sensor, t);
        for (const Cell& c : obs.free_cells) nav.grid.set(c, CellState::Free);
        for (const Cell& c : obs.occupied_cells) nav.grid.set(c, CellState::Occupied);
        nav.scene = integrate_observation(nav.scene, obs, step, cfg.d_merge);

        MatchResult match = match_score(nav.scene, goal.graph);
        nav.stage = stage_of(match.score, cfg, verified);

        if (nav.stage == Stage::Verify || nav.stage == Stage::Done) {
            const VerifyOutcome outcome =
                verify_and_correct(nav.scene, goal, match, obs, pose, vparams);
            if (outcome.status == VerifyStatus::Corrected) {
                nav.scene = *outcome.corrected;
                match = match_score(nav.scene, goal.graph);
                nav.stage = stage_of(match.score, cfg, verified);
            } else if (outcome.status == VerifyStatus::Verified) {
                if (!verified) result.first_verified_step = step;
                verified = true;
                nav.stage = stage_of(match.score, cfg, verified);
            }
        }

        nav.score = match.score;
        nav.projected_target.reset();
        if (nav.stage != Stage::Explore) {
            try {
                nav.projected_target = align(nav.scene, goal, match).projected_target;
            } catch (const NoCorrespondences&) {
                // fall through: decoder treats a missing projection as exploration
            }
        }
        if (nav.projected_target) {
            // Several scene nodes may realize the goal target equally well;
            // approach the nearest one instead of an arbitrary assignment.
            const GraphNode* target_goal = goal.graph.find_node(goal.target_id);
            double best_d = std::numeric_limits<double>::infinity();
            for (const GraphNode& n : nav.scene.nodes) {
                if (!n.position || target_goal == nullptr) continue;
                if (!node_matches(*target_goal, n)) continue;
                const double d = (*n.position - pose.xy()).norm();
                if (d >= best_d) continue;
                if (match_score_forced(nav.scene, goal.graph, goal.target_id, n.id) >=
                    match.score - 1e-12) {
                    best_d = d;
                    nav.projected_target = *n.position;
                }
            }
        }
        result.stage_trace.push_back({step, nav.stage, match.score});

        DiscreteAction action;
        try {
            action = decode_action(nav, world, goal, subgoals, pose, reasoner, cfg);
        } catch (const NoFrontiersLeft&) {
            result.failure_reason = "no_frontiers";
            break;
        }

        const VelocityCommand cmd = action_to_velocity(action);
        result.cmd_trace.push_back({step, action, cmd.v, cmd.omega});
        for (int k = 0; k < substeps; ++k) {
            const RobotPose next = step_unicycle(world, pose, cmd, cfg.control_dt);
            result.path_length += (next.xy() - pose.xy()).norm();
            pose = next;
            t += cfg.control_dt;
            ++result.control_steps;
            result.pose_trace.push_back({step, t, pose.x, pose.y, pose.heading});
        }
        result.steps = step + 1;

        if (action == DiscreteAction::Stop) {
            result.stop_issued = true;
            break;
        }
    }

    if (result.stop_issued) {
        for (const SemanticObject* o : targets) {
            if ((o->position - pose.xy()).norm() <= cfg.r_stop) {
                result.success = true;
                break;
            }
        }
        result.failure_reason = result.success ? "" : "stopped_off_target";
    }

    if (result.success) {
        const double shortest = std::max(result.shortest_path, 0.0);
        result.spl = result.path_length <= shortest
                         ? 1.0
                         : shortest / std::max(result.path_length, 1e-12);
    }
    return result;
}

} // namespace mobman
