#include <doctest.h>

#include "mobman/navigator.hpp"
#include "generators.hpp"
#include "oracles.hpp"

using namespace mobman;

namespace {

// Reasoner that scores every candidate identically, so decode decisions are
// driven purely by the steering tiebreaker.
struct FlatReasoner : Reasoner {
    ReasonerReply rank_frontiers(const ReasonerQuery& q) override {
        return {std::vector<double>(q.frontiers.size(), 0.0)};
    }
    ReasonerReply estimate_improvement(const ReasonerQuery& q) override {
        return {std::vector<double>(q.actions.size(), 0.0)};
    }
};

WorldModel open_world(int w = 20, int h = 20) {
    WorldModel world;
    world.width = w;
    world.height = h;
    world.cell_size = 0.25;
    return world;
}

GoalSpec chair_goal() {
    return parse_goal(R"({"nodes":[{"id":0,"category":"chair","target":true}]})");
}

void add_object(WorldModel& w, int id, const std::string& cat, double x, double y) {
    SemanticObject o;
    o.id = id;
    o.category = cat;
    o.position = {x, y};
    w.objects.push_back(o);
}

} // namespace

TEST_CASE("stage_of: threshold examples") {
    NavConfig cfg;
    cfg.sigma1 = 0.3;
    cfg.sigma2 = 0.7;
    CHECK(stage_of(0.1, cfg, false) == Stage::Explore);
    CHECK(stage_of(0.5, cfg, false) == Stage::Align);
    CHECK(stage_of(0.9, cfg, false) == Stage::Verify);
    CHECK(stage_of(0.9, cfg, true) == Stage::Done);
    CHECK(stage_of(0.3, cfg, false) == Stage::Align);   // boundary: sigma1 inclusive
    CHECK(stage_of(0.7, cfg, false) == Stage::Verify);  // boundary: sigma2 inclusive
}

TEST_CASE("stage_of agrees with direct case analysis on random triples") {
    Rng rng(41);
    for (int i = 0; i < 1000; ++i) {
        const double s1 = rng.uniform(0.01, 0.98);
        const double s2 = rng.uniform(s1 + 1e-6, 1.0);
        NavConfig cfg;
        cfg.sigma1 = s1;
        cfg.sigma2 = s2;
        const double s = rng.uniform();
        const bool verified = rng.uniform() < 0.5;
        CHECK(stage_of(s, cfg, verified) == oracles::stage_case_analysis(s, s1, s2, verified));
    }
}

TEST_CASE("NavConfig validation") {
    NavConfig bad;
    bad.sigma1 = 0.8;
    bad.sigma2 = 0.3;
    CHECK_THROWS_AS(bad.validate(), ScenarioInvalid);
    NavConfig rate;
    rate.control_dt = 0.01;
    CHECK_THROWS_AS(rate.validate(), ScenarioInvalid);
    NavConfig ok;
    CHECK_NOTHROW(ok.validate());
    CHECK(ok.substeps_per_tick() == 50);
}

TEST_CASE("frontiers: fully known grid has none; known half exposes the boundary column") {
    OccupancyGrid full(6, 6);
    for (int y = 0; y < 6; ++y)
        for (int x = 0; x < 6; ++x) full.set({x, y}, CellState::Free);
    CHECK(frontiers(full).empty());

    OccupancyGrid half(6, 6);
    for (int y = 0; y < 6; ++y)
        for (int x = 0; x < 3; ++x) half.set({x, y}, CellState::Free);
    const std::vector<Cell> f = frontiers(half);
    REQUIRE(f.size() == 6);
    for (const Cell& c : f) CHECK(c.x == 2);
}

TEST_CASE("frontiers match the exhaustive scan on random grids") {
    Rng rng(42);
    for (int trial = 0; trial < 100; ++trial) {
        OccupancyGrid grid(12, 9);
        for (int y = 0; y < 9; ++y)
            for (int x = 0; x < 12; ++x) {
                const double u = rng.uniform();
                grid.set({x, y}, u < 0.4 ? CellState::Unknown
                                         : (u < 0.85 ? CellState::Free : CellState::Occupied));
            }
        CHECK(frontiers(grid) == oracles::frontier_scan(grid));
    }
}

TEST_CASE("action_to_velocity: the four fixed commands") {
    CHECK(action_to_velocity(DiscreteAction::MoveForward).v == 0.1);
    CHECK(action_to_velocity(DiscreteAction::MoveForward).omega == 0.0);
    CHECK(action_to_velocity(DiscreteAction::TurnLeft).v == 0.0);
    CHECK(action_to_velocity(DiscreteAction::TurnLeft).omega == kPi / 12.0);
    CHECK(action_to_velocity(DiscreteAction::TurnRight).omega == -kPi / 12.0);
    CHECK(action_to_velocity(DiscreteAction::Stop).v == 0.0);
    CHECK(action_to_velocity(DiscreteAction::Stop).omega == 0.0);
}

TEST_CASE("decode_action: stop rule fires in Verify within r_stop") {
    const WorldModel world = open_world();
    const GoalSpec goal = chair_goal();
    FlatReasoner flat;
    NavConfig cfg;

    NavState nav;
    nav.stage = Stage::Verify;
    nav.grid = OccupancyGrid(world.width, world.height);
    nav.projected_target = Eigen::Vector2d(1.3, 1.0);

    const RobotPose pose{1.0, 1.0, 0.0};  // 0.3 m from the projection
    CHECK(decode_action(nav, world, goal, decompose_goal(goal), pose, flat, cfg) ==
          DiscreteAction::Stop);

    // Same geometry in Align: no stop.
    nav.stage = Stage::Align;
    CHECK(decode_action(nav, world, goal, decompose_goal(goal), pose, flat, cfg) !=
          DiscreteAction::Stop);
}

TEST_CASE("decode_action: steering rules toward the projected target") {
    const WorldModel world = open_world();
    const GoalSpec goal = chair_goal();
    FlatReasoner flat;
    NavConfig cfg;

    NavState nav;
    nav.stage = Stage::Verify;
    nav.grid = OccupancyGrid(world.width, world.height);
    for (int y = 0; y < world.height; ++y)
        for (int x = 0; x < world.width; ++x) nav.grid.set({x, y}, CellState::Free);

    const RobotPose pose{1.0, 1.0, 0.0};
    nav.projected_target = Eigen::Vector2d(4.0, 1.0);  // dead ahead, 3 m
    CHECK(decode_action(nav, world, goal, decompose_goal(goal), pose, flat, cfg) ==
          DiscreteAction::MoveForward);

    nav.projected_target = Eigen::Vector2d(1.0, 4.0);  // bearing +90 degrees
    CHECK(decode_action(nav, world, goal, decompose_goal(goal), pose, flat, cfg) ==
          DiscreteAction::TurnLeft);

    nav.projected_target = Eigen::Vector2d(1.0, -2.0);  // bearing -90 degrees
    CHECK(decode_action(nav, world, goal, decompose_goal(goal), pose, flat, cfg) ==
          DiscreteAction::TurnRight);
}

TEST_CASE("decode_action: explore with no frontiers raises NoFrontiersLeft") {
    const WorldModel world = open_world(6, 6);
    const GoalSpec goal = chair_goal();
    FlatReasoner flat;
    NavConfig cfg;

    NavState nav;
    nav.stage = Stage::Explore;
    nav.grid = OccupancyGrid(6, 6);
    for (int y = 0; y < 6; ++y)
        for (int x = 0; x < 6; ++x) nav.grid.set({x, y}, CellState::Free);
    CHECK_THROWS_AS(
        decode_action(nav, world, goal, decompose_goal(goal), {1, 1, 0}, flat, cfg),
        NoFrontiersLeft);
}

TEST_CASE("run_episode: target one meter ahead succeeds with a short trace") {
    WorldModel world = open_world();
    add_object(world, 0, "chair", 2.625, 1.125);
    const GoalSpec goal = chair_goal();
    NavConfig cfg;
    cfg.max_steps = 100;
    MockReasoner mock(world, goal, {cfg.sensor, cfg.decision_dt, cfg.control_dt, cfg.d_merge});

    const EpisodeResult r = run_episode(world, {1.625, 1.125, 0.0}, goal, cfg, mock);
    CHECK(r.success);
    CHECK(r.stop_issued);
    CHECK(r.failure_reason.empty());
    CHECK(r.steps < 20);
    CHECK(r.spl > 0.0);
    CHECK(r.spl <= 1.0);
}

TEST_CASE("run_episode: absent goal category fails by frontier exhaustion") {
    WorldModel world = open_world(12, 12);
    add_object(world, 0, "table", 1.125, 1.125);
    const GoalSpec goal = parse_goal(R"({"nodes":[{"id":0,"category":"sofa","target":true}]})");
    NavConfig cfg;
    cfg.max_steps = 2000;
    MockReasoner mock(world, goal, {cfg.sensor, cfg.decision_dt, cfg.control_dt, cfg.d_merge});

    const EpisodeResult r = run_episode(world, {1.625, 1.125, 0.0}, goal, cfg, mock);
    CHECK_FALSE(r.success);
    CHECK(r.failure_reason == "no_frontiers");
    CHECK(r.shortest_path < 0.0);
    CHECK(r.spl == 0.0);
}

TEST_CASE("run_episode: zero step budget fails immediately") {
    WorldModel world = open_world();
    add_object(world, 0, "chair", 2.625, 1.125);
    const GoalSpec goal = chair_goal();
    NavConfig cfg;
    cfg.max_steps = 0;
    MockReasoner mock(world, goal, {cfg.sensor, cfg.decision_dt, cfg.control_dt, cfg.d_merge});
    const EpisodeResult r = run_episode(world, {1.625, 1.125, 0.0}, goal, cfg, mock);
    CHECK_FALSE(r.success);
    CHECK(r.steps == 0);
    CHECK(r.failure_reason == "max_steps");
}

TEST_CASE("run_episode invariants: commands, substeps, path length, stage order") {
    GenParams params;
    params.n_objects = 8;
    params.wall_density = 0.1;
    Rng rng(43);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const WorldModel world = generate_world(seed, params);
        const auto [goal, target_id] = generators::goal_from_world(world, rng);
        NavConfig cfg;
        cfg.max_steps = 300;
        MockReasoner mock(world, goal, {cfg.sensor, cfg.decision_dt, cfg.control_dt, cfg.d_merge});
        const RobotPose start = random_start_pose(world, seed);
        const EpisodeResult r = run_episode(world, start, goal, cfg, mock);

        // Every command is one of the four paper values, exactly.
        for (const CommandSample& c : r.cmd_trace) {
            const bool known = (c.v == 0.1 && c.omega == 0.0) ||
                               (c.v == 0.0 && c.omega == kPi / 12.0) ||
                               (c.v == 0.0 && c.omega == -kPi / 12.0) ||
                               (c.v == 0.0 && c.omega == 0.0);
            CHECK(known);
        }

        // Exactly 50 substeps per decision tick.
        CHECK(r.control_steps == 50 * r.steps);
        CHECK(r.pose_trace.size() == static_cast<std::size_t>(r.control_steps) + 1);

        // Path length equals the summed per-substep displacement.
        double recomputed = 0.0;
        for (std::size_t i = 1; i < r.pose_trace.size(); ++i) {
            const double dx = r.pose_trace[i].x - r.pose_trace[i - 1].x;
            const double dy = r.pose_trace[i].y - r.pose_trace[i - 1].y;
            recomputed += std::sqrt(dx * dx + dy * dy);
        }
        CHECK(std::abs(recomputed - r.path_length) < 1e-9);

        // Done entries require a Verified outcome at or before that tick.
        for (const StageSample& s : r.stage_trace) {
            if (s.stage == Stage::Done) {
                CHECK(r.first_verified_step >= 0);
                CHECK(s.step >= r.first_verified_step);
            }
        }

        // SPL is bounded and only positive on success.
        CHECK(r.spl >= 0.0);
        CHECK(r.spl <= 1.0);
        if (!r.success) CHECK(r.spl == 0.0);
    }
}

TEST_CASE("run_episode is deterministic") {
    GenParams params;
    params.n_objects = 8;
    params.wall_density = 0.1;
    const WorldModel world = generate_world(3, params);
    Rng rng(44);
    const auto [goal, target_id] = generators::goal_from_world(world, rng);
    NavConfig cfg;
    cfg.max_steps = 200;
    MockReasoner mock(world, goal, {cfg.sensor, cfg.decision_dt, cfg.control_dt, cfg.d_merge});
    const RobotPose start = random_start_pose(world, 3);

    const EpisodeResult a = run_episode(world, start, goal, cfg, mock);
    const EpisodeResult b = run_episode(world, start, goal, cfg, mock);
    CHECK(a.success == b.success);
    CHECK(a.steps == b.steps);
    CHECK(a.path_length == b.path_length);
    REQUIRE(a.pose_trace.size() == b.pose_trace.size());
    for (std::size_t i = 0; i < a.pose_trace.size(); ++i) {
        CHECK(a.pose_trace[i].x == b.pose_trace[i].x);
        CHECK(a.pose_trace[i].y == b.pose_trace[i].y);
        CHECK(a.pose_trace[i].heading == b.pose_trace[i].heading);
    }
}

TEST_CASE("run_episode rejects an invalid start pose") {
    WorldModel world = open_world();
    world.walls.insert({16, 16});
    add_object(world, 0, "chair", 2.625, 1.125);
    const GoalSpec goal = chair_goal();
    NavConfig cfg;
    MockReasoner mock(world, goal, {});
    const RobotPose inside_wall{4.125, 4.125, 0.0};
    CHECK_THROWS_AS(run_episode(world, inside_wall, goal, cfg, mock), ScenarioInvalid);
}
