#include <doctest.h>

#include "mobman/world.hpp"
#include "oracles.hpp"

using namespace mobman;

namespace {

WorldModel open_world(int w = 20, int h = 20) {
    WorldModel world;
    world.width = w;
    world.height = h;
    world.cell_size = 0.25;
    return world;
}

} // namespace

TEST_CASE("step_unicycle: zero command holds the pose") {
    const WorldModel world = open_world();
    const RobotPose p{1.0, 1.0, 0.3};
    const RobotPose q = step_unicycle(world, p, {0.0, 0.0}, 0.7);
    CHECK(q.x == p.x);
    CHECK(q.y == p.y);
    CHECK(q.heading == doctest::Approx(p.heading));
}

TEST_CASE("step_unicycle: pure forward and pure turn") {
    const WorldModel world = open_world();
    const RobotPose fwd = step_unicycle(world, {1.0, 1.0, 0.0}, {0.1, 0.0}, 1.0);
    CHECK(fwd.x == doctest::Approx(1.1).epsilon(1e-12));
    CHECK(fwd.y == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fwd.heading == doctest::Approx(0.0));

    const RobotPose turn = step_unicycle(world, {1.0, 1.0, 0.0}, {0.0, kPi / 12.0}, 1.0);
    CHECK(turn.x == doctest::Approx(1.0));
    CHECK(turn.y == doctest::Approx(1.0));
    CHECK(turn.heading == doctest::Approx(kPi / 12.0).epsilon(1e-12));
}

TEST_CASE("step_unicycle: v=0 never moves, omega=0 never turns") {
    const WorldModel world = open_world();
    Rng rng(21);
    for (int i = 0; i < 200; ++i) {
        const RobotPose p{rng.uniform(0.5, 4.5), rng.uniform(0.5, 4.5), rng.uniform(-kPi, kPi)};
        const double dt = rng.uniform(0.01, 1.0);
        const RobotPose spun = step_unicycle(world, p, {0.0, rng.uniform(-1, 1)}, dt);
        CHECK(spun.x == p.x);
        CHECK(spun.y == p.y);
        const RobotPose driven = step_unicycle(world, p, {rng.uniform(0, 0.2), 0.0}, dt);
        CHECK(driven.heading == doctest::Approx(p.heading));
    }
}

TEST_CASE("step_unicycle: wall blocks position but heading still updates") {
    WorldModel world = open_world();
    world.walls.insert({5, 4});  // cell ahead of the robot heading +x
    const RobotPose p{1.2, 1.125, 0.0};
    const RobotPose q = step_unicycle(world, p, {0.1, kPi / 12.0}, 1.0);
    CHECK(q.x == p.x);
    CHECK(q.y == p.y);
    CHECK(q.heading == doctest::Approx(kPi / 12.0));
}

TEST_CASE("step_unicycle: world boundary blocks like a wall") {
    const WorldModel world = open_world(4, 4);
    const RobotPose p{0.95, 0.5, 0.0};  // heading +x toward the boundary
    const RobotPose q = step_unicycle(world, p, {0.1, 0.0}, 1.0);
    CHECK(q.x == p.x);
}

TEST_CASE("observe: object ahead is visible, out-of-range or occluded is not") {
    WorldModel world = open_world();
    SemanticObject chair;
    chair.id = 0;
    chair.category = "chair";
    chair.position = {2.125, 1.125};
    world.objects.push_back(chair);
    const RobotPose pose{1.125, 1.125, 0.0};

    const Observation seen = observe(world, pose, {5.0, kPi / 2.0});
    REQUIRE(seen.visible_objects.size() == 1);
    CHECK(seen.visible_objects[0].id == 0);
    CHECK(seen.visible_objects[0].category == "chair");

    // A wall cell on the ray hides the object.
    WorldModel blocked = world;
    blocked.walls.insert(blocked.cell_of({1.625, 1.125}));
    CHECK(observe(blocked, pose, {5.0, kPi / 2.0}).visible_objects.empty());

    // Same geometry but a short sensor.
    CHECK(observe(world, pose, {0.5, kPi / 2.0}).visible_objects.empty());

    // Behind the robot, outside the half-FOV.
    const RobotPose facing_away{1.125, 1.125, kPi};
    CHECK(observe(world, facing_away, {5.0, kPi / 2.0}).visible_objects.empty());
}

TEST_CASE("observe: occlusion agrees with a direct Bresenham walk") {
    Rng rng(22);
    for (int trial = 0; trial < 50; ++trial) {
        WorldModel world = open_world(12, 12);
        for (int i = 0; i < 14; ++i)
            world.walls.insert({rng.uniform_int(0, 11), rng.uniform_int(0, 11)});
        const Cell oc{rng.uniform_int(0, 11), rng.uniform_int(0, 11)};
        const Cell rc{rng.uniform_int(0, 11), rng.uniform_int(0, 11)};
        if (!world.is_free(oc) || !world.is_free(rc)) continue;
        SemanticObject obj;
        obj.id = 0;
        obj.category = "box";
        obj.position = world.cell_center(oc);
        world.objects.push_back(obj);
        const Eigen::Vector2d rp = world.cell_center(rc);
        const Eigen::Vector2d d = obj.position - rp;
        const RobotPose pose{rp.x(), rp.y(), d.norm() < 1e-9 ? 0.0 : std::atan2(d.y(), d.x())};

        bool clear = true;
        for (const Cell& c : bresenham(rc, oc))
            if (world.is_wall(c)) clear = false;
        const bool in_range = d.norm() <= 5.0;

        const Observation obs = observe(world, pose, {5.0, kPi / 2.0});
        CHECK(obs.visible_objects.size() == ((clear && in_range) ? 1u : 0u));
    }
}

TEST_CASE("observe: free and occupied cell sets are disjoint; range is monotone") {
    Rng rng(23);
    for (int trial = 0; trial < 20; ++trial) {
        WorldModel world = open_world(15, 15);
        for (int i = 0; i < 25; ++i)
            world.walls.insert({rng.uniform_int(0, 14), rng.uniform_int(0, 14)});
        const Cell rc{rng.uniform_int(0, 14), rng.uniform_int(0, 14)};
        if (!world.is_free(rc)) continue;
        for (int i = 0; i < 3; ++i) {
            SemanticObject o;
            o.id = i;
            o.category = "box";
            const Cell c{rng.uniform_int(0, 14), rng.uniform_int(0, 14)};
            if (!world.is_free(c)) continue;
            o.position = world.cell_center(c);
            world.objects.push_back(o);
        }
        const Eigen::Vector2d rp = world.cell_center(rc);
        const RobotPose pose{rp.x(), rp.y(), rng.uniform(-kPi, kPi)};

        const Observation small = observe(world, pose, {2.0, kPi / 2.0});
        const Observation large = observe(world, pose, {5.0, kPi / 2.0});
        for (const Cell& c : small.free_cells) CHECK(small.occupied_cells.count(c) == 0);

        std::set<int> small_ids, large_ids;
        for (const auto& v : small.visible_objects) small_ids.insert(v.id);
        for (const auto& v : large.visible_objects) large_ids.insert(v.id);
        for (int id : small_ids) CHECK(large_ids.count(id) == 1);
    }
}

TEST_CASE("generate_world is deterministic and honors density zero") {
    const GenParams params;
    const WorldModel a = generate_world(7, params);
    const WorldModel b = generate_world(7, params);
    CHECK(a.walls == b.walls);
    REQUIRE(a.objects.size() == b.objects.size());
    for (std::size_t i = 0; i < a.objects.size(); ++i) {
        CHECK(a.objects[i].id == b.objects[i].id);
        CHECK(a.objects[i].category == b.objects[i].category);
        CHECK(a.objects[i].attributes == b.objects[i].attributes);
        CHECK(a.objects[i].position == b.objects[i].position);
    }

    GenParams open;
    open.wall_density = 0.0;
    CHECK(generate_world(1, open).walls.empty());
}

TEST_CASE("generate_world: every object is reachable from every free cell") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        GenParams params;
        params.n_objects = 10;
        params.wall_density = 0.12;
        const WorldModel w = generate_world(seed, params);
        // One free component implies mutual reachability; check via the
        // oracle from an arbitrary free cell to each object.
        Cell start{-1, -1};
        for (int y = 0; y < w.height && start.x < 0; ++y)
            for (int x = 0; x < w.width && start.x < 0; ++x)
                if (w.is_free({x, y})) start = {x, y};
        REQUIRE(start.x >= 0);
        for (const SemanticObject& o : w.objects)
            CHECK(oracles::dijkstra_shortest(w, start, w.cell_of(o.position)) >= 0.0);
    }
}

TEST_CASE("generate_world rejects bad parameters") {
    GenParams params;
    params.n_objects = 0;
    CHECK_THROWS_AS(generate_world(0, params), ScenarioInvalid);
    params.n_objects = 1;
    params.wall_density = 0.5;
    CHECK_THROWS_AS(generate_world(0, params), ScenarioInvalid);
}
