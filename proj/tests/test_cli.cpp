#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mobman/io.hpp"

using namespace mobman;
namespace fs = std::filesystem;

namespace {

std::string cli() {
#ifdef MOBMAN_CLI_PATH
    return MOBMAN_CLI_PATH;
#else
    return "mobman";
#endif
}

int run(const std::string& args) {
    const std::string cmd = cli() + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("mobman_cli_" + tag);
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string s(const std::string& name) const { return (path / name).string(); }
};

// Trivial one-object scenario with the chair a meter ahead of the robot.
void write_trivial_scenario(const std::string& scenario_path, const std::string& goal_path) {
    Scenario sc;
    sc.world.width = 20;
    sc.world.height = 20;
    SemanticObject chair;
    chair.id = 0;
    chair.category = "chair";
    chair.attributes = {"black"};
    chair.position = {2.625, 1.125};
    sc.world.objects.push_back(chair);
    sc.start = {1.625, 1.125, 0.0};
    save_scenario(scenario_path, sc);
    std::ofstream(goal_path)
        << R"({"nodes":[{"id":0,"category":"chair","attributes":["black"],"target":true}]})";
}

} // namespace

TEST_CASE("cli nav: trivial scenario records success through the mock reasoner") {
    TempDir dir("nav_smoke");
    write_trivial_scenario(dir.s("scenario.json"), dir.s("goal.json"));
    const int code = run("nav --scenario " + dir.s("scenario.json") + " --goal " +
                         dir.s("goal.json") + " --out " + dir.s("out"));
    CHECK(code == 0);
    const std::string metrics = slurp(dir.path / "out" / "metrics.jsonl");
    CHECK(metrics.find("\"success\":true") != std::string::npos);
    CHECK(fs::exists(dir.path / "out" / "run_meta.json"));
}

TEST_CASE("cli nav: missing or malformed inputs exit 2") {
    TempDir dir("nav_bad");
    write_trivial_scenario(dir.s("scenario.json"), dir.s("goal.json"));
    CHECK(run("nav --scenario " + dir.s("scenario.json") + " --goal " + dir.s("nope.json") +
              " --out " + dir.s("out")) == 2);
    std::ofstream(dir.s("broken.json")) << "{ not json";
    CHECK(run("nav --scenario " + dir.s("broken.json") + " --goal " + dir.s("goal.json") +
              " --out " + dir.s("out")) == 2);
}

TEST_CASE("cli nav: unreachable reasoner exits 3, fallback rescues it") {
    TempDir dir("nav_reasoner");
    write_trivial_scenario(dir.s("scenario.json"), dir.s("goal.json"));
    CHECK(run("nav --scenario " + dir.s("scenario.json") + " --goal " + dir.s("goal.json") +
              " --reasoner-url http://127.0.0.1:1 --out " + dir.s("out")) == 3);
    CHECK(run("nav --scenario " + dir.s("scenario.json") + " --goal " + dir.s("goal.json") +
              " --reasoner-url http://127.0.0.1:1 --reasoner-fallback --out " +
              dir.s("out2")) == 0);
    CHECK(slurp(dir.path / "out2" / "metrics.jsonl").find("\"success\":true") !=
          std::string::npos);
}

TEST_CASE("cli nav: parallel jobs produce the same metrics as serial") {
    TempDir dir("nav_jobs");
    CHECK(run("gen-world --seed 4 --out " + dir.s("scenario.json") + " --goal-out " +
              dir.s("goal.json")) == 0);
    CHECK(run("nav --scenario " + dir.s("scenario.json") + " --goal " + dir.s("goal.json") +
              " --episodes 4 --seed 11 --out " + dir.s("serial")) == 0);
    CHECK(run("nav --scenario " + dir.s("scenario.json") + " --goal " + dir.s("goal.json") +
              " --episodes 4 --seed 11 --jobs 4 --out " + dir.s("parallel")) == 0);
    CHECK(slurp(dir.path / "serial" / "metrics.jsonl") ==
          slurp(dir.path / "parallel" / "metrics.jsonl"));
}

TEST_CASE("cli handover: malformed CSV exits 2, good input writes the outputs") {
    TempDir dir("handover");
    std::ofstream(dir.s("bad.csv")) << "t,px\n0,1\n";
    save_calibration(dir.s("calib.json"), HandCalibration{});
    CHECK(run("handover --hand " + dir.s("bad.csv") + " --calib " + dir.s("calib.json") +
              " --out " + dir.s("out")) == 2);

    HandTrajectory hand;
    for (int i = 0; i <= 30; ++i)
        hand.samples.push_back({i * 0.1, SE3Pose(Eigen::Vector3d(0.3 + 0.002 * i, 0, 0.5),
                                                 Eigen::Quaterniond::Identity())});
    save_hand_csv(dir.s("hand.csv"), hand);
    CHECK(run("handover --hand " + dir.s("hand.csv") + " --calib " + dir.s("calib.json") +
              " --rate 50 --out " + dir.s("out2")) == 0);
    CHECK(fs::exists(dir.path / "out2" / "tcp_trajectory.csv"));
    CHECK(fs::exists(dir.path / "out2" / "keyframes.json"));
}

TEST_CASE("cli handover: two-pause recording yields keyframes at the pauses") {
    TempDir dir("handover_pauses");
    // 30 Hz recording: move, hold for half a second, move, hold, move.
    HandTrajectory hand;
    const auto segment = [&hand](double t0, double t1, Eigen::Vector3d from, Eigen::Vector3d to) {
        const int n = static_cast<int>(std::lround((t1 - t0) * 30.0));
        for (int i = 0; i < n; ++i) {
            const double u = static_cast<double>(i) / n;
            hand.samples.push_back({t0 + (t1 - t0) * u,
                                    SE3Pose(from + (to - from) * u,
                                            Eigen::Quaterniond::Identity())});
        }
    };
    segment(0.0, 1.0, {0.25, 0.0, 0.45}, {0.35, 0.1, 0.55});
    segment(1.0, 1.5, {0.35, 0.1, 0.55}, {0.35, 0.1, 0.55});
    segment(1.5, 3.0, {0.35, 0.1, 0.55}, {0.30, -0.15, 0.50});
    segment(3.0, 3.5, {0.30, -0.15, 0.50}, {0.30, -0.15, 0.50});
    segment(3.5, 4.0, {0.30, -0.15, 0.50}, {0.28, -0.10, 0.52});
    hand.samples.push_back({4.0, SE3Pose(Eigen::Vector3d(0.28, -0.10, 0.52),
                                         Eigen::Quaterniond::Identity())});
    save_hand_csv(dir.s("hand.csv"), hand);
    save_calibration(dir.s("calib.json"), HandCalibration{});

    CHECK(run("handover --hand " + dir.s("hand.csv") + " --calib " + dir.s("calib.json") +
              " --out " + dir.s("out")) == 0);
    const auto report = nlohmann::json::parse(slurp(dir.path / "out" / "keyframes.json"));
    bool pause1 = false, pause2 = false;
    for (const auto& t : report["times"]) {
        const double v = t.get<double>();
        if (v >= 0.9 && v <= 1.6) pause1 = true;
        if (v >= 2.9 && v <= 3.6) pause2 = true;
    }
    CHECK(pause1);
    CHECK(pause2);
}

TEST_CASE("cli track: a 30 Hz trajectory exits 4") {
    TempDir dir("track_rate");
    save_chain(dir.s("chain.json"), make_arm_chain());
    std::string csv = "# rate=30\nt,px,py,pz,qw,qx,qy,qz\n";
    for (int i = 0; i < 31; ++i)
        csv += detail::fmt_double(i / 30.0) + ",0.3,0,0.5,1,0,0,0\n";
    std::ofstream(dir.s("tcp30.csv")) << csv;
    CHECK(run("track --chain " + dir.s("chain.json") + " --tcp " + dir.s("tcp30.csv") +
              " --out " + dir.s("out")) == 4);
}

TEST_CASE("cli gen-world: deterministic scenario generation") {
    TempDir dir("gen");
    CHECK(run("gen-world --seed 21 --objects 9 --wall-density 0.12 --out " + dir.s("a.json")) ==
          0);
    CHECK(run("gen-world --seed 21 --objects 9 --wall-density 0.12 --out " + dir.s("b.json")) ==
          0);
    CHECK(slurp(dir.path / "a.json") == slurp(dir.path / "b.json"));
    const Scenario sc = load_scenario(dir.s("a.json"));
    CHECK(sc.world.objects.size() == 9);
}
