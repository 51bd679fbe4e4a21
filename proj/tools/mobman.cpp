//
// mobman CLI: goal-conditioned navigation episodes, hand-track trajectory
// generation, TCP tracking with the reference controller, and procedural
// world generation.
//
// Exit codes: 0 ok (task failure is still 0), 2 malformed input,
// 3 reasoner unavailable without fallback, 4 trajectory rate mismatch.
//

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <thread>
#include <vector>

#include "mobman/io.hpp"
#include "mobman/navigator.hpp"
#include "mobman/reasoner.hpp"
#include "mobman/version.hpp"
#include "mobman/wholebody.hpp"
#include "mobman/http_reasoner.hpp"

#include <CLI11.hpp>

namespace fs = std::filesystem;
using namespace mobman;

namespace {

// Tries the HTTP reasoner first and falls back to the mock per call.
class FallbackReasoner : public Reasoner {
public:
    FallbackReasoner(std::unique_ptr<Reasoner> primary, std::unique_ptr<Reasoner> fallback)
        : primary_(std::move(primary)), fallback_(std::move(fallback)) {}

    ReasonerReply rank_frontiers(const ReasonerQuery& q) override {
        try {
            return primary_->rank_frontiers(q);
        } catch (const ReasonerUnavailable&) {
            return fallback_->rank_frontiers(q);
        }
    }

    ReasonerReply estimate_improvement(const ReasonerQuery& q) override {
        try {
            return primary_->estimate_improvement(q);
        } catch (const ReasonerUnavailable&) {
            return fallback_->estimate_improvement(q);
        }
    }

private:
    std::unique_ptr<Reasoner> primary_;
    std::unique_ptr<Reasoner> fallback_;
};

struct NavOptions {
    std::string scenario_file;
    std::string goal_file;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    int episodes = 1;
    int jobs = 1;
    bool traces = false;
    std::string reasoner_url;
    bool reasoner_fallback = false;
    NavConfig cfg;
};

nlohmann::json nav_config_json(const NavOptions& opt) {
    nlohmann::json j;
    j["sigma1"] = opt.cfg.sigma1;
    j["sigma2"] = opt.cfg.sigma2;
    j["decision_dt"] = opt.cfg.decision_dt;
    j["control_dt"] = opt.cfg.control_dt;
    j["r_stop"] = opt.cfg.r_stop;
    j["max_steps"] = opt.cfg.max_steps;
    j["d_merge"] = opt.cfg.d_merge;
    j["d_near"] = opt.cfg.d_near;
    j["r_verify"] = opt.cfg.r_verify;
    j["sensor_range"] = opt.cfg.sensor.range;
    j["sensor_fov"] = opt.cfg.sensor.fov;
    j["episodes"] = opt.episodes;
    j["seed"] = opt.seed;
    j["jobs"] = opt.jobs;
    j["reasoner_url"] = opt.reasoner_url;
    j["reasoner_fallback"] = opt.reasoner_fallback;
    return j;
}

void write_meta(const fs::path& out_dir, const std::string& command, nlohmann::json config) {
    nlohmann::json meta;
    meta["command"] = command;
    meta["version"] = kVersion;
    meta["config"] = std::move(config);
    detail::write_file((out_dir / "run_meta.json").string(), meta.dump(2) + "\n");
}

std::unique_ptr<Reasoner> make_reasoner(const NavOptions& opt, const WorldModel& world,
                                        const GoalSpec& goal) {
    MockReasonerConfig mock_cfg{opt.cfg.sensor, opt.cfg.decision_dt, opt.cfg.control_dt,
                                opt.cfg.d_merge};
    auto mock = std::make_unique<MockReasoner>(world, goal, mock_cfg);
    if (opt.reasoner_url.empty()) return mock;
    auto http = std::make_unique<HttpReasoner>(opt.reasoner_url);
    if (opt.reasoner_fallback)
        return std::make_unique<FallbackReasoner>(std::move(http), std::move(mock));
    return http;
}

int cmd_nav(const NavOptions& opt) {
    const Scenario scenario = load_scenario(opt.scenario_file);
    const GoalSpec goal = load_goal(opt.goal_file);

    NavOptions resolved = opt;
    resolved.cfg.sensor = scenario.sensor;
    resolved.cfg.validate();

    fs::create_directories(resolved.out_dir);
    nlohmann::json config = nav_config_json(resolved);
    config["scenario"] = resolved.scenario_file;
    config["goal"] = resolved.goal_file;
    write_meta(resolved.out_dir, "nav", config);

    std::vector<EpisodeResult> results(resolved.episodes);
    std::vector<std::exception_ptr> errors(resolved.episodes);

    // Episode 0 starts at the scenario pose; later episodes draw a seeded
    // start so batches exercise randomized initial positions.
    const auto run_one = [&](int i) {
        try {
            const std::uint64_t ep_seed = resolved.seed + static_cast<std::uint64_t>(i);
            const RobotPose start =
                i == 0 ? scenario.start : random_start_pose(scenario.world, ep_seed);
            const auto reasoner = make_reasoner(resolved, scenario.world, goal);
            results[i] = run_episode(scenario.world, start, goal, resolved.cfg, *reasoner);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    };

    const int jobs = std::max(1, resolved.jobs);
    for (int base = 0; base < resolved.episodes; base += jobs) {
        std::vector<std::thread> pool;
        for (int i = base; i < std::min(resolved.episodes, base + jobs); ++i)
            pool.emplace_back(run_one, i);
        for (std::thread& t : pool) t.join();
    }
    for (int i = 0; i < resolved.episodes; ++i)
        if (errors[i]) std::rethrow_exception(errors[i]);

    std::string metrics;
    int successes = 0;
    for (int i = 0; i < resolved.episodes; ++i) {
        metrics += episode_to_json(results[i], i, resolved.seed + i).dump() + "\n";
        successes += results[i].success ? 1 : 0;
        if (resolved.traces) {
            const std::string tag = std::to_string(i);
            detail::write_file((fs::path(resolved.out_dir) / ("pose_" + tag + ".csv")).string(),
                               pose_trace_csv(results[i].pose_trace));
            detail::write_file((fs::path(resolved.out_dir) / ("path_" + tag + ".svg")).string(),
                               render_path_svg(scenario.world, results[i].pose_trace, &goal));
        }
    }
    detail::write_file((fs::path(resolved.out_dir) / "metrics.jsonl").string(), metrics);
    std::cout << "episodes " << resolved.episodes << " success " << successes << "\n";
    return 0;
}

int cmd_handover(const std::string& hand_file, const std::string& calib_file,
                 const std::string& out_dir, double rate, KeyframeParams params) {
    const HandTrajectory traj = load_hand_csv(hand_file);
    const HandCalibration calib = load_calibration(calib_file);
    params.validate();

    const std::vector<std::size_t> keys = select_keyframes(traj, params);
    const TcpTrajectory tcp = generate_tcp_trajectory(traj, calib, params, rate);

    fs::create_directories(out_dir);
    nlohmann::json config;
    config["hand"] = hand_file;
    config["calibration"] = calib_file;
    config["rate"] = rate;
    config["smoothing_window"] = params.smoothing_window;
    config["trough_threshold"] = params.trough_threshold;
    config["min_separation"] = params.min_separation;
    write_meta(out_dir, "handover", config);

    save_tcp_csv((fs::path(out_dir) / "tcp_trajectory.csv").string(), tcp);
    nlohmann::json report;
    report["keyframes"] = keys;
    report["times"] = nlohmann::json::array();
    for (std::size_t k : keys) report["times"].push_back(traj.samples[k].t);
    detail::write_file((fs::path(out_dir) / "keyframes.json").string(), report.dump(2) + "\n");

    std::cout << "samples " << traj.samples.size() << " keyframes " << keys.size()
              << " tcp_samples " << tcp.samples.size() << "\n";
    return 0;
}

int cmd_track(const std::string& chain_file, const std::string& tcp_file,
              const std::string& out_dir, const TrackControllerParams& controller,
              const RewardParams& rewards) {
    const KinematicChain chain = load_chain(chain_file);
    const TcpTrajectory targets = load_tcp_csv(tcp_file);

    const TrackResult result =
        track_reference(chain, chain.q_default, targets, controller, rewards);

    fs::create_directories(out_dir);
    nlohmann::json config;
    config["chain"] = chain_file;
    config["tcp"] = tcp_file;
    config["lambda_dls"] = controller.lambda_dls;
    config["step_cap"] = controller.step_cap;
    config["control_rate"] = controller.control_rate;
    config["sigma_p"] = rewards.sigma_p;
    config["sigma_o"] = rewards.sigma_o;
    config["lambda_tau"] = rewards.lambda_tau;
    config["lambda_dq"] = rewards.lambda_dq;
    config["lambda_qdd"] = rewards.lambda_qdd;
    write_meta(out_dir, "track", config);

    detail::write_file((fs::path(out_dir) / "reward_trace.csv").string(),
                       reward_trace_csv(result.rewards));

    double mean_track = 0.0;
    for (const RewardTraceRow& r : result.rewards) mean_track += r.r_track;
    mean_track /= static_cast<double>(result.rewards.size());
    const RewardTraceRow& last = result.rewards.back();
    std::cout << "steps " << result.rewards.size() << " mean_r_track " << mean_track
              << " final_pos_err " << last.pos_err << " final_ang_err " << last.ang_err << "\n";
    return 0;
}

int cmd_gen_world(std::uint64_t seed, const GenParams& params, const std::string& out_file,
                  const std::string& goal_out) {
    const WorldModel world = generate_world(seed, params);
    Scenario scenario;
    scenario.world = world;
    scenario.seed = seed;
    scenario.start = random_start_pose(world, seed);

    const fs::path parent = fs::path(out_file).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
    save_scenario(out_file, scenario);

    if (!goal_out.empty()) {
        Rng rng(seed ^ 0xfeedfacecafebeefull);
        const SemanticObject& target = world.objects[rng.uniform_index(world.objects.size())];
        nlohmann::json node;
        node["id"] = 0;
        node["category"] = target.category;
        node["attributes"] = target.attributes;
        node["target"] = true;
        nlohmann::json goal;
        goal["nodes"] = nlohmann::json::array({node});
        detail::write_file(goal_out, goal.dump(2) + "\n");
    }
    std::cout << "world " << params.width << "x" << params.height << " objects "
              << world.objects.size() << " walls " << world.walls.size() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"mobman: mapless semantic navigation and hand-track retargeting toolkit"};
    app.set_config("--config");
    app.require_subcommand(1);

    NavOptions nav;
    CLI::App* nav_cmd = app.add_subcommand("nav", "run navigation episodes on a scenario");
    nav_cmd->add_option("--scenario", nav.scenario_file, "scenario JSON file")->required();
    nav_cmd->add_option("--goal", nav.goal_file, "goal JSON file")->required();
    nav_cmd->add_option("--out", nav.out_dir, "output directory");
    nav_cmd->add_option("--seed", nav.seed, "base seed");
    nav_cmd->add_option("--episodes", nav.episodes, "episode count")->check(CLI::PositiveNumber);
    nav_cmd->add_option("--jobs", nav.jobs, "parallel episodes")->check(CLI::PositiveNumber);
    nav_cmd->add_option("--sigma1", nav.cfg.sigma1, "explore/align threshold");
    nav_cmd->add_option("--sigma2", nav.cfg.sigma2, "align/verify threshold");
    nav_cmd->add_option("--max-steps", nav.cfg.max_steps, "decision-tick budget");
    nav_cmd->add_option("--r-stop", nav.cfg.r_stop, "stop radius (m)");
    nav_cmd->add_option("--decision-dt", nav.cfg.decision_dt, "decision tick (s)");
    nav_cmd->add_option("--reasoner-url", nav.reasoner_url, "external reasoner base URL");
    nav_cmd->add_flag("--reasoner-fallback", nav.reasoner_fallback,
                      "fall back to the mock when the reasoner fails");
    nav_cmd->add_flag("--traces", nav.traces, "write pose CSV and SVG per episode");

    std::string hand_file, calib_file;
    std::string handover_out = ".";
    double handover_rate = 50.0;
    KeyframeParams keyframe_params;
    CLI::App* handover_cmd =
        app.add_subcommand("handover", "generate a TCP trajectory from a hand track");
    handover_cmd->add_option("--hand", hand_file, "hand trajectory CSV")->required();
    handover_cmd->add_option("--calib", calib_file, "calibration JSON")->required();
    handover_cmd->add_option("--out", handover_out, "output directory");
    handover_cmd->add_option("--rate", handover_rate, "output rate (Hz)");
    handover_cmd->add_option("--window", keyframe_params.smoothing_window,
                             "speed smoothing window (odd samples)");
    handover_cmd->add_option("--trough-threshold", keyframe_params.trough_threshold,
                             "keyframe speed threshold (m/s)");
    handover_cmd->add_option("--min-separation", keyframe_params.min_separation,
                             "minimum keyframe separation (samples)");

    std::string chain_file, tcp_file;
    std::string track_out = ".";
    TrackControllerParams controller;
    RewardParams rewards;
    CLI::App* track_cmd =
        app.add_subcommand("track", "track a TCP trajectory with the reference controller");
    track_cmd->add_option("--chain", chain_file, "kinematic chain JSON")->required();
    track_cmd->add_option("--tcp", tcp_file, "TCP trajectory CSV (50 Hz)")->required();
    track_cmd->add_option("--out", track_out, "output directory");
    track_cmd->add_option("--lambda", controller.lambda_dls, "DLS damping");
    track_cmd->add_option("--step-cap", controller.step_cap, "per-joint step cap (rad)");
    track_cmd->add_option("--sigma-p", rewards.sigma_p, "position reward scale (m)");
    track_cmd->add_option("--sigma-o", rewards.sigma_o, "orientation reward scale (rad)");
    track_cmd->add_option("--lambda-tau", rewards.lambda_tau, "torque penalty");
    track_cmd->add_option("--lambda-dq", rewards.lambda_dq, "action-rate penalty");
    track_cmd->add_option("--lambda-qdd", rewards.lambda_qdd, "acceleration penalty");

    std::uint64_t gen_seed = 0;
    GenParams gen_params;
    std::string gen_out = "scenario.json";
    std::string gen_goal_out;
    CLI::App* gen_cmd = app.add_subcommand("gen-world", "generate a procedural scenario");
    gen_cmd->add_option("--seed", gen_seed, "world seed");
    gen_cmd->add_option("--out", gen_out, "scenario output file");
    gen_cmd->add_option("--goal-out", gen_goal_out, "also write a matching goal file");
    gen_cmd->add_option("--width", gen_params.width, "world width (cells)");
    gen_cmd->add_option("--height", gen_params.height, "world height (cells)");
    gen_cmd->add_option("--objects", gen_params.n_objects, "object count");
    gen_cmd->add_option("--wall-density", gen_params.wall_density, "wall fraction [0, 0.3]");
    gen_cmd->add_option("--cell-size", gen_params.cell_size, "cell size (m)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (nav_cmd->parsed()) return cmd_nav(nav);
        if (handover_cmd->parsed())
            return cmd_handover(hand_file, calib_file, handover_out, handover_rate,
                                keyframe_params);
        if (track_cmd->parsed())
            return cmd_track(chain_file, tcp_file, track_out, controller, rewards);
        if (gen_cmd->parsed()) return cmd_gen_world(gen_seed, gen_params, gen_out, gen_goal_out);
    } catch (const ReasonerUnavailable& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const RateMismatch& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
