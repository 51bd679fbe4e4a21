#pragma once
//
// File formats: scenario and goal JSON, calibration and chain JSON, CSV
// trajectories and reward traces, JSONL episode metrics, SVG path plots.
// All writers format deterministically so identical runs are byte-identical.
//

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mobman/errors.hpp"
#include "mobman/handtrack.hpp"
#include "mobman/navigator.hpp"
#include "mobman/scenegraph.hpp"
#include "mobman/wholebody.hpp"
#include "mobman/world.hpp"

namespace mobman {

struct Scenario {
    WorldModel world;
    RobotPose start;
    SensorParams sensor;
    std::uint64_t seed = 0;
};

namespace detail {

// Shortest round-trip decimal representation; integral values print plain.
inline std::string fmt_double(double x) {
    char buf[32];
    if (x == std::floor(x) && std::abs(x) < 1e15) {
        std::snprintf(buf, sizeof(buf), "%.0f", x);
        return buf;
    }
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, x);
        double parsed = 0.0;
        std::sscanf(buf, "%lf", &parsed);
        if (parsed == x) return buf;
    }
    return buf;
}

inline void reject_unknown(const nlohmann::json& j, const std::set<std::string>& allowed,
                           const char* where) {
    for (const auto& [key, value] : j.items())
        if (!allowed.count(key))
            throw ScenarioInvalid(std::string("scenario: unknown key '") + key + "' in " + where);
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ScenarioInvalid("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ScenarioInvalid("cannot write file: " + path);
    out << content;
}

} // namespace detail

// --- scenario ------------------------------------------------------------

inline nlohmann::json scenario_to_json(const Scenario& sc) {
    nlohmann::json j;
    j["world"]["width"] = sc.world.width;
    j["world"]["height"] = sc.world.height;
    j["world"]["cell_size"] = sc.world.cell_size;
    j["world"]["walls"] = nlohmann::json::array();
    for (const Cell& c : sc.world.walls) j["world"]["walls"].push_back({c.x, c.y});
    j["world"]["objects"] = nlohmann::json::array();
    for (const SemanticObject& o : sc.world.objects) {
        nlohmann::json jo;
        jo["id"] = o.id;
        jo["category"] = o.category;
        jo["attributes"] = o.attributes;
        jo["position"] = {o.position.x(), o.position.y()};
        j["world"]["objects"].push_back(jo);
    }
    j["robot"]["start"] = {sc.start.x, sc.start.y, sc.start.heading};
    j["sensor"]["range"] = sc.sensor.range;
    j["sensor"]["fov"] = sc.sensor.fov;
    j["seed"] = sc.seed;
    return j;
}

inline Scenario scenario_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ScenarioInvalid("scenario: root must be an object");
    detail::reject_unknown(j, {"world", "robot", "sensor", "seed"}, "root");
    if (!j.contains("world")) throw ScenarioInvalid("scenario: missing 'world'");

    Scenario sc;
    const auto& jw = j["world"];
    detail::reject_unknown(jw, {"width", "height", "cell_size", "walls", "objects"}, "world");
    sc.world.width = jw.at("width").get<int>();
    sc.world.height = jw.at("height").get<int>();
    if (sc.world.width < 4 || sc.world.height < 4)
        throw ScenarioInvalid("scenario: world must be at least 4x4 cells");
    if (jw.contains("cell_size")) sc.world.cell_size = jw["cell_size"].get<double>();
    if (sc.world.cell_size <= 0.0) throw ScenarioInvalid("scenario: cell_size must be positive");
    if (jw.contains("walls"))
        for (const auto& c : jw["walls"]) {
            if (!c.is_array() || c.size() != 2) throw ScenarioInvalid("scenario: wall must be [x, y]");
            const Cell cell{c[0].get<int>(), c[1].get<int>()};
            if (!sc.world.in_bounds(cell)) throw ScenarioInvalid("scenario: wall out of bounds");
            sc.world.walls.insert(cell);
        }
    std::set<int> ids;
    if (jw.contains("objects"))
        for (const auto& jo : jw["objects"]) {
            detail::reject_unknown(jo, {"id", "category", "attributes", "position"}, "object");
            SemanticObject o;
            o.id = jo.at("id").get<int>();
            if (!ids.insert(o.id).second) throw ScenarioInvalid("scenario: duplicate object id");
            o.category = jo.at("category").get<std::string>();
            if (jo.contains("attributes"))
                for (const auto& a : jo["attributes"]) o.attributes.insert(a.get<std::string>());
            if (!jo.contains("position") || !jo["position"].is_array() || jo["position"].size() != 2)
                throw ScenarioInvalid("scenario: object requires position [x, y]");
            o.position = {jo["position"][0].get<double>(), jo["position"][1].get<double>()};
            if (!sc.world.is_free(sc.world.cell_of(o.position)))
                throw ScenarioInvalid("scenario: object must lie on a free cell");
            sc.world.objects.push_back(o);
        }

    if (j.contains("robot")) {
        detail::reject_unknown(j["robot"], {"start"}, "robot");
        const auto& js = j["robot"].at("start");
        if (!js.is_array() || js.size() != 3)
            throw ScenarioInvalid("scenario: robot.start must be [x, y, heading]");
        sc.start.x = js[0].get<double>();
        sc.start.y = js[1].get<double>();
        sc.start.heading = wrap_angle(js[2].get<double>());
        if (!sc.world.is_free(sc.world.cell_of(sc.start.xy())))
            throw ScenarioInvalid("scenario: robot start must be on a free cell");
    } else {
        throw ScenarioInvalid("scenario: missing 'robot'");
    }
    if (j.contains("sensor")) {
        detail::reject_unknown(j["sensor"], {"range", "fov"}, "sensor");
        if (j["sensor"].contains("range")) sc.sensor.range = j["sensor"]["range"].get<double>();
        if (j["sensor"].contains("fov")) sc.sensor.fov = j["sensor"]["fov"].get<double>();
        if (sc.sensor.range <= 0.0 || sc.sensor.fov <= 0.0)
            throw ScenarioInvalid("scenario: sensor range and fov must be positive");
    }
    if (j.contains("seed")) sc.seed = j["seed"].get<std::uint64_t>();
    sc.world.seed = sc.seed;
    return sc;
}

inline Scenario load_scenario(const std::string& path) {
    try {
        return scenario_from_json(nlohmann::json::parse(detail::read_file(path)));
    } catch (const nlohmann::json::exception& e) {
        throw ScenarioInvalid(std::string("scenario: invalid JSON: ") + e.what());
    }
}

inline void save_scenario(const std::string& path, const Scenario& sc) {
    detail::write_file(path, scenario_to_json(sc).dump(2) + "\n");
}

inline GoalSpec load_goal(const std::string& path) {
    return parse_goal(detail::read_file(path));
}

// --- SE(3) poses in JSON ---------------------------------------------------

inline nlohmann::json pose_to_json(const SE3Pose& p) {
    nlohmann::json j;
    j["p"] = {p.position.x(), p.position.y(), p.position.z()};
    j["q"] = {p.rotation.w(), p.rotation.x(), p.rotation.y(), p.rotation.z()};
    return j;
}

inline SE3Pose pose_from_json(const nlohmann::json& j) {
    if (!j.contains("p") || !j.contains("q") || j["p"].size() != 3 || j["q"].size() != 4)
        throw ScenarioInvalid("pose: expected {p:[x,y,z], q:[w,x,y,z]}");
    return SE3Pose(
        Eigen::Vector3d(j["p"][0].get<double>(), j["p"][1].get<double>(), j["p"][2].get<double>()),
        Eigen::Quaterniond(j["q"][0].get<double>(), j["q"][1].get<double>(),
                           j["q"][2].get<double>(), j["q"][3].get<double>()));
}

// Calibration file: {"t_cam_to_world": pose, "t_tcp_hand": pose}; the
// convention is world <- camera on the left, hand -> TCP on the right.
inline HandCalibration load_calibration(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(detail::read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw ScenarioInvalid(std::string("calibration: invalid JSON: ") + e.what());
    }
    detail::reject_unknown(j, {"t_cam_to_world", "t_tcp_hand"}, "calibration");
    if (!j.contains("t_cam_to_world") || !j.contains("t_tcp_hand"))
        throw ScenarioInvalid("calibration: requires t_cam_to_world and t_tcp_hand");
    return {pose_from_json(j["t_cam_to_world"]), pose_from_json(j["t_tcp_hand"])};
}

inline void save_calibration(const std::string& path, const HandCalibration& c) {
    nlohmann::json j;
    j["t_cam_to_world"] = pose_to_json(c.t_cam_to_world);
    j["t_tcp_hand"] = pose_to_json(c.t_tcp_hand);
    detail::write_file(path, j.dump(2) + "\n");
}

// Chain file: {"base": pose, "q_default": [...], "links": [{"offset": pose,
// "axis": [x,y,z], "limits": [lo,hi]}]}
inline KinematicChain load_chain(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(detail::read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw ScenarioInvalid(std::string("chain: invalid JSON: ") + e.what());
    }
    detail::reject_unknown(j, {"base", "q_default", "links"}, "chain");
    KinematicChain chain;
    if (j.contains("base")) chain.base = pose_from_json(j["base"]);
    if (!j.contains("links") || !j["links"].is_array() || j["links"].empty())
        throw ScenarioInvalid("chain: requires a non-empty 'links' array");
    for (const auto& jl : j["links"]) {
        detail::reject_unknown(jl, {"offset", "axis", "limits"}, "link");
        ChainLink l;
        if (jl.contains("offset")) l.offset = pose_from_json(jl["offset"]);
        if (!jl.contains("axis") || jl["axis"].size() != 3)
            throw ScenarioInvalid("chain: link requires axis [x, y, z]");
        l.axis = Eigen::Vector3d(jl["axis"][0].get<double>(), jl["axis"][1].get<double>(),
                                 jl["axis"][2].get<double>());
        if (jl.contains("limits")) {
            if (jl["limits"].size() != 2) throw ScenarioInvalid("chain: limits must be [lo, hi]");
            l.lower = jl["limits"][0].get<double>();
            l.upper = jl["limits"][1].get<double>();
        }
        chain.links.push_back(l);
    }
    chain.q_default = Eigen::VectorXd::Zero(chain.dof());
    if (j.contains("q_default")) {
        if (j["q_default"].size() != static_cast<std::size_t>(chain.dof()))
            throw ScenarioInvalid("chain: q_default length mismatch");
        for (int i = 0; i < chain.dof(); ++i) chain.q_default(i) = j["q_default"][i].get<double>();
    }
    chain.validate();
    return chain;
}

inline void save_chain(const std::string& path, const KinematicChain& chain) {
    nlohmann::json j;
    j["base"] = pose_to_json(chain.base);
    j["q_default"] = nlohmann::json::array();
    for (int i = 0; i < chain.dof(); ++i) j["q_default"].push_back(chain.q_default(i));
    j["links"] = nlohmann::json::array();
    for (const ChainLink& l : chain.links) {
        nlohmann::json jl;
        jl["offset"] = pose_to_json(l.offset);
        jl["axis"] = {l.axis.x(), l.axis.y(), l.axis.z()};
        jl["limits"] = {l.lower, l.upper};
        j["links"].push_back(jl);
    }
    detail::write_file(path, j.dump(2) + "\n");
}

// --- trajectory CSV --------------------------------------------------------
//
// Header: t,px,py,pz,qw,qx,qy,qz. Lines starting with '#' carry metadata
// ("# rate=50" on TCP files) and are skipped by the samples parser.

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

inline std::vector<TimedPose> parse_pose_csv(const std::string& text, double* rate_out) {
    std::istringstream in(text);
    std::string line;
    std::vector<TimedPose> samples;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        if (line[0] == '#') {
            const auto at = line.find("rate=");
            if (at != std::string::npos && rate_out != nullptr)
                *rate_out = std::stod(line.substr(at + 5));
            continue;
        }
        if (!header_seen) {
            const auto cols = split_csv_line(line);
            if (cols.size() != 8 || cols[0] != "t")
                throw ScenarioInvalid("trajectory CSV: expected header t,px,py,pz,qw,qx,qy,qz");
            header_seen = true;
            continue;
        }
        const auto cols = split_csv_line(line);
        if (cols.size() != 8) throw ScenarioInvalid("trajectory CSV: row must have 8 columns");
        double v[8];
        for (int i = 0; i < 8; ++i) {
            try {
                v[i] = std::stod(cols[i]);
            } catch (const std::exception&) {
                throw ScenarioInvalid("trajectory CSV: non-numeric value");
            }
        }
        samples.push_back({v[0], SE3Pose(Eigen::Vector3d(v[1], v[2], v[3]),
                                         Eigen::Quaterniond(v[4], v[5], v[6], v[7]))});
    }
    return samples;
}

inline std::string pose_csv_rows(const std::vector<TimedPose>& samples) {
    std::string out = "t,px,py,pz,qw,qx,qy,qz\n";
    for (const TimedPose& s : samples) {
        out += fmt_double(s.t);
        const double vals[7] = {s.pose.position.x(), s.pose.position.y(), s.pose.position.z(),
                                s.pose.rotation.w(), s.pose.rotation.x(), s.pose.rotation.y(),
                                s.pose.rotation.z()};
        for (double v : vals) {
            out += ',';
            out += fmt_double(v);
        }
        out += '\n';
    }
    return out;
}

} // namespace detail

inline HandTrajectory load_hand_csv(const std::string& path) {
    HandTrajectory traj;
    traj.samples = detail::parse_pose_csv(detail::read_file(path), nullptr);
    traj.validate();
    return traj;
}

inline void save_hand_csv(const std::string& path, const HandTrajectory& traj) {
    detail::write_file(path, detail::pose_csv_rows(traj.samples));
}

inline void save_tcp_csv(const std::string& path, const TcpTrajectory& traj) {
    detail::write_file(path,
                       "# rate=" + detail::fmt_double(traj.rate) + "\n" +
                           detail::pose_csv_rows(traj.samples));
}

// Rate comes from the metadata line; without one it is inferred from the
// mean sample spacing.
inline TcpTrajectory load_tcp_csv(const std::string& path) {
    TcpTrajectory traj;
    double rate = 0.0;
    traj.samples = detail::parse_pose_csv(detail::read_file(path), &rate);
    if (traj.samples.size() < 2) throw TooFewSamples("TCP CSV needs >= 2 samples");
    if (rate > 0.0) {
        traj.rate = rate;
    } else {
        const double span = traj.samples.back().t - traj.samples.front().t;
        if (span <= 0.0) throw ScenarioInvalid("TCP CSV: non-increasing timestamps");
        traj.rate = static_cast<double>(traj.samples.size() - 1) / span;
    }
    return traj;
}

// --- reward trace CSV ------------------------------------------------------

inline std::string reward_trace_csv(const std::vector<RewardTraceRow>& rows) {
    std::string out = "step,t,r_track,r_reg,r_style,r_total,pos_err,ang_err\n";
    for (const RewardTraceRow& r : rows) {
        out += std::to_string(r.step);
        const double vals[7] = {r.t, r.r_track, r.r_reg, r.r_style, r.r_total, r.pos_err, r.ang_err};
        for (double v : vals) {
            out += ',';
            out += detail::fmt_double(v);
        }
        out += '\n';
    }
    return out;
}

// --- episode outputs -------------------------------------------------------

inline nlohmann::json episode_to_json(const EpisodeResult& r, int episode, std::uint64_t seed) {
    nlohmann::json j;
    j["episode"] = episode;
    j["seed"] = seed;
    j["success"] = r.success;
    j["steps"] = r.steps;
    j["control_steps"] = r.control_steps;
    j["path_length"] = r.path_length;
    j["spl"] = r.spl;
    j["shortest_path"] = r.shortest_path;
    j["stop_issued"] = r.stop_issued;
    j["failure_reason"] = r.failure_reason;
    j["stage_trace"] = nlohmann::json::array();
    for (const StageSample& s : r.stage_trace)
        j["stage_trace"].push_back({s.step, to_string(s.stage), s.score});
    return j;
}

inline std::string pose_trace_csv(const std::vector<PoseSample>& trace) {
    std::string out = "step,t,x,y,heading\n";
    for (const PoseSample& p : trace) {
        out += std::to_string(p.step);
        const double vals[4] = {p.t, p.x, p.y, p.heading};
        for (double v : vals) {
            out += ',';
            out += detail::fmt_double(v);
        }
        out += '\n';
    }
    return out;
}

// Static SVG: walls as dark cells, objects as circles (targets ringed), the
// executed path as a polyline from start (square) to finish (dot).
inline std::string render_path_svg(const WorldModel& world, const std::vector<PoseSample>& trace,
                                   const GoalSpec* goal = nullptr) {
    const double scale = 40.0;  // px per meter
    const double w = world.width * world.cell_size * scale;
    const double h = world.height * world.cell_size * scale;
    const auto px = [scale](double m) { return m * scale; };
    // SVG y grows downward; flip so world +y is up.
    const auto py = [scale, h](double m) { return h - m * scale; };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + detail::fmt_double(w) +
           "\" height=\"" + detail::fmt_double(h) + "\" viewBox=\"0 0 " + detail::fmt_double(w) +
           " " + detail::fmt_double(h) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
    for (const Cell& c : world.walls) {
        svg += "<rect x=\"" + detail::fmt_double(px(c.x * world.cell_size)) + "\" y=\"" +
               detail::fmt_double(py((c.y + 1) * world.cell_size)) + "\" width=\"" +
               detail::fmt_double(px(world.cell_size)) + "\" height=\"" +
               detail::fmt_double(px(world.cell_size)) + "\" fill=\"#444444\"/>\n";
    }
    std::set<std::string> target_categories;
    if (goal != nullptr) {
        const GraphNode* t = goal->graph.find_node(goal->target_id);
        if (t != nullptr) target_categories.insert(t->category);
    }
    for (const SemanticObject& o : world.objects) {
        const bool is_target = target_categories.count(o.category) > 0;
        svg += "<circle cx=\"" + detail::fmt_double(px(o.position.x())) + "\" cy=\"" +
               detail::fmt_double(py(o.position.y())) + "\" r=\"" +
               detail::fmt_double(0.3 * px(world.cell_size)) + "\" fill=\"" +
               (is_target ? "#d62728" : "#1f77b4") + "\"/>\n";
    }
    if (!trace.empty()) {
        std::string points;
        for (const PoseSample& p : trace) {
            points += detail::fmt_double(px(p.x)) + "," + detail::fmt_double(py(p.y)) + " ";
        }
        svg += "<polyline points=\"" + points +
               "\" fill=\"none\" stroke=\"#2ca02c\" stroke-width=\"1.5\"/>\n";
        svg += "<rect x=\"" + detail::fmt_double(px(trace.front().x) - 3) + "\" y=\"" +
               detail::fmt_double(py(trace.front().y) - 3) +
               "\" width=\"6\" height=\"6\" fill=\"#2ca02c\"/>\n";
        svg += "<circle cx=\"" + detail::fmt_double(px(trace.back().x)) + "\" cy=\"" +
               detail::fmt_double(py(trace.back().y)) + "\" r=\"3\" fill=\"#000000\"/>\n";
    }
    svg += "</svg>\n";
    return svg;
}

} // namespace mobman
