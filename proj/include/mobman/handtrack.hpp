#pragma once
//
// Hand-track trajectory generation: speed-trough keyframe selection,
// camera-to-world TCP retargeting, and fixed-rate resampling.
//

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "mobman/errors.hpp"
#include "mobman/geometry.hpp"

namespace mobman {

struct TimedPose {
    double t = 0.0;  // seconds
    SE3Pose pose;
};

// Hand poses in the camera frame, strictly increasing timestamps.
struct HandTrajectory {
    std::vector<TimedPose> samples;

    void validate() const {
        if (samples.size() < 2) throw TooFewSamples("hand trajectory needs >= 2 samples");
        for (std::size_t i = 1; i < samples.size(); ++i)
            if (!(samples[i].t > samples[i - 1].t))
                throw TooFewSamples("hand trajectory timestamps must strictly increase");
    }
};

// World-frame TCP targets at a fixed rate.
struct TcpTrajectory {
    std::vector<TimedPose> samples;
    double rate = 50.0;  // Hz
};

struct KeyframeParams {
    int smoothing_window = 5;      // odd sample count; 1 disables smoothing
    double trough_threshold = 0.05;  // m/s
    int min_separation = 10;       // samples between interior troughs

    void validate() const {
        if (smoothing_window < 1 || smoothing_window % 2 == 0)
            throw Error("keyframe smoothing window must be an odd positive count");
        if (min_separation < 0) throw Error("keyframe min separation must be >= 0");
    }
};

// Finite-difference speed assigned to the left sample, moving-average
// smoothed with an edge-truncated window. Length is samples - 1.
inline std::vector<std::pair<double, double>> hand_speed(const HandTrajectory& traj,
                                                         int smoothing_window = 5) {
    traj.validate();
    const std::size_t m = traj.samples.size() - 1;
    std::vector<double> raw(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double dt = traj.samples[i + 1].t - traj.samples[i].t;
        raw[i] = (traj.samples[i + 1].pose.position - traj.samples[i].pose.position).norm() / dt;
    }
    const int h = smoothing_window / 2;
    std::vector<std::pair<double, double>> out(m);
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t lo = i >= static_cast<std::size_t>(h) ? i - h : 0;
        const std::size_t hi = std::min(m - 1, i + static_cast<std::size_t>(h));
        double sum = 0.0;
        for (std::size_t k = lo; k <= hi; ++k) sum += raw[k];
        out[i] = {traj.samples[i].t, sum / static_cast<double>(hi - lo + 1)};
    }
    return out;
}

// Keyframe indices: interior local minima of the smoothed speed profile
// below the trough threshold, thinned to the minimum separation (earlier
// trough wins), plus the first and last samples. Sorted, deduplicated.
inline std::vector<std::size_t> select_keyframes(const HandTrajectory& traj,
                                                 const KeyframeParams& params = {}) {
    traj.validate();
    params.validate();
    const auto speed = hand_speed(traj, params.smoothing_window);
    const std::size_t m = speed.size();

    std::vector<std::size_t> troughs;
    for (std::size_t i = 1; i + 1 < m; ++i) {
        if (speed[i].second < params.trough_threshold &&
            speed[i].second <= speed[i - 1].second && speed[i].second <= speed[i + 1].second)
            troughs.push_back(i);
    }
    std::vector<std::size_t> kept;
    for (std::size_t i : troughs) {
        if (kept.empty() || i - kept.back() >= static_cast<std::size_t>(params.min_separation))
            kept.push_back(i);
    }

    std::vector<std::size_t> out;
    out.push_back(0);
    out.insert(out.end(), kept.begin(), kept.end());
    out.push_back(traj.samples.size() - 1);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

// TCP pose from a camera-frame hand pose:
//   x_tcp = T_cam_to_world * h * T_tcp_hand
inline SE3Pose retarget(const SE3Pose& hand, const SE3Pose& t_cam_to_world,
                        const SE3Pose& t_tcp_hand) {
    return se3_compose(se3_compose(t_cam_to_world, hand), t_tcp_hand);
}

struct HandCalibration {
    SE3Pose t_cam_to_world;  // world <- camera
    SE3Pose t_tcp_hand;      // fixed hand-to-TCP offset, applied on the right
};

// Uniform resampling at `rate`: linear positions, shortest-arc slerp
// rotations, endpoints reproduced exactly. When the input duration is not a
// grid multiple the final input sample is appended at its exact time.
inline TcpTrajectory resample(const std::vector<TimedPose>& poses, double rate = 50.0) {
    if (poses.size() < 2) throw TooFewSamples("resample needs >= 2 input samples");
    if (rate <= 0.0) throw Error("resample rate must be positive");
    for (std::size_t i = 1; i < poses.size(); ++i)
        if (!(poses[i].t > poses[i - 1].t))
            throw TooFewSamples("resample timestamps must strictly increase");

    const double dt = 1.0 / rate;
    const double t0 = poses.front().t;
    const double t_end = poses.back().t;
    constexpr double snap = 1e-12;

    TcpTrajectory out;
    out.rate = rate;
    std::size_t seg = 0;
    for (std::size_t k = 0;; ++k) {
        double tk = t0 + static_cast<double>(k) * dt;
        if (tk > t_end + snap) break;
        const bool at_end = std::abs(tk - t_end) <= snap;
        if (at_end) {
            out.samples.push_back({t_end, poses.back().pose});
            break;
        }
        while (seg + 2 < poses.size() && poses[seg + 1].t <= tk) ++seg;
        const TimedPose& a = poses[seg];
        const TimedPose& b = poses[seg + 1];
        const double u = (tk - a.t) / (b.t - a.t);
        if (u <= 0.0) {
            out.samples.push_back({tk, a.pose});
        } else if (u >= 1.0) {
            out.samples.push_back({tk, b.pose});
        } else {
            out.samples.push_back(
                {tk, SE3Pose(lerp3(a.pose.position, b.pose.position, u),
                             slerp(a.pose.rotation, b.pose.rotation, u))});
        }
    }
    if (out.samples.empty() || out.samples.back().t < t_end - snap)
        out.samples.push_back({t_end, poses.back().pose});
    return out;
}

// Full pipeline: keyframes -> retarget -> resample.
inline TcpTrajectory generate_tcp_trajectory(const HandTrajectory& traj,
                                             const HandCalibration& calib,
                                             const KeyframeParams& params = {},
                                             double rate = 50.0) {
    const std::vector<std::size_t> keys = select_keyframes(traj, params);
    std::vector<TimedPose> retargeted;
    retargeted.reserve(keys.size());
    for (std::size_t i : keys)
        retargeted.push_back({traj.samples[i].t,
                              retarget(traj.samples[i].pose, calib.t_cam_to_world,
                                       calib.t_tcp_hand)});
    return resample(retargeted, rate);
}

// Online mode: the same pure pipeline folded over incrementally fed
// samples, so a live feed and a recorded file produce identical output.
class OnlineTcpGenerator {
public:
    explicit OnlineTcpGenerator(HandCalibration calib, KeyframeParams params = {},
                                double rate = 50.0)
        : calib_(std::move(calib)), params_(params), rate_(rate) {}

    void push(double t, const SE3Pose& pose) {
        if (!traj_.samples.empty() && !(t > traj_.samples.back().t))
            throw TooFewSamples("online samples must strictly increase in time");
        traj_.samples.push_back({t, pose});
    }

    TcpTrajectory finish() const { return generate_tcp_trajectory(traj_, calib_, params_, rate_); }

private:
    HandTrajectory traj_;
    HandCalibration calib_;
    KeyframeParams params_;
    double rate_;
};

} // namespace mobman
