#pragma once
//
// Whole-body policy scaffolding at desk scale: observation packing, PD
// action targets, tracking/regularization rewards, a revolute kinematic
// chain with forward kinematics, and a damped-least-squares reference
// controller that exercises the same contracts a trained policy would.
//

#include <Eigen/Core>
#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <cmath>
#include <functional>
#include <vector>

#include "mobman/errors.hpp"
#include "mobman/geometry.hpp"
#include "mobman/handtrack.hpp"

namespace mobman {

struct ObservationLayout {
    int leg_dof = 12;
    int arm_dof = 6;

    // leg_q, leg_dq, gravity(3), prev_leg_action, arm_q, arm_dq,
    // prev_arm_action, base_ang_vel(3), base_lin_vel(3), target pos(3),
    // target rot 6D(6)
    int size() const { return 3 * leg_dof + 3 * arm_dof + 18; }
};

struct RobotState {
    Eigen::VectorXd leg_q;
    Eigen::VectorXd leg_dq;
    Eigen::Vector3d gravity{0.0, 0.0, -1.0};  // unit, body frame
    Eigen::VectorXd prev_leg_action;
    Eigen::VectorXd arm_q;
    Eigen::VectorXd arm_dq;
    Eigen::VectorXd prev_arm_action;
    Eigen::Vector3d base_ang_vel{0.0, 0.0, 0.0};
    Eigen::Vector3d base_lin_vel{0.0, 0.0, 0.0};

    static RobotState zero(const ObservationLayout& layout = {}) {
        RobotState s;
        s.leg_q = Eigen::VectorXd::Zero(layout.leg_dof);
        s.leg_dq = Eigen::VectorXd::Zero(layout.leg_dof);
        s.prev_leg_action = Eigen::VectorXd::Zero(layout.leg_dof);
        s.arm_q = Eigen::VectorXd::Zero(layout.arm_dof);
        s.arm_dq = Eigen::VectorXd::Zero(layout.arm_dof);
        s.prev_arm_action = Eigen::VectorXd::Zero(layout.arm_dof);
        return s;
    }

    void validate(const ObservationLayout& layout) const {
        const auto check = [](const Eigen::VectorXd& v, int n, const char* what) {
            if (v.size() != n) throw DimensionMismatch(std::string("robot state: ") + what);
            if (!v.allFinite()) throw DimensionMismatch(std::string("robot state: non-finite ") + what);
        };
        check(leg_q, layout.leg_dof, "leg_q");
        check(leg_dq, layout.leg_dof, "leg_dq");
        check(prev_leg_action, layout.leg_dof, "prev_leg_action");
        check(arm_q, layout.arm_dof, "arm_q");
        check(arm_dq, layout.arm_dof, "arm_dq");
        check(prev_arm_action, layout.arm_dof, "prev_arm_action");
        if (std::abs(gravity.norm() - 1.0) > 1e-9)
            throw DimensionMismatch("robot state: gravity must be unit norm");
    }
};

// Fixed, versioned observation layout. Block order never changes within a
// layout version; sizes come from the layout config.
inline Eigen::VectorXd pack_observation(const RobotState& s, const SE3Pose& tcp_target,
                                        const ObservationLayout& layout = {}) {
    s.validate(layout);
    Eigen::VectorXd out(layout.size());
    int at = 0;
    const auto put = [&out, &at](const auto& v) {
        out.segment(at, v.size()) = v;
        at += static_cast<int>(v.size());
    };
    put(s.leg_q);
    put(s.leg_dq);
    put(s.gravity);
    put(s.prev_leg_action);
    put(s.arm_q);
    put(s.arm_dq);
    put(s.prev_arm_action);
    put(s.base_ang_vel);
    put(s.base_lin_vel);
    put(tcp_target.position);
    const Rot6D r = rot_to_6d(tcp_target.rotation);
    for (double x : r.v) out(at++) = x;
    return out;
}

inline std::pair<RobotState, SE3Pose> unpack_observation(const Eigen::VectorXd& obs,
                                                         const ObservationLayout& layout = {}) {
    if (obs.size() != layout.size()) throw DimensionMismatch("unpack_observation: wrong length");
    RobotState s;
    int at = 0;
    const auto take = [&obs, &at](int n) {
        Eigen::VectorXd v = obs.segment(at, n);
        at += n;
        return v;
    };
    s.leg_q = take(layout.leg_dof);
    s.leg_dq = take(layout.leg_dof);
    s.gravity = take(3);
    s.prev_leg_action = take(layout.leg_dof);
    s.arm_q = take(layout.arm_dof);
    s.arm_dq = take(layout.arm_dof);
    s.prev_arm_action = take(layout.arm_dof);
    s.base_ang_vel = take(3);
    s.base_lin_vel = take(3);
    const Eigen::Vector3d pos = take(3);
    Rot6D r;
    for (int i = 0; i < 6; ++i) r.v[i] = obs(at + i);
    return {s, SE3Pose(pos, rot6d_to_rot(r))};
}

// q* = q_default + dq, clamped to per-joint limits.
inline Eigen::VectorXd pd_target(const Eigen::VectorXd& q_default, const Eigen::VectorXd& dq,
                                 const Eigen::VectorXd& lower, const Eigen::VectorXd& upper) {
    if (q_default.size() != dq.size() || lower.size() != dq.size() || upper.size() != dq.size())
        throw DimensionMismatch("pd_target: vector lengths differ");
    Eigen::VectorXd out(dq.size());
    for (int i = 0; i < dq.size(); ++i)
        out(i) = std::clamp(q_default(i) + dq(i), lower(i), upper(i));
    return out;
}

struct RewardParams {
    double sigma_p = 0.1;     // meters
    double sigma_o = 0.5;     // radians
    double lambda_tau = 1e-4;
    double lambda_dq = 0.1;
    double lambda_qdd = 1e-4;
    double gamma = 0.99;

    void validate() const {
        if (sigma_p <= 0.0 || sigma_o <= 0.0)
            throw DimensionMismatch("reward params: sigma_p and sigma_o must be positive");
        if (lambda_tau < 0.0 || lambda_dq < 0.0 || lambda_qdd < 0.0)
            throw DimensionMismatch("reward params: lambdas must be non-negative");
    }
};

// exp(-|p - p*| / sigma_p) * exp(-angle(R (R*)^T) / sigma_o), in (0, 1].
inline double reward_track(const SE3Pose& tcp, const SE3Pose& target, const RewardParams& params) {
    params.validate();
    const double pos_err = (tcp.position - target.position).norm();
    const double ang_err = geodesic_angle(tcp.rotation, target.rotation);
    return std::exp(-pos_err / params.sigma_p) * std::exp(-ang_err / params.sigma_o);
}

// -lambda_tau |tau|^2 - lambda_dq |a - a_prev|^2 - lambda_qdd |qdd|^2.
// Sums are sequential so the value is reproducible term for term.
inline double reward_reg(const Eigen::VectorXd& tau, const Eigen::VectorXd& action,
                         const Eigen::VectorXd& prev_action, const Eigen::VectorXd& qdd,
                         const RewardParams& params) {
    params.validate();
    if (action.size() != prev_action.size())
        throw DimensionMismatch("reward_reg: action length differs from previous action");
    double s_tau = 0.0;
    for (int i = 0; i < tau.size(); ++i) s_tau += tau(i) * tau(i);
    double s_da = 0.0;
    for (int i = 0; i < action.size(); ++i) {
        const double d = action(i) - prev_action(i);
        s_da += d * d;
    }
    double s_qdd = 0.0;
    for (int i = 0; i < qdd.size(); ++i) s_qdd += qdd(i) * qdd(i);
    return -params.lambda_tau * s_tau - params.lambda_dq * s_da - params.lambda_qdd * s_qdd;
}

inline double reward_total(double track, double reg, double style = 0.0) {
    return track + reg + style;
}

struct ChainLink {
    SE3Pose offset;               // fixed transform before the joint
    Eigen::Vector3d axis{0, 0, 1};  // revolute axis, unit norm
    double lower = -2.0 * kPi;
    double upper = 2.0 * kPi;
};

struct KinematicChain {
    SE3Pose base;
    std::vector<ChainLink> links;
    Eigen::VectorXd q_default;

    int dof() const { return static_cast<int>(links.size()); }

    void validate() const {
        if (links.empty()) throw DimensionMismatch("kinematic chain needs >= 1 joint");
        for (const ChainLink& l : links)
            if (std::abs(l.axis.norm() - 1.0) > 1e-9)
                throw DimensionMismatch("kinematic chain: joint axis must be unit norm");
        if (q_default.size() != dof())
            throw DimensionMismatch("kinematic chain: q_default length mismatch");
    }

    Eigen::VectorXd lower_limits() const {
        Eigen::VectorXd v(dof());
        for (int i = 0; i < dof(); ++i) v(i) = links[i].lower;
        return v;
    }

    Eigen::VectorXd upper_limits() const {
        Eigen::VectorXd v(dof());
        for (int i = 0; i < dof(); ++i) v(i) = links[i].upper;
        return v;
    }
};

// base * prod_i(offset_i * rot(axis_i, q_i))
inline SE3Pose forward_kinematics(const KinematicChain& chain, const Eigen::VectorXd& q) {
    if (q.size() != chain.dof()) throw DimensionMismatch("forward_kinematics: q length mismatch");
    SE3Pose tcp = chain.base;
    for (int i = 0; i < chain.dof(); ++i) {
        tcp = se3_compose(tcp, chain.links[i].offset);
        tcp = se3_compose(tcp, SE3Pose(Eigen::Vector3d::Zero(),
                                       axis_rotation(chain.links[i].axis, q(i))));
    }
    return tcp;
}

// Central-difference geometric Jacobian: position rows from FK translation,
// orientation rows from the log map of the relative rotation.
inline Eigen::MatrixXd jacobian_fd(const KinematicChain& chain, const Eigen::VectorXd& q,
                                   double eps = 1e-6) {
    if (q.size() != chain.dof()) throw DimensionMismatch("jacobian_fd: q length mismatch");
    if (eps <= 0.0) throw DimensionMismatch("jacobian_fd: eps must be positive");
    Eigen::MatrixXd jac(6, chain.dof());
    for (int i = 0; i < chain.dof(); ++i) {
        Eigen::VectorXd qp = q, qm = q;
        qp(i) += eps;
        qm(i) -= eps;
        const SE3Pose fp = forward_kinematics(chain, qp);
        const SE3Pose fm = forward_kinematics(chain, qm);
        jac.block<3, 1>(0, i) = (fp.position - fm.position) / (2.0 * eps);
        const Eigen::AngleAxisd rel(fp.rotation * fm.rotation.conjugate());
        jac.block<3, 1>(3, i) = rel.angle() * rel.axis() / (2.0 * eps);
    }
    return jac;
}

struct TrackControllerParams {
    double lambda_dls = 0.1;  // damping
    double step_cap = 0.05;   // rad per control step, per joint
    double control_rate = 50.0;
};

struct RewardTraceRow {
    int step = 0;
    double t = 0.0;
    double r_track = 0.0;
    double r_reg = 0.0;
    double r_style = 0.0;
    double r_total = 0.0;
    double pos_err = 0.0;
    double ang_err = 0.0;
};

struct TrackResult {
    std::vector<Eigen::VectorXd> joint_trajectory;  // one entry per target sample
    std::vector<RewardTraceRow> rewards;
};

using StyleHook = std::function<double(int step, const Eigen::VectorXd& q)>;

// Damped-least-squares reference controller: per 50 Hz step solve
// dq = J^T (J J^T + lambda^2 I)^-1 * twist, cap the step, clamp to limits,
// and record the reward terms (tau fed as zeros; qdd by finite difference).
inline TrackResult track_reference(const KinematicChain& chain, const Eigen::VectorXd& q0,
                                   const TcpTrajectory& targets,
                                   const TrackControllerParams& controller = {},
                                   const RewardParams& reward_params = {},
                                   const StyleHook& style_hook = nullptr) {
    chain.validate();
    if (q0.size() != chain.dof()) throw DimensionMismatch("track_reference: q0 length mismatch");
    if (std::abs(targets.rate - controller.control_rate) > 1e-9)
        throw RateMismatch("track_reference: trajectory rate must match the control rate");
    if (targets.samples.empty()) throw TooFewSamples("track_reference: empty target trajectory");

    const double dt = 1.0 / controller.control_rate;
    const Eigen::VectorXd lower = chain.lower_limits();
    const Eigen::VectorXd upper = chain.upper_limits();
    const Eigen::VectorXd zeros = Eigen::VectorXd::Zero(chain.dof());

    TrackResult result;
    Eigen::VectorXd q = q0;
    Eigen::VectorXd prev_action = zeros;
    Eigen::VectorXd prev_dq = zeros;

    for (std::size_t k = 0; k < targets.samples.size(); ++k) {
        const SE3Pose& target = targets.samples[k].pose;
        const SE3Pose tcp = forward_kinematics(chain, q);

        Eigen::Matrix<double, 6, 1> twist;
        twist.head<3>() = target.position - tcp.position;
        const Eigen::AngleAxisd rel(target.rotation * tcp.rotation.conjugate());
        twist.tail<3>() = rel.angle() * rel.axis();

        const Eigen::MatrixXd jac = jacobian_fd(chain, q);
        const Eigen::Matrix<double, 6, 6> gram =
            jac * jac.transpose() +
            controller.lambda_dls * controller.lambda_dls * Eigen::Matrix<double, 6, 6>::Identity();
        Eigen::VectorXd action = jac.transpose() * gram.ldlt().solve(twist);
        // Cap by uniform scaling so the step keeps its direction.
        const double peak = action.cwiseAbs().maxCoeff();
        if (peak > controller.step_cap) action *= controller.step_cap / peak;

        const Eigen::VectorXd q_next = pd_target(q, action, lower, upper);
        const Eigen::VectorXd dq = (q_next - q) / dt;
        const Eigen::VectorXd qdd = (dq - prev_dq) / dt;

        const SE3Pose tcp_next = forward_kinematics(chain, q_next);
        RewardTraceRow row;
        row.step = static_cast<int>(k);
        row.t = targets.samples[k].t;
        row.pos_err = (tcp_next.position - target.position).norm();
        row.ang_err = geodesic_angle(tcp_next.rotation, target.rotation);
        row.r_track = reward_track(tcp_next, target, reward_params);
        row.r_reg = reward_reg(zeros, action, prev_action, qdd, reward_params);
        row.r_style = style_hook ? style_hook(row.step, q_next) : 0.0;
        row.r_total = reward_total(row.r_track, row.r_reg, row.r_style);
        result.rewards.push_back(row);
        result.joint_trajectory.push_back(q_next);

        prev_action = action;
        prev_dq = dq;
        q = q_next;
    }
    return result;
}

// Six-joint desk-scale arm used by the demos and tests.
inline KinematicChain make_arm_chain() {
    KinematicChain chain;
    const auto link = [](double x, double y, double z, const Eigen::Vector3d& axis,
                         double lo, double hi) {
        ChainLink l;
        l.offset = SE3Pose(Eigen::Vector3d(x, y, z), Eigen::Quaterniond::Identity());
        l.axis = axis;
        l.lower = lo;
        l.upper = hi;
        return l;
    };
    chain.links = {
        link(0.0, 0.0, 0.10, Eigen::Vector3d::UnitZ(), -2.9, 2.9),
        link(0.0, 0.0, 0.05, Eigen::Vector3d::UnitY(), -1.8, 1.8),
        link(0.0, 0.0, 0.25, Eigen::Vector3d::UnitY(), -2.6, 2.6),
        link(0.0, 0.0, 0.20, Eigen::Vector3d::UnitZ(), -2.9, 2.9),
        link(0.0, 0.0, 0.15, Eigen::Vector3d::UnitY(), -2.0, 2.0),
        link(0.0, 0.0, 0.10, Eigen::Vector3d::UnitZ(), -2.9, 2.9),
    };
    chain.q_default = Eigen::VectorXd::Zero(6);
    return chain;
}

} // namespace mobman
