#pragma once
//
// Rigid-body math shared by every module: SE(3) poses backed by unit
// quaternions, the 6D rotation encoding used at policy boundaries,
// geodesic angles, interpolation, and closed-form 2D rigid alignment.
//

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cmath>
#include <utility>
#include <vector>

#include "mobman/errors.hpp"

namespace mobman {

inline constexpr double kPi = 3.14159265358979323846;

// Wrap an angle to (-pi, pi].
inline double wrap_angle(double a) {
    a = std::fmod(a, 2.0 * kPi);
    if (a <= -kPi) a += 2.0 * kPi;
    if (a > kPi) a -= 2.0 * kPi;
    return a;
}

// Normalize and force w >= 0 so equal rotations compare equal.
inline Eigen::Quaterniond canonicalize(const Eigen::Quaterniond& q) {
    Eigen::Quaterniond r = q.normalized();
    if (r.w() < 0.0) r.coeffs() = -r.coeffs();
    return r;
}

// Rigid transform: x_world = rotation * x_local + position.
struct SE3Pose {
    Eigen::Vector3d position{0.0, 0.0, 0.0};
    Eigen::Quaterniond rotation{1.0, 0.0, 0.0, 0.0};  // unit, w >= 0

    SE3Pose() = default;
    SE3Pose(const Eigen::Vector3d& p, const Eigen::Quaterniond& q)
        : position(p), rotation(canonicalize(q)) {}

    static SE3Pose identity() { return SE3Pose{}; }

    Eigen::Matrix4d to_matrix() const {
        Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
        m.block<3, 3>(0, 0) = rotation.toRotationMatrix();
        m.block<3, 1>(0, 3) = position;
        return m;
    }
};

inline SE3Pose se3_compose(const SE3Pose& a, const SE3Pose& b) {
    return SE3Pose(a.position + a.rotation * b.position,
                   a.rotation * b.rotation);
}

inline SE3Pose se3_inverse(const SE3Pose& a) {
    Eigen::Quaterniond inv = a.rotation.conjugate();
    return SE3Pose(-(inv * a.position), inv);
}

// Angle of the relative rotation r1 * r2^-1, in [0, pi]. Computed through
// the quaternion product; equals acos((trace(R1*R2^T) - 1) / 2) clamped to
// valid range, but atan2 keeps precision near 0 and pi.
inline double geodesic_angle(const Eigen::Quaterniond& r1, const Eigen::Quaterniond& r2) {
    Eigen::Quaterniond d = r1.normalized().conjugate() * r2.normalized();
    return 2.0 * std::atan2(d.vec().norm(), std::abs(d.w()));
}

inline double geodesic_angle(const Eigen::Matrix3d& r1, const Eigen::Matrix3d& r2) {
    return geodesic_angle(Eigen::Quaterniond(r1), Eigen::Quaterniond(r2));
}

// First two columns of the rotation matrix, column-major.
struct Rot6D {
    std::array<double, 6> v{1.0, 0.0, 0.0, 0.0, 1.0, 0.0};
};

inline Rot6D rot_to_6d(const Eigen::Quaterniond& r) {
    Eigen::Matrix3d m = canonicalize(r).toRotationMatrix();
    Rot6D out;
    out.v = {m(0, 0), m(1, 0), m(2, 0), m(0, 1), m(1, 1), m(2, 1)};
    return out;
}

// Gram-Schmidt decode. Throws DegenerateRotation6D when a column is
// near-zero or the columns are near-parallel.
inline Eigen::Quaterniond rot6d_to_rot(const Rot6D& v) {
    Eigen::Vector3d c1(v.v[0], v.v[1], v.v[2]);
    Eigen::Vector3d c2(v.v[3], v.v[4], v.v[5]);
    constexpr double eps = 1e-6;
    if (c1.norm() <= eps || c2.norm() <= eps)
        throw DegenerateRotation6D("rot6d_to_rot: near-zero column");
    Eigen::Vector3d b1 = c1.normalized();
    Eigen::Vector3d r2 = c2 - c2.dot(b1) * b1;
    if (r2.norm() <= eps)
        throw DegenerateRotation6D("rot6d_to_rot: columns near-parallel");
    Eigen::Vector3d b2 = r2.normalized();
    Eigen::Vector3d b3 = b1.cross(b2);
    Eigen::Matrix3d m;
    m.col(0) = b1;
    m.col(1) = b2;
    m.col(2) = b3;
    return canonicalize(Eigen::Quaterniond(m));
}

// Planar rigid transform: x' = R(theta) * x + t, theta in (-pi, pi].
struct Transform2D {
    double theta = 0.0;
    Eigen::Vector2d translation{0.0, 0.0};

    Eigen::Vector2d apply(const Eigen::Vector2d& p) const {
        const double c = std::cos(theta), s = std::sin(theta);
        return {c * p.x() - s * p.y() + translation.x(),
                s * p.x() + c * p.y() + translation.y()};
    }
};

// Closed-form least squares over point pairs (source -> target): centroids
// out, rotation from the atan2 of the 2x2 cross-covariance, translation to
// re-center. A single pair pins translation only (rotation unobservable).
inline std::pair<Transform2D, double> rigid_align_2d(
    const std::vector<std::pair<Eigen::Vector2d, Eigen::Vector2d>>& pairs) {
    if (pairs.empty())
        throw EmptyCorrespondences("rigid_align_2d: no point pairs");

    Transform2D tf;
    if (pairs.size() == 1) {
        tf.theta = 0.0;
        tf.translation = pairs[0].second - pairs[0].first;
        return {tf, 0.0};
    }

    Eigen::Vector2d cs = Eigen::Vector2d::Zero();
    Eigen::Vector2d ct = Eigen::Vector2d::Zero();
    for (const auto& [s, t] : pairs) {
        cs += s;
        ct += t;
    }
    const double n = static_cast<double>(pairs.size());
    cs /= n;
    ct /= n;

    double sxx = 0.0;  // sum of dot products of centered pairs
    double sxy = 0.0;  // sum of 2D cross products of centered pairs
    for (const auto& [s, t] : pairs) {
        const Eigen::Vector2d a = s - cs;
        const Eigen::Vector2d b = t - ct;
        sxx += a.x() * b.x() + a.y() * b.y();
        sxy += a.x() * b.y() - a.y() * b.x();
    }
    // All-coincident sources degenerate to pure translation.
    tf.theta = (sxx == 0.0 && sxy == 0.0) ? 0.0 : wrap_angle(std::atan2(sxy, sxx));

    const double c = std::cos(tf.theta), s = std::sin(tf.theta);
    tf.translation =
        ct - Eigen::Vector2d(c * cs.x() - s * cs.y(), s * cs.x() + c * cs.y());

    double sq = 0.0;
    for (const auto& [src, dst] : pairs) sq += (tf.apply(src) - dst).squaredNorm();
    return {tf, std::sqrt(sq / n)};
}

// Shortest-arc spherical interpolation; u = 0 gives r1, u = 1 gives r2.
inline Eigen::Quaterniond slerp(const Eigen::Quaterniond& r1, const Eigen::Quaterniond& r2,
                                double u) {
    return canonicalize(r1.normalized().slerp(u, r2.normalized()));
}

inline Eigen::Vector3d lerp3(const Eigen::Vector3d& p1, const Eigen::Vector3d& p2, double u) {
    return (1.0 - u) * p1 + u * p2;
}

// Axis-angle rotation helper (axis must be unit norm).
inline Eigen::Quaterniond axis_rotation(const Eigen::Vector3d& axis, double angle) {
    return canonicalize(Eigen::Quaterniond(Eigen::AngleAxisd(angle, axis)));
}

inline Eigen::Quaterniond rot_z(double angle) {
    return axis_rotation(Eigen::Vector3d::UnitZ(), angle);
}

} // namespace mobman
