#pragma once
//
// Discrete navigation actions and their fixed velocity mapping.
//

#include <string>

#include "mobman/errors.hpp"
#include "mobman/geometry.hpp"
#include "mobman/world.hpp"

namespace mobman {

enum class DiscreteAction { MoveForward = 0, TurnLeft = 1, TurnRight = 2, Stop = 3 };

inline const char* to_string(DiscreteAction a) {
    switch (a) {
        case DiscreteAction::MoveForward: return "move_forward";
        case DiscreteAction::TurnLeft: return "turn_left";
        case DiscreteAction::TurnRight: return "turn_right";
        case DiscreteAction::Stop: return "stop";
    }
    return "stop";
}

inline DiscreteAction action_from_string(const std::string& s) {
    if (s == "move_forward") return DiscreteAction::MoveForward;
    if (s == "turn_left") return DiscreteAction::TurnLeft;
    if (s == "turn_right") return DiscreteAction::TurnRight;
    if (s == "stop") return DiscreteAction::Stop;
    throw Error("unknown action name: " + s);
}

// Fixed mapping to continuous velocity commands: 0.1 m/s forward,
// +/- pi/12 rad/s turning, zero for stop.
inline VelocityCommand action_to_velocity(DiscreteAction a) {
    switch (a) {
        case DiscreteAction::MoveForward: return {0.1, 0.0};
        case DiscreteAction::TurnLeft: return {0.0, kPi / 12.0};
        case DiscreteAction::TurnRight: return {0.0, -kPi / 12.0};
        case DiscreteAction::Stop: return {0.0, 0.0};
    }
    return {0.0, 0.0};
}

// Hold one velocity command for a full decision tick, integrating the
// unicycle at the control rate with wall blocking. Returns the final pose.
inline RobotPose simulate_decision_tick(const WorldModel& world, const RobotPose& pose,
                                        DiscreteAction action, double decision_dt,
                                        double control_dt) {
    const VelocityCommand cmd = action_to_velocity(action);
    const int substeps = static_cast<int>(std::llround(decision_dt / control_dt));
    RobotPose p = pose;
    for (int i = 0; i < substeps; ++i) p = step_unicycle(world, p, cmd, control_dt);
    return p;
}

} // namespace mobman
