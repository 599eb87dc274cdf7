#pragma once

#include "fvtactile/core.hpp"

#include <cmath>
#include <optional>

namespace fvt {

/// Per-frame output of every skill.
///
/// ee_velocity is in mm/s, ee_rot_velocity in rad/s; gripper_target is an
/// absolute opening in mm (none = leave the gripper where it is).
struct SkillCommand {
  Vec3 ee_velocity = Vec3::Zero();
  double ee_rot_velocity = 0.0;
  std::optional<double> gripper_target;

  bool lost_object = false;
  bool converged = false;

  bool is_finite() const {
    return ee_velocity.allFinite() && std::isfinite(ee_rot_velocity) &&
           (!gripper_target || std::isfinite(*gripper_target));
  }
  bool is_zero_motion() const { return ee_velocity.isZero(0.0) && ee_rot_velocity == 0.0; }
};

}  // namespace fvt
