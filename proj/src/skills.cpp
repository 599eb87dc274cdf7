#include "fvtactile/skills.hpp"

#include <algorithm>
#include <cmath>

namespace fvt {

namespace {

double sgn(double v) { return (v > 0.0) - (v < 0.0); }

// Smallest signed difference between two line orientations (period pi).
double orientation_gap(double a, double b) {
  double d = std::fmod(a - b, std::numbers::pi);
  if (d > std::numbers::pi / 2.0) d -= std::numbers::pi;
  if (d < -std::numbers::pi / 2.0) d += std::numbers::pi;
  return d;
}

}  // namespace

// ---------------------------------------------------------------------------
// Control laws

void ForceTrackConfig::validate() const {
  if (!(f_max > f_min && f_min >= 0.0 && v_max > v_min && v_min >= 0.0 && eps > 0.0)) {
    throw Error("invalid_argument",
                "force-track config needs f_max > f_min >= 0, v_max > v_min >= 0, eps > 0");
  }
}

SkillCommand force_track_step(const ForceEstimate& f, const ForceTrackConfig& cfg) {
  cfg.validate();
  SkillCommand cmd;
  const double alpha = cfg.alpha();
  for (int a = 0; a < 3; ++a) {
    const double m = std::abs(f.f(a));
    if (m > cfg.eps) {
      cmd.ee_velocity(a) = sgn(f.f(a)) * std::clamp(alpha * (m - cfg.f_min), cfg.v_min, cfg.v_max);
    }
  }
  return cmd;
}

void ObjectTrackConfig::validate() const {
  if (!(delta > 0.0 && x_max > 0.0 && y_max > 0.0 && xbar_eps > 0.0 && ybar_eps > 0.0 &&
        m_eps > 0.0 && px_to_mm > 0.0 && dt > 0.0)) {
    throw Error("invalid_argument", "object-track parameters must be positive");
  }
  if (tracking_axis == Axis::Z) {
    throw Error("invalid_argument", "object-track can only track along x or y");
  }
}

Vec2 object_track_increment(const ObjectPercept& p, const ObjectTrackConfig& cfg) {
  cfg.validate();
  if (!p.present) return Vec2::Zero();
  const double area_term = p.area <= cfg.m_eps ? cfg.delta : -cfg.delta;
  auto centroid_term = [&](double offset_px, double eps_px, double max_mm) {
    if (std::abs(offset_px) <= eps_px) return 0.0;
    return sgn(offset_px) * std::min(std::abs(offset_px) * cfg.px_to_mm, max_mm);
  };
  if (cfg.tracking_axis == Axis::Y) {
    return {centroid_term(p.x - cfg.image_center.x(), cfg.xbar_eps, cfg.x_max), area_term};
  }
  return {area_term, centroid_term(p.y - cfg.image_center.y(), cfg.ybar_eps, cfg.y_max)};
}

SkillCommand object_track_step(const ObjectPercept& p, const ObjectTrackConfig& cfg) {
  SkillCommand cmd;
  if (!p.present) {
    cfg.validate();
    cmd.lost_object = true;
    return cmd;
  }
  const Vec2 inc = object_track_increment(p, cfg);
  cmd.ee_velocity.head<2>() = inc / cfg.dt;
  return cmd;
}

SkillCommand arm_rot_step(const TorqueEstimate& tau, const ArmRotConfig& cfg) {
  SkillCommand cmd;
  if (std::abs(tau.tau_z) > cfg.eps_tau) {
    cmd.ee_rot_velocity = -cfg.k_tau * tau.tau_z;
  } else {
    cmd.converged = true;
  }
  return cmd;
}

void LeakyConfig::validate() const {
  if (!(leak_alpha > 0.0 && leak_alpha < 1.0)) {
    throw Error("invalid_argument", "leak_alpha must be in (0, 1)");
  }
  if (!(max_opening >= min_opening)) {
    throw Error("invalid_argument", "max_opening must be >= min_opening");
  }
}

double leaky_step(double x_prev, double L, const LeakyConfig& cfg) {
  cfg.validate();
  if (!std::isfinite(x_prev) || !std::isfinite(L)) {
    throw Error("invalid_argument", "leaky_step inputs must be finite");
  }
  const double x = cfg.leak_alpha * x_prev - (1.0 - cfg.leak_alpha) * L;
  return std::clamp(x, cfg.min_opening, cfg.max_opening);
}

HandoverTrigger::HandoverTrigger(HandoverConfig cfg) : cfg_(cfg) {
  if (!(cfg_.force_threshold > 0.0) || !(cfg_.hysteresis >= 0.0)) {
    throw Error("invalid_argument", "handover threshold must be positive");
  }
}

double HandoverTrigger::step(const SlipSignal& slip, const ForceEstimate& f) {
  const double m = f.f.norm();
  if (force_on_) {
    if (m <= cfg_.force_threshold) force_on_ = false;
  } else if (m > (1.0 + cfg_.hysteresis) * cfg_.force_threshold) {
    force_on_ = true;
  }
  closing_ = slip.active && force_on_;
  return closing_ ? -cfg_.close_opening : -cfg_.open_opening;
}

// ---------------------------------------------------------------------------
// Skill state machines

std::string_view status_name(SkillStatus s) {
  switch (s) {
    case SkillStatus::Running:
      return "running";
    case SkillStatus::Done:
      return "done";
    case SkillStatus::Failed:
      return "failed";
  }
  return "?";
}

bool Skill::has_flag(const std::string& flag) const {
  const auto f = flags();
  return std::find(f.begin(), f.end(), flag) != f.end();
}

ForceTrackSkill::ForceTrackSkill(ForceTrackConfig cfg) : cfg_(cfg) { cfg_.validate(); }

SkillCommand ForceTrackSkill::step(const PerceptBundle& p, const PlantState&) {
  return force_track_step(p.force, cfg_);
}

ObjectTrackSkill::ObjectTrackSkill(ObjectTrackConfig cfg) : cfg_(cfg) { cfg_.validate(); }

SkillCommand ObjectTrackSkill::step(const PerceptBundle& p, const PlantState&) {
  SkillCommand cmd = object_track_step(p.object, cfg_);
  lost_ = lost_ || cmd.lost_object;
  return cmd;
}

std::vector<std::string> ObjectTrackSkill::flags() const {
  if (lost_) return {"lost_object"};
  return {};
}

ArmRotSkill::ArmRotSkill(ArmRotSkillConfig cfg) : cfg_(cfg) {}

SkillCommand ArmRotSkill::step(const PerceptBundle& p, const PlantState& plant) {
  if (frames_ == 0) start_rotation_ = plant.ee_rotation;
  ++frames_;
  last_rotation_ = plant.ee_rotation - start_rotation_;
  SkillCommand cmd = arm_rot_step(p.torque, cfg_.law);
  settled_ = cmd.converged ? settled_ + 1 : 0;
  if (settled_ >= cfg_.settle_frames) {
    status_ = SkillStatus::Done;
    if (cfg_.expected_rotation &&
        std::abs(last_rotation_ - *cfg_.expected_rotation) > cfg_.stall_tolerance) {
      stall_ = true;
    }
  } else if (frames_ >= cfg_.max_frames) {
    status_ = SkillStatus::Failed;
  }
  return cmd;
}

std::vector<std::string> ArmRotSkill::flags() const {
  if (stall_) return {"possible_stall"};
  return {};
}

std::map<std::string, double> ArmRotSkill::state() const {
  return {{"rotation", last_rotation_}, {"settled", settled_}};
}

HandoverSkill::HandoverSkill(HandoverConfig cfg) : trigger_(cfg) {}

SkillCommand HandoverSkill::step(const PerceptBundle& p, const PlantState& plant) {
  const auto& cfg = trigger_.config();
  if (!x_) x_ = plant.gripper_opening;
  double L = trigger_.step(p.slip, p.force);
  closing_run_ = trigger_.closing() ? closing_run_ + 1 : 0;
  if (closing_run_ >= cfg.debounce) latched_ = true;
  // Once the trigger has held for the debounce window the grasp is committed;
  // slip stops as soon as the object is held, which must not reopen the hand.
  if (latched_) L = -cfg.close_opening;
  last_L_ = L;
  x_ = leaky_step(*x_, L, cfg.leaky);
  if (latched_ && *x_ <= cfg.close_opening + 0.5) status_ = SkillStatus::Done;
  SkillCommand cmd;
  cmd.gripper_target = *x_;
  return cmd;
}

std::map<std::string, double> HandoverSkill::state() const {
  return {{"x", x_.value_or(0.0)},
          {"L", last_L_},
          {"force_active", trigger_.force_active() ? 1.0 : 0.0},
          {"trigger", trigger_.closing() ? 1.0 : 0.0},
          {"latched", latched_ ? 1.0 : 0.0}};
}

InHandRotSkill::InHandRotSkill(InHandRotConfig cfg) : cfg_(cfg) { cfg_.leaky.validate(); }

SkillCommand InHandRotSkill::step(const PerceptBundle& p, const PlantState& plant) {
  SkillCommand cmd;
  if (status_ != SkillStatus::Running) {
    cmd.gripper_target = cfg_.regrip_opening;
    return cmd;
  }
  if (!x_) x_ = plant.gripper_opening;
  ++frames_;
  last_tau_ = p.torque.tau_z;
  if (p.object.present) last_theta_ = p.object.theta;
  const bool stop = cfg_.mode == InHandMode::Torque ? std::abs(p.torque.tau_z) <= cfg_.eps_tau
                                                    : p.slip.active;
  run_ = stop ? run_ + 1 : 0;
  if (run_ >= cfg_.stop_frames) {
    status_ = SkillStatus::Done;
    x_ = cfg_.regrip_opening;
    if (last_theta_ &&
        std::abs(orientation_gap(*last_theta_, cfg_.expected_angle)) > cfg_.stall_tolerance) {
      stall_ = true;
    }
  } else {
    x_ = leaky_step(*x_, -cfg_.open_opening, cfg_.leaky);
    if (frames_ >= cfg_.max_frames) status_ = SkillStatus::Failed;
  }
  cmd.gripper_target = *x_;
  cmd.converged = status_ == SkillStatus::Done;
  return cmd;
}

std::vector<std::string> InHandRotSkill::flags() const {
  std::vector<std::string> f;
  if (stall_) f.push_back("possible_stall");
  if (status_ == SkillStatus::Failed) f.push_back("timeout");
  return f;
}

std::map<std::string, double> InHandRotSkill::state() const {
  return {{"x", x_.value_or(0.0)},
          {"stop_run", run_},
          {"orientation", last_theta_.value_or(0.0)}};
}

VisScanSkill::VisScanSkill(VisScanConfig cfg, double image_area)
    : cfg_(cfg), floor_(cfg.area_floor.value_or(image_area / 2.0)) {
  if (cfg_.axis == Axis::Z) throw Error("invalid_argument", "vis-scan axis must be x or y");
  if (!(floor_ >= 0.0)) throw Error("invalid_argument", "area_floor must be >= 0");
}

SkillCommand VisScanSkill::step(const PerceptBundle& p, const PlantState& plant) {
  SkillCommand cmd;
  const int a = static_cast<int>(cfg_.axis);
  const double pos = plant.ee_position(a);
  if (status_ != SkillStatus::Running) return cmd;
  if (frames_ == 0) {
    if (!p.object.present) throw Error("nothing_to_scan", "no object in view at scan start");
    result_.entry = pos;
  }
  ++frames_;
  if (p.object.area < floor_) {
    if (below_ == 0) candidate_ = pos;
    ++below_;
  } else {
    below_ = 0;
  }
  if (below_ >= cfg_.debounce) {
    status_ = SkillStatus::Done;
    result_.boundary = candidate_;
  } else if (std::abs(pos - result_.entry) >= std::abs(cfg_.workspace_limit - result_.entry)) {
    status_ = SkillStatus::Done;
    result_.boundary = pos;
    result_.at_workspace_limit = true;
  } else if (frames_ >= cfg_.max_frames) {
    status_ = SkillStatus::Failed;
  }
  if (status_ == SkillStatus::Done) {
    result_.extent = std::abs(result_.boundary - result_.entry);
    return cmd;
  }
  cmd.ee_velocity(a) = cfg_.workspace_limit >= result_.entry ? cfg_.speed : -cfg_.speed;
  return cmd;
}

std::vector<std::string> VisScanSkill::flags() const {
  if (result_.at_workspace_limit) return {"at_workspace_limit"};
  return {};
}

std::map<std::string, double> VisScanSkill::state() const {
  return {{"below_floor", below_}, {"area_floor", floor_}, {"entry", result_.entry}};
}

GentleGraspSkill::GentleGraspSkill(GentleGraspConfig cfg) : cfg_(cfg) {
  cfg_.leaky.validate();
  if (!(cfg_.grip_force_target >= 0.0) || !(cfg_.contact_eps >= 0.0)) {
    throw Error("invalid_argument", "grip target and contact eps must be >= 0");
  }
}

SkillCommand GentleGraspSkill::step(const PerceptBundle& p, const PlantState& plant) {
  SkillCommand cmd;
  if (!x_) x_ = plant.gripper_opening;
  if (status_ != SkillStatus::Running) {
    cmd.gripper_target = *x_;
    return cmd;
  }
  ++frames_;
  last_force_ = p.force.f.z();
  const bool contact = last_force_ > cfg_.contact_eps;
  if (contact && last_force_ >= cfg_.grip_force_target) {
    status_ = SkillStatus::Done;
  } else {
    if (!contact && *x_ <= cfg_.empty_opening) {
      status_ = SkillStatus::Failed;
      throw Error("no_object", "gripper closed without touching an object");
    }
    x_ = leaky_step(*x_, -cfg_.close_opening, cfg_.leaky);
    if (frames_ >= cfg_.max_frames) status_ = SkillStatus::Failed;
  }
  cmd.gripper_target = *x_;
  return cmd;
}

std::map<std::string, double> GentleGraspSkill::state() const {
  return {{"x", x_.value_or(0.0)}, {"grip_signal", last_force_}};
}

HoldSkill::HoldSkill(HoldConfig cfg) : cfg_(cfg) {
  if (!(cfg_.increment > 0.0)) throw Error("invalid_argument", "hold increment must be positive");
}

SkillCommand HoldSkill::step(const PerceptBundle& p, const PlantState& plant) {
  if (!opening_) opening_ = plant.gripper_opening;
  if (p.slip.active) {
    if (*opening_ <= cfg_.min_opening) {
      cannot_hold_ = true;
    } else {
      opening_ = std::max(cfg_.min_opening, *opening_ - cfg_.increment);
    }
  }
  SkillCommand cmd;
  cmd.gripper_target = *opening_;
  return cmd;
}

std::vector<std::string> HoldSkill::flags() const {
  if (cannot_hold_) return {"cannot_hold"};
  return {};
}

std::map<std::string, double> HoldSkill::state() const {
  return {{"opening", opening_.value_or(0.0)}};
}

DescendSkill::DescendSkill(DescendConfig cfg) : cfg_(cfg) {}

SkillCommand DescendSkill::step(const PerceptBundle& p, const PlantState& plant) {
  SkillCommand cmd;
  if (status_ != SkillStatus::Running) return cmd;
  ++frames_;
  if (p.force.f.z() > cfg_.contact_threshold) {
    if (run_ == 0) candidate_ = plant.ee_position.z();
    ++run_;
  } else {
    run_ = 0;
  }
  if (run_ >= cfg_.debounce) {
    status_ = SkillStatus::Done;
    contact_height_ = candidate_;
    return cmd;
  }
  if (frames_ >= cfg_.max_frames) {
    status_ = SkillStatus::Failed;
    return cmd;
  }
  cmd.ee_velocity.z() = -cfg_.speed;
  return cmd;
}

std::map<std::string, double> DescendSkill::state() const {
  return {{"contact_run", run_}, {"contact_height", contact_height_}};
}

const std::vector<std::string>& skill_names() {
  static const std::vector<std::string> names = {"force-track", "object-track", "arm-rot",
                                                 "handover",    "in-hand-rot",  "vis-scan",
                                                 "gentle-grasp", "hold",        "descend"};
  return names;
}

}  // namespace fvt
