#pragma once

// Per-frame tactile skills. The *_step functions are the stateless control
// laws; the Skill classes wrap them into state machines that the harness
// drives one percept bundle at a time.

#include "fvtactile/command.hpp"
#include "fvtactile/percept.hpp"
#include "fvtactile/sim.hpp"

#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace fvt {

// ---------------------------------------------------------------------------
// Control laws

struct ForceTrackConfig {
  double f_min = 0.1;
  double f_max = 3.1;
  double v_min = 0.0;
  double v_max = 30.0;
  double eps = 0.2;

  double alpha() const { return (v_max - v_min) / (f_max - f_min); }
  void validate() const;
};

/// Per axis: sign(f_a) * clamp(alpha*(|f_a| - f_min), v_min, v_max) when
/// |f_a| > eps, else 0.
SkillCommand force_track_step(const ForceEstimate& f, const ForceTrackConfig& cfg);

struct ObjectTrackConfig {
  double delta = 2.0;      // mm per frame
  double x_max = 2.0;      // mm per frame
  double y_max = 2.0;      // mm per frame
  double xbar_eps = 5.0;   // px
  double ybar_eps = 5.0;   // px
  double m_eps = 1000.0;   // px^2
  double px_to_mm = 0.1;
  /// Axis the area term drives. Y is the form with the area term on y and
  /// the centroid term on x; X swaps the two.
  Axis tracking_axis = Axis::Y;
  Vec2 image_center{160.0, 120.0};
  double dt = 1.0 / kDefaultFrameRateHz;

  void validate() const;
};

/// Per-frame end-effector increment in mm (x, y). The centroid term is a
/// sign-preserving magnitude clamp: sign(c) * min(|c| * px_to_mm, max).
Vec2 object_track_increment(const ObjectPercept& p, const ObjectTrackConfig& cfg);
/// Increment divided by dt; absent object gives zero motion and lost_object.
SkillCommand object_track_step(const ObjectPercept& p, const ObjectTrackConfig& cfg);

struct ArmRotConfig {
  double k_tau = 0.005;  // rad/s per px^2
  double eps_tau = 3.0; // px^2
};

SkillCommand arm_rot_step(const TorqueEstimate& tau, const ArmRotConfig& cfg);

struct LeakyConfig {
  double leak_alpha = 0.9;
  double min_opening = 0.0;
  double max_opening = 80.0;

  void validate() const;
};

/// alpha * x_prev - (1 - alpha) * L, clamped to [min_opening, max_opening].
/// The fixed point is -L.
double leaky_step(double x_prev, double L, const LeakyConfig& cfg);

struct HandoverConfig {
  double force_threshold = 1.0;
  double hysteresis = 0.1;  // force turns on above (1 + h) * threshold
  double close_opening = 0.0;
  double open_opening = 80.0;
  LeakyConfig leaky{0.8, 0.0, 80.0};
  int debounce = 3;
};

/// Slip AND force gate with hysteresis on the force channel.
///
/// The force flag switches on when |f| > (1 + hysteresis) * threshold and off
/// when |f| <= threshold, so whenever it is on |f| > threshold holds. The
/// closing set point is returned only when slip is active in the same frame.
class HandoverTrigger {
 public:
  explicit HandoverTrigger(HandoverConfig cfg = {});

  /// Returns the leaky set point L (-opening).
  double step(const SlipSignal& slip, const ForceEstimate& f);
  bool force_active() const { return force_on_; }
  bool closing() const { return closing_; }
  const HandoverConfig& config() const { return cfg_; }

 private:
  HandoverConfig cfg_;
  bool force_on_ = false;
  bool closing_ = false;
};

// ---------------------------------------------------------------------------
// Skill state machines

enum class SkillStatus { Running, Done, Failed };

std::string_view status_name(SkillStatus s);

class Skill {
 public:
  virtual ~Skill() = default;
  virtual std::string name() const = 0;
  virtual SkillCommand step(const PerceptBundle& p, const PlantState& plant) = 0;
  virtual SkillStatus status() const { return SkillStatus::Running; }
  /// Named conditions raised during the episode (e.g. "possible_stall").
  virtual std::vector<std::string> flags() const { return {}; }
  /// Internal state for logging.
  virtual std::map<std::string, double> state() const { return {}; }
  bool has_flag(const std::string& flag) const;
};

class ForceTrackSkill : public Skill {
 public:
  explicit ForceTrackSkill(ForceTrackConfig cfg = {});
  std::string name() const override { return "force-track"; }
  SkillCommand step(const PerceptBundle& p, const PlantState& plant) override;
  const ForceTrackConfig& config() const { return cfg_; }

 private:
  ForceTrackConfig cfg_;
};

class ObjectTrackSkill : public Skill {
 public:
  explicit ObjectTrackSkill(ObjectTrackConfig cfg = {});
  std::string name() const override { return "object-track"; }
  SkillCommand step(const PerceptBundle& p, const PlantState& plant) override;
  std::vector<std::string> flags() const override;
  ObjectTrackConfig& config() { return cfg_; }

 private:
  ObjectTrackConfig cfg_;
  bool lost_ = false;
};

struct ArmRotSkillConfig {
  ArmRotConfig law;
  /// Long enough for the lagging torque estimate to recover after the
  /// filter overshoots the decay.
  int settle_frames = 12;
  int max_frames = 300;
  /// Rotation the task expects to need; a converged run that ends farther
  /// than stall_tolerance from it is flagged possible_stall.
  std::optional<double> expected_rotation;
  double stall_tolerance = 10.0 * std::numbers::pi / 180.0;
};

class ArmRotSkill : public Skill {
 public:
  explicit ArmRotSkill(ArmRotSkillConfig cfg = {});
  std::string name() const override { return "arm-rot"; }
  SkillCommand step(const PerceptBundle& p, const PlantState& plant) override;
  SkillStatus status() const override { return status_; }
  std::vector<std::string> flags() const override;
  std::map<std::string, double> state() const override;

 private:
  ArmRotSkillConfig cfg_;
  SkillStatus status_ = SkillStatus::Running;
  int settled_ = 0;
  int frames_ = 0;
  double start_rotation_ = 0.0;
  double last_rotation_ = 0.0;
  bool stall_ = false;
};

class HandoverSkill : public Skill {
 public:
  explicit HandoverSkill(HandoverConfig cfg = {});
  std::string name() const override { return "handover"; }
  SkillCommand step(const PerceptBundle& p, const PlantState& plant) override;
  SkillStatus status() const override { return status_; }
  std::map<std::string, double> state() const override;

 private:
  HandoverTrigger trigger_;
  std::optional<double> x_;
  int closing_run_ = 0;
  bool latched_ = false;
  double last_L_ = 0.0;
  SkillStatus status_ = SkillStatus::Running;
};

enum class InHandMode { Torque, Slip };

struct InHandRotConfig {
  InHandMode mode = InHandMode::Torque;
  double eps_tau = 3.0;  // px^2
  LeakyConfig leaky{0.9, 0.0, 80.0};
  double open_opening = 10.0;
  double regrip_opening = 8.0;
  int stop_frames = 5;
  int max_frames = 300;
  /// Orientation the object should reach in the image, rad.
  double expected_angle = std::numbers::pi / 2.0;
  double stall_tolerance = 10.0 * std::numbers::pi / 180.0;
};

/// Opens the gripper through the leaky integrator while the stop condition
/// (|tau| <= eps in torque mode, slip active in slip mode) is false and
/// regrips once it has held for stop_frames consecutive frames.
class InHandRotSkill : public Skill {
 public:
  explicit InHandRotSkill(InHandRotConfig cfg = {});
  std::string name() const override { return "in-hand-rot"; }
  SkillCommand step(const PerceptBundle& p, const PlantState& plant) override;
  SkillStatus status() const override { return status_; }
  std::vector<std::string> flags() const override;
  std::map<std::string, double> state() const override;

  int frames() const { return frames_; }
  double final_torque() const { return last_tau_; }
  std::optional<double> final_orientation() const { return last_theta_; }

 private:
  InHandRotConfig cfg_;
  SkillStatus status_ = SkillStatus::Running;
  std::optional<double> x_;
  int run_ = 0;
  int frames_ = 0;
  double last_tau_ = 0.0;
  std::optional<double> last_theta_;
  bool stall_ = false;
};

struct VisScanConfig {
  Axis axis = Axis::X;
  double speed = 15.0;  // mm/s
  /// Default: half the image area.
  std::optional<double> area_floor;
  int debounce = 3;
  double workspace_limit = 200.0;  // mm along the scan axis
  int max_frames = 2000;
};

struct VisScanResult {
  double entry = 0.0;
  double boundary = 0.0;
  double extent = 0.0;
  bool at_workspace_limit = false;
};

/// Constant-velocity scan along an axis while the object area stays at or
/// above the floor. The boundary is the end-effector position at the first
/// of `debounce` consecutive frames with M < floor. Throws
/// Error("nothing_to_scan") if the object is not in view on the first frame.
class VisScanSkill : public Skill {
 public:
  explicit VisScanSkill(VisScanConfig cfg = {}, double image_area = 320.0 * 240.0);
  std::string name() const override { return "vis-scan"; }
  SkillCommand step(const PerceptBundle& p, const PlantState& plant) override;
  SkillStatus status() const override { return status_; }
  std::vector<std::string> flags() const override;
  std::map<std::string, double> state() const override;
  const VisScanResult& result() const { return result_; }

 private:
  VisScanConfig cfg_;
  double floor_;
  SkillStatus status_ = SkillStatus::Running;
  VisScanResult result_;
  int frames_ = 0;
  int below_ = 0;
  double candidate_ = 0.0;
};

struct GentleGraspConfig {
  double grip_force_target = 2.0;  // f_z, px-units
  double contact_eps = 0.3;        // f_z above this counts as contact
  LeakyConfig leaky{0.995, 0.0, 80.0};
  /// Closing set point; below zero so the clamp ends the approach in finite time.
  double close_opening = -5.0;
  double empty_opening = 0.5;  // closing below this without contact = no object
  int max_frames = 2000;
};

/// Closes slowly through the leaky integrator until the normal channel shows
/// contact and reaches the grip target. Throws Error("no_object") when the
/// gripper closes without any contact.
class GentleGraspSkill : public Skill {
 public:
  explicit GentleGraspSkill(GentleGraspConfig cfg = {});
  std::string name() const override { return "gentle-grasp"; }
  SkillCommand step(const PerceptBundle& p, const PlantState& plant) override;
  SkillStatus status() const override { return status_; }
  std::map<std::string, double> state() const override;
  double final_opening() const { return x_.value_or(0.0); }
  double final_force() const { return last_force_; }

 private:
  GentleGraspConfig cfg_;
  SkillStatus status_ = SkillStatus::Running;
  std::optional<double> x_;
  double last_force_ = 0.0;
  int frames_ = 0;
};

struct HoldConfig {
  double increment = 0.5;  // mm per slipping frame
  double min_opening = 0.0;
};

/// Tightens the opening set point while slip is active.
class HoldSkill : public Skill {
 public:
  explicit HoldSkill(HoldConfig cfg = {});
  std::string name() const override { return "hold"; }
  SkillCommand step(const PerceptBundle& p, const PlantState& plant) override;
  std::vector<std::string> flags() const override;
  std::map<std::string, double> state() const override;
  double opening() const { return opening_.value_or(0.0); }

 private:
  HoldConfig cfg_;
  std::optional<double> opening_;
  bool cannot_hold_ = false;
};

struct DescendConfig {
  double speed = 20.0;            // mm/s, downwards
  double contact_threshold = 1.0; // f_z
  int debounce = 3;
  int max_frames = 600;
};

/// Moves down until f_z exceeds the threshold for `debounce` frames; the
/// contact height is the end-effector z at the first of those frames.
class DescendSkill : public Skill {
 public:
  explicit DescendSkill(DescendConfig cfg = {});
  std::string name() const override { return "descend"; }
  SkillCommand step(const PerceptBundle& p, const PlantState& plant) override;
  SkillStatus status() const override { return status_; }
  std::map<std::string, double> state() const override;
  double contact_height() const { return contact_height_; }

 private:
  DescendConfig cfg_;
  SkillStatus status_ = SkillStatus::Running;
  int run_ = 0;
  int frames_ = 0;
  double candidate_ = 0.0;
  double contact_height_ = 0.0;
};

/// Names accepted by make_skill / the CLI.
const std::vector<std::string>& skill_names();

}  // namespace fvt
