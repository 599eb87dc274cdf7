#pragma once

// Deterministic stand-in for the physical world: linear elastic skin,
// silhouette rendering, gripper/end-effector plant and scripted scenarios.

#include "fvtactile/command.hpp"
#include "fvtactile/core.hpp"

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fvt {

struct AppliedWrench {
  Vec3 f = Vec3::Zero();  // (x, y) tangential, z normal; force-units
  double tau_z = 0.0;     // torque-units about the sensor normal

  AppliedWrench operator+(const AppliedWrench& o) const { return {f + o.f, tau_z + o.tau_z}; }
  AppliedWrench operator*(double k) const { return {f * k, tau_z * k}; }
};

struct SkinModel {
  double c_shear = 1.0;    // px per force-unit
  double c_rot = 0.02;     // px per torque-unit per px of lever arm
  double c_normal = 0.1;   // relative marker-size gain per force-unit
  double stiction_threshold = 0.0;  // torque-units absorbed before the skin twists
  double noise_sigma = 0.5;         // px, per marker coordinate
  double max_force = 10.0;   // saturation on |f|
  double max_torque = 5.0;   // saturation on |tau_z|

  void validate() const;
};

/// Marker positions and sizes produced by a wrench.
///
/// p_i + c_shear*(f_x, f_y) + c_rot*tau_z*perp(r_i) + N(0, noise_sigma^2) and
/// s_0*(1 + c_normal*f_z). Throws Error("saturation") beyond the skin limits.
std::vector<MarkerObservation> deform_markers(const SensorGeometry& geometry,
                                              const SkinModel& skin,
                                              const AppliedWrench& wrench, Rng& rng);

// ---------------------------------------------------------------------------
// Scene objects and rendering

enum class ShapeKind { Rectangle, Disk };

struct SceneObject {
  ShapeKind shape = ShapeKind::Rectangle;
  double half_length = 10.0;  // rectangle half extent along the local x axis, px
  double half_width = 5.0;    // rectangle half extent along the local y axis, px
  double radius = 10.0;       // disk radius, px
  double x = 160.0;           // pose, px
  double y = 120.0;
  double theta = 0.0;         // rad
  double mass_proxy = 1.0;
  double friction = 1.0;      // [0, 2]
  bool textured = true;
  std::uint64_t texture_seed = 7;

  static SceneObject rectangle(double cx, double cy, double half_length, double half_width,
                               double theta = 0.0);
  static SceneObject disk(double cx, double cy, double radius);

  /// Pixel centers sit on integer coordinates.
  bool contains(double px, double py) const;
  Mask silhouette(int width, int height) const;
  /// Intensity of the object surface seen through the skin, in [120, 200].
  std::uint8_t texture(double px, double py) const;
  double analytic_area() const;
  SceneObject shifted(double dx, double dy) const;
};

struct SensorFrame {
  std::int64_t index = 0;
  GrayImage image;
  Mask silhouette;
};

inline constexpr std::uint8_t kBackgroundLevel = 230;
inline constexpr std::uint8_t kMarkerLevel = 20;

/// Light background, optional textured object, dark anti-aliased marker disks
/// (radius sqrt(s/pi)) and a separate binary silhouette channel.
SensorFrame render_frame(const SensorGeometry& geometry,
                         std::span<const MarkerObservation> markers,
                         const std::optional<SceneObject>& object);

// ---------------------------------------------------------------------------
// Plant

struct PlantConfig {
  double max_opening = 80.0;  // mm
  double dt = 1.0 / kDefaultFrameRateHz;
};

struct PlantState {
  Vec3 ee_position = Vec3::Zero();  // mm
  double ee_rotation = 0.0;         // rad
  double gripper_opening = 80.0;    // mm
  bool contact = false;
};

/// Ground truth produced by a scenario for one frame.
struct WorldTruth {
  AppliedWrench wrench;
  std::optional<SceneObject> object;
  /// Shift the object with the skin surface by c_shear * (f_x, f_y).
  bool object_rides_skin = false;
  bool contact = false;
  std::map<std::string, double> channels;
};

class Scenario {
 public:
  explicit Scenario(PlantConfig plant = {}) : plant_(plant) {}
  virtual ~Scenario() = default;

  virtual std::string name() const = 0;
  virtual PlantState initial_plant() const;
  /// Truth for the current frame given the plant; advances internal physics.
  virtual WorldTruth advance(const PlantState& plant) = 0;
  /// Unloaded scene used for tracker calibration frames.
  virtual WorldTruth rest(const PlantState& plant) const;
  virtual bool contact(const PlantState& plant) const;

  const PlantConfig& plant_config() const { return plant_; }
  std::int64_t frame() const { return frame_; }

 protected:
  PlantConfig plant_;
  std::int64_t frame_ = 0;
};

/// Euler-integrates velocity commands over dt and applies the gripper target
/// clamped to [0, max_opening]. Throws Error("invalid_command") on NaN/Inf.
PlantState step_plant(const PlantState& state, const SkillCommand& cmd, const Scenario& scenario);

/// Couples a scenario with the skin model and renderer.
class Simulator {
 public:
  struct Output {
    SensorFrame frame;
    WorldTruth truth;
    std::vector<MarkerObservation> markers;
  };

  Simulator(SensorGeometry geometry, SkinModel skin, std::uint64_t seed);

  Output step(Scenario& scenario, const PlantState& plant);
  Output rest_frame(const Scenario& scenario, const PlantState& plant);

  const SensorGeometry& geometry() const { return geometry_; }
  const SkinModel& skin() const { return skin_; }
  Rng& rng() { return rng_; }

 private:
  Output render(WorldTruth truth, std::int64_t index);

  SensorGeometry geometry_;
  SkinModel skin_;
  Rng rng_;
  std::int64_t next_index_ = 0;
};

// ---------------------------------------------------------------------------
// Scenarios

/// Per-frame wrench script (the last entry repeats), optional object.
class ScriptedWrenchScenario : public Scenario {
 public:
  ScriptedWrenchScenario(std::string name, std::vector<AppliedWrench> script,
                         std::optional<SceneObject> object = std::nullopt);

  std::string name() const override { return name_; }
  WorldTruth advance(const PlantState& plant) override;
  WorldTruth rest(const PlantState& plant) const override;

 private:
  std::string name_;
  std::vector<AppliedWrench> script_;
  std::optional<SceneObject> object_;
};

/// Constant wrench held for the whole episode (the Kalman smoothing stand-in).
std::unique_ptr<Scenario> make_static_hold(const AppliedWrench& wrench, bool with_object = true);

/// Human pulling or pushing an object held in the gripper.
///
/// The skin sees h_t - k_human * (ee_t - ee_0): the scripted human force minus
/// a spring-back from the distance the robot has already followed. The object
/// silhouette enters the view from the image edge along the pull axis (x or y)
/// so its visible area shrinks when it is pulled out; it rides the skin shear
/// and is blind to z.
class FollowMeScenario : public Scenario {
 public:
  FollowMeScenario(std::vector<Vec3> profile, Axis pull_axis, double k_human = 0.1);

  std::string name() const override;
  WorldTruth advance(const PlantState& plant) override;
  WorldTruth rest(const PlantState& plant) const override;
  PlantState initial_plant() const override;

  Axis pull_axis() const { return axis_; }
  const std::vector<Vec3>& profile() const { return profile_; }
  double k_human() const { return k_human_; }
  /// Residual force on the skin for a given end-effector displacement.
  Vec3 residual(std::int64_t frame, const Vec3& ee_displacement) const;
  Vec3 human_force(std::int64_t frame) const;
  /// Human hand moving this frame (profile changing).
  bool active(std::int64_t frame) const;

 private:
  SceneObject object_for_axis() const;

  std::vector<Vec3> profile_;
  Axis axis_;
  double k_human_;
};

/// Hand moves at `speed` mm/s along the axis for `move_s`, holds, returns.
/// Forces are k_human times the hand displacement; `sign` -1 gives a push.
std::vector<Vec3> followme_profile(Axis axis, double sign = 1.0, double k_human = 0.1,
                                   double speed = 20.0, double rest_s = 0.5,
                                   double move_s = 3.0, double hold_s = 1.0,
                                   double fps = kDefaultFrameRateHz);

/// Step to a constant force after `rest_frames`.
std::vector<Vec3> constant_pull_profile(const Vec3& force, int frames, int rest_frames = 0);

/// Gravity-loaded object pivoting between the fingers.
///
/// Gravity torque is T*cos(theta) with theta measured from horizontal; the
/// object turns only when the grip has loosened enough, at rate
/// kappa*(T*cos(theta) - max(S, mu_k*(width - opening))), never past the angle
/// where that drive vanishes. The skin carries max(0, T*cos(theta) - S): torques
/// below the stiction threshold S are absorbed and read as zero.
struct PivotParams {
  double gravity_torque = 0.2;   // T, torque-units
  double stiction = 0.0;         // S, torque-units
  double kappa = 3.0;            // rad/s per torque-unit of drive
  double width = 10.0;           // object width between fingers, mm
  double grip_friction = 1.5;    // torque-units per mm of squeeze
  double squeeze_gain = 0.5;     // normal force-units per mm of squeeze
  double initial_angle = 0.0;    // rad
  double initial_opening = 8.0;  // mm
};

class PivotScenario : public Scenario {
 public:
  PivotScenario(std::string name, PivotParams params);

  std::string name() const override { return name_; }
  PlantState initial_plant() const override;
  WorldTruth advance(const PlantState& plant) override;
  WorldTruth rest(const PlantState& plant) const override;
  bool contact(const PlantState& plant) const override;

  double angle() const { return angle_; }
  const PivotParams& params() const { return params_; }

 private:
  WorldTruth truth_at(const PlantState& plant, bool loaded) const;

  std::string name_;
  PivotParams params_;
  double angle_;
};

/// Light pen whose stiction stalls it below vertical.
std::unique_ptr<PivotScenario> scenario_stuck_pen(double stiction_threshold,
                                                  double gravity_torque = 0.2);
/// Heavy stick, frictionless contact.
std::unique_ptr<PivotScenario> make_heavy_stick(double gravity_torque = 2.0);

struct StuckPenRun {
  std::vector<SensorFrame> frames;
  std::vector<double> angles;       // ground truth, rad
  std::vector<double> skin_torque;  // torque reaching the skin
};

/// Open-loop run of the pen with the gripper held fully open.
StuckPenRun run_pivot_open_loop(PivotScenario& scenario, Simulator& sim, int frames);

/// Rigid stick held in the fingers; the arm rotation turns it against gravity.
/// Skin torque is -sgn(cos phi)*max(0, T*|cos phi| - S), phi = initial + ee_rotation.
class ArmRotScenario : public Scenario {
 public:
  ArmRotScenario(double gravity_torque = 2.0, double stiction = 0.0, double initial_angle = 0.0);

  std::string name() const override { return "arm-rot"; }
  WorldTruth advance(const PlantState& plant) override;
  WorldTruth rest(const PlantState& plant) const override;
  PlantState initial_plant() const override;

  double stick_angle(const PlantState& plant) const { return initial_angle_ + plant.ee_rotation; }
  double skin_torque(const PlantState& plant) const;

 private:
  double gravity_torque_;
  double stiction_;
  double initial_angle_;
};

/// Flat plate under the camera for visual scanning. World is in mm; the view is
/// centered on the end effector at `px_per_mm`.
class PlateScanScenario : public Scenario {
 public:
  PlateScanScenario(double plate_start = 0.0, double plate_length = 100.0,
                    double plate_width = 400.0, double px_per_mm = 10.0,
                    bool plate_present = true, double workspace_limit = 200.0);

  std::string name() const override { return "vis-scan"; }
  WorldTruth advance(const PlantState& plant) override;
  WorldTruth rest(const PlantState& plant) const override;
  PlantState initial_plant() const override;

  double plate_start() const { return plate_start_; }
  double plate_length() const { return plate_length_; }
  double workspace_limit() const { return workspace_limit_; }
  double px_per_mm() const { return px_per_mm_; }

 private:
  std::optional<SceneObject> plate_in_view(const PlantState& plant) const;

  double plate_start_, plate_length_, plate_width_, px_per_mm_;
  bool present_;
  double workspace_limit_;
};

/// Rigid object of a given width between the fingers; squeezing it raises
/// the normal force by contact_stiffness per mm.
class GraspScenario : public Scenario {
 public:
  GraspScenario(double object_width = 30.0, double contact_stiffness = 1.0,
                bool object_present = true);

  std::string name() const override { return "gentle-grasp"; }
  WorldTruth advance(const PlantState& plant) override;
  WorldTruth rest(const PlantState& plant) const override;
  bool contact(const PlantState& plant) const override;

  double object_width() const { return width_; }
  double normal_force(const PlantState& plant) const;

 private:
  double width_, stiffness_;
  bool present_;
};

/// Column lowered towards the ground; contact loads the normal channel.
class DescendScenario : public Scenario {
 public:
  DescendScenario(double start_height = 200.0, double ground_clearance = 120.0,
                  double ground_stiffness = 0.5);

  std::string name() const override { return "descend"; }
  PlantState initial_plant() const override;
  WorldTruth advance(const PlantState& plant) override;
  WorldTruth rest(const PlantState& plant) const override;
  bool contact(const PlantState& plant) const override;

  /// End-effector height at which the column touches the ground.
  double contact_height() const { return clearance_; }

 private:
  double start_height_, clearance_, stiffness_;
};

/// Human hands an object over: it slides into view (slip), is then pressed
/// against the skin (force) while still moving, and finally held still.
class HandoverScenario : public Scenario {
 public:
  HandoverScenario();

  std::string name() const override { return "handover"; }
  WorldTruth advance(const PlantState& plant) override;
  WorldTruth rest(const PlantState& plant) const override;
  bool contact(const PlantState& plant) const override;

 private:
  WorldTruth at(std::int64_t frame, const PlantState& plant) const;
};

// ---------------------------------------------------------------------------
// Open-loop generators

enum class Substance { Flour = 0, Sugar = 1, Peas = 2 };

std::string_view substance_name(Substance s);
/// Throws Error("unknown_substance").
Substance parse_substance(std::string_view name);

/// Per-substance signature: mean drag (viscosity proxy) and high-frequency
/// jitter amplitude (granularity proxy), both in force-units.
struct SubstanceParams {
  double drag;
  double jitter;
};
SubstanceParams substance_params(Substance s);

struct StirFrame {
  std::vector<MarkerObservation> markers;
  SceneObject stick;
};

struct StirTrial {
  Substance substance = Substance::Flour;
  int movement_id = 1;
  std::uint64_t seed = 0;
  std::vector<StirFrame> frames;
};

inline constexpr int kStirTrialFrames = 60;
inline constexpr int kStirMovements = 8;

/// One stirring trial. Movements 1-4 are circular paths, 5-8 back-and-forth
/// strokes, each with its own speed. Throws Error("invalid_argument") for a
/// movement outside 1..8.
StirTrial scenario_stir(Substance substance, int movement_id, Rng& rng,
                        const SensorGeometry& geometry, const SkinModel& skin);

/// High-frequency jitter statistic of a trial: RMS of first differences of the
/// marker x deviations, averaged over markers.
double stir_jitter_statistic(const StirTrial& trial, const SensorGeometry& geometry);

struct ProbeSample {
  double position = 0.0;  // fraction of the span, [0, 1]
  double reading = 0.0;   // normal-force channel, force-units
  double true_force = 0.0;
};

struct ProbeStream {
  std::vector<ProbeSample> samples;
  bool degenerate = false;  // profile has no unique maximum on the grid
  double true_argmax = 0.0;
};

using LoadProfile = std::function<double(double)>;

/// a*(1 - 4*(p - peak)^2) + base, clipped at base.
LoadProfile parabolic_profile(double peak_position = 0.5, double peak = 5.0, double base = 0.5);
LoadProfile flat_profile(double value = 2.0);

/// Sliding probe under a bending plate. Readings come from the marker-size
/// channel of the skin (z_gain * (mean size ratio - 1)) plus Gaussian noise of
/// `noise_fraction` times the profile peak.
ProbeStream scenario_plate_load(const LoadProfile& profile, int samples, double noise_fraction,
                                Rng& rng, const SensorGeometry& geometry,
                                const SkinModel& skin, double z_gain = 10.0);

}  // namespace fvt
