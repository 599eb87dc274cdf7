#include "fvtactile/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace fvt {

namespace {

double sgn(double v) { return (v > 0.0) - (v < 0.0); }

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

// ---------------------------------------------------------------------------
// Skin

void SkinModel::validate() const {
  if (!(c_shear > 0.0 && c_rot > 0.0 && c_normal > 0.0)) {
    throw Error("invalid_argument", "skin compliances must be positive");
  }
  if (!(noise_sigma >= 0.0) || !(stiction_threshold >= 0.0)) {
    throw Error("invalid_argument", "noise_sigma and stiction_threshold must be non-negative");
  }
  if (!(max_force > 0.0 && max_torque > 0.0)) {
    throw Error("invalid_argument", "saturation limits must be positive");
  }
}

std::vector<MarkerObservation> deform_markers(const SensorGeometry& geometry,
                                              const SkinModel& skin,
                                              const AppliedWrench& wrench, Rng& rng) {
  skin.validate();
  if (!wrench.f.allFinite() || !std::isfinite(wrench.tau_z)) {
    throw Error("invalid_argument", "wrench must be finite");
  }
  if (wrench.f.norm() > skin.max_force || std::abs(wrench.tau_z) > skin.max_torque) {
    throw Error("saturation", "applied wrench exceeds the skin saturation limits");
  }
  const double size_gain = 1.0 + skin.c_normal * wrench.f.z();
  if (!(size_gain > 0.0)) {
    throw Error("saturation", "normal pull collapses the markers");
  }
  // Torque below the stiction threshold does not twist the skin.
  const double tau =
      sgn(wrench.tau_z) * std::max(0.0, std::abs(wrench.tau_z) - skin.stiction_threshold);

  const Vec2 centroid = geometry.layout_centroid();
  const Vec2 shear = skin.c_shear * wrench.f.head<2>();
  const double s0 = geometry.nominal_marker_size();

  std::vector<MarkerObservation> out;
  out.reserve(geometry.marker_count());
  for (std::size_t i = 0; i < geometry.marker_count(); ++i) {
    const Vec2& p = geometry.marker_layout[i];
    const Vec2 r = p - centroid;
    const Vec2 perp(-r.y(), r.x());
    Vec2 q = p + shear + skin.c_rot * tau * perp;
    if (skin.noise_sigma > 0.0) {
      q.x() += rng.normal(0.0, skin.noise_sigma);
      q.y() += rng.normal(0.0, skin.noise_sigma);
    }
    MarkerObservation m;
    m.marker_id = i;
    m.x = q.x();
    m.y = q.y();
    m.s = s0 * size_gain;
    m.valid = q.x() >= 0.0 && q.y() >= 0.0 && q.x() < geometry.image_width &&
              q.y() < geometry.image_height;
    out.push_back(m);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Objects and rendering

SceneObject SceneObject::rectangle(double cx, double cy, double half_length, double half_width,
                                   double theta) {
  SceneObject o;
  o.shape = ShapeKind::Rectangle;
  o.x = cx;
  o.y = cy;
  o.half_length = half_length;
  o.half_width = half_width;
  o.theta = theta;
  return o;
}

SceneObject SceneObject::disk(double cx, double cy, double radius) {
  SceneObject o;
  o.shape = ShapeKind::Disk;
  o.x = cx;
  o.y = cy;
  o.radius = radius;
  return o;
}

bool SceneObject::contains(double px, double py) const {
  const double dx = px - x;
  const double dy = py - y;
  if (shape == ShapeKind::Disk) return dx * dx + dy * dy <= radius * radius;
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const double lx = c * dx + s * dy;
  const double ly = -s * dx + c * dy;
  return std::abs(lx) <= half_length && std::abs(ly) <= half_width;
}

Mask SceneObject::silhouette(int width, int height) const {
  Mask mask(width, height, 0);
  const double reach = shape == ShapeKind::Disk ? radius : std::hypot(half_length, half_width);
  const int x0 = std::max(0, static_cast<int>(std::floor(x - reach)));
  const int x1 = std::min(width - 1, static_cast<int>(std::ceil(x + reach)));
  const int y0 = std::max(0, static_cast<int>(std::floor(y - reach)));
  const int y1 = std::min(height - 1, static_cast<int>(std::ceil(y + reach)));
  for (int j = y0; j <= y1; ++j) {
    for (int i = x0; i <= x1; ++i) {
      if (contains(i, j)) mask.at(i, j) = 255;
    }
  }
  return mask;
}

std::uint8_t SceneObject::texture(double px, double py) const {
  if (!textured) return 160;
  const double dx = px - x;
  const double dy = py - y;
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const auto ix = static_cast<std::int64_t>(std::floor(c * dx + s * dy + 1e-9));
  const auto iy = static_cast<std::int64_t>(std::floor(-s * dx + c * dy + 1e-9));
  const std::uint64_t h = mix64(texture_seed ^ (static_cast<std::uint64_t>(ix) * 0x9E3779B97F4A7C15ULL) ^
                                (static_cast<std::uint64_t>(iy) * 0xC2B2AE3D27D4EB4FULL));
  return static_cast<std::uint8_t>(120 + h % 81);
}

double SceneObject::analytic_area() const {
  if (shape == ShapeKind::Disk) return std::numbers::pi * radius * radius;
  return 4.0 * half_length * half_width;
}

SceneObject SceneObject::shifted(double dx, double dy) const {
  SceneObject o = *this;
  o.x += dx;
  o.y += dy;
  return o;
}

SensorFrame render_frame(const SensorGeometry& geometry,
                         std::span<const MarkerObservation> markers,
                         const std::optional<SceneObject>& object) {
  SensorFrame frame;
  frame.image = GrayImage(geometry.image_width, geometry.image_height, kBackgroundLevel);
  if (object) {
    frame.silhouette = object->silhouette(geometry.image_width, geometry.image_height);
    for (int j = 0; j < frame.image.height; ++j) {
      for (int i = 0; i < frame.image.width; ++i) {
        if (frame.silhouette.at(i, j)) frame.image.at(i, j) = object->texture(i, j);
      }
    }
  } else {
    frame.silhouette = Mask(geometry.image_width, geometry.image_height, 0);
  }

  // 4x4 supersampled disk coverage. The marker shade does not depend on what
  // is behind it, so blob membership is independent of the object texture.
  constexpr int kSub = 4;
  for (const auto& m : markers) {
    if (!m.valid || !(m.s > 0.0)) continue;
    const double r = std::sqrt(m.s / std::numbers::pi);
    const double r2 = r * r;
    const int x0 = std::max(0, static_cast<int>(std::floor(m.x - r - 1.0)));
    const int x1 = std::min(frame.image.width - 1, static_cast<int>(std::ceil(m.x + r + 1.0)));
    const int y0 = std::max(0, static_cast<int>(std::floor(m.y - r - 1.0)));
    const int y1 = std::min(frame.image.height - 1, static_cast<int>(std::ceil(m.y + r + 1.0)));
    for (int j = y0; j <= y1; ++j) {
      for (int i = x0; i <= x1; ++i) {
        int hits = 0;
        for (int sy = 0; sy < kSub; ++sy) {
          const double py = j - 0.5 + (sy + 0.5) / kSub - m.y;
          for (int sx = 0; sx < kSub; ++sx) {
            const double px = i - 0.5 + (sx + 0.5) / kSub - m.x;
            hits += (px * px + py * py <= r2);
          }
        }
        if (hits == 0) continue;
        const double cov = static_cast<double>(hits) / (kSub * kSub);
        const auto shade = static_cast<std::uint8_t>(
            std::lround(kBackgroundLevel - cov * (kBackgroundLevel - kMarkerLevel)));
        frame.image.at(i, j) = std::min(frame.image.at(i, j), shade);
      }
    }
  }
  return frame;
}

// ---------------------------------------------------------------------------
// Plant

PlantState Scenario::initial_plant() const {
  PlantState p;
  p.gripper_opening = plant_.max_opening;
  return p;
}

WorldTruth Scenario::rest(const PlantState&) const { return {}; }

bool Scenario::contact(const PlantState&) const { return false; }

PlantState step_plant(const PlantState& state, const SkillCommand& cmd, const Scenario& scenario) {
  if (!cmd.is_finite()) throw Error("invalid_command", "skill command contains NaN or Inf");
  const PlantConfig& cfg = scenario.plant_config();
  PlantState next = state;
  next.ee_position += cfg.dt * cmd.ee_velocity;
  next.ee_rotation += cfg.dt * cmd.ee_rot_velocity;
  if (cmd.gripper_target) {
    next.gripper_opening = std::clamp(*cmd.gripper_target, 0.0, cfg.max_opening);
  }
  next.contact = scenario.contact(next);
  return next;
}

Simulator::Simulator(SensorGeometry geometry, SkinModel skin, std::uint64_t seed)
    : geometry_(std::move(geometry)), skin_(skin), rng_(seed) {
  geometry_.validate();
  skin_.validate();
}

Simulator::Output Simulator::render(WorldTruth truth, std::int64_t index) {
  if (truth.object && truth.object_rides_skin) {
    truth.object = truth.object->shifted(skin_.c_shear * truth.wrench.f.x(),
                                         skin_.c_shear * truth.wrench.f.y());
  }
  Output out;
  out.markers = deform_markers(geometry_, skin_, truth.wrench, rng_);
  out.frame = render_frame(geometry_, out.markers, truth.object);
  out.frame.index = index;
  out.truth = std::move(truth);
  return out;
}

Simulator::Output Simulator::step(Scenario& scenario, const PlantState& plant) {
  return render(scenario.advance(plant), next_index_++);
}

Simulator::Output Simulator::rest_frame(const Scenario& scenario, const PlantState& plant) {
  return render(scenario.rest(plant), -1);
}

// ---------------------------------------------------------------------------
// Scripted wrench / static hold

ScriptedWrenchScenario::ScriptedWrenchScenario(std::string name, std::vector<AppliedWrench> script,
                                               std::optional<SceneObject> object)
    : name_(std::move(name)), script_(std::move(script)), object_(std::move(object)) {}

WorldTruth ScriptedWrenchScenario::advance(const PlantState&) {
  WorldTruth t;
  if (!script_.empty()) {
    t.wrench = script_[std::min<std::size_t>(static_cast<std::size_t>(frame_), script_.size() - 1)];
  }
  t.object = object_;
  t.object_rides_skin = true;
  t.contact = t.wrench.f.norm() > 0.0 || t.wrench.tau_z != 0.0;
  t.channels["true_fx"] = t.wrench.f.x();
  t.channels["true_fy"] = t.wrench.f.y();
  t.channels["true_fz"] = t.wrench.f.z();
  t.channels["true_tau"] = t.wrench.tau_z;
  ++frame_;
  return t;
}

WorldTruth ScriptedWrenchScenario::rest(const PlantState&) const {
  WorldTruth t;
  t.object = object_;
  return t;
}

std::unique_ptr<Scenario> make_static_hold(const AppliedWrench& wrench, bool with_object) {
  std::optional<SceneObject> obj;
  if (with_object) obj = SceneObject::rectangle(160.0, 120.0, 40.0, 25.0);
  return std::make_unique<ScriptedWrenchScenario>("static-hold", std::vector<AppliedWrench>{wrench},
                                                  obj);
}

// ---------------------------------------------------------------------------
// FollowMe

FollowMeScenario::FollowMeScenario(std::vector<Vec3> profile, Axis pull_axis, double k_human)
    : profile_(std::move(profile)), axis_(pull_axis), k_human_(k_human) {
  if (!(k_human_ > 0.0)) throw Error("invalid_argument", "k_human must be positive");
}

std::string FollowMeScenario::name() const {
  return "followme-" + std::string(axis_name(axis_));
}

PlantState FollowMeScenario::initial_plant() const {
  PlantState p;
  p.gripper_opening = 30.0;
  p.contact = true;
  return p;
}

Vec3 FollowMeScenario::human_force(std::int64_t frame) const {
  if (profile_.empty() || frame < 0) return Vec3::Zero();
  return profile_[std::min<std::size_t>(static_cast<std::size_t>(frame), profile_.size() - 1)];
}

bool FollowMeScenario::active(std::int64_t frame) const {
  if (frame <= 0) return false;
  return (human_force(frame) - human_force(frame - 1)).norm() > 1e-12;
}

Vec3 FollowMeScenario::residual(std::int64_t frame, const Vec3& ee_displacement) const {
  return human_force(frame) - k_human_ * ee_displacement;
}

SceneObject FollowMeScenario::object_for_axis() const {
  // A bar entering the view from the edge along the pull axis.
  if (axis_ == Axis::Y) return SceneObject::rectangle(160.0, 180.0 + 100.0, 40.0, 100.0);
  return SceneObject::rectangle(240.0 + 100.0, 120.0, 100.0, 40.0);
}

WorldTruth FollowMeScenario::advance(const PlantState& plant) {
  const Vec3 disp = plant.ee_position - initial_plant().ee_position;
  const Vec3 h = human_force(frame_);
  const Vec3 f = residual(frame_, disp);
  WorldTruth t;
  t.wrench.f = f;
  t.object = object_for_axis();
  t.object_rides_skin = true;
  t.contact = true;
  t.channels["human_x"] = h.x();
  t.channels["human_y"] = h.y();
  t.channels["human_z"] = h.z();
  t.channels["residual_x"] = f.x();
  t.channels["residual_y"] = f.y();
  t.channels["residual_z"] = f.z();
  t.channels["active"] = active(frame_) ? 1.0 : 0.0;
  ++frame_;
  return t;
}

WorldTruth FollowMeScenario::rest(const PlantState&) const {
  WorldTruth t;
  t.object = object_for_axis();
  t.contact = true;
  return t;
}

std::vector<Vec3> followme_profile(Axis axis, double sign, double k_human, double speed,
                                   double rest_s, double move_s, double hold_s, double fps) {
  const int rest_n = static_cast<int>(std::lround(rest_s * fps));
  const int move_n = static_cast<int>(std::lround(move_s * fps));
  const int hold_n = static_cast<int>(std::lround(hold_s * fps));
  const Vec3 dir = Vec3::Unit(static_cast<int>(axis)) * sign;
  std::vector<Vec3> out;
  double hand = 0.0;
  auto push = [&] { out.push_back(k_human * hand * dir); };
  for (int i = 0; i < rest_n; ++i) push();
  for (int i = 0; i < move_n; ++i) {
    hand += speed / fps;
    push();
  }
  for (int i = 0; i < hold_n; ++i) push();
  for (int i = 0; i < move_n; ++i) {
    hand -= speed / fps;
    push();
  }
  for (int i = 0; i < rest_n + hold_n; ++i) {
    hand = 0.0;
    push();
  }
  return out;
}

std::vector<Vec3> constant_pull_profile(const Vec3& force, int frames, int rest_frames) {
  std::vector<Vec3> out;
  out.reserve(static_cast<std::size_t>(frames));
  for (int i = 0; i < frames; ++i) out.push_back(i < rest_frames ? Vec3::Zero() : force);
  return out;
}

// ---------------------------------------------------------------------------
// Pivot (stuck pen / heavy stick)

PivotScenario::PivotScenario(std::string name, PivotParams params)
    : name_(std::move(name)), params_(params), angle_(params.initial_angle) {
  if (!(params_.gravity_torque >= 0.0) || !(params_.stiction >= 0.0) || !(params_.kappa > 0.0)) {
    throw Error("invalid_argument", "invalid pivot parameters");
  }
}

PlantState PivotScenario::initial_plant() const {
  PlantState p;
  p.gripper_opening = params_.initial_opening;
  p.contact = true;
  return p;
}

bool PivotScenario::contact(const PlantState&) const { return true; }

WorldTruth PivotScenario::truth_at(const PlantState& plant, bool loaded) const {
  WorldTruth t;
  const double c = std::cos(angle_);
  const double gravity = params_.gravity_torque * c;
  if (loaded) {
    t.wrench.tau_z = -sgn(c) * std::max(0.0, params_.gravity_torque * std::abs(c) - params_.stiction);
    t.wrench.f.z() = params_.squeeze_gain * std::max(0.0, params_.width - plant.gripper_opening);
  }
  // The pen pivots about the grip point at the image center.
  t.object = SceneObject::rectangle(160.0, 120.0, 60.0, 5.0, angle_);
  t.contact = true;
  t.channels["angle"] = angle_;
  t.channels["gravity_torque"] = gravity;
  t.channels["skin_torque"] = t.wrench.tau_z;
  return t;
}

WorldTruth PivotScenario::advance(const PlantState& plant) {
  WorldTruth t = truth_at(plant, true);
  const double T = params_.gravity_torque;
  const double resist = std::max(
      params_.stiction, params_.grip_friction * std::max(0.0, params_.width - plant.gripper_opening));
  const double drive = T * std::cos(angle_) - resist;
  if (drive > 0.0 && T > 0.0) {
    const double stall = std::acos(std::clamp(resist / T, 0.0, 1.0));
    angle_ = std::min(angle_ + plant_.dt * params_.kappa * drive, stall);
  }
  ++frame_;
  return t;
}

WorldTruth PivotScenario::rest(const PlantState& plant) const { return truth_at(plant, false); }

std::unique_ptr<PivotScenario> scenario_stuck_pen(double stiction_threshold,
                                                  double gravity_torque) {
  if (stiction_threshold < 0.0) throw Error("invalid_argument", "stiction_threshold must be >= 0");
  PivotParams p;
  p.gravity_torque = gravity_torque;
  p.stiction = stiction_threshold;
  return std::make_unique<PivotScenario>("stuck-pen", p);
}

std::unique_ptr<PivotScenario> make_heavy_stick(double gravity_torque) {
  PivotParams p;
  p.gravity_torque = gravity_torque;
  p.stiction = 0.0;
  return std::make_unique<PivotScenario>("heavy-stick", p);
}

StuckPenRun run_pivot_open_loop(PivotScenario& scenario, Simulator& sim, int frames) {
  StuckPenRun run;
  PlantState plant = scenario.initial_plant();
  plant.gripper_opening = scenario.plant_config().max_opening;
  for (int i = 0; i < frames; ++i) {
    auto out = sim.step(scenario, plant);
    run.angles.push_back(out.truth.channels.at("angle"));
    run.skin_torque.push_back(out.truth.wrench.tau_z);
    run.frames.push_back(std::move(out.frame));
  }
  return run;
}

// ---------------------------------------------------------------------------
// Arm rotation

ArmRotScenario::ArmRotScenario(double gravity_torque, double stiction, double initial_angle)
    : gravity_torque_(gravity_torque), stiction_(stiction), initial_angle_(initial_angle) {}

PlantState ArmRotScenario::initial_plant() const {
  PlantState p;
  p.gripper_opening = 20.0;
  p.contact = true;
  return p;
}

double ArmRotScenario::skin_torque(const PlantState& plant) const {
  const double c = std::cos(stick_angle(plant));
  return -sgn(c) * std::max(0.0, gravity_torque_ * std::abs(c) - stiction_);
}

WorldTruth ArmRotScenario::advance(const PlantState& plant) {
  WorldTruth t;
  t.wrench.tau_z = skin_torque(plant);
  // The stick is fixed relative to the fingers, so its silhouette does not turn.
  t.object = SceneObject::rectangle(160.0, 120.0, 100.0, 12.0);
  t.contact = true;
  t.channels["angle"] = stick_angle(plant);
  t.channels["gravity_torque"] = gravity_torque_ * std::cos(stick_angle(plant));
  t.channels["skin_torque"] = t.wrench.tau_z;
  ++frame_;
  return t;
}

WorldTruth ArmRotScenario::rest(const PlantState&) const {
  WorldTruth t;
  t.object = SceneObject::rectangle(160.0, 120.0, 100.0, 12.0);
  t.contact = true;
  return t;
}

// ---------------------------------------------------------------------------
// Plate scan

PlateScanScenario::PlateScanScenario(double plate_start, double plate_length, double plate_width,
                                     double px_per_mm, bool plate_present, double workspace_limit)
    : plate_start_(plate_start),
      plate_length_(plate_length),
      plate_width_(plate_width),
      px_per_mm_(px_per_mm),
      present_(plate_present),
      workspace_limit_(workspace_limit) {}

PlantState PlateScanScenario::initial_plant() const {
  PlantState p;
  p.ee_position = Vec3(plate_start_, 0.0, 0.0);
  return p;
}

std::optional<SceneObject> PlateScanScenario::plate_in_view(const PlantState& plant) const {
  if (!present_) return std::nullopt;
  const double cx = plate_start_ + plate_length_ / 2.0;
  auto plate = SceneObject::rectangle(160.0 + (cx - plant.ee_position.x()) * px_per_mm_,
                                      120.0 + (0.0 - plant.ee_position.y()) * px_per_mm_,
                                      plate_length_ / 2.0 * px_per_mm_,
                                      plate_width_ / 2.0 * px_per_mm_);
  return plate;
}

WorldTruth PlateScanScenario::advance(const PlantState& plant) {
  WorldTruth t;
  t.object = plate_in_view(plant);
  t.channels["ee_x"] = plant.ee_position.x();
  t.channels["plate_end"] = plate_start_ + plate_length_;
  ++frame_;
  return t;
}

WorldTruth PlateScanScenario::rest(const PlantState& plant) const {
  WorldTruth t;
  t.object = plate_in_view(plant);
  return t;
}

// ---------------------------------------------------------------------------
// Grasp

GraspScenario::GraspScenario(double object_width, double contact_stiffness, bool object_present)
    : width_(object_width), stiffness_(contact_stiffness), present_(object_present) {}

double GraspScenario::normal_force(const PlantState& plant) const {
  if (!present_) return 0.0;
  return stiffness_ * std::max(0.0, width_ - plant.gripper_opening);
}

bool GraspScenario::contact(const PlantState& plant) const {
  return present_ && plant.gripper_opening < width_;
}

WorldTruth GraspScenario::advance(const PlantState& plant) {
  WorldTruth t;
  t.wrench.f.z() = normal_force(plant);
  if (present_) t.object = SceneObject::rectangle(160.0, 120.0, 60.0, 30.0);
  t.contact = contact(plant);
  t.channels["normal_force"] = t.wrench.f.z();
  t.channels["opening"] = plant.gripper_opening;
  ++frame_;
  return t;
}

WorldTruth GraspScenario::rest(const PlantState&) const {
  WorldTruth t;
  if (present_) t.object = SceneObject::rectangle(160.0, 120.0, 60.0, 30.0);
  return t;
}

// ---------------------------------------------------------------------------
// Descend

DescendScenario::DescendScenario(double start_height, double ground_clearance,
                                 double ground_stiffness)
    : start_height_(start_height), clearance_(ground_clearance), stiffness_(ground_stiffness) {}

PlantState DescendScenario::initial_plant() const {
  PlantState p;
  p.ee_position = Vec3(0.0, 0.0, start_height_);
  p.gripper_opening = 26.0;
  return p;
}

bool DescendScenario::contact(const PlantState& plant) const {
  return plant.ee_position.z() < clearance_;
}

WorldTruth DescendScenario::advance(const PlantState& plant) {
  WorldTruth t;
  t.wrench.f.z() = stiffness_ * std::max(0.0, clearance_ - plant.ee_position.z());
  t.object = SceneObject::rectangle(160.0, 120.0, 12.0, 100.0);
  t.contact = contact(plant);
  t.channels["ground_force"] = t.wrench.f.z();
  t.channels["ee_z"] = plant.ee_position.z();
  ++frame_;
  return t;
}

WorldTruth DescendScenario::rest(const PlantState&) const {
  WorldTruth t;
  t.object = SceneObject::rectangle(160.0, 120.0, 12.0, 100.0);
  return t;
}

// ---------------------------------------------------------------------------
// Handover

HandoverScenario::HandoverScenario() = default;

bool HandoverScenario::contact(const PlantState&) const { return frame_ >= 45; }

WorldTruth HandoverScenario::at(std::int64_t frame, const PlantState& plant) const {
  constexpr double kWidth = 30.0;
  WorldTruth t;
  if (frame >= 15) {
    // Slides in from the right edge: 3 px/frame, then 1.5 px/frame while
    // pressed, then still.
    double travel = 3.0 * static_cast<double>(std::min<std::int64_t>(frame - 15, 30));
    if (frame >= 45) travel += 1.5 * static_cast<double>(std::min<std::int64_t>(frame - 45, 30));
    t.object = SceneObject::rectangle(320.0 + 60.0 - travel, 120.0, 60.0, 30.0);
  }
  if (frame >= 45) {
    const double press = std::min(2.0, 0.1 * static_cast<double>(frame - 45 + 1));
    const double squeeze = std::max(0.0, kWidth - plant.gripper_opening);
    t.wrench.f.z() = std::min(press + 0.5 * squeeze, 8.0);
    t.contact = true;
  }
  t.channels["grasped"] = plant.gripper_opening <= kWidth ? 1.0 : 0.0;
  return t;
}

WorldTruth HandoverScenario::advance(const PlantState& plant) {
  WorldTruth t = at(frame_, plant);
  ++frame_;
  return t;
}

WorldTruth HandoverScenario::rest(const PlantState&) const { return {}; }

// ---------------------------------------------------------------------------
// Stirring

std::string_view substance_name(Substance s) {
  switch (s) {
    case Substance::Flour:
      return "flour";
    case Substance::Sugar:
      return "sugar";
    case Substance::Peas:
      return "peas";
  }
  return "?";
}

Substance parse_substance(std::string_view name) {
  if (name == "flour") return Substance::Flour;
  if (name == "sugar") return Substance::Sugar;
  if (name == "peas") return Substance::Peas;
  throw Error("unknown_substance", "unknown substance '" + std::string(name) + "'");
}

SubstanceParams substance_params(Substance s) {
  switch (s) {
    case Substance::Flour:
      return {2.0, 0.1};
    case Substance::Sugar:
      return {1.0, 0.4};
    case Substance::Peas:
      return {0.5, 1.0};
  }
  return {1.0, 0.0};
}

StirTrial scenario_stir(Substance substance, int movement_id, Rng& rng,
                        const SensorGeometry& geometry, const SkinModel& skin) {
  if (movement_id < 1 || movement_id > kStirMovements) {
    throw Error("invalid_argument", "movement_id must be in 1..8");
  }
  const SubstanceParams sp = substance_params(substance);
  const double dt = geometry.dt();
  const int k = (movement_id - 1) % 4;
  const bool circular = movement_id <= 4;
  const double omega = 2.0 * std::numbers::pi * (0.5 + 0.15 * k);
  const double speed = 0.8 + 0.1 * k;
  const double stroke_angle = k * std::numbers::pi / 4.0;

  StirTrial trial;
  trial.substance = substance;
  trial.movement_id = movement_id;
  trial.seed = rng.next_u64();
  Rng local(trial.seed);
  const double phase = local.uniform(0.0, 2.0 * std::numbers::pi);
  const double strength = sp.drag * speed * local.uniform(0.9, 1.1);

  for (int i = 0; i < kStirTrialFrames; ++i) {
    const double a = omega * i * dt + phase;
    Vec2 dir = circular ? Vec2(-std::sin(a), std::cos(a))
                        : Vec2(std::cos(stroke_angle), std::sin(stroke_angle)) * std::cos(a);
    AppliedWrench w;
    w.f.head<2>() = 0.8 * strength * dir;
    // Steady resistance along the stick axis (image +y) and a light squeeze.
    w.f.y() += strength;
    w.f.z() = 0.3 * strength;
    w.f.x() += sp.jitter * local.normal();
    w.f.y() += sp.jitter * local.normal();
    w.tau_z = 0.3 * strength * std::sin(a) + 0.2 * sp.jitter * local.normal();

    StirFrame frame;
    frame.markers = deform_markers(geometry, skin, w, local);
    frame.stick = SceneObject::rectangle(160.0 + skin.c_shear * w.f.x(),
                                         170.0 + skin.c_shear * w.f.y(), 80.0, 8.0,
                                         std::numbers::pi / 2.0 + 0.03 * w.f.x());
    trial.frames.push_back(std::move(frame));
  }
  return trial;
}

double stir_jitter_statistic(const StirTrial& trial, const SensorGeometry& geometry) {
  if (trial.frames.size() < 2) return 0.0;
  double total = 0.0;
  for (std::size_t m = 0; m < geometry.marker_count(); ++m) {
    double ss = 0.0;
    for (std::size_t t = 1; t < trial.frames.size(); ++t) {
      const double d = trial.frames[t].markers[m].x - trial.frames[t - 1].markers[m].x;
      ss += d * d;
    }
    total += std::sqrt(ss / static_cast<double>(trial.frames.size() - 1));
  }
  return total / static_cast<double>(geometry.marker_count());
}

// ---------------------------------------------------------------------------
// Plate load probing

LoadProfile parabolic_profile(double peak_position, double peak, double base) {
  return [=](double p) {
    const double d = p - peak_position;
    return base + peak * std::max(0.0, 1.0 - 4.0 * d * d);
  };
}

LoadProfile flat_profile(double value) {
  return [=](double) { return value; };
}

ProbeStream scenario_plate_load(const LoadProfile& profile, int samples, double noise_fraction,
                                Rng& rng, const SensorGeometry& geometry,
                                const SkinModel& skin, double z_gain) {
  if (samples < 2) throw Error("invalid_argument", "need at least two probe samples");
  ProbeStream stream;
  std::vector<double> truth(static_cast<std::size_t>(samples));
  for (int k = 0; k < samples; ++k) {
    truth[static_cast<std::size_t>(k)] = profile(static_cast<double>(k) / (samples - 1));
  }
  const auto max_it = std::max_element(truth.begin(), truth.end());
  const double peak = *max_it;
  const double tol = 1e-12 * std::max(1.0, std::abs(peak));
  const auto ties = std::count_if(truth.begin(), truth.end(),
                                  [&](double v) { return std::abs(v - peak) <= tol; });
  stream.degenerate = ties != 1;
  stream.true_argmax = static_cast<double>(max_it - truth.begin()) / (samples - 1);

  SkinModel quiet = skin;
  quiet.noise_sigma = 0.0;
  const double s0 = geometry.nominal_marker_size();
  for (int k = 0; k < samples; ++k) {
    ProbeSample s;
    s.position = static_cast<double>(k) / (samples - 1);
    s.true_force = truth[static_cast<std::size_t>(k)];
    AppliedWrench w;
    w.f.z() = s.true_force;
    const auto markers = deform_markers(geometry, quiet, w, rng);
    double ratio = 0.0;
    for (const auto& m : markers) ratio += m.s / s0;
    ratio /= static_cast<double>(markers.size());
    s.reading = z_gain * (ratio - 1.0) + rng.normal(0.0, noise_fraction * std::abs(peak));
    stream.samples.push_back(s);
  }
  return stream;
}

}  // namespace fvt
