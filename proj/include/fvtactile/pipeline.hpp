#pragma once

// Frame-synchronous sensing loop: scenario -> skin/renderer -> blob tracker ->
// percepts, plus plant integration of skill commands.

#include "fvtactile/percept.hpp"
#include "fvtactile/sim.hpp"
#include "fvtactile/skills.hpp"
#include "fvtactile/track.hpp"

#include <optional>

namespace fvt {

struct PipelineConfig {
  SensorGeometry geometry = SensorGeometry::make_default();
  SkinModel skin;
  KalmanConfig kalman;
  BlobParams blobs;
  SlipConfig slip;
  double z_gain = 10.0;
  /// Rest frames averaged to seed the marker tracks.
  int calibration_frames = 15;
  bool compute_slip = true;
};

/// Mean over matched markers of (raw dx, raw dy, raw size ratio) and of the
/// filtered values, averaged over the whole marker array.
struct MarkerSummary {
  std::optional<Vec3> raw_mean;
  Vec3 filt_mean = Vec3(0.0, 0.0, 1.0);
  int missing = 0;
};

MarkerSummary summarize_markers(const TrackerBank& bank);

class Pipeline {
 public:
  Pipeline(Scenario& scenario, std::uint64_t seed, PipelineConfig cfg = {});

  /// Renders calibration_frames unloaded frames and seeds the tracker. Runs
  /// automatically before the first sense() if not called.
  void calibrate();

  /// Renders the next frame for the current plant state and updates percepts.
  const PerceptBundle& sense();
  /// Integrates a command into the plant.
  void apply(const SkillCommand& cmd);

  const PerceptBundle& percepts() const { return percepts_; }
  const Simulator::Output& output() const { return output_; }
  const PlantState& plant() const { return plant_; }
  PlantState& plant() { return plant_; }
  const TrackerBank& tracker() const { return tracker_; }
  const PipelineConfig& config() const { return cfg_; }
  const Scenario& scenario() const { return scenario_; }
  /// Object area at rest, measured during calibration.
  double rest_area() const { return rest_area_; }
  std::int64_t frame() const { return frame_; }

 private:
  Scenario& scenario_;
  PipelineConfig cfg_;
  Simulator sim_;
  TrackerBank tracker_;
  PlantState plant_;
  PerceptBundle percepts_;
  Simulator::Output output_;
  std::optional<GrayImage> prev_image_;
  Mask prev_mask_;
  bool calibrated_ = false;
  double rest_area_ = 0.0;
  std::int64_t frame_ = 0;
};

}  // namespace fvt
