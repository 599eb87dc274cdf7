#pragma once

// Blob detection, nearest-neighbour association and per-marker Kalman
// filtering of marker position and size.

#include "fvtactile/core.hpp"

#include <Eigen/Core>

#include <optional>
#include <ostream>
#include <span>
#include <vector>

namespace fvt {

struct Blob {
  double x = 0.0;
  double y = 0.0;
  double size = 0.0;  // pixel count
};

struct BlobParams {
  int threshold = 96;  // dark pixels: intensity < threshold
  int min_area = 4;
  int max_area = 400;
};

/// 4-connected components of dark pixels with area in [min_area, max_area].
/// Centroids are weighted by darkness (255 - I); output sorted by (y, x).
std::vector<Blob> detect_blobs(const GrayImage& frame, const BlobParams& params = {});

/// Greedy nearest-neighbour assignment in ascending distance order. Each blob
/// is used at most once; pairs farther than `gate` are never matched; equal
/// distances go to the lower marker id. Result is indexed by marker id.
std::vector<std::optional<std::size_t>> associate(std::span<const Blob> blobs,
                                                  std::span<const Vec2> predicted, double gate);

// ---------------------------------------------------------------------------
// Kalman filter

struct KalmanConfig {
  double q = 0.01;
  double r = 0.1;
  double dt = 1.0 / kDefaultFrameRateHz;

  void validate() const;
};

inline constexpr int kStateDim = 9;
inline constexpr int kMeasDim = 6;
using KfState = Eigen::Matrix<double, kStateDim, 1>;
using KfCov = Eigen::Matrix<double, kStateDim, kStateDim>;
using KfMeas = Eigen::Matrix<double, kMeasDim, 1>;

/// State layout: [x0, xt, y0, yt, s0, st, vx, vy, vs]. Initial components have
/// identity dynamics, current components follow a constant-velocity model.
KfCov kf_transition(double dt);
/// Selects the six position/size components.
Eigen::Matrix<double, kMeasDim, kStateDim> kf_observation();
/// q*I, with q*1e-6 on the initial components so they stay pinned.
KfCov kf_process_noise(double q);

struct MarkerTrack {
  std::size_t marker_id = 0;
  KfState mean = KfState::Zero();
  KfCov cov = KfCov::Identity();
  bool initialized = false;
  /// Values the initial components were seeded with; re-measured every frame.
  Vec3 seed = Vec3::Zero();
  /// Filtered (dx, dy, s_t/s_0) at the last frame with a measurement.
  Vec3 held = Vec3(0.0, 0.0, 1.0);
  bool stale = true;
  std::int64_t pd_repairs = 0;

  Vec2 position() const { return {mean(1), mean(3)}; }
  Vec2 predicted_position(double dt) const { return {mean(1) + dt * mean(6), mean(3) + dt * mean(7)}; }
};

/// Starts a track at (x, y, s) with covariance r*I and zero velocity.
MarkerTrack init_track(std::size_t marker_id, double x, double y, double s,
                       const KalmanConfig& config);

/// Predict with A and Q; if a measurement is present, update with H and R
/// (Joseph form). The posterior is re-symmetrized; if it is not positive
/// definite afterwards the diagonal is floored and pd_repairs is incremented.
MarkerTrack kf_step(const MarkerTrack& track, const KalmanConfig& config,
                    const std::optional<MarkerObservation>& measurement);

/// Same step with an explicit observation noise scale (used to probe the
/// large-R limit).
MarkerTrack kf_step_with_r(const MarkerTrack& track, const KalmanConfig& config, double r,
                           const std::optional<MarkerObservation>& measurement);

bool is_positive_definite(const KfCov& cov);

// ---------------------------------------------------------------------------
// Displacement field

struct MarkerDisplacement {
  std::size_t marker_id = 0;
  double dx = 0.0;
  double dy = 0.0;
  double ratio = 1.0;  // s_t / s_0
  bool stale = false;
};

struct DisplacementField {
  std::int64_t timestamp = 0;
  std::vector<MarkerDisplacement> markers;
};

/// Filtered displacement per track; stale tracks carry their last value.
DisplacementField displacement_field(std::span<const MarkerTrack> tracks, std::int64_t timestamp);

// ---------------------------------------------------------------------------
// Tracker bank

/// Detector, associator and one filter per marker.
///
/// Tracks are seeded either from the first frame passed to update() or, after
/// calibrate(), from the per-marker mean of the detections over a set of rest
/// frames. Averaging the seed removes most of the single-frame noise that
/// otherwise shows up as a constant displacement bias.
class TrackerBank {
 public:
  TrackerBank(SensorGeometry geometry, KalmanConfig config = {}, BlobParams blobs = {},
              double gate_factor = 2.0);

  void calibrate(std::span<const GrayImage> rest_frames);
  const DisplacementField& update(const GrayImage& frame);

  const std::vector<MarkerTrack>& tracks() const { return tracks_; }
  /// Raw detection matched to each marker in the last update.
  const std::vector<std::optional<Blob>>& raw() const { return raw_; }
  const DisplacementField& field() const { return field_; }
  const SensorGeometry& geometry() const { return geometry_; }
  const KalmanConfig& config() const { return config_; }
  std::int64_t pd_repairs() const;
  std::int64_t frames() const { return frames_; }

 private:
  std::vector<Vec2> predictions() const;

  SensorGeometry geometry_;
  KalmanConfig config_;
  BlobParams blob_params_;
  double gate_;
  std::vector<MarkerTrack> tracks_;
  std::vector<std::optional<Blob>> raw_;
  DisplacementField field_;
  std::int64_t frames_ = 0;
};

/// CSV dump of raw and filtered displacement:
/// frame,marker_id,raw_x,raw_y,raw_s,filt_x,filt_y,filt_s,missing_flag.
/// raw_* are the matched blob minus the track seed (size as a ratio); a
/// missing marker has empty raw columns.
class DisplacementCsv {
 public:
  explicit DisplacementCsv(std::ostream& out);
  void write(std::int64_t frame, const TrackerBank& bank);

 private:
  std::ostream& out_;
};

}  // namespace fvt
