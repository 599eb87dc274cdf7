#pragma once

// Force, torque, object and slip percepts computed from the filtered
// displacement field and the silhouette channel.

#include "fvtactile/core.hpp"
#include "fvtactile/track.hpp"

namespace fvt {

struct ForceEstimate {
  Vec3 f = Vec3::Zero();  // px-units; z is z_gain * mean(s_t/s_0 - 1)
};

struct TorqueEstimate {
  double tau_z = 0.0;  // px^2
};

struct ObjectPercept {
  bool present = false;
  double x = 0.0;  // centroid, px
  double y = 0.0;
  double area = 0.0;   // M, px^2
  double theta = 0.0;  // (-pi/2, pi/2]
  bool degenerate_orientation = false;
};

struct SlipSignal {
  double flow_magnitude = 0.0;  // px/frame
  bool active = false;
  int blocks = 0;  // number of blocks that contributed
};

/// Means over non-stale markers. Throws Error("no_markers") if none remain.
ForceEstimate force_from_field(const DisplacementField& field, double z_gain = 10.0);

/// mean_i (r_x d_y - r_y d_x) over non-stale markers, r_i the lever arm about
/// the layout centroid. Throws Error("no_markers") with fewer than 3.
TorqueEstimate torque_from_field(const DisplacementField& field, const SensorGeometry& geometry);

/// Raw moments are accumulated in 64-bit integers so the result does not
/// depend on summation order. theta = atan2(2 mu11, mu20 - mu02) / 2; when
/// mu11 = 0 and mu20 = mu02 theta is 0 and degenerate_orientation is set.
ObjectPercept object_moments(const Mask& mask);

struct SlipConfig {
  int block = 8;
  int search = 4;
  double threshold = 0.5;  // px/frame
  /// Pixels darker than this are markers and are left out of the match cost.
  int marker_threshold = 120;
};

/// Exhaustive block matching of the object region between two frames.
///
/// Blocks on a `block`-aligned grid that lie fully inside `mask` (the object
/// region in `prev`) are matched against `cur` within +-search px using the
/// mean absolute difference over non-marker pixels. Ties go to the smaller
/// displacement. The magnitude is the mean best-match displacement norm.
SlipSignal slip_estimate(const GrayImage& prev, const GrayImage& cur, const Mask& mask,
                         const SlipConfig& config = {});

/// One synchronized percept bundle per frame.
struct PerceptBundle {
  std::int64_t frame = 0;
  ForceEstimate force;
  TorqueEstimate torque;
  ObjectPercept object;
  SlipSignal slip;
};

}  // namespace fvt
