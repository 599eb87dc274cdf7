#pragma once

// Shared domain types for the simulated tactile stack: sensor geometry,
// marker observations, frame clock, images, errors and the seeded PRNG.

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fvt {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

/// Exception carrying a stable machine-readable code (e.g. "nothing_to_scan").
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

inline constexpr int kSchemaVersion = 1;
inline constexpr double kDefaultFrameRateHz = 15.0;

// ---------------------------------------------------------------------------
// Axis convention

enum class Axis { X = 0, Y = 1, Z = 2 };

/// The one coordinate convention every module consumes.
///
/// x: image horizontal (+ to the right), y: image vertical (+ down), both in
/// pixels. z: fingertip-to-fingertip normal, observed only through marker size
/// growth and expressed as z_gain * (s_t / s_0 - 1).
struct AxisConvention {
  double z_gain = 10.0;

  std::string_view describe(Axis axis) const;

  /// (dx_px, dy_px, size_ratio - 1) -> sensor frame (x, y, z).
  Vec3 image_to_sensor(const Vec3& image_displacement) const;
  Vec3 sensor_to_image(const Vec3& sensor_displacement) const;
};

AxisConvention axis_convention();

Axis parse_axis(std::string_view name);
std::string_view axis_name(Axis axis);

// ---------------------------------------------------------------------------
// Geometry

struct SensorGeometry {
  int image_width = 320;
  int image_height = 240;
  std::vector<Vec2> marker_layout;
  double nominal_marker_radius = 4.0;
  double frame_rate_hz = kDefaultFrameRateHz;

  /// 1 center marker plus concentric rings of `counts[i]` markers at `radii[i]`.
  static SensorGeometry rings(int width, int height, double marker_radius,
                              const std::vector<int>& counts,
                              const std::vector<double>& radii,
                              double frame_rate_hz = kDefaultFrameRateHz);

  /// 320x240 image, rings of 6/12/18 markers at 25/50/75 px plus a center
  /// marker (37 total), nominal radius 4 px, 15 Hz.
  static SensorGeometry make_default();

  std::size_t marker_count() const { return marker_layout.size(); }
  Vec2 layout_centroid() const;
  Vec2 image_center() const { return {image_width / 2.0, image_height / 2.0}; }
  /// Lever arm r_i = nominal center - layout centroid.
  Vec2 lever_arm(std::size_t marker_id) const;
  const Vec2& nominal_center(std::size_t marker_id) const;
  double nominal_marker_size() const;
  double dt() const { return 1.0 / frame_rate_hz; }

  /// Throws Error("invalid_geometry") when an invariant does not hold.
  void validate() const;
};

struct MarkerObservation {
  std::size_t marker_id = 0;
  double x = 0.0;
  double y = 0.0;
  double s = 0.0;
  bool valid = false;
};

struct FrameClock {
  std::int64_t t = 0;
  double dt = 1.0 / kDefaultFrameRateHz;

  void tick() { ++t; }
  double seconds() const { return static_cast<double>(t) * dt; }
};

// ---------------------------------------------------------------------------
// Images

struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  GrayImage() = default;
  GrayImage(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

  std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }
};

/// Binary mask; nonzero means "inside".
using Mask = GrayImage;

std::int64_t mask_area(const Mask& mask);

/// Binary PGM (P5) dump for inspection.
void write_pgm(const GrayImage& image, const std::string& path);

// ---------------------------------------------------------------------------
// Seeded random stream

/// Deterministic random stream.
///
/// Raw bits come from std::mt19937_64, whose output sequence is fixed by the
/// C++ standard. Floating-point draws do not use the library distributions
/// (their algorithms are implementation-defined): uniform(0,1) is
/// (bits >> 11) * 2^-53 and normal draws use the Marsaglia polar method with
/// the second variate cached. Integer and uniform streams are bit-identical on
/// every conforming platform; normal draws additionally depend only on
/// std::log and std::sqrt.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal(double mean = 0.0, double sigma = 1.0);
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  /// Independent child stream, deterministic in (parent state, salt).
  Rng fork(std::uint64_t salt);

 private:
  std::mt19937_64 engine_;
  std::optional<double> cached_normal_;
};

inline Rng seeded_rng(std::uint64_t seed) { return Rng(seed); }

}  // namespace fvt
