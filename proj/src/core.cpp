#include "fvtactile/core.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

namespace fvt {

std::string_view AxisConvention::describe(Axis axis) const {
  switch (axis) {
    case Axis::X:
      return "image horizontal (+right), pixels";
    case Axis::Y:
      return "image vertical (+down), pixels";
    case Axis::Z:
      return "fingertip-to-fingertip normal, from marker size growth";
  }
  return "";
}

Vec3 AxisConvention::image_to_sensor(const Vec3& d) const {
  return {d.x(), d.y(), z_gain * d.z()};
}

Vec3 AxisConvention::sensor_to_image(const Vec3& d) const {
  return {d.x(), d.y(), d.z() / z_gain};
}

AxisConvention axis_convention() { return AxisConvention{}; }

Axis parse_axis(std::string_view name) {
  if (name == "x") return Axis::X;
  if (name == "y") return Axis::Y;
  if (name == "z") return Axis::Z;
  throw Error("invalid_argument", "unknown axis '" + std::string(name) + "'");
}

std::string_view axis_name(Axis axis) {
  switch (axis) {
    case Axis::X:
      return "x";
    case Axis::Y:
      return "y";
    case Axis::Z:
      return "z";
  }
  return "?";
}

SensorGeometry SensorGeometry::rings(int width, int height, double marker_radius,
                                     const std::vector<int>& counts,
                                     const std::vector<double>& radii,
                                     double frame_rate_hz) {
  if (counts.size() != radii.size()) {
    throw Error("invalid_geometry", "ring counts and radii differ in length");
  }
  SensorGeometry g;
  g.image_width = width;
  g.image_height = height;
  g.nominal_marker_radius = marker_radius;
  g.frame_rate_hz = frame_rate_hz;
  const Vec2 c = g.image_center();
  g.marker_layout.push_back(c);
  for (std::size_t ring = 0; ring < counts.size(); ++ring) {
    // Alternate rings are offset by half a step so neighbours do not line up.
    const double offset = (ring % 2 == 0) ? 0.0 : std::numbers::pi / counts[ring];
    for (int k = 0; k < counts[ring]; ++k) {
      const double a = offset + 2.0 * std::numbers::pi * k / counts[ring];
      g.marker_layout.emplace_back(c.x() + radii[ring] * std::cos(a),
                                   c.y() + radii[ring] * std::sin(a));
    }
  }
  g.validate();
  return g;
}

SensorGeometry SensorGeometry::make_default() {
  return rings(320, 240, 4.0, {6, 12, 18}, {25.0, 50.0, 75.0});
}

Vec2 SensorGeometry::layout_centroid() const {
  Vec2 sum = Vec2::Zero();
  for (const auto& p : marker_layout) sum += p;
  return marker_layout.empty() ? image_center() : Vec2(sum / marker_layout.size());
}

Vec2 SensorGeometry::lever_arm(std::size_t marker_id) const {
  return nominal_center(marker_id) - layout_centroid();
}

const Vec2& SensorGeometry::nominal_center(std::size_t marker_id) const {
  if (marker_id >= marker_layout.size()) {
    throw Error("invalid_argument", "unknown marker_id " + std::to_string(marker_id));
  }
  return marker_layout[marker_id];
}

double SensorGeometry::nominal_marker_size() const {
  return std::numbers::pi * nominal_marker_radius * nominal_marker_radius;
}

void SensorGeometry::validate() const {
  auto fail = [](const std::string& msg) { throw Error("invalid_geometry", msg); };
  if (image_width <= 0 || image_height <= 0) fail("image dimensions must be positive");
  if (!(nominal_marker_radius > 0.0)) fail("nominal_marker_radius must be positive");
  if (!(frame_rate_hz > 0.0)) fail("frame_rate_hz must be positive");
  const double margin = 2.0 * nominal_marker_radius;
  for (std::size_t i = 0; i < marker_layout.size(); ++i) {
    const Vec2& p = marker_layout[i];
    if (p.x() < margin || p.y() < margin || p.x() > image_width - margin ||
        p.y() > image_height - margin) {
      fail("marker " + std::to_string(i) + " violates the image margin");
    }
    for (std::size_t j = i + 1; j < marker_layout.size(); ++j) {
      if ((p - marker_layout[j]).norm() <= 4.0 * nominal_marker_radius) {
        fail("markers " + std::to_string(i) + " and " + std::to_string(j) + " are too close");
      }
    }
  }
}

std::int64_t mask_area(const Mask& mask) {
  std::int64_t n = 0;
  for (auto v : mask.pixels) n += (v != 0);
  return n;
}

void write_pgm(const GrayImage& image, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io", "cannot open " + path);
  out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()),
            static_cast<std::streamsize>(image.pixels.size()));
}

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal(double mean, double sigma) {
  if (cached_normal_) {
    const double z = *cached_normal_;
    cached_normal_.reset();
    return mean + sigma * z;
  }
  double u = 0.0, v = 0.0, s = 0.0;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double k = std::sqrt(-2.0 * std::log(s) / s);
  cached_normal_ = v * k;
  return mean + sigma * u * k;
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw Error("invalid_argument", "Rng::below(0)");
  // Rejection keeps the draw exactly uniform.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x = 0;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

Rng Rng::fork(std::uint64_t salt) {
  // splitmix64 finalizer over (next output ^ salt).
  std::uint64_t z = engine_() ^ (salt * 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return Rng(z ^ (z >> 31));
}

}  // namespace fvt
