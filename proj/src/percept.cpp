#include "fvtactile/percept.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace fvt {

ForceEstimate force_from_field(const DisplacementField& field, double z_gain) {
  Vec3 sum = Vec3::Zero();
  int n = 0;
  for (const auto& d : field.markers) {
    if (d.stale) continue;
    sum += Vec3(d.dx, d.dy, d.ratio - 1.0);
    ++n;
  }
  if (n == 0) throw Error("no_markers", "force estimate needs at least one tracked marker");
  ForceEstimate est;
  est.f = sum / n;
  est.f.z() *= z_gain;
  return est;
}

TorqueEstimate torque_from_field(const DisplacementField& field, const SensorGeometry& geometry) {
  double sum = 0.0;
  int n = 0;
  for (const auto& d : field.markers) {
    if (d.stale) continue;
    const Vec2 r = geometry.lever_arm(d.marker_id);
    sum += r.x() * d.dy - r.y() * d.dx;
    ++n;
  }
  if (n < 3) throw Error("no_markers", "torque estimate needs at least three tracked markers");
  return {sum / n};
}

ObjectPercept object_moments(const Mask& mask) {
  std::int64_t m00 = 0, m10 = 0, m01 = 0, m20 = 0, m11 = 0, m02 = 0;
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (!mask.at(x, y)) continue;
      ++m00;
      m10 += x;
      m01 += y;
      m20 += static_cast<std::int64_t>(x) * x;
      m11 += static_cast<std::int64_t>(x) * y;
      m02 += static_cast<std::int64_t>(y) * y;
    }
  }
  ObjectPercept p;
  if (m00 == 0) return p;
  p.present = true;
  p.area = static_cast<double>(m00);
  p.x = static_cast<double>(m10) / static_cast<double>(m00);
  p.y = static_cast<double>(m01) / static_cast<double>(m00);
  // M00^2 times the central moments, still exact in 64 bits for any mask
  // that fits a sensor-sized image.
  const std::int64_t a = m00 * m20 - m10 * m10;
  const std::int64_t b = m00 * m02 - m01 * m01;
  const std::int64_t c = m00 * m11 - m10 * m01;
  if (c == 0 && a == b) {
    p.degenerate_orientation = true;
    p.theta = 0.0;
  } else {
    p.theta = 0.5 * std::atan2(2.0 * static_cast<double>(c), static_cast<double>(a - b));
    if (p.theta <= -std::numbers::pi / 2.0) p.theta += std::numbers::pi;
  }
  return p;
}

SlipSignal slip_estimate(const GrayImage& prev, const GrayImage& cur, const Mask& mask,
                         const SlipConfig& config) {
  if (prev.width != cur.width || prev.height != cur.height || mask.width != prev.width ||
      mask.height != prev.height) {
    throw Error("invalid_argument", "slip_estimate: frame and mask sizes differ");
  }
  const int bs = config.block;
  const int rs = config.search;
  const int min_valid = bs * bs / 2;
  SlipSignal out;
  double total = 0.0;

  for (int by = 0; by + bs <= prev.height; by += bs) {
    for (int bx = 0; bx + bs <= prev.width; bx += bs) {
      bool inside = true;
      for (int j = 0; j < bs && inside; ++j) {
        for (int i = 0; i < bs; ++i) {
          if (!mask.at(bx + i, by + j)) {
            inside = false;
            break;
          }
        }
      }
      if (!inside) continue;

      double best_cost = std::numeric_limits<double>::infinity();
      int best_d2 = 0;
      int best_dx = 0, best_dy = 0;
      bool found = false;
      for (int dy = -rs; dy <= rs; ++dy) {
        for (int dx = -rs; dx <= rs; ++dx) {
          if (bx + dx < 0 || by + dy < 0 || bx + dx + bs > cur.width || by + dy + bs > cur.height) {
            continue;
          }
          long sad = 0;
          int valid = 0;
          for (int j = 0; j < bs; ++j) {
            for (int i = 0; i < bs; ++i) {
              const int a = prev.at(bx + i, by + j);
              const int c = cur.at(bx + dx + i, by + dy + j);
              if (a < config.marker_threshold || c < config.marker_threshold) continue;
              sad += std::abs(a - c);
              ++valid;
            }
          }
          if (valid < min_valid) continue;
          const double cost = static_cast<double>(sad) / valid;
          const int d2 = dx * dx + dy * dy;
          if (cost < best_cost || (cost == best_cost && d2 < best_d2)) {
            best_cost = cost;
            best_d2 = d2;
            best_dx = dx;
            best_dy = dy;
            found = true;
          }
        }
      }
      if (!found) continue;
      total += std::hypot(best_dx, best_dy);
      ++out.blocks;
    }
  }
  if (out.blocks > 0) out.flow_magnitude = total / out.blocks;
  out.active = out.flow_magnitude > config.threshold;
  return out;
}

}  // namespace fvt
