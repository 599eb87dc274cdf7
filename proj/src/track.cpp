#include "fvtactile/track.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <tuple>

namespace fvt {

std::vector<Blob> detect_blobs(const GrayImage& frame, const BlobParams& params) {
  const int w = frame.width;
  const int h = frame.height;
  std::vector<int> label(static_cast<std::size_t>(w) * h, 0);
  std::vector<Blob> blobs;
  std::vector<int> stack;
  int next = 0;
  for (int j = 0; j < h; ++j) {
    for (int i = 0; i < w; ++i) {
      const std::size_t idx = static_cast<std::size_t>(j) * w + i;
      if (label[idx] || frame.pixels[idx] >= params.threshold) continue;
      ++next;
      label[idx] = next;
      stack.assign(1, static_cast<int>(idx));
      double sw = 0.0, sx = 0.0, sy = 0.0;
      int count = 0;
      while (!stack.empty()) {
        const int p = stack.back();
        stack.pop_back();
        const int px = p % w;
        const int py = p / w;
        const double weight = 255.0 - frame.pixels[static_cast<std::size_t>(p)];
        sw += weight;
        sx += weight * px;
        sy += weight * py;
        ++count;
        const int nx[4] = {px - 1, px + 1, px, px};
        const int ny[4] = {py, py, py - 1, py + 1};
        for (int k = 0; k < 4; ++k) {
          if (nx[k] < 0 || ny[k] < 0 || nx[k] >= w || ny[k] >= h) continue;
          const std::size_t q = static_cast<std::size_t>(ny[k]) * w + nx[k];
          if (label[q] || frame.pixels[q] >= params.threshold) continue;
          label[q] = next;
          stack.push_back(static_cast<int>(q));
        }
      }
      if (count < params.min_area || count > params.max_area) continue;
      blobs.push_back({sx / sw, sy / sw, static_cast<double>(count)});
    }
  }
  std::sort(blobs.begin(), blobs.end(), [](const Blob& a, const Blob& b) {
    return std::tie(a.y, a.x) < std::tie(b.y, b.x);
  });
  return blobs;
}

std::vector<std::optional<std::size_t>> associate(std::span<const Blob> blobs,
                                                  std::span<const Vec2> predicted, double gate) {
  struct Pair {
    double d;
    std::size_t marker;
    std::size_t blob;
  };
  std::vector<Pair> pairs;
  for (std::size_t m = 0; m < predicted.size(); ++m) {
    for (std::size_t b = 0; b < blobs.size(); ++b) {
      const double d = std::hypot(blobs[b].x - predicted[m].x(), blobs[b].y - predicted[m].y());
      if (d <= gate) pairs.push_back({d, m, b});
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    return std::tie(a.d, a.marker, a.blob) < std::tie(b.d, b.marker, b.blob);
  });
  std::vector<std::optional<std::size_t>> out(predicted.size());
  std::vector<bool> used(blobs.size(), false);
  for (const auto& p : pairs) {
    if (out[p.marker] || used[p.blob]) continue;
    out[p.marker] = p.blob;
    used[p.blob] = true;
  }
  return out;
}

// ---------------------------------------------------------------------------

void KalmanConfig::validate() const {
  if (!(q > 0.0) || !(r > 0.0) || !(dt > 0.0)) {
    throw Error("invalid_argument", "Kalman q, r and dt must be positive");
  }
}

KfCov kf_transition(double dt) {
  KfCov a = KfCov::Identity();
  a(1, 6) = dt;
  a(3, 7) = dt;
  a(5, 8) = dt;
  return a;
}

Eigen::Matrix<double, kMeasDim, kStateDim> kf_observation() {
  Eigen::Matrix<double, kMeasDim, kStateDim> h = Eigen::Matrix<double, kMeasDim, kStateDim>::Zero();
  for (int i = 0; i < kMeasDim; ++i) h(i, i) = 1.0;
  return h;
}

KfCov kf_process_noise(double q) {
  KfCov qm = q * KfCov::Identity();
  for (int i : {0, 2, 4}) qm(i, i) = q * 1e-6;
  return qm;
}

bool is_positive_definite(const KfCov& cov) {
  Eigen::LLT<KfCov> llt(cov);
  return llt.info() == Eigen::Success;
}

MarkerTrack init_track(std::size_t marker_id, double x, double y, double s,
                       const KalmanConfig& config) {
  config.validate();
  MarkerTrack t;
  t.marker_id = marker_id;
  t.mean << x, x, y, y, s, s, 0.0, 0.0, 0.0;
  t.cov = config.r * KfCov::Identity();
  t.initialized = true;
  t.seed = Vec3(x, y, s);
  t.held = Vec3(0.0, 0.0, 1.0);
  t.stale = false;
  return t;
}

MarkerTrack kf_step_with_r(const MarkerTrack& track, const KalmanConfig& config, double r,
                           const std::optional<MarkerObservation>& measurement) {
  const KfCov a = kf_transition(config.dt);
  MarkerTrack next = track;
  next.mean = a * track.mean;
  next.cov = a * track.cov * a.transpose() + kf_process_noise(config.q);

  if (measurement && measurement->valid) {
    const auto h = kf_observation();
    KfMeas z;
    z << track.seed.x(), measurement->x, track.seed.y(), measurement->y, track.seed.z(),
        measurement->s;
    const Eigen::Matrix<double, kMeasDim, kMeasDim> rm =
        r * Eigen::Matrix<double, kMeasDim, kMeasDim>::Identity();
    const Eigen::Matrix<double, kMeasDim, kMeasDim> s = h * next.cov * h.transpose() + rm;
    const Eigen::Matrix<double, kStateDim, kMeasDim> k =
        s.ldlt().solve(h * next.cov).transpose();
    next.mean += k * (z - h * next.mean);
    const KfCov ikh = KfCov::Identity() - k * h;
    next.cov = ikh * next.cov * ikh.transpose() + k * rm * k.transpose();
    next.held = Vec3(next.mean(1) - next.mean(0), next.mean(3) - next.mean(2),
                     next.mean(5) / next.mean(4));
    next.stale = false;
  } else {
    next.stale = true;
  }

  next.cov = (0.5 * (next.cov + next.cov.transpose())).eval();
  if (!is_positive_definite(next.cov)) {
    ++next.pd_repairs;
    for (int i = 0; i < kStateDim; ++i) next.cov(i, i) = std::max(next.cov(i, i), 1e-12);
  }
  return next;
}

MarkerTrack kf_step(const MarkerTrack& track, const KalmanConfig& config,
                    const std::optional<MarkerObservation>& measurement) {
  return kf_step_with_r(track, config, config.r, measurement);
}

DisplacementField displacement_field(std::span<const MarkerTrack> tracks, std::int64_t timestamp) {
  DisplacementField f;
  f.timestamp = timestamp;
  f.markers.reserve(tracks.size());
  for (const auto& t : tracks) {
    MarkerDisplacement d;
    d.marker_id = t.marker_id;
    d.dx = t.held.x();
    d.dy = t.held.y();
    d.ratio = t.held.z();
    d.stale = t.stale || !t.initialized;
    f.markers.push_back(d);
  }
  return f;
}

// ---------------------------------------------------------------------------

TrackerBank::TrackerBank(SensorGeometry geometry, KalmanConfig config, BlobParams blobs,
                         double gate_factor)
    : geometry_(std::move(geometry)),
      config_(config),
      blob_params_(blobs),
      gate_(gate_factor * geometry_.nominal_marker_radius) {
  geometry_.validate();
  config_.validate();
  tracks_.resize(geometry_.marker_count());
  for (std::size_t i = 0; i < tracks_.size(); ++i) tracks_[i].marker_id = i;
  raw_.resize(geometry_.marker_count());
}

std::vector<Vec2> TrackerBank::predictions() const {
  std::vector<Vec2> p(tracks_.size());
  for (std::size_t i = 0; i < tracks_.size(); ++i) {
    p[i] = tracks_[i].initialized ? tracks_[i].predicted_position(config_.dt)
                                  : geometry_.nominal_center(i);
  }
  return p;
}

void TrackerBank::calibrate(std::span<const GrayImage> rest_frames) {
  const std::size_t n = geometry_.marker_count();
  std::vector<Vec3> sum(n, Vec3::Zero());
  std::vector<int> hits(n, 0);
  const std::vector<Vec2> nominal(geometry_.marker_layout.begin(), geometry_.marker_layout.end());
  for (const auto& frame : rest_frames) {
    const auto blobs = detect_blobs(frame, blob_params_);
    const auto match = associate(blobs, nominal, gate_);
    for (std::size_t i = 0; i < n; ++i) {
      if (!match[i]) continue;
      const Blob& b = blobs[*match[i]];
      sum[i] += Vec3(b.x, b.y, b.size);
      ++hits[i];
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (hits[i] == 0) {
      tracks_[i] = MarkerTrack{};
      tracks_[i].marker_id = i;
      continue;
    }
    const Vec3 m = sum[i] / hits[i];
    tracks_[i] = init_track(i, m.x(), m.y(), m.z(), config_);
  }
}

const DisplacementField& TrackerBank::update(const GrayImage& frame) {
  const auto blobs = detect_blobs(frame, blob_params_);
  const auto match = associate(blobs, predictions(), gate_);
  for (std::size_t i = 0; i < tracks_.size(); ++i) {
    raw_[i].reset();
    if (match[i]) raw_[i] = blobs[*match[i]];
    if (!tracks_[i].initialized) {
      if (raw_[i]) tracks_[i] = init_track(i, raw_[i]->x, raw_[i]->y, raw_[i]->size, config_);
      continue;
    }
    std::optional<MarkerObservation> obs;
    if (raw_[i]) obs = MarkerObservation{i, raw_[i]->x, raw_[i]->y, raw_[i]->size, true};
    tracks_[i] = kf_step(tracks_[i], config_, obs);
  }
  field_ = displacement_field(tracks_, frames_);
  ++frames_;
  return field_;
}

std::int64_t TrackerBank::pd_repairs() const {
  std::int64_t n = 0;
  for (const auto& t : tracks_) n += t.pd_repairs;
  return n;
}

DisplacementCsv::DisplacementCsv(std::ostream& out) : out_(out) {
  out_ << "frame,marker_id,raw_x,raw_y,raw_s,filt_x,filt_y,filt_s,missing_flag\n";
}

void DisplacementCsv::write(std::int64_t frame, const TrackerBank& bank) {
  const auto& tracks = bank.tracks();
  const auto& raw = bank.raw();
  const auto& field = bank.field();
  out_ << std::setprecision(10);
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    const auto& t = tracks[i];
    const auto& d = field.markers[i];
    out_ << frame << ',' << i << ',';
    if (raw[i] && t.initialized) {
      out_ << raw[i]->x - t.seed.x() << ',' << raw[i]->y - t.seed.y() << ','
           << raw[i]->size / t.seed.z() << ',';
    } else {
      out_ << ",,,";
    }
    out_ << d.dx << ',' << d.dy << ',' << d.ratio << ',' << (raw[i] ? 0 : 1) << '\n';
  }
}

}  // namespace fvt
