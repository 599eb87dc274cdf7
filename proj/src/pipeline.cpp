#include "fvtactile/pipeline.hpp"

namespace fvt {

MarkerSummary summarize_markers(const TrackerBank& bank) {
  MarkerSummary s;
  Vec3 raw = Vec3::Zero();
  Vec3 filt = Vec3::Zero();
  int n_raw = 0;
  int n_filt = 0;
  const auto& tracks = bank.tracks();
  const auto& blobs = bank.raw();
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    const auto& t = tracks[i];
    if (!t.initialized) {
      ++s.missing;
      continue;
    }
    if (blobs[i]) {
      raw += Vec3(blobs[i]->x - t.seed.x(), blobs[i]->y - t.seed.y(), blobs[i]->size / t.seed.z());
      ++n_raw;
    } else {
      ++s.missing;
    }
    if (!t.stale) {
      filt += t.held;
      ++n_filt;
    }
  }
  if (n_raw > 0) s.raw_mean = raw / n_raw;
  if (n_filt > 0) s.filt_mean = filt / n_filt;
  return s;
}

Pipeline::Pipeline(Scenario& scenario, std::uint64_t seed, PipelineConfig cfg)
    : scenario_(scenario),
      cfg_(std::move(cfg)),
      sim_(cfg_.geometry, cfg_.skin, seed),
      tracker_(cfg_.geometry, cfg_.kalman, cfg_.blobs),
      plant_(scenario.initial_plant()) {}

void Pipeline::calibrate() {
  std::vector<GrayImage> frames;
  for (int i = 0; i < cfg_.calibration_frames; ++i) {
    auto out = sim_.rest_frame(scenario_, plant_);
    if (i == 0) rest_area_ = static_cast<double>(mask_area(out.frame.silhouette));
    frames.push_back(std::move(out.frame.image));
  }
  if (!frames.empty()) tracker_.calibrate(frames);
  calibrated_ = true;
}

const PerceptBundle& Pipeline::sense() {
  if (!calibrated_) calibrate();
  output_ = sim_.step(scenario_, plant_);
  const auto& field = tracker_.update(output_.frame.image);

  PerceptBundle p;
  p.frame = frame_;
  p.force = force_from_field(field, cfg_.z_gain);
  p.torque = torque_from_field(field, cfg_.geometry);
  p.object = object_moments(output_.frame.silhouette);
  if (cfg_.compute_slip && prev_image_) {
    p.slip = slip_estimate(*prev_image_, output_.frame.image, prev_mask_, cfg_.slip);
  }
  prev_image_ = output_.frame.image;
  prev_mask_ = output_.frame.silhouette;
  percepts_ = p;
  ++frame_;
  return percepts_;
}

void Pipeline::apply(const SkillCommand& cmd) { plant_ = step_plant(plant_, cmd, scenario_); }

}  // namespace fvt
