// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Each criterion runs over seeds 0..4 where it is stochastic.

#include "fvtactile/harness.hpp"
#include "fvtactile/learn.hpp"
#include "fvtactile/percept.hpp"
#include "fvtactile/skills.hpp"
#include "fvtactile/track.hpp"

#include "oracles.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

using namespace fvt;
namespace fs = std::filesystem;

namespace {

constexpr int kSeeds = 5;

/// Collects failed conditions and a short summary for one criterion.
class Check {
 public:
  void require(bool ok, const std::string& what) {
    if (!ok) failures_.push_back(what);
  }
  void note(const std::string& s) { notes_.push_back(s); }
  bool ok() const { return failures_.empty(); }
  std::string detail() const {
    std::string s;
    for (const auto& n : notes_) s += (s.empty() ? "" : "; ") + n;
    for (const auto& f : failures_) s += (s.empty() ? "" : "; ") + std::string("failed: ") + f;
    return s;
  }

 private:
  std::vector<std::string> failures_;
  std::vector<std::string> notes_;
};

std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("fvt_acceptance_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

double population_variance(const std::vector<double>& v) {
  double mu = 0.0, s = 0.0;
  for (double x : v) mu += x;
  mu /= static_cast<double>(v.size());
  for (double x : v) s += (x - mu) * (x - mu);
  return s / static_cast<double>(v.size());
}

RunResult run(const std::string& scenario, const std::string& skill, std::uint64_t seed,
              std::optional<int> frames = std::nullopt) {
  RunConfig cfg;
  cfg.scenario = scenario;
  cfg.skill = skill;
  cfg.seed = seed;
  cfg.frames = frames;
  return run_scenario(cfg);
}

bool has_flag(const RunResult& r, const std::string& flag) {
  return std::find(r.flags.begin(), r.flags.end(), flag) != r.flags.end();
}

// ---------------------------------------------------------------------------

void kalman_smoothing(Check& c) {
  double worst_ratio = 0.0, worst_bias = 0.0;
  for (int seed = 0; seed < kSeeds; ++seed) {
    const AppliedWrench w{Vec3(2.0, 1.0, 0.5), 0.0};
    auto sc = make_static_hold(w);
    PipelineConfig pc;
    pc.skin.noise_sigma = 0.5;
    Pipeline p(*sc, static_cast<std::uint64_t>(seed), pc);
    const std::size_t n = pc.geometry.marker_count();
    std::vector<std::vector<double>> raw(n), filt(n);
    double mean_sum = 0.0;
    int mean_count = 0;
    for (int i = 0; i < 300; ++i) {
      p.sense();
      p.apply({});
      if (i < 100) continue;
      for (std::size_t m = 0; m < n; ++m) {
        const auto& b = p.tracker().raw()[m];
        const auto& t = p.tracker().tracks()[m];
        if (b) raw[m].push_back(b->x - t.seed.x());
        filt[m].push_back(t.held.x());
      }
      mean_sum += summarize_markers(p.tracker()).filt_mean.x();
      ++mean_count;
    }
    double vf = 0.0, vr = 0.0;
    for (std::size_t m = 0; m < n; ++m) {
      vf += population_variance(filt[m]);
      vr += population_variance(raw[m]);
    }
    const double ratio = vf / vr;
    const double bias = std::abs(mean_sum / mean_count - w.f.x());
    worst_ratio = std::max(worst_ratio, ratio);
    worst_bias = std::max(worst_bias, bias);
    c.require(ratio <= 0.25, "variance ratio " + fmt(ratio) + " at seed " + std::to_string(seed));
    c.require(bias < 0.1, "bias " + fmt(bias) + " at seed " + std::to_string(seed));
  }

  const KalmanConfig kc;
  const auto p_star = oracle::riccati_fixed_point(kc.q, kc.r, kc.dt);
  MarkerTrack t = init_track(0, 10.0, 20.0, 50.0, kc);
  MarkerObservation z;
  z.x = 12.0;
  z.y = 21.0;
  z.s = 55.0;
  z.valid = true;
  for (int i = 0; i < 200000; ++i) t = kf_step(t, kc, z);
  const double err = static_cast<double>((t.cov.cast<long double>() - p_star).cwiseAbs().maxCoeff());
  c.require(err < 1e-10, "Riccati error " + fmt(err));
  c.note("variance ratio <= " + fmt(worst_ratio, 3) + ", bias <= " + fmt(worst_bias, 3) +
         " px, Riccati error " + fmt(err, 3));
}

void controller_formulas(Check& c) {
  ForceTrackConfig ft;
  ft.f_min = 0.1;
  ft.f_max = 1.1;
  ft.v_min = 0.0;
  ft.v_max = 20.0;
  ft.eps = 0.2;
  ForceEstimate f;
  auto ft_x = [&](double fx, const ForceTrackConfig& cfg) {
    f.f = Vec3(fx, 0.0, 0.0);
    return force_track_step(f, cfg).ee_velocity.x();
  };
  c.require(std::abs(ft_x(0.5, ft) - 8.0) < 1e-12, "ForceTrack 0.5 -> 8");
  c.require(std::abs(ft_x(-0.5, ft) + 8.0) < 1e-12, "ForceTrack -0.5 -> -8");
  c.require(ft_x(0.2, ft) == 0.0 && ft_x(-0.15, ft) == 0.0, "ForceTrack dead zone");
  ForceTrackConfig clamp = ft;
  clamp.v_min = 2.0;
  clamp.eps = 0.12;
  c.require(ft_x(5.0, clamp) == 20.0, "SpeedCtrl clamp to v_max");
  c.require(ft_x(0.15, clamp) == 2.0, "SpeedCtrl clamp to v_min");
  c.require(ft_x(-5.0, clamp) == -20.0, "SpeedCtrl clamp sign");

  ObjectTrackConfig ot;
  ot.m_eps = 1000.0;
  ObjectPercept obj;
  obj.present = true;
  obj.x = 170.0;
  obj.y = 120.0;
  obj.area = 2000.0;
  Vec2 inc = object_track_increment(obj, ot);
  c.require(std::abs(inc.x() - 1.0) < 1e-12 && inc.y() == -ot.delta, "ObjectTrack (170,120,2000)");
  obj.x = 60.0;
  obj.area = 500.0;
  inc = object_track_increment(obj, ot);
  c.require(inc.x() == -ot.x_max && inc.y() == ot.delta, "ObjectTrack clamp and advance");
  obj.x = 160.0 + ot.xbar_eps;
  c.require(object_track_increment(obj, ot).x() == 0.0, "ObjectTrack dead zone");

  ArmRotConfig ar;
  ar.k_tau = 0.5;
  ar.eps_tau = 0.1;
  TorqueEstimate tau;
  tau.tau_z = 0.4;
  c.require(std::abs(arm_rot_step(tau, ar).ee_rot_velocity + 0.2) < 1e-15, "ArmRot 0.4 -> -0.2");
  tau.tau_z = -0.4;
  c.require(std::abs(arm_rot_step(tau, ar).ee_rot_velocity - 0.2) < 1e-15, "ArmRot -0.4 -> 0.2");
  tau.tau_z = 0.1;
  c.require(arm_rot_step(tau, ar).ee_rot_velocity == 0.0, "ArmRot dead zone");

  LeakyConfig lk;
  lk.leak_alpha = 0.9;
  c.require(std::abs(leaky_step(10.0, -20.0, lk) - 11.0) < 1e-12, "leaky 0.9*10 + 0.1*20 = 11");
  c.note("ForceTrack, SpeedCtrl, ObjectTrack, ArmRot and LeakyInt hand examples");
}

void followme_comparison(Check& c) {
  double min_nonzero = 1.0, min_gap = 1e9;
  for (int seed = 0; seed < kSeeds; ++seed) {
    const std::string s = " at seed " + std::to_string(seed);
    const RunResult ot = run("followme-pull-z", "object-track", seed);
    bool all_zero = !ot.log.empty();
    for (const auto& rec : ot.log) all_zero = all_zero && rec.at("command").at("ee_velocity")[2] == 0.0;
    c.require(all_zero, "ObjectTrack z-commands not all zero" + s);
    const RunResult ft = run("followme-pull-z", "force-track", seed);
    const double nz = ft.metrics.at("nonzero_fraction");
    min_nonzero = std::min(min_nonzero, nz);
    c.require(nz >= 0.9, "ForceTrack nonzero fraction " + fmt(nz) + s);
    for (const std::string axis : {"x", "y"}) {
      const double cf = run("followme-pull-" + axis, "force-track", seed).metrics.at("correlation");
      const double co = run("followme-pull-" + axis, "object-track", seed).metrics.at("correlation");
      min_gap = std::min(min_gap, cf - co);
      c.require(cf - co > 0.1, axis + " correlation gap " + fmt(cf - co) + s);
    }
  }
  c.note("z: ObjectTrack all zero, ForceTrack nonzero >= " + fmt(min_nonzero, 3) +
         "; x/y correlation gap >= " + fmt(min_gap, 3));
}

void leaky_and_handover(Check& c) {
  LeakyConfig lk;
  lk.leak_alpha = 0.9;
  lk.min_opening = -100.0;
  lk.max_opening = 100.0;
  const double set_point = 1.0;
  double x = 0.0;
  int first = -1;
  for (int t = 1; t <= 100 && first < 0; ++t) {
    x = leaky_step(x, -set_point, lk);
    if (std::abs(x - set_point) <= 0.01 * set_point) first = t;
  }
  const int bound = static_cast<int>(std::ceil(std::log(0.01) / std::log(0.9)));
  c.require(first == bound && bound == 44, "within 1% first at step " + std::to_string(first));

  int closures = 0, false_closures = 0;
  for (int seed = 0; seed < kSeeds; ++seed) {
    HandoverConfig hc;
    HandoverTrigger trig(hc);
    Rng rng(static_cast<std::uint64_t>(seed) + 100);
    bool force_on = false;
    for (int i = 0; i < 1000; ++i) {
      // Force magnitudes straddle the threshold and its hysteresis band; slip toggles at random.
      const double m = hc.force_threshold * rng.uniform(0.8, 1.3);
      SlipSignal slip;
      slip.active = rng.uniform() < 0.5;
      ForceEstimate f;
      f.f = Vec3(m, 0.0, 0.0);
      if (force_on && m <= hc.force_threshold) force_on = false;
      else if (!force_on && m > 1.1 * hc.force_threshold) force_on = true;
      const bool closed = trig.step(slip, f) == -hc.close_opening;
      closures += closed;
      if (closed && !(slip.active && force_on)) ++false_closures;
      if (!closed && slip.active && force_on) ++false_closures;
    }
  }
  c.require(false_closures == 0, std::to_string(false_closures) + " closures disagree with slip AND force");
  c.require(closures > 0, "trigger never closed");
  c.note("1% reached at step " + std::to_string(first) + "; " + std::to_string(closures) +
         " closures over 5x1000 adversarial frames, 0 without slip AND force");
}

void arm_rotation(Check& c) {
  double worst = 0.0;
  for (int seed = 0; seed < kSeeds; ++seed) {
    const RunResult r = run("arm-rot", "arm-rot", seed, 200);
    const double ratio = std::abs(r.metrics.at("final_skin_torque")) / std::abs(r.metrics.at("initial_skin_torque"));
    worst = std::max(worst, ratio);
    c.require(ratio < 0.05, "|tau| ratio " + fmt(ratio) + " at seed " + std::to_string(seed));
  }
  c.note("|tau_final|/|tau_initial| <= " + fmt(worst, 3) + " within 200 steps, 5/5 seeds");
}

void stuck_pen(Check& c) {
  const double eps = InHandRotConfig{}.eps_tau;
  double max_angle = 0.0;
  for (int seed = 0; seed < kSeeds; ++seed) {
    const std::string s = " at seed " + std::to_string(seed);
    const RunResult r = run("stuck-pen", "in-hand-rot", seed);
    c.require(r.skill_status == "done", "skill status " + r.skill_status + s);
    c.require(!r.log.empty(), "empty log" + s);
    if (r.log.empty()) continue;
    const double tau = r.log.back().at("torque");
    c.require(std::abs(tau) < eps, "final |tau| " + fmt(std::abs(tau)) + s);
    const double angle = r.metrics.at("final_angle");
    max_angle = std::max(max_angle, angle);
    c.require(angle < std::numbers::pi / 2.0, "angle reached 90 deg" + s);
    c.require(has_flag(r, "possible_stall"), "possible_stall missing" + s);
  }
  c.note("terminated with |tau| < " + fmt(eps) + ", max angle " + fmt(max_angle * 180.0 / std::numbers::pi, 3) +
         " deg, possible_stall 5/5");
}

/// Independent standardization for the KRR oracle: population z-score, constant
/// channels left unscaled, then divided by sqrt(d).
Eigen::MatrixXd oracle_standardize(const Eigen::MatrixXd& X) {
  Eigen::MatrixXd Z = X;
  const double d = static_cast<double>(X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const double mu = X.col(j).mean();
    const double var = (X.col(j).array() - mu).square().mean();
    const double sd = var > 0.0 ? std::sqrt(var) : 1.0;
    Z.col(j) = (X.col(j).array() - mu) / (sd * std::sqrt(d));
  }
  return Z;
}

void force_learning(Check& c) {
  // Oracle agreement on a small synthetic problem.
  Rng rng(50);
  MatX Xs(50, 6);
  VecX ys(50);
  for (int i = 0; i < 50; ++i) {
    for (int j = 0; j < 6; ++j) Xs(i, j) = rng.normal();
    ys(i) = std::sin(Xs(i, 0)) + 0.5 * Xs(i, 1) * Xs(i, 2);
  }
  double worst_oracle = 0.0;
  for (double lambda : {1e-6, 1e-3, 0.1}) {
    const KrrModel m = krr_fit(Xs, ys, lambda, 0.2);
    const VecX w = oracle::krr_weights(oracle_standardize(Xs), ys, 0.2, lambda);
    worst_oracle = std::max(worst_oracle, (m.weights - w).norm() / w.norm());
  }

  double worst_rmse = 0.0;
  for (int seed = 0; seed < kSeeds; ++seed) {
    const std::string s = " at seed " + std::to_string(seed);
    Rng drng(static_cast<std::uint64_t>(seed));
    const PressDataset ds = gen_press_dataset(drng);
    c.require(ds.size() == 1500, "press rows " + std::to_string(ds.size()) + s);
    const MatX X = ds.rows(false);
    const VecX y = ds.labels(false);
    const KrrSearchResult best = krr_cross_validate(X, y, ds.groups(false));
    const KrrModel m = krr_fit(X, y, best.lambda, best.gamma);

    // Dense-solve oracle on every 4th training row with the selected hyperparameters.
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < X.rows(); i += 4) idx.push_back(i);
    MatX Xsub(static_cast<Eigen::Index>(idx.size()), X.cols());
    VecX ysub(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) {
      Xsub.row(static_cast<Eigen::Index>(k)) = X.row(idx[k]);
      ysub(static_cast<Eigen::Index>(k)) = y(idx[k]);
    }
    const KrrModel msub = krr_fit(Xsub, ysub, best.lambda, best.gamma);
    const VecX wsub = oracle::krr_weights(oracle_standardize(Xsub), ysub, best.gamma, best.lambda);
    const double rel = (msub.weights - wsub).norm() / wsub.norm();
    worst_oracle = std::max(worst_oracle, rel);

    const VecX yt = ds.labels(true);
    const VecX pred = krr_predict_rows(m, ds.rows(true));
    const double rmse = std::sqrt((pred - yt).squaredNorm() / static_cast<double>(yt.size()));
    const double frac = rmse / (yt.maxCoeff() - yt.minCoeff());
    worst_rmse = std::max(worst_rmse, frac);
    c.require(frac <= 0.05, "RMSE fraction " + fmt(frac) + s);
  }
  c.require(worst_oracle < 1e-8, "KRR oracle relative error " + fmt(worst_oracle));
  c.note("1500 frames; oracle rel. error <= " + fmt(worst_oracle, 3) + "; RMSE <= " + fmt(100.0 * worst_rmse, 3) +
         "% of range");
}

void stir_learning(Check& c) {
  const SensorGeometry g = SensorGeometry::make_default();
  Rng frng(1);
  const auto markers = deform_markers(g, SkinModel{}, AppliedWrench{}, frng);
  const FeatureVector fv = make_feature(g, markers, ObjectPercept{});
  c.require(fv.values.size() == 78, "feature dimension " + std::to_string(fv.values.size()));

  double worst_f1 = 1.0, worst_grad = 0.0;
  for (int seed = 0; seed < kSeeds; ++seed) {
    const std::string s = " at seed " + std::to_string(seed);
    Rng rng(static_cast<std::uint64_t>(seed));
    const StirDataset ds = gen_stir_dataset(rng, g);
    c.require(ds.trials.size() == 120 && ds.count(false) == 72 && ds.count(true) == 48, "split" + s);
    const auto test_labels = ds.labels(true);
    for (int k = 0; k < 3; ++k) {
      c.require(std::count(test_labels.begin(), test_labels.end(), k) == 16, "test support" + s);
    }
    c.require(ds.rows(true).cols() == 2 * 78, "summary width" + s);
    Rng trng(static_cast<std::uint64_t>(seed));
    const MlpTrainResult res = mlp_train(ds.rows(false), ds.labels(false), 3, trng);
    worst_grad = std::max(worst_grad, res.gradient_check_error);
    const ClassReport rep = mlp_eval(res.model, ds.rows(true), test_labels, substance_names());
    worst_f1 = std::min(worst_f1, rep.macro.f1);
    c.require(rep.macro.f1 >= 0.95, "macro F1 " + fmt(rep.macro.f1) + s);
  }
  c.require(worst_grad < 1e-4, "gradient check " + fmt(worst_grad));
  c.note("120/72/48, 16/16/16, 78 features; macro F1 >= " + fmt(worst_f1, 3) + "; gradient check <= " +
         fmt(worst_grad, 3));
}

Mask random_mask(Rng& rng, int w, int h) {
  Mask m(w, h, 0);
  if (rng.below(2) == 0) {
    const double density = rng.uniform(0.05, 0.6);
    for (auto& p : m.pixels) p = rng.uniform() < density ? 255 : 0;
  } else {
    const int shapes = 1 + static_cast<int>(rng.below(4));
    for (int s = 0; s < shapes; ++s) {
      const SceneObject o = SceneObject::rectangle(rng.uniform(0, w), rng.uniform(0, h), rng.uniform(1, 12),
                                                   rng.uniform(1, 6), rng.uniform(-3.2, 3.2));
      const Mask part = o.silhouette(w, h);
      for (std::size_t i = 0; i < m.pixels.size(); ++i) m.pixels[i] |= part.pixels[i];
    }
  }
  return m;
}

void percept_oracles(Check& c) {
  Rng rng(2024);
  int exact = 0;
  for (int i = 0; i < 50; ++i) {
    const Mask m = random_mask(rng, 48, 36);
    const ObjectPercept p = object_moments(m);
    const auto ref = oracle::pairwise_moments(m);
    exact += p.area == static_cast<double>(ref.area) && p.x == ref.cx && p.y == ref.cy && p.theta == ref.theta &&
             p.degenerate_orientation == ref.degenerate;
  }
  c.require(exact == 50, std::to_string(exact) + "/50 masks exact");

  const SensorGeometry g = SensorGeometry::make_default();
  SkinModel skin;
  skin.noise_sigma = 0.0;
  Rng mrng(1);
  const auto markers = deform_markers(g, skin, {}, mrng);
  const SceneObject o = SceneObject::rectangle(150, 120, 60, 40, 0.2);
  const SensorFrame a = render_frame(g, markers, o);
  const SensorFrame b = render_frame(g, markers, o.shifted(2.0, 0.0));
  const double flow = slip_estimate(a.image, b.image, a.silhouette).flow_magnitude;
  c.require(std::abs(flow - 2.0) < 0.25, "slip flow " + fmt(flow));

  DisplacementField f;
  for (std::size_t i = 0; i < g.marker_count(); ++i) f.markers.push_back({i, 1.7, -0.4, 1.0, false});
  const double tau = torque_from_field(f, g).tau_z;
  c.require(std::abs(tau) < 1e-9, "translation torque " + fmt(tau));
  c.note(std::to_string(exact) + "/50 masks bit-exact; 2 px shift -> " + fmt(flow) + " px; translation torque " +
         fmt(tau, 2));
}

void scan_and_assembly(Check& c) {
  double worst_extent = 0.0;
  int probe_worst = 0;
  const PipelineConfig pc;
  for (int seed = 0; seed < kSeeds; ++seed) {
    const std::string s = " at seed " + std::to_string(seed);
    const RunResult scan = run("vis-scan", "vis-scan", seed);
    const double err = std::abs(scan.metrics.at("extent") - 100.0);
    worst_extent = std::max(worst_extent, err);
    c.require(scan.exit_code == kExitSuccess && err <= 2.0, "scan extent error " + fmt(err) + " mm" + s);

    Rng rng(static_cast<std::uint64_t>(seed));
    const int n = 21;
    const ProbeStream stream = scenario_plate_load(parabolic_profile(0.5), n, 0.02, rng, pc.geometry, pc.skin);
    const ProbeResult pr = probe_max_load(stream, 5);
    const int off = static_cast<int>(std::lround(std::abs(pr.position - stream.true_argmax) * (n - 1)));
    probe_worst = std::max(probe_worst, off);
    c.require(off <= 1, "probe off by " + std::to_string(off) + " samples" + s);

    AssemblyConfig ac;
    ac.seed = static_cast<std::uint64_t>(seed);
    ac.out_dir = scratch("a");
    const AssemblyReport first = run_assembly(ac);
    ac.out_dir = scratch("b");
    const AssemblyReport second = run_assembly(ac);
    c.require(first.success && first.phases.size() == 7, "assembly failed at " + first.failed_phase + s);
    c.require(replay_assembly(first.log, first.to_json()).empty(), "assembly replay violations" + s);
    c.require(second.to_json() == first.to_json(), "assembly report not reproducible" + s);
  }

  // Byte reproducibility of the log on disk.
  AssemblyConfig ac;
  ac.seed = 7;
  ac.out_dir = scratch("log1");
  run_assembly(ac);
  const std::string one = slurp(ac.out_dir / "assembly.jsonl");
  ac.out_dir = scratch("log2");
  run_assembly(ac);
  const std::string two = slurp(ac.out_dir / "assembly.jsonl");
  c.require(!one.empty() && one == two, "assembly.jsonl differs between identical runs");
  c.note("extent error <= " + fmt(worst_extent, 3) + " mm; probe within " + std::to_string(probe_worst) +
         " sample; 7/7 phases, replay clean, log byte-identical (" + std::to_string(one.size()) + " bytes)");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Check&)>>> criteria{
      {"kalman-smoothing", kalman_smoothing},
      {"controller-formulas", controller_formulas},
      {"followme-comparison", followme_comparison},
      {"leaky-integrator-and-handover", leaky_and_handover},
      {"arm-rotation", arm_rotation},
      {"stuck-pen-stall", stuck_pen},
      {"force-learning", force_learning},
      {"stir-learning", stir_learning},
      {"percept-oracles", percept_oracles},
      {"vis-scan-and-assembly", scan_and_assembly},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Check c;
    const auto start = std::chrono::steady_clock::now();
    try {
      criteria[i].second(c);
    } catch (const std::exception& e) {
      c.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failed += !c.ok();
    std::printf("%s %2zu %-30s %s (%.1fs)\n", c.ok() ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                c.detail().c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
