#include "fvtactile/learn.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

namespace fvt {

// ---------------------------------------------------------------------------
// Features

FeatureVector make_feature(const SensorGeometry& geometry,
                           std::span<const MarkerObservation> markers,
                           const ObjectPercept& object) {
  const std::size_t n = geometry.marker_count();
  if (markers.size() != n) throw Error("dimension_mismatch", "marker count differs from geometry");
  FeatureVector f;
  f.values = VecX::Zero(static_cast<Eigen::Index>(FeatureVector::dimension(geometry)));
  f.stale_mask.assign(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& m = markers[i];
    if (!m.valid) {
      f.stale_mask[i] = true;
      continue;
    }
    const Vec2& p = geometry.nominal_center(m.marker_id);
    f.values(static_cast<Eigen::Index>(2 * i)) = m.x - p.x();
    f.values(static_cast<Eigen::Index>(2 * i + 1)) = m.y - p.y();
  }
  const auto base = static_cast<Eigen::Index>(2 * n);
  if (object.present) {
    f.values(base) = object.x;
    f.values(base + 1) = object.y;
    f.values(base + 2) = object.theta;
    f.values(base + 3) = object.area;
  }
  return f;
}

VecX press_feature(const DisplacementField& field) {
  VecX v = VecX::Zero(static_cast<Eigen::Index>(3 * field.markers.size()));
  for (std::size_t i = 0; i < field.markers.size(); ++i) {
    const auto& d = field.markers[i];
    if (d.stale) continue;
    const auto k = static_cast<Eigen::Index>(3 * i);
    v(k) = d.dx;
    v(k + 1) = d.dy;
    v(k + 2) = d.ratio - 1.0;
  }
  return v;
}

VecX summarize_trial(const std::vector<FeatureVector>& frames) {
  if (frames.empty()) throw Error("invalid_argument", "cannot summarize an empty trial");
  const Eigen::Index d = frames.front().values.size();
  VecX mean = VecX::Zero(d);
  for (const auto& f : frames) mean += f.values;
  mean /= static_cast<double>(frames.size());
  VecX var = VecX::Zero(d);
  for (const auto& f : frames) var += (f.values - mean).cwiseAbs2();
  var /= static_cast<double>(frames.size());
  VecX out(2 * d);
  out << mean, var.cwiseSqrt();
  return out;
}

Standardizer Standardizer::fit(const MatX& rows) {
  Standardizer s;
  const double n = static_cast<double>(rows.rows());
  s.mean = rows.colwise().mean().transpose();
  s.scale = ((rows.rowwise() - s.mean.transpose()).cwiseAbs2().colwise().sum() / n)
                .cwiseSqrt()
                .transpose();
  for (Eigen::Index i = 0; i < s.scale.size(); ++i) {
    if (!(s.scale(i) > 1e-12)) s.scale(i) = 1.0;
  }
  return s;
}

VecX Standardizer::apply(const VecX& x) const {
  if (mean.size() == 0) return x;
  return (x - mean).cwiseQuotient(scale);
}

MatX Standardizer::apply_rows(const MatX& rows) const {
  if (mean.size() == 0) return rows;
  return (rows.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
}

// ---------------------------------------------------------------------------
// Kernel ridge regression

MatX rbf_kernel(const MatX& a, const MatX& b, double gamma) {
  const VecX na = a.rowwise().squaredNorm();
  const VecX nb = b.rowwise().squaredNorm();
  MatX k = -2.0 * a * b.transpose();
  k.colwise() += na;
  k.rowwise() += nb.transpose();
  return (-gamma * k.cwiseMax(0.0)).array().exp().matrix();
}

namespace {

MatX regularized_kernel(const KrrModel& m) {
  MatX k = rbf_kernel(m.support, m.support, m.gamma);
  // Diagonal is exactly 1; the expansion above can leave rounding there.
  k.diagonal().setOnes();
  k.diagonal().array() += m.lambda;
  return k;
}

// r = y - A w accumulated in long double.
VecX long_double_residual(const MatX& a, const VecX& w, const VecX& y) {
  VecX r(y.size());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    long double s = y(i);
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      s -= static_cast<long double>(a(i, j)) * static_cast<long double>(w(j));
    }
    r(i) = static_cast<double>(s);
  }
  return r;
}

}  // namespace

KrrModel krr_fit(const MatX& X, const VecX& y, double lambda, double gamma, bool standardize) {
  if (X.rows() != y.size() || X.rows() < 2) {
    throw Error("invalid_argument", "krr_fit needs |X| = |y| >= 2");
  }
  if (!(lambda >= 0.0) || !(gamma > 0.0)) {
    throw Error("invalid_argument", "krr_fit needs lambda >= 0 and gamma > 0");
  }
  if (!X.allFinite() || !y.allFinite()) throw Error("invalid_argument", "non-finite training data");

  KrrModel m;
  m.gamma = gamma;
  m.lambda = lambda;
  if (standardize) {
    m.standardizer = Standardizer::fit(X);
    m.standardizer.scale *= std::sqrt(static_cast<double>(X.cols()));
  }
  m.support = m.standardizer.apply_rows(X);

  const MatX a = regularized_kernel(m);
  Eigen::LDLT<MatX> ldlt(a);
  const VecX d = ldlt.vectorD();
  const double dmax = d.cwiseAbs().maxCoeff();
  const double dmin = d.minCoeff();
  if (ldlt.info() != Eigen::Success ||
      dmin <= static_cast<double>(a.rows()) * std::numeric_limits<double>::epsilon() * dmax) {
    throw Error("singular_system",
                "kernel system is singular (duplicate inputs?); use lambda > 0");
  }
  m.weights = ldlt.solve(y);
  const double ynorm = std::max(y.norm(), std::numeric_limits<double>::min());
  for (int it = 0; it < 10; ++it) {
    const VecX r = long_double_residual(a, m.weights, y);
    if (r.norm() <= 1e-15 * ynorm) break;
    m.weights += ldlt.solve(r);
  }
  return m;
}

double krr_predict(const KrrModel& model, const VecX& x) {
  if (static_cast<std::size_t>(x.size()) != model.input_dim()) {
    throw Error("dimension_mismatch", "input has " + std::to_string(x.size()) +
                                          " features, model expects " +
                                          std::to_string(model.input_dim()));
  }
  if (!x.allFinite()) throw Error("invalid_argument", "non-finite input");
  const VecX z = model.standardizer.apply(x);
  const VecX d2 = (model.support.rowwise() - z.transpose()).rowwise().squaredNorm();
  return (-model.gamma * d2).array().exp().matrix().dot(model.weights);
}

VecX krr_predict_rows(const KrrModel& model, const MatX& X) {
  VecX out(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) out(i) = krr_predict(model, X.row(i).transpose());
  return out;
}

double krr_residual(const KrrModel& model, const VecX& y) {
  const MatX a = regularized_kernel(model);
  return long_double_residual(a, model.weights, y).norm() / y.norm();
}

KrrSearchResult krr_cross_validate(const MatX& X, const VecX& y, const std::vector<int>& groups,
                                   const KrrGrid& grid) {
  if (static_cast<Eigen::Index>(groups.size()) != X.rows()) {
    throw Error("invalid_argument", "one group id per row required");
  }
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < X.rows(); i += std::max(1, grid.search_stride)) rows.push_back(i);

  std::vector<int> ids(groups.begin(), groups.end());
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  const int folds = std::min<int>(grid.folds, static_cast<int>(ids.size()));
  if (folds < 2) throw Error("invalid_argument", "cross-validation needs at least two groups");
  auto fold_of = [&](int g) {
    return static_cast<int>(std::lower_bound(ids.begin(), ids.end(), g) - ids.begin()) % folds;
  };

  KrrSearchResult best;
  best.cv_rmse = std::numeric_limits<double>::infinity();
  for (double gamma : grid.gammas) {
    for (double lambda : grid.lambdas) {
      double sse = 0.0;
      std::size_t count = 0;
      bool ok = true;
      for (int f = 0; f < folds && ok; ++f) {
        std::vector<Eigen::Index> tr, te;
        for (auto i : rows) (fold_of(groups[static_cast<std::size_t>(i)]) == f ? te : tr).push_back(i);
        if (tr.size() < 2 || te.empty()) continue;
        MatX xtr(static_cast<Eigen::Index>(tr.size()), X.cols());
        VecX ytr(static_cast<Eigen::Index>(tr.size()));
        for (std::size_t k = 0; k < tr.size(); ++k) {
          xtr.row(static_cast<Eigen::Index>(k)) = X.row(tr[k]);
          ytr(static_cast<Eigen::Index>(k)) = y(tr[k]);
        }
        try {
          const KrrModel m = krr_fit(xtr, ytr, lambda, gamma);
          for (auto i : te) {
            const double e = krr_predict(m, X.row(i).transpose()) - y(i);
            sse += e * e;
            ++count;
          }
        } catch (const Error&) {
          ok = false;
        }
      }
      if (!ok || count == 0) continue;
      const double rmse = std::sqrt(sse / static_cast<double>(count));
      if (rmse < best.cv_rmse) best = {gamma, lambda, rmse};
    }
  }
  if (!std::isfinite(best.cv_rmse)) throw Error("singular_system", "no grid point could be fitted");
  return best;
}

// ---------------------------------------------------------------------------
// Press dataset

MatX PressDataset::rows(bool test) const {
  std::vector<Eigen::Index> idx;
  for (std::size_t i = 0; i < size(); ++i) {
    if (is_test[i] == test) idx.push_back(static_cast<Eigen::Index>(i));
  }
  MatX out(static_cast<Eigen::Index>(idx.size()), X.cols());
  for (std::size_t k = 0; k < idx.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = X.row(idx[k]);
  return out;
}

VecX PressDataset::labels(bool test) const {
  std::vector<double> v;
  for (std::size_t i = 0; i < size(); ++i) {
    if (is_test[i] == test) v.push_back(y(static_cast<Eigen::Index>(i)));
  }
  return Eigen::Map<const VecX>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<int> PressDataset::groups(bool test) const {
  std::vector<int> g;
  for (std::size_t i = 0; i < size(); ++i) {
    if (is_test[i] == test) g.push_back(episode[i]);
  }
  return g;
}

PressDataset gen_press_dataset(Rng& rng, const PressConfig& cfg, const PipelineConfig& pipeline) {
  const int frames = static_cast<int>(std::lround(cfg.seconds * cfg.fps));
  const int ramp = static_cast<int>(std::lround(0.4 * frames));
  const int hold = frames - 2 * ramp;
  const auto features = static_cast<Eigen::Index>(3 * pipeline.geometry.marker_count());

  PressDataset ds;
  const auto total = static_cast<Eigen::Index>(cfg.episodes) * frames;
  ds.X.resize(total, features);
  ds.y.resize(total);
  Eigen::Index row = 0;
  for (int e = 0; e < cfg.episodes; ++e) {
    const double peak = rng.uniform(cfg.peak_min, cfg.peak_max);
    const std::uint64_t seed = rng.next_u64();
    std::vector<AppliedWrench> script;
    for (int t = 0; t < frames; ++t) {
      double level = 1.0;
      if (t < ramp) level = static_cast<double>(t) / ramp;
      else if (t >= ramp + hold) level = static_cast<double>(frames - 1 - t) / ramp;
      AppliedWrench w;
      w.f = Vec3(0.0, cfg.shear_ratio * peak * level, peak * level);
      script.push_back(w);
    }
    ScriptedWrenchScenario scenario("press", script, SceneObject::disk(160.0, 120.0, 50.0));
    Pipeline p(scenario, seed, pipeline);
    for (int t = 0; t < frames; ++t) {
      p.sense();
      ds.X.row(row) = press_feature(p.tracker().field()).transpose();
      ds.y(row) = script[static_cast<std::size_t>(t)].f.z();
      ds.episode.push_back(e);
      ds.frame.push_back(t);
      ds.is_test.push_back(e >= cfg.episodes - cfg.test_episodes);
      ++row;
    }
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Stir dataset

std::size_t StirDataset::count(bool test) const {
  return static_cast<std::size_t>(
      std::count_if(trials.begin(), trials.end(), [&](const StirRecord& r) { return r.is_test == test; }));
}

MatX StirDataset::rows(bool test) const {
  const std::size_t n = count(test);
  if (n == 0) return {};
  MatX out(static_cast<Eigen::Index>(n), trials.front().summary.size());
  Eigen::Index k = 0;
  for (const auto& r : trials) {
    if (r.is_test == test) out.row(k++) = r.summary.transpose();
  }
  return out;
}

std::vector<int> StirDataset::labels(bool test) const {
  std::vector<int> out;
  for (const auto& r : trials) {
    if (r.is_test == test) out.push_back(static_cast<int>(r.substance));
  }
  return out;
}

StirDataset gen_stir_dataset(Rng& rng, const SensorGeometry& geometry, const SkinModel& skin) {
  StirDataset ds;
  for (int m = 1; m <= kStirMovements; ++m) {
    for (int s = 0; s < 3; ++s) {
      for (int k = 0; k < 5; ++k) {
        const StirTrial trial = scenario_stir(static_cast<Substance>(s), m, rng, geometry, skin);
        std::vector<FeatureVector> frames;
        frames.reserve(trial.frames.size());
        for (const auto& f : trial.frames) {
          const auto mask = f.stick.silhouette(geometry.image_width, geometry.image_height);
          frames.push_back(make_feature(geometry, f.markers, object_moments(mask)));
        }
        StirRecord r;
        r.substance = trial.substance;
        r.movement_id = m;
        r.seed = trial.seed;
        r.is_test = k >= 3;
        r.summary = summarize_trial(frames);
        ds.trials.push_back(std::move(r));
      }
    }
  }
  return ds;
}

// ---------------------------------------------------------------------------
// MLP

namespace {

VecX sigmoid(const VecX& z) { return (1.0 / (1.0 + (-z.array()).exp())).matrix(); }

VecX softmax(const VecX& z) {
  const VecX e = (z.array() - z.maxCoeff()).exp().matrix();
  return e / e.sum();
}

// Activations of every layer for a standardized input; the last is softmax.
std::vector<VecX> activations(const MlpModel& m, const VecX& x) {
  std::vector<VecX> a{x};
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    const VecX z = m.weights[l] * a.back() + m.biases[l];
    a.push_back(l + 1 == m.weights.size() ? softmax(z) : sigmoid(z));
  }
  return a;
}

}  // namespace

VecX MlpModel::forward(const VecX& x) const {
  if (x.size() != layers.front()) {
    throw Error("dimension_mismatch", "input has " + std::to_string(x.size()) +
                                          " features, model expects " +
                                          std::to_string(layers.front()));
  }
  return activations(*this, standardizer.apply(x)).back();
}

int MlpModel::predict(const VecX& x) const {
  const VecX p = forward(x);
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < p.size(); ++i) {
    if (p(i) > p(best)) best = i;
  }
  return static_cast<int>(best);
}

MlpModel mlp_init(const std::vector<int>& layers, Rng& rng) {
  if (layers.size() < 2) throw Error("invalid_argument", "an MLP needs at least two layers");
  MlpModel m;
  m.layers = layers;
  for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
    const int in = layers[l];
    const int out = layers[l + 1];
    const double limit = std::sqrt(6.0 / (in + out));
    MatX w(out, in);
    for (int j = 0; j < in; ++j) {
      for (int i = 0; i < out; ++i) w(i, j) = rng.uniform(-limit, limit);
    }
    m.weights.push_back(w);
    m.biases.push_back(VecX::Zero(out));
  }
  return m;
}

double mlp_loss(const MlpModel& model, const MatX& X, const std::vector<int>& labels) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const VecX p = activations(model, X.row(i).transpose()).back();
    total -= std::log(std::max(p(labels[static_cast<std::size_t>(i)]), 1e-300));
  }
  return total / static_cast<double>(X.rows());
}

VecX mlp_flatten(const MlpModel& model) {
  Eigen::Index n = 0;
  for (std::size_t l = 0; l < model.weights.size(); ++l) n += model.weights[l].size() + model.biases[l].size();
  VecX out(n);
  Eigen::Index k = 0;
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    out.segment(k, model.weights[l].size()) =
        Eigen::Map<const VecX>(model.weights[l].data(), model.weights[l].size());
    k += model.weights[l].size();
    out.segment(k, model.biases[l].size()) = model.biases[l];
    k += model.biases[l].size();
  }
  return out;
}

void mlp_unflatten(MlpModel& model, const VecX& params) {
  Eigen::Index k = 0;
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    auto& w = model.weights[l];
    Eigen::Map<VecX>(w.data(), w.size()) = params.segment(k, w.size());
    k += w.size();
    model.biases[l] = params.segment(k, model.biases[l].size());
    k += model.biases[l].size();
  }
}

VecX mlp_gradient(const MlpModel& model, const MatX& X, const std::vector<int>& labels) {
  std::vector<MatX> gw;
  std::vector<VecX> gb;
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    gw.push_back(MatX::Zero(model.weights[l].rows(), model.weights[l].cols()));
    gb.push_back(VecX::Zero(model.biases[l].size()));
  }
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const auto a = activations(model, X.row(i).transpose());
    VecX delta = a.back();
    delta(labels[static_cast<std::size_t>(i)]) -= 1.0;
    for (std::size_t l = model.weights.size(); l-- > 0;) {
      gw[l] += delta * a[l].transpose();
      gb[l] += delta;
      if (l > 0) {
        delta = (model.weights[l].transpose() * delta).cwiseProduct(
            a[l].cwiseProduct((1.0 - a[l].array()).matrix()));
      }
    }
  }
  MlpModel g = model;
  const double n = static_cast<double>(X.rows());
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    g.weights[l] = gw[l] / n;
    g.biases[l] = gb[l] / n;
  }
  return mlp_flatten(g);
}

double mlp_gradient_check(const MlpModel& model, const MatX& X, const std::vector<int>& labels,
                          int samples, double h) {
  const Eigen::Index n = std::min<Eigen::Index>(samples, X.rows());
  const MatX xs = X.topRows(n);
  const std::vector<int> ls(labels.begin(), labels.begin() + n);
  const VecX analytic = mlp_gradient(model, xs, ls);
  VecX numeric(analytic.size());
  MlpModel probe = model;
  VecX params = mlp_flatten(model);
  for (Eigen::Index k = 0; k < params.size(); ++k) {
    const double orig = params(k);
    params(k) = orig + h;
    mlp_unflatten(probe, params);
    const double up = mlp_loss(probe, xs, ls);
    params(k) = orig - h;
    mlp_unflatten(probe, params);
    const double down = mlp_loss(probe, xs, ls);
    params(k) = orig;
    numeric(k) = (up - down) / (2.0 * h);
  }
  const double scale = std::max({analytic.norm(), numeric.norm(), 1e-300});
  return (analytic - numeric).norm() / scale;
}

MlpTrainResult mlp_train(const MatX& X, const std::vector<int>& labels, int num_classes, Rng& rng,
                         const MlpTrainConfig& cfg) {
  if (X.rows() != static_cast<Eigen::Index>(labels.size()) || X.rows() == 0) {
    throw Error("invalid_argument", "one label per training row required");
  }
  std::vector<int> seen(static_cast<std::size_t>(num_classes), 0);
  for (int l : labels) {
    if (l < 0 || l >= num_classes) throw Error("invalid_argument", "label out of range");
    seen[static_cast<std::size_t>(l)] = 1;
  }
  if (std::accumulate(seen.begin(), seen.end(), 0) < 2) {
    throw Error("invalid_argument", "training data must contain at least two classes");
  }

  std::vector<int> layers{static_cast<int>(X.cols())};
  layers.insert(layers.end(), cfg.hidden.begin(), cfg.hidden.end());
  layers.push_back(num_classes);

  MlpTrainResult res;
  res.model = mlp_init(layers, rng);
  res.model.standardizer = Standardizer::fit(X);
  const MatX xs = res.model.standardizer.apply_rows(X);
  if (!std::isfinite(mlp_loss(res.model, xs, labels))) {
    throw Error("non_finite_loss", "initial training loss is non-finite (check the inputs)");
  }

  if (cfg.gradient_check) {
    res.gradient_check_error = mlp_gradient_check(res.model, xs, labels);
    if (!(res.gradient_check_error < 1e-4)) {
      throw Error("gradient_check", "analytic gradient disagrees with finite differences (rel " +
                                        std::to_string(res.gradient_check_error) + ")");
    }
  }

  const Eigen::Index n = xs.rows();
  const Eigen::Index batch = cfg.batch_size > 0 ? std::min<Eigen::Index>(cfg.batch_size, n) : n;
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  VecX params = mlp_flatten(res.model);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (batch < n) {
      for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[static_cast<std::size_t>(rng.below(i))]);
      }
    }
    for (Eigen::Index start = 0; start < n; start += batch) {
      const Eigen::Index len = std::min(batch, n - start);
      MatX xb(len, xs.cols());
      std::vector<int> lb(static_cast<std::size_t>(len));
      for (Eigen::Index k = 0; k < len; ++k) {
        const auto src = order[static_cast<std::size_t>(start + k)];
        xb.row(k) = xs.row(src);
        lb[static_cast<std::size_t>(k)] = labels[static_cast<std::size_t>(src)];
      }
      params -= cfg.learning_rate * mlp_gradient(res.model, xb, lb);
      mlp_unflatten(res.model, params);
    }
    const double loss = mlp_loss(res.model, xs, labels);
    if (!std::isfinite(loss)) {
      throw Error("non_finite_loss", "training loss became non-finite at epoch " +
                                         std::to_string(epoch) + " (lower the learning rate)");
    }
    res.loss_history.push_back(loss);
  }
  return res;
}

// ---------------------------------------------------------------------------
// Metrics

ClassReport class_report(const std::vector<int>& truth, const std::vector<int>& predicted,
                         const std::vector<std::string>& names) {
  if (truth.size() != predicted.size()) throw Error("invalid_argument", "label count mismatch");
  if (truth.empty()) throw Error("invalid_argument", "empty test set");
  const std::size_t k = names.size();
  ClassReport r;
  r.confusion.assign(k, std::vector<int>(k, 0));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const auto t = static_cast<std::size_t>(truth[i]);
    const auto p = static_cast<std::size_t>(predicted[i]);
    if (t >= k || p >= k) throw Error("invalid_argument", "label out of range");
    ++r.confusion[t][p];
  }
  auto ratio = [](double a, double b) { return b > 0.0 ? a / b : 0.0; };
  int correct = 0;
  const auto total = static_cast<double>(truth.size());
  r.macro.name = "macro avg";
  r.weighted.name = "weighted avg";
  for (std::size_t c = 0; c < k; ++c) {
    int tp = r.confusion[c][c];
    int col = 0, row = 0;
    for (std::size_t j = 0; j < k; ++j) {
      col += r.confusion[j][c];
      row += r.confusion[c][j];
    }
    correct += tp;
    ClassMetrics m;
    m.name = names[c];
    m.precision = ratio(tp, col);
    m.recall = ratio(tp, row);
    m.f1 = ratio(2.0 * m.precision * m.recall, m.precision + m.recall);
    m.support = row;
    r.classes.push_back(m);
    r.macro.precision += m.precision / static_cast<double>(k);
    r.macro.recall += m.recall / static_cast<double>(k);
    r.macro.f1 += m.f1 / static_cast<double>(k);
    r.weighted.precision += m.precision * row / total;
    r.weighted.recall += m.recall * row / total;
    r.weighted.f1 += m.f1 * row / total;
  }
  r.macro.support = r.weighted.support = static_cast<int>(truth.size());
  r.accuracy = correct / total;
  return r;
}

std::string ClassReport::to_text() const {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << std::setw(14) << "" << std::setw(11) << "precision" << std::setw(10) << "recall"
     << std::setw(10) << "f1-score" << std::setw(10) << "support" << "\n\n";
  auto line = [&](const ClassMetrics& m) {
    os << std::setw(14) << m.name << std::setw(11) << m.precision << std::setw(10) << m.recall
       << std::setw(10) << m.f1 << std::setw(10) << m.support << '\n';
  };
  for (const auto& m : classes) line(m);
  os << '\n';
  line(macro);
  line(weighted);
  return os.str();
}

ClassReport mlp_eval(const MlpModel& model, const MatX& X, const std::vector<int>& labels,
                     const std::vector<std::string>& names) {
  if (X.rows() == 0) throw Error("invalid_argument", "empty test set");
  std::vector<int> predicted;
  for (Eigen::Index i = 0; i < X.rows(); ++i) predicted.push_back(model.predict(X.row(i).transpose()));
  return class_report(labels, predicted, names);
}

const std::vector<std::string>& substance_names() {
  static const std::vector<std::string> names{"flour", "sugar", "peas"};
  return names;
}

}  // namespace fvt
