#pragma once

// Kernel ridge regression for force, an MLP substance classifier, the
// dataset generators behind both, and classification metrics.

#include "fvtactile/percept.hpp"
#include "fvtactile/pipeline.hpp"
#include "fvtactile/sim.hpp"

#include <Eigen/Core>

#include <array>
#include <span>
#include <string>
#include <vector>

namespace fvt {

using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

// ---------------------------------------------------------------------------
// Features

/// Per-frame stir feature: 2*N marker deviations (dx0, dy0, dx1, ...) then
/// x̄, ȳ, θ, M of the object. Invalid markers are zero-filled and flagged in
/// `stale_mask`.
struct FeatureVector {
  VecX values;
  std::vector<bool> stale_mask;

  static std::size_t dimension(const SensorGeometry& geometry) {
    return 2 * geometry.marker_count() + 4;
  }
};

FeatureVector make_feature(const SensorGeometry& geometry,
                           std::span<const MarkerObservation> markers,
                           const ObjectPercept& object);

/// Per-frame press feature: (dx, dy, s/s0 - 1) for every marker from the
/// filtered field; stale markers are zero.
VecX press_feature(const DisplacementField& field);

/// Mean and population standard deviation of every channel over a trial,
/// concatenated: [mean_0..mean_{d-1}, std_0..std_{d-1}].
VecX summarize_trial(const std::vector<FeatureVector>& frames);

struct Standardizer {
  VecX mean;
  VecX scale;  // std, with constant channels mapped to 1

  static Standardizer fit(const MatX& rows);
  VecX apply(const VecX& x) const;
  MatX apply_rows(const MatX& rows) const;
};

// ---------------------------------------------------------------------------
// Kernel ridge regression

struct KrrModel {
  MatX support;  // standardized inputs, one row per sample
  VecX weights;
  double gamma = 1.0;
  double lambda = 0.0;
  Standardizer standardizer;

  std::size_t input_dim() const { return static_cast<std::size_t>(support.cols()); }
};

/// K_ij = exp(-gamma * |a_i - b_j|^2) over rows.
MatX rbf_kernel(const MatX& a, const MatX& b, double gamma);

/// Solves (K + lambda I) w = y with an LDLT factorization refined against a
/// long double residual. Throws Error("singular_system") when the system is
/// singular (e.g. duplicate inputs with lambda = 0); the message suggests
/// lambda > 0. Unless `standardize` is false, every input channel is scaled to
/// variance 1/d (d = feature count), so squared distances are per-channel
/// averages and gamma does not depend on the feature count.
KrrModel krr_fit(const MatX& X, const VecX& y, double lambda, double gamma,
                 bool standardize = true);

/// Throws Error("dimension_mismatch") when x has the wrong length.
double krr_predict(const KrrModel& model, const VecX& x);
VecX krr_predict_rows(const KrrModel& model, const MatX& X);

/// Relative residual |(K + lambda I) w - y| / |y| of a fitted model.
double krr_residual(const KrrModel& model, const VecX& y);

struct KrrGrid {
  std::vector<double> gammas{0.01, 0.1, 1.0, 10.0};
  std::vector<double> lambdas{1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0};
  int folds = 5;
  /// Use every k-th training row during the search (the final fit uses all).
  int search_stride = 4;
};

struct KrrSearchResult {
  double gamma = 0.0;
  double lambda = 0.0;
  double cv_rmse = 0.0;
};

/// Grid search with folds formed from whole groups (episodes), so frames of
/// one episode never sit on both sides of a fold.
KrrSearchResult krr_cross_validate(const MatX& X, const VecX& y, const std::vector<int>& groups,
                                   const KrrGrid& grid = {});

// ---------------------------------------------------------------------------
// Press dataset

struct PressConfig {
  int episodes = 20;
  double seconds = 5.0;
  double fps = kDefaultFrameRateHz;
  double peak_min = 2.0;
  double peak_max = 8.0;
  /// Tangential load per unit of normal force (object dependent).
  double shear_ratio = 0.3;
  int test_episodes = 4;
};

struct PressDataset {
  MatX X;  // one row per frame
  VecX y;  // true normal force
  std::vector<int> episode;
  std::vector<int> frame;
  std::vector<bool> is_test;

  std::size_t size() const { return static_cast<std::size_t>(y.size()); }
  MatX rows(bool test) const;
  VecX labels(bool test) const;
  std::vector<int> groups(bool test) const;
};

/// Ramp-hold-ramp presses rendered and tracked through the full pipeline.
/// The last `test_episodes` episodes form the held-out split.
PressDataset gen_press_dataset(Rng& rng, const PressConfig& cfg = {},
                               const PipelineConfig& pipeline = {});

// ---------------------------------------------------------------------------
// Stir dataset

struct StirRecord {
  Substance substance = Substance::Flour;
  int movement_id = 1;
  std::uint64_t seed = 0;
  bool is_test = false;
  VecX summary;
};

struct StirDataset {
  std::vector<StirRecord> trials;

  std::size_t count(bool test) const;
  MatX rows(bool test) const;
  std::vector<int> labels(bool test) const;
};

/// 120 trials: 15 per movement, 5 per substance per movement. For each
/// (movement, substance) 3 trials train and 2 test, giving 72/48 with
/// 16 test trials per substance.
StirDataset gen_stir_dataset(Rng& rng, const SensorGeometry& geometry = SensorGeometry::make_default(),
                             const SkinModel& skin = {});

// ---------------------------------------------------------------------------
// MLP

struct MlpModel {
  std::vector<int> layers;  // e.g. {156, 10, 10, 10, 3}
  std::vector<MatX> weights;  // weights[l] is layers[l+1] x layers[l]
  std::vector<VecX> biases;
  Standardizer standardizer;

  /// Class probabilities (softmax).
  VecX forward(const VecX& x) const;
  int predict(const VecX& x) const;
};

MlpModel mlp_init(const std::vector<int>& layers, Rng& rng);

struct MlpTrainConfig {
  int epochs = 3000;
  double learning_rate = 0.5;
  /// 0 = full batch.
  int batch_size = 0;
  std::vector<int> hidden{10, 10, 10};
  bool gradient_check = true;
};

struct MlpTrainResult {
  MlpModel model;
  std::vector<double> loss_history;
  double gradient_check_error = 0.0;
};

/// Mean cross-entropy over rows of standardized inputs.
double mlp_loss(const MlpModel& model, const MatX& X, const std::vector<int>& labels);

/// Analytic gradient of mlp_loss, flattened as [W0, b0, W1, b1, ...]
/// (column-major weights).
VecX mlp_gradient(const MlpModel& model, const MatX& X, const std::vector<int>& labels);
VecX mlp_flatten(const MlpModel& model);
void mlp_unflatten(MlpModel& model, const VecX& params);

/// Relative error |g_a - g_n| / max(|g_a|, |g_n|) between analytic and
/// central-difference gradients on the first `samples` rows.
double mlp_gradient_check(const MlpModel& model, const MatX& X, const std::vector<int>& labels,
                          int samples = 5, double h = 1e-5);

/// Throws Error("invalid_argument") if fewer than 2 classes are present,
/// Error("gradient_check") if the gradient check fails and
/// Error("non_finite_loss") if training diverges.
MlpTrainResult mlp_train(const MatX& X, const std::vector<int>& labels, int num_classes, Rng& rng,
                         const MlpTrainConfig& cfg = {});

// ---------------------------------------------------------------------------
// Metrics

struct ClassMetrics {
  std::string name;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  int support = 0;
};

struct ClassReport {
  std::vector<ClassMetrics> classes;
  ClassMetrics macro;
  ClassMetrics weighted;
  double accuracy = 0.0;
  std::vector<std::vector<int>> confusion;  // [true][predicted]

  /// Table with precision / recall / f1-score / support columns.
  std::string to_text() const;
};

/// Zero denominators give 0.
ClassReport class_report(const std::vector<int>& truth, const std::vector<int>& predicted,
                         const std::vector<std::string>& names);

/// Argmax predictions (ties to the lowest index) scored against labels.
/// Throws Error("invalid_argument") on an empty test set.
ClassReport mlp_eval(const MlpModel& model, const MatX& X, const std::vector<int>& labels,
                     const std::vector<std::string>& names);

const std::vector<std::string>& substance_names();

}  // namespace fvt
