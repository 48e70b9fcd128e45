// Copyright 2026 The dgnn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DGNN_TRAINKIT_HPP_
#define DGNN_TRAINKIT_HPP_

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dgnn/baseline.hpp"
#include "dgnn/dataset.hpp"
#include "dgnn/mpnn.hpp"
#include "dgnn/parallel.hpp"
#include "dgnn/params.hpp"

namespace dgnn {

// ---------------------------------------------------------------------------
// Metrics

/// Regression metrics on normalized labels.
///   r²   = 1 − Σ(ŷ−y)² / Σ(y−ȳ)²
///   RMSE = √mean (ŷ−y)²
///   SRE  = mean ((ŷ−y) / (|y| + 1e-8))²     (squared relative error)
///   MAE  = mean |ŷ−y|
/// When all targets are equal r² is 1 for a perfect fit and 0 otherwise.
struct Metrics {
  double r2 = 0.0;
  double rmse = 0.0;
  double sre = 0.0;
  double mae = 0.0;
};

inline constexpr double kSreEpsilon = 1e-8;

Metrics compute_metrics(std::span<const double> predicted, std::span<const double> target);

// ---------------------------------------------------------------------------
// Optimizer

struct TrainConfig {
  int epochs = 200;
  int batch_size = 32;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int patience = 50;  // epochs without a better val RMSE; 0 disables early stopping
  std::uint64_t seed = 0;
  // Stop as soon as the full training-set MSE falls below this (0 = never).
  double target_train_mse = 0.0;
  // Fixed gradient partition of each batch; keeps results independent of the
  // number of threads.
  int micro_batch = 8;

  void validate() const;
};

class Adam {
 public:
  Adam(const ParamStore& params, const TrainConfig& cfg);
  void step(ParamStore& params, const std::vector<Matrix>& grads);
  long steps() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<Matrix> m_, v_;
};

// ---------------------------------------------------------------------------
// Training

/// What the trainer needs from a model.
template <typename M>
concept Regressor = requires(M& m, const M& cm, const ReactionSample& s, Tape& tape, std::span<const Var> bound,
                             std::span<const typename M::Input* const> batch,
                             std::span<const ReactionSample> training) {
  typename M::Input;
  { m.fit_inputs(training) };
  { cm.encode(s) } -> std::same_as<typename M::Input>;
  { m.params() } -> std::same_as<ParamStore&>;
  { cm.params() } -> std::same_as<const ParamStore&>;
  { cm.forward(tape, bound, batch) } -> std::same_as<Var>;
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;  // mean batch MSE seen during the epoch
  std::optional<Metrics> val;
};

struct TrainResult {
  std::vector<EpochLog> log;
  int best_epoch = -1;  // epoch whose parameters were kept
  bool early_stopped = false;
  bool reached_target = false;
};

class TrainingDiverged : public std::runtime_error {
 public:
  explicit TrainingDiverged(int epoch)
      : std::runtime_error("training diverged (non-finite loss) at epoch " + std::to_string(epoch)), epoch_(epoch) {}
  int epoch() const { return epoch_; }

 private:
  int epoch_;
};

void write_epoch_log(std::ostream& out, const std::vector<EpochLog>& log);

namespace detail {

template <Regressor M>
std::vector<typename M::Input> encode_all(const M& model, const DatasetManifest& m, std::span<const std::size_t> idx) {
  std::vector<typename M::Input> out;
  out.reserve(idx.size());
  for (std::size_t k : idx) out.push_back(model.encode(m.samples[k]));
  return out;
}

/// Σ of squared errors over `batch` and its gradient.
template <Regressor M>
double loss_and_grad(const M& model, std::span<const typename M::Input* const> batch, std::span<const double> target,
                     std::vector<Matrix>& grads) {
  Tape tape;
  const auto bound = model.params().bind(tape, true);
  Var pred = model.forward(tape, bound, batch);
  Matrix y(static_cast<Index>(target.size()), 1);
  for (std::size_t k = 0; k < target.size(); ++k) y(static_cast<Index>(k), 0) = target[k];
  Var loss = ad::squared_error(pred, y);
  tape.backward(loss);
  grads.clear();
  grads.reserve(bound.size());
  for (const auto& b : bound) grads.push_back(tape.grad(b));
  return loss.value()(0, 0);
}

}  // namespace detail

inline constexpr std::size_t kPredictChunk = 64;

/// Predictions for pre-encoded inputs, in input order.
template <Regressor M>
std::vector<double> predict_inputs(const M& model, std::span<const typename M::Input> inputs) {
  std::vector<double> out(inputs.size());
  const std::size_t chunks = (inputs.size() + kPredictChunk - 1) / kPredictChunk;
  parallel_for(chunks, [&](std::size_t c) {
    const std::size_t lo = c * kPredictChunk;
    const std::size_t hi = std::min(inputs.size(), lo + kPredictChunk);
    std::vector<const typename M::Input*> batch;
    for (std::size_t k = lo; k < hi; ++k) batch.push_back(&inputs[k]);
    Tape tape;
    const auto bound = model.params().bind(tape, false);
    const Matrix& y = model.forward(tape, bound, batch).value();
    for (std::size_t k = lo; k < hi; ++k) out[k] = y(static_cast<Index>(k - lo), 0);
  });
  return out;
}

/// Normalized-unit predictions for the given sample positions of `m`.
template <Regressor M>
std::vector<double> predict_samples(const M& model, const DatasetManifest& m, std::span<const std::size_t> idx) {
  const auto inputs = detail::encode_all(model, m, idx);
  return predict_inputs<M>(model, inputs);
}

/// Metrics of `model` on one split, against label_norm.
template <Regressor M>
Metrics evaluate(const M& model, const DatasetManifest& m, Split split) {
  const auto idx = m.indices(split);
  if (idx.empty()) throw std::invalid_argument("evaluate: split '" + std::string(to_string(split)) + "' is empty");
  const auto pred = predict_samples(model, m, idx);
  std::vector<double> target;
  target.reserve(idx.size());
  for (std::size_t k : idx) target.push_back(m.samples[k].label_norm);
  return compute_metrics(pred, target);
}

/// Minimizes the mean squared error on label_norm over the train split with
/// Adam. With a val split, early-stops on val RMSE and restores the best
/// parameters. Throws TrainingDiverged on a non-finite loss.
template <Regressor M>
TrainResult train(M& model, const DatasetManifest& m, const TrainConfig& cfg) {
  cfg.validate();
  if (!m.label_stats) throw std::invalid_argument("train: manifest labels are not normalized");
  const auto train_idx = m.indices(Split::kTrain);
  const auto val_idx = m.indices(Split::kVal);
  if (train_idx.empty()) throw std::invalid_argument("train: no training samples");

  {
    std::vector<ReactionSample> training;
    training.reserve(train_idx.size());
    for (std::size_t k : train_idx) training.push_back(m.samples[k]);
    model.fit_inputs(training);
  }
  const auto train_inputs = detail::encode_all(model, m, train_idx);
  const auto val_inputs = detail::encode_all(model, m, val_idx);
  std::vector<double> train_y, val_y;
  for (std::size_t k : train_idx) train_y.push_back(m.samples[k].label_norm);
  for (std::size_t k : val_idx) val_y.push_back(m.samples[k].label_norm);

  Adam adam(model.params(), cfg);
  Rng rng(derive_seed(cfg.seed, "shuffle"));
  std::vector<std::size_t> order(train_inputs.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;

  TrainResult result;
  double best_val = INFINITY;
  ParamStore best = model.params();
  int since_best = 0;
  const std::size_t bs = static_cast<std::size_t>(cfg.batch_size);
  const std::size_t micro = static_cast<std::size_t>(cfg.micro_batch);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t lo = 0; lo < order.size(); lo += bs) {
      const std::size_t hi = std::min(order.size(), lo + bs);
      const std::size_t parts = (hi - lo + micro - 1) / micro;
      std::vector<std::vector<Matrix>> part_grads(parts);
      std::vector<double> part_loss(parts);
      parallel_for(parts, [&](std::size_t p) {
        const std::size_t a = lo + p * micro;
        const std::size_t b = std::min(hi, a + micro);
        std::vector<const typename M::Input*> batch;
        std::vector<double> target;
        for (std::size_t k = a; k < b; ++k) {
          batch.push_back(&train_inputs[order[k]]);
          target.push_back(train_y[order[k]]);
        }
        part_loss[p] = detail::loss_and_grad(model, std::span<const typename M::Input* const>(batch), target,
                                             part_grads[p]);
      });
      std::vector<Matrix> grads = std::move(part_grads[0]);
      double loss = part_loss[0];
      for (std::size_t p = 1; p < parts; ++p) {
        for (std::size_t g = 0; g < grads.size(); ++g) grads[g] += part_grads[p][g];
        loss += part_loss[p];
      }
      const double scale = 1.0 / static_cast<double>(hi - lo);
      for (auto& g : grads) g *= scale;
      if (!std::isfinite(loss)) throw TrainingDiverged(epoch);
      adam.step(model.params(), grads);
      loss_sum += loss;
    }

    EpochLog entry{epoch, loss_sum / static_cast<double>(order.size()), std::nullopt};
    if (!std::isfinite(entry.train_loss)) throw TrainingDiverged(epoch);
    if (!val_inputs.empty()) entry.val = compute_metrics(predict_inputs<M>(model, val_inputs), val_y);
    result.log.push_back(entry);

    if (entry.val) {
      if (entry.val->rmse < best_val) {
        best_val = entry.val->rmse;
        best = model.params();
        result.best_epoch = epoch;
        since_best = 0;
      } else if (cfg.patience > 0 && ++since_best >= cfg.patience) {
        result.early_stopped = true;
        break;
      }
    }
    if (cfg.target_train_mse > 0.0 && entry.train_loss < cfg.target_train_mse) {
      const double mse = std::pow(compute_metrics(predict_inputs<M>(model, train_inputs), train_y).rmse, 2);
      if (mse < cfg.target_train_mse) {
        result.reached_target = true;
        if (!entry.val) result.best_epoch = epoch;
        break;
      }
    }
  }
  if (val_inputs.empty()) {
    result.best_epoch = result.log.empty() ? -1 : result.log.back().epoch;
  } else if (result.best_epoch >= 0) {
    model.params() = best;
  }
  return result;
}

// ---------------------------------------------------------------------------
// Outlier detection

struct OutlierPolicy {
  double k = 6.0;  // flag |residual| > median + k·MAD
};

struct OutlierRecord {
  std::uint64_t id = 0;
  double residual = 0.0;  // ŷ − y in label units (kcal/mol)
  int iteration = 0;
};

struct OutlierReport {
  DatasetManifest clean;
  std::vector<OutlierRecord> outliers;
  std::vector<std::size_t> flagged_per_iteration;
};

/// median(|r|) + k·MAD(|r|), MAD without the normal-consistency factor.
double outlier_threshold(std::span<const double> abs_residuals, double k);

/// Repeats: train a fresh model on all retained samples, score the absolute
/// residuals, drop those above the threshold. Stops when nothing new is
/// flagged or after `max_iters` rounds. The returned manifest keeps the
/// input's split assignment for the survivors.
template <Regressor M>
OutlierReport detect_outliers(const DatasetManifest& manifest, const std::function<M()>& make_model,
                              const TrainConfig& cfg, OutlierPolicy policy, int max_iters) {
  if (max_iters < 0) throw std::invalid_argument("max_iters must be >= 0");
  std::vector<bool> keep(manifest.samples.size(), true);
  OutlierReport report;

  for (int iter = 0; iter < max_iters; ++iter) {
    DatasetManifest work;
    std::vector<std::size_t> origin;
    for (std::size_t k = 0; k < manifest.samples.size(); ++k) {
      if (!keep[k]) continue;
      work.samples.push_back(manifest.samples[k]);
      work.samples.back().split = Split::kTrain;
      origin.push_back(k);
    }
    work = normalize_labels(std::move(work));

    M model = make_model();
    TrainConfig round_cfg = cfg;
    round_cfg.seed = derive_seed(cfg.seed, "outlier-round", static_cast<std::uint64_t>(iter));
    train(model, work, round_cfg);

    std::vector<std::size_t> all(work.samples.size());
    for (std::size_t k = 0; k < all.size(); ++k) all[k] = k;
    const auto pred = predict_samples(model, work, all);
    std::vector<double> residual(pred.size()), magnitude(pred.size());
    for (std::size_t k = 0; k < pred.size(); ++k) {
      residual[k] = work.label_stats->denormalize(pred[k]) - work.samples[k].label;
      magnitude[k] = std::abs(residual[k]);
    }
    const double threshold = outlier_threshold(magnitude, policy.k);
    std::size_t flagged = 0;
    for (std::size_t k = 0; k < pred.size(); ++k) {
      if (magnitude[k] > threshold) ++flagged;
    }
    if (flagged == pred.size()) {
      throw std::runtime_error("outlier detection flagged every remaining sample (threshold " +
                               std::to_string(threshold) + "); lower k is too aggressive");
    }
    report.flagged_per_iteration.push_back(flagged);
    if (flagged == 0) break;
    for (std::size_t k = 0; k < pred.size(); ++k) {
      if (magnitude[k] > threshold) {
        keep[origin[k]] = false;
        report.outliers.push_back({work.samples[k].id, residual[k], iter});
      }
    }
  }

  report.clean.protocol = manifest.protocol;
  for (std::size_t k = 0; k < manifest.samples.size(); ++k) {
    if (keep[k]) report.clean.samples.push_back(manifest.samples[k]);
  }
  if (!report.clean.indices(Split::kTrain).empty()) report.clean = normalize_labels(std::move(report.clean));
  return report;
}

// ---------------------------------------------------------------------------
// Experiment drivers

struct ExperimentRow {
  std::string method;
  Split split = Split::kTest;
  Metrics metrics;
};

struct ExperimentSettings {
  ModelConfig model;    // strategy/readout/normalize are overridden per variant
  MlpConfig mlp;
  TrainConfig train;
  TrainConfig mlp_train;
};

/// DG, FC and GN (gated-sum readout) plus the fingerprint MLP on a random
/// split. Rows: test then train for every method.
std::vector<ExperimentRow> run_experiment1(const DatasetManifest& random_split, const ExperimentSettings& s);

/// GN, GN+Norm, GN+Norm+CR, GN+Norm+GR plus the MLP on a leave-alcohol-out
/// split.
std::vector<ExperimentRow> run_experiment2(const DatasetManifest& grouped_split, const ExperimentSettings& s);

/// CSV with header method,split,r2,rmse,sre,mae.
void write_metrics_csv(std::ostream& out, std::span<const ExperimentRow> rows);

/// gnuplot-friendly "center count" histogram lines.
void write_histogram(std::ostream& out, std::span<const double> values, int bins);

}  // namespace dgnn

#endif  // DGNN_TRAINKIT_HPP_
