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

#include "dgnn/trainkit.hpp"

#include <cstdio>
#include <ostream>

#include "json.hpp"

namespace dgnn {

Metrics compute_metrics(std::span<const double> predicted, std::span<const double> target) {
  if (predicted.size() != target.size()) throw std::invalid_argument("metrics: prediction/target size mismatch");
  if (target.empty()) throw std::invalid_argument("metrics: no samples");
  const double n = static_cast<double>(target.size());
  double mean = 0.0;
  for (double y : target) mean += y;
  mean /= n;
  double sse = 0.0, sst = 0.0, sre = 0.0, sae = 0.0;
  for (std::size_t k = 0; k < target.size(); ++k) {
    const double err = predicted[k] - target[k];
    sse += err * err;
    sst += (target[k] - mean) * (target[k] - mean);
    const double rel = err / (std::abs(target[k]) + kSreEpsilon);
    sre += rel * rel;
    sae += std::abs(err);
  }
  Metrics m;
  m.r2 = sst > 0.0 ? 1.0 - sse / sst : (sse == 0.0 ? 1.0 : 0.0);
  m.rmse = std::sqrt(sse / n);
  m.sre = sre / n;
  m.mae = sae / n;
  return m;
}

void TrainConfig::validate() const {
  if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (micro_batch < 1) throw std::invalid_argument("micro_batch must be >= 1");
  if (learning_rate < 0.0) throw std::invalid_argument("learning_rate must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("Adam betas must lie in [0, 1)");
  }
  if (epsilon <= 0.0) throw std::invalid_argument("epsilon must be > 0");
  if (patience < 0) throw std::invalid_argument("patience must be >= 0");
}

Adam::Adam(const ParamStore& params, const TrainConfig& cfg)
    : lr_(cfg.learning_rate),
      beta1_(cfg.beta1),
      beta2_(cfg.beta2),
      eps_(cfg.epsilon),
      m_(params.zeros_like()),
      v_(params.zeros_like()) {}

void Adam::step(ParamStore& params, const std::vector<Matrix>& grads) {
  if (grads.size() != params.size()) throw std::invalid_argument("Adam: gradient count mismatch");
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t k = 0; k < grads.size(); ++k) {
    m_[k] = beta1_ * m_[k] + (1.0 - beta1_) * grads[k];
    v_[k] = beta2_ * v_[k] + (1.0 - beta2_) * grads[k].cwiseProduct(grads[k]);
    if (lr_ == 0.0) continue;
    params[k].value.array() -= lr_ * (m_[k].array() / c1) / ((v_[k].array() / c2).sqrt() + eps_);
  }
}

namespace {

nlohmann::json metrics_json(const Metrics& m) {
  return {{"r2", m.r2}, {"rmse", m.rmse}, {"sre", m.sre}, {"mae", m.mae}};
}

}  // namespace

void write_epoch_log(std::ostream& out, const std::vector<EpochLog>& log) {
  for (const auto& e : log) {
    nlohmann::json j = {{"epoch", e.epoch}, {"train_loss", e.train_loss}};
    if (e.val) j["val"] = metrics_json(*e.val);
    out << j.dump() << '\n';
  }
}

double outlier_threshold(std::span<const double> abs_residuals, double k) {
  if (abs_residuals.empty()) throw std::invalid_argument("outlier_threshold: no residuals");
  auto median = [](std::vector<double> v) {
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    double hi = v[mid];
    if (v.size() % 2 == 1) return hi;
    const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lo + hi);
  };
  const double med = median({abs_residuals.begin(), abs_residuals.end()});
  std::vector<double> dev;
  dev.reserve(abs_residuals.size());
  for (double r : abs_residuals) dev.push_back(std::abs(r - med));
  return med + k * median(std::move(dev));
}

// ---------------------------------------------------------------------------

namespace {

template <Regressor M>
void run_variant(std::vector<ExperimentRow>& rows, const std::string& name, M model, const DatasetManifest& m,
                 const TrainConfig& cfg) {
  train(model, m, cfg);
  rows.push_back({name, Split::kTest, evaluate(model, m, Split::kTest)});
  rows.push_back({name, Split::kTrain, evaluate(model, m, Split::kTrain)});
}

ModelConfig variant(ModelConfig base, JoinStrategy strategy, Readout readout, bool normalize) {
  base.strategy = strategy;
  base.readout = readout;
  base.normalize = normalize;
  return base;
}

}  // namespace

std::vector<ExperimentRow> run_experiment1(const DatasetManifest& m, const ExperimentSettings& s) {
  std::vector<ExperimentRow> rows;
  run_variant(rows, "MPNN DG", MpnnModel(variant(s.model, JoinStrategy::kDisjoint, Readout::kGatedSum, false)), m,
              s.train);
  run_variant(rows, "MPNN FC", MpnnModel(variant(s.model, JoinStrategy::kFullyConnected, Readout::kGatedSum, false)),
              m, s.train);
  run_variant(rows, "MPNN GN", MpnnModel(variant(s.model, JoinStrategy::kGlobalNode, Readout::kGatedSum, false)), m,
              s.train);
  run_variant(rows, "MLP", MlpModel(s.mlp), m, s.mlp_train);
  return rows;
}

std::vector<ExperimentRow> run_experiment2(const DatasetManifest& m, const ExperimentSettings& s) {
  std::vector<ExperimentRow> rows;
  const auto gn = JoinStrategy::kGlobalNode;
  run_variant(rows, "MPNN GN", MpnnModel(variant(s.model, gn, Readout::kGatedSum, false)), m, s.train);
  run_variant(rows, "+Norm", MpnnModel(variant(s.model, gn, Readout::kGatedSum, true)), m, s.train);
  run_variant(rows, "+Norm+CR", MpnnModel(variant(s.model, gn, Readout::kConcat, true)), m, s.train);
  run_variant(rows, "+Norm+GR", MpnnModel(variant(s.model, gn, Readout::kGlobalNode, true)), m, s.train);
  run_variant(rows, "MLP", MlpModel(s.mlp), m, s.mlp_train);
  return rows;
}

void write_metrics_csv(std::ostream& out, std::span<const ExperimentRow> rows) {
  out << "method,split,r2,rmse,sre,mae\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.6e,%.6e,%.6e,%.6e", r.metrics.r2, r.metrics.rmse, r.metrics.sre, r.metrics.mae);
    out << r.method << ',' << to_string(r.split) << ',' << buf << '\n';
  }
}

void write_histogram(std::ostream& out, std::span<const double> values, int bins) {
  if (values.empty() || bins < 1) return;
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double width = (*hi_it - lo) / bins;
  std::vector<std::size_t> counts(bins, 0);
  for (double v : values) {
    int b = width > 0.0 ? static_cast<int>((v - lo) / width) : 0;
    counts[std::clamp(b, 0, bins - 1)]++;
  }
  char buf[64];
  for (int b = 0; b < bins; ++b) {
    std::snprintf(buf, sizeof buf, "%.6f %zu", lo + (b + 0.5) * width, counts[b]);
    out << buf << '\n';
  }
}

}  // namespace dgnn
