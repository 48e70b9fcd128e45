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

// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Pass criterion numbers as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dgnn/checkpoint.hpp"
#include "dgnn/dataset.hpp"
#include "dgnn/parallel.hpp"
#include "dgnn/trainkit.hpp"
#include "fixtures.hpp"
#include "model_fixtures.hpp"
#include "op_cases.hpp"
#include "reference_metrics.hpp"
#include "reference_mpnn.hpp"

namespace dgnn {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

// ---- pinned tolerances and budgets ------------------------------------------

constexpr double kGradTol = 1e-4;
constexpr int kGradPoints = 10;
constexpr double kGradBudgetSec = 120;

constexpr double kOracleTol = 1e-10;
constexpr int kOracleSeeds = 20;
constexpr int kOracleMaxNodes = 6;
constexpr double kOracleBudgetSec = 60;

constexpr double kPermTol = 1e-6;
constexpr int kPermutations = 50;

constexpr int kOverfitSamples = 64;
constexpr double kOverfitMse = 1e-3;
constexpr int kOverfitEpochs = 2000;
constexpr double kOverfitBudgetSec = 300;

constexpr int kSeeds = 3;
constexpr double kGeneralizationGap = 0.02;

constexpr double kCorruptFraction = 0.01;
constexpr double kCorruptSigmas = 10.0;
constexpr int kOutlierIters = 3;
constexpr double kMinRecall = 0.95;
constexpr double kMaxCleanFlagged = 0.02;

constexpr double kMetricTol = 1e-12;

// ---- model settings for the training criteria --------------------------------
// The library defaults (d = 64, width 128) are far too slow for a single
// core; these are the documented tuned settings (see README).

ModelConfig tuned_model() {
  ModelConfig m;
  m.hidden_dim = 16;
  m.net_width = 32;
  m.steps = 3;
  return m;
}

TrainConfig tuned_train(std::uint64_t seed) {
  TrainConfig t;
  t.epochs = 300;
  t.learning_rate = 3e-3;
  t.batch_size = 32;
  t.patience = 50;
  t.seed = seed;
  return t;
}

ExperimentSettings tuned_settings(std::uint64_t seed) {
  ExperimentSettings s;
  s.model = tuned_model();
  s.model.seed = derive_seed(seed, "model");
  s.mlp = MlpConfig{{512, 128}, derive_seed(seed, "mlp")};
  s.train = tuned_train(derive_seed(seed, "train"));
  s.mlp_train = tuned_train(derive_seed(seed, "train-mlp"));
  return s;
}

// ---- reporting ---------------------------------------------------------------

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

DatasetManifest toy_data(std::uint64_t seed) {
  return generate(load_library(fixtures::library_dir()), SyntheticLabelConfig{1.0, 0.15, seed});
}

// ---- 1: gradients ------------------------------------------------------------

Outcome gradient_suite() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  std::string worst_name;
  int checks = 0;
  auto note = [&](double err, const std::string& name) {
    ++checks;
    if (err > worst || !std::isfinite(err)) {
      worst = std::isfinite(err) ? err : INFINITY;
      worst_name = name;
    }
  };

  for (const auto& c : opcheck::op_cases()) {
    Rng rng(derive_seed(1001, c.name));
    for (int k = 0; k < kGradPoints; ++k) note(testing::gradient_relative_error(c.fn, c.inputs(rng)), c.name);
  }

  // End to end: every model variant, every parameter tensor.
  for (const auto& cfg : fixtures::all_variants(3, 2)) {
    for (int k = 0; k < kGradPoints; ++k) {
      Rng rng(derive_seed(1002, fixtures::label(cfg), static_cast<std::uint64_t>(k)));
      const auto sample = fixtures::sample_of(fixtures::random_molecule(1 + static_cast<int>(rng.below(3)), rng, k % 2),
                                              fixtures::random_molecule(1 + static_cast<int>(rng.below(3)), rng, k % 2));
      MpnnModel model(cfg);
      reference::randomize(model.params(), derive_seed(1003, fixtures::label(cfg), static_cast<std::uint64_t>(k)));
      const auto in = model.encode(sample);
      std::vector<Matrix> values;
      for (const auto& p : model.params().entries()) values.push_back(p.value);
      const testing::ScalarFn f = [&](Tape& tape, const std::vector<Var>& v) {
        const GraphInput* batch[1] = {&in};
        return model.forward(tape, v, batch);
      };
      note(testing::gradient_relative_error(f, values), "yhat " + fixtures::label(cfg));
    }
  }

  // Baseline MLP, small widths.
  for (int k = 0; k < kGradPoints; ++k) {
    MlpModel model(MlpConfig{{6, 4}, static_cast<std::uint64_t>(k)});
    Rng rng(derive_seed(1004, "mlp", static_cast<std::uint64_t>(k)));
    for (auto& p : model.params().entries()) p.value = testing::random_matrix(p.value.rows(), p.value.cols(), rng, 0.3);
    const auto x = model.encode(ReactionSample{0, fixtures::methanol(), fixtures::acetyl_chloride(), 0, 0, Split::kNone});
    std::vector<Matrix> values;
    for (const auto& p : model.params().entries()) values.push_back(p.value);
    const testing::ScalarFn f = [&](Tape& tape, const std::vector<Var>& v) {
      const MlpModel::Input* batch[1] = {&x};
      return model.forward(tape, v, batch);
    };
    note(testing::gradient_relative_error(f, values), "yhat mlp");
  }

  const double secs = seconds_since(t0);
  return {worst < kGradTol && secs < kGradBudgetSec,
          std::to_string(checks) + " checks, worst rel err " + fmt("%.2e", worst) + " (" + worst_name + "), " +
              fmt("%.1f", secs) + " s"};
}

// ---- 2: loop oracle ----------------------------------------------------------

Outcome oracle_equivalence() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  int compared = 0, largest = 0;
  for (const auto& cfg : fixtures::all_variants(3, 2)) {
    MpnnModel model(cfg);
    std::vector<GraphInput> inputs;
    for (int seed = 0; seed < kOracleSeeds; ++seed) {
      Rng rng(derive_seed(static_cast<std::uint64_t>(seed), "oracle-graphs"));
      // total nodes (plus the global node for GN) stays within the bound
      const int a = 1 + static_cast<int>(rng.below(3));
      const int b = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(5 - a)));
      inputs.push_back(model.encode(fixtures::sample_of(fixtures::random_molecule(a, rng, seed % 2 == 0),
                                                        fixtures::random_molecule(b, rng, seed % 2 == 0))));
      largest = std::max(largest, static_cast<int>(inputs.back().num_nodes()));
    }
    for (int seed = 0; seed < kOracleSeeds; ++seed) {
      reference::randomize(model.params(), derive_seed(static_cast<std::uint64_t>(seed), "oracle-params"));
      // one batched forward over every graph against the loop version of each
      Tape tape;
      const auto vars = model.params().bind(tape, false);
      std::vector<const GraphInput*> batch;
      for (const auto& in : inputs) batch.push_back(&in);
      const Matrix y = model.forward(tape, vars, batch).value();
      for (std::size_t k = 0; k < inputs.size(); ++k) {
        const double diff = std::abs(y(static_cast<Index>(k), 0) - reference::predict(model, inputs[k]));
        worst = std::max(worst, std::isfinite(diff) ? diff : INFINITY);
        ++compared;
      }
    }
  }
  const double secs = seconds_since(t0);
  return {worst < kOracleTol && largest <= kOracleMaxNodes && secs < kOracleBudgetSec,
          std::to_string(compared) + " predictions over 6 variants, max |diff| " + fmt("%.2e", worst) +
              ", largest graph " + std::to_string(largest) + " nodes, " + fmt("%.1f", secs) + " s"};
}

// ---- 3: permutation invariance -----------------------------------------------

Outcome permutation_invariance() {
  const auto lib = load_library(fixtures::library_dir());
  double worst = 0.0;
  std::string detail;
  for (auto strategy : {JoinStrategy::kDisjoint, JoinStrategy::kFullyConnected, JoinStrategy::kGlobalNode}) {
    ModelConfig cfg = tuned_model();
    cfg.strategy = strategy;
    MpnnModel model(cfg);
    reference::randomize(model.params(), 3003, 0.3);
    Rng rng(derive_seed(3003, to_string(strategy)));
    double strategy_worst = 0.0;
    for (int t = 0; t < kPermutations; ++t) {
      const auto& a = lib.alcohols[rng.below(lib.alcohols.size())];
      const auto& h = lib.halides[rng.below(lib.halides.size())];
      std::vector<int> pa(a.size()), ph(h.size());
      std::iota(pa.begin(), pa.end(), 0);
      std::iota(ph.begin(), ph.end(), 0);
      rng.shuffle(pa);
      rng.shuffle(ph);
      const double y = model.predict(fixtures::sample_of(a, h));
      const double yp = model.predict(fixtures::sample_of(relabeled(a, pa), relabeled(h, ph)));
      const double diff = std::abs(y - yp);
      strategy_worst = std::max(strategy_worst, std::isfinite(diff) ? diff : INFINITY);
    }
    worst = std::max(worst, strategy_worst);
    detail += std::string(to_string(strategy)) + " " + fmt("%.1e", strategy_worst) + "  ";
  }
  return {worst < kPermTol, std::to_string(kPermutations) + " relabelings each, max |diff|: " + detail};
}

// ---- 4: overfit ----------------------------------------------------------------

Outcome overfit() {
  const int saved_threads = thread_count();
  set_thread_count(1);
  auto m = toy_data(4004);
  Rng rng(4004);
  rng.shuffle(m.samples);
  m.samples.erase(m.samples.begin() + kOverfitSamples, m.samples.end());
  for (auto& s : m.samples) s.split = Split::kTrain;
  m = normalize_labels(std::move(m));

  ModelConfig cfg = tuned_model();
  cfg.strategy = JoinStrategy::kGlobalNode;
  MpnnModel model(cfg);
  TrainConfig tc;
  tc.epochs = kOverfitEpochs;
  tc.learning_rate = 3e-3;
  tc.batch_size = 16;
  tc.patience = 0;
  tc.target_train_mse = kOverfitMse;
  tc.seed = 4004;

  const auto t0 = Clock::now();
  const auto result = train(model, m, tc);
  const double secs = seconds_since(t0);
  set_thread_count(saved_threads);
  const double mse = std::pow(evaluate(model, m, Split::kTrain).rmse, 2);
  return {mse < kOverfitMse && secs < kOverfitBudgetSec && static_cast<int>(result.log.size()) <= kOverfitEpochs,
          "train MSE " + fmt("%.2e", mse) + " after " + std::to_string(result.log.size()) + " epochs, " +
              fmt("%.1f", secs) + " s on 1 thread"};
}

// ---- 5 and 6: qualitative orderings -----------------------------------------

struct SeedTable {
  std::map<std::string, std::vector<Metrics>> test;  // method -> per seed
};

SeedTable& experiment1_table() {
  static SeedTable table;
  static bool done = false;
  if (done) return table;
  for (int seed = 0; seed < kSeeds; ++seed) {
    const auto s = static_cast<std::uint64_t>(seed);
    const auto m = split(toy_data(s), SplitProtocol::kRandom, {}, s);
    for (const auto& row : run_experiment1(m, tuned_settings(s))) {
      if (row.split == Split::kTest) table.test[row.method].push_back(row.metrics);
    }
  }
  done = true;
  return table;
}

double mean_of(const std::vector<Metrics>& v, double Metrics::*field) {
  double s = 0.0;
  for (const auto& m : v) s += m.*field;
  return s / static_cast<double>(v.size());
}

Outcome table1_ordering() {
  const auto& t = experiment1_table();
  std::printf("    %-8s %12s %12s   (mean test over %d seeds; per seed rmse)\n", "method", "rmse", "r2", kSeeds);
  for (const char* method : {"MPNN DG", "MPNN FC", "MPNN GN", "MLP"}) {
    const auto& v = t.test.at(method);
    std::printf("    %-8s %12.4e %12.6f  ", method, mean_of(v, &Metrics::rmse), mean_of(v, &Metrics::r2));
    for (const auto& m : v) std::printf(" %.4e", m.rmse);
    std::printf("\n");
  }
  const double dg = mean_of(t.test.at("MPNN DG"), &Metrics::rmse);
  const double fc = mean_of(t.test.at("MPNN FC"), &Metrics::rmse);
  const double gn = mean_of(t.test.at("MPNN GN"), &Metrics::rmse);
  const double gn_r2 = mean_of(t.test.at("MPNN GN"), &Metrics::r2);
  const double mlp_r2 = mean_of(t.test.at("MLP"), &Metrics::r2);
  const bool order = gn <= fc && fc <= dg;
  const bool beats = gn_r2 > mlp_r2;
  return {order && beats, std::string("rmse GN<=FC<=DG ") + (order ? "holds" : "violated") + ", r2 GN " +
                              fmt("%.4f", gn_r2) + (beats ? " > " : " <= ") + "MLP " + fmt("%.4f", mlp_r2)};
}

Outcome generalization_gap() {
  const auto& random_gn = experiment1_table().test.at("MPNN GN");
  bool pass = true;
  std::string detail;
  for (int seed = 0; seed < kSeeds; ++seed) {
    const auto s = static_cast<std::uint64_t>(seed);
    const auto m = split(toy_data(s), SplitProtocol::kLeaveAlcoholOut, {}, s);
    const auto settings = tuned_settings(s);
    ModelConfig cfg = settings.model;
    cfg.strategy = JoinStrategy::kGlobalNode;
    MpnnModel model(cfg);
    train(model, m, settings.train);
    const double lao = evaluate(model, m, Split::kTest).r2;
    const double rnd = random_gn[static_cast<std::size_t>(seed)].r2;
    pass = pass && (rnd - lao >= kGeneralizationGap);
    detail += "seed " + std::to_string(seed) + ": random " + fmt("%.4f", rnd) + " vs grouped " + fmt("%.4f", lao) + "; ";
  }
  return {pass, detail};
}

// ---- 7: outliers ---------------------------------------------------------------

Outcome outlier_recovery() {
  auto m = toy_data(7007);
  const std::size_t n = m.samples.size();
  double mean = 0.0, sq = 0.0;
  for (const auto& s : m.samples) mean += s.label;
  mean /= static_cast<double>(n);
  for (const auto& s : m.samples) sq += (s.label - mean) * (s.label - mean);
  const double sigma = std::sqrt(sq / static_cast<double>(n));

  const auto n_bad = static_cast<std::size_t>(std::ceil(kCorruptFraction * static_cast<double>(n)));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(7007);
  rng.shuffle(order);
  std::set<std::uint64_t> corrupted;
  for (std::size_t k = 0; k < n_bad; ++k) {
    m.samples[order[k]].label += kCorruptSigmas * sigma;
    corrupted.insert(m.samples[order[k]].id);
  }

  ModelConfig cfg = tuned_model();
  cfg.strategy = JoinStrategy::kGlobalNode;
  cfg.seed = 7007;
  TrainConfig tc = tuned_train(7007);
  tc.epochs = 100;
  const auto report = detect_outliers<MpnnModel>(
      m, [&] { return MpnnModel(cfg); }, tc, OutlierPolicy{}, kOutlierIters);

  std::size_t hit = 0, false_pos = 0;
  for (const auto& r : report.outliers) (corrupted.contains(r.id) ? hit : false_pos)++;
  const double recall = static_cast<double>(hit) / static_cast<double>(n_bad);
  const double clean_rate = static_cast<double>(false_pos) / static_cast<double>(n - n_bad);
  std::string per_iter;
  for (auto f : report.flagged_per_iteration) per_iter += std::to_string(f) + " ";
  return {recall >= kMinRecall && clean_rate < kMaxCleanFlagged,
          "recovered " + std::to_string(hit) + "/" + std::to_string(n_bad) + ", clean flagged " +
              std::to_string(false_pos) + "/" + std::to_string(n - n_bad) + ", flagged per iteration: " + per_iter};
}

// ---- 8: metrics ----------------------------------------------------------------

Outcome metric_correctness() {
  const std::vector<double> y{0, 1, 2, 3}, p{0, 1, 2, 4};
  const auto hand = compute_metrics(p, y);
  const bool exact = hand.rmse == 0.5 && hand.mae == 0.25 && hand.r2 == 0.8;

  // evaluate() on a real model against a loop over single predictions
  auto m = split(toy_data(8008), SplitProtocol::kRandom, {}, 8008);
  ModelConfig cfg = tuned_model();
  MpnnModel model(cfg);
  reference::randomize(model.params(), 8008, 0.2);
  double worst = 0.0;
  for (Split s : {Split::kTrain, Split::kVal, Split::kTest}) {
    const auto got = evaluate(model, m, s);
    std::vector<double> pred, target;
    for (std::size_t k : m.indices(s)) {
      pred.push_back(model.predict(m.samples[k]));
      target.push_back(m.samples[k].label_norm);
    }
    const auto want = reference::reference_metrics(pred, target);
    for (auto f : {&Metrics::r2, &Metrics::rmse, &Metrics::mae}) worst = std::max(worst, std::abs(got.*f - want.*f));
    worst = std::max(worst, std::abs(got.sre - want.sre) / std::max(1.0, want.sre));
  }
  Rng rng(8009);
  for (int t = 0; t < 200; ++t) {
    const std::size_t len = 2 + rng.below(50);
    std::vector<double> a(len), b(len);
    for (std::size_t k = 0; k < len; ++k) {
      a[k] = rng.uniform(-5, 5);
      b[k] = rng.uniform(-5, 5);
    }
    const auto got = compute_metrics(a, b);
    const auto want = reference::reference_metrics(a, b);
    for (auto f : {&Metrics::r2, &Metrics::rmse, &Metrics::mae}) worst = std::max(worst, std::abs(got.*f - want.*f));
    worst = std::max(worst, std::abs(got.sre - want.sre) / std::max(1.0, want.sre));
  }
  return {exact && worst < kMetricTol, std::string("4-point example ") + (exact ? "exact" : "WRONG") +
                                           ", max deviation from reimplementation " + fmt("%.2e", worst)};
}

// ---- 9: determinism ------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  const fs::path dir = fs::temp_directory_path() / "dgnn_acceptance_exp1";
  fs::create_directories(dir);
  const std::string flags =
      " --seed 9 exp1 --hidden-dim 6 --net-width 8 --steps 2 --epochs 4 --mlp-epochs 4 --mlp-hidden 32,8 --out ";
  const auto a = dir / "a.csv", b = dir / "b.csv";
  const int ra = std::system((std::string(DGNN_CLI) + " --threads 1" + flags + a.string()).c_str());
  const int rb = std::system(("DGNN_THREADS=2 " + std::string(DGNN_CLI) + flags + b.string()).c_str());
  const std::string ca = slurp(a), cb = slurp(b);
  fs::remove_all(dir);
  const bool same = ra == 0 && rb == 0 && !ca.empty() && ca == cb;
  return {same, "two exp1 runs (1 and 2 threads): " + std::to_string(ca.size()) + " bytes, " +
                    (same ? "byte-identical" : "DIFFERENT or failed")};
}

// ---- 10: serialization ---------------------------------------------------------

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

Outcome serialization() {
  const fs::path dir = fs::temp_directory_path() / "dgnn_acceptance_io";
  fs::create_directories(dir);
  const auto m = split(toy_data(10010), SplitProtocol::kLeaveAlcoholOut, {}, 10010);
  save_manifest(m, (dir / "m.jsonl").string());
  const auto back = load_manifest((dir / "m.jsonl").string());
  save_manifest(back, (dir / "m2.jsonl").string());
  const bool manifest_ok = back == m && slurp(dir / "m.jsonl") == slurp(dir / "m2.jsonl");

  ModelConfig cfg = tuned_model();
  cfg.readout = Readout::kConcat;
  cfg.normalize = true;
  MpnnModel model(cfg);
  TrainConfig tc;
  tc.epochs = 2;
  tc.seed = 10010;
  train(model, m, tc);
  MlpModel mlp(MlpConfig{{64, 16}, 10010});
  train(mlp, m, tc);

  save_checkpoint({model, *m.label_stats}, (dir / "gn.json").string());
  save_checkpoint({mlp, *m.label_stats}, (dir / "mlp.json").string());
  const auto gn_back = load_checkpoint((dir / "gn.json").string());
  const auto mlp_back = load_checkpoint((dir / "mlp.json").string());
  fs::remove_all(dir);

  const auto& g = std::get<MpnnModel>(gn_back.model);
  const auto& b = std::get<MlpModel>(mlp_back.model);
  std::vector<std::size_t> all(m.samples.size());
  std::iota(all.begin(), all.end(), 0);
  const auto p1 = predict_samples(model, m, all), p2 = predict_samples(g, m, all);
  const auto q1 = predict_samples(mlp, m, all), q2 = predict_samples(b, m, all);
  std::size_t mismatched = 0;
  for (std::size_t k = 0; k < all.size(); ++k) {
    if (!same_bits(p1[k], p2[k])) ++mismatched;
    if (!same_bits(q1[k], q2[k])) ++mismatched;
  }
  const bool ckpt_ok = mismatched == 0 && g.params() == model.params() && b.params() == mlp.params() &&
                       gn_back.labels == *m.label_stats;
  return {manifest_ok && ckpt_ok, std::string("manifest ") + (manifest_ok ? "lossless" : "CHANGED") + ", " +
                                      std::to_string(2 * all.size() - mismatched) + "/" +
                                      std::to_string(2 * all.size()) + " reloaded predictions bit-identical"};
}

}  // namespace
}  // namespace dgnn

int main(int argc, char** argv) {
  using namespace dgnn;
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"gradient suite", gradient_suite},
      {"loop oracle equivalence", oracle_equivalence},
      {"permutation invariance", permutation_invariance},
      {"overfit 64 samples", overfit},
      {"join strategy ordering", table1_ordering},
      {"grouped split is harder", generalization_gap},
      {"outlier recovery", outlier_recovery},
      {"metric correctness", metric_correctness},
      {"exp1 determinism", determinism},
      {"serialization round trip", serialization},
  };
  std::set<int> only;
  for (int k = 1; k < argc; ++k) only.insert(std::atoi(argv[k]));

  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!only.empty() && !only.contains(id)) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %2d %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", id, criteria[k].first, o.detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
