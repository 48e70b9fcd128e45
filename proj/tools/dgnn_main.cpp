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

// dgnn: command-line entry point for the whole pipeline.
//
// Errors go to stderr as a single line "error: <kind>: <message>" and the
// process exits nonzero. Kinds: usage, invalid_argument, io, format,
// diverged, runtime.

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dgnn/checkpoint.hpp"
#include "dgnn/dataset.hpp"
#include "dgnn/parallel.hpp"
#include "dgnn/trainkit.hpp"

namespace {

using namespace dgnn;

struct CliError : std::runtime_error {
  CliError(std::string kind, const std::string& msg) : std::runtime_error(msg), kind(std::move(kind)) {}
  std::string kind;
};

struct Options {
  std::uint64_t seed = 0;
  std::optional<int> threads;
  std::string config_path;

  std::string in, out, ckpt, library = DGNN_SOURCE_DIR "/data/library";
  std::string log_path, hist_path, scatter_path, report_path;
  double gamma = 1.0;
  double noise = SyntheticLabelConfig{}.noise_scale;
  std::string protocol = "random";
  std::string fractions = "0.8,0.1,0.1";
  std::string eval_split = "test";
  std::string strategy = "gn", readout = "gated";
  bool normalize = false;
  int max_iters = 3;
  double outlier_k = OutlierPolicy{}.k;

  ModelConfig model;
  TrainConfig train;
  std::vector<Index> mlp_hidden = MlpConfig{}.hidden;
  TrainConfig mlp_train;
};

// ---- config file -----------------------------------------------------------

std::map<std::string, std::string> read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CliError("io", "cannot open config file " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      if (a == std::string::npos) return std::string();
      return s.substr(a, s.find_last_not_of(" \t\r") - a + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw CliError("usage", path + ":" + std::to_string(lineno) + ": expected key=value");
    }
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

// Fills options that were not given on the command line. Keys are long
// option names without the leading dashes.
void apply_config(CLI::App& app, CLI::App* sub, const std::string& path) {
  for (const auto& [key, value] : read_config(path)) {
    if (key == "config") continue;
    CLI::Option* opt = sub ? sub->get_option_no_throw("--" + key) : nullptr;
    if (!opt) opt = app.get_option_no_throw("--" + key);
    if (!opt) throw CliError("usage", "config key '" + key + "' is not an option of this subcommand");
    if (opt->count() > 0) continue;  // explicit flag wins
    try {
      opt->add_result(value);
      opt->run_callback();
    } catch (const CLI::Error& e) {
      throw CliError("usage", "config key '" + key + "': " + e.what());
    }
  }
}

// ---- option groups ---------------------------------------------------------

void add_train_options(CLI::App* c, TrainConfig& t, const std::string& prefix) {
  c->add_option("--" + prefix + "epochs", t.epochs, "Maximum epochs")->capture_default_str();
  c->add_option("--" + prefix + "batch-size", t.batch_size, "Minibatch size")->capture_default_str();
  c->add_option("--" + prefix + "lr", t.learning_rate, "Adam learning rate")->capture_default_str();
  c->add_option("--" + prefix + "patience", t.patience, "Early-stopping patience (0 = off)")->capture_default_str();
}

void add_model_options(CLI::App* c, Options& o) {
  c->add_option("--hidden-dim", o.model.hidden_dim, "Node state width d")->capture_default_str();
  c->add_option("--steps", o.model.steps, "Message passing steps T")->capture_default_str();
  c->add_option("--net-width", o.model.net_width, "Hidden width of edge/readout nets")->capture_default_str();
}

void add_variant_options(CLI::App* c, Options& o) {
  c->add_option("--strategy", o.strategy, "Join strategy")
      ->check(CLI::IsMember({"dg", "fc", "gn"}))
      ->capture_default_str();
  c->add_option("--readout", o.readout, "Readout")->check(CLI::IsMember({"gated", "gr", "cr"}))->capture_default_str();
  c->add_flag("--norm", o.normalize, "Normalize node features");
}

void add_mlp_options(CLI::App* c, Options& o, bool with_prefix_train) {
  c->add_option("--mlp-hidden", o.mlp_hidden, "MLP hidden widths")->delimiter(',')->capture_default_str();
  if (with_prefix_train) add_train_options(c, o.mlp_train, "mlp-");
}

// ---- helpers ---------------------------------------------------------------

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw CliError("io", "cannot write " + path);
  return f;
}

template <typename Fn>
void with_output(const std::string& path, Fn&& fn) {
  if (path.empty() || path == "-") {
    fn(std::cout);
  } else {
    auto f = open_out(path);
    fn(f);
  }
}

ModelConfig model_config(const Options& o) {
  ModelConfig m = o.model;
  m.strategy = join_strategy_from_string(o.strategy);
  m.readout = readout_from_string(o.readout);
  m.normalize = o.normalize;
  m.seed = derive_seed(o.seed, "model");
  return m;
}

TrainConfig train_config(TrainConfig t, const Options& o, std::string_view key) {
  t.seed = derive_seed(o.seed, key);
  return t;
}

std::string mpnn_label(JoinStrategy s) {
  std::string name(to_string(s));
  for (char& c : name) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return "MPNN " + name;
}

MlpConfig mlp_config(const Options& o) { return MlpConfig{o.mlp_hidden, derive_seed(o.seed, "mlp")}; }

DatasetManifest load_in(const Options& o) {
  if (o.in.empty()) throw CliError("usage", "--in is required");
  return load_manifest(o.in);
}

void print_metrics(const std::string& method, const std::vector<std::pair<Split, Metrics>>& rows) {
  std::vector<ExperimentRow> out;
  for (const auto& [s, m] : rows) out.push_back({method, s, m});
  write_metrics_csv(std::cout, out);
}

template <typename M>
std::vector<std::pair<Split, Metrics>> all_metrics(const M& model, const DatasetManifest& m) {
  std::vector<std::pair<Split, Metrics>> rows;
  for (Split s : {Split::kTrain, Split::kVal, Split::kTest}) {
    if (!m.indices(s).empty()) rows.emplace_back(s, evaluate(model, m, s));
  }
  return rows;
}

template <typename M>
void fit_and_report(M model, const DatasetManifest& m, const TrainConfig& cfg, const Options& o,
                    const std::string& method) {
  const auto result = train(model, m, cfg);
  if (!o.log_path.empty()) with_output(o.log_path, [&](std::ostream& f) { write_epoch_log(f, result.log); });
  if (!o.out.empty()) save_checkpoint({model, *m.label_stats}, o.out);
  print_metrics(method, all_metrics(model, m));
}

// Splits unless the manifest already carries the wanted protocol.
DatasetManifest ensure_split(DatasetManifest m, SplitProtocol want, const Options& o) {
  if (m.protocol == want && m.label_stats) return m;
  return split(std::move(m), want, parse_fractions(o.fractions), o.seed);
}

DatasetManifest experiment_data(const Options& o, SplitProtocol want) {
  DatasetManifest m;
  if (o.in.empty()) {
    m = generate(load_library(o.library), SyntheticLabelConfig{o.gamma, o.noise, o.seed});
  } else {
    m = load_manifest(o.in);
  }
  return ensure_split(std::move(m), want, o);
}

ExperimentSettings experiment_settings(const Options& o) {
  ExperimentSettings s;
  s.model = model_config(o);
  s.mlp = mlp_config(o);
  s.train = train_config(o.train, o, "train");
  s.mlp_train = train_config(o.mlp_train, o, "train-mlp");
  return s;
}

// ---- subcommands -----------------------------------------------------------

void cmd_gen(const Options& o) {
  if (o.out.empty()) throw CliError("usage", "--out is required");
  const auto m = generate(load_library(o.library), SyntheticLabelConfig{o.gamma, o.noise, o.seed});
  save_manifest(m, o.out);
  if (!o.hist_path.empty()) {
    std::vector<double> labels;
    for (const auto& s : m.samples) labels.push_back(s.label);
    with_output(o.hist_path, [&](std::ostream& f) { write_histogram(f, labels, 40); });
  }
  std::cout << "samples," << m.samples.size() << '\n';
}

void cmd_split(const Options& o) {
  if (o.out.empty()) throw CliError("usage", "--out is required");
  const auto m = split(load_in(o), split_protocol_from_string(o.protocol), parse_fractions(o.fractions), o.seed);
  save_manifest(m, o.out);
  for (Split s : {Split::kTrain, Split::kVal, Split::kTest}) {
    std::cout << to_string(s) << ',' << m.indices(s).size() << '\n';
  }
}

void cmd_train(const Options& o) {
  const auto m = load_in(o);
  if (!m.label_stats) throw CliError("invalid_argument", "manifest is not split; run 'dgnn split' first");
  const auto cfg = model_config(o);
  fit_and_report(MpnnModel(cfg), m, train_config(o.train, o, "train"), o, mpnn_label(cfg.strategy));
}

void cmd_baseline(const Options& o) {
  const auto m = load_in(o);
  if (!m.label_stats) throw CliError("invalid_argument", "manifest is not split; run 'dgnn split' first");
  fit_and_report(MlpModel(mlp_config(o)), m, train_config(o.train, o, "train-mlp"), o, "MLP");
}

void cmd_eval(const Options& o) {
  if (o.ckpt.empty()) throw CliError("usage", "--ckpt is required");
  const auto ckpt = load_checkpoint(o.ckpt);
  auto m = load_in(o);
  // Targets are expressed in the checkpoint's label units.
  for (auto& s : m.samples) s.label_norm = ckpt.labels.normalize(s.label);
  m.label_stats = ckpt.labels;
  const Split split = split_from_string(o.eval_split);

  std::visit(
      [&](const auto& model) {
        using M = std::decay_t<decltype(model)>;
        std::string method = "MLP";
        if constexpr (std::is_same_v<M, MpnnModel>) method = mpnn_label(model.config().strategy);
        print_metrics(method, {{split, evaluate(model, m, split)}});
        if (!o.scatter_path.empty()) {
          const auto idx = m.indices(split);
          const auto pred = predict_samples(model, m, idx);
          with_output(o.scatter_path, [&](std::ostream& f) {
            char buf[96];
            for (std::size_t k = 0; k < idx.size(); ++k) {
              std::snprintf(buf, sizeof buf, "%.9g %.9g", m.samples[idx[k]].label, ckpt.labels.denormalize(pred[k]));
              f << buf << '\n';
            }
          });
        }
      },
      ckpt.model);
}

void cmd_outliers(const Options& o) {
  if (o.out.empty()) throw CliError("usage", "--out is required");
  const auto m = load_in(o);
  const auto cfg = model_config(o);
  const auto report = detect_outliers<MpnnModel>(
      m, [&] { return MpnnModel(cfg); }, train_config(o.train, o, "outliers"), OutlierPolicy{o.outlier_k},
      o.max_iters);
  save_manifest(report.clean, o.out);

  nlohmann::json j;
  j["k"] = o.outlier_k;
  j["flagged_per_iteration"] = report.flagged_per_iteration;
  j["outliers"] = nlohmann::json::array();
  std::vector<double> residuals;
  for (const auto& r : report.outliers) {
    j["outliers"].push_back({{"id", r.id}, {"residual", r.residual}, {"iteration", r.iteration}});
    residuals.push_back(r.residual);
  }
  if (!o.report_path.empty()) with_output(o.report_path, [&](std::ostream& f) { f << j.dump(2) << '\n'; });
  if (!o.hist_path.empty()) with_output(o.hist_path, [&](std::ostream& f) { write_histogram(f, residuals, 20); });
  std::cout << "outliers," << report.outliers.size() << "\nretained," << report.clean.samples.size() << '\n';
}

void cmd_experiment(const Options& o, int which) {
  const auto want = which == 1 ? SplitProtocol::kRandom : SplitProtocol::kLeaveAlcoholOut;
  const auto m = experiment_data(o, want);
  const auto s = experiment_settings(o);
  const auto rows = which == 1 ? run_experiment1(m, s) : run_experiment2(m, s);
  with_output(o.out, [&](std::ostream& f) { write_metrics_csv(f, rows); });
}

int fail(const std::string& kind, std::string msg) {
  for (char& c : msg) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  std::cerr << "error: " << kind << ": " << msg << std::endl;
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  o.mlp_train.epochs = o.train.epochs;

  CLI::App app{"dgnn: message passing networks for reaction energies"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--seed", o.seed, "Master seed")->capture_default_str();
  app.add_option("--threads", o.threads, "Worker threads (falls back to DGNN_THREADS)");
  app.add_option("--config", o.config_path, "key=value file; explicit flags take precedence");

  auto* gen = app.add_subcommand("gen", "Generate a labeled manifest from the molecule library");
  gen->add_option("--out", o.out, "Output manifest (JSONL)");
  gen->add_option("--gamma", o.gamma, "Weight of the non-additive term")->capture_default_str();
  gen->add_option("--noise", o.noise, "Label noise scale, kcal/mol")->capture_default_str();
  gen->add_option("--library", o.library, "Library directory")->capture_default_str();
  gen->add_option("--hist", o.hist_path, "Label histogram output");

  auto* spl = app.add_subcommand("split", "Assign train/val/test and normalize labels");
  spl->add_option("--in", o.in, "Input manifest");
  spl->add_option("--out", o.out, "Output manifest");
  spl->add_option("--protocol", o.protocol)
      ->check(CLI::IsMember({"random", "leave-alcohol-out"}))
      ->capture_default_str();
  spl->add_option("--fractions", o.fractions)->capture_default_str();

  auto* trn = app.add_subcommand("train", "Train an MPNN and save a checkpoint");
  trn->add_option("--in", o.in, "Split manifest");
  trn->add_option("--out", o.out, "Checkpoint output");
  trn->add_option("--log", o.log_path, "Per-epoch JSONL log");
  add_variant_options(trn, o);
  add_model_options(trn, o);
  add_train_options(trn, o.train, "");

  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint on one split");
  ev->add_option("--ckpt", o.ckpt, "Checkpoint");
  ev->add_option("--in", o.in, "Split manifest");
  ev->add_option("--split", o.eval_split)->check(CLI::IsMember({"train", "val", "test"}))->capture_default_str();
  ev->add_option("--scatter", o.scatter_path, "Write 'label prediction' pairs (kcal/mol)");

  auto* base = app.add_subcommand("baseline", "Train the fingerprint MLP baseline");
  base->add_option("--in", o.in, "Split manifest");
  base->add_option("--out", o.out, "Checkpoint output");
  base->add_option("--log", o.log_path, "Per-epoch JSONL log");
  add_mlp_options(base, o, false);
  add_train_options(base, o.train, "");

  auto* out = app.add_subcommand("outliers", "Iterative outlier removal");
  out->add_option("--in", o.in, "Input manifest");
  out->add_option("--out", o.out, "Clean manifest output");
  out->add_option("--report", o.report_path, "Outlier report (JSON)");
  out->add_option("--hist", o.hist_path, "Histogram of flagged residuals");
  out->add_option("--max-iters", o.max_iters)->capture_default_str();
  out->add_option("--k", o.outlier_k, "Threshold: median + k*MAD")->capture_default_str();
  add_variant_options(out, o);
  add_model_options(out, o);
  add_train_options(out, o.train, "");

  std::vector<CLI::App*> exps;
  for (int which : {1, 2}) {
    auto* e = app.add_subcommand("exp" + std::to_string(which),
                                 which == 1 ? "Join strategies and MLP on a random split"
                                            : "Normalization and readouts on a leave-alcohol-out split");
    e->add_option("--in", o.in, "Manifest (generated from the library when omitted)");
    e->add_option("--out", o.out, "CSV output (stdout when omitted)");
    e->add_option("--library", o.library)->capture_default_str();
    e->add_option("--gamma", o.gamma)->capture_default_str();
    e->add_option("--noise", o.noise)->capture_default_str();
    e->add_option("--fractions", o.fractions)->capture_default_str();
    add_model_options(e, o);
    add_train_options(e, o.train, "");
    add_mlp_options(e, o, true);
    exps.push_back(e);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what());
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    if (!o.config_path.empty()) apply_config(app, sub, o.config_path);

    int threads = 0;
    if (o.threads) {
      threads = *o.threads;
    } else if (const char* env = std::getenv("DGNN_THREADS"); env && *env) {
      try {
        threads = std::stoi(env);
      } catch (const std::exception&) {
        throw CliError("usage", std::string("DGNN_THREADS is not an integer: ") + env);
      }
    }
    if (threads < 0) throw CliError("usage", "thread count must be >= 0");
    if (threads > 0) set_thread_count(threads);

    if (sub == gen) cmd_gen(o);
    else if (sub == spl) cmd_split(o);
    else if (sub == trn) cmd_train(o);
    else if (sub == ev) cmd_eval(o);
    else if (sub == base) cmd_baseline(o);
    else if (sub == out) cmd_outliers(o);
    else if (sub == exps[0]) cmd_experiment(o, 1);
    else cmd_experiment(o, 2);
  } catch (const CliError& e) {
    return fail(e.kind, e.what());
  } catch (const TrainingDiverged& e) {
    return fail("diverged", e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail("format", e.what());
  } catch (const std::invalid_argument& e) {
    return fail("invalid_argument", e.what());
  } catch (const std::out_of_range& e) {
    return fail("invalid_argument", e.what());
  } catch (const std::exception& e) {
    return fail("runtime", e.what());
  }
  return 0;
}
