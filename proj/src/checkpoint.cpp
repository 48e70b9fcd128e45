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

#include "dgnn/checkpoint.hpp"

#include <fstream>
#include <stdexcept>

namespace dgnn {
namespace {

using nlohmann::json;

json params_to_json(const ParamStore& store) {
  json out = json::array();
  for (const auto& p : store.entries()) {
    json data = json::array();
    for (Index k = 0; k < p.value.size(); ++k) data.push_back(p.value.data()[k]);
    out.push_back({{"name", p.name}, {"shape", {p.value.rows(), p.value.cols()}}, {"data", std::move(data)}});
  }
  return out;
}

// Overwrites the freshly initialized tensors of `store`; names and shapes
// must match exactly.
void params_from_json(ParamStore& store, const json& j) {
  if (j.size() != store.size()) {
    throw std::invalid_argument("checkpoint has " + std::to_string(j.size()) + " parameter tensors, model expects " +
                                std::to_string(store.size()));
  }
  for (std::size_t k = 0; k < store.size(); ++k) {
    const json& jp = j[k];
    Parameter& p = store[k];
    if (jp.at("name").get<std::string>() != p.name) {
      throw std::invalid_argument("checkpoint parameter " + std::to_string(k) + " is '" +
                                  jp["name"].get<std::string>() + "', expected '" + p.name + "'");
    }
    const auto rows = jp.at("shape").at(0).get<Index>();
    const auto cols = jp.at("shape").at(1).get<Index>();
    if (rows != p.value.rows() || cols != p.value.cols()) {
      throw std::invalid_argument("checkpoint parameter '" + p.name + "' has the wrong shape");
    }
    const json& data = jp.at("data");
    if (static_cast<Index>(data.size()) != rows * cols) {
      throw std::invalid_argument("checkpoint parameter '" + p.name + "' has the wrong element count");
    }
    for (Index i = 0; i < rows * cols; ++i) p.value.data()[i] = data[static_cast<std::size_t>(i)].get<double>();
  }
}

json vec_to_json(const Eigen::RowVectorXd& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

Eigen::RowVectorXd vec_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::RowVectorXd>(v.data(), static_cast<Index>(v.size()));
}

json config_to_json(const ModelConfig& c) {
  return {{"hidden_dim", c.hidden_dim},
          {"steps", c.steps},
          {"net_width", c.net_width},
          {"readout", std::string(to_string(c.readout))},
          {"strategy", std::string(to_string(c.strategy))},
          {"normalize", c.normalize},
          {"seed", c.seed}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.hidden_dim = j.at("hidden_dim").get<int>();
  c.steps = j.at("steps").get<int>();
  c.net_width = j.at("net_width").get<int>();
  c.readout = readout_from_string(j.at("readout").get<std::string>());
  c.strategy = join_strategy_from_string(j.at("strategy").get<std::string>());
  c.normalize = j.at("normalize").get<bool>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

}  // namespace

json checkpoint_to_json(const Checkpoint& ckpt) {
  json out = {{"format", "dgnn-checkpoint"},
              {"version", kCheckpointVersion},
              {"labels", {{"mean", ckpt.labels.mean}, {"std", ckpt.labels.stddev}}}};
  if (const auto* mpnn = std::get_if<MpnnModel>(&ckpt.model)) {
    out["kind"] = "mpnn";
    out["config"] = config_to_json(mpnn->config());
    if (mpnn->normalizer().fitted()) {
      out["normalizer"] = {{"mean", vec_to_json(mpnn->normalizer().mean())},
                           {"std", vec_to_json(mpnn->normalizer().stddev())}};
    } else {
      out["normalizer"] = nullptr;
    }
    out["params"] = params_to_json(mpnn->params());
  } else {
    const auto& mlp = std::get<MlpModel>(ckpt.model);
    out["kind"] = "mlp";
    out["config"] = {{"hidden", mlp.config().hidden}, {"seed", mlp.config().seed}};
    out["normalizer"] = nullptr;
    out["params"] = params_to_json(mlp.params());
  }
  return out;
}

Checkpoint checkpoint_from_json(const json& j) {
  try {
    if (j.at("format").get<std::string>() != "dgnn-checkpoint") throw std::invalid_argument("not a dgnn checkpoint");
    const int version = j.at("version").get<int>();
    if (version != kCheckpointVersion) {
      throw std::invalid_argument("unsupported checkpoint version " + std::to_string(version));
    }
    const LabelStats labels{j.at("labels").at("mean").get<double>(), j.at("labels").at("std").get<double>()};
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "mpnn") {
      MpnnModel model(config_from_json(j.at("config")));
      params_from_json(model.params(), j.at("params"));
      if (!j.at("normalizer").is_null()) {
        model.set_normalizer(FeatureNormalizer(vec_from_json(j["normalizer"].at("mean")),
                                               vec_from_json(j["normalizer"].at("std"))));
      }
      return Checkpoint{std::move(model), labels};
    }
    if (kind == "mlp") {
      MlpConfig cfg;
      cfg.hidden = j.at("config").at("hidden").get<std::vector<Index>>();
      cfg.seed = j.at("config").at("seed").get<std::uint64_t>();
      MlpModel model(cfg);
      params_from_json(model.params(), j.at("params"));
      return Checkpoint{std::move(model), labels};
    }
    throw std::invalid_argument("unknown checkpoint kind '" + kind + "'");
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << checkpoint_to_json(ckpt).dump() << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  try {
    return checkpoint_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

}  // namespace dgnn
