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

#include "dgnn/mpnn.hpp"

#include <array>
#include <stdexcept>
#include <string>

namespace dgnn {

std::string_view to_string(Readout r) {
  switch (r) {
    case Readout::kGatedSum:
      return "gated";
    case Readout::kGlobalNode:
      return "gr";
    case Readout::kConcat:
      return "cr";
  }
  return "?";
}

Readout readout_from_string(std::string_view s) {
  if (s == "gated" || s == "gated_sum") return Readout::kGatedSum;
  if (s == "gr" || s == "GR" || s == "global") return Readout::kGlobalNode;
  if (s == "cr" || s == "CR" || s == "concat") return Readout::kConcat;
  throw std::invalid_argument("unknown readout '" + std::string(s) + "'");
}

void ModelConfig::validate() const {
  if (hidden_dim < 1) throw std::invalid_argument("hidden_dim must be >= 1");
  if (steps < 1) throw std::invalid_argument("steps must be >= 1");
  if (net_width < 1) throw std::invalid_argument("net_width must be >= 1");
  if (readout == Readout::kGlobalNode && strategy != JoinStrategy::kGlobalNode) {
    throw std::invalid_argument("global-node readout requires the global-node join strategy");
  }
}

// ---------------------------------------------------------------------------

Var embed_initial(const Var& x, const Var& w, const Var& b) { return ad::dense(x, w, b, ad::Activation::kNone); }

Var edge_operators(const Var& edge_features, const BoundNet& edge_net) { return edge_net(edge_features); }

Var message_step(const Var& h, const Var& operators, std::span<const Index> src, std::span<const Index> dst,
                 const ad::GruParams<double>& gru) {
  if (src.size() != dst.size() || static_cast<Index>(src.size()) != operators.rows()) {
    throw ad::DimensionError("message_step: edge lists and operators disagree on the edge count");
  }
  Var sender = ad::gather_rows(h, src);
  Var messages = ad::rowwise_matvec(operators, sender);
  Var m = ad::segment_sum(messages, dst, h.rows());
  return ad::gru_cell(h, m, gru);
}

Var readout_gated_sum(const Var& h_last, const Var& h_first, std::span<const Index> segment, Index num_segments,
                      const BoundNet& i_net, const BoundNet& j_net) {
  Var gate = ad::sigmoid(i_net(ad::concat_cols({h_last, h_first})));
  return ad::segment_sum(ad::mul(gate, j_net(h_last)), segment, num_segments);
}

Var readout_global_node(const Var& h_last, const Var& h_first, std::span<const Index> global_rows,
                        const BoundNet& i_net, const BoundNet& j_net) {
  Var hg_last = ad::gather_rows(h_last, global_rows);
  Var hg_first = ad::gather_rows(h_first, global_rows);
  Var gate = ad::sigmoid(i_net(ad::concat_cols({hg_last, hg_first})));
  return ad::mul(gate, j_net(hg_last));
}

Var readout_concat(std::span<const Var> h_steps, std::span<const Index> segment, Index num_segments,
                   const BoundNet& i_net, const BoundNet& j_net) {
  if (h_steps.empty()) throw std::invalid_argument("readout_concat: no step embeddings");
  Var gate = ad::sigmoid(i_net(ad::concat_cols(h_steps)));
  return ad::segment_sum(ad::mul(gate, j_net(h_steps.back())), segment, num_segments);
}

// ---------------------------------------------------------------------------

MpnnModel::MpnnModel(ModelConfig config) : config_(config) {
  config_.validate();
  Rng rng(derive_seed(config_.seed, "mpnn-init"));
  const Index d = config_.hidden_dim;
  const Index w = config_.net_width;

  slots_.embed_w = params_.add("embed.W", glorot(kNodeFeatureDim, d, rng));
  slots_.embed_b = params_.add("embed.b", Matrix::Zero(1, d));

  const std::array<Index, 4> edge_widths{kEdgeFeatureDim, w, w, d * d};
  slots_.edge_net = DenseStack::create(params_, "edge", edge_widths, rng);

  const char* gate_names[3] = {"z", "r", "h"};
  for (int g = 0; g < 3; ++g) {
    const std::string base = std::string("gru.") + gate_names[g];
    slots_.gru[3 * g + 0] = params_.add(base + ".W", glorot(d, d, rng));
    slots_.gru[3 * g + 1] = params_.add(base + ".U", glorot(d, d, rng));
    slots_.gru[3 * g + 2] = params_.add(base + ".b", Matrix::Zero(1, d));
  }

  Index gate_in = 2 * d;
  if (config_.readout == Readout::kConcat) gate_in = (config_.steps + 1) * d;
  const std::array<Index, 4> i_widths{gate_in, w, w, d};
  const std::array<Index, 4> j_widths{d, w, w, d};
  slots_.i_net = DenseStack::create(params_, "readout_i", i_widths, rng);
  slots_.j_net = DenseStack::create(params_, "readout_j", j_widths, rng);

  const Index head_in = config_.strategy == JoinStrategy::kDisjoint ? 2 * d : d;
  slots_.head_w = params_.add("head.W", glorot(head_in, 1, rng));
  slots_.head_b = params_.add("head.b", Matrix::Zero(1, 1));
}

ad::GruParams<double> MpnnModel::bind_gru(std::span<const Var> bound) const {
  const auto& s = slots_.gru;
  return {bound[s[0]], bound[s[1]], bound[s[2]], bound[s[3]], bound[s[4]],
          bound[s[5]], bound[s[6]], bound[s[7]], bound[s[8]]};
}

void MpnnModel::fit_inputs(std::span<const ReactionSample> training) {
  if (!config_.normalize) return;
  std::vector<Matrix> blocks;
  blocks.reserve(training.size());
  for (const auto& s : training) blocks.push_back(join(s.alcohol, s.halide, config_.strategy).node_features);
  normalizer_ = FeatureNormalizer::fit(blocks);
}

GraphInput MpnnModel::encode(const JoinedGraph& g) const {
  if (g.strategy != config_.strategy) throw std::invalid_argument("joined graph strategy differs from the model's");
  GraphInput in;
  in.node_features = config_.normalize ? normalizer_.apply(g.node_features) : g.node_features;
  in.edge_features = g.edge_features();
  in.src.reserve(g.edges.size());
  in.dst.reserve(g.edges.size());
  for (const Edge& e : g.edges) {
    in.src.push_back(e.src);
    in.dst.push_back(e.dst);
  }
  in.part.assign(static_cast<std::size_t>(g.num_nodes()), 0);
  if (g.strategy == JoinStrategy::kDisjoint) {
    in.num_parts = 2;
    for (Index v = g.boundary; v < g.num_nodes(); ++v) in.part[v] = 1;
  }
  in.global_node = g.global_node;
  return in;
}

GraphInput MpnnModel::encode(const ReactionSample& s) const {
  return encode(join(s.alcohol, s.halide, config_.strategy));
}

Var MpnnModel::forward(Tape& tape, std::span<const Var> bound, std::span<const GraphInput* const> batch) const {
  const Index b = static_cast<Index>(batch.size());
  const Index d = config_.hidden_dim;
  if (b == 0) throw std::invalid_argument("forward: empty batch");
  const Index parts = batch.front()->num_parts;

  Index nodes = 0, edges = 0;
  for (const GraphInput* in : batch) {
    if (in->num_parts != parts) throw std::invalid_argument("forward: mixed readout layouts in one batch");
    nodes += in->num_nodes();
    edges += static_cast<Index>(in->src.size());
  }

  // disjoint union of the batch
  Matrix x(nodes, kNodeFeatureDim);
  Matrix ef(edges, kEdgeFeatureDim);
  std::vector<Index> src, dst, segment, global_rows;
  src.reserve(edges);
  dst.reserve(edges);
  segment.reserve(nodes);
  Index node_at = 0, edge_at = 0;
  for (Index k = 0; k < b; ++k) {
    const GraphInput& in = *batch[k];
    x.middleRows(node_at, in.num_nodes()) = in.node_features;
    ef.middleRows(edge_at, static_cast<Index>(in.src.size())) = in.edge_features;
    for (std::size_t e = 0; e < in.src.size(); ++e) {
      src.push_back(node_at + in.src[e]);
      dst.push_back(node_at + in.dst[e]);
    }
    for (Index p : in.part) segment.push_back(k * parts + p);
    if (config_.readout == Readout::kGlobalNode) {
      if (!in.global_node) throw std::invalid_argument("global-node readout on a graph without a global node");
      global_rows.push_back(node_at + *in.global_node);
    }
    node_at += in.num_nodes();
    edge_at += static_cast<Index>(in.src.size());
  }

  const BoundNet edge_net{&slots_.edge_net, bound};
  const BoundNet i_net{&slots_.i_net, bound};
  const BoundNet j_net{&slots_.j_net, bound};
  const auto gru = bind_gru(bound);

  Var h0 = embed_initial(tape.constant(std::move(x)), bound[slots_.embed_w], bound[slots_.embed_b]);
  Var ops = edge_operators(tape.constant(std::move(ef)), edge_net);
  std::vector<Var> steps{h0};
  Var h = h0;
  for (int t = 0; t < config_.steps; ++t) {
    h = message_step(h, ops, src, dst, gru);
    if (config_.readout == Readout::kConcat) steps.push_back(h);
  }

  Var pooled;
  switch (config_.readout) {
    case Readout::kGatedSum:
      pooled = readout_gated_sum(h, h0, segment, b * parts, i_net, j_net);
      break;
    case Readout::kGlobalNode:
      pooled = readout_global_node(h, h0, global_rows, i_net, j_net);
      break;
    case Readout::kConcat:
      pooled = readout_concat(steps, segment, b * parts, i_net, j_net);
      break;
  }
  if (parts > 1) pooled = ad::reshape(pooled, b, parts * d);
  return ad::dense(pooled, bound[slots_.head_w], bound[slots_.head_b], ad::Activation::kNone);
}

double MpnnModel::predict(const GraphInput& input) const {
  Tape tape;
  const auto bound = params_.bind(tape, false);
  const GraphInput* batch[1] = {&input};
  return forward(tape, bound, batch).value()(0, 0);
}

double MpnnModel::predict(const ReactionSample& s) const { return predict(encode(s)); }

}  // namespace dgnn
