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

#ifndef DGNN_MPNN_HPP_
#define DGNN_MPNN_HPP_

// Message-passing network over a joined reactant graph.
//
//   h⁰      = x·W_emb + b_emb
//   m_v     = Σ_{w→v} A(e_wv)·h_w          A(e) = reshape_d×d(edge_net(e)), row-major
//   h_v'    = GRU(h_v, m_v)                  repeated T times, weights tied
//   y_graph = readout(h⁰ … hᵀ)
//   ŷ       = y_graph·W_head + b_head
//
// Readouts (σ logistic, i and j are 3-layer ReLU nets):
//   gated sum  Σ_v σ(i([h_vᵀ ‖ h_v⁰])) ⊙ j(h_vᵀ)
//   global     σ(i([h_gᵀ ‖ h_g⁰])) ⊙ j(h_gᵀ)           g = global node
//   concat     Σ_v σ(i([h_v⁰ ‖ … ‖ h_vᵀ])) ⊙ j(h_vᵀ)
// With the disjoint strategy each molecule is read out on its own and the two
// embeddings are concatenated (first molecule first) before the head.

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "dgnn/dataset.hpp"
#include "dgnn/molgraph.hpp"
#include "dgnn/params.hpp"

namespace dgnn {

enum class Readout { kGatedSum, kGlobalNode, kConcat };

std::string_view to_string(Readout r);
Readout readout_from_string(std::string_view s);

struct ModelConfig {
  int hidden_dim = 64;  // d
  int steps = 3;        // T
  int net_width = 128;  // hidden width of the edge and readout nets
  Readout readout = Readout::kGatedSum;
  JoinStrategy strategy = JoinStrategy::kGlobalNode;
  bool normalize = false;  // row/column normalization of node features
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument for d < 1, T < 1, net_width < 1, or the
  /// global readout without a global node.
  void validate() const;

  bool operator==(const ModelConfig&) const = default;
};

/// One joined sample, ready for the network.
struct GraphInput {
  Matrix node_features;  // n × 13 (normalized if the model normalizes)
  Matrix edge_features;  // E × 8
  std::vector<Index> src;
  std::vector<Index> dst;
  std::vector<Index> part;  // readout group per node: 0, or 1 for the second molecule under DG
  Index num_parts = 1;
  std::optional<Index> global_node;

  Index num_nodes() const { return node_features.rows(); }
};

// ---------------------------------------------------------------------------
// Building blocks. `net` arguments are dense stacks already bound to a tape.

struct BoundNet {
  const DenseStack* stack;
  std::span<const Var> bound;

  Var operator()(const Var& x) const { return (*stack)(x, bound); }
};

/// h⁰ = x·W + b, no activation.
Var embed_initial(const Var& x, const Var& w, const Var& b);

/// Per-edge d×d operators, flattened row-major: E × d².
Var edge_operators(const Var& edge_features, const BoundNet& edge_net);

/// One round of messages followed by the GRU update. Isolated nodes get a
/// zero message.
Var message_step(const Var& h, const Var& operators, std::span<const Index> src, std::span<const Index> dst,
                 const ad::GruParams<double>& gru);

/// Gated sum per segment: row s is Σ_{v: segment[v]=s} σ(i([hᵀ‖h⁰]))⊙j(hᵀ).
Var readout_gated_sum(const Var& h_last, const Var& h_first, std::span<const Index> segment, Index num_segments,
                      const BoundNet& i_net, const BoundNet& j_net);

/// Gate evaluated only at the listed global-node rows, one output row each.
Var readout_global_node(const Var& h_last, const Var& h_first, std::span<const Index> global_rows,
                        const BoundNet& i_net, const BoundNet& j_net);

/// Gate on the concatenation of all step embeddings h⁰…hᵀ.
Var readout_concat(std::span<const Var> h_steps, std::span<const Index> segment, Index num_segments,
                   const BoundNet& i_net, const BoundNet& j_net);

// ---------------------------------------------------------------------------

class MpnnModel {
 public:
  using Input = GraphInput;

  explicit MpnnModel(ModelConfig config);

  const ModelConfig& config() const { return config_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  const FeatureNormalizer& normalizer() const { return normalizer_; }
  void set_normalizer(FeatureNormalizer n) { normalizer_ = std::move(n); }

  /// Fits the node-feature normalizer on the training samples' joined graphs.
  /// No-op when the config does not normalize.
  void fit_inputs(std::span<const ReactionSample> training);

  GraphInput encode(const JoinedGraph& g) const;
  GraphInput encode(const ReactionSample& s) const;

  /// Batched forward pass; returns a B×1 column of normalized predictions.
  Var forward(Tape& tape, std::span<const Var> bound, std::span<const GraphInput* const> batch) const;

  /// Single-sample prediction in normalized label units.
  double predict(const ReactionSample& s) const;
  double predict(const GraphInput& input) const;

  // parameter slots, exposed for tests and the reference implementation
  struct Slots {
    std::size_t embed_w, embed_b;
    DenseStack edge_net;
    std::size_t gru[9];  // w_z u_z b_z w_r u_r b_r w_h u_h b_h
    DenseStack i_net, j_net;
    std::size_t head_w, head_b;
  };
  const Slots& slots() const { return slots_; }

  ad::GruParams<double> bind_gru(std::span<const Var> bound) const;

 private:
  ModelConfig config_;
  ParamStore params_;
  Slots slots_;
  FeatureNormalizer normalizer_;
};

}  // namespace dgnn

#endif  // DGNN_MPNN_HPP_
