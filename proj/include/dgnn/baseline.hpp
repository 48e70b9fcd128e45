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

#ifndef DGNN_BASELINE_HPP_
#define DGNN_BASELINE_HPP_

#include <bitset>
#include <cstdint>
#include <span>
#include <vector>

#include "dgnn/dataset.hpp"
#include "dgnn/molgraph.hpp"
#include "dgnn/params.hpp"

namespace dgnn {

inline constexpr int kFingerprintBits = 1024;
inline constexpr int kFingerprintRadius = 3;

using Fingerprint = std::bitset<kFingerprintBits>;

/// Circular (ECFP-style) identifiers of every atom environment up to
/// `radius`, after dropping environments that cover the same bond set as an
/// earlier one. Returned sorted.
std::vector<std::uint64_t> environment_identifiers(const MolecularGraph& g, int radius = kFingerprintRadius);

/// Identifiers folded into a 1024-bit vector by modulo. Hashing is FNV-1a,
/// so bits do not match RDKit's Morgan fingerprints.
Fingerprint morgan_fingerprint(const MolecularGraph& g, int radius = kFingerprintRadius);

struct MlpConfig {
  std::vector<Index> hidden = {512, 128};
  std::uint64_t seed = 0;

  bool operator==(const MlpConfig&) const = default;
};

/// MLP regressor on [fingerprint(alcohol) ‖ fingerprint(halide)]:
/// 2048 → hidden… → 1, ReLU between layers, linear output.
class MlpModel {
 public:
  using Input = Eigen::RowVectorXd;  // 1 × 2048, entries 0/1

  explicit MlpModel(MlpConfig config = {});

  const MlpConfig& config() const { return config_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }
  const DenseStack& stack() const { return stack_; }

  void fit_inputs(std::span<const ReactionSample>) {}
  Input encode(const ReactionSample& s) const;

  Var forward(Tape& tape, std::span<const Var> bound, std::span<const Input* const> batch) const;

  double predict(const ReactionSample& s) const;

 private:
  MlpConfig config_;
  ParamStore params_;
  DenseStack stack_;
};

}  // namespace dgnn

#endif  // DGNN_BASELINE_HPP_
