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

#ifndef DGNN_PARAMS_HPP_
#define DGNN_PARAMS_HPP_

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dgnn/autodiff.hpp"
#include "dgnn/molgraph.hpp"
#include "dgnn/random.hpp"

namespace dgnn {

using Var = ad::Var<double>;
using Tape = ad::Tape<double>;

struct Parameter {
  std::string name;
  Matrix value;
};

/// Ordered, named parameter tensors of a model. The order is fixed at
/// construction and is the order used for binding, optimizer state and
/// checkpoints.
class ParamStore {
 public:
  std::size_t add(std::string name, Matrix init);

  std::size_t size() const { return entries_.size(); }
  Parameter& operator[](std::size_t k) { return entries_[k]; }
  const Parameter& operator[](std::size_t k) const { return entries_[k]; }
  std::span<Parameter> entries() { return entries_; }
  std::span<const Parameter> entries() const { return entries_; }

  std::size_t find(std::string_view name) const;  // throws std::out_of_range
  Index scalar_count() const;

  /// Puts every tensor on the tape, as variables or as constants.
  std::vector<Var> bind(Tape& tape, bool trainable) const;

  /// Tensors shaped like this store, filled with zeros.
  std::vector<Matrix> zeros_like() const;

  bool operator==(const ParamStore& other) const;

 private:
  std::vector<Parameter> entries_;
};

/// Glorot-uniform matrix.
Matrix glorot(Index fan_in, Index fan_out, Rng& rng);

/// Stack of dense layers in a ParamStore: ReLU after every layer except the
/// last, which is linear.
struct DenseStack {
  std::vector<std::pair<std::size_t, std::size_t>> layers;  // (W, b) slots

  static DenseStack create(ParamStore& store, const std::string& prefix, std::span<const Index> widths, Rng& rng);

  Var operator()(const Var& x, std::span<const Var> bound) const;
  Index in_width(const ParamStore& store) const { return store[layers.front().first].value.rows(); }
  Index out_width(const ParamStore& store) const { return store[layers.back().first].value.cols(); }
};

}  // namespace dgnn

#endif  // DGNN_PARAMS_HPP_
