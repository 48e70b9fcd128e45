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

#include "dgnn/params.hpp"

#include <cmath>
#include <stdexcept>

namespace dgnn {

std::size_t ParamStore::add(std::string name, Matrix init) {
  for (const auto& p : entries_) {
    if (p.name == name) throw std::invalid_argument("duplicate parameter '" + name + "'");
  }
  entries_.push_back({std::move(name), std::move(init)});
  return entries_.size() - 1;
}

std::size_t ParamStore::find(std::string_view name) const {
  for (std::size_t k = 0; k < entries_.size(); ++k) {
    if (entries_[k].name == name) return k;
  }
  throw std::out_of_range("no parameter named '" + std::string(name) + "'");
}

Index ParamStore::scalar_count() const {
  Index n = 0;
  for (const auto& p : entries_) n += p.value.size();
  return n;
}

std::vector<Var> ParamStore::bind(Tape& tape, bool trainable) const {
  std::vector<Var> out;
  out.reserve(entries_.size());
  for (const auto& p : entries_) out.push_back(trainable ? tape.variable(p.value) : tape.constant(p.value));
  return out;
}

std::vector<Matrix> ParamStore::zeros_like() const {
  std::vector<Matrix> out;
  out.reserve(entries_.size());
  for (const auto& p : entries_) out.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
  return out;
}

bool ParamStore::operator==(const ParamStore& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (std::size_t k = 0; k < entries_.size(); ++k) {
    const auto& a = entries_[k];
    const auto& b = other.entries_[k];
    if (a.name != b.name || a.value.rows() != b.value.rows() || a.value.cols() != b.value.cols() ||
        a.value != b.value) {
      return false;
    }
  }
  return true;
}

Matrix glorot(Index fan_in, Index fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Matrix w(fan_in, fan_out);
  for (Index i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-limit, limit);
  return w;
}

DenseStack DenseStack::create(ParamStore& store, const std::string& prefix, std::span<const Index> widths, Rng& rng) {
  if (widths.size() < 2) throw std::invalid_argument("dense stack needs at least two widths");
  DenseStack stack;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const std::string base = prefix + "." + std::to_string(l);
    const auto w = store.add(base + ".W", glorot(widths[l], widths[l + 1], rng));
    const auto b = store.add(base + ".b", Matrix::Zero(1, widths[l + 1]));
    stack.layers.emplace_back(w, b);
  }
  return stack;
}

Var DenseStack::operator()(const Var& x, std::span<const Var> bound) const {
  Var h = x;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto act = l + 1 < layers.size() ? ad::Activation::kRelu : ad::Activation::kNone;
    h = ad::dense(h, bound[layers[l].first], bound[layers[l].second], act);
  }
  return h;
}

}  // namespace dgnn
