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

#include "dgnn/baseline.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>
#include <tuple>

#include "dgnn/random.hpp"

namespace dgnn {

std::vector<std::uint64_t> environment_identifiers(const MolecularGraph& g, int radius) {
  if (radius < 0) throw std::invalid_argument("fingerprint radius must be >= 0");
  const int n = g.size();
  const std::size_t nbonds = g.bonds().size();

  // bond index of each (atom, neighbour slot)
  std::vector<std::vector<std::size_t>> incident(n);
  for (std::size_t k = 0; k < nbonds; ++k) {
    incident[g.bonds()[k].i].push_back(k);
    incident[g.bonds()[k].j].push_back(k);
  }

  std::vector<std::uint64_t> id(n);
  for (int v = 0; v < n; ++v) {
    const Atom& a = g.atoms()[v];
    id[v] = Fnv1a().u64(0).u64(static_cast<std::uint64_t>(a.element)).i64(a.formal_charge).u64(g.degree(v)).digest();
  }
  std::vector<std::uint64_t> out(id.begin(), id.end());

  using BondSet = std::vector<bool>;
  std::vector<BondSet> env(n, BondSet(nbonds, false));
  std::set<BondSet> seen{BondSet(nbonds, false)};

  for (int round = 1; round <= radius; ++round) {
    std::vector<std::uint64_t> next_id(n);
    std::vector<BondSet> next_env = env;
    for (int v = 0; v < n; ++v) {
      std::vector<std::pair<int, std::uint64_t>> nb;
      for (const auto& [w, order] : g.neighbors(v)) {
        nb.emplace_back(order, id[w]);
        for (std::size_t k = 0; k < nbonds; ++k) {
          if (env[w][k]) next_env[v][k] = true;
        }
      }
      for (std::size_t k : incident[v]) next_env[v][k] = true;
      std::sort(nb.begin(), nb.end());
      Fnv1a h;
      h.u64(static_cast<std::uint64_t>(round)).u64(id[v]);
      for (const auto& [order, nid] : nb) h.u64(static_cast<std::uint64_t>(order)).u64(nid);
      next_id[v] = h.digest();
    }
    // Among atoms sharing a bond set, the smallest identifier survives; the
    // outcome does not depend on atom numbering.
    std::vector<std::tuple<BondSet, std::uint64_t>> candidates;
    candidates.reserve(n);
    for (int v = 0; v < n; ++v) candidates.emplace_back(next_env[v], next_id[v]);
    std::sort(candidates.begin(), candidates.end());
    for (const auto& [bonds, ident] : candidates) {
      if (seen.insert(bonds).second) out.push_back(ident);
    }
    id.swap(next_id);
    env.swap(next_env);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Fingerprint morgan_fingerprint(const MolecularGraph& g, int radius) {
  Fingerprint fp;
  for (std::uint64_t ident : environment_identifiers(g, radius)) fp.set(ident % kFingerprintBits);
  return fp;
}

MlpModel::MlpModel(MlpConfig config) : config_(std::move(config)) {
  Rng rng(derive_seed(config_.seed, "mlp-init"));
  std::vector<Index> widths{2 * kFingerprintBits};
  widths.insert(widths.end(), config_.hidden.begin(), config_.hidden.end());
  widths.push_back(1);
  stack_ = DenseStack::create(params_, "mlp", widths, rng);
}

MlpModel::Input MlpModel::encode(const ReactionSample& s) const {
  const Fingerprint a = morgan_fingerprint(s.alcohol);
  const Fingerprint h = morgan_fingerprint(s.halide);
  Input x = Input::Zero(2 * kFingerprintBits);
  for (int k = 0; k < kFingerprintBits; ++k) {
    if (a[k]) x[k] = 1.0;
    if (h[k]) x[kFingerprintBits + k] = 1.0;
  }
  return x;
}

Var MlpModel::forward(Tape& tape, std::span<const Var> bound, std::span<const Input* const> batch) const {
  if (batch.empty()) throw std::invalid_argument("forward: empty batch");
  Matrix x(static_cast<Index>(batch.size()), 2 * kFingerprintBits);
  for (std::size_t k = 0; k < batch.size(); ++k) x.row(static_cast<Index>(k)) = *batch[k];
  return stack_(tape.constant(std::move(x)), bound);
}

double MlpModel::predict(const ReactionSample& s) const {
  Tape tape;
  const auto bound = params_.bind(tape, false);
  const Input x = encode(s);
  const Input* batch[1] = {&x};
  return forward(tape, bound, batch).value()(0, 0);
}

}  // namespace dgnn
