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

#include <gtest/gtest.h>

#include <filesystem>
#include <numeric>
#include <set>
#include <tuple>

#include "fixtures.hpp"
#include "gradcheck.hpp"

namespace dgnn {
namespace {

using fixtures::atom;

MolecularGraph ethanol() {
  using E = Element;
  // C C O H(O) H H H H H
  return MolecularGraph({atom(E::C), atom(E::C), atom(E::O), atom(E::H), atom(E::H), atom(E::H), atom(E::H),
                         atom(E::H), atom(E::H)},
                        {{0, 1, 1}, {1, 2, 1}, {2, 3, 1}, {0, 4, 1}, {0, 5, 1}, {0, 6, 1}, {1, 7, 1}, {1, 8, 1}});
}

MolecularGraph dimethyl_ether() {
  using E = Element;
  // C O C H H H H H H
  return MolecularGraph({atom(E::C), atom(E::O), atom(E::C), atom(E::H), atom(E::H), atom(E::H), atom(E::H),
                         atom(E::H), atom(E::H)},
                        {{0, 1, 1}, {1, 2, 1}, {0, 3, 1}, {0, 4, 1}, {0, 5, 1}, {2, 6, 1}, {2, 7, 1}, {2, 8, 1}});
}

// Upper bound on the identifier count from a brute-force enumeration: one
// per distinct atom invariant, plus one per distinct non-empty bond
// neighbourhood (bonds touching atoms within r−1 hops) over r = 1..radius.
std::size_t environment_bound(const MolecularGraph& g, int radius) {
  std::set<std::tuple<int, int, int>> invariants;
  for (int v = 0; v < g.size(); ++v) {
    invariants.insert({static_cast<int>(g.atoms()[v].element), g.atoms()[v].formal_charge, g.degree(v)});
  }
  std::set<std::set<std::size_t>> envs;
  for (int v = 0; v < g.size(); ++v) {
    const auto hops = g.hop_distances(v);
    for (int r = 1; r <= radius; ++r) {
      std::set<std::size_t> bonds;
      for (std::size_t k = 0; k < g.bonds().size(); ++k) {
        const auto& b = g.bonds()[k];
        if (hops[b.i] <= r - 1 || hops[b.j] <= r - 1) bonds.insert(k);
      }
      if (!bonds.empty()) envs.insert(bonds);
    }
  }
  return invariants.size() + envs.size();
}

std::vector<MolecularGraph> whole_library() {
  std::vector<MolecularGraph> out;
  for (const char* sub : {"/alcohols", "/acyl_halides"}) {
    for (const auto& e : std::filesystem::directory_iterator(fixtures::library_dir() + sub)) {
      out.push_back(load_graph_file(e.path().string()));
    }
  }
  return out;
}

TEST(Fingerprint, SingleAtomSetsOneBit) {
  const MolecularGraph g({atom(Element::C)}, {});
  EXPECT_EQ(morgan_fingerprint(g).count(), 1u);
  EXPECT_EQ(environment_identifiers(g).size(), 1u);
}

TEST(Fingerprint, InvariantUnderRelabeling) {
  Rng rng(1);
  for (const auto& g : whole_library()) {
    std::vector<int> perm(g.size());
    std::iota(perm.begin(), perm.end(), 0);
    for (int t = 0; t < 3; ++t) {
      rng.shuffle(perm);
      EXPECT_EQ(morgan_fingerprint(relabeled(g, perm)), morgan_fingerprint(g)) << g.name();
    }
  }
}

TEST(Fingerprint, EthanolDiffersFromDimethylEther) {
  EXPECT_NE(morgan_fingerprint(ethanol()), morgan_fingerprint(dimethyl_ether()));
}

TEST(Fingerprint, LibraryMoleculesAreDistinct) {
  const auto lib = whole_library();
  std::set<std::string> seen;
  for (const auto& g : lib) seen.insert(morgan_fingerprint(g).to_string());
  EXPECT_EQ(seen.size(), lib.size());
}

TEST(Fingerprint, PopcountBounds) {
  for (const auto& g : whole_library()) {
    const auto ids = environment_identifiers(g);
    const auto fp = morgan_fingerprint(g);
    EXPECT_LE(fp.count(), ids.size()) << g.name();
    EXPECT_LE(ids.size(), environment_bound(g, kFingerprintRadius)) << g.name();
    EXPECT_LE(ids.size(), static_cast<std::size_t>(g.size() * (kFingerprintRadius + 1))) << g.name();
  }
}

TEST(Fingerprint, RadiusGrowsMonotonically) {
  const auto g = ethanol();
  std::size_t prev = 0;
  for (int r = 0; r <= 4; ++r) {
    const auto n = environment_identifiers(g, r).size();
    EXPECT_GE(n, prev);
    prev = n;
  }
  EXPECT_THROW(environment_identifiers(g, -1), std::invalid_argument);
}

TEST(Fingerprint, PinnedIdentifierForMethane) {
  // Regression pin for the hash encoding: a lone uncharged carbon.
  const MolecularGraph g({atom(Element::C)}, {});
  const auto ids = environment_identifiers(g, 0);
  ASSERT_EQ(ids.size(), 1u);
  EXPECT_EQ(ids[0], Fnv1a().u64(0).u64(static_cast<std::uint64_t>(Element::C)).i64(0).u64(0).digest());
}

ReactionSample pair_sample() {
  return ReactionSample{0, fixtures::methanol(), fixtures::acetyl_chloride(), 0.0, 0.0, Split::kNone};
}

TEST(Mlp, Shapes) {
  MlpModel model;
  const auto& p = model.params();
  EXPECT_EQ(p[p.find("mlp.0.W")].value.rows(), 2048);
  EXPECT_EQ(p[p.find("mlp.0.W")].value.cols(), 512);
  EXPECT_EQ(p[p.find("mlp.1.W")].value.cols(), 128);
  EXPECT_EQ(p[p.find("mlp.2.W")].value.cols(), 1);
  const auto x = model.encode(pair_sample());
  EXPECT_EQ(x.size(), 2048);
  EXPECT_EQ(x.head(1024).sum(), static_cast<double>(morgan_fingerprint(fixtures::methanol()).count()));
}

TEST(Mlp, ZeroWeightsGiveOutputBias) {
  MlpModel model(MlpConfig{{8, 4}, 0});
  for (auto& p : model.params().entries()) p.value.setZero();
  model.params()[model.params().find("mlp.2.b")].value(0, 0) = 1.25;
  EXPECT_EQ(model.predict(pair_sample()), 1.25);
}

TEST(Mlp, GradientMatchesFiniteDifferences) {
  MlpModel model(MlpConfig{{6, 5}, 3});
  Rng rng(3);
  for (auto& p : model.params().entries()) p.value = testing::random_matrix(p.value.rows(), p.value.cols(), rng, 0.3);
  const auto x1 = model.encode(pair_sample());
  const auto x2 = model.encode(ReactionSample{0, ethanol(), fixtures::acyl_halide(Element::Br, "acetyl bromide"), 0, 0, Split::kNone});
  std::vector<Matrix> values;
  for (const auto& p : model.params().entries()) values.push_back(p.value);
  const testing::ScalarFn f = [&](Tape& tape, const std::vector<Var>& v) {
    const MlpModel::Input* batch[2] = {&x1, &x2};
    Matrix target(2, 1);
    target << 0.5, -0.25;
    return ad::squared_error(model.forward(tape, v, batch), target);
  };
  EXPECT_LT(testing::gradient_relative_error(f, values), 1e-4);
}

TEST(Mlp, RoleSwapChangesPrediction) {
  MlpModel model;
  const auto s = pair_sample();
  const ReactionSample swapped{0, s.halide, s.alcohol, 0.0, 0.0, Split::kNone};
  EXPECT_NE(model.predict(s), model.predict(swapped));
}

TEST(Mlp, DeterministicInit) {
  EXPECT_EQ(MlpModel(MlpConfig{{8}, 4}).params(), MlpModel(MlpConfig{{8}, 4}).params());
  EXPECT_FALSE(MlpModel(MlpConfig{{8}, 4}).params() == MlpModel(MlpConfig{{8}, 5}).params());
}

}  // namespace
}  // namespace dgnn
