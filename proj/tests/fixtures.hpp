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

#ifndef DGNN_TESTS_FIXTURES_HPP_
#define DGNN_TESTS_FIXTURES_HPP_

// Small hand-built molecules shared by the tests.

#include <string>
#include <vector>

#include "dgnn/molgraph.hpp"

namespace dgnn::fixtures {

inline Atom atom(Element e, int q = 0) { return {e, q, std::nullopt}; }

// C, O, H(O), H, H, H
inline MolecularGraph methanol() {
  using E = Element;
  return MolecularGraph({atom(E::C), atom(E::O), atom(E::H), atom(E::H), atom(E::H), atom(E::H)},
                        {{0, 1, 1}, {1, 2, 1}, {0, 3, 1}, {0, 4, 1}, {0, 5, 1}}, Role::kAlcohol, "methanol");
}

// CH3-C(=O)-X with explicit hydrogens.
inline MolecularGraph acyl_halide(Element x, const std::string& name) {
  using E = Element;
  return MolecularGraph({atom(E::C), atom(E::C), atom(E::O), atom(x), atom(E::H), atom(E::H), atom(E::H)},
                        {{0, 1, 1}, {1, 2, 2}, {1, 3, 1}, {0, 4, 1}, {0, 5, 1}, {0, 6, 1}}, Role::kAcylHalide,
                        name);
}

inline MolecularGraph acetyl_chloride() { return acyl_halide(Element::Cl, "acetyl chloride"); }

// C-C-O-H with hydrogens omitted from carbon; small enough for brute force.
inline MolecularGraph ethanol_heavy() {
  using E = Element;
  return MolecularGraph({atom(E::C), atom(E::C), atom(E::O)}, {{0, 1, 1}, {1, 2, 1}}, Role::kAlcohol, "ethanol");
}

inline MolecularGraph acetyl_chloride_heavy() {
  using E = Element;
  return MolecularGraph({atom(E::C), atom(E::C), atom(E::O), atom(E::Cl)}, {{0, 1, 1}, {1, 2, 2}, {1, 3, 1}},
                        Role::kAcylHalide, "acetyl chloride");
}

// Linear carbon chain of n atoms.
inline MolecularGraph chain(int n) {
  std::vector<Atom> atoms(n, atom(Element::C));
  std::vector<Bond> bonds;
  for (int k = 0; k + 1 < n; ++k) bonds.push_back({k, k + 1, 1});
  return MolecularGraph(std::move(atoms), std::move(bonds));
}

inline std::string library_dir() { return DGNN_SOURCE_DIR "/data/library"; }

// A few real library molecules with coordinates.
inline std::vector<MolecularGraph> library_sample() {
  const std::string dir = library_dir();
  return {load_graph_file(dir + "/alcohols/00_methanol.json"), load_graph_file(dir + "/alcohols/07_tert-butanol.json"),
          load_graph_file(dir + "/alcohols/19_phenol.json"),
          load_graph_file(dir + "/acyl_halides/05_methoxyacetyl-chloride.json"),
          load_graph_file(dir + "/acyl_halides/16_acryloyl-iodide.json")};
}

}  // namespace dgnn::fixtures

#endif  // DGNN_TESTS_FIXTURES_HPP_
