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

#ifndef DGNN_MOLGRAPH_HPP_
#define DGNN_MOLGRAPH_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"

namespace dgnn {

using Index = Eigen::Index;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Element : std::uint8_t { H, C, N, O, F, Cl, Br, I };

inline constexpr int kNumElements = 8;

std::optional<Element> element_from_symbol(std::string_view symbol);
std::string_view symbol(Element e);

struct Atom {
  Element element = Element::C;
  int formal_charge = 0;
  std::optional<std::array<double, 3>> coords;  // Å

  bool operator==(const Atom&) const = default;
};

struct Bond {
  int i = 0;
  int j = 0;
  int order = 1;

  bool operator==(const Bond&) const = default;
};

enum class Role { kAlcohol, kAcylHalide, kUnknown };

std::string_view to_string(Role role);

/// One molecule: atoms plus undirected bonds. Construction validates the
/// graph (indices, bond orders, duplicates, connectivity, coordinates) and
/// throws std::invalid_argument when any check fails.
class MolecularGraph {
 public:
  MolecularGraph(std::vector<Atom> atoms, std::vector<Bond> bonds, Role role = Role::kUnknown,
                 std::string name = {});

  const std::vector<Atom>& atoms() const { return atoms_; }
  const std::vector<Bond>& bonds() const { return bonds_; }
  Role role() const { return role_; }
  const std::string& name() const { return name_; }
  int size() const { return static_cast<int>(atoms_.size()); }
  bool has_coords() const { return !atoms_.empty() && atoms_.front().coords.has_value(); }

  int degree(int atom) const { return static_cast<int>(adjacency_[atom].size()); }

  /// (neighbor, bond order) pairs of `atom`, in bond-list order.
  const std::vector<std::pair<int, int>>& neighbors(int atom) const { return adjacency_[atom]; }

  /// Hop distances from `atom` to every atom of this molecule.
  std::vector<int> hop_distances(int atom) const;

  bool operator==(const MolecularGraph& other) const {
    return atoms_ == other.atoms_ && bonds_ == other.bonds_ && role_ == other.role_ && name_ == other.name_;
  }

 private:
  std::vector<Atom> atoms_;
  std::vector<Bond> bonds_;
  Role role_;
  std::string name_;
  std::vector<std::vector<std::pair<int, int>>> adjacency_;
};

/// Same molecule with atom i renumbered to new_index[i].
MolecularGraph relabeled(const MolecularGraph& g, std::span<const int> new_index);

// Graph JSON: {"atoms":[{"el":"C","q":0,"xyz":[x,y,z]|null}...],
//              "bonds":[[i,j,order]...], "role":"alcohol"|"acyl_halide"}
nlohmann::json to_json(const MolecularGraph& g);
MolecularGraph graph_from_json(const nlohmann::json& j);
MolecularGraph load_graph_file(const std::string& path);

/// Isomorphism-invariant key (Weisfeiler-Lehman refinement hashed with
/// FNV-1a). Used as the molecule identity in leave-one-group-out splits.
std::string canonical_key(const MolecularGraph& g);

/// True if some oxygen carries a hydrogen (R-OH).
bool has_hydroxyl(const MolecularGraph& g);

/// Halogen of the first C(=O)-X group, X in {Cl, Br, I}; nullopt if none.
std::optional<Element> acyl_halogen(const MolecularGraph& g);

// ---------------------------------------------------------------------------
// Featurization

/// Node feature layout: one-hot element (8) | formal charge (1) |
/// one-hot degree 1..4 (4). Degree 0 and degree > 4 leave the block empty.
inline constexpr int kNodeFeatureDim = 13;
inline constexpr int kChargeSlot = kNumElements;
inline constexpr int kDegreeSlot = kNumElements + 1;

Matrix featurize(const MolecularGraph& g);

enum class EdgeKind { kBond, kVirtual, kGlobal };

/// Edge feature layout: bond order one-hot 1..3 (3) | virtual class (1) |
/// edge kind one-hot bond/virtual/global (3) | distance (1).
inline constexpr int kEdgeFeatureDim = 8;

enum class JoinStrategy { kDisjoint, kFullyConnected, kGlobalNode };

std::string_view to_string(JoinStrategy s);
JoinStrategy join_strategy_from_string(std::string_view s);

/// Directed edge src -> dst.
struct Edge {
  Index src = 0;
  Index dst = 0;
  EdgeKind kind = EdgeKind::kBond;
  int bond_order = 0;     // 0 for virtual and global edges
  double distance = 0.0;  // Å with coordinates, else inverse hop count; 0 across molecules

  bool operator==(const Edge&) const = default;
};

/// Two molecules merged into one graph. Nodes are ordered: first molecule,
/// second molecule, then the global node when the strategy adds one.
/// Every undirected connection is stored as two directed edges.
struct JoinedGraph {
  JoinStrategy strategy = JoinStrategy::kDisjoint;
  Matrix node_features;  // n × kNodeFeatureDim, unnormalized
  std::vector<Edge> edges;
  Index boundary = 0;  // nodes [0, boundary) come from the first molecule
  Index num_atoms = 0;
  std::optional<Index> global_node;

  Index num_nodes() const { return node_features.rows(); }
  Matrix edge_features() const;  // edges.size() × kEdgeFeatureDim

  bool operator==(const JoinedGraph& other) const {
    return strategy == other.strategy && node_features == other.node_features && edges == other.edges &&
           boundary == other.boundary && num_atoms == other.num_atoms && global_node == other.global_node;
  }
};

JoinedGraph join(const MolecularGraph& first, const MolecularGraph& second, JoinStrategy strategy);

/// Column-wise z-score with statistics from training nodes, then row-wise
/// L2 normalization. Columns with std < 1e-8 pass through the column step
/// untouched; all-zero rows stay zero.
class FeatureNormalizer {
 public:
  FeatureNormalizer() = default;
  FeatureNormalizer(Eigen::RowVectorXd mean, Eigen::RowVectorXd stddev);

  static FeatureNormalizer fit(std::span<const Matrix> training_blocks);

  bool fitted() const { return mean_.size() > 0; }
  Matrix apply(const Matrix& features) const;

  const Eigen::RowVectorXd& mean() const { return mean_; }
  const Eigen::RowVectorXd& stddev() const { return stddev_; }

  static constexpr double kMinStd = 1e-8;

 private:
  Eigen::RowVectorXd mean_;
  Eigen::RowVectorXd stddev_;
};

}  // namespace dgnn

#endif  // DGNN_MOLGRAPH_HPP_
