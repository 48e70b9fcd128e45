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

#include "dgnn/molgraph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <set>
#include <stdexcept>
#include <utility>

#include "dgnn/random.hpp"

namespace dgnn {
namespace {

constexpr std::array<std::string_view, kNumElements> kSymbols = {"H", "C", "N", "O", "F", "Cl", "Br", "I"};

[[noreturn]] void invalid(const std::string& what) { throw std::invalid_argument("invalid molecule: " + what); }

bool is_heavy_halogen(Element e) { return e == Element::Cl || e == Element::Br || e == Element::I; }

}  // namespace

std::optional<Element> element_from_symbol(std::string_view s) {
  for (int i = 0; i < kNumElements; ++i) {
    if (kSymbols[i] == s) return static_cast<Element>(i);
  }
  return std::nullopt;
}

std::string_view symbol(Element e) { return kSymbols[static_cast<int>(e)]; }

std::string_view to_string(Role role) {
  switch (role) {
    case Role::kAlcohol:
      return "alcohol";
    case Role::kAcylHalide:
      return "acyl_halide";
    case Role::kUnknown:
      break;
  }
  return "unknown";
}

MolecularGraph::MolecularGraph(std::vector<Atom> atoms, std::vector<Bond> bonds, Role role, std::string name)
    : atoms_(std::move(atoms)), bonds_(std::move(bonds)), role_(role), name_(std::move(name)) {
  const int n = size();
  if (n == 0) invalid("no atoms");

  const bool coords = atoms_.front().coords.has_value();
  for (const Atom& a : atoms_) {
    if (a.coords.has_value() != coords) invalid("coordinates must be given for all atoms or none");
    if (a.coords) {
      for (double c : *a.coords) {
        if (!std::isfinite(c)) invalid("non-finite coordinate");
      }
    }
  }

  adjacency_.resize(n);
  std::set<std::pair<int, int>> seen;
  for (const Bond& b : bonds_) {
    if (b.i < 0 || b.j < 0 || b.i >= n || b.j >= n) {
      invalid("bond (" + std::to_string(b.i) + "," + std::to_string(b.j) + ") out of range");
    }
    if (b.i == b.j) invalid("self-bond on atom " + std::to_string(b.i));
    if (b.order < 1 || b.order > 3) invalid("bond order " + std::to_string(b.order));
    if (!seen.emplace(std::min(b.i, b.j), std::max(b.i, b.j)).second) {
      invalid("duplicate bond (" + std::to_string(b.i) + "," + std::to_string(b.j) + ")");
    }
    adjacency_[b.i].emplace_back(b.j, b.order);
    adjacency_[b.j].emplace_back(b.i, b.order);
  }

  const auto hops = hop_distances(0);
  if (std::any_of(hops.begin(), hops.end(), [](int h) { return h < 0; })) invalid("graph is not connected");
}

std::vector<int> MolecularGraph::hop_distances(int atom) const {
  std::vector<int> dist(atoms_.size(), -1);
  std::deque<int> queue{atom};
  dist[atom] = 0;
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop_front();
    for (const auto& [v, order] : adjacency_[u]) {
      if (dist[v] < 0) {
        dist[v] = dist[u] + 1;
        queue.push_back(v);
      }
    }
  }
  return dist;
}

MolecularGraph relabeled(const MolecularGraph& g, std::span<const int> new_index) {
  const int n = g.size();
  if (static_cast<int>(new_index.size()) != n) throw std::invalid_argument("relabeled: permutation size");
  std::vector<Atom> atoms(n);
  std::vector<bool> used(n, false);
  for (int i = 0; i < n; ++i) {
    const int k = new_index[i];
    if (k < 0 || k >= n || used[k]) throw std::invalid_argument("relabeled: not a permutation");
    used[k] = true;
    atoms[k] = g.atoms()[i];
  }
  std::vector<Bond> bonds;
  bonds.reserve(g.bonds().size());
  for (const Bond& b : g.bonds()) bonds.push_back({new_index[b.i], new_index[b.j], b.order});
  return MolecularGraph(std::move(atoms), std::move(bonds), g.role(), g.name());
}

nlohmann::json to_json(const MolecularGraph& g) {
  nlohmann::json atoms = nlohmann::json::array();
  for (const Atom& a : g.atoms()) {
    nlohmann::json xyz = nullptr;
    if (a.coords) xyz = {(*a.coords)[0], (*a.coords)[1], (*a.coords)[2]};
    atoms.push_back({{"el", std::string(symbol(a.element))}, {"q", a.formal_charge}, {"xyz", std::move(xyz)}});
  }
  nlohmann::json bonds = nlohmann::json::array();
  for (const Bond& b : g.bonds()) bonds.push_back({b.i, b.j, b.order});
  nlohmann::json out = {{"atoms", std::move(atoms)}, {"bonds", std::move(bonds)}};
  if (g.role() != Role::kUnknown) out["role"] = std::string(to_string(g.role()));
  if (!g.name().empty()) out["name"] = g.name();
  return out;
}

MolecularGraph graph_from_json(const nlohmann::json& j) {
  try {
    std::vector<Atom> atoms;
    for (const auto& ja : j.at("atoms")) {
      const std::string el = ja.at("el").get<std::string>();
      const auto element = element_from_symbol(el);
      if (!element) invalid("unknown element '" + el + "'");
      Atom a;
      a.element = *element;
      a.formal_charge = ja.value("q", 0);
      if (ja.contains("xyz") && !ja["xyz"].is_null()) {
        const auto& xyz = ja["xyz"];
        if (xyz.size() != 3) invalid("xyz needs three components");
        a.coords = std::array<double, 3>{xyz[0].get<double>(), xyz[1].get<double>(), xyz[2].get<double>()};
      }
      atoms.push_back(a);
    }
    std::vector<Bond> bonds;
    for (const auto& jb : j.at("bonds")) {
      if (jb.size() != 3) invalid("bond entries are [i, j, order]");
      bonds.push_back({jb[0].get<int>(), jb[1].get<int>(), jb[2].get<int>()});
    }
    Role role = Role::kUnknown;
    if (j.contains("role")) {
      const std::string r = j["role"].get<std::string>();
      if (r == "alcohol") {
        role = Role::kAlcohol;
      } else if (r == "acyl_halide") {
        role = Role::kAcylHalide;
      } else if (r != "unknown") {
        invalid("unknown role '" + r + "'");
      }
    }
    return MolecularGraph(std::move(atoms), std::move(bonds), role, j.value("name", std::string{}));
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("malformed graph JSON: ") + e.what());
  }
}

MolecularGraph load_graph_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  try {
    return graph_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

std::string canonical_key(const MolecularGraph& g) {
  const int n = g.size();
  std::vector<std::uint64_t> label(n);
  for (int v = 0; v < n; ++v) {
    const Atom& a = g.atoms()[v];
    label[v] = Fnv1a().u64(static_cast<std::uint64_t>(a.element)).i64(a.formal_charge).u64(g.degree(v)).digest();
  }
  std::vector<std::uint64_t> next(n);
  for (int round = 0; round < n; ++round) {
    for (int v = 0; v < n; ++v) {
      std::vector<std::pair<int, std::uint64_t>> env;
      for (const auto& [w, order] : g.neighbors(v)) env.emplace_back(order, label[w]);
      std::sort(env.begin(), env.end());
      Fnv1a h;
      h.u64(label[v]);
      for (const auto& [order, l] : env) h.u64(order).u64(l);
      next[v] = h.digest();
    }
    label.swap(next);
  }
  std::sort(label.begin(), label.end());
  Fnv1a h;
  h.u64(n).u64(g.bonds().size());
  for (auto l : label) h.u64(l);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h.digest()));
  return buf;
}

bool has_hydroxyl(const MolecularGraph& g) {
  for (int v = 0; v < g.size(); ++v) {
    if (g.atoms()[v].element != Element::O) continue;
    for (const auto& [w, order] : g.neighbors(v)) {
      if (order == 1 && g.atoms()[w].element == Element::H) return true;
    }
  }
  return false;
}

std::optional<Element> acyl_halogen(const MolecularGraph& g) {
  for (int v = 0; v < g.size(); ++v) {
    if (g.atoms()[v].element != Element::C) continue;
    bool carbonyl = false;
    std::optional<Element> halogen;
    for (const auto& [w, order] : g.neighbors(v)) {
      const Element e = g.atoms()[w].element;
      if (e == Element::O && order == 2) carbonyl = true;
      if (is_heavy_halogen(e) && order == 1 && !halogen) halogen = e;
    }
    if (carbonyl && halogen) return halogen;
  }
  return std::nullopt;
}

Matrix featurize(const MolecularGraph& g) {
  Matrix x = Matrix::Zero(g.size(), kNodeFeatureDim);
  for (int v = 0; v < g.size(); ++v) {
    const Atom& a = g.atoms()[v];
    x(v, static_cast<int>(a.element)) = 1.0;
    x(v, kChargeSlot) = a.formal_charge;
    const int deg = g.degree(v);
    if (deg >= 1 && deg <= 4) x(v, kDegreeSlot + deg - 1) = 1.0;
  }
  return x;
}

std::string_view to_string(JoinStrategy s) {
  switch (s) {
    case JoinStrategy::kDisjoint:
      return "dg";
    case JoinStrategy::kFullyConnected:
      return "fc";
    case JoinStrategy::kGlobalNode:
      return "gn";
  }
  return "?";
}

JoinStrategy join_strategy_from_string(std::string_view s) {
  if (s == "dg" || s == "DG") return JoinStrategy::kDisjoint;
  if (s == "fc" || s == "FC") return JoinStrategy::kFullyConnected;
  if (s == "gn" || s == "GN") return JoinStrategy::kGlobalNode;
  throw std::invalid_argument("unknown join strategy '" + std::string(s) + "'");
}

Matrix JoinedGraph::edge_features() const {
  Matrix f = Matrix::Zero(static_cast<Index>(edges.size()), kEdgeFeatureDim);
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const Edge& e = edges[k];
    const auto r = static_cast<Index>(k);
    if (e.kind == EdgeKind::kBond) {
      f(r, e.bond_order - 1) = 1.0;
    } else {
      f(r, 3) = 1.0;
    }
    f(r, 4 + static_cast<int>(e.kind)) = 1.0;
    f(r, 7) = e.distance;
  }
  return f;
}

namespace {

// Intra-molecule distance of a pair: Euclidean with coordinates, otherwise
// the inverse hop count (bonded pairs get 1, far pairs approach 0).
class PairDistance {
 public:
  explicit PairDistance(const MolecularGraph& g) : g_(g) {
    if (!g.has_coords()) {
      hops_.reserve(g.size());
      for (int v = 0; v < g.size(); ++v) hops_.push_back(g.hop_distances(v));
    }
  }

  double operator()(int u, int v) const {
    if (g_.has_coords()) {
      const auto& a = *g_.atoms()[u].coords;
      const auto& b = *g_.atoms()[v].coords;
      return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) + (a[2] - b[2]) * (a[2] - b[2]));
    }
    return 1.0 / hops_[u][v];
  }

 private:
  const MolecularGraph& g_;
  std::vector<std::vector<int>> hops_;
};

void push_both(std::vector<Edge>& edges, Index u, Index v, EdgeKind kind, int order, double distance) {
  edges.push_back({u, v, kind, order, distance});
  edges.push_back({v, u, kind, order, distance});
}

void push_bonds(std::vector<Edge>& edges, const MolecularGraph& g, Index offset) {
  PairDistance dist(g);
  for (const Bond& b : g.bonds()) push_both(edges, offset + b.i, offset + b.j, EdgeKind::kBond, b.order, dist(b.i, b.j));
}

}  // namespace

JoinedGraph join(const MolecularGraph& first, const MolecularGraph& second, JoinStrategy strategy) {
  JoinedGraph out;
  out.strategy = strategy;
  out.boundary = first.size();
  out.num_atoms = first.size() + second.size();
  const Index n = out.num_atoms + (strategy == JoinStrategy::kGlobalNode ? 1 : 0);

  out.node_features = Matrix::Zero(n, kNodeFeatureDim);
  out.node_features.topRows(first.size()) = featurize(first);
  out.node_features.middleRows(first.size(), second.size()) = featurize(second);

  switch (strategy) {
    case JoinStrategy::kDisjoint:
      push_bonds(out.edges, first, 0);
      push_bonds(out.edges, second, out.boundary);
      break;
    case JoinStrategy::kGlobalNode: {
      push_bonds(out.edges, first, 0);
      push_bonds(out.edges, second, out.boundary);
      const Index g = out.num_atoms;
      out.global_node = g;
      for (Index v = 0; v < out.num_atoms; ++v) push_both(out.edges, v, g, EdgeKind::kGlobal, 0, 0.0);
      break;
    }
    case JoinStrategy::kFullyConnected: {
      // order[u][v] for bonded pairs within either molecule, else 0
      std::vector<std::vector<int>> order(n, std::vector<int>(n, 0));
      for (const Bond& b : first.bonds()) order[b.i][b.j] = order[b.j][b.i] = b.order;
      for (const Bond& b : second.bonds()) {
        order[out.boundary + b.i][out.boundary + b.j] = order[out.boundary + b.j][out.boundary + b.i] = b.order;
      }
      PairDistance d1(first), d2(second);
      auto same_molecule_distance = [&](Index u, Index v) -> std::optional<double> {
        if (u < out.boundary && v < out.boundary) return d1(static_cast<int>(u), static_cast<int>(v));
        if (u >= out.boundary && v >= out.boundary) {
          return d2(static_cast<int>(u - out.boundary), static_cast<int>(v - out.boundary));
        }
        return std::nullopt;
      };
      for (Index u = 0; u < n; ++u) {
        for (Index v = u + 1; v < n; ++v) {
          const double dist = same_molecule_distance(u, v).value_or(0.0);
          if (order[u][v] > 0) {
            push_both(out.edges, u, v, EdgeKind::kBond, order[u][v], dist);
          } else {
            push_both(out.edges, u, v, EdgeKind::kVirtual, 0, dist);
          }
        }
      }
      break;
    }
  }
  return out;
}

FeatureNormalizer::FeatureNormalizer(Eigen::RowVectorXd mean, Eigen::RowVectorXd stddev)
    : mean_(std::move(mean)), stddev_(std::move(stddev)) {
  if (mean_.size() != stddev_.size()) throw std::invalid_argument("normalizer mean/std size mismatch");
}

FeatureNormalizer FeatureNormalizer::fit(std::span<const Matrix> training_blocks) {
  Index cols = -1;
  Index rows = 0;
  for (const Matrix& m : training_blocks) {
    if (cols >= 0 && m.cols() != cols) throw std::invalid_argument("normalizer: feature widths differ");
    cols = m.cols();
    rows += m.rows();
  }
  if (rows == 0) throw std::invalid_argument("normalizer: no training nodes");
  Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(cols);
  for (const Matrix& m : training_blocks) mean += m.colwise().sum();
  mean /= static_cast<double>(rows);
  Eigen::RowVectorXd var = Eigen::RowVectorXd::Zero(cols);
  for (const Matrix& m : training_blocks) var += (m.rowwise() - mean).array().square().matrix().colwise().sum();
  var /= static_cast<double>(rows);
  return FeatureNormalizer(std::move(mean), var.cwiseSqrt());
}

Matrix FeatureNormalizer::apply(const Matrix& features) const {
  if (!fitted()) throw std::logic_error("feature normalizer applied before fit");
  if (features.cols() != mean_.size()) throw std::invalid_argument("normalizer: feature width mismatch");
  Matrix out = features;
  for (Index c = 0; c < out.cols(); ++c) {
    if (stddev_[c] < kMinStd) continue;
    out.col(c) = (out.col(c).array() - mean_[c]) / stddev_[c];
  }
  for (Index r = 0; r < out.rows(); ++r) {
    const double norm = out.row(r).norm();
    if (norm > 0.0) out.row(r) /= norm;
  }
  return out;
}

}  // namespace dgnn
