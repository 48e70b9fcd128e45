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

#include "dgnn/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>

#include "dgnn/random.hpp"

namespace dgnn {

std::string_view to_string(Split s) {
  switch (s) {
    case Split::kTrain:
      return "train";
    case Split::kVal:
      return "val";
    case Split::kTest:
      return "test";
    case Split::kNone:
      break;
  }
  return "none";
}

Split split_from_string(std::string_view s) {
  if (s == "train") return Split::kTrain;
  if (s == "val") return Split::kVal;
  if (s == "test") return Split::kTest;
  if (s == "none" || s.empty()) return Split::kNone;
  throw std::invalid_argument("unknown split '" + std::string(s) + "'");
}

std::string_view to_string(SplitProtocol p) {
  switch (p) {
    case SplitProtocol::kRandom:
      return "random";
    case SplitProtocol::kLeaveAlcoholOut:
      return "leave-alcohol-out";
    case SplitProtocol::kNone:
      break;
  }
  return "none";
}

SplitProtocol split_protocol_from_string(std::string_view s) {
  if (s == "random") return SplitProtocol::kRandom;
  if (s == "leave-alcohol-out" || s == "leave_alcohol_out") return SplitProtocol::kLeaveAlcoholOut;
  if (s == "none" || s.empty()) return SplitProtocol::kNone;
  throw std::invalid_argument("unknown split protocol '" + std::string(s) + "'");
}

std::vector<std::size_t> DatasetManifest::indices(Split s) const {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    if (samples[k].split == s) out.push_back(k);
  }
  return out;
}

std::vector<ReactionSample> DatasetManifest::subset(Split s) const {
  std::vector<ReactionSample> out;
  for (const auto& sample : samples) {
    if (sample.split == s) out.push_back(sample);
  }
  return out;
}

// ---------------------------------------------------------------------------

std::optional<std::string> alcohol_violation(const MolecularGraph& g) {
  if (!has_hydroxyl(g)) return "alcohol has no O-H group";
  if (acyl_halogen(g)) return "alcohol contains an acyl halide group";
  return std::nullopt;
}

std::optional<std::string> halide_violation(const MolecularGraph& g) {
  if (!acyl_halogen(g)) return "acyl halide has no C(=O)-X group with X in {Cl, Br, I}";
  if (has_hydroxyl(g)) return "acyl halide contains an O-H group";
  return std::nullopt;
}

namespace {

std::vector<MolecularGraph> load_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw std::runtime_error("missing library directory " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<MolecularGraph> out;
  out.reserve(files.size());
  for (const auto& f : files) out.push_back(load_graph_file(f.string()));
  return out;
}

}  // namespace

MoleculeLibrary load_library(const std::string& dir) {
  const std::filesystem::path root(dir);
  return MoleculeLibrary{load_dir(root / "alcohols"), load_dir(root / "acyl_halides")};
}

Pairing enumerate_pairs(const std::vector<MolecularGraph>& alcohols, const std::vector<MolecularGraph>& halides,
                        const std::function<bool(const MolecularGraph&, const MolecularGraph&)>& allow) {
  Pairing out;
  std::vector<bool> alcohol_ok(alcohols.size()), halide_ok(halides.size());
  for (std::size_t a = 0; a < alcohols.size(); ++a) {
    auto why = alcohol_violation(alcohols[a]);
    alcohol_ok[a] = !why;
    if (why) out.rejected.push_back({Role::kAlcohol, a, *why});
  }
  for (std::size_t h = 0; h < halides.size(); ++h) {
    auto why = halide_violation(halides[h]);
    halide_ok[h] = !why;
    if (why) out.rejected.push_back({Role::kAcylHalide, h, *why});
  }
  for (std::size_t a = 0; a < alcohols.size(); ++a) {
    if (!alcohol_ok[a]) continue;
    for (std::size_t h = 0; h < halides.size(); ++h) {
      if (!halide_ok[h]) continue;
      if (allow && !allow(alcohols[a], halides[h])) continue;
      out.pairs.emplace_back(a, h);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

GraphStats raw_stats(const MolecularGraph& g) {
  GraphStats s;
  for (int v = 0; v < g.size(); ++v) {
    const Element e = g.atoms()[v].element;
    if (e == Element::H) continue;
    ++s.heavy_atoms;
    if (e != Element::C) ++s.hetero_atoms;
    int heavy_neighbours = 0;
    for (const auto& [w, order] : g.neighbors(v)) {
      if (g.atoms()[w].element != Element::H) ++heavy_neighbours;
    }
    if (heavy_neighbours >= 3) ++s.branch_points;
  }
  for (const Bond& b : g.bonds()) s.unsaturation += b.order - 1;
  s.rings = static_cast<int>(g.bonds().size()) - g.size() + 1;
  return s;
}

}  // namespace

GraphStats alcohol_stats(const MolecularGraph& g) {
  GraphStats s = raw_stats(g);
  s.hetero_atoms -= 1;  // hydroxyl oxygen
  return s;
}

GraphStats halide_stats(const MolecularGraph& g) {
  GraphStats s = raw_stats(g);
  s.hetero_atoms -= 2;  // carbonyl oxygen and the halogen
  s.unsaturation -= 1;  // C=O
  return s;
}

double halogen_mean(Element halogen) {
  switch (halogen) {
    case Element::Cl:
      return SyntheticLabelConfig::kMeanCl;
    case Element::Br:
      return SyntheticLabelConfig::kMeanBr;
    case Element::I:
      return SyntheticLabelConfig::kMeanI;
    default:
      break;
  }
  throw std::invalid_argument("no reaction-energy component for halogen " + std::string(symbol(halogen)));
}

double alcohol_term(const MolecularGraph& alcohol) {
  const GraphStats s = alcohol_stats(alcohol);
  return 0.6 * (s.heavy_atoms - 4) + 0.9 * s.rings - 0.7 * s.branch_points + 0.8 * s.hetero_atoms +
         0.5 * s.unsaturation - 0.3;
}

double halide_term(const MolecularGraph& halide) {
  const GraphStats s = halide_stats(halide);
  return 0.5 * (s.heavy_atoms - 5) + 0.8 * s.rings - 0.6 * s.branch_points + 0.7 * s.hetero_atoms +
         0.6 * s.unsaturation;
}

double cross_term(const MolecularGraph& alcohol, const MolecularGraph& halide) {
  const GraphStats a = alcohol_stats(alcohol);
  const GraphStats h = halide_stats(halide);
  // substituent sizes: R1 of R1-OH and R2 of R2-C(=O)X
  const double r1 = a.heavy_atoms - 1;
  const double r2 = h.heavy_atoms - 3;
  return 0.5 * (r1 - 3.0) * (r2 - 1.5) + 0.8 * (a.hetero_atoms - 0.5) * (h.unsaturation - 0.3);
}

double synthetic_label(const MolecularGraph& alcohol, const MolecularGraph& halide, const SyntheticLabelConfig& cfg) {
  const auto halogen = acyl_halogen(halide);
  if (!halogen) throw std::invalid_argument("synthetic_label: halide has no acyl halide group");
  double y = halogen_mean(*halogen) + alcohol_term(alcohol) + halide_term(halide) + cfg.gamma * cross_term(alcohol, halide);
  if (cfg.noise_scale > 0.0) {
    // skew-normal draw with shape δ, shifted to zero mean
    constexpr double kDelta = 0.6;
    const std::uint64_t key = Fnv1a().str(canonical_key(alcohol)).str(canonical_key(halide)).digest();
    Rng rng(derive_seed(cfg.seed, "label-noise", key));
    const double z1 = rng.normal();
    const double z2 = rng.normal();
    const double skewed = kDelta * std::abs(z1) + std::sqrt(1.0 - kDelta * kDelta) * z2 -
                          kDelta * std::sqrt(2.0 / std::numbers::pi);
    y += cfg.noise_scale * skewed;
  }
  return y;
}

DatasetManifest generate(const MoleculeLibrary& library, const SyntheticLabelConfig& cfg) {
  const Pairing pairing = enumerate_pairs(library.alcohols, library.halides);
  DatasetManifest m;
  m.samples.reserve(pairing.pairs.size());
  std::uint64_t id = 0;
  for (const auto& [a, h] : pairing.pairs) {
    const auto& alcohol = library.alcohols[a];
    const auto& halide = library.halides[h];
    m.samples.push_back(ReactionSample{.id = id++,
                                       .alcohol = alcohol,
                                       .halide = halide,
                                       .label = synthetic_label(alcohol, halide, cfg),
                                       .label_norm = 0.0,
                                       .split = Split::kNone});
  }
  return m;
}

// ---------------------------------------------------------------------------

SplitFractions parse_fractions(std::string_view text) {
  std::vector<double> parts;
  std::stringstream ss{std::string(text)};
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0) throw std::invalid_argument("bad split fraction '" + item + "'");
    parts.push_back(v);
  }
  if (parts.size() != 3) throw std::invalid_argument("expected three split fractions, got '" + std::string(text) + "'");
  return {parts[0], parts[1], parts[2]};
}

namespace {

void check_fractions(const SplitFractions& f) {
  if (f.train < 0 || f.val < 0 || f.test < 0 || std::abs(f.train + f.val + f.test - 1.0) > 1e-9) {
    throw std::invalid_argument("split fractions must be non-negative and sum to 1");
  }
}

// floor for val and test, remainder to train
std::array<std::size_t, 3> split_sizes(std::size_t n, const SplitFractions& f) {
  const auto nval = static_cast<std::size_t>(std::floor(f.val * static_cast<double>(n) + 1e-9));
  const auto ntest = static_cast<std::size_t>(std::floor(f.test * static_cast<double>(n) + 1e-9));
  return {n - nval - ntest, nval, ntest};
}

}  // namespace

DatasetManifest split(DatasetManifest manifest, SplitProtocol protocol, SplitFractions fractions, std::uint64_t seed) {
  check_fractions(fractions);
  Rng rng(derive_seed(seed, "split"));
  const std::size_t n = manifest.samples.size();

  if (protocol == SplitProtocol::kRandom) {
    std::vector<std::size_t> order(n);
    for (std::size_t k = 0; k < n; ++k) order[k] = k;
    rng.shuffle(order);
    const auto sizes = split_sizes(n, fractions);
    for (std::size_t k = 0; k < n; ++k) {
      Split s = Split::kTrain;
      if (k >= sizes[0]) s = k < sizes[0] + sizes[1] ? Split::kVal : Split::kTest;
      manifest.samples[order[k]].split = s;
    }
  } else if (protocol == SplitProtocol::kLeaveAlcoholOut) {
    // groups in first-appearance order, then shuffled
    std::vector<std::string> keys(n);
    std::vector<std::string> groups;
    std::set<std::string> seen;
    for (std::size_t k = 0; k < n; ++k) {
      keys[k] = canonical_key(manifest.samples[k].alcohol);
      if (seen.insert(keys[k]).second) groups.push_back(keys[k]);
    }
    rng.shuffle(groups);
    const auto sizes = split_sizes(groups.size(), fractions);
    for (std::size_t s = 0; s < 3; ++s) {
      const double f = s == 0 ? fractions.train : (s == 1 ? fractions.val : fractions.test);
      if (f > 0.0 && sizes[s] == 0) {
        throw std::invalid_argument("leave-alcohol-out split infeasible: " + std::to_string(groups.size()) +
                                    " alcohols cannot populate every split");
      }
    }
    std::map<std::string, Split> assign;
    for (std::size_t k = 0; k < groups.size(); ++k) {
      Split s = Split::kTrain;
      if (k >= sizes[0]) s = k < sizes[0] + sizes[1] ? Split::kVal : Split::kTest;
      assign[groups[k]] = s;
    }
    std::set<Element> train_halogens;
    for (std::size_t k = 0; k < n; ++k) {
      auto& sample = manifest.samples[k];
      sample.split = assign.at(keys[k]);
      if (sample.split == Split::kTrain) {
        if (auto x = acyl_halogen(sample.halide)) train_halogens.insert(*x);
      }
    }
    for (Element x : {Element::Cl, Element::Br, Element::I}) {
      if (!train_halogens.contains(x)) {
        throw std::invalid_argument("leave-alcohol-out split infeasible: no " + std::string(symbol(x)) +
                                    " acyl halide in the training split");
      }
    }
  } else {
    throw std::invalid_argument("split protocol must be random or leave-alcohol-out");
  }
  manifest.protocol = protocol;
  return normalize_labels(std::move(manifest));
}

DatasetManifest normalize_labels(DatasetManifest manifest) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& s : manifest.samples) {
    if (s.split != Split::kTrain) continue;
    sum += s.label;
    ++count;
  }
  if (count == 0) throw std::invalid_argument("normalize_labels: no training samples");
  const double mean = sum / static_cast<double>(count);
  double sq = 0.0;
  for (const auto& s : manifest.samples) {
    if (s.split == Split::kTrain) sq += (s.label - mean) * (s.label - mean);
  }
  const double stddev = std::sqrt(sq / static_cast<double>(count));
  if (stddev < 1e-12) throw std::invalid_argument("normalize_labels: training labels are constant");
  manifest.label_stats = LabelStats{mean, stddev};
  for (auto& s : manifest.samples) s.label_norm = manifest.label_stats->normalize(s.label);
  return manifest;
}

// ---------------------------------------------------------------------------

void save_manifest(const DatasetManifest& m, std::ostream& out) {
  for (const auto& s : m.samples) {
    nlohmann::json line = {{"id", s.id},
                           {"alcohol", to_json(s.alcohol)},
                           {"halide", to_json(s.halide)},
                           {"label", s.label},
                           {"split", std::string(to_string(s.split))}};
    if (m.protocol != SplitProtocol::kNone) line["protocol"] = std::string(to_string(m.protocol));
    out << line.dump() << '\n';
  }
}

void save_manifest(const DatasetManifest& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  save_manifest(m, out);
  if (!out) throw std::runtime_error("write failed: " + path);
}

DatasetManifest load_manifest(std::istream& in) {
  DatasetManifest m;
  std::string line;
  std::size_t lineno = 0;
  std::set<std::uint64_t> ids;
  bool any_train = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      const std::uint64_t id = j.contains("id") ? j["id"].get<std::uint64_t>() : m.samples.size();
      if (!ids.insert(id).second) throw std::invalid_argument("duplicate sample id " + std::to_string(id));
      ReactionSample s{.id = id,
                       .alcohol = graph_from_json(j.at("alcohol")),
                       .halide = graph_from_json(j.at("halide")),
                       .label = j.at("label").get<double>(),
                       .label_norm = 0.0,
                       .split = split_from_string(j.value("split", std::string("none")))};
      any_train = any_train || s.split == Split::kTrain;
      if (j.contains("protocol")) m.protocol = split_protocol_from_string(j["protocol"].get<std::string>());
      m.samples.push_back(std::move(s));
    } catch (const std::exception& e) {
      throw std::invalid_argument("manifest line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (any_train) return normalize_labels(std::move(m));
  return m;
}

DatasetManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return load_manifest(in);
}

}  // namespace dgnn
