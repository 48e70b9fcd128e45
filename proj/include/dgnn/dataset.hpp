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

#ifndef DGNN_DATASET_HPP_
#define DGNN_DATASET_HPP_

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dgnn/molgraph.hpp"

namespace dgnn {

enum class Split { kNone, kTrain, kVal, kTest };
enum class SplitProtocol { kNone, kRandom, kLeaveAlcoholOut };

std::string_view to_string(Split s);
Split split_from_string(std::string_view s);
std::string_view to_string(SplitProtocol p);
SplitProtocol split_protocol_from_string(std::string_view s);

/// One alcohol / acyl-halide pair with its reaction energy.
struct ReactionSample {
  std::uint64_t id = 0;
  MolecularGraph alcohol;
  MolecularGraph halide;
  double label = 0.0;       // ΔE, kcal/mol
  double label_norm = 0.0;  // z-scored with training statistics
  Split split = Split::kNone;

  bool operator==(const ReactionSample&) const = default;
};

struct LabelStats {
  double mean = 0.0;
  double stddev = 1.0;  // population

  double normalize(double y) const { return (y - mean) / stddev; }
  double denormalize(double z) const { return z * stddev + mean; }
  bool operator==(const LabelStats&) const = default;
};

struct DatasetManifest {
  std::vector<ReactionSample> samples;
  SplitProtocol protocol = SplitProtocol::kNone;
  std::optional<LabelStats> label_stats;

  std::vector<std::size_t> indices(Split s) const;
  std::vector<ReactionSample> subset(Split s) const;

  bool operator==(const DatasetManifest&) const = default;
};

// ---------------------------------------------------------------------------
// Molecule library and pairing

/// Why a molecule cannot take its role, or nullopt if it can.
std::optional<std::string> alcohol_violation(const MolecularGraph& g);
std::optional<std::string> halide_violation(const MolecularGraph& g);

struct MoleculeLibrary {
  std::vector<MolecularGraph> alcohols;
  std::vector<MolecularGraph> halides;
};

/// Reads `<dir>/alcohols/*.json` and `<dir>/acyl_halides/*.json`, each
/// sorted by file name.
MoleculeLibrary load_library(const std::string& dir);

struct Rejection {
  Role role = Role::kUnknown;
  std::size_t index = 0;
  std::string reason;
};

struct Pairing {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (alcohol, halide) indices
  std::vector<Rejection> rejected;
};

/// Cartesian product of the valid alcohols and halides, alcohol-major.
/// Molecules violating their role are rejected with a reason; `allow`, if
/// given, filters individual pairs.
Pairing enumerate_pairs(const std::vector<MolecularGraph>& alcohols, const std::vector<MolecularGraph>& halides,
                        const std::function<bool(const MolecularGraph&, const MolecularGraph&)>& allow = {});

// ---------------------------------------------------------------------------
// Synthetic labels

/// Summary statistics the synthetic energy depends on.
struct GraphStats {
  int heavy_atoms = 0;
  int rings = 0;
  int branch_points = 0;  // heavy atoms with >= 3 heavy neighbours
  int hetero_atoms = 0;   // heavy non-carbon atoms outside the reacting group
  int unsaturation = 0;   // extra bond orders outside the reacting group
};

GraphStats alcohol_stats(const MolecularGraph& g);
GraphStats halide_stats(const MolecularGraph& g);

struct SyntheticLabelConfig {
  double gamma = 1.0;         // weight of the non-additive cross term
  double noise_scale = 0.15;  // kcal/mol; 0 disables noise
  std::uint64_t seed = 0;

  // Per-halogen component means, kcal/mol.
  static constexpr double kMeanCl = -12.0;
  static constexpr double kMeanBr = -8.0;
  static constexpr double kMeanI = -4.0;
};

double halogen_mean(Element halogen);

/// Alcohol-only contribution.
double alcohol_term(const MolecularGraph& alcohol);
/// Halide-only contribution.
double halide_term(const MolecularGraph& halide);
/// Non-additive coupling of the two molecules.
double cross_term(const MolecularGraph& alcohol, const MolecularGraph& halide);

/// ΔE = μ_X + alcohol_term + halide_term + γ·cross_term + skewed noise. The
/// noise stream is keyed by the two molecules' canonical keys, so a pair gets
/// the same label regardless of library order.
double synthetic_label(const MolecularGraph& alcohol, const MolecularGraph& halide, const SyntheticLabelConfig& cfg);

/// Every valid pair of the library, labeled by the synthetic oracle; ids are
/// 0..n-1 in enumeration order.
DatasetManifest generate(const MoleculeLibrary& library, const SyntheticLabelConfig& cfg);

// ---------------------------------------------------------------------------
// Splits and label normalization

struct SplitFractions {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};

SplitFractions parse_fractions(std::string_view text);  // "0.8,0.1,0.1"

/// Assigns every sample to train/val/test and refits label statistics.
/// random: sample-level shuffle; val and test get floor(f·n), train the rest.
/// leave_alcohol_out: the same rule over alcohol identities; throws if a
/// split would be empty or a halogen class is missing from train.
DatasetManifest split(DatasetManifest manifest, SplitProtocol protocol, SplitFractions fractions, std::uint64_t seed);

/// label_norm = (label − mean_train) / std_train, population std.
DatasetManifest normalize_labels(DatasetManifest manifest);

// ---------------------------------------------------------------------------
// JSONL manifest: one sample per line,
// {"id":…, "alcohol":<graph>, "halide":<graph>, "label":…, "split":…}

void save_manifest(const DatasetManifest& m, std::ostream& out);
void save_manifest(const DatasetManifest& m, const std::string& path);
DatasetManifest load_manifest(std::istream& in);
DatasetManifest load_manifest(const std::string& path);

}  // namespace dgnn

#endif  // DGNN_DATASET_HPP_
