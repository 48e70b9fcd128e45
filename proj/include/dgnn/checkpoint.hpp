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

#ifndef DGNN_CHECKPOINT_HPP_
#define DGNN_CHECKPOINT_HPP_

// Checkpoints are versioned JSON documents:
//
//   {"format": "dgnn-checkpoint", "version": 1, "kind": "mpnn" | "mlp",
//    "config": {...}, "normalizer": {"mean": [...], "std": [...]} | null,
//    "labels": {"mean": m, "std": s},
//    "params": [{"name": "...", "shape": [rows, cols], "data": [...]}, ...]}
//
// Doubles are written in shortest round-trip form, so save → load restores
// every parameter bit for bit.

#include <string>
#include <variant>

#include "json.hpp"

#include "dgnn/baseline.hpp"
#include "dgnn/dataset.hpp"
#include "dgnn/mpnn.hpp"

namespace dgnn {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  std::variant<MpnnModel, MlpModel> model;
  LabelStats labels;
};

nlohmann::json checkpoint_to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const nlohmann::json& j);

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace dgnn

#endif  // DGNN_CHECKPOINT_HPP_
