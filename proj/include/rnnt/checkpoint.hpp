// Copyright 2026 The rnnt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef RNNT_CHECKPOINT_HPP
#define RNNT_CHECKPOINT_HPP

#include <string>

#include "json.hpp"
#include "rnnt/params.hpp"

namespace rnnt {

using Json = nlohmann::json;

// Container layout: one compact JSON header line (format version, parameter
// names, shapes, dtype, byte offsets into the payload), '\n', then the raw
// little-endian values. f64 payloads round-trip bit-exactly; f32 is a
// storage option for smaller checkpoint files.
struct Checkpoint {
  ParamSet params;
  Json meta;  // model config, vocab reference, stage tag, ...
  std::string dtype = "f64";
};

void save_checkpoint(const std::string& path, const ParamSet& params, const Json& meta,
                     const std::string& dtype = "f64");
Checkpoint load_checkpoint(const std::string& path);

}  // namespace rnnt

#endif  // RNNT_CHECKPOINT_HPP
