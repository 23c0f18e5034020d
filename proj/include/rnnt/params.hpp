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

#ifndef RNNT_PARAMS_HPP
#define RNNT_PARAMS_HPP

#include <functional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "rnnt/autodiff.hpp"
#include "rnnt/common.hpp"

namespace rnnt {

using ad::Matrix;

// Named parameter collection with deterministic (insertion) iteration order.
class ParamSet {
 public:
  void add(const std::string& name, Matrix value);
  bool has(std::string_view name) const;
  Matrix& at(std::string_view name);
  const Matrix& at(std::string_view name) const;

  const std::vector<std::string>& names() const { return names_; }
  size_t size() const { return names_.size(); }
  bool empty() const { return names_.empty(); }

  // Total number of scalar values across all tensors.
  size_t value_count() const;

  // True iff names and shapes match (in any order).
  bool shape_compatible(const ParamSet& other, std::string* mismatch = nullptr) const;

  // Subset of parameters whose name starts with prefix (order preserved).
  ParamSet subset(std::string_view prefix) const;
  // All parameters whose name does not start with prefix.
  ParamSet without(std::string_view prefix) const;
  // Copies entries from other, overwriting same-name entries.
  void update_from(const ParamSet& other);

  // Hash over names, shapes and raw value bytes; order-sensitive.
  uint64_t content_hash() const;

  // Global L2 distance over the concatenation of all values.
  double l2_distance(const ParamSet& other) const;
  double l2_norm() const;

 private:
  int index(std::string_view name) const;
  std::vector<std::string> names_;
  std::vector<Matrix> values_;
  std::unordered_map<std::string, int> lookup_;
};

// Updates each value by -lr * grad. Throws on any name or shape mismatch,
// listing the offending names. The decay schedule lr(t) = lr0 * gamma^t is
// the caller's job.
void sgd_step(ParamSet& params, const ParamSet& grads, double lr);

// Tape leaves for a ParamSet, so model code can look up parameters by name.
class BoundParams {
 public:
  BoundParams() = default;
  ad::Expr at(std::string_view name) const;
  bool has(std::string_view name) const;
  void add(const std::string& name, ad::Expr e);
  const std::vector<std::pair<std::string, ad::Expr>>& items() const { return items_; }

 private:
  std::vector<std::pair<std::string, ad::Expr>> items_;
  std::unordered_map<std::string, int> lookup_;
};

// Places every parameter on the tape as a leaf.
BoundParams bind(ad::Tape& tape, const ParamSet& params);

// Reads the gradients of bound leaves back into a ParamSet (zero for leaves
// backward never touched). Restricted to names starting with any of the
// given prefixes; empty prefix list means all.
ParamSet collect_grads(const ad::Tape& tape, const BoundParams& bound,
                       const std::vector<std::string>& prefixes = {});

// Convenience entry point matching the module contract: evaluate loss_fn on
// tape-bound params, run backward, return shape-compatible gradients.
ParamSet gradient(const ParamSet& params,
                  const std::function<ad::Expr(ad::Tape&, const BoundParams&)>& loss_fn);

}  // namespace rnnt

#endif  // RNNT_PARAMS_HPP
