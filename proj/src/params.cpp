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

#include "rnnt/params.hpp"

#include <cmath>
#include <sstream>

namespace rnnt {

void ParamSet::add(const std::string& name, Matrix value) {
  if (lookup_.count(name)) throw Error("ParamSet::add: duplicate name '" + name + "'");
  lookup_[name] = static_cast<int>(names_.size());
  names_.push_back(name);
  values_.push_back(std::move(value));
}

int ParamSet::index(std::string_view name) const {
  auto it = lookup_.find(std::string(name));
  if (it == lookup_.end()) throw Error("ParamSet: unknown parameter '" + std::string(name) + "'");
  return it->second;
}

bool ParamSet::has(std::string_view name) const { return lookup_.count(std::string(name)) > 0; }

Matrix& ParamSet::at(std::string_view name) { return values_[index(name)]; }
const Matrix& ParamSet::at(std::string_view name) const { return values_[index(name)]; }

size_t ParamSet::value_count() const {
  size_t n = 0;
  for (const Matrix& m : values_) n += static_cast<size_t>(m.size());
  return n;
}

bool ParamSet::shape_compatible(const ParamSet& other, std::string* mismatch) const {
  std::ostringstream os;
  bool ok = true;
  for (const std::string& n : names_) {
    if (!other.has(n)) {
      os << " missing:" << n;
      ok = false;
    } else {
      const Matrix& a = at(n);
      const Matrix& b = other.at(n);
      if (a.rows() != b.rows() || a.cols() != b.cols()) {
        os << " shape:" << n;
        ok = false;
      }
    }
  }
  for (const std::string& n : other.names())
    if (!has(n)) {
      os << " extra:" << n;
      ok = false;
    }
  if (!ok && mismatch) *mismatch = os.str();
  return ok;
}

ParamSet ParamSet::subset(std::string_view prefix) const {
  ParamSet out;
  for (size_t i = 0; i < names_.size(); ++i)
    if (names_[i].rfind(prefix, 0) == 0) out.add(names_[i], values_[i]);
  return out;
}

ParamSet ParamSet::without(std::string_view prefix) const {
  ParamSet out;
  for (size_t i = 0; i < names_.size(); ++i)
    if (names_[i].rfind(prefix, 0) != 0) out.add(names_[i], values_[i]);
  return out;
}

void ParamSet::update_from(const ParamSet& other) {
  for (const std::string& n : other.names()) {
    if (has(n))
      at(n) = other.at(n);
    else
      add(n, other.at(n));
  }
}

uint64_t ParamSet::content_hash() const {
  uint64_t h = 0xcbf29ce484222325ull;
  for (size_t i = 0; i < names_.size(); ++i) {
    h = fnv1a64(names_[i].data(), names_[i].size(), h);
    long dims[2] = {values_[i].rows(), values_[i].cols()};
    h = fnv1a64(dims, sizeof(dims), h);
    h = fnv1a64(values_[i].data(), sizeof(double) * values_[i].size(), h);
  }
  return h;
}

double ParamSet::l2_distance(const ParamSet& other) const {
  std::string mismatch;
  if (!shape_compatible(other, &mismatch))
    throw Error("ParamSet::l2_distance: incompatible sets:" + mismatch);
  double ss = 0.0;
  for (const std::string& n : names_) ss += (at(n) - other.at(n)).squaredNorm();
  return std::sqrt(ss);
}

double ParamSet::l2_norm() const {
  double ss = 0.0;
  for (const Matrix& m : values_) ss += m.squaredNorm();
  return std::sqrt(ss);
}

void sgd_step(ParamSet& params, const ParamSet& grads, double lr) {
  std::string mismatch;
  if (!params.shape_compatible(grads, &mismatch))
    throw Error("sgd_step: params/grads mismatch:" + mismatch);
  for (const std::string& n : params.names()) params.at(n) -= lr * grads.at(n);
}

void BoundParams::add(const std::string& name, ad::Expr e) {
  lookup_[name] = static_cast<int>(items_.size());
  items_.emplace_back(name, e);
}

ad::Expr BoundParams::at(std::string_view name) const {
  auto it = lookup_.find(std::string(name));
  if (it == lookup_.end())
    throw Error("BoundParams: unknown parameter '" + std::string(name) + "'");
  return items_[it->second].second;
}

bool BoundParams::has(std::string_view name) const {
  return lookup_.count(std::string(name)) > 0;
}

BoundParams bind(ad::Tape& tape, const ParamSet& params) {
  BoundParams out;
  for (const std::string& n : params.names()) out.add(n, tape.leaf(params.at(n), n));
  return out;
}

ParamSet collect_grads(const ad::Tape& tape, const BoundParams& bound,
                       const std::vector<std::string>& prefixes) {
  ParamSet out;
  for (const auto& [name, e] : bound.items()) {
    bool wanted = prefixes.empty();
    for (const std::string& p : prefixes)
      if (name.rfind(p, 0) == 0) wanted = true;
    if (!wanted) continue;
    if (tape.has_grad(e))
      out.add(name, tape.grad(e));
    else
      out.add(name, Matrix::Zero(e.rows(), e.cols()));
  }
  return out;
}

ParamSet gradient(const ParamSet& params,
                  const std::function<ad::Expr(ad::Tape&, const BoundParams&)>& loss_fn) {
  ad::Tape tape;
  BoundParams bound = bind(tape, params);
  ad::Expr loss = loss_fn(tape, bound);
  tape.backward(loss);
  return collect_grads(tape, bound);
}

}  // namespace rnnt
