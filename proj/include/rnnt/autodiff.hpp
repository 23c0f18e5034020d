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

#ifndef RNNT_AUTODIFF_HPP
#define RNNT_AUTODIFF_HPP

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "rnnt/common.hpp"

namespace rnnt::ad {

using Matrix = Eigen::MatrixXd;

class Tape;

// Lightweight handle to a node on a Tape. Valid until the tape is reset.
struct Expr {
  Tape* tape = nullptr;
  int id = -1;

  bool valid() const { return tape != nullptr && id >= 0; }
  const Matrix& value() const;
  long rows() const { return value().rows(); }
  long cols() const { return value().cols(); }
  double scalar() const;
};

// Record-and-replay reverse-mode tape over dense matrices. Evaluation is
// eager: each op computes its value on construction and registers a closure
// that scatters the output gradient to its parents. Single-threaded; a fresh
// tape (or reset()) per training step.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Expr leaf(Matrix value, std::string name = "");
  Expr constant(Matrix value);
  Expr constant_scalar(double v);

  // Generic node with a caller-supplied backward. `back(gout, pgrads)` must
  // accumulate into pgrads[i] (already sized and zeroed) for each parent i.
  Expr custom(const char* op, std::vector<Expr> parents, Matrix value,
              std::function<void(const Matrix& gout, std::vector<Matrix*>& pgrads)> back);

  // Accumulates gradients of a 1x1 scalar into every node. Throws if the
  // loss is non-finite, naming the first non-finite intermediate.
  void backward(Expr loss);

  const Matrix& value(Expr e) const { return nodes_[e.id].value; }
  const Matrix& grad(Expr e) const;
  bool has_grad(Expr e) const { return nodes_[e.id].grad.size() > 0; }

  size_t size() const { return nodes_.size(); }
  void reset();

  // ---- internal node access for op implementations ----
  struct Node {
    Matrix value;
    Matrix grad;  // empty until touched by backward
    std::vector<int> parents;
    std::function<void(Tape&, int)> back;  // nullptr for leaves/constants
    const char* op = "leaf";
    std::string name;  // nonempty for named leaves
  };
  Node& node(int id) { return nodes_[id]; }
  const Node& node(int id) const { return nodes_[id]; }
  int push(Node n);
  Matrix& grad_buf(int id);

 private:
  std::vector<Node> nodes_;
};

// ---- op library (free functions; all shapes checked) ----

Expr add(Expr a, Expr b);
Expr sub(Expr a, Expr b);
Expr mul(Expr a, Expr b);  // elementwise
Expr scale(Expr a, double s);
Expr matmul(Expr a, Expr b);
Expr matmul_nt(Expr a, Expr b);  // a * b^T
// y = x * W^T + 1 * b^T, with W (out x in) and b (out x 1)
Expr linear(Expr x, Expr w, Expr b);
Expr add_rowvec(Expr x, Expr v);  // v is 1 x C, broadcast over rows
Expr tanh_(Expr a);
Expr sigmoid(Expr a);
Expr exp_(Expr a);
Expr log_(Expr a);
// sqrt with the gradient denominator clamped at eps (value is exact sqrt)
Expr sqrt_guard(Expr a, double eps = 1e-12);
Expr sum(Expr a);   // 1x1
Expr mean(Expr a);  // 1x1
// per-row layer normalization with gain/bias (both 1 x C)
Expr layer_norm_rows(Expr x, Expr gamma, Expr beta, double eps = 1e-5);
// numerically stable log-softmax applied to each row
Expr log_softmax_rows(Expr x);
Expr row(Expr x, int i);                              // 1 x C
Expr cols(Expr x, int start, int len);                // all rows, column slice
Expr rows_select(Expr x, std::vector<int> idx);       // gather rows (dup ok)
Expr vstack(const std::vector<Expr>& parts);
// out(i, :) = [x(i*f, :), ..., x(i*f + f - 1, :)] with the tail padded by
// repeating the final row; ceil(T/f) output rows
Expr reduce_frames(Expr x, int factor);
Expr pick(Expr x, int i, int j);                      // 1x1
// out(i, 0) = x(i, idx[i]) for each row
Expr gather_rowwise(Expr x, std::vector<int> idx);

inline Expr operator+(Expr a, Expr b) { return add(a, b); }
inline Expr operator-(Expr a, Expr b) { return sub(a, b); }
inline Expr operator*(Expr a, Expr b) { return mul(a, b); }
inline Expr operator*(double s, Expr a) { return scale(a, s); }

// log(exp(a) + exp(b)) for plain doubles; the DP losses use this.
inline double log_sum_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  double hi = a > b ? a : b;
  double lo = a > b ? b : a;
  return hi + std::log1p(std::exp(lo - hi));
}

}  // namespace rnnt::ad

#endif  // RNNT_AUTODIFF_HPP
