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

#include "rnnt/autodiff.hpp"

#include <limits>
#include <sstream>

namespace rnnt::ad {

const Matrix& Expr::value() const { return tape->value(*this); }

double Expr::scalar() const {
  const Matrix& v = value();
  if (v.rows() != 1 || v.cols() != 1) throw Error("Expr::scalar: node is not 1x1");
  return v(0, 0);
}

int Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

Expr Tape::leaf(Matrix value, std::string name) {
  Node n;
  n.value = std::move(value);
  n.op = "leaf";
  n.name = std::move(name);
  return Expr{this, push(std::move(n))};
}

Expr Tape::constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  n.op = "const";
  return Expr{this, push(std::move(n))};
}

Expr Tape::constant_scalar(double v) {
  Matrix m(1, 1);
  m(0, 0) = v;
  return constant(std::move(m));
}

Matrix& Tape::grad_buf(int id) {
  Node& n = nodes_[id];
  if (n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

const Matrix& Tape::grad(Expr e) const {
  const Node& n = nodes_[e.id];
  if (n.grad.size() == 0) {
    static const Matrix empty;
    throw Error("Tape::grad: node '" + std::string(n.op) + "' has no gradient (run backward first)");
    return empty;
  }
  return n.grad;
}

Expr Tape::custom(const char* op, std::vector<Expr> parents, Matrix value,
                  std::function<void(const Matrix&, std::vector<Matrix*>&)> back) {
  Node n;
  n.value = std::move(value);
  n.op = op;
  n.parents.reserve(parents.size());
  for (const Expr& p : parents) {
    if (p.tape != this) throw Error("Tape::custom: parent from another tape");
    n.parents.push_back(p.id);
  }
  n.back = [back = std::move(back)](Tape& t, int id) {
    Node& self = t.node(id);
    std::vector<Matrix*> pgrads(self.parents.size());
    for (size_t i = 0; i < self.parents.size(); ++i) pgrads[i] = &t.grad_buf(self.parents[i]);
    back(self.grad, pgrads);
  };
  return Expr{this, push(std::move(n))};
}

void Tape::backward(Expr loss) {
  if (loss.tape != this) throw Error("Tape::backward: loss from another tape");
  const Node& ln = nodes_[loss.id];
  if (ln.value.rows() != 1 || ln.value.cols() != 1) throw Error("Tape::backward: loss must be 1x1");
  if (!std::isfinite(ln.value(0, 0))) {
    // Name the first non-finite intermediate to make blowups debuggable.
    for (size_t i = 0; i < nodes_.size(); ++i) {
      if (!nodes_[i].value.allFinite()) {
        std::ostringstream os;
        os << "non-finite loss: first non-finite intermediate is node " << i << " (op '"
           << nodes_[i].op << (nodes_[i].name.empty() ? "" : "', name '" + nodes_[i].name)
           << "')";
        throw Error(os.str());
      }
    }
    throw Error("non-finite loss with all intermediates finite (loss node itself)");
  }
  grad_buf(loss.id)(0, 0) = 1.0;
  for (int i = loss.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (!n.back || n.grad.size() == 0) continue;
    n.back(*this, i);
  }
}

void Tape::reset() { nodes_.clear(); }

namespace {

void check_same_tape(Expr a, Expr b, const char* op) {
  if (a.tape != b.tape) throw Error(std::string(op) + ": operands on different tapes");
}

void check_same_shape(Expr a, Expr b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    std::ostringstream os;
    os << op << ": shape mismatch (" << a.rows() << "x" << a.cols() << " vs " << b.rows() << "x"
       << b.cols() << ")";
    throw Error(os.str());
  }
}

Expr unary(const char* op, Expr a, Matrix value,
           std::function<void(const Matrix&, const Matrix&, const Matrix&, Matrix&)> back) {
  // back(gout, a_value, out_value, a_grad)
  Tape& t = *a.tape;
  Tape::Node n;
  n.value = std::move(value);
  n.op = op;
  n.parents = {a.id};
  n.back = [back = std::move(back)](Tape& t, int id) {
    Tape::Node& self = t.node(id);
    int pid = self.parents[0];
    back(self.grad, t.node(pid).value, self.value, t.grad_buf(pid));
  };
  return Expr{&t, t.push(std::move(n))};
}

}  // namespace

Expr add(Expr a, Expr b) {
  check_same_tape(a, b, "add");
  check_same_shape(a, b, "add");
  return a.tape->custom("add", {a, b}, a.value() + b.value(),
                        [](const Matrix& g, std::vector<Matrix*>& p) {
                          *p[0] += g;
                          *p[1] += g;
                        });
}

Expr sub(Expr a, Expr b) {
  check_same_tape(a, b, "sub");
  check_same_shape(a, b, "sub");
  return a.tape->custom("sub", {a, b}, a.value() - b.value(),
                        [](const Matrix& g, std::vector<Matrix*>& p) {
                          *p[0] += g;
                          *p[1] -= g;
                        });
}

Expr mul(Expr a, Expr b) {
  check_same_tape(a, b, "mul");
  check_same_shape(a, b, "mul");
  Matrix av = a.value(), bv = b.value();
  return a.tape->custom("mul", {a, b}, av.cwiseProduct(bv),
                        [av, bv](const Matrix& g, std::vector<Matrix*>& p) {
                          *p[0] += g.cwiseProduct(bv);
                          *p[1] += g.cwiseProduct(av);
                        });
}

Expr scale(Expr a, double s) {
  return unary("scale", a, a.value() * s,
               [s](const Matrix& g, const Matrix&, const Matrix&, Matrix& ga) { ga += g * s; });
}

Expr matmul(Expr a, Expr b) {
  check_same_tape(a, b, "matmul");
  if (a.cols() != b.rows()) {
    std::ostringstream os;
    os << "matmul: inner dimension mismatch (" << a.rows() << "x" << a.cols() << " * " << b.rows()
       << "x" << b.cols() << ")";
    throw Error(os.str());
  }
  Matrix av = a.value(), bv = b.value();
  return a.tape->custom("matmul", {a, b}, av * bv,
                        [av, bv](const Matrix& g, std::vector<Matrix*>& p) {
                          *p[0] += g * bv.transpose();
                          *p[1] += av.transpose() * g;
                        });
}

Expr matmul_nt(Expr a, Expr b) {
  check_same_tape(a, b, "matmul_nt");
  if (a.cols() != b.cols()) {
    std::ostringstream os;
    os << "matmul_nt: inner dimension mismatch (" << a.rows() << "x" << a.cols() << " * ("
       << b.rows() << "x" << b.cols() << ")^T)";
    throw Error(os.str());
  }
  Matrix av = a.value(), bv = b.value();
  return a.tape->custom("matmul_nt", {a, b}, av * bv.transpose(),
                        [av, bv](const Matrix& g, std::vector<Matrix*>& p) {
                          *p[0] += g * bv;
                          *p[1] += g.transpose() * av;
                        });
}

Expr linear(Expr x, Expr w, Expr b) {
  check_same_tape(x, w, "linear");
  check_same_tape(x, b, "linear");
  if (x.cols() != w.cols() || b.rows() != w.rows() || b.cols() != 1) {
    std::ostringstream os;
    os << "linear: shape mismatch x=" << x.rows() << "x" << x.cols() << " w=" << w.rows() << "x"
       << w.cols() << " b=" << b.rows() << "x" << b.cols();
    throw Error(os.str());
  }
  Matrix xv = x.value(), wv = w.value();
  Matrix out = xv * wv.transpose();
  out.rowwise() += b.value().col(0).transpose();
  return x.tape->custom("linear", {x, w, b}, std::move(out),
                        [xv, wv](const Matrix& g, std::vector<Matrix*>& p) {
                          *p[0] += g * wv;
                          *p[1] += g.transpose() * xv;
                          p[2]->col(0) += g.colwise().sum().transpose();
                        });
}

Expr add_rowvec(Expr x, Expr v) {
  check_same_tape(x, v, "add_rowvec");
  if (v.rows() != 1 || v.cols() != x.cols()) throw Error("add_rowvec: v must be 1 x cols(x)");
  Matrix out = x.value();
  out.rowwise() += v.value().row(0);
  return x.tape->custom("add_rowvec", {x, v}, std::move(out),
                        [](const Matrix& g, std::vector<Matrix*>& p) {
                          *p[0] += g;
                          p[1]->row(0) += g.colwise().sum();
                        });
}

Expr tanh_(Expr a) {
  return unary("tanh", a, a.value().array().tanh().matrix(),
               [](const Matrix& g, const Matrix&, const Matrix& y, Matrix& ga) {
                 ga.array() += g.array() * (1.0 - y.array().square());
               });
}

Expr sigmoid(Expr a) {
  Matrix y = (1.0 / (1.0 + (-a.value().array()).exp())).matrix();
  return unary("sigmoid", a, std::move(y),
               [](const Matrix& g, const Matrix&, const Matrix& y, Matrix& ga) {
                 ga.array() += g.array() * y.array() * (1.0 - y.array());
               });
}

Expr exp_(Expr a) {
  return unary("exp", a, a.value().array().exp().matrix(),
               [](const Matrix& g, const Matrix&, const Matrix& y, Matrix& ga) {
                 ga.array() += g.array() * y.array();
               });
}

Expr log_(Expr a) {
  return unary("log", a, a.value().array().log().matrix(),
               [](const Matrix& g, const Matrix& x, const Matrix&, Matrix& ga) {
                 ga.array() += g.array() / x.array();
               });
}

Expr sqrt_guard(Expr a, double eps) {
  return unary("sqrt", a, a.value().array().sqrt().matrix(),
               [eps](const Matrix& g, const Matrix&, const Matrix& y, Matrix& ga) {
                 ga.array() += g.array() / (2.0 * y.array().max(eps));
               });
}

Expr sum(Expr a) {
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return unary("sum", a, std::move(out),
               [](const Matrix& g, const Matrix& x, const Matrix&, Matrix& ga) {
                 ga.array() += g(0, 0);
               });
}

Expr mean(Expr a) {
  double n = static_cast<double>(a.value().size());
  return scale(sum(a), 1.0 / n);
}

Expr layer_norm_rows(Expr x, Expr gamma, Expr beta, double eps) {
  check_same_tape(x, gamma, "layer_norm_rows");
  check_same_tape(x, beta, "layer_norm_rows");
  const long C = x.cols();
  if (gamma.rows() != 1 || gamma.cols() != C || beta.rows() != 1 || beta.cols() != C)
    throw Error("layer_norm_rows: gamma/beta must be 1 x cols(x)");
  Matrix xv = x.value();
  const Matrix gv = gamma.value();
  Matrix xhat(xv.rows(), C);
  Eigen::VectorXd inv_s(xv.rows());
  for (long r = 0; r < xv.rows(); ++r) {
    double mu = xv.row(r).mean();
    double var = (xv.row(r).array() - mu).square().mean();
    double s = std::sqrt(var + eps);
    inv_s(r) = 1.0 / s;
    xhat.row(r) = (xv.row(r).array() - mu) / s;
  }
  Matrix out = xhat;
  out.array().rowwise() *= gv.row(0).array();
  out.rowwise() += beta.value().row(0);
  return x.tape->custom(
      "layer_norm_rows", {x, gamma, beta}, std::move(out),
      [xhat, gv, inv_s](const Matrix& g, std::vector<Matrix*>& p) {
        // dx = (gy - mean(gy) - xhat * mean(gy .* xhat)) / s, gy = g .* gamma
        using RowArray = Eigen::Array<double, 1, Eigen::Dynamic>;
        for (long r = 0; r < g.rows(); ++r) {
          RowArray gy = g.row(r).array() * gv.row(0).array();
          RowArray xh = xhat.row(r).array();
          double m1 = gy.mean();
          double m2 = (gy * xh).mean();
          p[0]->row(r).array() += inv_s(r) * (gy - m1 - xh * m2);
        }
        p[1]->row(0) += (g.array() * xhat.array()).colwise().sum().matrix();
        p[2]->row(0) += g.colwise().sum();
      });
}

Expr log_softmax_rows(Expr x) {
  Matrix xv = x.value();
  Matrix out(xv.rows(), xv.cols());
  for (long r = 0; r < xv.rows(); ++r) {
    double mx = xv.row(r).maxCoeff();
    double lse = mx + std::log((xv.row(r).array() - mx).exp().sum());
    out.row(r) = xv.row(r).array() - lse;
  }
  return unary("log_softmax_rows", x, std::move(out),
               [](const Matrix& g, const Matrix&, const Matrix& y, Matrix& ga) {
                 for (long r = 0; r < g.rows(); ++r) {
                   double gs = g.row(r).sum();
                   ga.row(r).array() += g.row(r).array() - y.row(r).array().exp() * gs;
                 }
               });
}

Expr row(Expr x, int i) {
  if (i < 0 || i >= x.rows()) throw Error("row: index out of range");
  return unary("row", x, x.value().row(i),
               [i](const Matrix& g, const Matrix&, const Matrix&, Matrix& ga) {
                 ga.row(i) += g.row(0);
               });
}

Expr cols(Expr x, int start, int len) {
  if (start < 0 || len < 0 || start + len > x.cols()) throw Error("cols: slice out of range");
  return unary("cols", x, x.value().middleCols(start, len),
               [start, len](const Matrix& g, const Matrix&, const Matrix&, Matrix& ga) {
                 ga.middleCols(start, len) += g;
               });
}

Expr rows_select(Expr x, std::vector<int> idx) {
  const long R = x.rows();
  for (int i : idx)
    if (i < 0 || i >= R) throw Error("rows_select: index out of range");
  Matrix out(static_cast<long>(idx.size()), x.cols());
  for (size_t k = 0; k < idx.size(); ++k) out.row(static_cast<long>(k)) = x.value().row(idx[k]);
  return unary("rows_select", x, std::move(out),
               [idx = std::move(idx)](const Matrix& g, const Matrix&, const Matrix&, Matrix& ga) {
                 for (size_t k = 0; k < idx.size(); ++k)
                   ga.row(idx[k]) += g.row(static_cast<long>(k));
               });
}

Expr vstack(const std::vector<Expr>& parts) {
  if (parts.empty()) throw Error("vstack: empty input");
  Tape& t = *parts[0].tape;
  long cols = parts[0].cols(), rows = 0;
  for (const Expr& e : parts) {
    if (e.tape != &t) throw Error("vstack: mixed tapes");
    if (e.cols() != cols) throw Error("vstack: column mismatch");
    rows += e.rows();
  }
  Matrix out(rows, cols);
  std::vector<long> offsets(parts.size());
  long at = 0;
  for (size_t k = 0; k < parts.size(); ++k) {
    offsets[k] = at;
    out.middleRows(at, parts[k].rows()) = parts[k].value();
    at += parts[k].rows();
  }
  std::vector<long> sizes(parts.size());
  for (size_t k = 0; k < parts.size(); ++k) sizes[k] = parts[k].rows();
  return t.custom("vstack", parts, std::move(out),
                  [offsets = std::move(offsets), sizes = std::move(sizes)](
                      const Matrix& g, std::vector<Matrix*>& p) {
                    for (size_t k = 0; k < p.size(); ++k)
                      *p[k] += g.middleRows(offsets[k], sizes[k]);
                  });
}

Expr reduce_frames(Expr x, int factor) {
  const long T = x.rows(), C = x.cols();
  if (T < 1) throw Error("reduce_frames: empty input");
  if (factor < 1) throw Error("reduce_frames: factor must be >= 1");
  const long f = factor;
  const long T2 = (T + f - 1) / f;
  Matrix out(T2, f * C);
  for (long i = 0; i < T2; ++i)
    for (long k = 0; k < f; ++k)
      out.block(i, k * C, 1, C) = x.value().row(std::min(i * f + k, T - 1));
  return unary("reduce_frames", x, std::move(out),
               [T, C, T2, f](const Matrix& g, const Matrix&, const Matrix&, Matrix& ga) {
                 for (long i = 0; i < T2; ++i)
                   for (long k = 0; k < f; ++k)
                     ga.row(std::min(i * f + k, T - 1)) += g.block(i, k * C, 1, C);
               });
}

Expr pick(Expr x, int i, int j) {
  if (i < 0 || i >= x.rows() || j < 0 || j >= x.cols()) throw Error("pick: index out of range");
  Matrix out(1, 1);
  out(0, 0) = x.value()(i, j);
  return unary("pick", x, std::move(out),
               [i, j](const Matrix& g, const Matrix&, const Matrix&, Matrix& ga) {
                 ga(i, j) += g(0, 0);
               });
}

Expr gather_rowwise(Expr x, std::vector<int> idx) {
  if (static_cast<long>(idx.size()) != x.rows())
    throw Error("gather_rowwise: one index per row required");
  for (int j : idx)
    if (j < 0 || j >= x.cols()) throw Error("gather_rowwise: column index out of range");
  Matrix out(x.rows(), 1);
  for (long r = 0; r < x.rows(); ++r) out(r, 0) = x.value()(r, idx[r]);
  return unary("gather_rowwise", x, std::move(out),
               [idx = std::move(idx)](const Matrix& g, const Matrix&, const Matrix&, Matrix& ga) {
                 for (long r = 0; r < g.rows(); ++r) ga(r, idx[r]) += g(r, 0);
               });
}

}  // namespace rnnt::ad
