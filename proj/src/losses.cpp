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

#include "rnnt/losses.hpp"

#include <cmath>
#include <limits>

namespace rnnt {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct RnntDp {
  Matrix alpha;  // (T x (U+1))
  Matrix beta;
  double nll;
};

// alpha(t, u): log-probability of consuming frames < t ... more precisely of
// all partial paths reaching node (t, u):
//   alpha(t, u) = lse(alpha(t-1, u) + lp(t-1, u, blank),
//                     alpha(t, u-1) + lp(t, u-1, y_u))
// total = alpha(T-1, U) + lp(T-1, U, blank)  (final blank leaves the grid).
RnntDp rnnt_dp(const std::vector<const Matrix*>& lattice, const std::vector<int>& target,
               int blank_id) {
  const int T = static_cast<int>(lattice.size());
  const int U = static_cast<int>(target.size());
  if (T == 0) throw Error("rnnt_loss: empty lattice (T' = 0)");
  const long V1 = lattice[0]->cols();
  for (const Matrix* m : lattice)
    if (m->rows() != U + 1 || m->cols() != V1)
      throw Error("rnnt_loss: lattice dimensions inconsistent with target length");
  if (blank_id < 0 || blank_id >= V1) throw Error("rnnt_loss: blank id out of range");
  for (int y : target)
    if (y < 0 || y >= V1 || y == blank_id)
      throw Error("rnnt_loss: target symbol out of range or blank");

  RnntDp dp;
  dp.alpha = Matrix::Constant(T, U + 1, kNegInf);
  dp.beta = Matrix::Constant(T, U + 1, kNegInf);
  auto lp = [&](int t, int u, int k) { return (*lattice[t])(u, k); };

  dp.alpha(0, 0) = 0.0;
  for (int t = 0; t < T; ++t)
    for (int u = 0; u <= U; ++u) {
      double acc = (t == 0 && u == 0) ? 0.0 : kNegInf;
      if (t > 0) acc = ad::log_sum_exp(acc, dp.alpha(t - 1, u) + lp(t - 1, u, blank_id));
      if (u > 0) acc = ad::log_sum_exp(acc, dp.alpha(t, u - 1) + lp(t, u - 1, target[u - 1]));
      dp.alpha(t, u) = acc;
    }

  dp.beta(T - 1, U) = lp(T - 1, U, blank_id);
  for (int t = T - 1; t >= 0; --t)
    for (int u = U; u >= 0; --u) {
      if (t == T - 1 && u == U) continue;
      double acc = kNegInf;
      if (t + 1 < T) acc = ad::log_sum_exp(acc, dp.beta(t + 1, u) + lp(t, u, blank_id));
      if (u < U) acc = ad::log_sum_exp(acc, dp.beta(t, u + 1) + lp(t, u, target[u]));
      dp.beta(t, u) = acc;
    }

  double total = dp.alpha(T - 1, U) + lp(T - 1, U, blank_id);
  dp.nll = -total;
  return dp;
}

// d(-logZ)/d lp(t,u,k): only the transitions actually on paths carry mass.
//   blank:      -exp(alpha(t,u) + lp + beta_next - logZ), beta_next =
//               beta(t+1,u), or 0 for the terminal blank at (T-1, U)
//   target[u]:  -exp(alpha(t,u) + lp + beta(t,u+1) - logZ)
std::vector<Matrix> rnnt_grads(const std::vector<const Matrix*>& lattice,
                               const std::vector<int>& target, int blank_id, const RnntDp& dp) {
  const int T = static_cast<int>(lattice.size());
  const int U = static_cast<int>(target.size());
  const double logZ = -dp.nll;
  std::vector<Matrix> grads(T);
  for (int t = 0; t < T; ++t) {
    grads[t] = Matrix::Zero(U + 1, lattice[t]->cols());
    for (int u = 0; u <= U; ++u) {
      if (dp.alpha(t, u) == kNegInf) continue;
      // blank transition
      double beta_next;
      if (t == T - 1 && u == U)
        beta_next = 0.0;
      else if (t + 1 < T)
        beta_next = dp.beta(t + 1, u);
      else
        beta_next = kNegInf;
      if (beta_next != kNegInf) {
        double g = dp.alpha(t, u) + (*lattice[t])(u, blank_id) + beta_next - logZ;
        grads[t](u, blank_id) -= std::exp(g);
      }
      // token transition
      if (u < U && dp.beta(t, u + 1) != kNegInf) {
        double g = dp.alpha(t, u) + (*lattice[t])(u, target[u]) + dp.beta(t, u + 1) - logZ;
        grads[t](u, target[u]) -= std::exp(g);
      }
    }
  }
  return grads;
}

struct CtcDp {
  Matrix alpha;  // T x S, emission at t included
  Matrix beta;   // T x S, emissions at >= t included
  double nll;
  std::vector<int> ext;  // extended labels with blanks
};

CtcDp ctc_dp(const Matrix& lp, const std::vector<int>& target, int blank_id) {
  const int T = static_cast<int>(lp.rows());
  const long V1 = lp.cols();
  if (T == 0) throw Error("ctc_loss: empty frame sequence");
  for (int y : target)
    if (y < 0 || y >= V1 || y == blank_id)
      throw Error("ctc_loss: target symbol out of range or blank");

  CtcDp dp;
  const int U = static_cast<int>(target.size());
  dp.ext.assign(2 * U + 1, blank_id);
  for (int i = 0; i < U; ++i) dp.ext[2 * i + 1] = target[i];
  const int S = static_cast<int>(dp.ext.size());

  int repeats = 0;
  for (int i = 1; i < U; ++i)
    if (target[i] == target[i - 1]) ++repeats;
  if (T < U + repeats)
    throw Error("ctc_loss: target longer than feasible for " + std::to_string(T) + " frames");

  dp.alpha = Matrix::Constant(T, S, kNegInf);
  dp.beta = Matrix::Constant(T, S, kNegInf);
  dp.alpha(0, 0) = lp(0, dp.ext[0]);
  if (S > 1) dp.alpha(0, 1) = lp(0, dp.ext[1]);
  for (int t = 1; t < T; ++t)
    for (int s = 0; s < S; ++s) {
      double acc = dp.alpha(t - 1, s);
      if (s > 0) acc = ad::log_sum_exp(acc, dp.alpha(t - 1, s - 1));
      if (s > 1 && dp.ext[s] != blank_id && dp.ext[s] != dp.ext[s - 2])
        acc = ad::log_sum_exp(acc, dp.alpha(t - 1, s - 2));
      dp.alpha(t, s) = acc == kNegInf ? kNegInf : acc + lp(t, dp.ext[s]);
    }

  dp.beta(T - 1, S - 1) = lp(T - 1, dp.ext[S - 1]);
  if (S > 1) dp.beta(T - 1, S - 2) = lp(T - 1, dp.ext[S - 2]);
  for (int t = T - 2; t >= 0; --t)
    for (int s = S - 1; s >= 0; --s) {
      double acc = dp.beta(t + 1, s);
      if (s + 1 < S) acc = ad::log_sum_exp(acc, dp.beta(t + 1, s + 1));
      if (s + 2 < S && dp.ext[s + 2] != blank_id && dp.ext[s] != dp.ext[s + 2])
        acc = ad::log_sum_exp(acc, dp.beta(t + 1, s + 2));
      dp.beta(t, s) = acc == kNegInf ? kNegInf : acc + lp(t, dp.ext[s]);
    }

  double total = dp.alpha(T - 1, S - 1);
  if (S > 1) total = ad::log_sum_exp(total, dp.alpha(T - 1, S - 2));
  dp.nll = -total;
  return dp;
}

// d(-logZ)/d lp(t,k) = -sum_{s: ext[s]=k} exp(alpha(t,s) + beta(t,s)
//                       - lp(t, ext[s]) - logZ)
Matrix ctc_grad(const Matrix& lp, int blank_id, const CtcDp& dp) {
  const int T = static_cast<int>(lp.rows());
  const int S = static_cast<int>(dp.ext.size());
  const double logZ = -dp.nll;
  Matrix grad = Matrix::Zero(T, lp.cols());
  for (int t = 0; t < T; ++t)
    for (int s = 0; s < S; ++s) {
      if (dp.alpha(t, s) == kNegInf || dp.beta(t, s) == kNegInf) continue;
      double g = dp.alpha(t, s) + dp.beta(t, s) - lp(t, dp.ext[s]) - logZ;
      grad(t, dp.ext[s]) -= std::exp(g);
    }
  return grad;
}

}  // namespace

double rnnt_loss_value(const std::vector<Matrix>& lattice, const std::vector<int>& target,
                       int blank_id) {
  std::vector<const Matrix*> ptrs;
  ptrs.reserve(lattice.size());
  for (const Matrix& m : lattice) ptrs.push_back(&m);
  return rnnt_dp(ptrs, target, blank_id).nll;
}

ad::Expr rnnt_loss(ad::Tape& tape, const std::vector<ad::Expr>& lattice,
                   const std::vector<int>& target, int blank_id) {
  std::vector<const Matrix*> ptrs;
  ptrs.reserve(lattice.size());
  for (const ad::Expr& e : lattice) ptrs.push_back(&e.value());
  RnntDp dp = rnnt_dp(ptrs, target, blank_id);
  std::vector<Matrix> grads = rnnt_grads(ptrs, target, blank_id, dp);
  Matrix value(1, 1);
  value(0, 0) = dp.nll;
  return tape.custom("rnnt_loss", lattice, std::move(value),
                     [grads = std::move(grads)](const Matrix& gout, std::vector<Matrix*>& p) {
                       for (size_t t = 0; t < p.size(); ++t) *p[t] += gout(0, 0) * grads[t];
                     });
}

double ctc_loss_value(const Matrix& frame_log_probs, const std::vector<int>& target, int blank_id) {
  return ctc_dp(frame_log_probs, target, blank_id).nll;
}

ad::Expr ctc_loss(ad::Tape& tape, ad::Expr frame_log_probs, const std::vector<int>& target,
                  int blank_id) {
  CtcDp dp = ctc_dp(frame_log_probs.value(), target, blank_id);
  Matrix grad = ctc_grad(frame_log_probs.value(), blank_id, dp);
  Matrix value(1, 1);
  value(0, 0) = dp.nll;
  return tape.custom("ctc_loss", {frame_log_probs}, std::move(value),
                     [grad = std::move(grad)](const Matrix& gout, std::vector<Matrix*>& p) {
                       *p[0] += gout(0, 0) * grad;
                     });
}

double nll_sum_raw(const Matrix& log_probs, const std::vector<int>& tokens, int eos_id) {
  const long n = static_cast<long>(tokens.size());
  if (log_probs.rows() != n + 1) throw Error("nll_sum_raw: need one log-prob row per position");
  double nll = 0.0;
  for (long i = 0; i < n; ++i) nll -= log_probs(i, tokens[static_cast<size_t>(i)]);
  nll -= log_probs(n, eos_id);
  return nll;
}

ad::Expr lm_cross_entropy(ad::Tape& tape, const BoundParams& bp, const ModelConfig& cfg,
                          const std::vector<int>& tokens, int bos_id, int blank_id, int eos_id) {
  if (tokens.empty()) throw Error("lm_cross_entropy: empty token sequence");
  for (int t : tokens)
    if (t == blank_id) throw Error("lm_cross_entropy: blank token present");
  std::vector<int> inputs;
  inputs.reserve(tokens.size() + 1);
  inputs.push_back(bos_id);
  inputs.insert(inputs.end(), tokens.begin(), tokens.end());
  ad::Expr pred = prediction_forward(tape, bp, cfg, inputs, bos_id, blank_id);
  ad::Expr log_probs = lm_head_log_probs(tape, bp, pred);  // (n+1) x V
  std::vector<int> targets(tokens);
  targets.push_back(eos_id);
  ad::Expr picked = ad::gather_rowwise(log_probs, targets);
  return ad::scale(ad::sum(picked), -1.0 / static_cast<double>(targets.size()));
}

}  // namespace rnnt
