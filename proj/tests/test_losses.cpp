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

#include <cmath>
#include <functional>

#include "doctest.h"
#include "rnnt/losses.hpp"
#include "test_support.hpp"

using namespace rnnt;
using rnnt::testing::random_matrix;

namespace rnnt::testing {

// Exhaustive transducer oracle: recursively walks every monotone alignment
// (blank advances t, target token advances u) and log-sum-exps the path
// scores. Independent of the DP implementation.
double rnnt_oracle(const std::vector<Matrix>& lattice, const std::vector<int>& target,
                   int blank_id) {
  const int T = static_cast<int>(lattice.size());
  const int U = static_cast<int>(target.size());
  double total = -std::numeric_limits<double>::infinity();
  std::function<void(int, int, double)> walk = [&](int t, int u, double score) {
    if (t == T) return;  // ran out of frames before the final blank
    if (t == T - 1 && u == U) {
      total = ad::log_sum_exp(total, score + lattice[t](u, blank_id));
      return;  // the final blank ends the path; nothing may follow
    }
    if (t + 1 < T) walk(t + 1, u, score + lattice[t](u, blank_id));
    if (u < U) walk(t, u + 1, score + lattice[t](u, target[u]));
  };
  walk(0, 0, 0.0);
  return -total;
}

// Exhaustive CTC oracle: enumerates all (V+1)^T frame label sequences and
// sums those whose collapse (dedup, then drop blanks) equals the target.
double ctc_oracle(const Matrix& lp, const std::vector<int>& target, int blank_id) {
  const int T = static_cast<int>(lp.rows());
  const int V1 = static_cast<int>(lp.cols());
  double total = -std::numeric_limits<double>::infinity();
  std::vector<int> path(T);
  std::function<void(int, double)> walk = [&](int t, double score) {
    if (t == T) {
      std::vector<int> collapsed;
      for (int i = 0; i < T; ++i) {
        if (i > 0 && path[i] == path[i - 1]) continue;
        if (path[i] != blank_id) collapsed.push_back(path[i]);
      }
      if (collapsed == target) total = ad::log_sum_exp(total, score);
      return;
    }
    for (int k = 0; k < V1; ++k) {
      path[t] = k;
      walk(t + 1, score + lp(t, k));
    }
  };
  walk(0, 0.0);
  return -total;
}

std::vector<Matrix> random_lattice(int T, int U, int V1, Rng& rng) {
  std::vector<Matrix> lattice;
  for (int t = 0; t < T; ++t) {
    Matrix logits = random_matrix(U + 1, V1, rng, 1.5);
    lattice.push_back(log_softmax_rows_raw(logits));
  }
  return lattice;
}

}  // namespace rnnt::testing

using rnnt::testing::ctc_oracle;
using rnnt::testing::random_lattice;
using rnnt::testing::rnnt_oracle;

TEST_CASE("transducer loss single-path cases") {
  SUBCASE("T'=1, U=0: loss is -log p_blank(0,0)") {
    Matrix slice = log_softmax_rows_raw((Matrix(1, 3) << 0.3, -0.2, 0.9).finished());
    double loss = rnnt_loss_value({slice}, {}, 2);
    CHECK(loss == doctest::Approx(-slice(0, 2)).epsilon(1e-12));
  }
  SUBCASE("uniform lattice, T'=1, U=1: unique path scores -log(1/9)") {
    Matrix uniform = Matrix::Constant(2, 3, std::log(1.0 / 3.0));
    double loss = rnnt_loss_value({uniform}, {0}, 2);
    CHECK(loss == doctest::Approx(-std::log(1.0 / 9.0)).epsilon(1e-12));
  }
}

TEST_CASE("transducer loss equals exhaustive alignment enumeration on 200 random instances") {
  Rng rng(1234);
  for (int trial = 0; trial < 200; ++trial) {
    int T = 1 + rng.uniform_int(4);   // up to 4
    int U = rng.uniform_int(4);       // up to 3
    int V1 = 2 + rng.uniform_int(3);  // alphabet up to 4 incl. blank
    int blank = V1 - 1;
    std::vector<int> target;
    for (int u = 0; u < U; ++u) target.push_back(rng.uniform_int(blank));
    auto lattice = random_lattice(T, U, V1, rng);
    double got = rnnt_loss_value(lattice, target, blank);
    double want = rnnt_oracle(lattice, target, blank);
    CHECK(got == doctest::Approx(want).epsilon(1e-9));
  }
}

TEST_CASE("transducer loss error cases") {
  Rng rng(5);
  CHECK_THROWS_AS(rnnt_loss_value({}, {0}, 2), Error);
  auto lattice = random_lattice(2, 1, 3, rng);
  CHECK_THROWS_AS(rnnt_loss_value(lattice, {0, 1}, 2), Error);  // U mismatch
  CHECK_THROWS_AS(rnnt_loss_value(lattice, {2}, 2), Error);     // blank in target
}

TEST_CASE("transducer loss is invariant to consistent vocabulary permutation") {
  Rng rng(77);
  auto lattice = random_lattice(3, 2, 4, rng);
  std::vector<int> target = {0, 2};
  // permutation of non-blank symbols 0,1,2 -> 2,0,1 (blank stays last)
  std::vector<int> perm = {2, 0, 1, 3};
  std::vector<Matrix> permuted;
  for (const Matrix& m : lattice) {
    Matrix p(m.rows(), m.cols());
    for (long r = 0; r < m.rows(); ++r)
      for (int k = 0; k < 4; ++k) p(r, perm[k]) = m(r, k);
    permuted.push_back(p);
  }
  std::vector<int> ptarget;
  for (int y : target) ptarget.push_back(perm[y]);
  CHECK(rnnt_loss_value(lattice, target, 3) ==
        doctest::Approx(rnnt_loss_value(permuted, ptarget, 3)).epsilon(1e-12));
}

TEST_CASE("ctc loss single-path and hand cases") {
  SUBCASE("T'=1, target=[a]: loss is -log p_a(0)") {
    Matrix lp = log_softmax_rows_raw((Matrix(1, 3) << 0.2, 1.1, -0.4).finished());
    CHECK(ctc_loss_value(lp, {0}, 2) == doctest::Approx(-lp(0, 0)).epsilon(1e-12));
  }
  SUBCASE("repeated label needs a separating blank") {
    Rng rng(3);
    Matrix lp = log_softmax_rows_raw(random_matrix(3, 3, rng));
    double got = ctc_loss_value(lp, {0, 0}, 2);
    // only path: a blank a
    CHECK(got == doctest::Approx(-(lp(0, 0) + lp(1, 2) + lp(2, 0))).epsilon(1e-12));
    CHECK(got == doctest::Approx(ctc_oracle(lp, {0, 0}, 2)).epsilon(1e-12));
  }
  SUBCASE("empty target sums blank log-probs") {
    Rng rng(4);
    Matrix lp = log_softmax_rows_raw(random_matrix(4, 3, rng));
    double expect = -(lp(0, 2) + lp(1, 2) + lp(2, 2) + lp(3, 2));
    CHECK(ctc_loss_value(lp, {}, 2) == doctest::Approx(expect).epsilon(1e-12));
  }
  SUBCASE("infeasible target length is an error") {
    Rng rng(5);
    Matrix lp = log_softmax_rows_raw(random_matrix(2, 3, rng));
    CHECK_THROWS_AS(ctc_loss_value(lp, {0, 0}, 2), Error);
  }
}

TEST_CASE("ctc loss equals exhaustive path enumeration on 200 random instances") {
  Rng rng(4321);
  int done = 0;
  while (done < 200) {
    int T = 1 + rng.uniform_int(4);
    int U = rng.uniform_int(4);
    int V1 = 2 + rng.uniform_int(3);
    int blank = V1 - 1;
    std::vector<int> target;
    for (int u = 0; u < U; ++u) target.push_back(rng.uniform_int(blank));
    int repeats = 0;
    for (size_t i = 1; i < target.size(); ++i)
      if (target[i] == target[i - 1]) ++repeats;
    if (T < U + repeats) continue;  // infeasible draw, resample
    Matrix lp = log_softmax_rows_raw(random_matrix(T, V1, rng, 1.5));
    CHECK(ctc_loss_value(lp, target, blank) ==
          doctest::Approx(ctc_oracle(lp, target, blank)).epsilon(1e-9));
    ++done;
  }
}

TEST_CASE("dp loss gradients match finite differences") {
  Rng rng(99);
  SUBCASE("transducer") {
    const int T = 3, U = 2, V1 = 4;
    std::vector<int> target = {0, 2};
    ParamSet ps;
    for (int t = 0; t < T; ++t)
      ps.add("logits" + std::to_string(t), random_matrix(U + 1, V1, rng));
    auto res = rnnt::testing::check_gradients(ps, [&](ad::Tape& tape, const BoundParams& bp) {
      std::vector<ad::Expr> lattice;
      for (int t = 0; t < T; ++t)
        lattice.push_back(ad::log_softmax_rows(bp.at("logits" + std::to_string(t))));
      return rnnt_loss(tape, lattice, target, V1 - 1);
    });
    INFO("worst ", res.worst_param);
    CHECK(res.max_rel_err < 1e-4);
  }
  SUBCASE("ctc") {
    const int T = 4, V1 = 4;
    std::vector<int> target = {1, 1, 0};
    ParamSet ps;
    ps.add("logits", random_matrix(T, V1, rng));
    auto res = rnnt::testing::check_gradients(ps, [&](ad::Tape& tape, const BoundParams& bp) {
      return ctc_loss(tape, ad::log_softmax_rows(bp.at("logits")), target, V1 - 1);
    });
    CHECK(res.max_rel_err < 1e-4);
  }
}

TEST_CASE("lm cross entropy") {
  ModelConfig cfg;
  cfg.prediction_layers = 1;
  cfg.prediction_width = 6;
  cfg.prediction_proj = 4;
  cfg.vocab_size = 60;
  const int bos = cfg.vocab_size + 1, blank = cfg.vocab_size, eos = 0;
  ParamSet ps = init_prediction(cfg, 21);
  ps.update_from(init_lm_head(cfg, 22));

  SUBCASE("uniform head gives log V per token") {
    ParamSet uniform = ps;
    uniform.at("lm_head.w").setZero();
    uniform.at("lm_head.b").setZero();
    ad::Tape tape;
    BoundParams bp = bind(tape, uniform);
    ad::Expr ce = lm_cross_entropy(tape, bp, cfg, {3, 14, 9}, bos, blank, eos);
    CHECK(ce.scalar() == doctest::Approx(std::log(60.0)).epsilon(1e-12));
  }
  SUBCASE("blank token is rejected") {
    ad::Tape tape;
    BoundParams bp = bind(tape, ps);
    CHECK_THROWS_AS(lm_cross_entropy(tape, bp, cfg, {3, blank}, bos, blank, eos), Error);
  }
  SUBCASE("gradient matches finite differences") {
    auto res = rnnt::testing::check_gradients(ps, [&](ad::Tape& tape, const BoundParams& bp) {
      return lm_cross_entropy(tape, bp, cfg, {3, 14, 9, 2}, bos, blank, eos);
    });
    INFO("worst ", res.worst_param);
    CHECK(res.max_rel_err < 1e-4);
  }
  SUBCASE("a single utterance can be memorized (NLL -> 0)") {
    ModelConfig small = cfg;
    small.vocab_size = 6;
    const int sbos = small.vocab_size + 1, sblank = small.vocab_size;
    ParamSet m = init_prediction(small, 23);
    m.update_from(init_lm_head(small, 24));
    std::vector<int> utt = {2, 5};
    for (int step = 0; step < 400; ++step) {
      ParamSet g = gradient(m, [&](ad::Tape& tape, const BoundParams& bp) {
        return lm_cross_entropy(tape, bp, small, utt, sbos, sblank, 0);
      });
      sgd_step(m, g, 0.5);
    }
    ad::Tape tape;
    BoundParams bp = bind(tape, m);
    double nll = lm_cross_entropy(tape, bp, small, utt, sbos, sblank, 0).scalar();
    CHECK(nll < 0.1);
  }
  SUBCASE("concatenated-batch NLL equals the length-weighted mean of per-utterance CE") {
    std::vector<std::vector<int>> batch = {{3, 14}, {9, 2, 7, 1}, {8}};
    double weighted = 0.0, direct_nll = 0.0;
    long total = 0;
    for (const auto& utt : batch) {
      ad::Tape tape;
      BoundParams bp = bind(tape, ps);
      double ce = lm_cross_entropy(tape, bp, cfg, utt, bos, blank, eos).scalar();
      weighted += ce * static_cast<double>(utt.size() + 1);
      total += static_cast<long>(utt.size()) + 1;

      // direct per-position sum through the raw path
      std::vector<int> inputs;
      inputs.push_back(bos);
      inputs.insert(inputs.end(), utt.begin(), utt.end());
      Matrix pred = raw_prediction_forward(ps, cfg, inputs, bos, blank);
      Matrix lprows(pred.rows(), cfg.vocab_size);
      for (long r = 0; r < pred.rows(); ++r)
        lprows.row(r) = raw_lm_log_probs(ps, cfg, pred.row(r)).row(0);
      direct_nll += nll_sum_raw(lprows, utt, eos);
    }
    CHECK(direct_nll / static_cast<double>(total) ==
          doctest::Approx(weighted / static_cast<double>(total)).epsilon(1e-10));
  }
}
