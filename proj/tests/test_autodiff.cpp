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

#include "doctest.h"
#include "rnnt/autodiff.hpp"
#include "rnnt/params.hpp"
#include "test_support.hpp"

using namespace rnnt;
using rnnt::testing::check_gradients;
using rnnt::testing::random_matrix;

TEST_CASE("grad of x^2 at x=3 is 6") {
  ParamSet ps;
  ps.add("x", Matrix::Constant(1, 1, 3.0));
  ParamSet g = gradient(ps, [](ad::Tape& t, const BoundParams& bp) {
    ad::Expr x = bp.at("x");
    return ad::mul(x, x);
  });
  CHECK(g.at("x")(0, 0) == doctest::Approx(6.0).epsilon(1e-12));
}

TEST_CASE("grad of x*y is (y, x)") {
  ParamSet ps;
  ps.add("x", Matrix::Constant(1, 1, 2.0));
  ps.add("y", Matrix::Constant(1, 1, 5.0));
  ParamSet g = gradient(ps, [](ad::Tape& t, const BoundParams& bp) {
    return ad::mul(bp.at("x"), bp.at("y"));
  });
  CHECK(g.at("x")(0, 0) == doctest::Approx(5.0));
  CHECK(g.at("y")(0, 0) == doctest::Approx(2.0));
}

TEST_CASE("every op matches central finite differences on random shapes") {
  Rng rng(7);
  auto run = [&](const char* name,
                 const std::function<ad::Expr(ad::Tape&, const BoundParams&)>& f,
                 ParamSet ps) {
    auto res = check_gradients(ps, f);
    INFO("op ", name, " worst param ", res.worst_param);
    CHECK(res.max_rel_err < 1e-4);
  };

  {
    ParamSet ps;
    ps.add("a", random_matrix(3, 4, rng));
    ps.add("b", random_matrix(3, 4, rng));
    run("add/mul/sub/scale", [](ad::Tape& t, const BoundParams& bp) {
      ad::Expr m = ad::mul(ad::add(bp.at("a"), bp.at("b")), ad::sub(bp.at("a"), bp.at("b")));
      return ad::sum(ad::scale(m, 0.7));
    }, ps);
  }
  {
    ParamSet ps;
    ps.add("a", random_matrix(3, 4, rng));
    ps.add("b", random_matrix(4, 2, rng));
    run("matmul", [](ad::Tape& t, const BoundParams& bp) {
      return ad::sum(ad::tanh_(ad::matmul(bp.at("a"), bp.at("b"))));
    }, ps);
  }
  {
    ParamSet ps;
    ps.add("x", random_matrix(5, 3, rng));
    ps.add("w", random_matrix(4, 3, rng));
    ps.add("b", random_matrix(4, 1, rng));
    run("linear+log_softmax", [](ad::Tape& t, const BoundParams& bp) {
      ad::Expr y = ad::log_softmax_rows(ad::linear(bp.at("x"), bp.at("w"), bp.at("b")));
      return ad::sum(ad::mul(y, y));
    }, ps);
  }
  {
    ParamSet ps;
    ps.add("x", random_matrix(4, 6, rng));
    ps.add("g", random_matrix(1, 6, rng, 0.5));
    ps.add("be", random_matrix(1, 6, rng, 0.5));
    run("layer_norm_rows", [](ad::Tape& t, const BoundParams& bp) {
      return ad::sum(ad::tanh_(ad::layer_norm_rows(bp.at("x"), bp.at("g"), bp.at("be"))));
    }, ps);
  }
  {
    ParamSet ps;
    ps.add("x", random_matrix(5, 4, rng));
    ps.add("v", random_matrix(1, 4, rng));
    run("add_rowvec/exp/log/sigmoid", [](ad::Tape& t, const BoundParams& bp) {
      ad::Expr y = ad::sigmoid(ad::add_rowvec(bp.at("x"), bp.at("v")));
      return ad::sum(ad::log_(ad::add(ad::exp_(y), y)));
    }, ps);
  }
  {
    ParamSet ps;
    ps.add("x", random_matrix(7, 3, rng));
    run("reduce_frames/rows/cols/pick", [](ad::Tape& t, const BoundParams& bp) {
      ad::Expr r = ad::reduce_frames(bp.at("x"), 2);  // odd length: pads last row
      ad::Expr s = ad::cols(r, 1, 4);
      ad::Expr p = ad::pick(r, 0, 0);
      return ad::add(ad::sum(ad::mul(s, s)), p);
    }, ps);
  }
  {
    ParamSet ps;
    ps.add("e", random_matrix(6, 3, rng));
    run("rows_select/vstack/gather", [](ad::Tape& t, const BoundParams& bp) {
      ad::Expr sel = ad::rows_select(bp.at("e"), {0, 2, 2, 5});  // duplicate row
      ad::Expr st = ad::vstack({sel, sel});
      ad::Expr g = ad::gather_rowwise(st, {0, 1, 2, 0, 1, 2, 0, 1});
      return ad::sum(ad::mul(g, g));
    }, ps);
  }
  {
    ParamSet ps;
    ps.add("x", random_matrix(2, 3, rng, 0.3));
    run("sqrt_guard/mean", [](ad::Tape& t, const BoundParams& bp) {
      ad::Expr sq = ad::sum(ad::mul(bp.at("x"), bp.at("x")));
      return ad::add(ad::sqrt_guard(sq), ad::mean(bp.at("x")));
    }, ps);
  }
}

TEST_CASE("gradients are deterministic bit-for-bit") {
  Rng rng(11);
  ParamSet ps;
  ps.add("w", random_matrix(5, 5, rng));
  ps.add("v", random_matrix(1, 5, rng));
  auto f = [](ad::Tape& t, const BoundParams& bp) {
    return ad::sum(ad::tanh_(ad::add_rowvec(ad::matmul(bp.at("w"), bp.at("w")), bp.at("v"))));
  };
  ParamSet g1 = gradient(ps, f);
  ParamSet g2 = gradient(ps, f);
  CHECK(g1.content_hash() == g2.content_hash());
}

TEST_CASE("non-finite loss names the first non-finite intermediate") {
  ParamSet ps;
  ps.add("x", Matrix::Constant(1, 1, -1.0));
  bool threw = false;
  try {
    gradient(ps, [](ad::Tape& t, const BoundParams& bp) {
      return ad::log_(bp.at("x"));  // log of a negative number
    });
  } catch (const Error& e) {
    threw = true;
    CHECK(std::string(e.what()).find("log") != std::string::npos);
  }
  CHECK(threw);
}

TEST_CASE("sgd_step basics") {
  ParamSet p, g;
  p.add("w", Matrix::Constant(1, 1, 1.0));
  g.add("w", Matrix::Constant(1, 1, 0.5));
  sgd_step(p, g, 0.1);
  CHECK(p.at("w")(0, 0) == doctest::Approx(0.95).epsilon(1e-15));

  SUBCASE("zero grads leave params unchanged") {
    ParamSet z;
    z.add("w", Matrix::Zero(1, 1));
    ParamSet before = p;
    sgd_step(p, z, 0.3);
    CHECK(p.at("w")(0, 0) == before.at("w")(0, 0));
  }
  SUBCASE("shape mismatch reported with names") {
    ParamSet bad;
    bad.add("w", Matrix::Zero(2, 2));
    bool threw = false;
    try {
      sgd_step(p, bad, 0.1);
    } catch (const Error& e) {
      threw = true;
      CHECK(std::string(e.what()).find("w") != std::string::npos);
    }
    CHECK(threw);
  }
}

TEST_CASE("100 sgd steps on x^2 converge per the closed form") {
  // x_{k+1} = x_k - 0.1 * 2 x_k = 0.8 x_k, so |x_100| = 0.8^100 < 1e-8
  ParamSet ps;
  ps.add("x", Matrix::Constant(1, 1, 1.0));
  for (int i = 0; i < 100; ++i) {
    ParamSet g = gradient(ps, [](ad::Tape& t, const BoundParams& bp) {
      return ad::mul(bp.at("x"), bp.at("x"));
    });
    sgd_step(ps, g, 0.1);
  }
  CHECK(std::abs(ps.at("x")(0, 0)) < 1e-8);
}

TEST_CASE("log_softmax values and stability") {
  ad::Tape tape;
  SUBCASE("[0, 0] gives log 0.5 twice") {
    ad::Expr y = ad::log_softmax_rows(tape.constant((Matrix(1, 2) << 0.0, 0.0).finished()));
    CHECK(y.value()(0, 0) == doctest::Approx(std::log(0.5)).epsilon(1e-14));
    CHECK(y.value()(0, 1) == doctest::Approx(std::log(0.5)).epsilon(1e-14));
  }
  SUBCASE("[1000, 0] stays finite and normalized") {
    ad::Expr y = ad::log_softmax_rows(tape.constant((Matrix(1, 2) << 1000.0, 0.0).finished()));
    CHECK(y.value().allFinite());
    CHECK(y.value().array().exp().sum() == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("random 10-vector matches a long-double oracle") {
    Rng rng(3);
    Matrix x = rnnt::testing::random_matrix(1, 10, rng, 3.0);
    ad::Expr y = ad::log_softmax_rows(tape.constant(x));
    long double denom = 0.0L;
    for (int i = 0; i < 10; ++i) denom += expl(static_cast<long double>(x(0, i)));
    for (int i = 0; i < 10; ++i) {
      long double expect = static_cast<long double>(x(0, i)) - logl(denom);
      CHECK(y.value()(0, i) == doctest::Approx(static_cast<double>(expect)).epsilon(1e-12));
    }
  }
  SUBCASE("exp sums to one per row on random matrices") {
    Rng rng(9);
    Matrix x = rnnt::testing::random_matrix(6, 13, rng, 5.0);
    ad::Expr y = ad::log_softmax_rows(tape.constant(x));
    for (long r = 0; r < 6; ++r)
      CHECK(y.value().row(r).array().exp().sum() == doctest::Approx(1.0).epsilon(1e-12));
  }
}
