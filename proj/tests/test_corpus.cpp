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

#include <cstdio>
#include <fstream>
#include <set>
#include <unistd.h>

#include "doctest.h"
#include "rnnt/corpus.hpp"

using namespace rnnt;

TEST_CASE("generation is deterministic: same spec and seed, identical manifest bytes") {
  DomainSpec spec;
  spec.domain = "a";
  spec.seed = 17;
  std::string p1 = "/tmp/rnnt_manifest_a_" + std::to_string(::getpid()) + ".jsonl";
  std::string p2 = "/tmp/rnnt_manifest_b_" + std::to_string(::getpid()) + ".jsonl";
  save_manifest(p1, gen_corpus(spec, 20, true));
  save_manifest(p2, gen_corpus(spec, 20, true));
  std::ifstream f1(p1), f2(p2);
  std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(s1 == s2);
  CHECK(!s1.empty());
  std::remove(p1.c_str());
  std::remove(p2.c_str());
}

TEST_CASE("domains are distinguishable but share most words") {
  DomainSpec sa{.domain = "a", .seed = 3};
  DomainSpec sb{.domain = "b", .seed = 4};
  std::vector<std::string> ta, tb;
  for (const auto& u : gen_corpus(sa, 400, false)) ta.push_back(u.text);
  for (const auto& u : gen_corpus(sb, 400, false)) tb.push_back(u.text);
  CHECK(unigram_kl(ta, tb) > 0.1);

  std::set<std::string> wa, wb, inter;
  for (const std::string& w : sa.word_inventory()) wa.insert(w);
  for (const std::string& w : sb.word_inventory()) wb.insert(w);
  for (const std::string& w : wa)
    if (wb.count(w)) inter.insert(w);
  CHECK(static_cast<double>(inter.size()) >= 0.8 * static_cast<double>(wa.size()));
  CHECK(static_cast<double>(inter.size()) >= 0.8 * static_cast<double>(wb.size()));
}

TEST_CASE("zero noise reproduces the template exactly") {
  DomainSpec spec;
  spec.domain = "b";
  spec.seed = 8;
  spec.noise_sigma = 0.0;
  Matrix feats = synth_features(spec, "please finds the cat", 1234);
  Matrix tmpl = synth_feature_template(spec, "please finds the cat", 1234);
  CHECK((feats - tmpl).cwiseAbs().maxCoeff() == 0.0);
  CHECK(feats.rows() >= spec.frames_per_char * 20);
}

TEST_CASE("manifest round-trips text, domain and features") {
  DomainSpec spec;
  spec.domain = "a";
  spec.seed = 5;
  auto utts = gen_corpus(spec, 5, true);
  std::string path = "/tmp/rnnt_manifest_rt_" + std::to_string(::getpid()) + ".jsonl";
  save_manifest(path, utts);
  auto loaded = load_manifest(path);
  std::remove(path.c_str());
  REQUIRE(loaded.size() == utts.size());
  for (size_t i = 0; i < utts.size(); ++i) {
    CHECK(loaded[i].text == utts[i].text);
    CHECK(loaded[i].domain == "a");
    REQUIRE(loaded[i].features.has_value());
    // f32 storage: equality within float precision
    CHECK((*loaded[i].features - *utts[i].features).cwiseAbs().maxCoeff() < 1e-5);
  }
}

TEST_CASE("feature masking") {
  SUBCASE("zero masks is the identity") {
    Matrix m = Matrix::Ones(10, 8);
    Rng rng(1);
    feature_mask(m, 0, 0, 0, 0, rng);
    CHECK(m.sum() == doctest::Approx(80.0));
  }
  SUBCASE("masked cell count equals the union of the drawn bands") {
    Matrix m = Matrix::Ones(30, 12);
    Rng rng(7);
    feature_mask(m, 2, 4, 1, 3, rng);
    // independent count: replay the same draws on an index grid
    Rng rng2(7);
    std::set<long> dead_rows, dead_cols;
    for (int k = 0; k < 2; ++k) {
      int w = rng2.uniform_int(5);
      if (w == 0) continue;
      int start = rng2.uniform_int(30 - w + 1);
      for (int r = start; r < start + w; ++r) dead_rows.insert(r);
    }
    for (int k = 0; k < 1; ++k) {
      int w = rng2.uniform_int(4);
      if (w == 0) continue;
      int start = rng2.uniform_int(12 - w + 1);
      for (int c = start; c < start + w; ++c) dead_cols.insert(c);
    }
    long expect_zeros = static_cast<long>(dead_rows.size()) * 12 +
                        static_cast<long>(dead_cols.size()) * (30 - static_cast<long>(dead_rows.size()));
    long zeros = 0;
    for (long r = 0; r < 30; ++r)
      for (long c = 0; c < 12; ++c)
        if (m(r, c) == 0.0) ++zeros;
    CHECK(zeros == expect_zeros);
  }
  SUBCASE("mask wider than the axis is an error") {
    Matrix m = Matrix::Ones(4, 4);
    Rng rng(1);
    CHECK_THROWS_AS(feature_mask(m, 1, 4, 0, 0, rng), Error);
  }
}
