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

#ifndef RNNT_CORPUS_HPP
#define RNNT_CORPUS_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rnnt/autodiff.hpp"
#include "rnnt/common.hpp"

namespace rnnt {

using ad::Matrix;

// Weighted template grammar over a small word list. Domains "a" (general)
// and "b" (in-domain) share most of their words but differ in phrase
// structure; "pretrain" is a broader mix used to initialize the prediction
// network as an LM.
struct DomainSpec {
  std::string domain;       // "pretrain" | "a" | "b"
  uint64_t seed = 1;
  int feature_dim = 16;
  int frames_per_char = 3;  // r
  double noise_sigma = 0.1;
  int tail_jitter_max = 2;  // trailing silence frames, uniform in [0, max]

  // Words used by the domain's grammar (terminal inventory).
  std::vector<std::string> word_inventory() const;
};

struct SyntheticUtterance {
  std::string id;
  std::string text;
  std::string domain;
  std::optional<Matrix> features;  // T x F, present for paired data
};

// Samples one utterance text from the domain grammar.
std::string sample_text(const DomainSpec& spec, Rng& rng);

// Deterministic feature synthesis: each character contributes
// frames_per_char frames of its embedding template, a short silence tail is
// appended, and N(0, sigma) noise is added to every cell. Same text + seed
// gives identical features.
Matrix synth_features(const DomainSpec& spec, const std::string& text, uint64_t utt_seed);

// Reference template (noise-free) for the same text and seed.
Matrix synth_feature_template(const DomainSpec& spec, const std::string& text, uint64_t utt_seed);

// Generates n utterances; paired emits features + text, otherwise text only.
std::vector<SyntheticUtterance> gen_corpus(const DomainSpec& spec, int n_utts, bool paired);

// SpecAugment-style masking: zeroes time_masks random time bands of width
// <= max_time_width and freq_masks feature bands of width <= max_freq_width.
// Training-only; evaluation must never call this.
void feature_mask(Matrix& features, int time_masks, int max_time_width, int freq_masks,
                  int max_freq_width, Rng& rng);

// Manifest: JSON lines {utterance_id, text, domain, provenance,
// features (base64 little-endian f32) | null}.
void save_manifest(const std::string& path, const std::vector<SyntheticUtterance>& utts);
std::vector<SyntheticUtterance> load_manifest(const std::string& path);

// Plain UTF-8 text, one utterance per line (adaptation sets).
void save_text_lines(const std::string& path, const std::vector<std::string>& lines);
std::vector<std::string> load_text_lines(const std::string& path);

// Unigram KL divergence between the word distributions of two text sets.
double unigram_kl(const std::vector<std::string>& a, const std::vector<std::string>& b);

}  // namespace rnnt

#endif  // RNNT_CORPUS_HPP
