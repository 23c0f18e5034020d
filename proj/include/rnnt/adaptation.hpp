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

#ifndef RNNT_ADAPTATION_HPP
#define RNNT_ADAPTATION_HPP

#include <string>
#include <vector>

#include "rnnt/model.hpp"
#include "rnnt/training.hpp"
#include "rnnt/vocab.hpp"

namespace rnnt {

// Text-only fine-tuning of the prediction network P through the fixed LM
// head L, regularized towards the unadapted snapshot P*:
//
//   loss = mean CE(D_a)  +  w_b * mean KLD(L(P(.)) || L(P*(.))) over D_b
//        + w_n * ||P - P*||_2
//
// D_b is sampled once from the unadapted LM before any update, one
// utterance per adaptation utterance, with matched token budget.
struct AdaptationConfig {
  double w_b = 0.8;
  double w_n = 0.05;
  double lr = 0.01;
  double lr_decay = 0.98;
  // stop once ||P - P*||_2 exceeds this (checked after each epoch)
  double max_norm_change = 1.5;
  int max_epochs = 60;
  uint64_t seed = 1;
  int max_sample_length = 24;
  // per-utterance CE normalization; "mean" divides by tokens + eos
  bool ce_sum_per_utterance = false;
};

struct AdaptEpochStats {
  int epoch = 0;
  double ce = 0.0;          // mean CE term over D_a
  double balancing = 0.0;   // mean KLD term over D_b
  double norm_penalty = 0.0;
  double norm_change = 0.0;  // ||P - P*||_2 after the epoch
};

struct AdaptReport {
  std::vector<AdaptEpochStats> epochs;
  std::string stopping_reason;  // "norm_threshold" | "max_epochs"
  int sampled_utterances = 0;
};

// Samples one utterance from the LM induced by P (through L) per entry of
// lengths: temperature 1, bos-started, stopping at eos or the matched token
// count (capped at max_len). Deterministic given seed.
std::vector<std::vector<int>> sample_balancing_set(const TransducerModel& model,
                                                   const Vocab& vocab,
                                                   const std::vector<int>& lengths, uint64_t seed,
                                                   int max_len);

// Convenience overload: lengths taken from the encoded adaptation texts.
std::vector<std::vector<int>> sample_balancing_set(const TransducerModel& model,
                                                   const Vocab& vocab,
                                                   const std::vector<std::string>& adaptation_texts,
                                                   uint64_t seed, int max_len);

// Eq.-style balancing term for one utterance: (1/n) * sum_i KLD(p_i || p*_i)
// with p from the tape-bound P and p* precomputed rows (n x V constants).
// Gradients flow only into P (L enters as fixed weights).
ad::Expr balancing_loss(ad::Tape& tape, const BoundParams& bp, const ModelConfig& cfg,
                        const std::vector<int>& tokens, const Matrix& reference_log_probs,
                        int bos_id, int blank_id);

// n x V reference rows L(P*(.)) for the prefix positions of tokens.
Matrix reference_log_prob_rows(const TransducerModel& model, const Vocab& vocab,
                               const std::vector<int>& tokens);

// ||P - P*||_2 over the tape-bound prediction parameters.
ad::Expr norm_penalty(ad::Tape& tape, const BoundParams& bp, const ParamSet& snapshot);

// The three-term adaptation objective:
// mean CE over batch_a + w_b * mean balancing loss over batch_b + w_n * norm.
ad::Expr adaptation_loss(ad::Tape& tape, const BoundParams& bp, const ModelConfig& cfg,
                         const std::vector<std::vector<int>>& batch_a,
                         const std::vector<std::vector<int>>& batch_b,
                         const std::vector<Matrix>& reference_rows_b, const ParamSet& snapshot,
                         const AdaptationConfig& cfg_a, const Vocab& vocab);

// Runs the adaptation loop; returns the adapted model (encoder, joint and L
// byte-identical to the input). Requires the LM head.
TransducerModel adapt(const TransducerModel& model, const Vocab& vocab,
                      const std::vector<std::string>& adaptation_texts,
                      const AdaptationConfig& cfg, AdaptReport* report = nullptr);

}  // namespace rnnt

#endif  // RNNT_ADAPTATION_HPP
