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

#ifndef RNNT_DECODE_HPP
#define RNNT_DECODE_HPP

#include <optional>
#include <vector>

#include "rnnt/model.hpp"
#include "rnnt/ngram.hpp"
#include "rnnt/vocab.hpp"

namespace rnnt {

// One decoding beam entry. log_prob is the merged (log-sum-exp over
// alignments) transducer score plus, under fusion, the weighted LM score.
struct Hypothesis {
  std::vector<int> tokens;
  double log_prob = 0.0;
  PredState pred_state;
};

struct DecodeOptions {
  int beam_width = 5;
  int max_symbols_per_frame = 10;  // guards nontermination
  double fusion_weight = 0.0;      // lambda; 0 = no fusion
  const NGramLM* fusion_lm = nullptr;
};

// Frame-synchronous greedy decoding: argmax over blank + pieces at each
// step; blank advances the frame, a piece advances the prediction network.
std::vector<int> greedy_decode(const TransducerModel& model, const Vocab& vocab,
                               const Matrix& features);

// Time-synchronous beam search. Hypotheses with identical token sequences
// are merged by log-sum-exp; per expansion step the top beam_width
// candidates (finished-with-blank and extended alike) survive, which makes
// beam_width = 1 coincide with greedy_decode. Returns the n-best sorted by
// score (ties broken on the token sequence).
std::vector<Hypothesis> beam_search(const TransducerModel& model, const Vocab& vocab,
                                    const Matrix& features, const DecodeOptions& opts = {});

// Per-(frame, hypothesis) emission scores: log-softmax over blank + pieces
// with the eos piece masked out (it is an LM output class, not an emittable
// symbol). Exposed so search oracles can score identically.
Eigen::RowVectorXd emission_log_probs(const TransducerModel& model, const Vocab& vocab,
                                      const Eigen::RowVectorXd& enc_row,
                                      const Eigen::RowVectorXd& pred_row);

}  // namespace rnnt

#endif  // RNNT_DECODE_HPP
