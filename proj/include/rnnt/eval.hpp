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

#ifndef RNNT_EVAL_HPP
#define RNNT_EVAL_HPP

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "rnnt/model.hpp"
#include "rnnt/vocab.hpp"

namespace rnnt {

// Word-level perplexity bookkeeping: NLL is summed over word pieces plus one
// eos term per utterance; the exponent divides by the whitespace word count
// of the raw text (eos counted in NLL, never as a word). piece_ppl
// normalizes by token_count instead (tokens + eos).
struct PerplexityReport {
  std::string corpus_id;
  long token_count = 0;  // word pieces + one eos per utterance
  long word_count = 0;
  double nll_sum = 0.0;

  double word_ppl() const { return std::exp(nll_sum / static_cast<double>(word_count)); }
  double piece_ppl() const { return std::exp(nll_sum / static_cast<double>(token_count)); }
  nlohmann::json to_json() const;
};

// Perplexity of the LM formed by P and the LM head L.
PerplexityReport word_level_perplexity(const std::vector<std::string>& texts,
                                       const TransducerModel& model, const Vocab& vocab,
                                       const std::string& corpus_id = "");

// Perplexity of the "internal LM": the joint-network softmax fed with a
// zero encoder vector, renormalized over the non-blank outputs.
PerplexityReport internal_lm_perplexity(const std::vector<std::string>& texts,
                                        const TransducerModel& model, const Vocab& vocab,
                                        const std::string& corpus_id = "");

// Next-piece log-distribution of the internal LM for one P output row.
Eigen::RowVectorXd internal_lm_log_probs(const TransducerModel& model, const Vocab& vocab,
                                         const Eigen::RowVectorXd& pred_row);

// Stage-by-corpus perplexity grid: rows the model stages (initializing LM,
// transducer with old/new head, adapted, uninitialized-P ablation, internal
// LM), columns the evaluation corpora. Missing stages leave explicit gaps.
struct PplGrid {
  std::vector<std::string> row_labels;
  std::vector<std::string> corpus_labels;
  std::vector<std::vector<std::optional<double>>> word_ppl;  // [row][corpus]

  nlohmann::json to_json() const;
  std::string to_text_table() const;
};

struct GridStage {
  std::string label;
  std::optional<TransducerModel> model;
  bool internal_lm = false;  // score through the joint instead of L
};

PplGrid perplexity_grid(const std::vector<GridStage>& stages,
                        const std::vector<std::pair<std::string, std::vector<std::string>>>& corpora,
                        const Vocab& vocab);

}  // namespace rnnt

#endif  // RNNT_EVAL_HPP
