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

#include "rnnt/eval.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include "rnnt/losses.hpp"

namespace rnnt {

namespace {

// Accumulates one utterance's NLL given its per-position log-prob rows.
void accumulate(PerplexityReport& rep, const Matrix& log_probs, const std::vector<int>& tokens,
                const std::string& text, int eos_id) {
  rep.nll_sum += nll_sum_raw(log_probs, tokens, eos_id);
  rep.token_count += static_cast<long>(tokens.size()) + 1;
  rep.word_count += static_cast<long>(split_words(text).size());
}

Matrix pred_rows_for(const TransducerModel& model, const Vocab& vocab,
                     const std::vector<int>& tokens) {
  std::vector<int> inputs;
  inputs.reserve(tokens.size() + 1);
  inputs.push_back(vocab.bos_id());
  inputs.insert(inputs.end(), tokens.begin(), tokens.end());
  return raw_prediction_forward(model.params, model.cfg, inputs, vocab.bos_id(),
                                vocab.blank_id());
}

}  // namespace

nlohmann::json PerplexityReport::to_json() const {
  return {{"corpus_id", corpus_id},
          {"token_count", token_count},
          {"word_count", word_count},
          {"nll_sum", nll_sum},
          {"word_ppl", word_ppl()},
          {"piece_ppl", piece_ppl()},
          {"note", "nll includes one eos term per utterance; word_count excludes eos"}};
}

PerplexityReport word_level_perplexity(const std::vector<std::string>& texts,
                                       const TransducerModel& model, const Vocab& vocab,
                                       const std::string& corpus_id) {
  if (texts.empty()) throw Error("word_level_perplexity: empty corpus");
  if (!model.has_lm_head()) throw Error("word_level_perplexity: model has no LM head");
  PerplexityReport rep;
  rep.corpus_id = corpus_id;
  for (const std::string& text : texts) {
    std::vector<int> tokens = vocab.encode(text);
    Matrix pred = pred_rows_for(model, vocab, tokens);
    Matrix lp(pred.rows(), model.cfg.vocab_size);
    for (long r = 0; r < pred.rows(); ++r)
      lp.row(r) = raw_lm_log_probs(model.params, model.cfg, pred.row(r)).row(0);
    accumulate(rep, lp, tokens, text, vocab.eos_id());
  }
  return rep;
}

Eigen::RowVectorXd internal_lm_log_probs(const TransducerModel& model, const Vocab& vocab,
                                         const Eigen::RowVectorXd& pred_row) {
  Eigen::RowVectorXd zero_enc = Eigen::RowVectorXd::Zero(model.cfg.encoder_proj);
  Matrix logits = raw_joint_logits(model.params, model.cfg, zero_enc, pred_row);
  // drop blank, renormalize over the word pieces
  Matrix piece_logits = logits.leftCols(model.cfg.vocab_size);
  return log_softmax_rows_raw(piece_logits).row(0);
}

PerplexityReport internal_lm_perplexity(const std::vector<std::string>& texts,
                                        const TransducerModel& model, const Vocab& vocab,
                                        const std::string& corpus_id) {
  if (texts.empty()) throw Error("internal_lm_perplexity: empty corpus");
  PerplexityReport rep;
  rep.corpus_id = corpus_id;
  for (const std::string& text : texts) {
    std::vector<int> tokens = vocab.encode(text);
    Matrix pred = pred_rows_for(model, vocab, tokens);
    Matrix lp(pred.rows(), model.cfg.vocab_size);
    for (long r = 0; r < pred.rows(); ++r)
      lp.row(r) = internal_lm_log_probs(model, vocab, pred.row(r));
    accumulate(rep, lp, tokens, text, vocab.eos_id());
  }
  return rep;
}

nlohmann::json PplGrid::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (size_t r = 0; r < row_labels.size(); ++r) {
    nlohmann::json cells = nlohmann::json::object();
    for (size_t c = 0; c < corpus_labels.size(); ++c) {
      if (word_ppl[r][c])
        cells[corpus_labels[c]] = *word_ppl[r][c];
      else
        cells[corpus_labels[c]] = nullptr;
    }
    rows.push_back({{"model", row_labels[r]}, {"word_ppl", cells}});
  }
  return {{"rows", rows}, {"corpora", corpus_labels}};
}

std::string PplGrid::to_text_table() const {
  std::ostringstream os;
  size_t label_w = 8;
  for (const std::string& l : row_labels) label_w = std::max(label_w, l.size());
  os << std::left << std::setw(static_cast<int>(label_w) + 2) << "model";
  for (const std::string& c : corpus_labels) os << std::right << std::setw(12) << c;
  os << "\n";
  for (size_t r = 0; r < row_labels.size(); ++r) {
    os << std::left << std::setw(static_cast<int>(label_w) + 2) << row_labels[r];
    for (size_t c = 0; c < corpus_labels.size(); ++c) {
      if (word_ppl[r][c])
        os << std::right << std::setw(12) << std::fixed << std::setprecision(1)
           << *word_ppl[r][c];
      else
        os << std::right << std::setw(12) << "-";
    }
    os << "\n";
  }
  return os.str();
}

PplGrid perplexity_grid(const std::vector<GridStage>& stages,
                        const std::vector<std::pair<std::string, std::vector<std::string>>>& corpora,
                        const Vocab& vocab) {
  PplGrid grid;
  for (const auto& [label, texts] : corpora) grid.corpus_labels.push_back(label);
  for (const GridStage& stage : stages) {
    grid.row_labels.push_back(stage.label);
    std::vector<std::optional<double>> row;
    for (const auto& [label, texts] : corpora) {
      if (!stage.model) {
        row.push_back(std::nullopt);
        continue;
      }
      if (stage.internal_lm)
        row.push_back(internal_lm_perplexity(texts, *stage.model, vocab, label).word_ppl());
      else
        row.push_back(word_level_perplexity(texts, *stage.model, vocab, label).word_ppl());
    }
    grid.word_ppl.push_back(std::move(row));
  }
  return grid;
}

}  // namespace rnnt
