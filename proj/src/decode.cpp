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

#include "rnnt/decode.hpp"

#include <algorithm>
#include <limits>
#include <map>

namespace rnnt {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

bool better(double score_a, const std::vector<int>& tok_a, double score_b,
            const std::vector<int>& tok_b) {
  if (score_a != score_b) return score_a > score_b;
  return tok_a < tok_b;  // deterministic tie-break
}

}  // namespace

Eigen::RowVectorXd emission_log_probs(const TransducerModel& model, const Vocab& vocab,
                                      const Eigen::RowVectorXd& enc_row,
                                      const Eigen::RowVectorXd& pred_row) {
  Matrix logits = raw_joint_logits(model.params, model.cfg, enc_row, pred_row);
  logits(0, vocab.eos_id()) = kNegInf;
  return log_softmax_rows_raw(logits).row(0);
}

std::vector<int> greedy_decode(const TransducerModel& model, const Vocab& vocab,
                               const Matrix& features) {
  const Matrix enc = raw_encoder_forward(model.params, model.cfg, features);
  PredState state = pred_state_init(model.cfg);
  Eigen::RowVectorXd pred_row = pred_step(model.params, model.cfg, vocab.bos_id(), state);
  std::vector<int> tokens;
  const int blank = vocab.blank_id();
  const int cap = 10;
  for (long t = 0; t < enc.rows(); ++t) {
    int emitted = 0;
    while (true) {
      Eigen::RowVectorXd lp = emission_log_probs(model, vocab, enc.row(t), pred_row);
      int best;
      lp.maxCoeff(&best);
      if (best == blank || emitted >= cap) break;
      tokens.push_back(best);
      pred_row = pred_step(model.params, model.cfg, best, state);
      ++emitted;
    }
  }
  return tokens;
}

std::vector<Hypothesis> beam_search(const TransducerModel& model, const Vocab& vocab,
                                    const Matrix& features, const DecodeOptions& opts) {
  if (opts.beam_width < 1) throw Error("beam_search: beam_width must be >= 1");
  if (opts.fusion_weight < 0.0) throw Error("beam_search: fusion weight must be >= 0");
  if (opts.fusion_weight > 0.0 && opts.fusion_lm == nullptr)
    throw Error("beam_search: fusion weight set but no fusion LM given");

  const Matrix enc = raw_encoder_forward(model.params, model.cfg, features);
  const int blank = vocab.blank_id();
  const size_t W = static_cast<size_t>(opts.beam_width);

  struct Active {
    std::vector<int> tokens;
    double log_prob;
    PredState state;
    Eigen::RowVectorXd pred_row;
  };

  auto fused_token_score = [&](const std::vector<int>& history, int token) {
    // weighted external-LM score added per word-piece emission; blank adds
    // nothing. Skipped entirely at weight 0 so unfused decoding is
    // bit-identical with or without an LM loaded.
    if (opts.fusion_weight == 0.0) return 0.0;
    return opts.fusion_weight * opts.fusion_lm->log_prob(history, token);
  };

  PredState init_state = pred_state_init(model.cfg);
  Eigen::RowVectorXd init_row = pred_step(model.params, model.cfg, vocab.bos_id(), init_state);
  std::vector<Active> frontier;
  frontier.push_back({{}, 0.0, std::move(init_state), std::move(init_row)});

  // finished-at-this-frame hypotheses, merged by token sequence
  std::map<std::vector<int>, Active> finished;
  auto merge_finished = [&](Active&& a) {
    auto [it, inserted] = finished.try_emplace(a.tokens);
    if (inserted)
      it->second = std::move(a);
    else
      it->second.log_prob = ad::log_sum_exp(it->second.log_prob, a.log_prob);
  };

  for (long t = 0; t < enc.rows(); ++t) {
    finished.clear();
    int steps = 0;
    while (!frontier.empty()) {
      if (steps++ >= opts.max_symbols_per_frame) {
        // emission cap reached: close every survivor with a forced blank
        for (Active& a : frontier) {
          Eigen::RowVectorXd lp = emission_log_probs(model, vocab, enc.row(t), a.pred_row);
          a.log_prob += lp(blank);
          merge_finished(std::move(a));
        }
        break;
      }
      struct Candidate {
        size_t src;
        int token;  // blank = finish
        double score;
      };
      std::vector<Candidate> cands;
      for (size_t i = 0; i < frontier.size(); ++i) {
        Eigen::RowVectorXd lp = emission_log_probs(model, vocab, enc.row(t), frontier[i].pred_row);
        for (int k = 0; k < lp.size(); ++k) {
          if (lp(k) == kNegInf) continue;
          double s = frontier[i].log_prob + lp(k);
          if (k != blank) s += fused_token_score(frontier[i].tokens, k);
          cands.push_back({i, k, s});
        }
      }
      std::sort(cands.begin(), cands.end(), [&](const Candidate& a, const Candidate& b) {
        if (a.score != b.score) return a.score > b.score;
        if (frontier[a.src].tokens != frontier[b.src].tokens)
          return frontier[a.src].tokens < frontier[b.src].tokens;
        return a.token < b.token;
      });
      if (cands.size() > W) cands.resize(W);

      std::map<std::vector<int>, Active> next;
      for (const Candidate& c : cands) {
        const Active& src = frontier[c.src];
        if (c.token == blank) {
          Active fin{src.tokens, c.score, src.state, src.pred_row};
          merge_finished(std::move(fin));
        } else {
          std::vector<int> toks = src.tokens;
          toks.push_back(c.token);
          auto [it, inserted] = next.try_emplace(std::move(toks));
          if (inserted) {
            Active& ext = it->second;
            ext.tokens = it->first;
            ext.log_prob = c.score;
            ext.state = src.state;
            ext.pred_row = pred_step(model.params, model.cfg, c.token, ext.state);
          } else {
            it->second.log_prob = ad::log_sum_exp(it->second.log_prob, c.score);
          }
        }
      }
      frontier.clear();
      for (auto& [toks, a] : next) frontier.push_back(std::move(a));
    }

    // keep the best W finished hypotheses as the next frame's frontier
    std::vector<Active> survivors;
    survivors.reserve(finished.size());
    for (auto& [toks, a] : finished) survivors.push_back(std::move(a));
    std::sort(survivors.begin(), survivors.end(), [](const Active& a, const Active& b) {
      return better(a.log_prob, a.tokens, b.log_prob, b.tokens);
    });
    if (survivors.size() > W) survivors.resize(W);
    frontier = std::move(survivors);
  }

  std::vector<Hypothesis> out;
  out.reserve(frontier.size());
  for (Active& a : frontier)
    out.push_back({std::move(a.tokens), a.log_prob, std::move(a.state)});
  return out;
}

}  // namespace rnnt
