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

#include "rnnt/adaptation.hpp"

#include <cmath>

#include "rnnt/losses.hpp"

namespace rnnt {

std::vector<std::vector<int>> sample_balancing_set(const TransducerModel& model,
                                                   const Vocab& vocab,
                                                   const std::vector<int>& lengths, uint64_t seed,
                                                   int max_len) {
  if (!model.has_lm_head())
    throw Error("sample_balancing_set: model has no LM head");
  Rng rng(derive_seed(seed, "balancing-sample"));
  std::vector<std::vector<int>> out;
  out.reserve(lengths.size());
  for (int want : lengths) {
    const int budget = std::min(want, max_len);
    PredState st = pred_state_init(model.cfg);
    Eigen::RowVectorXd row = pred_step(model.params, model.cfg, vocab.bos_id(), st);
    std::vector<int> sampled;
    while (static_cast<int>(sampled.size()) < budget) {
      Matrix lp = raw_lm_log_probs(model.params, model.cfg, row);
      // inverse-CDF draw at temperature 1
      double x = rng.uniform();
      int pick = model.cfg.vocab_size - 1;
      double acc = 0.0;
      for (int k = 0; k < model.cfg.vocab_size; ++k) {
        acc += std::exp(lp(0, k));
        if (x < acc) {
          pick = k;
          break;
        }
      }
      if (pick == vocab.eos_id()) break;
      sampled.push_back(pick);
      row = pred_step(model.params, model.cfg, pick, st);
    }
    out.push_back(std::move(sampled));
  }
  return out;
}

std::vector<std::vector<int>> sample_balancing_set(const TransducerModel& model,
                                                   const Vocab& vocab,
                                                   const std::vector<std::string>& adaptation_texts,
                                                   uint64_t seed, int max_len) {
  std::vector<int> lengths;
  lengths.reserve(adaptation_texts.size());
  for (const std::string& t : adaptation_texts)
    lengths.push_back(static_cast<int>(vocab.encode(t).size()));
  return sample_balancing_set(model, vocab, lengths, seed, max_len);
}

Matrix reference_log_prob_rows(const TransducerModel& model, const Vocab& vocab,
                               const std::vector<int>& tokens) {
  std::vector<int> inputs;
  inputs.reserve(tokens.size() + 1);
  inputs.push_back(vocab.bos_id());
  // prefix inputs bos, x_1 .. x_{n-1}: one prediction position per token
  for (size_t i = 0; i + 1 < tokens.size(); ++i) inputs.push_back(tokens[i]);
  Matrix pred = raw_prediction_forward(model.params, model.cfg, inputs, vocab.bos_id(),
                                       vocab.blank_id());
  Matrix lp(pred.rows(), model.cfg.vocab_size);
  for (long r = 0; r < pred.rows(); ++r)
    lp.row(r) = raw_lm_log_probs(model.params, model.cfg, pred.row(r)).row(0);
  return lp;
}

ad::Expr balancing_loss(ad::Tape& tape, const BoundParams& bp, const ModelConfig& cfg,
                        const std::vector<int>& tokens, const Matrix& reference_log_probs,
                        int bos_id, int blank_id) {
  using namespace ad;
  if (tokens.empty()) throw Error("balancing_loss: empty utterance");
  const long n = static_cast<long>(tokens.size());
  if (reference_log_probs.rows() != n)
    throw Error("balancing_loss: reference rows do not match token count");
  std::vector<int> inputs;
  inputs.reserve(tokens.size());
  inputs.push_back(bos_id);
  for (size_t i = 0; i + 1 < tokens.size(); ++i) inputs.push_back(tokens[i]);
  Expr pred = prediction_forward(tape, bp, cfg, inputs, bos_id, blank_id);
  Expr log_p = lm_head_log_probs(tape, bp, pred);  // n x V, adapted branch
  Expr log_q = tape.constant(reference_log_probs); // n x V, frozen snapshot
  // KLD(p || p*) = sum_k exp(log p_k) * (log p_k - log p*_k), per row
  Expr kld_terms = mul(exp_(log_p), sub(log_p, log_q));
  return scale(sum(kld_terms), 1.0 / static_cast<double>(n));
}

ad::Expr norm_penalty(ad::Tape& tape, const BoundParams& bp, const ParamSet& snapshot) {
  using namespace ad;
  Expr acc = tape.constant_scalar(0.0);
  bool any = false;
  for (const std::string& name : snapshot.names()) {
    if (!bp.has(name))
      throw Error("norm_penalty: bound params missing '" + name + "'");
    Expr p = bp.at(name);
    const Matrix& ref = snapshot.at(name);
    if (p.rows() != ref.rows() || p.cols() != ref.cols())
      throw Error("norm_penalty: shape mismatch for '" + name + "'");
    Expr d = sub(p, tape.constant(ref));
    acc = add(acc, sum(mul(d, d)));
    any = true;
  }
  if (!any) throw Error("norm_penalty: empty snapshot");
  return sqrt_guard(acc);
}

ad::Expr adaptation_loss(ad::Tape& tape, const BoundParams& bp, const ModelConfig& cfg,
                         const std::vector<std::vector<int>>& batch_a,
                         const std::vector<std::vector<int>>& batch_b,
                         const std::vector<Matrix>& reference_rows_b, const ParamSet& snapshot,
                         const AdaptationConfig& cfg_a, const Vocab& vocab) {
  using namespace ad;
  if (batch_a.empty()) throw Error("adaptation_loss: empty adaptation batch");
  if (batch_b.size() != reference_rows_b.size())
    throw Error("adaptation_loss: balancing batch and reference rows disagree");

  Expr ce_acc = tape.constant_scalar(0.0);
  for (const std::vector<int>& toks : batch_a) {
    Expr ce = lm_cross_entropy(tape, bp, cfg, toks, vocab.bos_id(), vocab.blank_id(),
                               vocab.eos_id());
    if (cfg_a.ce_sum_per_utterance) ce = scale(ce, static_cast<double>(toks.size() + 1));
    ce_acc = add(ce_acc, ce);
  }
  Expr loss = scale(ce_acc, 1.0 / static_cast<double>(batch_a.size()));

  if (cfg_a.w_b > 0.0 && !batch_b.empty()) {
    Expr lb_acc = tape.constant_scalar(0.0);
    int counted = 0;
    for (size_t i = 0; i < batch_b.size(); ++i) {
      if (batch_b[i].empty()) continue;
      lb_acc = add(lb_acc, balancing_loss(tape, bp, cfg, batch_b[i], reference_rows_b[i],
                                          vocab.bos_id(), vocab.blank_id()));
      ++counted;
    }
    if (counted > 0)
      loss = add(loss, scale(lb_acc, cfg_a.w_b / static_cast<double>(counted)));
  }
  if (cfg_a.w_n > 0.0) loss = add(loss, scale(norm_penalty(tape, bp, snapshot), cfg_a.w_n));
  return loss;
}

TransducerModel adapt(const TransducerModel& model, const Vocab& vocab,
                      const std::vector<std::string>& adaptation_texts,
                      const AdaptationConfig& cfg, AdaptReport* report) {
  if (!model.has_lm_head())
    throw Error("adapt: model has no LM head; run the train-lm-head pre-processing step first");
  if (adaptation_texts.empty()) throw Error("adapt: empty adaptation set");

  std::vector<std::vector<int>> tokens_a;
  tokens_a.reserve(adaptation_texts.size());
  for (const std::string& t : adaptation_texts) {
    std::vector<int> toks = vocab.encode(t);
    if (toks.empty()) throw Error("adapt: empty utterance in adaptation set");
    tokens_a.push_back(std::move(toks));
  }

  // D_b: drawn once from the unadapted LM, before any parameter update.
  std::vector<std::vector<int>> tokens_b =
      sample_balancing_set(model, vocab, adaptation_texts, cfg.seed, cfg.max_sample_length);

  // P* and the D_b reference distributions are fixed for the whole run.
  const ParamSet snapshot = model.params.subset("prediction.");
  std::vector<Matrix> reference_rows(tokens_b.size());
  for (size_t i = 0; i < tokens_b.size(); ++i)
    if (!tokens_b[i].empty()) reference_rows[i] = reference_log_prob_rows(model, vocab, tokens_b[i]);

  TransducerModel adapted = model;
  ParamSet trainable = adapted.params.subset("prediction.");
  // the head stays frozen but P's forward pass needs its weights on the tape
  ParamSet head = adapted.params.subset("lm_head.");

  AdaptReport local;
  AdaptReport& rep = report ? *report : local;
  rep.epochs.clear();
  rep.stopping_reason = "max_epochs";
  rep.sampled_utterances = static_cast<int>(tokens_b.size());

  Rng shuffle_rng(derive_seed(cfg.seed, "adapt-shuffle"));
  const int n = static_cast<int>(tokens_a.size());
  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    const double lr = cfg.lr * std::pow(cfg.lr_decay, epoch);
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    shuffle_rng.shuffle(order);

    AdaptEpochStats st;
    st.epoch = epoch;
    for (int i : order) {
      ad::Tape tape;
      ParamSet step_params = trainable;
      step_params.update_from(head);
      BoundParams bp = bind(tape, step_params);

      ad::Expr ce = lm_cross_entropy(tape, bp, adapted.cfg, tokens_a[i], vocab.bos_id(),
                                     vocab.blank_id(), vocab.eos_id());
      if (cfg.ce_sum_per_utterance)
        ce = ad::scale(ce, static_cast<double>(tokens_a[i].size() + 1));
      ad::Expr loss = ce;
      double lb_val = 0.0;
      if (cfg.w_b > 0.0 && !tokens_b[i].empty()) {
        ad::Expr lb = balancing_loss(tape, bp, adapted.cfg, tokens_b[i], reference_rows[i],
                                     vocab.bos_id(), vocab.blank_id());
        lb_val = lb.scalar();
        loss = ad::add(loss, ad::scale(lb, cfg.w_b));
      }
      ad::Expr ln = norm_penalty(tape, bp, snapshot);
      if (cfg.w_n > 0.0) loss = ad::add(loss, ad::scale(ln, cfg.w_n));

      tape.backward(loss);
      ParamSet grads = collect_grads(tape, bp, {"prediction."});
      sgd_step(trainable, grads, lr);

      st.ce += ce.scalar();
      st.balancing += lb_val;
      st.norm_penalty += ln.scalar();
    }
    st.ce /= n;
    st.balancing /= n;
    st.norm_penalty /= n;
    st.norm_change = trainable.l2_distance(snapshot);
    rep.epochs.push_back(st);

    if (st.norm_change > cfg.max_norm_change) {
      rep.stopping_reason = "norm_threshold";
      break;
    }
  }

  adapted.params.update_from(trainable);
  return adapted;
}

}  // namespace rnnt
