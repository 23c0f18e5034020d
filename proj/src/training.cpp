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

#include "rnnt/training.hpp"

#include <cmath>

#include "rnnt/losses.hpp"

namespace rnnt {

namespace {

// Shared SGD epoch driver. step(i) builds the tape for example i and returns
// (loss value, grads for the trainable subset).
TrainReport run_epochs(
    int n_examples, const TrainConfig& cfg, ParamSet& trainable,
    const std::function<double(int example, ParamSet* grads)>& step,
    const std::function<std::optional<double>()>& dev_eval) {
  TrainReport report;
  Rng shuffle_rng(derive_seed(cfg.seed, "epoch-shuffle"));
  double best_dev = std::numeric_limits<double>::infinity();
  int since_best = 0;
  report.stop_reason = "max_epochs";
  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    const double lr = cfg.lr * std::pow(cfg.lr_decay, epoch);
    std::vector<int> order(n_examples);
    for (int i = 0; i < n_examples; ++i) order[i] = i;
    shuffle_rng.shuffle(order);

    double total = 0.0;
    for (int i : order) {
      ParamSet grads;
      total += step(i, &grads);
      if (cfg.clip_norm > 0.0) {
        double gnorm = grads.l2_norm();
        if (gnorm > cfg.clip_norm)
          for (const std::string& n : grads.names()) grads.at(n) *= cfg.clip_norm / gnorm;
      }
      sgd_step(trainable, grads, lr);
    }
    EpochStats st;
    st.epoch = epoch;
    st.train_loss = total / std::max(1, n_examples);
    st.dev_loss = dev_eval();
    report.epochs.push_back(st);

    if (cfg.patience > 0 && st.dev_loss) {
      if (*st.dev_loss < best_dev - 1e-9) {
        best_dev = *st.dev_loss;
        since_best = 0;
      } else if (++since_best >= cfg.patience) {
        report.stop_reason = "dev_patience";
        break;
      }
    }
  }
  return report;
}

Matrix masked_features(const SyntheticUtterance& u, const TrainConfig& cfg, Rng& rng) {
  if (!u.features) throw Error("training: utterance '" + u.id + "' has no features (text_only manifest?)");
  Matrix feats = *u.features;
  if (cfg.time_masks > 0 || cfg.freq_masks > 0)
    feature_mask(feats, cfg.time_masks, cfg.max_time_width, cfg.freq_masks, cfg.max_freq_width, rng);
  return feats;
}

}  // namespace

TrainReport pretrain_lm(TransducerModel& model, const Vocab& vocab,
                        const std::vector<std::string>& texts, const TrainConfig& cfg) {
  if (texts.empty()) throw Error("pretrain_lm: empty text set");
  std::vector<std::vector<int>> encoded;
  encoded.reserve(texts.size());
  for (const std::string& t : texts) encoded.push_back(vocab.encode(t));

  if (!model.has_lm_head())
    model.params.update_from(init_lm_head(model.cfg, derive_seed(cfg.seed, "lm-head-init")));
  ParamSet trainable = model.params.subset("prediction.");
  trainable.update_from(model.params.subset("lm_head."));

  auto step = [&](int i, ParamSet* grads) {
    ad::Tape tape;
    BoundParams bp = bind(tape, trainable);
    ad::Expr loss = lm_cross_entropy(tape, bp, model.cfg, encoded[i], vocab.bos_id(),
                                     vocab.blank_id(), vocab.eos_id());
    tape.backward(loss);
    *grads = collect_grads(tape, bp);
    return loss.scalar();
  };
  TrainReport report = run_epochs(static_cast<int>(encoded.size()), cfg, trainable, step,
                                  [] { return std::optional<double>(); });
  model.params.update_from(trainable);
  return report;
}

TrainReport train_ctc(TransducerModel& model, const Vocab& vocab,
                      const std::vector<SyntheticUtterance>& train,
                      const std::vector<SyntheticUtterance>& dev, const TrainConfig& cfg) {
  if (train.empty()) throw Error("train_ctc: empty training set");
  std::vector<std::vector<int>> targets;
  targets.reserve(train.size());
  for (const SyntheticUtterance& u : train) targets.push_back(vocab.encode(u.text));

  ParamSet trainable = model.params.subset("encoder.");
  trainable.update_from(model.params.subset("ctc_head."));
  Rng mask_rng(derive_seed(cfg.seed, "spec-augment"));

  auto frame_log_probs = [&](ad::Tape& tape, const BoundParams& bp, const Matrix& feats) {
    ad::Expr enc = encoder_forward(tape, bp, model.cfg, feats);
    return ad::log_softmax_rows(ad::linear(enc, bp.at("ctc_head.w"), bp.at("ctc_head.b")));
  };

  auto step = [&](int i, ParamSet* grads) {
    ad::Tape tape;
    BoundParams bp = bind(tape, trainable);
    Matrix feats = masked_features(train[i], cfg, mask_rng);
    ad::Expr loss = ctc_loss(tape, frame_log_probs(tape, bp, feats), targets[i], vocab.blank_id());
    tape.backward(loss);
    *grads = collect_grads(tape, bp);
    return loss.scalar();
  };

  auto dev_eval = [&]() -> std::optional<double> {
    if (dev.empty()) return std::nullopt;
    double total = 0.0;
    ad::Tape tape;
    for (const SyntheticUtterance& u : dev) {
      tape.reset();
      BoundParams bp = bind(tape, trainable);
      if (!u.features) throw Error("train_ctc: dev utterance without features");
      ad::Expr lp = frame_log_probs(tape, bp, *u.features);
      total += ctc_loss_value(lp.value(), vocab.encode(u.text), vocab.blank_id());
    }
    return total / static_cast<double>(dev.size());
  };

  TrainReport report =
      run_epochs(static_cast<int>(train.size()), cfg, trainable, step, dev_eval);
  model.params.update_from(trainable);
  return report;
}

TrainReport train_rnnt(TransducerModel& model, const Vocab& vocab,
                       const std::vector<SyntheticUtterance>& train,
                       const std::vector<SyntheticUtterance>& dev, const TrainConfig& cfg) {
  if (train.empty()) throw Error("train_rnnt: empty training set");
  std::vector<std::vector<int>> targets;
  targets.reserve(train.size());
  for (const SyntheticUtterance& u : train) targets.push_back(vocab.encode(u.text));

  ParamSet trainable = model.params.subset("encoder.");
  trainable.update_from(model.params.subset("prediction."));
  trainable.update_from(model.params.subset("joint."));
  Rng mask_rng(derive_seed(cfg.seed, "spec-augment"));

  auto step = [&](int i, ParamSet* grads) {
    ad::Tape tape;
    BoundParams bp = bind(tape, trainable);
    Matrix feats = masked_features(train[i], cfg, mask_rng);
    std::vector<ad::Expr> lattice =
        transducer_lattice(tape, bp, model.cfg, feats, targets[i], vocab.bos_id(), vocab.blank_id());
    ad::Expr loss = rnnt_loss(tape, lattice, targets[i], vocab.blank_id());
    tape.backward(loss);
    *grads = collect_grads(tape, bp);
    return loss.scalar();
  };

  auto dev_eval = [&]() -> std::optional<double> {
    if (dev.empty()) return std::nullopt;
    double total = 0.0;
    for (const SyntheticUtterance& u : dev) {
      if (!u.features) throw Error("train_rnnt: dev utterance without features");
      ad::Tape tape;
      BoundParams bp = bind(tape, trainable);
      std::vector<ad::Expr> lattice = transducer_lattice(tape, bp, model.cfg, *u.features,
                                                         vocab.encode(u.text), vocab.bos_id(),
                                                         vocab.blank_id());
      std::vector<Matrix> values;
      values.reserve(lattice.size());
      for (const ad::Expr& e : lattice) values.push_back(e.value());
      total += rnnt_loss_value(values, vocab.encode(u.text), vocab.blank_id());
    }
    return total / static_cast<double>(dev.size());
  };

  TrainReport report =
      run_epochs(static_cast<int>(train.size()), cfg, trainable, step, dev_eval);
  model.params.update_from(trainable);
  return report;
}

TrainReport train_lm_head(TransducerModel& model, const Vocab& vocab,
                          const std::vector<std::string>& transcripts, const TrainConfig& cfg) {
  if (transcripts.empty()) throw Error("train_lm_head: empty transcript set");
  // P is frozen: its outputs per utterance are constants, computed once.
  struct Cached {
    Matrix pred_rows;          // (n+1) x R
    std::vector<int> targets;  // tokens + eos
  };
  std::vector<Cached> cache;
  cache.reserve(transcripts.size());
  for (const std::string& t : transcripts) {
    std::vector<int> tokens = vocab.encode(t);
    std::vector<int> inputs;
    inputs.push_back(vocab.bos_id());
    inputs.insert(inputs.end(), tokens.begin(), tokens.end());
    Cached c;
    c.pred_rows = raw_prediction_forward(model.params, model.cfg, inputs, vocab.bos_id(),
                                         vocab.blank_id());
    c.targets = tokens;
    c.targets.push_back(vocab.eos_id());
    cache.push_back(std::move(c));
  }

  if (!model.has_lm_head())
    model.params.update_from(init_lm_head(model.cfg, derive_seed(cfg.seed, "lm-head-init")));
  ParamSet trainable = model.params.subset("lm_head.");

  auto step = [&](int i, ParamSet* grads) {
    ad::Tape tape;
    BoundParams bp = bind(tape, trainable);
    ad::Expr logits = ad::linear(tape.constant(cache[i].pred_rows), bp.at("lm_head.w"),
                                 bp.at("lm_head.b"));
    ad::Expr lp = ad::log_softmax_rows(logits);
    ad::Expr picked = ad::gather_rowwise(lp, cache[i].targets);
    ad::Expr loss =
        ad::scale(ad::sum(picked), -1.0 / static_cast<double>(cache[i].targets.size()));
    tape.backward(loss);
    *grads = collect_grads(tape, bp);
    return loss.scalar();
  };

  TrainReport report = run_epochs(static_cast<int>(cache.size()), cfg, trainable, step,
                                  [] { return std::optional<double>(); });
  model.params.update_from(trainable);
  return report;
}

double lm_dev_loss(const TransducerModel& model, const Vocab& vocab,
                   const std::vector<std::string>& texts) {
  if (texts.empty()) throw Error("lm_dev_loss: empty text set");
  double total_nll = 0.0;
  long total_tokens = 0;
  for (const std::string& t : texts) {
    std::vector<int> tokens = vocab.encode(t);
    std::vector<int> inputs;
    inputs.push_back(vocab.bos_id());
    inputs.insert(inputs.end(), tokens.begin(), tokens.end());
    Matrix pred = raw_prediction_forward(model.params, model.cfg, inputs, vocab.bos_id(),
                                         vocab.blank_id());
    Matrix lp(pred.rows(), model.cfg.vocab_size);
    for (long r = 0; r < pred.rows(); ++r)
      lp.row(r) = raw_lm_log_probs(model.params, model.cfg, pred.row(r)).row(0);
    total_nll += nll_sum_raw(lp, tokens, vocab.eos_id());
    total_tokens += static_cast<long>(tokens.size()) + 1;
  }
  return total_nll / static_cast<double>(total_tokens);
}

}  // namespace rnnt
