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

#include "rnnt/experiment.hpp"

namespace rnnt {

DomainSpec ExperimentConfig::domain_spec(const std::string& domain,
                                         const std::string& stage) const {
  DomainSpec spec;
  spec.domain = domain;
  spec.seed = derive_seed(seed, "gen-" + stage);
  spec.feature_dim = feature_dim;
  spec.frames_per_char = frames_per_char;
  spec.noise_sigma = noise_sigma;
  spec.tail_jitter_max = tail_jitter_max;
  return spec;
}

namespace {

std::vector<std::string> texts_of(const std::vector<SyntheticUtterance>& utts) {
  std::vector<std::string> out;
  out.reserve(utts.size());
  for (const SyntheticUtterance& u : utts) out.push_back(u.text);
  return out;
}

}  // namespace

ExperimentData make_experiment_data(const ExperimentConfig& cfg) {
  ExperimentData d;
  d.pretrain_texts = texts_of(gen_corpus(cfg.domain_spec("pretrain", "pretrain"), cfg.n_pretrain, false));
  d.pretrain_heldout =
      texts_of(gen_corpus(cfg.domain_spec("pretrain", "pretrain-heldout"), cfg.n_pretrain_heldout, false));
  d.train_pairs = gen_corpus(cfg.domain_spec("a", "train"), cfg.n_train_pairs, true);
  d.dev_pairs = gen_corpus(cfg.domain_spec("a", "dev"), cfg.n_dev_pairs, true);
  d.test_a = gen_corpus(cfg.domain_spec("a", "test-a"), cfg.n_test_a, true);
  d.transcripts = texts_of(d.train_pairs);
  d.transcripts_heldout =
      texts_of(gen_corpus(cfg.domain_spec("a", "transcripts-heldout"), cfg.n_transcripts_heldout, false));
  d.adapt_b = texts_of(gen_corpus(cfg.domain_spec("b", "adapt-b"), cfg.n_adapt_b, false));
  d.heldout_b = texts_of(gen_corpus(cfg.domain_spec("b", "heldout-b"), cfg.n_heldout_b, false));
  d.test_b = gen_corpus(cfg.domain_spec("b", "test-b"), cfg.n_test_b, true);
  d.vocab = train_vocab(d.pretrain_texts, cfg.vocab_size);
  return d;
}

namespace {

TrainConfig with_masking(TrainConfig tc) {
  tc.time_masks = 1;
  tc.max_time_width = 6;
  tc.freq_masks = 1;
  tc.max_freq_width = 3;
  return tc;
}

// Transducer training on a CTC-initialized encoder; P either from the
// pretrained LM or fresh (the initialization ablation).
TransducerModel train_transducer(const ExperimentConfig& cfg, const ExperimentData& data,
                                 const ModelConfig& mc, const ParamSet& encoder_init,
                                 const ParamSet& prediction_init, const std::string& tag) {
  TransducerModel model;
  model.cfg = mc;
  model.params = encoder_init;
  model.params.update_from(prediction_init);
  model.params.update_from(init_joint(mc, derive_seed(cfg.seed, "init-joint-" + tag)));
  TrainConfig tc = with_masking(cfg.rnnt);
  tc.seed = derive_seed(cfg.seed, "train-rnnt-" + tag);
  train_rnnt(model, data.vocab, data.train_pairs, data.dev_pairs, tc);
  return model;
}

}  // namespace

TransducerModel build_base_model(const ExperimentConfig& cfg, const ExperimentData& data,
                                 bool initialize_prediction, TransducerModel* lm_init_out) {
  ModelConfig mc = cfg.model;
  mc.feature_dim = cfg.feature_dim;
  mc.vocab_size = data.vocab.size();

  // stage 1: the prediction network trained as a neural LM over the
  // pretraining text (kept intact, with its LM output layer)
  TransducerModel lm_init;
  lm_init.cfg = mc;
  lm_init.params = init_prediction(mc, derive_seed(cfg.seed, "init-prediction"));
  {
    TrainConfig tc = cfg.lm_pretrain;
    tc.seed = derive_seed(cfg.seed, "pretrain-lm");
    pretrain_lm(lm_init, data.vocab, data.pretrain_texts, tc);
  }
  if (lm_init_out) *lm_init_out = lm_init;

  // stage 2a: CTC encoder initialization on the paired data
  TransducerModel ctc_model;
  ctc_model.cfg = mc;
  ctc_model.params = init_encoder(mc, derive_seed(cfg.seed, "init-encoder"));
  ctc_model.params.update_from(init_ctc_head(mc, derive_seed(cfg.seed, "init-ctc-head")));
  {
    TrainConfig tc = with_masking(cfg.ctc);
    tc.seed = derive_seed(cfg.seed, "train-ctc");
    train_ctc(ctc_model, data.vocab, data.train_pairs, data.dev_pairs, tc);
  }

  ParamSet pred_init = initialize_prediction
                           ? lm_init.params.subset("prediction.")
                           : init_prediction(mc, derive_seed(cfg.seed, "init-prediction-ablation"));
  return train_transducer(cfg, data, mc, ctc_model.params.subset("encoder."), pred_init,
                          initialize_prediction ? "base" : "ablation");
}

ExperimentStages run_experiment(const ExperimentConfig& cfg, const ExperimentData& data,
                                AdaptReport* adapt_report) {
  ModelConfig mc = cfg.model;
  mc.feature_dim = cfg.feature_dim;
  mc.vocab_size = data.vocab.size();

  ExperimentStages st;

  // stage 1: initializing LM
  st.lm_init.cfg = mc;
  st.lm_init.params = init_prediction(mc, derive_seed(cfg.seed, "init-prediction"));
  {
    TrainConfig tc = cfg.lm_pretrain;
    tc.seed = derive_seed(cfg.seed, "pretrain-lm");
    pretrain_lm(st.lm_init, data.vocab, data.pretrain_texts, tc);
  }

  // stage 2a: CTC encoder initialization, shared by base and ablation
  TransducerModel ctc_model;
  ctc_model.cfg = mc;
  ctc_model.params = init_encoder(mc, derive_seed(cfg.seed, "init-encoder"));
  ctc_model.params.update_from(init_ctc_head(mc, derive_seed(cfg.seed, "init-ctc-head")));
  {
    TrainConfig tc = with_masking(cfg.ctc);
    tc.seed = derive_seed(cfg.seed, "train-ctc");
    train_ctc(ctc_model, data.vocab, data.train_pairs, data.dev_pairs, tc);
  }
  const ParamSet encoder_init = ctc_model.params.subset("encoder.");

  // stage 2b: transducer training
  st.rnnt = train_transducer(cfg, data, mc, encoder_init,
                             st.lm_init.params.subset("prediction."), "base");

  // stage 3: fresh LM head over the transducer-trained P (old head ignored)
  st.rnnt_head = st.rnnt;
  {
    TrainConfig tc = cfg.lm_head;
    tc.seed = derive_seed(cfg.seed, "train-lm-head");
    train_lm_head(st.rnnt_head, data.vocab, data.transcripts, tc);
  }

  // stage 4: text-only adaptation on the domain-b set
  {
    AdaptationConfig ac = cfg.adaptation;
    ac.seed = derive_seed(cfg.seed, "adapt");
    st.adapted = adapt(st.rnnt_head, data.vocab, data.adapt_b, ac, adapt_report);
  }

  // ablation: no LM initialization of P, then the same fresh-head step
  st.rnnt_noinit = train_transducer(
      cfg, data, mc, encoder_init,
      init_prediction(mc, derive_seed(cfg.seed, "init-prediction-ablation")), "ablation");
  {
    TrainConfig tc = cfg.lm_head;
    tc.seed = derive_seed(cfg.seed, "train-lm-head-ablation");
    train_lm_head(st.rnnt_noinit, data.vocab, data.transcripts, tc);
  }
  return st;
}

EditCounts corpus_wer(const TransducerModel& model, const Vocab& vocab,
                      const std::vector<SyntheticUtterance>& utts, const DecodeOptions& opts) {
  EditCounts total;
  for (const SyntheticUtterance& u : utts) {
    if (!u.features) throw Error("corpus_wer: utterance '" + u.id + "' has no features");
    std::vector<Hypothesis> nbest = beam_search(model, vocab, *u.features, opts);
    std::string hyp = nbest.empty() ? "" : vocab.decode(nbest[0].tokens);
    total += word_errors(u.text, hyp);
  }
  return total;
}

}  // namespace rnnt
