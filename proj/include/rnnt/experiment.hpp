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

#ifndef RNNT_EXPERIMENT_HPP
#define RNNT_EXPERIMENT_HPP

#include <string>
#include <vector>

#include "rnnt/adaptation.hpp"
#include "rnnt/corpus.hpp"
#include "rnnt/decode.hpp"
#include "rnnt/model.hpp"
#include "rnnt/training.hpp"
#include "rnnt/vocab.hpp"
#include "rnnt/wer.hpp"

namespace rnnt {

// Standard two-domain experiment configuration. One global seed fans out to
// per-stage seeds; every stage is reproducible in isolation.
struct ExperimentConfig {
  uint64_t seed = 1;

  // synthetic-speech knobs
  int feature_dim = 16;
  int frames_per_char = 2;
  double noise_sigma = 0.4;
  int tail_jitter_max = 2;

  // corpus sizes
  int n_pretrain = 400;
  int n_pretrain_heldout = 80;
  int n_train_pairs = 160;
  int n_dev_pairs = 32;
  int n_test_a = 60;
  int n_transcripts_heldout = 80;
  int n_adapt_b = 150;
  int n_heldout_b = 80;
  int n_test_b = 60;

  int vocab_size = 60;
  ModelConfig model;  // vocab_size is overwritten from the trained vocab

  // per-stage training
  TrainConfig lm_pretrain{.max_epochs = 18, .lr = 0.25, .lr_decay = 0.97};
  TrainConfig ctc{.max_epochs = 12, .lr = 0.02, .lr_decay = 0.97};
  TrainConfig rnnt{.max_epochs = 30, .lr = 0.02, .lr_decay = 0.97, .patience = 4};
  TrainConfig lm_head{.max_epochs = 12, .lr = 0.3, .lr_decay = 0.97};
  AdaptationConfig adaptation;

  DomainSpec domain_spec(const std::string& domain, const std::string& stage) const;
};

struct ExperimentData {
  Vocab vocab;
  std::vector<std::string> pretrain_texts;
  std::vector<std::string> pretrain_heldout;
  std::vector<SyntheticUtterance> train_pairs;
  std::vector<SyntheticUtterance> dev_pairs;
  std::vector<SyntheticUtterance> test_a;
  std::vector<std::string> transcripts;          // texts of train_pairs
  std::vector<std::string> transcripts_heldout;  // same grammar, unseen
  std::vector<std::string> adapt_b;
  std::vector<std::string> heldout_b;
  std::vector<SyntheticUtterance> test_b;
};

ExperimentData make_experiment_data(const ExperimentConfig& cfg);

// The trained pipeline stages.
struct ExperimentStages {
  TransducerModel lm_init;     // stage 1: P pretrained as an LM, with its head
  TransducerModel rnnt;        // CTC-initialized encoder + transducer training
  TransducerModel rnnt_head;   // stage 3: rnnt with a freshly trained LM head
  TransducerModel adapted;     // stage 4: domain-b adapted
  TransducerModel rnnt_noinit; // ablation: P random at transducer training
};

TransducerModel build_base_model(const ExperimentConfig& cfg, const ExperimentData& data,
                                 bool initialize_prediction, TransducerModel* lm_init_out);

ExperimentStages run_experiment(const ExperimentConfig& cfg, const ExperimentData& data,
                                AdaptReport* adapt_report = nullptr);

// Corpus-level decoding + WER.
EditCounts corpus_wer(const TransducerModel& model, const Vocab& vocab,
                      const std::vector<SyntheticUtterance>& utts, const DecodeOptions& opts = {});

}  // namespace rnnt

#endif  // RNNT_EXPERIMENT_HPP
