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

#ifndef RNNT_TRAINING_HPP
#define RNNT_TRAINING_HPP

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rnnt/corpus.hpp"
#include "rnnt/model.hpp"
#include "rnnt/vocab.hpp"

namespace rnnt {

// Plain SGD, one utterance per step, exponential per-epoch learning-rate
// decay: lr(epoch) = lr0 * decay^epoch.
struct TrainConfig {
  int max_epochs = 20;
  double lr = 0.05;
  double lr_decay = 0.98;
  uint64_t seed = 1;
  // rescale each step's gradients when their global L2 norm exceeds this
  double clip_norm = 5.0;
  // dev-loss early stopping (epochs without improvement); <= 0 disables
  int patience = 0;
  // SpecAugment-style masking (RNN-T / CTC training only)
  int time_masks = 0;
  int max_time_width = 0;
  int freq_masks = 0;
  int max_freq_width = 0;
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  std::optional<double> dev_loss;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  std::string stop_reason;  // "max_epochs" | "dev_patience"
};

// Trains prediction.* + lm_head.* from scratch as an autoregressive LM over
// texts: the initializing LM for the prediction network.
TrainReport pretrain_lm(TransducerModel& model, const Vocab& vocab,
                        const std::vector<std::string>& texts, const TrainConfig& cfg);

// Trains encoder.* + ctc_head.* on paired data with the CTC criterion
// (encoder initialization). Utterances without features are rejected.
TrainReport train_ctc(TransducerModel& model, const Vocab& vocab,
                      const std::vector<SyntheticUtterance>& train,
                      const std::vector<SyntheticUtterance>& dev, const TrainConfig& cfg);

// Trains encoder/prediction/joint with the transducer loss.
TrainReport train_rnnt(TransducerModel& model, const Vocab& vocab,
                       const std::vector<SyntheticUtterance>& train,
                       const std::vector<SyntheticUtterance>& dev, const TrainConfig& cfg);

// Estimates a fresh LM head over P's (frozen) representations of the
// transcripts. P's parameters are not touched; its per-utterance outputs
// are precomputed once and reused across epochs.
TrainReport train_lm_head(TransducerModel& model, const Vocab& vocab,
                          const std::vector<std::string>& transcripts, const TrainConfig& cfg);

// Mean LM NLL per token (tokens + eos) over texts; raw path, no training.
double lm_dev_loss(const TransducerModel& model, const Vocab& vocab,
                   const std::vector<std::string>& texts);

}  // namespace rnnt

#endif  // RNNT_TRAINING_HPP
