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

#ifndef RNNT_MODEL_HPP
#define RNNT_MODEL_HPP

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "rnnt/params.hpp"

namespace rnnt {

// Desk-scale transducer dimensions. The joint network has vocab_size + 1
// output units (the +1 is blank).
struct ModelConfig {
  int feature_dim = 16;
  int encoder_layers = 2;
  int encoder_width = 64;       // LSTM cells per encoder layer
  int encoder_proj = 32;        // projection dim (= encoder output dim)
  int time_reduction = 2;       // frame-pair concatenation between LSTM stacks
  int prediction_layers = 2;
  int prediction_width = 64;
  int prediction_proj = 32;     // projection dim (= P output dim, = embedding dim)
  int joint_hidden = 64;
  int vocab_size = 60;          // word pieces incl. the reserved eos piece

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

// Encoder + prediction network P + joint network, plus optional heads:
// lm_head.* (the temporary LM output L; never read during decoding) and
// ctc_head.* (encoder initialization only). Heads live under their own name
// prefixes so they can be attached and stripped without touching the
// transducer parameters.
struct TransducerModel {
  ModelConfig cfg;
  ParamSet params;

  bool has_lm_head() const { return params.has("lm_head.w"); }
  TransducerModel without_lm_head() const { return {cfg, params.without("lm_head.")}; }
};

// Parameter construction ------------------------------------------------

ParamSet init_encoder(const ModelConfig& cfg, uint64_t seed);
ParamSet init_prediction(const ModelConfig& cfg, uint64_t seed);
ParamSet init_joint(const ModelConfig& cfg, uint64_t seed);
ParamSet init_lm_head(const ModelConfig& cfg, uint64_t seed);
ParamSet init_ctc_head(const ModelConfig& cfg, uint64_t seed);

// Taped forward passes (training) ---------------------------------------

// One layer-normalized LSTM step with projected output. state is
// {h (1 x proj), c (1 x width)}; returns the projected output (= new h).
struct StepVars {
  ad::Expr h;
  ad::Expr c;
};
ad::Expr lstm_ln_proj_step(ad::Tape& tape, const BoundParams& bp, const std::string& prefix,
                           ad::Expr input, StepVars& state);

// Features (T x F) -> encoder outputs (T' x encoder_proj),
// T' = ceil(T / time_reduction); reduction by frame-pair concatenation after
// the first half of the LSTM stack, padding the odd tail frame by repetition.
ad::Expr encoder_forward(ad::Tape& tape, const BoundParams& bp, const ModelConfig& cfg,
                         const Matrix& features);

// Token prefix (bos followed by word pieces; blank is rejected) -> one
// output row per consumed prefix position ((n+1) x prediction_proj).
ad::Expr prediction_forward(ad::Tape& tape, const BoundParams& bp, const ModelConfig& cfg,
                            const std::vector<int>& tokens, int bos_id, int blank_id);

// enc_row (1 x E) + pred_rows (U x R) -> logits (U x vocab_size+1).
ad::Expr joint_logits(ad::Tape& tape, const BoundParams& bp, ad::Expr enc_row, ad::Expr pred_rows);

// pred_rows (U x R) -> log-distribution over word pieces (U x vocab_size).
ad::Expr lm_head_log_probs(ad::Tape& tape, const BoundParams& bp, ad::Expr pred_rows);

// The full RNN-T lattice: per encoder frame t a (U+1) x (vocab_size+1)
// matrix of log-probabilities (rows log-softmaxed).
std::vector<ad::Expr> transducer_lattice(ad::Tape& tape, const BoundParams& bp,
                                         const ModelConfig& cfg, const Matrix& features,
                                         const std::vector<int>& target, int bos_id, int blank_id);

// Raw forward passes (inference; no tape, same arithmetic) ---------------

struct PredState {
  std::vector<Matrix> h;  // per layer, 1 x proj
  std::vector<Matrix> c;  // per layer, 1 x width
};

PredState pred_state_init(const ModelConfig& cfg);
// Advances the prediction network by one token; returns its output row.
Matrix pred_step(const ParamSet& params, const ModelConfig& cfg, int token, PredState& state);
Matrix raw_encoder_forward(const ParamSet& params, const ModelConfig& cfg, const Matrix& features);
Matrix raw_joint_logits(const ParamSet& params, const ModelConfig& cfg,
                        const Eigen::RowVectorXd& enc_row, const Eigen::RowVectorXd& pred_row);
Matrix raw_lm_log_probs(const ParamSet& params, const ModelConfig& cfg,
                        const Eigen::RowVectorXd& pred_row);
// All prediction-network outputs for [bos, tokens...] ((n+1) x proj).
Matrix raw_prediction_forward(const ParamSet& params, const ModelConfig& cfg,
                              const std::vector<int>& tokens, int bos_id, int blank_id);

// Row-wise log-softmax of a plain matrix (shared by the raw paths).
Matrix log_softmax_rows_raw(const Matrix& logits);

}  // namespace rnnt

#endif  // RNNT_MODEL_HPP
