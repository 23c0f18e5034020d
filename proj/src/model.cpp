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

#include "rnnt/model.hpp"

#include <cmath>

namespace rnnt {

namespace {

constexpr double kLnEps = 1e-5;

Matrix uniform_init(long rows, long cols, double scale, Rng& rng) {
  Matrix m(rows, cols);
  for (long i = 0; i < rows; ++i)
    for (long j = 0; j < cols; ++j) m(i, j) = scale * (2.0 * rng.uniform() - 1.0);
  return m;
}

void add_lstm_layer(ParamSet& ps, const std::string& prefix, int in_dim, int width, int proj,
                    Rng& rng) {
  const double sx = 1.0 / std::sqrt(static_cast<double>(in_dim));
  const double sh = 1.0 / std::sqrt(static_cast<double>(proj));
  const double sp = 1.0 / std::sqrt(static_cast<double>(width));
  ps.add(prefix + ".w_x", uniform_init(4 * width, in_dim, sx, rng));
  ps.add(prefix + ".w_h", uniform_init(4 * width, proj, sh, rng));
  ps.add(prefix + ".ln_g", Matrix::Ones(1, 4 * width));
  ps.add(prefix + ".ln_b", Matrix::Zero(1, 4 * width));
  ps.add(prefix + ".w_p", uniform_init(proj, width, sp, rng));
}

// Encoder layer input dims, with the time-reduction placed after the first
// half of the stack (after the input projection for a single-layer stack).
struct EncoderLayout {
  std::vector<int> in_dims;  // per layer
  int reduce_after;          // layer index whose output is reduced; -1 = input
};

EncoderLayout encoder_layout(const ModelConfig& cfg) {
  EncoderLayout lay;
  const int L = cfg.encoder_layers, R = cfg.encoder_proj, f = cfg.time_reduction;
  lay.reduce_after = L >= 2 ? (L + 1) / 2 - 1 : -1;
  for (int l = 0; l < L; ++l) {
    int in = l == 0 ? R : R;
    if (f > 1) {
      if (lay.reduce_after == -1 && l == 0) in = R * f;          // reduced input
      else if (l == lay.reduce_after + 1) in = R * f;            // reduced hidden
    }
    lay.in_dims.push_back(in);
  }
  return lay;
}

}  // namespace

nlohmann::json ModelConfig::to_json() const {
  return {{"feature_dim", feature_dim},
          {"encoder_layers", encoder_layers},
          {"encoder_width", encoder_width},
          {"encoder_proj", encoder_proj},
          {"time_reduction", time_reduction},
          {"prediction_layers", prediction_layers},
          {"prediction_width", prediction_width},
          {"prediction_proj", prediction_proj},
          {"joint_hidden", joint_hidden},
          {"vocab_size", vocab_size}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.feature_dim = j.at("feature_dim");
  c.encoder_layers = j.at("encoder_layers");
  c.encoder_width = j.at("encoder_width");
  c.encoder_proj = j.at("encoder_proj");
  c.time_reduction = j.at("time_reduction");
  c.prediction_layers = j.at("prediction_layers");
  c.prediction_width = j.at("prediction_width");
  c.prediction_proj = j.at("prediction_proj");
  c.joint_hidden = j.at("joint_hidden");
  c.vocab_size = j.at("vocab_size");
  return c;
}

ParamSet init_encoder(const ModelConfig& cfg, uint64_t seed) {
  Rng rng(seed);
  ParamSet ps;
  const double si = 1.0 / std::sqrt(static_cast<double>(cfg.feature_dim));
  ps.add("encoder.in_proj.w", uniform_init(cfg.encoder_proj, cfg.feature_dim, si, rng));
  ps.add("encoder.in_proj.b", Matrix::Zero(cfg.encoder_proj, 1));
  EncoderLayout lay = encoder_layout(cfg);
  for (int l = 0; l < cfg.encoder_layers; ++l)
    add_lstm_layer(ps, "encoder.l" + std::to_string(l), lay.in_dims[l], cfg.encoder_width,
                   cfg.encoder_proj, rng);
  return ps;
}

ParamSet init_prediction(const ModelConfig& cfg, uint64_t seed) {
  Rng rng(seed);
  ParamSet ps;
  const int V = cfg.vocab_size, R = cfg.prediction_proj;
  const double se = 1.0 / std::sqrt(static_cast<double>(R));
  // rows: 0..V-1 word pieces, V blank (never read), V+1 bos
  ps.add("prediction.embed", uniform_init(V + 2, R, se, rng));
  for (int l = 0; l < cfg.prediction_layers; ++l)
    add_lstm_layer(ps, "prediction.l" + std::to_string(l), R, cfg.prediction_width, R, rng);
  return ps;
}

ParamSet init_joint(const ModelConfig& cfg, uint64_t seed) {
  Rng rng(seed);
  ParamSet ps;
  const int J = cfg.joint_hidden, V = cfg.vocab_size;
  ps.add("joint.w_enc", uniform_init(J, cfg.encoder_proj,
                                     1.0 / std::sqrt(static_cast<double>(cfg.encoder_proj)), rng));
  ps.add("joint.w_pred", uniform_init(J, cfg.prediction_proj,
                                      1.0 / std::sqrt(static_cast<double>(cfg.prediction_proj)), rng));
  ps.add("joint.b_h", Matrix::Zero(1, J));
  ps.add("joint.w_out", uniform_init(V + 1, J, 1.0 / std::sqrt(static_cast<double>(J)), rng));
  ps.add("joint.b_out", Matrix::Zero(V + 1, 1));
  return ps;
}

ParamSet init_lm_head(const ModelConfig& cfg, uint64_t seed) {
  Rng rng(seed);
  ParamSet ps;
  ps.add("lm_head.w", uniform_init(cfg.vocab_size, cfg.prediction_proj,
                                   1.0 / std::sqrt(static_cast<double>(cfg.prediction_proj)), rng));
  ps.add("lm_head.b", Matrix::Zero(cfg.vocab_size, 1));
  return ps;
}

ParamSet init_ctc_head(const ModelConfig& cfg, uint64_t seed) {
  Rng rng(seed);
  ParamSet ps;
  ps.add("ctc_head.w", uniform_init(cfg.vocab_size + 1, cfg.encoder_proj,
                                    1.0 / std::sqrt(static_cast<double>(cfg.encoder_proj)), rng));
  ps.add("ctc_head.b", Matrix::Zero(cfg.vocab_size + 1, 1));
  return ps;
}

// ---- taped forwards ----

ad::Expr lstm_ln_proj_step(ad::Tape& tape, const BoundParams& bp, const std::string& prefix,
                           ad::Expr input, StepVars& state) {
  using namespace ad;
  Expr w_x = bp.at(prefix + ".w_x"), w_h = bp.at(prefix + ".w_h");
  Expr ln_g = bp.at(prefix + ".ln_g"), ln_b = bp.at(prefix + ".ln_b");
  Expr w_p = bp.at(prefix + ".w_p");
  const int width = static_cast<int>(w_x.rows()) / 4;
  if (input.cols() != w_x.cols())
    throw Error("lstm_ln_proj_step: input dim " + std::to_string(input.cols()) +
                " does not match w_x (" + std::to_string(w_x.cols()) + ")");

  Expr pre = add(matmul_nt(input, w_x), matmul_nt(state.h, w_h));  // 1 x 4H
  // layer norm per gate block, then the usual gate nonlinearities
  auto gate = [&](int g) {
    return layer_norm_rows(cols(pre, g * width, width), cols(ln_g, g * width, width),
                           cols(ln_b, g * width, width), kLnEps);
  };
  Expr i = sigmoid(gate(0));
  Expr f = sigmoid(gate(1));
  Expr u = tanh_(gate(2));
  Expr o = sigmoid(gate(3));
  Expr c_new = add(mul(f, state.c), mul(i, u));
  Expr h_full = mul(o, tanh_(c_new));
  Expr h_new = matmul_nt(h_full, w_p);  // 1 x R
  state.c = c_new;
  state.h = h_new;
  return h_new;
}

namespace {

ad::Expr run_lstm_layer(ad::Tape& tape, const BoundParams& bp, const std::string& prefix,
                        ad::Expr seq, int width, int proj) {
  StepVars st{tape.constant(Matrix::Zero(1, proj)), tape.constant(Matrix::Zero(1, width))};
  std::vector<ad::Expr> outs;
  outs.reserve(seq.rows());
  for (int t = 0; t < seq.rows(); ++t)
    outs.push_back(lstm_ln_proj_step(tape, bp, prefix, ad::row(seq, t), st));
  return ad::vstack(outs);
}

}  // namespace

ad::Expr encoder_forward(ad::Tape& tape, const BoundParams& bp, const ModelConfig& cfg,
                         const Matrix& features) {
  using namespace ad;
  if (features.rows() < 1) throw Error("encoder_forward: empty feature sequence");
  if (features.cols() != cfg.feature_dim)
    throw Error("encoder_forward: feature dim mismatch");
  Expr x = linear(tape.constant(features), bp.at("encoder.in_proj.w"), bp.at("encoder.in_proj.b"));
  EncoderLayout lay = encoder_layout(cfg);
  if (cfg.time_reduction > 1 && lay.reduce_after == -1) x = reduce_frames(x, cfg.time_reduction);
  for (int l = 0; l < cfg.encoder_layers; ++l) {
    x = run_lstm_layer(tape, bp, "encoder.l" + std::to_string(l), x, cfg.encoder_width,
                       cfg.encoder_proj);
    if (cfg.time_reduction > 1 && l == lay.reduce_after) x = reduce_frames(x, cfg.time_reduction);
  }
  return x;
}

ad::Expr prediction_forward(ad::Tape& tape, const BoundParams& bp, const ModelConfig& cfg,
                            const std::vector<int>& tokens, int bos_id, int blank_id) {
  using namespace ad;
  if (tokens.empty()) throw Error("prediction_forward: empty token sequence (need at least bos)");
  for (int t : tokens) {
    if (t == blank_id) throw Error("prediction_forward: blank in input");
    if (t < 0 || t > bos_id) throw Error("prediction_forward: token id out of range");
  }
  Expr emb = rows_select(bp.at("prediction.embed"), tokens);
  Expr x = emb;
  for (int l = 0; l < cfg.prediction_layers; ++l)
    x = run_lstm_layer(tape, bp, "prediction.l" + std::to_string(l), x, cfg.prediction_width,
                       cfg.prediction_proj);
  return x;
}

ad::Expr joint_logits(ad::Tape& tape, const BoundParams& bp, ad::Expr enc_row, ad::Expr pred_rows) {
  using namespace ad;
  Expr enc_part = add(matmul_nt(enc_row, bp.at("joint.w_enc")), bp.at("joint.b_h"));  // 1 x J
  Expr h = tanh_(add_rowvec(matmul_nt(pred_rows, bp.at("joint.w_pred")), enc_part));
  return linear(h, bp.at("joint.w_out"), bp.at("joint.b_out"));
}

ad::Expr lm_head_log_probs(ad::Tape& tape, const BoundParams& bp, ad::Expr pred_rows) {
  if (!bp.has("lm_head.w"))
    throw Error("lm_head_log_probs: model has no LM head (run the LM-head training step first)");
  return ad::log_softmax_rows(ad::linear(pred_rows, bp.at("lm_head.w"), bp.at("lm_head.b")));
}

std::vector<ad::Expr> transducer_lattice(ad::Tape& tape, const BoundParams& bp,
                                         const ModelConfig& cfg, const Matrix& features,
                                         const std::vector<int>& target, int bos_id, int blank_id) {
  using namespace ad;
  Expr enc = encoder_forward(tape, bp, cfg, features);
  std::vector<int> pred_in;
  pred_in.reserve(target.size() + 1);
  pred_in.push_back(bos_id);
  pred_in.insert(pred_in.end(), target.begin(), target.end());
  Expr pred = prediction_forward(tape, bp, cfg, pred_in, bos_id, blank_id);  // (U+1) x R

  Expr enc_j = matmul_nt(enc, bp.at("joint.w_enc"));    // T' x J
  Expr pred_j = matmul_nt(pred, bp.at("joint.w_pred")); // (U+1) x J
  std::vector<Expr> lattice;
  lattice.reserve(enc.rows());
  for (int t = 0; t < enc.rows(); ++t) {
    Expr enc_part = add(row(enc_j, t), bp.at("joint.b_h"));
    Expr h = tanh_(add_rowvec(pred_j, enc_part));
    lattice.push_back(log_softmax_rows(linear(h, bp.at("joint.w_out"), bp.at("joint.b_out"))));
  }
  return lattice;
}

// ---- raw forwards ----

namespace {

using RowVec = Eigen::RowVectorXd;

RowVec layer_norm_raw(const RowVec& x, const RowVec& g, const RowVec& b) {
  double mu = x.mean();
  double var = (x.array() - mu).square().mean();
  double s = std::sqrt(var + kLnEps);
  return (((x.array() - mu) / s) * g.array() + b.array()).matrix();
}

RowVec sigmoid_raw(const RowVec& x) { return (1.0 / (1.0 + (-x.array()).exp())).matrix(); }

RowVec lstm_step_raw(const ParamSet& ps, const std::string& prefix, const RowVec& input,
                     Matrix& h, Matrix& c) {
  const Matrix& w_x = ps.at(prefix + ".w_x");
  const Matrix& w_h = ps.at(prefix + ".w_h");
  const Matrix& ln_g = ps.at(prefix + ".ln_g");
  const Matrix& ln_b = ps.at(prefix + ".ln_b");
  const Matrix& w_p = ps.at(prefix + ".w_p");
  const int width = static_cast<int>(w_x.rows()) / 4;

  RowVec pre = input * w_x.transpose() + RowVec(h.row(0)) * w_h.transpose();
  auto gate = [&](int g) {
    return layer_norm_raw(pre.segment(g * width, width), ln_g.row(0).segment(g * width, width),
                          ln_b.row(0).segment(g * width, width));
  };
  RowVec i = sigmoid_raw(gate(0));
  RowVec f = sigmoid_raw(gate(1));
  RowVec u = gate(2).array().tanh().matrix();
  RowVec o = sigmoid_raw(gate(3));
  RowVec c_new = (f.array() * c.row(0).array() + i.array() * u.array()).matrix();
  RowVec h_full = (o.array() * c_new.array().tanh()).matrix();
  RowVec h_new = h_full * w_p.transpose();
  c.row(0) = c_new;
  h.row(0) = h_new;
  return h_new;
}

Matrix run_lstm_layer_raw(const ParamSet& ps, const std::string& prefix, const Matrix& seq,
                          int width, int proj) {
  Matrix h = Matrix::Zero(1, proj), c = Matrix::Zero(1, width);
  Matrix out(seq.rows(), proj);
  for (long t = 0; t < seq.rows(); ++t) out.row(t) = lstm_step_raw(ps, prefix, seq.row(t), h, c);
  return out;
}

Matrix reduce_frames_raw(const Matrix& x, int factor) {
  const long T = x.rows(), C = x.cols(), f = factor;
  const long T2 = (T + f - 1) / f;
  Matrix out(T2, f * C);
  for (long i = 0; i < T2; ++i)
    for (long k = 0; k < f; ++k) out.block(i, k * C, 1, C) = x.row(std::min(i * f + k, T - 1));
  return out;
}

}  // namespace

Matrix log_softmax_rows_raw(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (long r = 0; r < logits.rows(); ++r) {
    double mx = logits.row(r).maxCoeff();
    double lse = mx + std::log((logits.row(r).array() - mx).exp().sum());
    out.row(r) = logits.row(r).array() - lse;
  }
  return out;
}

PredState pred_state_init(const ModelConfig& cfg) {
  PredState st;
  for (int l = 0; l < cfg.prediction_layers; ++l) {
    st.h.push_back(Matrix::Zero(1, cfg.prediction_proj));
    st.c.push_back(Matrix::Zero(1, cfg.prediction_width));
  }
  return st;
}

Matrix pred_step(const ParamSet& params, const ModelConfig& cfg, int token, PredState& state) {
  const Matrix& embed = params.at("prediction.embed");
  if (token < 0 || token >= embed.rows()) throw Error("pred_step: token id out of range");
  RowVec x = embed.row(token);
  for (int l = 0; l < cfg.prediction_layers; ++l)
    x = lstm_step_raw(params, "prediction.l" + std::to_string(l), x, state.h[l], state.c[l]);
  return x;
}

Matrix raw_encoder_forward(const ParamSet& params, const ModelConfig& cfg, const Matrix& features) {
  if (features.rows() < 1) throw Error("raw_encoder_forward: empty feature sequence");
  if (features.cols() != cfg.feature_dim) throw Error("raw_encoder_forward: feature dim mismatch");
  Matrix x = features * params.at("encoder.in_proj.w").transpose();
  x.rowwise() += params.at("encoder.in_proj.b").col(0).transpose();
  EncoderLayout lay = encoder_layout(cfg);
  if (cfg.time_reduction > 1 && lay.reduce_after == -1) x = reduce_frames_raw(x, cfg.time_reduction);
  for (int l = 0; l < cfg.encoder_layers; ++l) {
    x = run_lstm_layer_raw(params, "encoder.l" + std::to_string(l), x, cfg.encoder_width,
                           cfg.encoder_proj);
    if (cfg.time_reduction > 1 && l == lay.reduce_after)
      x = reduce_frames_raw(x, cfg.time_reduction);
  }
  return x;
}

Matrix raw_joint_logits(const ParamSet& params, const ModelConfig& cfg,
                        const Eigen::RowVectorXd& enc_row, const Eigen::RowVectorXd& pred_row) {
  RowVec h = enc_row * params.at("joint.w_enc").transpose() +
             pred_row * params.at("joint.w_pred").transpose() + params.at("joint.b_h").row(0);
  RowVec ht = h.array().tanh().matrix();
  RowVec logits = ht * params.at("joint.w_out").transpose() +
                  params.at("joint.b_out").col(0).transpose();
  return logits;
}

Matrix raw_lm_log_probs(const ParamSet& params, const ModelConfig& cfg,
                        const Eigen::RowVectorXd& pred_row) {
  if (!params.has("lm_head.w"))
    throw Error("raw_lm_log_probs: model has no LM head (run the LM-head training step first)");
  RowVec logits = pred_row * params.at("lm_head.w").transpose() +
                  params.at("lm_head.b").col(0).transpose();
  return log_softmax_rows_raw(logits);
}

Matrix raw_prediction_forward(const ParamSet& params, const ModelConfig& cfg,
                              const std::vector<int>& tokens, int bos_id, int blank_id) {
  if (tokens.empty()) throw Error("raw_prediction_forward: empty token sequence");
  for (int t : tokens)
    if (t == blank_id) throw Error("raw_prediction_forward: blank in input");
  PredState st = pred_state_init(cfg);
  Matrix out(static_cast<long>(tokens.size()), cfg.prediction_proj);
  for (size_t i = 0; i < tokens.size(); ++i) out.row(static_cast<long>(i)) = pred_step(params, cfg, tokens[i], st);
  return out;
}

}  // namespace rnnt
