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

#ifndef RNNT_LOSSES_HPP
#define RNNT_LOSSES_HPP

#include <vector>

#include "rnnt/model.hpp"
#include "rnnt/params.hpp"

namespace rnnt {

// Transducer negative log-likelihood over the (T' x (U+1) x (V+1)) lattice.
// lattice[t] is a (U+1) x (V+1) matrix of log-probabilities (each row a
// log-distribution); entry (u, k) scores emitting k at frame t with u target
// tokens already emitted. Blank advances t, target token u+1 advances u.
// Gradients w.r.t. the lattice are exact (computed from the forward/backward
// variables) and flow onward through the tape.
ad::Expr rnnt_loss(ad::Tape& tape, const std::vector<ad::Expr>& lattice,
                   const std::vector<int>& target, int blank_id);

// Same computation on plain values (no gradients).
double rnnt_loss_value(const std::vector<Matrix>& lattice, const std::vector<int>& target,
                       int blank_id);

// CTC negative log-likelihood. frame_log_probs is T' x (V+1) with rows
// log-softmaxed; the extended label sequence interleaves blanks.
ad::Expr ctc_loss(ad::Tape& tape, ad::Expr frame_log_probs, const std::vector<int>& target,
                  int blank_id);
double ctc_loss_value(const Matrix& frame_log_probs, const std::vector<int>& target, int blank_id);

// Mean per-token NLL of the LM induced by P and L: bos-prefixed inputs,
// targets are the tokens followed by eos; the mean is over tokens + eos.
ad::Expr lm_cross_entropy(ad::Tape& tape, const BoundParams& bp, const ModelConfig& cfg,
                          const std::vector<int>& tokens, int bos_id, int blank_id, int eos_id);

// Token-level NLL terms for a tokens-with-eos sequence given precomputed
// log-probability rows ((n+1) x V). Shared by CE and perplexity bookkeeping.
double nll_sum_raw(const Matrix& log_probs, const std::vector<int>& tokens, int eos_id);

}  // namespace rnnt

#endif  // RNNT_LOSSES_HPP
