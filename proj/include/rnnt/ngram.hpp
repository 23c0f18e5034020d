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

#ifndef RNNT_NGRAM_HPP
#define RNNT_NGRAM_HPP

#include <map>
#include <vector>

#include "rnnt/vocab.hpp"

namespace rnnt {

// Word-piece n-gram with absolute discounting and backoff:
//   p(w | h) = max(c(h,w) - d, 0) / c(h) + d * N1+(h) / c(h) * p(w | h')
// recursing to the uniform distribution over the piece inventory at order 0.
// Contexts may contain bos; predictions range over the pieces (incl. eos).
class NGramLM {
 public:
  NGramLM(int order, double discount, int vocab_size, int bos_id);

  void add_sequence(const std::vector<int>& pieces_with_eos);
  double prob(const std::vector<int>& context, int piece) const;
  double log_prob(const std::vector<int>& context, int piece) const;

  int order() const { return order_; }
  int bos_id() const { return bos_id_; }

  // All contexts with nonzero count at the full order (test support).
  std::vector<std::vector<int>> observed_contexts() const;

 private:
  struct ContextStats {
    long total = 0;
    std::map<int, long> counts;
  };
  double prob_backoff(const int* ctx, int len, int piece) const;
  int order_;
  double discount_;
  int vocab_size_;
  int bos_id_;
  // level k holds contexts of length k (k = 0 .. order-1)
  std::vector<std::map<std::vector<int>, ContextStats>> levels_;
};

// Trains an n-gram over encoded texts; each utterance is bos-padded and
// terminated with the eos piece.
NGramLM train_ngram(const std::vector<std::string>& texts, const Vocab& vocab, int order,
                    double discount);

}  // namespace rnnt

#endif  // RNNT_NGRAM_HPP
