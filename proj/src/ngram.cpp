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

#include "rnnt/ngram.hpp"

#include <cmath>

namespace rnnt {

NGramLM::NGramLM(int order, double discount, int vocab_size, int bos_id)
    : order_(order), discount_(discount), vocab_size_(vocab_size), bos_id_(bos_id) {
  if (order < 1) throw Error("NGramLM: order must be >= 1");
  if (discount <= 0.0 || discount >= 1.0) throw Error("NGramLM: discount must be in (0, 1)");
  if (vocab_size < 1) throw Error("NGramLM: vocab_size must be >= 1");
  levels_.resize(order);
}

void NGramLM::add_sequence(const std::vector<int>& pieces_with_eos) {
  // bos padding provides left context for the first symbols
  std::vector<int> seq;
  seq.reserve(pieces_with_eos.size() + order_ - 1);
  for (int i = 0; i < order_ - 1; ++i) seq.push_back(bos_id_);
  seq.insert(seq.end(), pieces_with_eos.begin(), pieces_with_eos.end());
  const int pad = order_ - 1;
  for (size_t i = static_cast<size_t>(pad); i < seq.size(); ++i) {
    int w = seq[i];
    if (w < 0 || w >= vocab_size_) throw Error("NGramLM::add_sequence: symbol out of range");
    for (int k = 0; k < order_; ++k) {
      std::vector<int> ctx(seq.begin() + static_cast<long>(i) - k, seq.begin() + static_cast<long>(i));
      ContextStats& st = levels_[k][ctx];
      ++st.total;
      ++st.counts[w];
    }
  }
}

double NGramLM::prob_backoff(const int* ctx, int len, int piece) const {
  if (len < 0) return 1.0 / static_cast<double>(vocab_size_);  // order-0 base
  std::vector<int> key(ctx, ctx + len);
  auto it = levels_[len].find(key);
  if (it == levels_[len].end() || it->second.total == 0)
    return prob_backoff(ctx + (len > 0 ? 1 : 0), len - 1, piece);
  const ContextStats& st = it->second;
  const double c_total = static_cast<double>(st.total);
  auto cit = st.counts.find(piece);
  double c_w = cit == st.counts.end() ? 0.0 : static_cast<double>(cit->second);
  double head = std::max(c_w - discount_, 0.0) / c_total;
  double n1plus = static_cast<double>(st.counts.size());
  double backoff_mass = discount_ * n1plus / c_total;
  return head + backoff_mass * prob_backoff(ctx + (len > 0 ? 1 : 0), len - 1, piece);
}

double NGramLM::prob(const std::vector<int>& context, int piece) const {
  if (piece < 0 || piece >= vocab_size_) throw Error("NGramLM::prob: piece out of range");
  // use the last order-1 symbols, bos-padded when shorter
  std::vector<int> ctx;
  const int want = order_ - 1;
  for (int i = static_cast<int>(context.size()); i < want; ++i) ctx.push_back(bos_id_);
  const int take = std::min(want, static_cast<int>(context.size()));
  ctx.insert(ctx.end(), context.end() - take, context.end());
  return prob_backoff(ctx.data(), static_cast<int>(ctx.size()), piece);
}

double NGramLM::log_prob(const std::vector<int>& context, int piece) const {
  return std::log(prob(context, piece));
}

std::vector<std::vector<int>> NGramLM::observed_contexts() const {
  std::vector<std::vector<int>> out;
  for (const auto& [ctx, st] : levels_[order_ - 1])
    if (st.total > 0) out.push_back(ctx);
  return out;
}

NGramLM train_ngram(const std::vector<std::string>& texts, const Vocab& vocab, int order,
                    double discount) {
  if (texts.empty()) throw Error("train_ngram: empty text set");
  NGramLM lm(order, discount, vocab.size(), vocab.bos_id());
  for (const std::string& t : texts) {
    std::vector<int> seq = vocab.encode(t);
    seq.push_back(vocab.eos_id());
    lm.add_sequence(seq);
  }
  return lm;
}

}  // namespace rnnt
