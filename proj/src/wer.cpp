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

#include "rnnt/wer.hpp"

#include <algorithm>

namespace rnnt {

EditCounts word_errors(const std::vector<std::string>& reference,
                       const std::vector<std::string>& hypothesis) {
  if (reference.empty()) throw Error("word_errors: empty reference");
  const size_t R = reference.size(), H = hypothesis.size();

  // cost[i][j]: edit distance between reference[0..i) and hypothesis[0..j)
  std::vector<std::vector<long>> cost(R + 1, std::vector<long>(H + 1, 0));
  for (size_t i = 0; i <= R; ++i) cost[i][0] = static_cast<long>(i);
  for (size_t j = 0; j <= H; ++j) cost[0][j] = static_cast<long>(j);
  for (size_t i = 1; i <= R; ++i)
    for (size_t j = 1; j <= H; ++j) {
      long sub = cost[i - 1][j - 1] + (reference[i - 1] == hypothesis[j - 1] ? 0 : 1);
      long del = cost[i - 1][j] + 1;
      long ins = cost[i][j - 1] + 1;
      cost[i][j] = std::min({sub, del, ins});
    }

  EditCounts out;
  out.reference_words = static_cast<long>(R);
  size_t i = R, j = H;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 &&
        cost[i][j] == cost[i - 1][j - 1] + (reference[i - 1] == hypothesis[j - 1] ? 0 : 1)) {
      if (reference[i - 1] != hypothesis[j - 1]) ++out.substitutions;
      --i, --j;
    } else if (i > 0 && cost[i][j] == cost[i - 1][j] + 1) {
      ++out.deletions;
      --i;
    } else {
      ++out.insertions;
      --j;
    }
  }
  return out;
}

EditCounts word_errors(const std::string& reference_text, const std::string& hypothesis_text) {
  return word_errors(split_words(reference_text), split_words(hypothesis_text));
}

}  // namespace rnnt
