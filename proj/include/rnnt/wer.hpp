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

#ifndef RNNT_WER_HPP
#define RNNT_WER_HPP

#include <string>
#include <vector>

#include "rnnt/common.hpp"

namespace rnnt {

struct EditCounts {
  long substitutions = 0;
  long deletions = 0;
  long insertions = 0;
  long reference_words = 0;

  long errors() const { return substitutions + deletions + insertions; }
  double rate() const {
    if (reference_words == 0) throw Error("EditCounts::rate: empty reference");
    return static_cast<double>(errors()) / static_cast<double>(reference_words);
  }
  EditCounts& operator+=(const EditCounts& o) {
    substitutions += o.substitutions;
    deletions += o.deletions;
    insertions += o.insertions;
    reference_words += o.reference_words;
    return *this;
  }
};

// Word-level Levenshtein alignment (substitution/deletion/insertion all
// cost 1; ties resolved substitution-first).
EditCounts word_errors(const std::vector<std::string>& reference,
                       const std::vector<std::string>& hypothesis);
EditCounts word_errors(const std::string& reference_text, const std::string& hypothesis_text);

}  // namespace rnnt

#endif  // RNNT_WER_HPP
