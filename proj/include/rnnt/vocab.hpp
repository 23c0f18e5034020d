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

#ifndef RNNT_VOCAB_HPP
#define RNNT_VOCAB_HPP

#include <set>
#include <string>
#include <vector>

#include "rnnt/common.hpp"

namespace rnnt {

// Word-piece inventory shared by the transducer output and the LM head.
//
// Id layout:
//   0 .. size()-1   word pieces; index eos_id() is the reserved sentence-end
//                   piece (an LM output class that encode() never produces)
//   size()          blank (transducer output only, never an input)
//   size()+1        bos (prediction-network input only, never an output)
//
// The joint network therefore has size()+1 output units, and the LM head
// size() output units.
//
// Word boundaries: text is pre-tokenized on spaces; every word after the
// first keeps its leading space, so word-initial pieces carry a space
// prefix and decode() is plain concatenation.
class Vocab {
 public:
  static constexpr const char* kEosPiece = "</s>";

  int size() const { return static_cast<int>(pieces_.size()); }
  int blank_id() const { return size(); }
  int bos_id() const { return size() + 1; }
  int eos_id() const { return eos_id_; }
  bool is_reserved(int id) const { return id == blank_id() || id == bos_id() || id == eos_id_; }
  const std::vector<std::string>& pieces() const { return pieces_; }
  const std::string& piece(int id) const;

  // Greedy longest-match over the learned pieces. Unknown characters are an
  // error; there is no UNK class.
  std::vector<int> encode(const std::string& text) const;
  // Concatenation of pieces. Reserved ids are an error.
  std::string decode(const std::vector<int>& tokens) const;

  std::string to_json() const;
  static Vocab from_json(const std::string& json_text);

  void save(const std::string& path) const;
  static Vocab load(const std::string& path);

  friend Vocab train_vocab(const std::vector<std::string>& corpus, int target_size);

 private:
  std::vector<std::string> pieces_;
  int eos_id_ = 0;
  std::set<char> charset_;  // characters legal in encode() input
  void build_lookup();
  std::vector<std::vector<int>> by_first_char_;  // piece ids sorted by length desc
};

// Greedy byte-pair-encoding merges by pair frequency (lexicographic
// tie-break), over space-separated word units. target_size counts the full
// piece list including the reserved eos piece.
Vocab train_vocab(const std::vector<std::string>& corpus, int target_size);

}  // namespace rnnt

#endif  // RNNT_VOCAB_HPP
