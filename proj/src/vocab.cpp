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

#include "rnnt/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "json.hpp"

namespace rnnt {

namespace {

// Splits an utterance into word units: the first word plain, every later
// word with its leading space attached. Merges never cross unit boundaries.
std::vector<std::string> word_units(const std::string& text) {
  std::vector<std::string> units;
  std::string cur;
  for (char c : text) {
    if (c == ' ') {
      if (!cur.empty()) units.push_back(cur);
      cur = " ";
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) units.push_back(cur);
  return units;
}

}  // namespace

const std::string& Vocab::piece(int id) const {
  if (id < 0 || id >= size()) throw Error("Vocab::piece: id out of range");
  return pieces_[id];
}

void Vocab::build_lookup() {
  by_first_char_.assign(256, {});
  for (int i = 0; i < size(); ++i) {
    if (i == eos_id_) continue;
    by_first_char_[static_cast<unsigned char>(pieces_[i][0])].push_back(i);
  }
  for (auto& bucket : by_first_char_) {
    std::sort(bucket.begin(), bucket.end(), [&](int a, int b) {
      if (pieces_[a].size() != pieces_[b].size()) return pieces_[a].size() > pieces_[b].size();
      return pieces_[a] < pieces_[b];
    });
  }
}

std::vector<int> Vocab::encode(const std::string& text) const {
  std::vector<int> out;
  for (const std::string& unit : word_units(text)) {
    size_t at = 0;
    while (at < unit.size()) {
      char c = unit[at];
      if (c != ' ' && !charset_.count(c))
        throw Error(std::string("Vocab::encode: unknown character '") + c + "'");
      int best = -1;
      for (int id : by_first_char_[static_cast<unsigned char>(c)]) {
        const std::string& p = pieces_[id];
        if (p.size() <= unit.size() - at && unit.compare(at, p.size(), p) == 0) {
          best = id;
          break;  // buckets are sorted longest-first
        }
      }
      if (best < 0)
        throw Error(std::string("Vocab::encode: no piece matches at '") + unit.substr(at) + "'");
      out.push_back(best);
      at += pieces_[best].size();
    }
  }
  return out;
}

std::string Vocab::decode(const std::vector<int>& tokens) const {
  std::string out;
  for (int id : tokens) {
    if (id < 0 || id >= size() || is_reserved(id))
      throw Error("Vocab::decode: reserved or out-of-range id " + std::to_string(id));
    out += pieces_[id];
  }
  return out;
}

Vocab train_vocab(const std::vector<std::string>& corpus, int target_size) {
  if (corpus.empty()) throw Error("train_vocab: empty corpus");

  // Word units as symbol sequences, deduplicated with frequencies.
  std::map<std::string, long> unit_freq;
  std::set<char> charset;
  for (const std::string& line : corpus) {
    for (const std::string& u : word_units(line)) ++unit_freq[u];
    for (char c : line)
      if (c != ' ') charset.insert(c);
  }
  std::set<std::string> base_symbols;
  for (char c : charset) base_symbols.insert(std::string(1, c));
  bool any_space = false;
  for (const auto& [u, f] : unit_freq)
    if (u[0] == ' ') any_space = true;
  if (any_space) base_symbols.insert(" ");

  const int reserved = 1;  // eos piece
  const int min_size = static_cast<int>(base_symbols.size()) + reserved;
  if (target_size < min_size)
    throw Error("train_vocab: target_size " + std::to_string(target_size) +
                " below character inventory + reserved symbols (" + std::to_string(min_size) + ")");

  struct Unit {
    std::vector<std::string> syms;
    long freq;
  };
  std::vector<Unit> units;
  units.reserve(unit_freq.size());
  for (const auto& [u, f] : unit_freq) {
    Unit unit;
    unit.freq = f;
    for (char c : u) unit.syms.emplace_back(1, c);
    units.push_back(std::move(unit));
  }

  std::vector<std::string> merged_pieces;
  std::set<std::string> existing(base_symbols);
  existing.insert(Vocab::kEosPiece);
  const int n_merges = target_size - min_size;
  while (static_cast<int>(merged_pieces.size()) < n_merges) {
    // Pair counts include every adjacent position (overlaps count).
    std::map<std::pair<std::string, std::string>, long> pair_freq;
    for (const Unit& u : units)
      for (size_t i = 0; i + 1 < u.syms.size(); ++i)
        pair_freq[{u.syms[i], u.syms[i + 1]}] += u.freq;
    if (pair_freq.empty()) break;
    auto best = pair_freq.begin();
    for (auto it = pair_freq.begin(); it != pair_freq.end(); ++it)
      if (it->second > best->second) best = it;  // ties: first in lexicographic order
    const auto [left, right] = best->first;
    const std::string joined = left + right;
    if (existing.insert(joined).second) merged_pieces.push_back(joined);
    for (Unit& u : units) {
      std::vector<std::string> out;
      out.reserve(u.syms.size());
      for (size_t i = 0; i < u.syms.size();) {
        if (i + 1 < u.syms.size() && u.syms[i] == left && u.syms[i + 1] == right) {
          out.push_back(joined);
          i += 2;
        } else {
          out.push_back(u.syms[i]);
          ++i;
        }
      }
      u.syms = std::move(out);
    }
  }

  Vocab v;
  v.pieces_.push_back(Vocab::kEosPiece);
  v.eos_id_ = 0;
  for (const std::string& s : base_symbols) v.pieces_.push_back(s);
  for (const std::string& s : merged_pieces) v.pieces_.push_back(s);
  v.charset_ = charset;
  v.build_lookup();
  return v;
}

std::string Vocab::to_json() const {
  nlohmann::json j;
  j["pieces"] = pieces_;
  j["eos_id"] = eos_id_;
  j["blank_id"] = blank_id();
  j["bos_id"] = bos_id();
  std::string cs;
  for (char c : charset_) cs.push_back(c);
  j["charset"] = cs;
  return j.dump(2);
}

Vocab Vocab::from_json(const std::string& json_text) {
  nlohmann::json j = nlohmann::json::parse(json_text);
  Vocab v;
  v.pieces_ = j.at("pieces").get<std::vector<std::string>>();
  v.eos_id_ = j.at("eos_id");
  for (char c : j.at("charset").get<std::string>()) v.charset_.insert(c);
  if (j.value("blank_id", v.blank_id()) != v.blank_id() ||
      j.value("bos_id", v.bos_id()) != v.bos_id())
    throw Error("Vocab::from_json: inconsistent reserved ids");
  v.build_lookup();
  return v;
}

void Vocab::save(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("Vocab::save: cannot open '" + path + "'");
  out << to_json() << "\n";
}

Vocab Vocab::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("Vocab::load: cannot open '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_json(text);
}

}  // namespace rnnt
