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

#include "rnnt/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "json.hpp"

namespace rnnt {

namespace {

// One grammar rule: weighted alternatives, each a sequence of terminals or
// $-prefixed nonterminals.
struct Rule {
  std::vector<std::pair<double, std::vector<std::string>>> alts;
};
using Grammar = std::map<std::string, Rule>;

const std::vector<std::string> kDets = {"the", "a"};
const std::vector<std::string> kNouns = {"cat", "dog", "bird", "mat", "chair", "table", "lamp", "box"};
const std::vector<std::string> kAdjs = {"red", "blue", "small", "big", "old", "new"};
const std::vector<std::string> kVerbs = {"sits", "sleeps", "runs", "jumps", "sees", "finds"};
const std::vector<std::string> kPreps = {"on", "under", "near", "behind"};

Rule uniform_rule(const std::vector<std::string>& words) {
  Rule r;
  for (const std::string& w : words) r.alts.push_back({1.0, {w}});
  return r;
}

Grammar shared_lexicon() {
  Grammar g;
  g["$DET"] = uniform_rule(kDets);
  g["$N"] = uniform_rule(kNouns);
  g["$ADJ"] = uniform_rule(kAdjs);
  g["$V"] = uniform_rule(kVerbs);
  g["$P"] = uniform_rule(kPreps);
  return g;
}

// Domain A: narration-style phrases (determiner-adjective-noun order,
// verb-final prepositional phrases). Request phrasing exists but is rare,
// so domain B's patterns are in-vocabulary yet out-of-distribution.
Grammar grammar_a() {
  Grammar g = shared_lexicon();
  g["$NP"] = Rule{{{3.0, {"$DET", "$N"}}, {2.0, {"$DET", "$ADJ", "$N"}}}};
  g["$PP"] = Rule{{{1.0, {"$P", "$NP"}}}};
  g["$VP"] = Rule{{{2.0, {"$V"}}, {3.0, {"$V", "$PP"}}, {2.0, {"$V", "$NP"}}}};
  g["$S"] = Rule{{{4.0, {"$NP", "$VP"}},
                  {1.0, {"$NP", "$VP", "and", "$NP", "$VP"}},
                  {1.0, {"now", "$NP", "$VP"}},
                  {0.5, {"please", "$V", "$NP"}}}};
  return g;
}

// Domain B: request-style phrases over (almost) the same words. Adjectives
// are postposed and "please" appears in fixed slots, so the phrase
// distribution differs sharply from domain A while the word inventory
// barely changes.
Grammar grammar_b() {
  Grammar g = shared_lexicon();
  g["$NPB"] = Rule{{{2.0, {"$DET", "$N"}}, {3.0, {"$DET", "$N", "$ADJ"}}}};
  g["$PPB"] = Rule{{{1.0, {"$P", "$NPB"}}}};
  g["$S"] = Rule{{{3.0, {"please", "$V", "$NPB"}},
                  {2.0, {"please", "$V", "$NPB", "$PPB"}},
                  {2.0, {"$V", "$NPB", "please"}},
                  {1.0, {"$PPB", "please", "$V", "$NPB"}}}};
  return g;
}

// Pretraining text: domain A plus extra patterns and words (a broad-text
// mix), so the initializing-LM distribution is related to but distinct from
// the transcript distribution. Request-style phrases with postposed
// adjectives occur at a low rate, the way broad text rarely contains any
// given domain's phrasing.
Grammar grammar_pretrain() {
  Grammar g = grammar_a();
  g["$NPPOST"] = Rule{{{1.0, {"$DET", "$N", "$ADJ"}}}};
  Rule s = g["$S"];
  s.alts.push_back({1.5, {"today", "$NP", "$VP"}});
  s.alts.push_back({1.5, {"$NP", "$VP", "here"}});
  s.alts.push_back({1.0, {"today", "$NP", "$VP", "here"}});
  s.alts.push_back({0.5, {"please", "$V", "$NPPOST"}});
  s.alts.push_back({0.3, {"$V", "$NPPOST", "please"}});
  g["$S"] = s;
  return g;
}

Grammar grammar_for(const std::string& domain) {
  if (domain == "a") return grammar_a();
  if (domain == "b") return grammar_b();
  if (domain == "pretrain") return grammar_pretrain();
  throw Error("unknown domain '" + domain + "' (expected pretrain, a or b)");
}

void expand(const Grammar& g, const std::string& sym, Rng& rng, std::vector<std::string>& out) {
  if (sym.empty() || sym[0] != '$') {
    out.push_back(sym);
    return;
  }
  auto it = g.find(sym);
  if (it == g.end()) throw Error("grammar: unknown nonterminal " + sym);
  const Rule& rule = it->second;
  double total = 0.0;
  for (const auto& [w, seq] : rule.alts) total += w;
  double x = rng.uniform() * total;
  const std::vector<std::string>* chosen = &rule.alts.back().second;
  for (const auto& [w, seq] : rule.alts) {
    if (x < w) {
      chosen = &seq;
      break;
    }
    x -= w;
  }
  for (const std::string& s : *chosen) expand(g, s, rng, out);
}

// Per-character acoustic template. Derived from a fixed master seed so the
// same character sounds the same in every domain and corpus.
Eigen::VectorXd char_embedding(char c, int dim) {
  Rng rng(derive_seed(0x5eedc0de, std::string("char-embed-") + c));
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v(i) = rng.normal();
  return v;
}

std::string base64_encode(const unsigned char* data, size_t n) {
  static const char* tbl = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((n + 2) / 3 * 4);
  for (size_t i = 0; i < n; i += 3) {
    unsigned v = data[i] << 16;
    if (i + 1 < n) v |= data[i + 1] << 8;
    if (i + 2 < n) v |= data[i + 2];
    out.push_back(tbl[(v >> 18) & 63]);
    out.push_back(tbl[(v >> 12) & 63]);
    out.push_back(i + 1 < n ? tbl[(v >> 6) & 63] : '=');
    out.push_back(i + 2 < n ? tbl[v & 63] : '=');
  }
  return out;
}

std::vector<unsigned char> base64_decode(const std::string& s) {
  auto val = [](char c) -> int {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
  };
  std::vector<unsigned char> out;
  int buf = 0, bits = 0;
  for (char c : s) {
    if (c == '=') break;
    int v = val(c);
    if (v < 0) throw Error("base64: bad character");
    buf = (buf << 6) | v;
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<unsigned char>((buf >> bits) & 0xff));
    }
  }
  return out;
}

}  // namespace

std::vector<std::string> DomainSpec::word_inventory() const {
  Grammar g = grammar_for(domain);
  std::set<std::string> terms;
  for (const auto& [lhs, rule] : g)
    for (const auto& [w, seq] : rule.alts)
      for (const std::string& s : seq)
        if (!s.empty() && s[0] != '$') terms.insert(s);
  return {terms.begin(), terms.end()};
}

std::string sample_text(const DomainSpec& spec, Rng& rng) {
  Grammar g = grammar_for(spec.domain);
  std::vector<std::string> words;
  expand(g, "$S", rng, words);
  std::string out;
  for (size_t i = 0; i < words.size(); ++i) {
    if (i) out += ' ';
    out += words[i];
  }
  return out;
}

Matrix synth_feature_template(const DomainSpec& spec, const std::string& text, uint64_t utt_seed) {
  const int r = spec.frames_per_char, F = spec.feature_dim;
  Rng jitter_rng(derive_seed(utt_seed, "tail-jitter"));
  int tail = spec.tail_jitter_max > 0 ? jitter_rng.uniform_int(spec.tail_jitter_max + 1) : 0;
  const long T = static_cast<long>(text.size()) * r + tail;
  Matrix feats = Matrix::Zero(T, F);
  long t = 0;
  for (char c : text) {
    Eigen::VectorXd e = char_embedding(c, F);
    for (int k = 0; k < r; ++k) feats.row(t++) = e.transpose();
  }
  return feats;
}

Matrix synth_features(const DomainSpec& spec, const std::string& text, uint64_t utt_seed) {
  Matrix feats = synth_feature_template(spec, text, utt_seed);
  if (spec.noise_sigma > 0.0) {
    Rng noise_rng(derive_seed(utt_seed, "feat-noise"));
    for (long i = 0; i < feats.rows(); ++i)
      for (long j = 0; j < feats.cols(); ++j) feats(i, j) += spec.noise_sigma * noise_rng.normal();
  }
  return feats;
}

std::vector<SyntheticUtterance> gen_corpus(const DomainSpec& spec, int n_utts, bool paired) {
  if (n_utts < 1) throw Error("gen_corpus: n_utts must be >= 1");
  Rng text_rng(derive_seed(spec.seed, "text-" + spec.domain));
  std::vector<SyntheticUtterance> out;
  out.reserve(n_utts);
  for (int i = 0; i < n_utts; ++i) {
    SyntheticUtterance u;
    std::ostringstream id;
    id << spec.domain << "-" << std::setw(6) << std::setfill('0') << i;
    u.id = id.str();
    u.text = sample_text(spec, text_rng);
    u.domain = spec.domain;
    if (paired) u.features = synth_features(spec, u.text, derive_seed(spec.seed, "feat-" + u.id));
    out.push_back(std::move(u));
  }
  return out;
}

void feature_mask(Matrix& features, int time_masks, int max_time_width, int freq_masks,
                  int max_freq_width, Rng& rng) {
  const long T = features.rows(), F = features.cols();
  if (max_time_width >= T || max_freq_width >= F)
    throw Error("feature_mask: mask wider than the masked axis");
  for (int m = 0; m < time_masks; ++m) {
    int w = rng.uniform_int(max_time_width + 1);
    if (w == 0) continue;
    int start = rng.uniform_int(static_cast<int>(T) - w + 1);
    features.middleRows(start, w).setZero();
  }
  for (int m = 0; m < freq_masks; ++m) {
    int w = rng.uniform_int(max_freq_width + 1);
    if (w == 0) continue;
    int start = rng.uniform_int(static_cast<int>(F) - w + 1);
    features.middleCols(start, w).setZero();
  }
}

void save_manifest(const std::string& path, const std::vector<SyntheticUtterance>& utts) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("save_manifest: cannot open '" + path + "'");
  for (const SyntheticUtterance& u : utts) {
    nlohmann::json j;
    j["utterance_id"] = u.id;
    j["text"] = u.text;
    j["domain"] = u.domain;
    j["provenance"] = u.features ? "paired" : "text_only";
    if (u.features) {
      const Matrix& m = *u.features;
      std::vector<float> buf(static_cast<size_t>(m.size()));
      // row-major frame order: frame t contiguous
      size_t k = 0;
      for (long t = 0; t < m.rows(); ++t)
        for (long f = 0; f < m.cols(); ++f) buf[k++] = static_cast<float>(m(t, f));
      j["frames"] = m.rows();
      j["feature_dim"] = m.cols();
      j["features"] = base64_encode(reinterpret_cast<const unsigned char*>(buf.data()),
                                    sizeof(float) * buf.size());
    } else {
      j["features"] = nullptr;
    }
    out << j.dump() << "\n";
  }
}

std::vector<SyntheticUtterance> load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("load_manifest: cannot open '" + path + "'");
  std::vector<SyntheticUtterance> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line);
    SyntheticUtterance u;
    u.id = j.at("utterance_id");
    u.text = j.at("text");
    u.domain = j.value("domain", "");
    if (!j.at("features").is_null()) {
      long T = j.at("frames"), F = j.at("feature_dim");
      std::vector<unsigned char> raw = base64_decode(j.at("features").get<std::string>());
      if (raw.size() != sizeof(float) * static_cast<size_t>(T) * static_cast<size_t>(F))
        throw Error("load_manifest: feature payload size mismatch for " + u.id);
      const float* p = reinterpret_cast<const float*>(raw.data());
      Matrix m(T, F);
      size_t k = 0;
      for (long t = 0; t < T; ++t)
        for (long f = 0; f < F; ++f) m(t, f) = static_cast<double>(p[k++]);
      u.features = std::move(m);
    }
    out.push_back(std::move(u));
  }
  return out;
}

void save_text_lines(const std::string& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("save_text_lines: cannot open '" + path + "'");
  for (const std::string& l : lines) out << l << "\n";
}

std::vector<std::string> load_text_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("load_text_lines: cannot open '" + path + "'");
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(line);
  return out;
}

double unigram_kl(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::map<std::string, double> ca, cb;
  double na = 0, nb = 0;
  for (const std::string& s : a)
    for (const std::string& w : split_words(s)) ++ca[w], ++na;
  for (const std::string& s : b)
    for (const std::string& w : split_words(s)) ++cb[w], ++nb;
  std::set<std::string> vocab;
  for (const auto& [w, c] : ca) vocab.insert(w);
  for (const auto& [w, c] : cb) vocab.insert(w);
  const double k = 0.5, v = static_cast<double>(vocab.size());
  double kl = 0.0;
  for (const std::string& w : vocab) {
    double pa = ((ca.count(w) ? ca[w] : 0.0) + k) / (na + k * v);
    double pb = ((cb.count(w) ? cb[w] : 0.0) + k) / (nb + k * v);
    kl += pa * std::log(pa / pb);
  }
  return kl;
}

}  // namespace rnnt
