#include "cbart/text.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_set>

namespace cbart {

namespace {

const char* const kSpecialSurface[kNumSpecials] = {"<PAD>", "<UNK>", "<S>", "</S>", "<M>"};

// ~50 English function words. Punctuation-only tokens are filtered
// separately. The list is frozen; changing it changes keyword extraction.
const std::unordered_set<std::string>& stopword_set() {
  static const std::unordered_set<std::string> kStopwords = {
      "a",    "an",   "the",  "and",  "or",    "but",  "if",    "of",   "in",   "on",
      "at",   "by",   "for",  "with", "to",    "from", "as",    "is",   "are",  "was",
      "were", "be",   "been", "being", "am",   "do",   "does",  "did",  "have", "has",
      "had",  "not",  "no",   "nor",  "so",    "it",   "its",   "he",   "she",  "they",
      "them", "his",  "her",  "their", "we",   "you",  "i",     "me",   "my",   "our",
      "your", "this", "that", "these", "those", "there", "than", "then", "too",  "very"};
  return kStopwords;
}

bool is_punctuation_token(const std::string& token) {
  for (const char c : token) {
    if (std::isalnum(static_cast<unsigned char>(c))) return false;
  }
  return !token.empty();
}

}  // namespace

std::vector<std::string> split_whitespace(const std::string& line) {
  std::vector<std::string> tokens;
  std::istringstream in(line);
  std::string tok;
  while (in >> tok) tokens.push_back(tok);
  return tokens;
}

std::vector<std::string> load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (split_whitespace(line).empty()) continue;
    lines.push_back(line);
  }
  return lines;
}

Vocab Vocab::from_tokens(const std::vector<std::string>& tokens) {
  Vocab v;
  for (int i = 0; i < kNumSpecials; ++i) {
    v.id_to_token_.emplace_back(kSpecialSurface[i]);
    v.token_to_id_[kSpecialSurface[i]] = i;
  }
  for (const auto& tok : tokens) {
    if (v.token_to_id_.count(tok) > 0) {
      throw std::runtime_error("duplicate token in vocab: " + tok);
    }
    v.token_to_id_[tok] = static_cast<int>(v.id_to_token_.size());
    v.id_to_token_.push_back(tok);
  }
  return v;
}

void Vocab::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write vocab file: " + path);
  for (const auto& tok : id_to_token_) out << tok << '\n';
}

Vocab Vocab::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open vocab file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  if (lines.size() < kNumSpecials) throw std::runtime_error("vocab file too short: " + path);
  for (int i = 0; i < kNumSpecials; ++i) {
    if (lines[static_cast<std::size_t>(i)] != kSpecialSurface[i]) {
      throw std::runtime_error("vocab file missing special token line " + std::to_string(i));
    }
  }
  return from_tokens({lines.begin() + kNumSpecials, lines.end()});
}

Vocab build_vocab(const std::vector<std::string>& corpus_lines, int min_freq, int max_size) {
  if (corpus_lines.empty()) throw std::runtime_error("empty corpus");
  if (min_freq < 1) throw std::invalid_argument("min_freq must be >= 1");
  if (max_size < kNumSpecials + 1) throw std::invalid_argument("max_size must be >= 6");

  std::unordered_map<std::string, std::int64_t> freq;
  for (const auto& line : corpus_lines) {
    for (const auto& tok : split_whitespace(line)) ++freq[tok];
  }

  std::vector<std::pair<std::string, std::int64_t>> items;
  items.reserve(freq.size());
  for (auto& kv : freq) {
    if (kv.second >= min_freq) items.emplace_back(kv.first, kv.second);
  }
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  const std::size_t keep = std::min(items.size(), static_cast<std::size_t>(max_size - kNumSpecials));
  std::vector<std::string> tokens;
  tokens.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) tokens.push_back(items[i].first);
  return Vocab::from_tokens(tokens);
}

void validate_sentence(const SentenceIds& s) {
  if (s.ids.size() < 2 || s.ids.front() != kBosId || s.ids.back() != kEosId) {
    throw std::runtime_error("malformed sentence: missing BOS/EOS");
  }
  for (std::size_t i = 1; i + 1 < s.ids.size(); ++i) {
    const int id = s.ids[i];
    if (id == kPadId || id == kBosId || id == kEosId || id == kMaskId) {
      throw std::runtime_error("malformed sentence: special token in interior");
    }
  }
}

SentenceIds encode(const std::string& text, const Vocab& vocab) {
  SentenceIds s;
  s.ids.push_back(kBosId);
  for (const auto& tok : split_whitespace(text)) s.ids.push_back(vocab.id(tok));
  s.ids.push_back(kEosId);
  return s;
}

std::string decode(const SentenceIds& sentence, const Vocab& vocab) {
  validate_sentence(sentence);
  std::string out;
  for (std::size_t i = 1; i + 1 < sentence.ids.size(); ++i) {
    if (!out.empty()) out += ' ';
    out += vocab.token(sentence.ids[i]);
  }
  return out;
}

TfIdfTable build_tfidf(const std::vector<std::string>& corpus_lines, const Vocab& vocab) {
  if (corpus_lines.empty()) throw std::runtime_error("empty corpus");
  TfIdfTable table;
  table.doc_count = static_cast<std::int64_t>(corpus_lines.size());
  for (const auto& line : corpus_lines) {
    std::unordered_set<int> seen;
    for (const auto& tok : split_whitespace(line)) seen.insert(vocab.id(tok));
    for (const int id : seen) ++table.doc_freq[id];
  }
  for (const auto& [id, df] : table.doc_freq) {
    table.score[id] = std::log(static_cast<double>(table.doc_count) / static_cast<double>(df));
  }
  return table;
}

double sentence_tfidf(const SentenceIds& sentence, int token_id, const TfIdfTable& table) {
  const std::size_t n = sentence.interior_len();
  if (n == 0) return 0.0;
  std::int64_t count = 0;
  for (std::size_t i = 1; i + 1 < sentence.ids.size(); ++i) {
    if (sentence.ids[i] == token_id) ++count;
  }
  return (static_cast<double>(count) / static_cast<double>(n)) * table.idf(token_id);
}

bool is_stopword(const std::string& token) { return stopword_set().count(token) > 0; }

bool keyword_eligible(const std::string& token) {
  if (token.size() < 2) return false;
  if (is_stopword(token)) return false;
  if (is_punctuation_token(token)) return false;
  return true;
}

std::vector<int> extract_keywords(const SentenceIds& sentence, const Vocab& vocab, int n,
                                  std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("extract_keywords: n must be >= 1");
  validate_sentence(sentence);

  // Eligible positions, deduplicated by surface form (first occurrence wins)
  // so the extracted keywords are pairwise distinct tokens.
  std::vector<std::size_t> eligible;
  std::unordered_set<std::string> seen;
  for (std::size_t i = 1; i + 1 < sentence.ids.size(); ++i) {
    const int id = sentence.ids[i];
    if (id == kUnkId) continue;
    const std::string& surface = vocab.token(id);
    if (!keyword_eligible(surface)) continue;
    if (!seen.insert(surface).second) continue;
    eligible.push_back(i);
  }
  if (eligible.size() < static_cast<std::size_t>(n)) {
    throw std::runtime_error("insufficient keywords");
  }

  Rng rng(seed);
  auto picks = rng.sample_without_replacement(eligible.size(), static_cast<std::size_t>(n));
  std::sort(picks.begin(), picks.end());
  std::vector<int> keywords;
  keywords.reserve(picks.size());
  for (const std::size_t p : picks) keywords.push_back(sentence.ids[eligible[p]]);
  return keywords;
}

}  // namespace cbart
