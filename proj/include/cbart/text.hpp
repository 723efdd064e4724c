#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "cbart/common.hpp"

namespace cbart {

// Reserved token ids. Every vocabulary starts with these five.
inline constexpr int kPadId = 0;
inline constexpr int kUnkId = 1;
inline constexpr int kBosId = 2;
inline constexpr int kEosId = 3;
inline constexpr int kMaskId = 4;
inline constexpr int kNumSpecials = 5;

inline bool is_special(int id) { return id >= 0 && id < kNumSpecials; }

// Token/string <-> dense id map. Ids 0..4 are PAD, UNK, <S>, </S>, <M>.
class Vocab {
 public:
  Vocab() = default;

  static Vocab from_tokens(const std::vector<std::string>& corpus_tokens_in_order);

  int id(const std::string& token) const {
    auto it = token_to_id_.find(token);
    return it == token_to_id_.end() ? kUnkId : it->second;
  }
  bool contains(const std::string& token) const { return token_to_id_.count(token) > 0; }
  const std::string& token(int id) const { return id_to_token_.at(static_cast<std::size_t>(id)); }
  int size() const { return static_cast<int>(id_to_token_.size()); }

  void save(const std::string& path) const;
  static Vocab load(const std::string& path);

 private:
  std::unordered_map<std::string, int> token_to_id_;
  std::vector<std::string> id_to_token_;
};

// A sentence as token ids: ids.front()==BOS, ids.back()==EOS, interior free
// of specials.
struct SentenceIds {
  std::vector<int> ids;

  std::size_t interior_len() const { return ids.size() >= 2 ? ids.size() - 2 : 0; }
  bool operator==(const SentenceIds& other) const { return ids == other.ids; }
};

void validate_sentence(const SentenceIds& s);

struct TfIdfTable {
  std::unordered_map<int, double> score;  // token id -> idf
  std::int64_t doc_count = 0;
  std::unordered_map<int, std::int64_t> doc_freq;

  double idf(int token_id) const {
    auto it = score.find(token_id);
    return it == score.end() ? 0.0 : it->second;
  }
};

std::vector<std::string> split_whitespace(const std::string& line);

// Corpus file IO: one sentence per line, UTF-8, LF endings. Blank lines are
// skipped.
std::vector<std::string> load_corpus(const std::string& path);

Vocab build_vocab(const std::vector<std::string>& corpus_lines, int min_freq, int max_size);

SentenceIds encode(const std::string& text, const Vocab& vocab);
std::string decode(const SentenceIds& sentence, const Vocab& vocab);

TfIdfTable build_tfidf(const std::vector<std::string>& corpus_lines, const Vocab& vocab);

// Within-sentence score of one occurrence: (count in interior / interior
// length) * idf.
double sentence_tfidf(const SentenceIds& sentence, int token_id, const TfIdfTable& table);

bool is_stopword(const std::string& token);

// True for tokens the keyword extractor may pick: interior content words at
// least two characters long, not stopwords, not UNK.
bool keyword_eligible(const std::string& token);

// n keyword ids sampled without replacement from the eligible interior
// tokens (first occurrence per distinct surface form), returned in sentence
// order. Throws "insufficient keywords" when fewer than n are eligible.
std::vector<int> extract_keywords(const SentenceIds& sentence, const Vocab& vocab, int n,
                                  std::uint64_t seed);

}  // namespace cbart
