#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "cbart/common.hpp"
#include "cbart/text.hpp"

namespace cbart {

// Per-token edit action predicted by the encoder. The integer encoding is
// part of the dataset file format.
enum class ActionLabel : int { kCopy = 0, kReplace = 1, kInsert = 2 };

enum class InsertionStrategy { kLeft, kMiddle, kRight, kRandom, kTfIdf };

InsertionStrategy insertion_strategy_from_string(const std::string& name);
std::string to_string(InsertionStrategy s);

// One supervised quadruple: encoder input x with labels l, decoder input ym
// (right-shifted, EOS start) and decoder target y.
struct TrainingInstance {
  std::vector<int> x;
  std::vector<int> l;   // ActionLabel per x position
  std::vector<int> ym;  // length m == |x| + #insert
  std::vector<int> y;   // length m, no MASK/PAD

  bool operator==(const TrainingInstance& other) const = default;
};

void validate_instance(const TrainingInstance& inst);

// Indices into `original` to keep. BOS and EOS are always kept; the interior
// keep-count is uniform on {1..interior}.
std::vector<std::size_t> subsample(const SentenceIds& original, Rng& rng);

struct ReplacementResult {
  SentenceIds x;
  std::vector<bool> replaced;  // aligned with kept positions
};

// Deterministic core: replace the kept positions listed in `positions`
// (indices into kept_indices) with the given tokens.
ReplacementResult apply_replacements_at(const SentenceIds& original,
                                        const std::vector<std::size_t>& kept_indices,
                                        const std::vector<std::size_t>& positions,
                                        const std::vector<int>& replacement_tokens);

// Positions eligible for replacement: kept interior tokens whose original
// predecessor was also kept (gap-preceded tokens carry the insert label).
std::vector<std::size_t> replacement_eligible(const std::vector<std::size_t>& kept_indices,
                                              std::size_t original_len);

ReplacementResult apply_replacements(const SentenceIds& original,
                                     const std::vector<std::size_t>& kept_indices, double rate,
                                     Rng& rng, const Vocab& vocab);

std::vector<int> derive_labels(const std::vector<std::size_t>& kept_indices,
                               const std::vector<bool>& replaced);

struct DecoderPair {
  std::vector<int> ym;
  std::vector<int> y;
};

DecoderPair build_decoder_pair(const std::vector<int>& x, const std::vector<int>& labels,
                               const SentenceIds& original,
                               const std::vector<std::size_t>& kept_indices,
                               InsertionStrategy strategy, const TfIdfTable& tfidf, Rng& rng);

struct SynthesisConfig {
  InsertionStrategy strategy = InsertionStrategy::kLeft;
  int instances_per_sentence = 10;
  double replace_rate = 0.15;
  std::uint64_t seed = 0;
};

// One sentence -> instances_per_sentence quadruples, using a sub-seed derived
// from (cfg.seed, line_index) so generation is order-independent.
std::vector<TrainingInstance> make_instances_for_sentence(const SentenceIds& original,
                                                          std::size_t line_index,
                                                          const Vocab& vocab,
                                                          const TfIdfTable& tfidf,
                                                          const SynthesisConfig& cfg);

std::vector<TrainingInstance> make_dataset(const std::vector<std::string>& corpus_lines,
                                           const Vocab& vocab, const SynthesisConfig& cfg,
                                           int threads = 1);

// JSON Lines with integer-array fields "x", "l", "ym", "y" in that order.
std::string instance_to_json(const TrainingInstance& inst);
TrainingInstance instance_from_json(const std::string& line);
void save_dataset(const std::vector<TrainingInstance>& data, const std::string& path);
std::vector<TrainingInstance> load_dataset(const std::string& path);

}  // namespace cbart
