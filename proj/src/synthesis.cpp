#include "cbart/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace cbart {

InsertionStrategy insertion_strategy_from_string(const std::string& name) {
  if (name == "left") return InsertionStrategy::kLeft;
  if (name == "middle") return InsertionStrategy::kMiddle;
  if (name == "right") return InsertionStrategy::kRight;
  if (name == "random") return InsertionStrategy::kRandom;
  if (name == "tfidf") return InsertionStrategy::kTfIdf;
  throw std::runtime_error("unknown insertion strategy: " + name);
}

std::string to_string(InsertionStrategy s) {
  switch (s) {
    case InsertionStrategy::kLeft: return "left";
    case InsertionStrategy::kMiddle: return "middle";
    case InsertionStrategy::kRight: return "right";
    case InsertionStrategy::kRandom: return "random";
    case InsertionStrategy::kTfIdf: return "tfidf";
  }
  throw std::logic_error("bad insertion strategy");
}

void validate_instance(const TrainingInstance& inst) {
  const std::size_t n = inst.x.size();
  if (inst.l.size() != n) throw std::runtime_error("instance: |l| != |x|");
  if (n < 2 || inst.x.front() != kBosId || inst.x.back() != kEosId) {
    throw std::runtime_error("instance: x missing BOS/EOS");
  }
  if (inst.l.front() != static_cast<int>(ActionLabel::kCopy)) {
    throw std::runtime_error("instance: BOS label must be copy");
  }
  std::size_t inserts = 0;
  std::size_t replaces = 0;
  for (const int l : inst.l) {
    if (l < 0 || l > 2) throw std::runtime_error("instance: bad label value");
    if (l == static_cast<int>(ActionLabel::kInsert)) ++inserts;
    if (l == static_cast<int>(ActionLabel::kReplace)) ++replaces;
  }
  const std::size_t m = n + inserts;
  if (inst.ym.size() != m || inst.y.size() != m) {
    throw std::runtime_error("instance: |ym| or |y| != |x| + #insert");
  }
  if (inst.ym[0] != kEosId || inst.ym[1] != kBosId) {
    throw std::runtime_error("instance: ym must start with EOS, BOS");
  }
  std::size_t masks = 0;
  for (const int t : inst.ym) {
    if (t == kMaskId) ++masks;
  }
  if (masks != inserts + replaces) {
    throw std::runtime_error("instance: mask count != #insert + #replace");
  }
  for (const int t : inst.y) {
    if (t == kMaskId || t == kPadId) throw std::runtime_error("instance: y contains MASK/PAD");
  }
  if (inst.y.front() != kBosId || inst.y.back() != kEosId) {
    throw std::runtime_error("instance: y missing BOS/EOS");
  }
}

std::vector<std::size_t> subsample(const SentenceIds& original, Rng& rng) {
  validate_sentence(original);
  const std::size_t interior = original.interior_len();
  if (interior < 1) throw std::runtime_error("subsample: sentence has no interior tokens");

  const std::size_t keep_count = 1 + static_cast<std::size_t>(rng.uniform_below(interior));
  auto picks = rng.sample_without_replacement(interior, keep_count);
  std::vector<std::size_t> kept;
  kept.reserve(keep_count + 2);
  kept.push_back(0);
  for (const std::size_t p : picks) kept.push_back(p + 1);
  kept.push_back(original.ids.size() - 1);
  std::sort(kept.begin(), kept.end());
  return kept;
}

std::vector<std::size_t> replacement_eligible(const std::vector<std::size_t>& kept_indices,
                                              std::size_t original_len) {
  std::vector<std::size_t> eligible;
  for (std::size_t j = 1; j + 1 < kept_indices.size(); ++j) {
    if (kept_indices[j] == kept_indices[j - 1] + 1) eligible.push_back(j);
  }
  (void)original_len;
  return eligible;
}

ReplacementResult apply_replacements_at(const SentenceIds& original,
                                        const std::vector<std::size_t>& kept_indices,
                                        const std::vector<std::size_t>& positions,
                                        const std::vector<int>& replacement_tokens) {
  if (positions.size() != replacement_tokens.size()) {
    throw std::invalid_argument("apply_replacements_at: mismatched inputs");
  }
  ReplacementResult out;
  out.x.ids.reserve(kept_indices.size());
  for (const std::size_t idx : kept_indices) out.x.ids.push_back(original.ids[idx]);
  out.replaced.assign(kept_indices.size(), false);
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const std::size_t j = positions[i];
    if (j == 0 || j + 1 >= kept_indices.size()) {
      throw std::invalid_argument("apply_replacements_at: cannot replace specials");
    }
    out.x.ids[j] = replacement_tokens[i];
    out.replaced[j] = true;
  }
  return out;
}

ReplacementResult apply_replacements(const SentenceIds& original,
                                     const std::vector<std::size_t>& kept_indices, double rate,
                                     Rng& rng, const Vocab& vocab) {
  if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("replace rate must be in [0,1)");
  const auto eligible = replacement_eligible(kept_indices, original.ids.size());
  const auto count = static_cast<std::size_t>(
      std::llround(rate * static_cast<double>(eligible.size())));

  std::vector<std::size_t> positions;
  if (count > 0) {
    auto picks = rng.sample_without_replacement(eligible.size(), count);
    std::sort(picks.begin(), picks.end());
    for (const std::size_t p : picks) positions.push_back(eligible[p]);
  }

  const int non_special = vocab.size() - kNumSpecials;
  std::vector<int> tokens;
  tokens.reserve(positions.size());
  for (const std::size_t j : positions) {
    const int orig = original.ids[kept_indices[j]];
    const bool orig_is_candidate = orig >= kNumSpecials;
    const int candidates = non_special - (orig_is_candidate ? 1 : 0);
    if (candidates < 1) throw std::runtime_error("vocab too small for replacement");
    int pick = kNumSpecials + static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(candidates)));
    if (orig_is_candidate && pick >= orig) ++pick;
    tokens.push_back(pick);
  }
  return apply_replacements_at(original, kept_indices, positions, tokens);
}

std::vector<int> derive_labels(const std::vector<std::size_t>& kept_indices,
                               const std::vector<bool>& replaced) {
  if (kept_indices.size() != replaced.size()) {
    throw std::invalid_argument("derive_labels: mismatched inputs");
  }
  std::vector<int> labels(kept_indices.size(), static_cast<int>(ActionLabel::kCopy));
  for (std::size_t j = 1; j < kept_indices.size(); ++j) {
    if (kept_indices[j] > kept_indices[j - 1] + 1) {
      if (replaced[j]) throw std::logic_error("derive_labels: insert/replace collision");
      labels[j] = static_cast<int>(ActionLabel::kInsert);
    } else if (replaced[j]) {
      labels[j] = static_cast<int>(ActionLabel::kReplace);
    }
  }
  return labels;
}

namespace {

int pick_gold_insert(const std::vector<int>& gap, const SentenceIds& original,
                     InsertionStrategy strategy, const TfIdfTable& tfidf, Rng& rng) {
  switch (strategy) {
    case InsertionStrategy::kLeft:
      return gap.front();
    case InsertionStrategy::kMiddle:
      return gap[(gap.size() - 1) / 2];
    case InsertionStrategy::kRight:
      return gap.back();
    case InsertionStrategy::kRandom:
      return gap[rng.uniform_below(gap.size())];
    case InsertionStrategy::kTfIdf: {
      std::size_t best = 0;
      double best_score = sentence_tfidf(original, gap[0], tfidf);
      for (std::size_t i = 1; i < gap.size(); ++i) {
        const double s = sentence_tfidf(original, gap[i], tfidf);
        if (s > best_score) {
          best = i;
          best_score = s;
        }
      }
      return gap[best];
    }
  }
  throw std::logic_error("bad insertion strategy");
}

}  // namespace

DecoderPair build_decoder_pair(const std::vector<int>& x, const std::vector<int>& labels,
                               const SentenceIds& original,
                               const std::vector<std::size_t>& kept_indices,
                               InsertionStrategy strategy, const TfIdfTable& tfidf, Rng& rng) {
  if (x.size() != labels.size() || x.size() != kept_indices.size()) {
    throw std::invalid_argument("build_decoder_pair: mismatched inputs");
  }
  std::vector<int> unshifted;
  std::vector<int> gold;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const auto label = static_cast<ActionLabel>(labels[j]);
    if (label == ActionLabel::kInsert) {
      std::vector<int> gap;
      for (std::size_t idx = kept_indices[j - 1] + 1; idx < kept_indices[j]; ++idx) {
        gap.push_back(original.ids[idx]);
      }
      unshifted.push_back(kMaskId);
      gold.push_back(pick_gold_insert(gap, original, strategy, tfidf, rng));
    }
    if (label == ActionLabel::kReplace) {
      unshifted.push_back(kMaskId);
      gold.push_back(original.ids[kept_indices[j]]);
    } else {
      unshifted.push_back(x[j]);
      gold.push_back(x[j]);
    }
  }

  DecoderPair pair;
  pair.ym.reserve(unshifted.size());
  pair.ym.push_back(kEosId);
  pair.ym.insert(pair.ym.end(), unshifted.begin(), unshifted.end() - 1);
  pair.y = std::move(gold);
  return pair;
}

std::vector<TrainingInstance> make_instances_for_sentence(const SentenceIds& original,
                                                          std::size_t line_index,
                                                          const Vocab& vocab,
                                                          const TfIdfTable& tfidf,
                                                          const SynthesisConfig& cfg) {
  if (cfg.instances_per_sentence < 1) {
    throw std::invalid_argument("instances_per_sentence must be >= 1");
  }
  Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(line_index)));
  std::vector<TrainingInstance> out;
  out.reserve(static_cast<std::size_t>(cfg.instances_per_sentence));
  for (int i = 0; i < cfg.instances_per_sentence; ++i) {
    const auto kept = subsample(original, rng);
    const auto rep = apply_replacements(original, kept, cfg.replace_rate, rng, vocab);
    TrainingInstance inst;
    inst.x = rep.x.ids;
    inst.l = derive_labels(kept, rep.replaced);
    auto pair = build_decoder_pair(inst.x, inst.l, original, kept, cfg.strategy, tfidf, rng);
    inst.ym = std::move(pair.ym);
    inst.y = std::move(pair.y);
    out.push_back(std::move(inst));
  }
  return out;
}

std::vector<TrainingInstance> make_dataset(const std::vector<std::string>& corpus_lines,
                                           const Vocab& vocab, const SynthesisConfig& cfg,
                                           int threads) {
  if (corpus_lines.empty()) throw std::runtime_error("empty corpus");
  const auto tfidf = build_tfidf(corpus_lines, vocab);
  std::vector<std::vector<TrainingInstance>> per_line(corpus_lines.size());
  parallel_for(corpus_lines.size(), threads, [&](std::size_t i) {
    const SentenceIds original = encode(corpus_lines[i], vocab);
    per_line[i] = make_instances_for_sentence(original, i, vocab, tfidf, cfg);
  });
  std::vector<TrainingInstance> out;
  out.reserve(corpus_lines.size() * static_cast<std::size_t>(cfg.instances_per_sentence));
  for (auto& group : per_line) {
    for (auto& inst : group) out.push_back(std::move(inst));
  }
  return out;
}

namespace {

void append_int_array(std::string& out, const char* key, const std::vector<int>& vals) {
  out += '"';
  out += key;
  out += "\":[";
  for (std::size_t i = 0; i < vals.size(); ++i) {
    if (i > 0) out += ',';
    out += std::to_string(vals[i]);
  }
  out += ']';
}

}  // namespace

std::string instance_to_json(const TrainingInstance& inst) {
  std::string out = "{";
  append_int_array(out, "x", inst.x);
  out += ',';
  append_int_array(out, "l", inst.l);
  out += ',';
  append_int_array(out, "ym", inst.ym);
  out += ',';
  append_int_array(out, "y", inst.y);
  out += '}';
  return out;
}

TrainingInstance instance_from_json(const std::string& line) {
  const auto j = nlohmann::json::parse(line);
  TrainingInstance inst;
  inst.x = j.at("x").get<std::vector<int>>();
  inst.l = j.at("l").get<std::vector<int>>();
  inst.ym = j.at("ym").get<std::vector<int>>();
  inst.y = j.at("y").get<std::vector<int>>();
  validate_instance(inst);
  return inst;
}

void save_dataset(const std::vector<TrainingInstance>& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write dataset file: " + path);
  for (const auto& inst : data) out << instance_to_json(inst) << '\n';
}

std::vector<TrainingInstance> load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path);
  std::vector<TrainingInstance> data;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    data.push_back(instance_from_json(line));
  }
  if (data.empty()) throw std::runtime_error("dataset file is empty: " + path);
  return data;
}

}  // namespace cbart
