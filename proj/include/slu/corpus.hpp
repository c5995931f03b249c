#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "slu/error.hpp"

namespace slu {

// Tokens are lowercased, whitespace-free, non-empty strings. Tags and
// intents are kept verbatim.
std::string normalize_token(const std::string& raw);
std::vector<std::string> split_ws(const std::string& line);

struct LabeledUtterance {
  std::vector<std::string> tokens;
  std::vector<std::string> tags;
  std::string intent;

  bool operator==(const LabeledUtterance&) const = default;
};

struct Corpus {
  std::vector<LabeledUtterance> utterances;
  std::vector<std::string> intent_set;  // sorted distinct
  std::vector<std::string> slot_set;    // sorted distinct
  std::vector<std::string> word_set;    // sorted distinct

  static Corpus from_utterances(std::vector<LabeledUtterance> utts);
  size_t size() const { return utterances.size(); }
};

enum class CorpusFormat { Tsv, ParallelFiles };

// Tsv: one record per line, `tokens<TAB>tags<TAB>intent`, fields
// space-separated. ParallelFiles: `path` is a directory holding line-aligned
// seq.in / seq.out / label files.
Corpus load_corpus(const std::string& path, CorpusFormat format = CorpusFormat::Tsv);

void save_corpus_tsv(const Corpus& corpus, const std::string& path);

// Uniform sample of n utterances without replacement, deterministic per
// (corpus, n, seed); keeps the original relative order and recomputes the
// vocabulary sets.
Corpus subsample(const Corpus& corpus, size_t n, uint64_t seed);

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;
  static constexpr int kBlank = 4;
  static constexpr int kNumReserved = 5;

  static const std::vector<std::string>& reserved_tokens();

  // Reserved tokens first, then corpus tokens with frequency >= min_freq by
  // descending frequency, ties in lexicographic order.
  static Vocabulary build(const Corpus& corpus, int min_freq = 1);
  static Vocabulary build_from_sequences(const std::vector<std::vector<std::string>>& seqs, int min_freq = 1);
  // Rebuild from a serialized id-ordered token list (sidecar files).
  static Vocabulary from_tokens(std::vector<std::string> id_order);

  int id(const std::string& token) const;  // kUnk when absent
  bool contains(const std::string& token) const;
  const std::string& token(int id) const;
  int size() const { return static_cast<int>(by_id_.size()); }
  const std::vector<std::string>& tokens() const { return by_id_; }

  std::vector<int> encode(const std::vector<std::string>& tokens) const;
  std::vector<std::string> decode(const std::vector<int>& ids) const;

  uint64_t hash() const;  // FNV-1a over the id-ordered token list

 private:
  std::vector<std::string> by_id_;
  std::unordered_map<std::string, int> to_id_;
};

}  // namespace slu
