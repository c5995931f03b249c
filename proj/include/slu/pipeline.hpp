#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "slu/lm.hpp"
#include "slu/parser.hpp"
#include "slu/seq2seq.hpp"

namespace slu {

struct Candidate {
  std::vector<std::string> tokens;
  std::string generator;
};

// A paraphrase source plugged into the hybrid parser; produces up to two
// candidate utterances for a low-confidence parse.
class Paraphraser {
 public:
  virtual ~Paraphraser() = default;
  virtual std::vector<Candidate> generate(const std::vector<std::string>& tokens,
                                          const Parse& base) const = 0;
  virtual std::string name() const = 0;
};

class RnnParaphraser : public Paraphraser {
 public:
  RnnParaphraser(const LanguageModel* forward, const LanguageModel* backward, size_t width)
      : lf_(forward), lb_(backward), width_(width) {}
  std::vector<Candidate> generate(const std::vector<std::string>& tokens,
                                  const Parse& base) const override;
  std::string name() const override { return "rnn"; }

 private:
  const LanguageModel* lf_;
  const LanguageModel* lb_;
  size_t width_;
};

class S2sParaphraser : public Paraphraser {
 public:
  explicit S2sParaphraser(const MultiTaskSeq2Seq* model) : model_(model) {}
  std::vector<Candidate> generate(const std::vector<std::string>& tokens,
                                  const Parse& base) const override;
  std::string name() const override { return "seq2seq"; }

 private:
  const MultiTaskSeq2Seq* model_;
};

struct AlignedCandidate {
  Candidate candidate;
  Parse parse;
  // original position -> candidate position contributing a tag vote, -1 to
  // abstain. Same-length candidates align positionally; others by LCS token
  // identity.
  std::vector<int> align;
};

enum class Provenance { GatePassed, Voted };

struct VotedParse {
  Parse final;
  Parse base;
  Provenance provenance = Provenance::GatePassed;
  std::vector<AlignedCandidate> candidates;
  std::vector<std::string> warnings;
};

// LCS alignment over token equality; align[i] is the matched candidate
// position for original position i, or -1.
std::vector<int> lcs_align(const std::vector<std::string>& original,
                           const std::vector<std::string>& candidate);

// Majority vote over {base} + candidates: plurality intent (ties by highest
// s_intent, then the base parse) and per-position plurality tags (ties keep
// the base tag). Scores are recomputed from the winning probabilities.
Parse vote(const Parse& base, const std::vector<AlignedCandidate>& candidates,
           const std::vector<std::string>& original_tokens);

using ParseFn = std::function<Parse(const std::vector<std::string>&)>;

// Confidence-gated hybrid parser: utterances whose total confidence reaches
// tau keep their base parse untouched; the rest are paraphrased, re-parsed,
// and resolved by vote.
class HybridParser {
 public:
  HybridParser(ParseFn base_parser, float tau) : parse_(std::move(base_parser)), tau_(tau) {
    require(tau >= 0.0f && tau <= 1.0f, "hybrid parser: tau must lie in [0, 1]");
  }

  void add_generator(std::shared_ptr<const Paraphraser> gen) { generators_.push_back(std::move(gen)); }
  size_t generator_count() const { return generators_.size(); }
  float tau() const { return tau_; }

  VotedParse hybrid_parse(const std::vector<std::string>& tokens) const;

 private:
  ParseFn parse_;
  float tau_;
  std::vector<std::shared_ptr<const Paraphraser>> generators_;
};

}  // namespace slu
