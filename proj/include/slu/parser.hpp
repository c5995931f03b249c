#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "slu/corpus.hpp"
#include "slu/params.hpp"
#include "slu/tape.hpp"

namespace slu {

struct ParserHyper {
  int embed_size = 24;
  int hidden_size = 48;
  int attention_size = 32;
  float lr = 0.002f;
  int epochs = 20;
  int batch_size = 1;
  float clip_norm = 5.0f;
  int min_freq = 1;

  void validate() const;
};

struct Parse {
  std::string intent;
  float intent_prob = 0.0f;
  std::vector<std::string> tags;
  std::vector<float> tag_probs;
  float s_intent = 0.0f;
  float s_slot = 0.0f;
  float s_total = 0.0f;

  bool operator==(const Parse&) const = default;
};

struct ConfidenceScores {
  float s_intent;
  float s_slot;
  float s_total;
};

// s_intent is the chosen intent's softmax probability, s_slot the geometric
// mean exp(mean log p) of the chosen tag probabilities, s_total their min.
ConfidenceScores confidence(float intent_prob, const std::vector<float>& tag_probs);

// Joint intent classifier and slot tagger: shared bidirectional LSTM
// encoder, per-token slot projection over [h_fwd; h_bwd], and an intent head
// attending over the encoder states with a learned query.
class ParserModel {
 public:
  static ParserModel train(const Corpus& train, const Corpus& dev, const ParserHyper& hyper,
                           uint64_t seed);

  Parse parse(const std::vector<std::string>& tokens) const;

  void save(const std::string& dir) const;
  static ParserModel load(const std::string& dir);

  const Vocabulary& words() const { return words_; }
  const std::vector<std::string>& slot_labels() const { return slots_; }
  const std::vector<std::string>& intent_labels() const { return intents_; }
  const ParserHyper& hyper() const { return hyper_; }

 private:
  ParserModel() = default;
  void build_params(uint64_t seed);
  // builds the encoder over token ids; outputs one Var per position
  std::vector<Tape<float>::Var> encode(Tape<float>& tape, const std::vector<int>& ids) const;
  Tape<float>::Var intent_logits(Tape<float>& tape, const std::vector<Tape<float>::Var>& enc) const;

  Vocabulary words_;
  std::vector<std::string> slots_;
  std::vector<std::string> intents_;
  ParserHyper hyper_;
  uint64_t seed_ = 0;

  mutable ParamStore ps_;  // parse() builds read-only tapes over this store
  int emb_ = -1;
  LstmParamIds fwd_, bwd_;
  AffineParamIds slot_proj_;
  AttentionParamIds att_;
  int att_query_ = -1;
  AffineParamIds intent_proj_;
};

}  // namespace slu
