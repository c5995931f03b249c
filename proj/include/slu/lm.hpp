#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "slu/corpus.hpp"
#include "slu/params.hpp"
#include "slu/tape.hpp"

namespace slu {

enum class LmDirection { Forward, Backward };

struct LmHyper {
  int embed_size = 24;
  int hidden_size = 48;
  float lr = 0.003f;
  int epochs = 30;
  int batch_size = 1;
  float clip_norm = 5.0f;
  int min_freq = 1;
  // truncated-backpropagation window; 0 trains with full backpropagation
  int tbptt_window = 0;

  void validate() const;
};

// Recurrent next-token language model. Backward models are trained on
// reversed token sequences; the natural-order scoring helpers reverse their
// input internally, while the stepping interface used by beam search runs
// in the model's native direction.
class LanguageModel {
 public:
  static LanguageModel train(const std::vector<std::vector<std::string>>& utterances,
                             LmDirection direction, const LmHyper& hyper, uint64_t seed);

  // sum over positions of log P(w_i | preceding context in the model's
  // direction); tokens are given in natural reading order
  double log_likelihood(const std::vector<std::string>& tokens) const;
  // training-objective perplexity incl. the end-of-sentence prediction
  double perplexity(const std::vector<std::vector<std::string>>& utterances) const;

  struct State {
    Tensor h;
    Tensor c;
  };
  State start() const;  // state after consuming BOS
  State advance(const State& s, int token_id) const;
  Tensor next_log_probs(const State& s) const;  // log softmax over the vocabulary

  LmDirection direction() const { return direction_; }
  const Vocabulary& vocab() const { return vocab_; }
  const LmHyper& hyper() const { return hyper_; }

  void save(const std::string& dir) const;
  static LanguageModel load(const std::string& dir);

 private:
  LanguageModel() = default;
  void build_params(uint64_t seed);

  Vocabulary vocab_;
  LmDirection direction_ = LmDirection::Forward;
  LmHyper hyper_;
  uint64_t seed_ = 0;

  mutable ParamStore ps_;
  int emb_ = -1;
  LstmParamIds cell_;
  AffineParamIds out_;
};

}  // namespace slu
