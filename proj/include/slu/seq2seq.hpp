#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "slu/corpus.hpp"
#include "slu/paradata.hpp"
#include "slu/params.hpp"
#include "slu/tape.hpp"

namespace slu {

struct S2sHyper {
  int embed_size = 24;
  int hidden_size = 48;
  int attention_size = 32;
  float lr = 0.002f;
  int epochs = 15;
  int batch_size = 1;
  float clip_norm = 5.0f;
  int min_freq = 1;
  int max_decode_len = 40;

  void validate() const;
};

struct DecodedPair {
  std::vector<std::string> paraphrase;      // decoder 1
  std::vector<std::string> reconstruction;  // decoder 2
};

// One encoder, two decoders sharing its embedding table: decoder 1 is
// trained to emit the paraphrase, decoder 2 to reconstruct the input. Both
// are initialized from the final encoder state and attend over the encoder
// outputs with their own attention parameters.
class MultiTaskSeq2Seq {
 public:
  static MultiTaskSeq2Seq train(const std::vector<ParaphrasePair>& pairs,
                                const std::vector<ParaphrasePair>& dev_pairs, const S2sHyper& hyper,
                                uint64_t seed);

  DecodedPair decode_paraphrases(const std::vector<std::string>& tokens, int max_len) const;

  // mean BLEU(D1 output vs. input) + mean exact-match reconstruction at D2
  double validation_metric(const std::vector<ParaphrasePair>& dev_pairs) const;

  // teacher-forced sequence losses (mean token cross-entropy per decoder)
  double decoder_loss(int decoder, const ParaphrasePair& pair) const;
  double joint_loss(const ParaphrasePair& pair) const;

  // greedy-decode logits trace for structural checks
  std::vector<Tensor> decoder_logit_trace(int decoder, const std::vector<std::string>& tokens,
                                          int max_len) const;

  std::vector<std::string> param_names() const;
  void perturb_param(const std::string& name, float delta);  // test hook

  const Vocabulary& vocab() const { return vocab_; }
  const S2sHyper& hyper() const { return hyper_; }

  void save(const std::string& dir) const;
  static MultiTaskSeq2Seq load(const std::string& dir);

 private:
  struct Decoder {
    LstmParamIds cell;
    AttentionParamIds att;
    AffineParamIds out;
  };

  MultiTaskSeq2Seq() = default;
  void build_params(uint64_t seed);

  struct Encoded {
    std::vector<Tape<float>::Var> states;
    Tape<float>::Var final_h;
    Tape<float>::Var final_c;
  };
  Encoded encode(Tape<float>& tape, const std::vector<int>& ids) const;

  // one decoder step; returns (logits, h, c)
  struct StepOut {
    Tape<float>::Var logits;
    Tape<float>::Var h;
    Tape<float>::Var c;
  };
  StepOut step(Tape<float>& tape, const Decoder& dec, const Encoded& enc, int prev_token,
               Tape<float>::Var h, Tape<float>::Var c) const;

  Tape<float>::Var sequence_loss(Tape<float>& tape, const Decoder& dec, const Encoded& enc,
                                 const std::vector<int>& target) const;
  std::vector<std::string> greedy(const Decoder& dec, const std::vector<int>& ids, int max_len,
                                  std::vector<Tensor>* logit_trace = nullptr) const;

  Vocabulary vocab_;
  S2sHyper hyper_;
  uint64_t seed_ = 0;

  mutable ParamStore ps_;
  int emb_ = -1;
  LstmParamIds enc_cell_;
  Decoder d1_, d2_;
};

}  // namespace slu
