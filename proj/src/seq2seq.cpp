#include "slu/seq2seq.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "slu/adam.hpp"
#include "slu/bleu.hpp"
#include "slu/checkpoint.hpp"
#include "slu/rng.hpp"

namespace slu {

using nlohmann::json;

void S2sHyper::validate() const {
  require(embed_size >= 1 && hidden_size >= 1 && attention_size >= 1,
          "seq2seq configuration: sizes must be >= 1");
  require(lr > 0.0f, "seq2seq configuration: lr must be positive");
  require(epochs >= 1 && batch_size >= 1 && min_freq >= 1 && max_decode_len >= 1,
          "seq2seq configuration: counts must be >= 1");
}

namespace {
constexpr float kInitRange = 0.08f;

int greedy_pick(const Tensor& probs) {
  // reserved tokens other than EOS are never emitted
  int best = -1;
  for (int i = 0; i < static_cast<int>(probs.size()); ++i) {
    if (i == Vocabulary::kPad || i == Vocabulary::kBos || i == Vocabulary::kUnk ||
        i == Vocabulary::kBlank) {
      continue;
    }
    if (best < 0 || probs.at(i) > probs.at(best)) best = i;
  }
  return best;
}

}  // namespace

void MultiTaskSeq2Seq::build_params(uint64_t seed) {
  Rng rng(seed);
  auto init = [&](std::vector<int> shape) {
    return Tensor::uniform(std::move(shape), rng, -kInitRange, kInitRange);
  };
  int V = vocab_.size();
  int E = hyper_.embed_size;
  int H = hyper_.hidden_size;
  int A = hyper_.attention_size;

  emb_ = ps_.add("emb", init({V, E}));
  enc_cell_ = {ps_.add("enc.wx", init({4 * H, E})), ps_.add("enc.wh", init({4 * H, H})),
               ps_.add("enc.b", Tensor::zeros({4 * H}))};
  auto make_decoder = [&](const std::string& prefix) {
    Decoder d;
    d.cell = {ps_.add(prefix + ".wx", init({4 * H, E + H})), ps_.add(prefix + ".wh", init({4 * H, H})),
              ps_.add(prefix + ".b", Tensor::zeros({4 * H}))};
    d.att = {ps_.add(prefix + ".att.wq", init({A, H})), ps_.add(prefix + ".att.wk", init({A, H})),
             ps_.add(prefix + ".att.v", init({A})), ps_.add(prefix + ".att.b", Tensor::zeros({A}))};
    d.out = {ps_.add(prefix + ".out.w", init({V, H})), ps_.add(prefix + ".out.b", Tensor::zeros({V}))};
    return d;
  };
  d1_ = make_decoder("d1");
  d2_ = make_decoder("d2");
}

MultiTaskSeq2Seq::Encoded MultiTaskSeq2Seq::encode(Tape<float>& tape, const std::vector<int>& ids) const {
  int H = hyper_.hidden_size;
  Encoded out;
  auto h = tape.input(Tensor::zeros({H}));
  auto c = tape.input(Tensor::zeros({H}));
  for (int id : ids) {
    auto [h2, c2] = tape.lstm(enc_cell_, tape.lookup(emb_, id), h, c);
    h = h2;
    c = c2;
    out.states.push_back(h2);
  }
  out.final_h = h;
  out.final_c = c;
  return out;
}

MultiTaskSeq2Seq::StepOut MultiTaskSeq2Seq::step(Tape<float>& tape, const Decoder& dec,
                                                 const Encoded& enc, int prev_token,
                                                 Tape<float>::Var h, Tape<float>::Var c) const {
  auto [w, ctx] = tape.attention(dec.att, h, enc.states);
  (void)w;
  auto x = tape.concat(tape.lookup(emb_, prev_token), ctx);
  auto [h2, c2] = tape.lstm(dec.cell, x, h, c);
  auto logits = tape.affine(dec.out, h2);
  return {logits, h2, c2};
}

Tape<float>::Var MultiTaskSeq2Seq::sequence_loss(Tape<float>& tape, const Decoder& dec,
                                                 const Encoded& enc,
                                                 const std::vector<int>& target) const {
  auto h = enc.final_h;
  auto c = enc.final_c;
  int prev = Vocabulary::kBos;
  std::vector<Tape<float>::Var> losses;
  for (size_t t = 0; t <= target.size(); ++t) {
    int want = t < target.size() ? target[t] : Vocabulary::kEos;
    StepOut so = step(tape, dec, enc, prev, h, c);
    losses.push_back(tape.softmax_xent(so.logits, want));
    h = so.h;
    c = so.c;
    prev = want;  // teacher forcing
  }
  return tape.scale(tape.sum(losses), 1.0f / static_cast<float>(losses.size()));
}

MultiTaskSeq2Seq MultiTaskSeq2Seq::train(const std::vector<ParaphrasePair>& pairs,
                                         const std::vector<ParaphrasePair>& dev_pairs,
                                         const S2sHyper& hyper, uint64_t seed) {
  hyper.validate();
  require(!pairs.empty(), "train_multitask: empty pair list");

  MultiTaskSeq2Seq m;
  m.hyper_ = hyper;
  m.seed_ = seed;
  std::vector<std::vector<std::string>> seqs;
  for (const auto& p : pairs) {
    require(!p.source.empty() && !p.target.empty(), "train_multitask: empty source or target");
    seqs.push_back(p.source);
    seqs.push_back(p.target);
  }
  m.vocab_ = Vocabulary::build_from_sequences(seqs, hyper.min_freq);
  m.build_params(seed);

  struct Example {
    std::vector<int> source;
    std::vector<int> target;
  };
  std::vector<Example> examples;
  examples.reserve(pairs.size());
  for (const auto& p : pairs) {
    examples.push_back({m.vocab_.encode(p.source), m.vocab_.encode(p.target)});
  }

  Rng shuffle_rng(seed ^ 0x5a5a5a5a5a5a5a5aULL);
  Adam opt(AdamHyper{hyper.lr, 0.9f, 0.999f, 1e-8f});
  std::vector<size_t> order(examples.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<Tensor> best_params;
  double best_score = -1.0;

  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    size_t done = 0;
    while (done < order.size()) {
      size_t batch = std::min<size_t>(hyper.batch_size, order.size() - done);
      m.ps_.zero_grads();
      for (size_t k = 0; k < batch; ++k) {
        const Example& e = examples[order[done + k]];
        Tape<float> tape(&m.ps_);
        Encoded enc = m.encode(tape, e.source);
        // joint objective: paraphrase loss at D1 plus reconstruction at D2
        auto l1 = m.sequence_loss(tape, m.d1_, enc, e.target);
        auto l2 = m.sequence_loss(tape, m.d2_, enc, e.source);
        tape.backward(tape.sum({l1, l2}));
      }
      if (batch > 1) m.ps_.scale_grads(1.0f / static_cast<float>(batch));
      m.ps_.clip_grads(hyper.clip_norm);
      opt.step(m.ps_);
      done += batch;
    }
    if (!dev_pairs.empty()) {
      double score = m.validation_metric(dev_pairs);
      if (score > best_score) {
        best_score = score;
        best_params.clear();
        for (int i = 0; i < m.ps_.size(); ++i) best_params.push_back(m.ps_.value(i));
      }
    }
  }
  if (!best_params.empty()) {
    for (int i = 0; i < m.ps_.size(); ++i) m.ps_.value(i) = best_params[i];
  }
  return m;
}

std::vector<std::string> MultiTaskSeq2Seq::greedy(const Decoder& dec, const std::vector<int>& ids,
                                                  int max_len,
                                                  std::vector<Tensor>* logit_trace) const {
  Tape<float> tape(&ps_);
  Encoded enc = encode(tape, ids);
  auto h = enc.final_h;
  auto c = enc.final_c;
  int prev = Vocabulary::kBos;
  std::vector<std::string> out;
  for (int t = 0; t < max_len; ++t) {
    StepOut so = step(tape, dec, enc, prev, h, c);
    const Tensor& logits = tape.value(so.logits);
    if (logit_trace) logit_trace->push_back(logits);
    int pick = greedy_pick(softmax(logits));
    if (pick == Vocabulary::kEos) break;
    out.push_back(vocab_.token(pick));
    prev = pick;
    h = so.h;
    c = so.c;
  }
  return out;
}

DecodedPair MultiTaskSeq2Seq::decode_paraphrases(const std::vector<std::string>& tokens,
                                                 int max_len) const {
  require(!tokens.empty(), "decode_paraphrases: empty token sequence");
  std::vector<int> ids = vocab_.encode(tokens);
  return {greedy(d1_, ids, max_len), greedy(d2_, ids, max_len)};
}

double MultiTaskSeq2Seq::validation_metric(const std::vector<ParaphrasePair>& dev_pairs) const {
  require(!dev_pairs.empty(), "validation_metric: empty dev pairs");
  double bleu_sum = 0.0;
  double recon_sum = 0.0;
  for (const auto& p : dev_pairs) {
    DecodedPair d = decode_paraphrases(p.source, hyper_.max_decode_len);
    bleu_sum += bleu(d.paraphrase, p.source);
    recon_sum += d.reconstruction == p.source ? 1.0 : 0.0;
  }
  double n = static_cast<double>(dev_pairs.size());
  return bleu_sum / n + recon_sum / n;
}

double MultiTaskSeq2Seq::decoder_loss(int decoder, const ParaphrasePair& pair) const {
  require(decoder == 1 || decoder == 2, "decoder_loss: decoder must be 1 or 2");
  Tape<float> tape(&ps_);
  Encoded enc = encode(tape, vocab_.encode(pair.source));
  const Decoder& dec = decoder == 1 ? d1_ : d2_;
  const auto& target = decoder == 1 ? pair.target : pair.source;
  return tape.value(sequence_loss(tape, dec, enc, vocab_.encode(target))).at(0);
}

double MultiTaskSeq2Seq::joint_loss(const ParaphrasePair& pair) const {
  Tape<float> tape(&ps_);
  Encoded enc = encode(tape, vocab_.encode(pair.source));
  auto l1 = sequence_loss(tape, d1_, enc, vocab_.encode(pair.target));
  auto l2 = sequence_loss(tape, d2_, enc, vocab_.encode(pair.source));
  return tape.value(tape.sum({l1, l2})).at(0);
}

std::vector<Tensor> MultiTaskSeq2Seq::decoder_logit_trace(int decoder,
                                                          const std::vector<std::string>& tokens,
                                                          int max_len) const {
  require(decoder == 1 || decoder == 2, "decoder_logit_trace: decoder must be 1 or 2");
  std::vector<Tensor> trace;
  greedy(decoder == 1 ? d1_ : d2_, vocab_.encode(tokens), max_len, &trace);
  return trace;
}

std::vector<std::string> MultiTaskSeq2Seq::param_names() const {
  std::vector<std::string> names;
  for (int i = 0; i < ps_.size(); ++i) names.push_back(ps_.name(i));
  return names;
}

void MultiTaskSeq2Seq::perturb_param(const std::string& name, float delta) {
  int id = ps_.find(name);
  require(id >= 0, "perturb_param: unknown parameter " + name);
  for (auto& v : ps_.value(id).data) v += delta;
}

void MultiTaskSeq2Seq::save(const std::string& dir) const {
  std::filesystem::create_directories(dir);
  json vocab;
  vocab["words"] = vocab_.tokens();
  {
    std::ofstream f(dir + "/vocab.json", std::ios::trunc);
    require(f.good(), "cannot open " + dir + "/vocab.json for writing");
    f << vocab.dump(2) << '\n';
  }
  json meta;
  meta["kind"] = "seq2seq";
  meta["vocab_hash"] = hash_hex(vocab_.hash());
  meta["seed"] = seed_;
  meta["hyper"] = {{"embed_size", hyper_.embed_size},
                   {"hidden_size", hyper_.hidden_size},
                   {"attention_size", hyper_.attention_size},
                   {"lr", hyper_.lr},
                   {"epochs", hyper_.epochs},
                   {"batch_size", hyper_.batch_size},
                   {"clip_norm", hyper_.clip_norm},
                   {"min_freq", hyper_.min_freq},
                   {"max_decode_len", hyper_.max_decode_len}};
  save_checkpoint(to_checkpoint(ps_, meta.dump()), dir + "/model.ckpt");
}

MultiTaskSeq2Seq MultiTaskSeq2Seq::load(const std::string& dir) {
  std::ifstream f(dir + "/vocab.json");
  require(f.good(), "cannot open " + dir + "/vocab.json");
  json vocab = json::parse(f, nullptr, false);
  require(!vocab.is_discarded(), dir + "/vocab.json: malformed JSON");

  Checkpoint ckpt = load_checkpoint(dir + "/model.ckpt");
  json meta = json::parse(ckpt.meta_json);
  require(meta.value("kind", "") == std::string("seq2seq"),
          dir + ": checkpoint is not a seq2seq model");

  MultiTaskSeq2Seq m;
  m.vocab_ = Vocabulary::from_tokens(vocab["words"].get<std::vector<std::string>>());
  verify_vocab_hash(ckpt, m.vocab_.hash());
  const json& h = meta["hyper"];
  m.hyper_.embed_size = h["embed_size"].get<int>();
  m.hyper_.hidden_size = h["hidden_size"].get<int>();
  m.hyper_.attention_size = h["attention_size"].get<int>();
  m.hyper_.lr = h["lr"].get<float>();
  m.hyper_.epochs = h["epochs"].get<int>();
  m.hyper_.batch_size = h["batch_size"].get<int>();
  m.hyper_.clip_norm = h["clip_norm"].get<float>();
  m.hyper_.min_freq = h["min_freq"].get<int>();
  m.hyper_.max_decode_len = h["max_decode_len"].get<int>();
  m.seed_ = static_cast<uint64_t>(meta["seed"].get<double>());
  m.build_params(0);
  load_into(m.ps_, ckpt);
  return m;
}

}  // namespace slu
