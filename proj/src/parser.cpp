#include "slu/parser.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "slu/adam.hpp"
#include "slu/checkpoint.hpp"
#include "slu/metrics.hpp"
#include "slu/rng.hpp"

namespace slu {

using nlohmann::json;

void ParserHyper::validate() const {
  require(embed_size >= 1 && hidden_size >= 1 && attention_size >= 1,
          "parser configuration: sizes must be >= 1");
  require(lr > 0.0f, "parser configuration: lr must be positive");
  require(epochs >= 1 && batch_size >= 1 && min_freq >= 1,
          "parser configuration: counts must be >= 1");
}

ConfidenceScores confidence(float intent_prob, const std::vector<float>& tag_probs) {
  require(intent_prob > 0.0f, "confidence: intent probability must be positive");
  require(!tag_probs.empty(), "confidence: no tag probabilities");
  double sum_log = 0.0;
  for (float p : tag_probs) {
    require(p > 0.0f, "confidence: tag probability must be positive");
    sum_log += std::log(static_cast<double>(p));
  }
  float s_slot = static_cast<float>(std::exp(sum_log / static_cast<double>(tag_probs.size())));
  return {intent_prob, s_slot, std::min(intent_prob, s_slot)};
}

namespace {

int argmax(const Tensor& v) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i) {
    if (v.at(i) > v.at(best)) best = i;
  }
  return best;
}

int label_index(const std::vector<std::string>& labels, const std::string& s) {
  auto it = std::find(labels.begin(), labels.end(), s);
  return it == labels.end() ? -1 : static_cast<int>(it - labels.begin());
}

constexpr float kInitRange = 0.08f;

}  // namespace

void ParserModel::build_params(uint64_t seed) {
  Rng rng(seed);
  auto init = [&](std::vector<int> shape) {
    return Tensor::uniform(std::move(shape), rng, -kInitRange, kInitRange);
  };
  int V = words_.size();
  int E = hyper_.embed_size;
  int H = hyper_.hidden_size;
  int A = hyper_.attention_size;
  int S = static_cast<int>(slots_.size());
  int I = static_cast<int>(intents_.size());

  emb_ = ps_.add("emb", init({V, E}));
  fwd_ = {ps_.add("fwd.wx", init({4 * H, E})), ps_.add("fwd.wh", init({4 * H, H})),
          ps_.add("fwd.b", Tensor::zeros({4 * H}))};
  bwd_ = {ps_.add("bwd.wx", init({4 * H, E})), ps_.add("bwd.wh", init({4 * H, H})),
          ps_.add("bwd.b", Tensor::zeros({4 * H}))};
  slot_proj_ = {ps_.add("slot.w", init({S, 2 * H})), ps_.add("slot.b", Tensor::zeros({S}))};
  att_ = {ps_.add("att.wq", init({A, A})), ps_.add("att.wk", init({A, 2 * H})),
          ps_.add("att.v", init({A})), ps_.add("att.b", Tensor::zeros({A}))};
  att_query_ = ps_.add("att.q", init({A}));
  intent_proj_ = {ps_.add("intent.w", init({I, 2 * H})), ps_.add("intent.b", Tensor::zeros({I}))};
}

std::vector<Tape<float>::Var> ParserModel::encode(Tape<float>& tape, const std::vector<int>& ids) const {
  int H = hyper_.hidden_size;
  size_t n = ids.size();
  std::vector<Tape<float>::Var> embs(n);
  for (size_t t = 0; t < n; ++t) embs[t] = tape.lookup(emb_, ids[t]);

  std::vector<Tape<float>::Var> hf(n), hb(n);
  auto h = tape.input(Tensor::zeros({H}));
  auto c = tape.input(Tensor::zeros({H}));
  for (size_t t = 0; t < n; ++t) {
    auto [h2, c2] = tape.lstm(fwd_, embs[t], h, c);
    hf[t] = h2;
    h = h2;
    c = c2;
  }
  h = tape.input(Tensor::zeros({H}));
  c = tape.input(Tensor::zeros({H}));
  for (size_t t = n; t-- > 0;) {
    auto [h2, c2] = tape.lstm(bwd_, embs[t], h, c);
    hb[t] = h2;
    h = h2;
    c = c2;
  }
  std::vector<Tape<float>::Var> enc(n);
  for (size_t t = 0; t < n; ++t) enc[t] = tape.concat(hf[t], hb[t]);
  return enc;
}

Tape<float>::Var ParserModel::intent_logits(Tape<float>& tape,
                                            const std::vector<Tape<float>::Var>& enc) const {
  auto [w, ctx] = tape.attention(att_, tape.param(att_query_), enc);
  (void)w;
  return tape.affine(intent_proj_, ctx);
}

ParserModel ParserModel::train(const Corpus& train, const Corpus& dev, const ParserHyper& hyper,
                               uint64_t seed) {
  hyper.validate();
  require(train.size() > 0, "train_parser: empty training corpus");

  ParserModel m;
  m.hyper_ = hyper;
  m.seed_ = seed;
  m.words_ = Vocabulary::build(train, hyper.min_freq);
  m.slots_ = train.slot_set;
  m.intents_ = train.intent_set;
  m.build_params(seed);

  // pre-encode the training corpus
  struct Example {
    std::vector<int> ids;
    std::vector<int> tag_ids;
    int intent_id;
  };
  std::vector<Example> examples;
  examples.reserve(train.size());
  for (const auto& u : train.utterances) {
    Example e;
    e.ids = m.words_.encode(u.tokens);
    for (const auto& t : u.tags) e.tag_ids.push_back(label_index(m.slots_, t));
    e.intent_id = label_index(m.intents_, u.intent);
    examples.push_back(std::move(e));
  }

  Rng shuffle_rng(seed ^ 0x5a5a5a5a5a5a5a5aULL);
  Adam opt(AdamHyper{hyper.lr, 0.9f, 0.999f, 1e-8f});

  std::vector<Tensor> best_params;
  double best_score = -1.0;

  std::vector<size_t> order(examples.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    size_t done = 0;
    while (done < order.size()) {
      size_t batch = std::min<size_t>(hyper.batch_size, order.size() - done);
      m.ps_.zero_grads();
      for (size_t k = 0; k < batch; ++k) {
        const Example& e = examples[order[done + k]];
        Tape<float> tape(&m.ps_);
        auto enc = m.encode(tape, e.ids);
        std::vector<Tape<float>::Var> slot_losses;
        for (size_t t = 0; t < e.ids.size(); ++t) {
          slot_losses.push_back(tape.softmax_xent(tape.affine(m.slot_proj_, enc[t]), e.tag_ids[t]));
        }
        auto slot_loss = tape.scale(tape.sum(slot_losses), 1.0f / static_cast<float>(e.ids.size()));
        auto intent_loss = tape.softmax_xent(m.intent_logits(tape, enc), e.intent_id);
        auto loss = tape.sum({intent_loss, slot_loss});
        tape.backward(loss);
      }
      if (batch > 1) m.ps_.scale_grads(1.0f / static_cast<float>(batch));
      m.ps_.clip_grads(hyper.clip_norm);
      opt.step(m.ps_);
      done += batch;
    }

    if (dev.size() > 0) {
      std::vector<std::string> pred_intents, gold_intents;
      std::vector<std::vector<std::string>> pred_tags, gold_tags;
      for (const auto& u : dev.utterances) {
        Parse p = m.parse(u.tokens);
        pred_intents.push_back(p.intent);
        gold_intents.push_back(u.intent);
        pred_tags.push_back(p.tags);
        gold_tags.push_back(u.tags);
      }
      double score =
          0.5 * (intent_accuracy(pred_intents, gold_intents) + slot_f1(pred_tags, gold_tags));
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

Parse ParserModel::parse(const std::vector<std::string>& tokens) const {
  require(!tokens.empty(), "parse: empty token sequence");
  std::vector<int> ids = words_.encode(tokens);
  Tape<float> tape(&ps_);
  auto enc = encode(tape, ids);

  Parse out;
  for (size_t t = 0; t < ids.size(); ++t) {
    Tensor probs = softmax(tape.value(tape.affine(slot_proj_, enc[t])));
    int best = argmax(probs);
    out.tags.push_back(slots_[best]);
    out.tag_probs.push_back(probs.at(best));
  }
  Tensor ip = softmax(tape.value(intent_logits(tape, enc)));
  int best = argmax(ip);
  out.intent = intents_[best];
  out.intent_prob = ip.at(best);

  ConfidenceScores s = confidence(out.intent_prob, out.tag_probs);
  out.s_intent = s.s_intent;
  out.s_slot = s.s_slot;
  out.s_total = s.s_total;
  return out;
}

void ParserModel::save(const std::string& dir) const {
  std::filesystem::create_directories(dir);
  json vocab;
  vocab["words"] = words_.tokens();
  vocab["slots"] = slots_;
  vocab["intents"] = intents_;
  {
    std::ofstream f(dir + "/vocab.json", std::ios::trunc);
    require(f.good(), "cannot open " + dir + "/vocab.json for writing");
    f << vocab.dump(2) << '\n';
  }
  json meta;
  meta["kind"] = "parser";
  meta["vocab_hash"] = hash_hex(words_.hash());
  meta["seed"] = seed_;
  meta["hyper"] = {{"embed_size", hyper_.embed_size},     {"hidden_size", hyper_.hidden_size},
                   {"attention_size", hyper_.attention_size}, {"lr", hyper_.lr},
                   {"epochs", hyper_.epochs},             {"batch_size", hyper_.batch_size},
                   {"clip_norm", hyper_.clip_norm},       {"min_freq", hyper_.min_freq}};
  save_checkpoint(to_checkpoint(ps_, meta.dump()), dir + "/model.ckpt");
}

ParserModel ParserModel::load(const std::string& dir) {
  std::ifstream f(dir + "/vocab.json");
  require(f.good(), "cannot open " + dir + "/vocab.json");
  json vocab = json::parse(f, nullptr, false);
  require(!vocab.is_discarded(), dir + "/vocab.json: malformed JSON");

  Checkpoint ckpt = load_checkpoint(dir + "/model.ckpt");
  json meta = json::parse(ckpt.meta_json);
  require(meta.value("kind", "") == std::string("parser"),
          dir + ": checkpoint is not a parser model");

  ParserModel m;
  m.words_ = Vocabulary::from_tokens(vocab["words"].get<std::vector<std::string>>());
  m.slots_ = vocab["slots"].get<std::vector<std::string>>();
  m.intents_ = vocab["intents"].get<std::vector<std::string>>();
  verify_vocab_hash(ckpt, m.words_.hash());

  const json& h = meta["hyper"];
  m.hyper_.embed_size = h["embed_size"].get<int>();
  m.hyper_.hidden_size = h["hidden_size"].get<int>();
  m.hyper_.attention_size = h["attention_size"].get<int>();
  m.hyper_.lr = h["lr"].get<float>();
  m.hyper_.epochs = h["epochs"].get<int>();
  m.hyper_.batch_size = h["batch_size"].get<int>();
  m.hyper_.clip_norm = h["clip_norm"].get<float>();
  m.hyper_.min_freq = h["min_freq"].get<int>();
  m.seed_ = static_cast<uint64_t>(meta["seed"].get<double>());
  m.build_params(0);
  load_into(m.ps_, ckpt);
  return m;
}

}  // namespace slu
