#include "slu/lm.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "slu/adam.hpp"
#include "slu/checkpoint.hpp"
#include "slu/rng.hpp"

namespace slu {

using nlohmann::json;

void LmHyper::validate() const {
  require(embed_size >= 1 && hidden_size >= 1, "lm configuration: sizes must be >= 1");
  require(lr > 0.0f, "lm configuration: lr must be positive");
  require(epochs >= 1 && batch_size >= 1 && min_freq >= 1, "lm configuration: counts must be >= 1");
  require(tbptt_window >= 0, "lm configuration: tbptt_window must be >= 0");
}

namespace {
constexpr float kInitRange = 0.08f;
}

void LanguageModel::build_params(uint64_t seed) {
  Rng rng(seed);
  auto init = [&](std::vector<int> shape) {
    return Tensor::uniform(std::move(shape), rng, -kInitRange, kInitRange);
  };
  int V = vocab_.size();
  int E = hyper_.embed_size;
  int H = hyper_.hidden_size;
  emb_ = ps_.add("emb", init({V, E}));
  cell_ = {ps_.add("lstm.wx", init({4 * H, E})), ps_.add("lstm.wh", init({4 * H, H})),
           ps_.add("lstm.b", Tensor::zeros({4 * H}))};
  out_ = {ps_.add("out.w", init({V, H})), ps_.add("out.b", Tensor::zeros({V}))};
}

LanguageModel LanguageModel::train(const std::vector<std::vector<std::string>>& utterances,
                                   LmDirection direction, const LmHyper& hyper, uint64_t seed) {
  hyper.validate();
  require(!utterances.empty(), "train_lm: empty input");

  LanguageModel m;
  m.direction_ = direction;
  m.hyper_ = hyper;
  m.seed_ = seed;
  m.vocab_ = Vocabulary::build_from_sequences(utterances, hyper.min_freq);
  m.build_params(seed);

  // token streams in model direction: BOS w1..wn EOS, reversed first for
  // backward models
  std::vector<std::vector<int>> streams;
  streams.reserve(utterances.size());
  for (const auto& u : utterances) {
    require(!u.empty(), "train_lm: empty utterance");
    std::vector<int> ids = m.vocab_.encode(u);
    if (direction == LmDirection::Backward) std::reverse(ids.begin(), ids.end());
    std::vector<int> s;
    s.push_back(Vocabulary::kBos);
    s.insert(s.end(), ids.begin(), ids.end());
    s.push_back(Vocabulary::kEos);
    streams.push_back(std::move(s));
  }

  Rng shuffle_rng(seed ^ 0x5a5a5a5a5a5a5a5aULL);
  Adam opt(AdamHyper{hyper.lr, 0.9f, 0.999f, 1e-8f});
  std::vector<size_t> order(streams.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  int H = hyper.hidden_size;
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    size_t done = 0;
    while (done < order.size()) {
      size_t batch = std::min<size_t>(hyper.batch_size, order.size() - done);
      m.ps_.zero_grads();
      for (size_t k = 0; k < batch; ++k) {
        const auto& s = streams[order[done + k]];
        size_t n_pred = s.size() - 1;
        size_t window = hyper.tbptt_window == 0 ? n_pred : static_cast<size_t>(hyper.tbptt_window);
        // walk the stream in tbptt segments, carrying (h, c) values across
        Tensor h_carry = Tensor::zeros({H});
        Tensor c_carry = Tensor::zeros({H});
        size_t pos = 0;
        while (pos < n_pred) {
          size_t seg = std::min(window, n_pred - pos);
          Tape<float> tape(&m.ps_);
          auto h = tape.input(h_carry);
          auto c = tape.input(c_carry);
          std::vector<Tape<float>::Var> losses;
          for (size_t t = pos; t < pos + seg; ++t) {
            auto [h2, c2] = tape.lstm(m.cell_, tape.lookup(m.emb_, s[t]), h, c);
            h = h2;
            c = c2;
            losses.push_back(tape.softmax_xent(tape.affine(m.out_, h), s[t + 1]));
          }
          auto loss =
              tape.scale(tape.sum(losses), 1.0f / static_cast<float>(n_pred));
          tape.backward(loss);
          h_carry = tape.value(h);
          c_carry = tape.value(c);
          pos += seg;
        }
      }
      if (batch > 1) m.ps_.scale_grads(1.0f / static_cast<float>(batch));
      m.ps_.clip_grads(hyper.clip_norm);
      opt.step(m.ps_);
      done += batch;
    }
  }
  return m;
}

LanguageModel::State LanguageModel::start() const {
  int H = hyper_.hidden_size;
  State s{Tensor::zeros({H}), Tensor::zeros({H})};
  return advance(s, Vocabulary::kBos);
}

LanguageModel::State LanguageModel::advance(const State& s, int token_id) const {
  Tape<float> tape(&ps_);
  auto [h, c] =
      tape.lstm(cell_, tape.lookup(emb_, token_id), tape.input(s.h), tape.input(s.c));
  return {tape.value(h), tape.value(c)};
}

Tensor LanguageModel::next_log_probs(const State& s) const {
  Tape<float> tape(&ps_);
  Tensor p = softmax(tape.value(tape.affine(out_, tape.input(s.h))));
  for (auto& v : p.data) v = std::log(v);
  return p;
}

double LanguageModel::log_likelihood(const std::vector<std::string>& tokens) const {
  require(!tokens.empty(), "log_likelihood: empty token sequence");
  std::vector<int> ids = vocab_.encode(tokens);
  if (direction_ == LmDirection::Backward) std::reverse(ids.begin(), ids.end());
  State s = start();
  double total = 0.0;
  for (int id : ids) {
    total += next_log_probs(s).at(id);
    s = advance(s, id);
  }
  return total;
}

double LanguageModel::perplexity(const std::vector<std::vector<std::string>>& utterances) const {
  require(!utterances.empty(), "perplexity: empty input");
  double nll = 0.0;
  size_t count = 0;
  for (const auto& u : utterances) {
    std::vector<int> ids = vocab_.encode(u);
    if (direction_ == LmDirection::Backward) std::reverse(ids.begin(), ids.end());
    State s = start();
    for (int id : ids) {
      nll -= next_log_probs(s).at(id);
      s = advance(s, id);
    }
    nll -= next_log_probs(s).at(Vocabulary::kEos);
    count += ids.size() + 1;
  }
  return std::exp(nll / static_cast<double>(count));
}

void LanguageModel::save(const std::string& dir) const {
  std::filesystem::create_directories(dir);
  json vocab;
  vocab["words"] = vocab_.tokens();
  {
    std::ofstream f(dir + "/vocab.json", std::ios::trunc);
    require(f.good(), "cannot open " + dir + "/vocab.json for writing");
    f << vocab.dump(2) << '\n';
  }
  json meta;
  meta["kind"] = "lm";
  meta["direction"] = direction_ == LmDirection::Forward ? "forward" : "backward";
  meta["vocab_hash"] = hash_hex(vocab_.hash());
  meta["seed"] = seed_;
  meta["hyper"] = {{"embed_size", hyper_.embed_size}, {"hidden_size", hyper_.hidden_size},
                   {"lr", hyper_.lr},                 {"epochs", hyper_.epochs},
                   {"batch_size", hyper_.batch_size}, {"clip_norm", hyper_.clip_norm},
                   {"min_freq", hyper_.min_freq},     {"tbptt_window", hyper_.tbptt_window}};
  save_checkpoint(to_checkpoint(ps_, meta.dump()), dir + "/model.ckpt");
}

LanguageModel LanguageModel::load(const std::string& dir) {
  std::ifstream f(dir + "/vocab.json");
  require(f.good(), "cannot open " + dir + "/vocab.json");
  json vocab = json::parse(f, nullptr, false);
  require(!vocab.is_discarded(), dir + "/vocab.json: malformed JSON");

  Checkpoint ckpt = load_checkpoint(dir + "/model.ckpt");
  json meta = json::parse(ckpt.meta_json);
  require(meta.value("kind", "") == std::string("lm"), dir + ": checkpoint is not a language model");

  LanguageModel m;
  m.vocab_ = Vocabulary::from_tokens(vocab["words"].get<std::vector<std::string>>());
  verify_vocab_hash(ckpt, m.vocab_.hash());
  m.direction_ =
      meta["direction"].get<std::string>() == "backward" ? LmDirection::Backward : LmDirection::Forward;
  const json& h = meta["hyper"];
  m.hyper_.embed_size = h["embed_size"].get<int>();
  m.hyper_.hidden_size = h["hidden_size"].get<int>();
  m.hyper_.lr = h["lr"].get<float>();
  m.hyper_.epochs = h["epochs"].get<int>();
  m.hyper_.batch_size = h["batch_size"].get<int>();
  m.hyper_.clip_norm = h["clip_norm"].get<float>();
  m.hyper_.min_freq = h["min_freq"].get<int>();
  m.hyper_.tbptt_window = h["tbptt_window"].get<int>();
  m.seed_ = static_cast<uint64_t>(meta["seed"].get<double>());
  m.build_params(0);
  load_into(m.ps_, ckpt);
  return m;
}

}  // namespace slu
