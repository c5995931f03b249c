#pragma once

#include <utility>
#include <vector>

#include "slu/tape.hpp"

// Forward-only entry points for the individual neural building blocks.
// These wrap the same tape ops the training paths use.

namespace slu {

struct LstmCellWeights {
  Tensor wx;  // (4H x E)
  Tensor wh;  // (4H x H)
  Tensor b;   // (4H)
};

inline std::pair<Tensor, Tensor> lstm_step(const LstmCellWeights& w, const Tensor& x,
                                           const Tensor& h_prev, const Tensor& c_prev) {
  ParamStore ps;
  LstmParamIds ids{ps.add("wx", w.wx), ps.add("wh", w.wh), ps.add("b", w.b)};
  Tape<float> tape(&ps);
  auto [h, c] = tape.lstm(ids, tape.input(x), tape.input(h_prev), tape.input(c_prev));
  return {tape.value(h), tape.value(c)};
}

struct AttentionWeights {
  Tensor wq;  // (A x Dq)
  Tensor wk;  // (A x Dk)
  Tensor v;   // (A)
  Tensor b;   // (A)
};

// Returns (weights, context): softmax-normalized scores over the keys and
// the weighted sum of the keys.
inline std::pair<Tensor, Tensor> attention(const AttentionWeights& w, const Tensor& query,
                                           const std::vector<Tensor>& keys) {
  ParamStore ps;
  AttentionParamIds ids{ps.add("wq", w.wq), ps.add("wk", w.wk), ps.add("v", w.v), ps.add("b", w.b)};
  Tape<float> tape(&ps);
  std::vector<Tape<float>::Var> kv;
  kv.reserve(keys.size());
  for (const auto& k : keys) kv.push_back(tape.input(k));
  auto [weights, ctx] = tape.attention(ids, tape.input(query), kv);
  return {tape.value(weights), tape.value(ctx)};
}

// Returns (loss, probabilities) with loss = -log p[target].
inline std::pair<float, Tensor> softmax_xent(const Tensor& logits, int target) {
  ParamStore ps;
  Tape<float> tape(&ps);
  auto loss = tape.softmax_xent(tape.input(logits), target);
  return {tape.value(loss).at(0), tape.aux(loss)};
}

}  // namespace slu
