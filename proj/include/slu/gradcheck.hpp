#pragma once

#include <algorithm>
#include <functional>
#include <string>
#include <vector>

#include "slu/rng.hpp"
#include "slu/tape.hpp"

// Central finite-difference validation of the backward passes. Fragments
// build a scalar loss over a ParamStore; grad_check compares the analytic
// gradient of every parameter element against (f(p+eps) - f(p-eps)) / 2eps.

namespace slu {

template <typename T>
using FragmentFn = std::function<typename Tape<T>::Var(Tape<T>&)>;

// Returns the maximum relative error, denominator max(|a|, |b|, 1e-8).
template <typename T>
double grad_check(ParamStoreT<T>& ps, const FragmentFn<T>& build, T epsilon) {
  ps.zero_grads();
  Tape<T> tape(&ps);
  auto loss = build(tape);
  tape.backward(loss);

  auto eval = [&]() -> T {
    Tape<T> t(&ps);
    return t.value(build(t)).at(0);
  };

  double max_rel = 0.0;
  for (int pid = 0; pid < ps.size(); ++pid) {
    auto& val = ps.value(pid);
    const auto& grad = ps.grad(pid);
    for (size_t i = 0; i < val.size(); ++i) {
      T saved = val.data[i];
      val.data[i] = saved + epsilon;
      T up = eval();
      val.data[i] = saved - epsilon;
      T down = eval();
      val.data[i] = saved;
      double numeric = static_cast<double>((up - down) / (T(2) * epsilon));
      double analytic = static_cast<double>(grad.data[i]);
      double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
      max_rel = std::max(max_rel, std::abs(analytic - numeric) / denom);
    }
  }
  return max_rel;
}

// ---------------------------------------------------------------------------
// Standard fragments covering every trainable block. Dimensions stay small
// (<= 8); parameters and inputs are seeded uniform in [-0.5, 0.5].

template <typename T>
struct Fragment {
  std::string name;
  ParamStoreT<T> ps;
  FragmentFn<T> build;
};

namespace gradfrag {

template <typename T>
TensorT<T> rand_t(Rng& rng, std::vector<int> shape) {
  return TensorT<T>::uniform(std::move(shape), rng, T(-0.5), T(0.5));
}

// embedding lookup -> projection -> cross-entropy
template <typename T>
Fragment<T> embedding(uint64_t seed) {
  Rng rng(seed);
  int vocab = 5 + static_cast<int>(rng.index(3));
  int e = 3 + static_cast<int>(rng.index(4));
  int classes = 3 + static_cast<int>(rng.index(4));
  Fragment<T> f;
  f.name = "embedding+projection";
  int emb = f.ps.add("emb", rand_t<T>(rng, {vocab, e}));
  AffineParamIds proj{f.ps.add("w", rand_t<T>(rng, {classes, e})), f.ps.add("b", rand_t<T>(rng, {classes}))};
  int tok = static_cast<int>(rng.index(vocab));
  int target = static_cast<int>(rng.index(classes));
  f.build = [=](Tape<T>& t) {
    auto x = t.lookup(emb, tok);
    return t.softmax_xent(t.affine(proj, x), target);
  };
  return f;
}

// three chained LSTM steps -> projection -> cross-entropy
template <typename T>
Fragment<T> lstm_chain(uint64_t seed) {
  Rng rng(seed);
  int e = 2 + static_cast<int>(rng.index(3));
  int h = 2 + static_cast<int>(rng.index(3));
  int classes = 3;
  Fragment<T> f;
  f.name = "lstm-chain";
  LstmParamIds cell{f.ps.add("wx", rand_t<T>(rng, {4 * h, e})), f.ps.add("wh", rand_t<T>(rng, {4 * h, h})),
                    f.ps.add("b", rand_t<T>(rng, {4 * h}))};
  AffineParamIds proj{f.ps.add("w", rand_t<T>(rng, {classes, h})), f.ps.add("b2", rand_t<T>(rng, {classes}))};
  std::vector<TensorT<T>> xs;
  for (int i = 0; i < 3; ++i) xs.push_back(rand_t<T>(rng, {e}));
  int target = static_cast<int>(rng.index(classes));
  f.build = [=](Tape<T>& t) {
    auto hv = t.input(TensorT<T>::zeros({h}));
    auto cv = t.input(TensorT<T>::zeros({h}));
    for (const auto& x : xs) {
      auto [h2, c2] = t.lstm(cell, t.input(x), hv, cv);
      hv = h2;
      cv = c2;
    }
    return t.softmax_xent(t.affine(proj, hv), target);
  };
  return f;
}

// additive attention over random keys -> projection of context -> xent,
// with the weights also feeding the loss through the context.
template <typename T>
Fragment<T> attention(uint64_t seed) {
  Rng rng(seed);
  int dq = 2 + static_cast<int>(rng.index(3));
  int dk = 2 + static_cast<int>(rng.index(3));
  int a = 2 + static_cast<int>(rng.index(3));
  int n = 2 + static_cast<int>(rng.index(4));
  int classes = 3;
  Fragment<T> f;
  f.name = "attention";
  AttentionParamIds att{f.ps.add("wq", rand_t<T>(rng, {a, dq})), f.ps.add("wk", rand_t<T>(rng, {a, dk})),
                        f.ps.add("v", rand_t<T>(rng, {a})), f.ps.add("ab", rand_t<T>(rng, {a}))};
  int query = f.ps.add("q", rand_t<T>(rng, {dq}));
  AffineParamIds proj{f.ps.add("w", rand_t<T>(rng, {classes, dk})), f.ps.add("b", rand_t<T>(rng, {classes}))};
  std::vector<TensorT<T>> keys;
  for (int j = 0; j < n; ++j) keys.push_back(rand_t<T>(rng, {dk}));
  int target = static_cast<int>(rng.index(classes));
  f.build = [=](Tape<T>& t) {
    std::vector<typename Tape<T>::Var> kv;
    for (const auto& k : keys) kv.push_back(t.input(k));
    auto [w, ctx] = t.attention(att, t.param(query), kv);
    (void)w;
    return t.softmax_xent(t.affine(proj, ctx), target);
  };
  return f;
}

// one attention-fed decoder step: embed previous token, attend over encoder
// states, LSTM, project to the vocabulary, cross-entropy.
template <typename T>
Fragment<T> decoder_step(uint64_t seed, const std::string& name) {
  Rng rng(seed);
  int vocab = 6;
  int e = 2 + static_cast<int>(rng.index(3));
  int h = 2 + static_cast<int>(rng.index(3));
  int a = 3;
  int n = 2 + static_cast<int>(rng.index(3));
  Fragment<T> f;
  f.name = name;
  int emb = f.ps.add("emb", rand_t<T>(rng, {vocab, e}));
  AttentionParamIds att{f.ps.add("wq", rand_t<T>(rng, {a, h})), f.ps.add("wk", rand_t<T>(rng, {a, h})),
                        f.ps.add("v", rand_t<T>(rng, {a})), f.ps.add("ab", rand_t<T>(rng, {a}))};
  LstmParamIds cell{f.ps.add("wx", rand_t<T>(rng, {4 * h, e + h})), f.ps.add("wh", rand_t<T>(rng, {4 * h, h})),
                    f.ps.add("b", rand_t<T>(rng, {4 * h}))};
  AffineParamIds proj{f.ps.add("w", rand_t<T>(rng, {vocab, h})), f.ps.add("b2", rand_t<T>(rng, {vocab}))};
  std::vector<TensorT<T>> enc_states;
  for (int j = 0; j < n; ++j) enc_states.push_back(rand_t<T>(rng, {h}));
  TensorT<T> h0 = rand_t<T>(rng, {h});
  TensorT<T> c0 = rand_t<T>(rng, {h});
  int prev_tok = static_cast<int>(rng.index(vocab));
  int target = static_cast<int>(rng.index(vocab));
  f.build = [=](Tape<T>& t) {
    std::vector<typename Tape<T>::Var> kv;
    for (const auto& s : enc_states) kv.push_back(t.input(s));
    auto hv = t.input(h0);
    auto cv = t.input(c0);
    auto [w, ctx] = t.attention(att, hv, kv);
    (void)w;
    auto x = t.concat(t.lookup(emb, prev_tok), ctx);
    auto [h2, c2] = t.lstm(cell, x, hv, cv);
    (void)c2;
    return t.softmax_xent(t.affine(proj, h2), target);
  };
  return f;
}

// All blocks for one seed: embedding, LSTM, attention, projections, and the
// two decoder branches.
template <typename T>
std::vector<Fragment<T>> all(uint64_t seed) {
  std::vector<Fragment<T>> out;
  out.push_back(embedding<T>(seed * 6 + 1));
  out.push_back(lstm_chain<T>(seed * 6 + 2));
  out.push_back(attention<T>(seed * 6 + 3));
  out.push_back(decoder_step<T>(seed * 6 + 4, "decoder-1"));
  out.push_back(decoder_step<T>(seed * 6 + 5, "decoder-2"));
  return out;
}

}  // namespace gradfrag

}  // namespace slu
