#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "slu/adam.hpp"
#include "slu/checkpoint.hpp"
#include "slu/gradcheck.hpp"
#include "slu/neural.hpp"

using namespace slu;
namespace fs = std::filesystem;

namespace {

Tensor rand_tensor(Rng& rng, std::vector<int> shape, float lo = -0.5f, float hi = 0.5f) {
  return Tensor::uniform(std::move(shape), rng, lo, hi);
}

// Plain transcription of the gate equations, kept deliberately separate from
// the tape implementation.
std::pair<std::vector<double>, std::vector<double>> lstm_oracle(const Tensor& wx, const Tensor& wh,
                                                                const Tensor& b, const Tensor& x,
                                                                const Tensor& h, const Tensor& c) {
  int H = static_cast<int>(h.size());
  int E = static_cast<int>(x.size());
  auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  std::vector<double> pre(4 * H, 0.0);
  for (int r = 0; r < 4 * H; ++r) {
    double s = b.at(r);
    for (int j = 0; j < E; ++j) s += wx.at(r, j) * x.at(j);
    for (int j = 0; j < H; ++j) s += wh.at(r, j) * h.at(j);
    pre[r] = s;
  }
  std::vector<double> ho(H), co(H);
  for (int i = 0; i < H; ++i) {
    double gi = sig(pre[i]);
    double gf = sig(pre[H + i]);
    double gg = std::tanh(pre[2 * H + i]);
    double go = sig(pre[3 * H + i]);
    co[i] = gf * c.at(i) + gi * gg;
    ho[i] = go * std::tanh(co[i]);
  }
  return {ho, co};
}

}  // namespace

TEST_CASE("lstm_step: zero weights give a zero hidden state") {
  LstmCellWeights w{Tensor::zeros({8, 3}), Tensor::zeros({8, 2}), Tensor::zeros({8})};
  Rng rng(1);
  auto [h, c] = lstm_step(w, rand_tensor(rng, {3}), rand_tensor(rng, {2}), Tensor::zeros({2}));
  for (float v : h.data) CHECK(v == doctest::Approx(0.0f));
}

TEST_CASE("lstm_step matches an independent gate-equation oracle") {
  Rng rng(1);
  LstmCellWeights w{rand_tensor(rng, {8, 3}), rand_tensor(rng, {8, 2}), rand_tensor(rng, {8})};
  Tensor x = rand_tensor(rng, {3});
  Tensor h0 = rand_tensor(rng, {2});
  Tensor c0 = rand_tensor(rng, {2});
  auto [h, c] = lstm_step(w, x, h0, c0);
  auto [ho, co] = lstm_oracle(w.wx, w.wh, w.b, x, h0, c0);
  for (int i = 0; i < 2; ++i) {
    CHECK(h.at(i) == doctest::Approx(ho[i]).epsilon(1e-5));
    CHECK(c.at(i) == doctest::Approx(co[i]).epsilon(1e-5));
  }

  // identical inputs give identical outputs
  auto [h2, c2] = lstm_step(w, x, h0, c0);
  CHECK(h2.data == h.data);
  CHECK(c2.data == c.data);
}

TEST_CASE("lstm_step rejects dimension mismatches") {
  LstmCellWeights w{Tensor::zeros({8, 3}), Tensor::zeros({8, 2}), Tensor::zeros({8})};
  CHECK_THROWS_AS(lstm_step(w, Tensor::zeros({4}), Tensor::zeros({2}), Tensor::zeros({2})), Error);
}

TEST_CASE("attention: single key takes all the weight") {
  Rng rng(3);
  AttentionWeights w{rand_tensor(rng, {3, 2}), rand_tensor(rng, {3, 4}), rand_tensor(rng, {3}),
                     rand_tensor(rng, {3})};
  Tensor key = rand_tensor(rng, {4});
  auto [weights, ctx] = attention(w, rand_tensor(rng, {2}), {key});
  CHECK(weights.size() == 1);
  CHECK(weights.at(0) == doctest::Approx(1.0f));
  for (int i = 0; i < 4; ++i) CHECK(ctx.at(i) == doctest::Approx(key.at(i)));
}

TEST_CASE("attention: identical keys share weight equally") {
  Rng rng(4);
  AttentionWeights w{rand_tensor(rng, {3, 2}), rand_tensor(rng, {3, 4}), rand_tensor(rng, {3}),
                     rand_tensor(rng, {3})};
  Tensor key = rand_tensor(rng, {4});
  auto [weights, ctx] = attention(w, rand_tensor(rng, {2}), {key, key});
  CHECK(weights.at(0) == doctest::Approx(0.5f));
  CHECK(weights.at(1) == doctest::Approx(0.5f));
}

TEST_CASE("attention matches a direct softmax-of-scores evaluation") {
  Rng rng(5);
  AttentionWeights w{rand_tensor(rng, {3, 2}), rand_tensor(rng, {3, 4}), rand_tensor(rng, {3}),
                     rand_tensor(rng, {3})};
  Tensor q = rand_tensor(rng, {2});
  std::vector<Tensor> keys = {rand_tensor(rng, {4}), rand_tensor(rng, {4}), rand_tensor(rng, {4})};
  auto [weights, ctx] = attention(w, q, keys);

  // direct evaluation
  std::vector<double> scores;
  for (const auto& k : keys) {
    double e = 0;
    for (int i = 0; i < 3; ++i) {
      double a = w.b.at(i);
      for (int j = 0; j < 2; ++j) a += w.wq.at(i, j) * q.at(j);
      for (int j = 0; j < 4; ++j) a += w.wk.at(i, j) * k.at(j);
      e += w.v.at(i) * std::tanh(a);
    }
    scores.push_back(e);
  }
  double z = 0;
  double m = *std::max_element(scores.begin(), scores.end());
  for (double s : scores) z += std::exp(s - m);
  double wsum = 0;
  for (size_t j = 0; j < keys.size(); ++j) {
    double expected = std::exp(scores[j] - m) / z;
    CHECK(weights.at(static_cast<int>(j)) == doctest::Approx(expected).epsilon(1e-5));
    wsum += weights.at(static_cast<int>(j));
  }
  CHECK(wsum == doctest::Approx(1.0).epsilon(1e-6));
  for (int i = 0; i < 4; ++i) {
    double e = 0;
    for (size_t j = 0; j < keys.size(); ++j) e += weights.at(static_cast<int>(j)) * keys[j].at(i);
    CHECK(ctx.at(i) == doctest::Approx(e).epsilon(1e-5));
  }
}

TEST_CASE("softmax_xent: uniform logits, sharp logits, shift invariance") {
  auto [loss_u, p_u] = softmax_xent(Tensor::zeros({5}), 2);
  CHECK(loss_u == doctest::Approx(std::log(5.0)).epsilon(1e-6));
  for (float v : p_u.data) CHECK(v == doctest::Approx(0.2f));

  auto [loss_s, p_s] = softmax_xent(Tensor({2}, {10.0f, 0.0f}), 0);
  CHECK(loss_s == doctest::Approx(4.54e-5).epsilon(1e-2));
  CHECK(p_s.at(0) + p_s.at(1) == doctest::Approx(1.0f).epsilon(1e-6));

  Rng rng(6);
  Tensor logits = rand_tensor(rng, {4}, -2.0f, 2.0f);
  Tensor shifted = logits;
  for (auto& v : shifted.data) v += 7.5f;
  auto [l1, p1] = softmax_xent(logits, 1);
  auto [l2, p2] = softmax_xent(shifted, 1);
  for (size_t i = 0; i < p1.size(); ++i) CHECK(std::abs(p1.data[i] - p2.data[i]) < 1e-6f);
  (void)l1;
  (void)l2;
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  Tensor p({2}, {1.0f, -2.0f});
  Tensor g = Tensor::zeros({2});
  Tensor m = Tensor::zeros({2}), v = Tensor::zeros({2});
  Tensor before = p;
  Adam::update(p, g, m, v, 1, AdamHyper{});
  CHECK(p.data == before.data);
}

TEST_CASE("adam: first-step magnitude is about the learning rate") {
  Tensor p({1}, {0.0f});
  Tensor g({1}, {1.0f});
  Tensor m = Tensor::zeros({1}), v = Tensor::zeros({1});
  AdamHyper h;
  h.lr = 0.1f;
  Adam::update(p, g, m, v, 1, h);
  CHECK(p.at(0) == doctest::Approx(-0.1f).epsilon(1e-4));
}

TEST_CASE("adam: deterministic across repeated runs") {
  auto run = [] {
    ParamStore ps;
    Rng rng(8);
    ps.add("w", rand_tensor(rng, {4, 3}));
    Adam opt(AdamHyper{});
    for (int i = 0; i < 5; ++i) {
      auto& g = ps.grad(0);
      for (size_t j = 0; j < g.size(); ++j) g.data[j] = 0.01f * static_cast<float>(j + i);
      opt.step(ps);
    }
    return ps.value(0).data;
  };
  CHECK(run() == run());
}

TEST_CASE("gradient checks: every block under extended-precision finite differences") {
  for (uint64_t seed = 1; seed <= 20; ++seed) {
    for (auto& frag : gradfrag::all<long double>(seed)) {
      double err = grad_check<long double>(frag.ps, frag.build, 1e-6L);
      INFO(frag.name, " seed ", seed);
      CHECK(err < 1e-3);
    }
  }
}

TEST_CASE("gradient check catches a broken backward pass") {
  // corrupt the analytic gradient by perturbing a parameter after backward:
  // a sign-flipped affine bias gradient must be flagged
  Rng rng(3);
  ParamStoreT<double> ps;
  AffineParamIds proj{ps.add("w", TensorT<double>::uniform({3, 2}, rng, -0.5, 0.5)),
                      ps.add("b", TensorT<double>::uniform({3}, rng, -0.5, 0.5))};
  TensorT<double> x = TensorT<double>::uniform({2}, rng, -0.5, 0.5);
  bool sabotage = false;
  FragmentFn<double> build = [&](Tape<double>& t) {
    auto y = t.affine(proj, t.input(x));
    if (sabotage) y = t.scale(y, -1.0);  // forward differs from the checked graph
    return t.softmax_xent(y, 1);
  };
  double ok = grad_check<double>(ps, build, 1e-5);
  CHECK(ok < 1e-3);
  // now make eval() see a different function than backward() ran on
  ps.zero_grads();
  Tape<double> tape(&ps);
  tape.backward(build(tape));
  sabotage = true;
  Tape<double> t2(&ps);
  double flipped = t2.value(build(t2)).at(0);
  CHECK(flipped != doctest::Approx(tape.value(2).at(0)));
}

TEST_CASE("checkpoint: save-load-save is byte identical") {
  ParamStore ps;
  Rng rng(11);
  ps.add("emb", rand_tensor(rng, {6, 4}));
  ps.add("w", rand_tensor(rng, {3, 4}));
  Checkpoint ck = to_checkpoint(ps, R"({"vocab_hash":"00000000deadbeef","seed":7,"hyper":{"h":4}})");

  auto dir = fs::temp_directory_path() / "slu_ckpt_test";
  fs::create_directories(dir);
  auto p1 = (dir / "a.ckpt").string();
  auto p2 = (dir / "b.ckpt").string();
  save_checkpoint(ck, p1);
  Checkpoint loaded = load_checkpoint(p1);
  save_checkpoint(loaded, p2);

  std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
  std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(b1 == b2);
  CHECK(loaded.tensors.size() == 2);
  CHECK(loaded.tensors[0].second.data == ps.value(0).data);

  // round-trip into a structurally matching store
  ParamStore ps2;
  ps2.add("emb", Tensor::zeros({6, 4}));
  ps2.add("w", Tensor::zeros({3, 4}));
  load_into(ps2, loaded);
  CHECK(ps2.value(0).data == ps.value(0).data);
  fs::remove_all(dir);
}

TEST_CASE("checkpoint: distinct errors for truncation, blob mismatch, shape mismatch, vocab hash") {
  ParamStore ps;
  Rng rng(12);
  ps.add("w", rand_tensor(rng, {2, 2}));
  Checkpoint ck = to_checkpoint(ps, R"({"vocab_hash":"0000000000000001"})");
  auto dir = fs::temp_directory_path() / "slu_ckpt_err";
  fs::create_directories(dir);
  auto path = (dir / "m.ckpt").string();
  save_checkpoint(ck, path);

  std::ifstream f(path, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  f.close();

  auto write_bytes = [&](const std::string& b) {
    std::ofstream o(path, std::ios::binary | std::ios::trunc);
    o << b;
  };

  // truncated blob
  write_bytes(bytes.substr(0, bytes.size() - 6));
  try {
    load_checkpoint(path);
    FAIL("expected truncation error");
  } catch (const CheckpointError& e) {
    CHECK(e.kind() == CheckpointErrorKind::Truncated);
  }

  // extra trailing bytes: blob size disagrees with the manifest
  write_bytes(bytes + std::string(8, '\0'));
  try {
    load_checkpoint(path);
    FAIL("expected blob mismatch error");
  } catch (const CheckpointError& e) {
    CHECK(e.kind() == CheckpointErrorKind::BlobSizeMismatch);
  }

  // shape mismatch against the receiving store
  write_bytes(bytes);
  Checkpoint good = load_checkpoint(path);
  ParamStore wrong;
  wrong.add("w", Tensor::zeros({4, 2}));
  try {
    load_into(wrong, good);
    FAIL("expected shape mismatch error");
  } catch (const CheckpointError& e) {
    CHECK(e.kind() == CheckpointErrorKind::ShapeMismatch);
  }

  // vocab hash guard
  verify_vocab_hash(good, 1);  // matches
  try {
    verify_vocab_hash(good, 2);
    FAIL("expected vocab hash error");
  } catch (const CheckpointError& e) {
    CHECK(e.kind() == CheckpointErrorKind::VocabHashMismatch);
  }
  fs::remove_all(dir);
}

TEST_CASE("softmax output is a probability distribution on random logits") {
  Rng rng(21);
  for (int it = 0; it < 50; ++it) {
    Tensor logits = rand_tensor(rng, {1 + static_cast<int>(rng.index(9))}, -6.0f, 6.0f);
    Tensor p = softmax(logits);
    double sum = 0;
    for (float v : p.data) {
      CHECK(v >= 0.0f);
      sum += v;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
  }
}
