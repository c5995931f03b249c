#pragma once

#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "slu/kernels.hpp"
#include "slu/params.hpp"
#include "slu/tensor.hpp"

namespace slu {

namespace detail {

// Inner loops: float32 goes through the runtime-dispatched kernels; other
// scalar types (double, for gradient checking) use plain loops.
template <typename T>
inline T vdot(const T* a, const T* b, size_t n) {
  if constexpr (std::is_same_v<T, float>) {
    return kernels::dot(a, b, n);
  } else {
    T s = T(0);
    for (size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
  }
}

template <typename T>
inline void vaxpy(T alpha, const T* x, T* y, size_t n) {
  if constexpr (std::is_same_v<T, float>) {
    kernels::axpy(alpha, x, y, n);
  } else {
    for (size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
  }
}

template <typename T>
inline void vmatvec(const T* w, const T* x, T* y, size_t rows, size_t cols) {
  if constexpr (std::is_same_v<T, float>) {
    kernels::matvec(w, x, y, rows, cols);
  } else {
    for (size_t r = 0; r < rows; ++r) y[r] = vdot(w + r * cols, x, cols);
  }
}

template <typename T>
inline void vmatvec_t_acc(const T* w, const T* d, T* out, size_t rows, size_t cols) {
  if constexpr (std::is_same_v<T, float>) {
    kernels::matvec_t_acc(w, d, out, rows, cols);
  } else {
    for (size_t r = 0; r < rows; ++r) vaxpy(d[r], w + r * cols, out, cols);
  }
}

template <typename T>
inline void vger_acc(T* w, const T* d, const T* x, size_t rows, size_t cols) {
  if constexpr (std::is_same_v<T, float>) {
    kernels::ger_acc(w, d, x, rows, cols);
  } else {
    for (size_t r = 0; r < rows; ++r) vaxpy(d[r], x, w + r * cols, cols);
  }
}

template <typename T>
inline T sigmoid(T x) {
  return T(1) / (T(1) + std::exp(-x));
}

}  // namespace detail

// Parameter handles for the fused recurrent/attention ops.
struct LstmParamIds {
  int wx = -1;  // (4H x E) stacked gate rows: input, forget, cell, output
  int wh = -1;  // (4H x H)
  int b = -1;   // (4H)
};

struct AttentionParamIds {
  int wq = -1;  // (A x Dq)
  int wk = -1;  // (A x Dk)
  int v = -1;   // (A)
  int b = -1;   // (A)
};

struct AffineParamIds {
  int w = -1;  // (out x in)
  int b = -1;  // (out)
};

// Numerically stable softmax over a vector of logits.
template <typename T>
TensorT<T> softmax(const TensorT<T>& logits) {
  require(!logits.data.empty(), "softmax: empty logits");
  T m = logits.data[0];
  for (T v : logits.data) m = std::max(m, v);
  TensorT<T> p = TensorT<T>::zeros(logits.shape);
  T z = T(0);
  for (size_t i = 0; i < logits.size(); ++i) {
    p.data[i] = std::exp(logits.data[i] - m);
    z += p.data[i];
  }
  for (auto& v : p.data) v /= z;
  return p;
}

// Reverse-mode tape over vector ops. Nodes are created in forward order and
// backward closures run in reverse. Parameter gradients accumulate into the
// ParamStore, so one store can serve many tapes (gradient accumulation).
template <typename T>
class Tape {
 public:
  using Var = int;

  explicit Tape(ParamStoreT<T>* params) : ps_(params) {}

  Var input(TensorT<T> v) { return push(std::move(v)); }

  // Leaf view of a parameter; backward adds the node gradient to the store.
  Var param(int pid) {
    Var out = push(ps_->value(pid));
    back_.push_back([this, pid, out] {
      auto& g = ps_->grad(pid);
      const auto& d = nodes_[out].grad;
      for (size_t i = 0; i < g.size(); ++i) g.data[i] += d.data[i];
    });
    return out;
  }

  // Row `row` of the embedding matrix `emb_pid`.
  Var lookup(int emb_pid, int row) {
    const auto& e = ps_->value(emb_pid);
    require(row >= 0 && row < e.rows(), "lookup: row out of range");
    int cols = e.cols();
    TensorT<T> v = TensorT<T>::zeros({cols});
    for (int j = 0; j < cols; ++j) v.at(j) = e.at(row, j);
    Var out = push(std::move(v));
    back_.push_back([this, emb_pid, row, out] {
      auto& g = ps_->grad(emb_pid);
      const auto& d = nodes_[out].grad;
      int cols = g.cols();
      for (int j = 0; j < cols; ++j) g.at(row, j) += d.at(j);
    });
    return out;
  }

  // y = W x + b
  Var affine(const AffineParamIds& p, Var x) {
    const auto& w = ps_->value(p.w);
    const auto& b = ps_->value(p.b);
    const auto& xv = nodes_[x].val;
    require(w.cols() == static_cast<int>(xv.size()), "affine: dimension mismatch");
    require(b.rows() == w.rows(), "affine: bias dimension mismatch");
    TensorT<T> y = TensorT<T>::zeros({w.rows()});
    detail::vmatvec(w.data.data(), xv.data.data(), y.data.data(), w.rows(), w.cols());
    for (int i = 0; i < w.rows(); ++i) y.at(i) += b.at(i);
    Var out = push(std::move(y));
    back_.push_back([this, p, x, out] {
      const auto& w = ps_->value(p.w);
      const auto& d = nodes_[out].grad;
      const auto& xv = nodes_[x].val;
      detail::vger_acc(ps_->grad(p.w).data.data(), d.data.data(), xv.data.data(), w.rows(), w.cols());
      auto& gb = ps_->grad(p.b);
      for (int i = 0; i < w.rows(); ++i) gb.at(i) += d.at(i);
      detail::vmatvec_t_acc(w.data.data(), d.data.data(), nodes_[x].grad.data.data(), w.rows(), w.cols());
    });
    return out;
  }

  Var add(Var a, Var b) {
    const auto& av = nodes_[a].val;
    const auto& bv = nodes_[b].val;
    require(av.same_shape(bv), "add: shape mismatch");
    TensorT<T> y = av;
    for (size_t i = 0; i < y.size(); ++i) y.data[i] += bv.data[i];
    Var out = push(std::move(y));
    back_.push_back([this, a, b, out] {
      const auto& d = nodes_[out].grad;
      auto& ga = nodes_[a].grad;
      auto& gb = nodes_[b].grad;
      for (size_t i = 0; i < d.size(); ++i) {
        ga.data[i] += d.data[i];
        gb.data[i] += d.data[i];
      }
    });
    return out;
  }

  Var concat(Var a, Var b) {
    const auto& av = nodes_[a].val;
    const auto& bv = nodes_[b].val;
    size_t na = av.size();
    TensorT<T> y = TensorT<T>::zeros({static_cast<int>(av.size() + bv.size())});
    for (size_t i = 0; i < av.size(); ++i) y.data[i] = av.data[i];
    for (size_t i = 0; i < bv.size(); ++i) y.data[na + i] = bv.data[i];
    Var out = push(std::move(y));
    back_.push_back([this, a, b, out, na] {
      const auto& d = nodes_[out].grad;
      auto& ga = nodes_[a].grad;
      auto& gb = nodes_[b].grad;
      for (size_t i = 0; i < ga.size(); ++i) ga.data[i] += d.data[i];
      for (size_t i = 0; i < gb.size(); ++i) gb.data[i] += d.data[na + i];
    });
    return out;
  }

  // Standard LSTM cell. Gate pre-activations are wx*x + wh*h + b with rows
  // stacked [input; forget; cell; output]. Returns (h, c).
  std::pair<Var, Var> lstm(const LstmParamIds& p, Var x, Var h_prev, Var c_prev) {
    const auto& wx = ps_->value(p.wx);
    const auto& wh = ps_->value(p.wh);
    const auto& b = ps_->value(p.b);
    const auto& xv = nodes_[x].val;
    const auto& hv = nodes_[h_prev].val;
    const auto& cv = nodes_[c_prev].val;
    int h4 = wx.rows();
    require(h4 % 4 == 0, "lstm: weight rows not divisible by 4");
    int H = h4 / 4;
    require(wx.cols() == static_cast<int>(xv.size()), "lstm: input dimension mismatch");
    require(wh.rows() == h4 && wh.cols() == H, "lstm: recurrent weight shape mismatch");
    require(b.rows() == h4, "lstm: bias shape mismatch");
    require(static_cast<int>(hv.size()) == H && static_cast<int>(cv.size()) == H,
            "lstm: state dimension mismatch");

    TensorT<T> gates = TensorT<T>::zeros({h4});
    detail::vmatvec(wx.data.data(), xv.data.data(), gates.data.data(), h4, wx.cols());
    TensorT<T> rec = TensorT<T>::zeros({h4});
    detail::vmatvec(wh.data.data(), hv.data.data(), rec.data.data(), h4, H);
    for (int i = 0; i < h4; ++i) gates.at(i) += rec.at(i) + b.at(i);
    // activate in place
    for (int i = 0; i < H; ++i) {
      gates.at(i) = detail::sigmoid(gates.at(i));              // i
      gates.at(H + i) = detail::sigmoid(gates.at(H + i));      // f
      gates.at(2 * H + i) = std::tanh(gates.at(2 * H + i));    // g
      gates.at(3 * H + i) = detail::sigmoid(gates.at(3 * H + i));  // o
    }
    TensorT<T> c = TensorT<T>::zeros({H});
    TensorT<T> h = TensorT<T>::zeros({H});
    TensorT<T> tanh_c = TensorT<T>::zeros({H});
    for (int i = 0; i < H; ++i) {
      c.at(i) = gates.at(H + i) * cv.at(i) + gates.at(i) * gates.at(2 * H + i);
      tanh_c.at(i) = std::tanh(c.at(i));
      h.at(i) = gates.at(3 * H + i) * tanh_c.at(i);
    }
    require(h.all_finite() && c.all_finite(), "lstm: non-finite output");
    Var ho = push(std::move(h));
    Var co = push(std::move(c));
    back_.push_back([this, p, x, h_prev, c_prev, ho, co, H,
                     gates = std::move(gates), tanh_c = std::move(tanh_c)] {
      const auto& dh = nodes_[ho].grad;
      const auto& dc_in = nodes_[co].grad;
      const auto& cv = nodes_[c_prev].val;
      TensorT<T> dpre = TensorT<T>::zeros({4 * H});
      TensorT<T> dcp = TensorT<T>::zeros({H});
      for (int i = 0; i < H; ++i) {
        T gi = gates.at(i), gf = gates.at(H + i), gg = gates.at(2 * H + i), go = gates.at(3 * H + i);
        T tc = tanh_c.at(i);
        T dc = dc_in.at(i) + dh.at(i) * go * (T(1) - tc * tc);
        T dgo = dh.at(i) * tc;
        dpre.at(3 * H + i) = dgo * go * (T(1) - go);
        dpre.at(H + i) = dc * cv.at(i) * gf * (T(1) - gf);
        dpre.at(i) = dc * gg * gi * (T(1) - gi);
        dpre.at(2 * H + i) = dc * gi * (T(1) - gg * gg);
        dcp.at(i) = dc * gf;
      }
      const auto& wx = ps_->value(p.wx);
      const auto& wh = ps_->value(p.wh);
      const auto& xv = nodes_[x].val;
      const auto& hv = nodes_[h_prev].val;
      detail::vger_acc(ps_->grad(p.wx).data.data(), dpre.data.data(), xv.data.data(), 4 * H, wx.cols());
      detail::vger_acc(ps_->grad(p.wh).data.data(), dpre.data.data(), hv.data.data(), 4 * H, H);
      auto& gb = ps_->grad(p.b);
      for (int i = 0; i < 4 * H; ++i) gb.at(i) += dpre.at(i);
      detail::vmatvec_t_acc(wx.data.data(), dpre.data.data(), nodes_[x].grad.data.data(), 4 * H, wx.cols());
      detail::vmatvec_t_acc(wh.data.data(), dpre.data.data(), nodes_[h_prev].grad.data.data(), 4 * H, H);
      auto& gcp = nodes_[c_prev].grad;
      for (int i = 0; i < H; ++i) gcp.at(i) += dcp.at(i);
    });
    return {ho, co};
  }

  // Additive attention: e_j = v . tanh(wq q + wk k_j + b), w = softmax(e),
  // context = sum_j w_j k_j. Returns (weights, context).
  std::pair<Var, Var> attention(const AttentionParamIds& p, Var q, const std::vector<Var>& keys) {
    require(!keys.empty(), "attention: need at least one key");
    const auto& wq = ps_->value(p.wq);
    const auto& wk = ps_->value(p.wk);
    const auto& v = ps_->value(p.v);
    const auto& b = ps_->value(p.b);
    const auto& qv = nodes_[q].val;
    int A = wq.rows();
    require(wq.cols() == static_cast<int>(qv.size()), "attention: query dimension mismatch");
    require(wk.rows() == A && v.rows() == A && b.rows() == A, "attention: parameter shape mismatch");
    int n = static_cast<int>(keys.size());
    int dk = wk.cols();

    TensorT<T> qa = TensorT<T>::zeros({A});
    detail::vmatvec(wq.data.data(), qv.data.data(), qa.data.data(), A, wq.cols());
    TensorT<T> tj = TensorT<T>::zeros({n, A});
    TensorT<T> scores = TensorT<T>::zeros({n});
    for (int j = 0; j < n; ++j) {
      const auto& kv = nodes_[keys[j]].val;
      require(static_cast<int>(kv.size()) == dk, "attention: key dimension mismatch");
      TensorT<T> a = TensorT<T>::zeros({A});
      detail::vmatvec(wk.data.data(), kv.data.data(), a.data.data(), A, dk);
      for (int i = 0; i < A; ++i) {
        T t = std::tanh(a.at(i) + qa.at(i) + b.at(i));
        tj.at(j, i) = t;
      }
      scores.at(j) = detail::vdot(v.data.data(), &tj.data[static_cast<size_t>(j) * A], A);
    }
    TensorT<T> w = softmax(scores);
    TensorT<T> ctx = TensorT<T>::zeros({dk});
    for (int j = 0; j < n; ++j) {
      detail::vaxpy(w.at(j), nodes_[keys[j]].val.data.data(), ctx.data.data(), dk);
    }
    Var wvar = push(w);
    Var cvar = push(std::move(ctx));
    back_.push_back([this, p, q, keys, wvar, cvar, A, dk, n,
                     tj = std::move(tj), w = std::move(w)] {
      const auto& dctx = nodes_[cvar].grad;
      TensorT<T> dw = nodes_[wvar].grad;  // copy; add context-path contributions
      for (int j = 0; j < n; ++j) {
        const auto& kv = nodes_[keys[j]].val;
        dw.at(j) += detail::vdot(kv.data.data(), dctx.data.data(), dk);
        detail::vaxpy(w.at(j), dctx.data.data(), nodes_[keys[j]].grad.data.data(), dk);
      }
      // softmax backward
      T z = T(0);
      for (int j = 0; j < n; ++j) z += dw.at(j) * w.at(j);
      const auto& wq = ps_->value(p.wq);
      const auto& wk = ps_->value(p.wk);
      const auto& v = ps_->value(p.v);
      const auto& qv = nodes_[q].val;
      auto& gv = ps_->grad(p.v);
      auto& gb = ps_->grad(p.b);
      for (int j = 0; j < n; ++j) {
        T de = w.at(j) * (dw.at(j) - z);
        const T* t = &tj.data[static_cast<size_t>(j) * A];
        TensorT<T> da = TensorT<T>::zeros({A});
        for (int i = 0; i < A; ++i) {
          gv.at(i) += de * t[i];
          da.at(i) = de * v.at(i) * (T(1) - t[i] * t[i]);
          gb.at(i) += da.at(i);
        }
        detail::vger_acc(ps_->grad(p.wq).data.data(), da.data.data(), qv.data.data(), A, wq.cols());
        detail::vmatvec_t_acc(wq.data.data(), da.data.data(), nodes_[q].grad.data.data(), A, wq.cols());
        const auto& kv = nodes_[keys[j]].val;
        detail::vger_acc(ps_->grad(p.wk).data.data(), da.data.data(), kv.data.data(), A, dk);
        detail::vmatvec_t_acc(wk.data.data(), da.data.data(), nodes_[keys[j]].grad.data.data(), A, dk);
      }
    });
    return {wvar, cvar};
  }

  // Cross-entropy against `target` with an internal stable softmax.
  // The node value is the scalar loss; probabilities are kept as aux.
  Var softmax_xent(Var logits, int target) {
    const auto& lv = nodes_[logits].val;
    require(target >= 0 && target < static_cast<int>(lv.size()), "softmax_xent: target out of range");
    TensorT<T> p = softmax(lv);
    T loss = -std::log(p.at(target));
    require(std::isfinite(static_cast<double>(loss)), "softmax_xent: non-finite loss");
    Var out = push(TensorT<T>({1}, {loss}));
    nodes_[out].aux = p;
    back_.push_back([this, logits, target, out] {
      T d = nodes_[out].grad.at(0);
      const auto& p = nodes_[out].aux;
      auto& g = nodes_[logits].grad;
      for (size_t i = 0; i < g.size(); ++i) g.data[i] += d * p.data[i];
      g.at(target) -= d;
    });
    return out;
  }

  // Scalar sum of scalar nodes.
  Var sum(const std::vector<Var>& xs) {
    require(!xs.empty(), "sum: empty");
    T s = T(0);
    for (Var x : xs) {
      require(nodes_[x].val.size() == 1, "sum: operand not scalar");
      s += nodes_[x].val.at(0);
    }
    Var out = push(TensorT<T>({1}, {s}));
    back_.push_back([this, xs, out] {
      T d = nodes_[out].grad.at(0);
      for (Var x : xs) nodes_[x].grad.at(0) += d;
    });
    return out;
  }

  Var scale(Var x, T s) {
    TensorT<T> y = nodes_[x].val;
    for (auto& v : y.data) v *= s;
    Var out = push(std::move(y));
    back_.push_back([this, x, s, out] {
      const auto& d = nodes_[out].grad;
      auto& g = nodes_[x].grad;
      for (size_t i = 0; i < g.size(); ++i) g.data[i] += s * d.data[i];
    });
    return out;
  }

  const TensorT<T>& value(Var v) const { return nodes_[v].val; }
  const TensorT<T>& aux(Var v) const { return nodes_[v].aux; }

  // Seeds d(loss)/d(loss) = 1 and runs all recorded closures in reverse.
  void backward(Var loss) {
    require(nodes_[loss].val.size() == 1, "backward: loss must be scalar");
    nodes_[loss].grad.at(0) = T(1);
    for (auto it = back_.rbegin(); it != back_.rend(); ++it) (*it)();
  }

 private:
  struct Node {
    TensorT<T> val;
    TensorT<T> grad;
    TensorT<T> aux;  // op-specific saved tensor (softmax probabilities)
  };

  Var push(TensorT<T> v) {
    Node n;
    n.grad = TensorT<T>::zeros(v.shape);
    n.val = std::move(v);
    nodes_.push_back(std::move(n));
    return static_cast<Var>(nodes_.size() - 1);
  }

  std::vector<Node> nodes_;
  std::vector<std::function<void()>> back_;
  ParamStoreT<T>* ps_;
};

}  // namespace slu
