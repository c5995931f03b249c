#pragma once

#include <cmath>
#include <vector>

#include "slu/params.hpp"

namespace slu {

struct AdamHyper {
  float lr = 0.001f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
};

// Adam with bias correction. State is per-parameter first/second moment
// tensors; `step` applies one update from the accumulated gradients.
class Adam {
 public:
  explicit Adam(AdamHyper hyper) : hyper_(hyper) {}

  static void update(Tensor& param, const Tensor& grad, Tensor& m, Tensor& v, int step,
                     const AdamHyper& h) {
    require(param.same_shape(grad), "adam: param/grad shape mismatch");
    float bc1 = 1.0f - std::pow(h.beta1, static_cast<float>(step));
    float bc2 = 1.0f - std::pow(h.beta2, static_cast<float>(step));
    for (size_t i = 0; i < param.size(); ++i) {
      float g = grad.data[i];
      m.data[i] = h.beta1 * m.data[i] + (1.0f - h.beta1) * g;
      v.data[i] = h.beta2 * v.data[i] + (1.0f - h.beta2) * g * g;
      float mhat = m.data[i] / bc1;
      float vhat = v.data[i] / bc2;
      param.data[i] -= h.lr * mhat / (std::sqrt(vhat) + h.eps);
    }
  }

  void step(ParamStore& ps) {
    if (m_.empty()) {
      for (int i = 0; i < ps.size(); ++i) {
        m_.push_back(Tensor::zeros(ps.value(i).shape));
        v_.push_back(Tensor::zeros(ps.value(i).shape));
      }
    }
    ++t_;
    for (int i = 0; i < ps.size(); ++i) {
      update(ps.value(i), ps.grad(i), m_[i], v_[i], t_, hyper_);
    }
  }

 private:
  AdamHyper hyper_;
  int t_ = 0;
  std::vector<Tensor> m_, v_;
};

}  // namespace slu
