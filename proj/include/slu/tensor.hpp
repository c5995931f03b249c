#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "slu/error.hpp"
#include "slu/rng.hpp"

namespace slu {

// Dense row-major tensor. Templated on the scalar so the gradient checker
// can replay the same graph code in double precision; the artifact itself
// stores and trains in float32.
template <typename T>
struct TensorT {
  std::vector<int> shape;
  std::vector<T> data;

  TensorT() = default;
  TensorT(std::vector<int> s, std::vector<T> d) : shape(std::move(s)), data(std::move(d)) {
    require(numel(shape) == data.size(), "tensor: shape/data size mismatch");
  }

  static size_t numel(const std::vector<int>& shape) {
    size_t n = 1;
    for (int d : shape) {
      require(d >= 0, "tensor: negative dimension");
      n *= static_cast<size_t>(d);
    }
    return n;
  }

  static TensorT zeros(std::vector<int> shape) {
    size_t n = numel(shape);
    return TensorT(std::move(shape), std::vector<T>(n, T(0)));
  }

  static TensorT full(std::vector<int> shape, T v) {
    size_t n = numel(shape);
    return TensorT(std::move(shape), std::vector<T>(n, v));
  }

  static TensorT uniform(std::vector<int> shape, Rng& rng, T lo, T hi) {
    TensorT t = zeros(std::move(shape));
    for (auto& v : t.data) v = static_cast<T>(rng.uniform(static_cast<float>(lo), static_cast<float>(hi)));
    return t;
  }

  size_t size() const { return data.size(); }
  int rows() const { return shape.empty() ? 0 : shape[0]; }
  int cols() const { return shape.size() < 2 ? 1 : shape[1]; }

  T& at(int i) { return data[static_cast<size_t>(i)]; }
  T at(int i) const { return data[static_cast<size_t>(i)]; }
  T& at(int i, int j) { return data[static_cast<size_t>(i) * cols() + j]; }
  T at(int i, int j) const { return data[static_cast<size_t>(i) * cols() + j]; }

  void fill(T v) {
    for (auto& x : data) x = v;
  }

  bool all_finite() const {
    for (T v : data) {
      if (!std::isfinite(static_cast<double>(v))) return false;
    }
    return true;
  }

  bool same_shape(const TensorT& o) const { return shape == o.shape; }

  bool operator==(const TensorT& o) const = default;
};

using Tensor = TensorT<float>;

inline std::string shape_str(const std::vector<int>& s) {
  std::string out = "[";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

}  // namespace slu
