#pragma once

#include <cmath>
#include <string>
#include <unordered_map>
#include <vector>

#include "slu/tensor.hpp"

namespace slu {

// Named trainable tensors plus their gradient buffers. Entry order is the
// creation order and doubles as the checkpoint serialization order.
template <typename T>
class ParamStoreT {
 public:
  int add(const std::string& name, TensorT<T> init) {
    require(by_name_.find(name) == by_name_.end(), "params: duplicate name " + name);
    int id = static_cast<int>(entries_.size());
    TensorT<T> g = TensorT<T>::zeros(init.shape);
    entries_.push_back(Entry{name, std::move(init), std::move(g)});
    by_name_.emplace(name, id);
    return id;
  }

  int size() const { return static_cast<int>(entries_.size()); }

  TensorT<T>& value(int id) { return entries_[id].value; }
  const TensorT<T>& value(int id) const { return entries_[id].value; }
  TensorT<T>& grad(int id) { return entries_[id].grad; }
  const TensorT<T>& grad(int id) const { return entries_[id].grad; }
  const std::string& name(int id) const { return entries_[id].name; }

  int find(const std::string& name) const {
    auto it = by_name_.find(name);
    return it == by_name_.end() ? -1 : it->second;
  }

  void zero_grads() {
    for (auto& e : entries_) e.grad.fill(T(0));
  }

  double grad_norm() const {
    double s = 0;
    for (const auto& e : entries_) {
      for (T v : e.grad.data) s += static_cast<double>(v) * static_cast<double>(v);
    }
    return std::sqrt(s);
  }

  // Scales all gradients so the global L2 norm does not exceed max_norm.
  void clip_grads(double max_norm) {
    double n = grad_norm();
    if (n <= max_norm || n == 0.0) return;
    T s = static_cast<T>(max_norm / n);
    for (auto& e : entries_) {
      for (T& v : e.grad.data) v *= s;
    }
  }

  void scale_grads(T s) {
    for (auto& e : entries_) {
      for (T& v : e.grad.data) v *= s;
    }
  }

 private:
  struct Entry {
    std::string name;
    TensorT<T> value;
    TensorT<T> grad;
  };
  std::vector<Entry> entries_;
  std::unordered_map<std::string, int> by_name_;
};

using ParamStore = ParamStoreT<float>;

}  // namespace slu
