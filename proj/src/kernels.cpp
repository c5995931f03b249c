#include "slu/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

#include "slu/error.hpp"

namespace slu::kernels {

namespace {

float dot_scalar(const float* a, const float* b, size_t n) {
  float s = 0.0f;
  for (size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_scalar(float alpha, const float* x, float* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void add_scalar(const float* a, const float* b, float* out, size_t n) {
  for (size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void mul_scalar(const float* a, const float* b, float* out, size_t n) {
  for (size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void scale_scalar(float alpha, float* x, size_t n) {
  for (size_t i = 0; i < n; ++i) x[i] *= alpha;
}

void matvec_scalar(const float* w, const float* x, float* y, size_t rows, size_t cols) {
  for (size_t r = 0; r < rows; ++r) y[r] = dot_scalar(w + r * cols, x, cols);
}

void matvec_t_acc_scalar(const float* w, const float* d, float* out, size_t rows, size_t cols) {
  for (size_t r = 0; r < rows; ++r) axpy_scalar(d[r], w + r * cols, out, cols);
}

void ger_acc_scalar(float* w, const float* d, const float* x, size_t rows, size_t cols) {
  for (size_t r = 0; r < rows; ++r) axpy_scalar(d[r], x, w + r * cols, cols);
}

const Ops kScalar = {
    "scalar",    dot_scalar,    axpy_scalar,         add_scalar, mul_scalar,
    scale_scalar, matvec_scalar, matvec_t_acc_scalar, ger_acc_scalar,
};

std::atomic<const Ops*> g_active{nullptr};

const Ops* select_backend() {
  const char* env = std::getenv("SLU_KERNELS");
  if (env != nullptr) {
    if (std::strcmp(env, "scalar") == 0) return &kScalar;
    if (std::strcmp(env, "avx2") == 0 && avx2_available()) return &avx2_ops();
    // Unknown or unavailable request falls through to the default choice.
  }
  if (avx2_available()) return &avx2_ops();
  return &kScalar;
}

}  // namespace

const Ops& scalar_ops() { return kScalar; }

#if !(defined(__x86_64__) || defined(__i386__))
bool avx2_available() { return false; }
const Ops& avx2_ops() { return kScalar; }
#endif

const Ops& active() {
  const Ops* ops = g_active.load(std::memory_order_acquire);
  if (ops == nullptr) {
    ops = select_backend();
    g_active.store(ops, std::memory_order_release);
  }
  return *ops;
}

void force_backend(const char* name) {
  if (std::strcmp(name, "scalar") == 0) {
    g_active.store(&kScalar, std::memory_order_release);
    return;
  }
  if (std::strcmp(name, "avx2") == 0) {
    require(avx2_available(), "kernels: avx2 backend not available on this CPU/build");
    g_active.store(&avx2_ops(), std::memory_order_release);
    return;
  }
  fail(std::string("kernels: unknown backend '") + name + "'");
}

}  // namespace slu::kernels
