#pragma once

#include <cstddef>

// Float32 inner loops behind the recurrent-network math: one scalar
// reference implementation plus SIMD variants selected once at runtime.
// All variants compute the same quantities; SIMD reductions may differ from
// the scalar reference in the low bits because the summation order differs.
// Within one process the selected backend is fixed, so repeated runs of the
// same build on the same machine are bit-reproducible.

namespace slu::kernels {

struct Ops {
  const char* name;
  // sum(a[i] * b[i])
  float (*dot)(const float* a, const float* b, size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(float alpha, const float* x, float* y, size_t n);
  // out[i] = a[i] + b[i]
  void (*add)(const float* a, const float* b, float* out, size_t n);
  // out[i] = a[i] * b[i]
  void (*mul)(const float* a, const float* b, float* out, size_t n);
  // x[i] *= alpha
  void (*scale)(float alpha, float* x, size_t n);
  // y = W x, W row-major rows x cols
  void (*matvec)(const float* w, const float* x, float* y, size_t rows, size_t cols);
  // out += W^T d
  void (*matvec_t_acc)(const float* w, const float* d, float* out, size_t rows, size_t cols);
  // W += d x^T  (rank-1 gradient accumulation)
  void (*ger_acc)(float* w, const float* d, const float* x, size_t rows, size_t cols);
};

const Ops& scalar_ops();
bool avx2_available();        // compiled in and supported by this CPU
const Ops& avx2_ops();        // valid only when avx2_available()

// Backend chosen at first use: AVX2 when available, else scalar.
// SLU_KERNELS=scalar|avx2 in the environment overrides the choice.
const Ops& active();
// Test hook; throws slu::Error for unknown or unavailable backends.
void force_backend(const char* name);

inline float dot(const float* a, const float* b, size_t n) { return active().dot(a, b, n); }
inline void axpy(float alpha, const float* x, float* y, size_t n) { active().axpy(alpha, x, y, n); }
inline void add(const float* a, const float* b, float* out, size_t n) { active().add(a, b, out, n); }
inline void mul(const float* a, const float* b, float* out, size_t n) { active().mul(a, b, out, n); }
inline void scale(float alpha, float* x, size_t n) { active().scale(alpha, x, n); }
inline void matvec(const float* w, const float* x, float* y, size_t rows, size_t cols) {
  active().matvec(w, x, y, rows, cols);
}
inline void matvec_t_acc(const float* w, const float* d, float* out, size_t rows, size_t cols) {
  active().matvec_t_acc(w, d, out, rows, cols);
}
inline void ger_acc(float* w, const float* d, const float* x, size_t rows, size_t cols) {
  active().ger_acc(w, d, x, rows, cols);
}

}  // namespace slu::kernels
