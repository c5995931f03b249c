#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "slu/kernels.hpp"
#include "slu/rng.hpp"

using namespace slu;

namespace {

std::vector<float> rand_vec(Rng& rng, size_t n) {
  std::vector<float> v(n);
  for (auto& x : v) x = rng.uniform(-2.0f, 2.0f);
  return v;
}

bool close(float a, float b, float tol) {
  return std::abs(a - b) <= tol * (1.0f + std::max(std::abs(a), std::abs(b)));
}

}  // namespace

TEST_CASE("scalar kernels: exact small cases") {
  const auto& k = kernels::scalar_ops();
  std::vector<float> a = {1, 2, 3};
  std::vector<float> b = {4, 5, 6};
  CHECK(k.dot(a.data(), b.data(), 3) == doctest::Approx(32.0f));

  std::vector<float> y = {1, 1, 1};
  k.axpy(2.0f, a.data(), y.data(), 3);
  CHECK(y == std::vector<float>{3, 5, 7});

  // y = W x with W = [[1,0],[0,1],[1,1]]
  std::vector<float> w = {1, 0, 0, 1, 1, 1};
  std::vector<float> x = {3, 4};
  std::vector<float> out(3);
  k.matvec(w.data(), x.data(), out.data(), 3, 2);
  CHECK(out == std::vector<float>{3, 4, 7});

  std::vector<float> acc = {0, 0};
  std::vector<float> d = {1, 1, 1};
  k.matvec_t_acc(w.data(), d.data(), acc.data(), 3, 2);
  CHECK(acc == std::vector<float>{2, 2});

  std::vector<float> g(6, 0.0f);
  k.ger_acc(g.data(), d.data(), x.data(), 3, 2);
  CHECK(g == std::vector<float>{3, 4, 3, 4, 3, 4});
}

TEST_CASE("avx2 variants agree with the scalar reference") {
  if (!kernels::avx2_available()) return;  // nothing to compare on this machine
  const auto& s = kernels::scalar_ops();
  const auto& v = kernels::avx2_ops();
  Rng rng(7);
  // sizes straddling the 8-lane boundary, including remainders
  for (size_t n : {1u, 3u, 7u, 8u, 9u, 16u, 31u, 64u, 129u}) {
    auto a = rand_vec(rng, n);
    auto b = rand_vec(rng, n);
    CHECK(close(s.dot(a.data(), b.data(), n), v.dot(a.data(), b.data(), n), 1e-5f));

    auto y1 = rand_vec(rng, n);
    auto y2 = y1;
    s.axpy(0.37f, a.data(), y1.data(), n);
    v.axpy(0.37f, a.data(), y2.data(), n);
    for (size_t i = 0; i < n; ++i) CHECK(close(y1[i], y2[i], 1e-6f));

    std::vector<float> o1(n), o2(n);
    s.add(a.data(), b.data(), o1.data(), n);
    v.add(a.data(), b.data(), o2.data(), n);
    CHECK(o1 == o2);
    s.mul(a.data(), b.data(), o1.data(), n);
    v.mul(a.data(), b.data(), o2.data(), n);
    CHECK(o1 == o2);

    auto s1 = a;
    auto s2 = a;
    s.scale(-1.25f, s1.data(), n);
    v.scale(-1.25f, s2.data(), n);
    CHECK(s1 == s2);
  }

  for (auto [rows, cols] : std::vector<std::pair<size_t, size_t>>{{3, 5}, {8, 8}, {17, 23}, {64, 33}}) {
    auto w = rand_vec(rng, rows * cols);
    auto x = rand_vec(rng, cols);
    auto d = rand_vec(rng, rows);
    std::vector<float> y1(rows), y2(rows);
    s.matvec(w.data(), x.data(), y1.data(), rows, cols);
    v.matvec(w.data(), x.data(), y2.data(), rows, cols);
    for (size_t i = 0; i < rows; ++i) CHECK(close(y1[i], y2[i], 1e-5f));

    std::vector<float> t1(cols, 0.1f), t2(cols, 0.1f);
    s.matvec_t_acc(w.data(), d.data(), t1.data(), rows, cols);
    v.matvec_t_acc(w.data(), d.data(), t2.data(), rows, cols);
    for (size_t i = 0; i < cols; ++i) CHECK(close(t1[i], t2[i], 1e-5f));

    auto g1 = w;
    auto g2 = w;
    s.ger_acc(g1.data(), d.data(), x.data(), rows, cols);
    v.ger_acc(g2.data(), d.data(), x.data(), rows, cols);
    for (size_t i = 0; i < rows * cols; ++i) CHECK(close(g1[i], g2[i], 1e-6f));
  }
}

TEST_CASE("force_backend switches the active table") {
  kernels::force_backend("scalar");
  CHECK(std::string(kernels::active().name) == "scalar");
  if (kernels::avx2_available()) {
    kernels::force_backend("avx2");
    CHECK(std::string(kernels::active().name) == "avx2");
  }
  CHECK_THROWS(kernels::force_backend("neon"));
  kernels::force_backend("scalar");
}
