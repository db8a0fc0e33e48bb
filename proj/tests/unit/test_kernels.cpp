#include "condense/nn/kernels.hpp"

#include <cmath>
#include <vector>

#include "condense/rng.hpp"
#include "doctest.h"

using namespace condense;
using kernels::Isa;

namespace {

template <class T>
std::vector<T> random_vec(Rng& rng, std::size_t n) {
  std::vector<T> v(n);
  for (auto& x : v) x = static_cast<T>(rng.uniform(-1.0, 1.0));
  return v;
}

// naive triple loop: C += op(A) * op(B)
template <class T>
std::vector<T> naive(const std::vector<T>& a, const std::vector<T>& b, std::vector<T> c,
                     std::size_t r, std::size_t k, std::size_t cols, char mode) {
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      double acc = 0;
      for (std::size_t p = 0; p < k; ++p) {
        const double av = mode == 't' ? a[p * r + i] : a[i * k + p];
        const double bv = mode == 'n' || mode == 't' ? b[p * cols + j] : b[j * k + p];
        acc += av * bv;
      }
      c[i * cols + j] += static_cast<T>(acc);
    }
  }
  return c;
}

template <class T>
void check_close(const std::vector<T>& got, const std::vector<T>& want, double tol) {
  REQUIRE(got.size() == want.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    CHECK(std::abs(double(got[i]) - double(want[i])) <= tol * (1.0 + std::abs(double(want[i]))));
  }
}

template <class T>
void check_table(Isa isa, double tol) {
  const auto& t = kernels::table<T>(isa);
  Rng rng(42);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t r = 1 + rng.below(19);
    const std::size_t k = 1 + rng.below(37);
    const std::size_t cols = rng.below(3) == 0 ? 1 : 1 + rng.below(21);

    const auto x = random_vec<T>(rng, k);
    const auto y = random_vec<T>(rng, k);
    double expect_dot = 0;
    for (std::size_t i = 0; i < k; ++i) expect_dot += double(x[i]) * double(y[i]);
    CHECK(std::abs(double(t.dot(x.data(), y.data(), k)) - expect_dot) <= tol * (1 + std::abs(expect_dot)) * k);

    auto yy = y;
    t.axpy(T(0.5), x.data(), yy.data(), k);
    for (std::size_t i = 0; i < k; ++i) {
      CHECK(std::abs(double(yy[i]) - (double(y[i]) + 0.5 * double(x[i]))) <= tol * 2);
    }

    const auto c0 = random_vec<T>(rng, r * cols);
    {
      const auto a = random_vec<T>(rng, r * k);
      const auto b = random_vec<T>(rng, k * cols);
      auto c = c0;
      t.gemm_nn(a.data(), b.data(), c.data(), r, k, cols);
      check_close(c, naive(a, b, c0, r, k, cols, 'n'), tol * k);
    }
    {
      const auto a = random_vec<T>(rng, r * k);
      const auto b = random_vec<T>(rng, cols * k);
      auto c = c0;
      t.gemm_nt(a.data(), b.data(), c.data(), r, k, cols);
      check_close(c, naive(a, b, c0, r, k, cols, 'T'), tol * k);
    }
    {
      const auto a = random_vec<T>(rng, k * r);
      const auto b = random_vec<T>(rng, k * cols);
      auto c = c0;
      t.gemm_tn(a.data(), b.data(), c.data(), r, k, cols);
      check_close(c, naive(a, b, c0, r, k, cols, 't'), tol * k);
    }
  }
}

template <class T>
void check_equivalence(double tol) {
  if (!kernels::isa_supported(Isa::kAvx2)) return;
  const auto& s = kernels::table<T>(Isa::kScalar);
  const auto& v = kernels::table<T>(Isa::kAvx2);
  Rng rng(9);
  for (std::size_t n = 0; n < 70; ++n) {
    const auto a = random_vec<T>(rng, n);
    const auto b = random_vec<T>(rng, n);
    CHECK(std::abs(double(s.dot(a.data(), b.data(), n)) - double(v.dot(a.data(), b.data(), n))) <=
          tol * (1 + n));
    auto ys = b;
    auto yv = b;
    s.axpy(T(-1.25), a.data(), ys.data(), n);
    v.axpy(T(-1.25), a.data(), yv.data(), n);
    check_close(yv, ys, tol);
  }
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t r = 1 + rng.below(12), k = 1 + rng.below(40), cols = 1 + rng.below(12);
    const auto a = random_vec<T>(rng, r * k);
    const auto b = random_vec<T>(rng, k * cols);
    std::vector<T> cs(r * cols, T(0)), cv(r * cols, T(0));
    s.gemm_nn(a.data(), b.data(), cs.data(), r, k, cols);
    v.gemm_nn(a.data(), b.data(), cv.data(), r, k, cols);
    check_close(cv, cs, tol * k);
  }
}

}  // namespace

TEST_CASE("scalar kernels match a naive reference") {
  check_table<float>(Isa::kScalar, 1e-5);
  check_table<double>(Isa::kScalar, 1e-13);
}

TEST_CASE("avx2 kernels match a naive reference") {
  if (!kernels::isa_supported(Isa::kAvx2)) return;
  check_table<float>(Isa::kAvx2, 1e-5);
  check_table<double>(Isa::kAvx2, 1e-13);
}

TEST_CASE("avx2 and scalar kernels agree") {
  check_equivalence<float>(1e-5);
  check_equivalence<double>(1e-13);
}

TEST_CASE("active isa can be switched") {
  const Isa before = kernels::active_isa();
  kernels::set_active_isa(Isa::kScalar);
  CHECK(kernels::active_isa() == Isa::kScalar);
  if (kernels::isa_supported(Isa::kAvx2)) {
    kernels::set_active_isa(Isa::kAvx2);
    CHECK(kernels::active_isa() == Isa::kAvx2);
  } else {
    CHECK_THROWS(kernels::set_active_isa(Isa::kAvx2));
  }
  kernels::set_active_isa(before);
}
