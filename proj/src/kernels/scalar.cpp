#include "condense/nn/kernels.hpp"
#include "gemm_impl.hpp"

namespace condense::kernels {

namespace {

template <class T>
struct ScalarOps {
  static T dot(const T* a, const T* b, std::size_t n) {
    T acc = 0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
  }
  static void axpy(T alpha, const T* x, T* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
  }
};

}  // namespace

namespace detail {

const KernelTable<float>& scalar_table_f32() {
  static const KernelTable<float> t = make_table<ScalarOps<float>, float>();
  return t;
}

const KernelTable<double>& scalar_table_f64() {
  static const KernelTable<double> t = make_table<ScalarOps<double>, double>();
  return t;
}

}  // namespace detail

}  // namespace condense::kernels
