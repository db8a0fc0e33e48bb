#pragma once

// Matrix products expressed over an ISA's dot/axpy primitives. Included by
// each ISA translation unit; `Ops` carries that unit's primitives so every
// instantiation is distinct.

#include <cstddef>

namespace condense::kernels::detail {

template <class Ops, class T>
void gemm_nn(const T* a, const T* b, T* c, std::size_t r, std::size_t k,
             std::size_t cols) {
  if (cols == 1) {
    for (std::size_t i = 0; i < r; ++i) c[i] += Ops::dot(a + i * k, b, k);
    return;
  }
  for (std::size_t i = 0; i < r; ++i) {
    const T* a_row = a + i * k;
    T* c_row = c + i * cols;
    for (std::size_t p = 0; p < k; ++p) {
      if (a_row[p] != T(0)) Ops::axpy(a_row[p], b + p * cols, c_row, cols);
    }
  }
}

template <class Ops, class T>
void gemm_nt(const T* a, const T* b, T* c, std::size_t r, std::size_t k,
             std::size_t cols) {
  if (k == 1) {
    for (std::size_t i = 0; i < r; ++i) {
      if (a[i] != T(0)) Ops::axpy(a[i], b, c + i * cols, cols);
    }
    return;
  }
  for (std::size_t i = 0; i < r; ++i) {
    const T* a_row = a + i * k;
    T* c_row = c + i * cols;
    for (std::size_t j = 0; j < cols; ++j) c_row[j] += Ops::dot(a_row, b + j * k, k);
  }
}

template <class Ops, class T>
void gemm_tn(const T* a, const T* b, T* c, std::size_t r, std::size_t k,
             std::size_t cols) {
  if (cols == 1) {
    for (std::size_t p = 0; p < k; ++p) {
      if (b[p] != T(0)) Ops::axpy(b[p], a + p * r, c, r);
    }
    return;
  }
  for (std::size_t p = 0; p < k; ++p) {
    const T* a_row = a + p * r;
    const T* b_row = b + p * cols;
    for (std::size_t i = 0; i < r; ++i) {
      if (a_row[i] != T(0)) Ops::axpy(a_row[i], b_row, c + i * cols, cols);
    }
  }
}

template <class Ops, class T>
KernelTable<T> make_table() {
  return KernelTable<T>{&Ops::dot, &Ops::axpy, &gemm_nn<Ops, T>,
                        &gemm_nt<Ops, T>, &gemm_tn<Ops, T>};
}

}  // namespace condense::kernels::detail
