#pragma once

// Dense inner loops used by the differentiable engine. Every kernel has a
// scalar reference implementation and an AVX2/FMA variant; the variant is
// picked once at startup from CPUID and can be overridden with the
// CONDENSE_ISA environment variable ("scalar" or "avx2") or set_active_isa().
//
// All matrices are row-major. The gemm kernels accumulate into C.

#include <cstddef>
#include <string_view>

namespace condense::kernels {

enum class Isa { kScalar, kAvx2 };

std::string_view isa_name(Isa isa);

template <class T>
struct KernelTable {
  T (*dot)(const T* a, const T* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(T alpha, const T* x, T* y, std::size_t n);
  // C(r x c) += A(r x k) * B(k x c)
  void (*gemm_nn)(const T* a, const T* b, T* c, std::size_t r, std::size_t k,
                  std::size_t cols);
  // C(r x c) += A(r x k) * B(c x k)^T
  void (*gemm_nt)(const T* a, const T* b, T* c, std::size_t r, std::size_t k,
                  std::size_t cols);
  // C(r x c) += A(k x r)^T * B(k x c)
  void (*gemm_tn)(const T* a, const T* b, T* c, std::size_t r, std::size_t k,
                  std::size_t cols);
};

/// True when the running CPU can execute `isa`.
bool isa_supported(Isa isa);

/// Best ISA the CPU supports, after the CONDENSE_ISA override.
Isa detect_isa();

Isa active_isa();

/// Throws ConfigError if the CPU cannot run `isa`.
void set_active_isa(Isa isa);

const KernelTable<float>& table_f32(Isa isa);
const KernelTable<double>& table_f64(Isa isa);

template <class T>
const KernelTable<T>& table(Isa isa) {
  if constexpr (sizeof(T) == sizeof(float)) {
    return table_f32(isa);
  } else {
    return table_f64(isa);
  }
}

template <class T>
const KernelTable<T>& active() {
  return table<T>(active_isa());
}

}  // namespace condense::kernels
