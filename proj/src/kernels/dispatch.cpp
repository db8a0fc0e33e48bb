#include <atomic>
#include <cstdlib>
#include <string>

#include "condense/error.hpp"
#include "condense/nn/kernels.hpp"

namespace condense::kernels {

namespace detail {
const KernelTable<float>& scalar_table_f32();
const KernelTable<double>& scalar_table_f64();
const KernelTable<float>& avx2_table_f32();
const KernelTable<double>& avx2_table_f64();
}  // namespace detail

namespace {

std::atomic<Isa>& active_slot() {
  static std::atomic<Isa> slot{detect_isa()};
  return slot;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  return isa == Isa::kAvx2 ? "avx2" : "scalar";
}

bool isa_supported(Isa isa) {
  if (isa == Isa::kScalar) return true;
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa detect_isa() {
  if (const char* env = std::getenv("CONDENSE_ISA")) {
    const std::string requested(env);
    if (requested == "scalar") return Isa::kScalar;
    if (requested == "avx2" && isa_supported(Isa::kAvx2)) return Isa::kAvx2;
  }
  return isa_supported(Isa::kAvx2) ? Isa::kAvx2 : Isa::kScalar;
}

Isa active_isa() { return active_slot().load(std::memory_order_relaxed); }

void set_active_isa(Isa isa) {
  if (!isa_supported(isa)) {
    throw ConfigError("CPU does not support the " + std::string(isa_name(isa)) +
                      " kernels");
  }
  active_slot().store(isa, std::memory_order_relaxed);
}

const KernelTable<float>& table_f32(Isa isa) {
  return isa == Isa::kAvx2 ? detail::avx2_table_f32() : detail::scalar_table_f32();
}

const KernelTable<double>& table_f64(Isa isa) {
  return isa == Isa::kAvx2 ? detail::avx2_table_f64() : detail::scalar_table_f64();
}

}  // namespace condense::kernels
