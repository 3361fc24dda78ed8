#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "flaremap/kernels.hpp"

namespace flaremap::kernels {

namespace {

constexpr KernelSet kScalar{Isa::Scalar, "scalar", &scalar::dot, &scalar::squared_distance, &scalar::l1_distance};
#if defined(FLAREMAP_HAVE_AVX2_KERNELS)
constexpr KernelSet kAvx2{Isa::Avx2, "avx2", &avx2::dot, &avx2::squared_distance, &avx2::l1_distance};
#endif
#if defined(FLAREMAP_HAVE_NEON_KERNELS)
constexpr KernelSet kNeon{Isa::Neon, "neon", &neon::dot, &neon::squared_distance, &neon::l1_distance};
#endif

const KernelSet* initial() noexcept {
  if (const char* env = std::getenv("FLAREMAP_ISA")) {
    try {
      const Isa requested = parse_isa(env);
      if (available(requested)) return &get(requested);
    } catch (const std::exception&) {
    }
  }
  return &get(best_available());
}

std::atomic<const KernelSet*>& current() noexcept {
  static std::atomic<const KernelSet*> ptr{initial()};
  return ptr;
}

}  // namespace

bool available(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
#if defined(FLAREMAP_HAVE_AVX2_KERNELS)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::Neon:
#if defined(FLAREMAP_HAVE_NEON_KERNELS)
      return true;
#else
      return false;
#endif
  }
  return false;
}

Isa best_available() noexcept {
  if (available(Isa::Avx2)) return Isa::Avx2;
  if (available(Isa::Neon)) return Isa::Neon;
  return Isa::Scalar;
}

const KernelSet& get(Isa isa) {
  if (!available(isa)) throw std::invalid_argument(std::string("instruction set not available: ") + to_string(isa));
  switch (isa) {
#if defined(FLAREMAP_HAVE_AVX2_KERNELS)
    case Isa::Avx2:
      return kAvx2;
#endif
#if defined(FLAREMAP_HAVE_NEON_KERNELS)
    case Isa::Neon:
      return kNeon;
#endif
    default:
      return kScalar;
  }
}

const KernelSet& active() noexcept { return *current().load(std::memory_order_acquire); }

void set_active(Isa isa) { current().store(&get(isa), std::memory_order_release); }

const char* to_string(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar:
      return "scalar";
    case Isa::Avx2:
      return "avx2";
    case Isa::Neon:
      return "neon";
  }
  return "?";
}

Isa parse_isa(std::string_view text) {
  if (text == "scalar") return Isa::Scalar;
  if (text == "avx2") return Isa::Avx2;
  if (text == "neon") return Isa::Neon;
  throw std::invalid_argument("unknown instruction set '" + std::string(text) + "'");
}

}  // namespace flaremap::kernels
