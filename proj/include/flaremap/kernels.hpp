#pragma once

// Inner-loop arithmetic for the dissimilarity computations. Each instruction
// set provides the same three reductions; the scalar set is the reference that
// the vector sets are tested against.

#include <cstddef>
#include <span>
#include <string_view>

namespace flaremap::kernels {

enum class Isa { Scalar, Avx2, Neon };

struct KernelSet {
  Isa isa;
  const char* name;
  // sum_k a[k] * b[k]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // sum_k (a[k] - b[k])^2
  double (*squared_distance)(const double* a, const double* b, std::size_t n);
  // sum_k |a[k] - b[k]|
  double (*l1_distance)(const double* a, const double* b, std::size_t n);
};

/// True when this binary contains the ISA and the running CPU supports it.
bool available(Isa isa) noexcept;

/// The widest available ISA.
Isa best_available() noexcept;

/// Kernel table for an ISA. Throws std::invalid_argument if unavailable.
const KernelSet& get(Isa isa);

/// Kernels used by the library. Defaults to best_available(); the environment
/// variable FLAREMAP_ISA=scalar|avx2|neon overrides at first use.
const KernelSet& active() noexcept;
void set_active(Isa isa);

const char* to_string(Isa isa) noexcept;
Isa parse_isa(std::string_view text);

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}
inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  return active().squared_distance(a.data(), b.data(), a.size());
}
inline double l1_distance(std::span<const double> a, std::span<const double> b) {
  return active().l1_distance(a.data(), b.data(), a.size());
}

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
double squared_distance(const double* a, const double* b, std::size_t n);
double l1_distance(const double* a, const double* b, std::size_t n);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
#define FLAREMAP_HAVE_AVX2_KERNELS 1
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
double squared_distance(const double* a, const double* b, std::size_t n);
double l1_distance(const double* a, const double* b, std::size_t n);
}  // namespace avx2
#endif

#if defined(__aarch64__) && defined(__ARM_NEON)
#define FLAREMAP_HAVE_NEON_KERNELS 1
namespace neon {
double dot(const double* a, const double* b, std::size_t n);
double squared_distance(const double* a, const double* b, std::size_t n);
double l1_distance(const double* a, const double* b, std::size_t n);
}  // namespace neon
#endif

}  // namespace flaremap::kernels
