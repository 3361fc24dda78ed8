// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.

#include <immintrin.h>

#include <cmath>

#include "flaremap/kernels.hpp"

namespace flaremap::kernels::avx2 {

namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

// Four independent accumulators hide FMA latency; they are combined in a fixed
// order so results do not depend on alignment.
template <class Step, class Tail>
inline double reduce(const double* a, const double* b, std::size_t n, Step step, Tail tail) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  __m256d acc2 = _mm256_setzero_pd();
  __m256d acc3 = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 16 <= n; k += 16) {
    acc0 = step(acc0, _mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k));
    acc1 = step(acc1, _mm256_loadu_pd(a + k + 4), _mm256_loadu_pd(b + k + 4));
    acc2 = step(acc2, _mm256_loadu_pd(a + k + 8), _mm256_loadu_pd(b + k + 8));
    acc3 = step(acc3, _mm256_loadu_pd(a + k + 12), _mm256_loadu_pd(b + k + 12));
  }
  for (; k + 4 <= n; k += 4) acc0 = step(acc0, _mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k));
  double acc = hsum(_mm256_add_pd(_mm256_add_pd(acc0, acc1), _mm256_add_pd(acc2, acc3)));
  for (; k < n; ++k) acc += tail(a[k], b[k]);
  return acc;
}

}  // namespace

double dot(const double* a, const double* b, std::size_t n) {
  return reduce(
      a, b, n, [](__m256d acc, __m256d x, __m256d y) { return _mm256_fmadd_pd(x, y, acc); },
      [](double x, double y) { return x * y; });
}

double squared_distance(const double* a, const double* b, std::size_t n) {
  return reduce(
      a, b, n,
      [](__m256d acc, __m256d x, __m256d y) {
        const __m256d d = _mm256_sub_pd(x, y);
        return _mm256_fmadd_pd(d, d, acc);
      },
      [](double x, double y) { return (x - y) * (x - y); });
}

double l1_distance(const double* a, const double* b, std::size_t n) {
  const __m256d sign = _mm256_set1_pd(-0.0);
  return reduce(
      a, b, n,
      [sign](__m256d acc, __m256d x, __m256d y) {
        return _mm256_add_pd(acc, _mm256_andnot_pd(sign, _mm256_sub_pd(x, y)));
      },
      [](double x, double y) { return std::fabs(x - y); });
}

}  // namespace flaremap::kernels::avx2
