#include "flaremap/kernels.hpp"

#if defined(FLAREMAP_HAVE_NEON_KERNELS)

#include <arm_neon.h>

#include <cmath>

namespace flaremap::kernels::neon {

namespace {

template <class Step, class Tail>
inline double reduce(const double* a, const double* b, std::size_t n, Step step, Tail tail) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  float64x2_t acc2 = vdupq_n_f64(0.0);
  float64x2_t acc3 = vdupq_n_f64(0.0);
  std::size_t k = 0;
  for (; k + 8 <= n; k += 8) {
    acc0 = step(acc0, vld1q_f64(a + k), vld1q_f64(b + k));
    acc1 = step(acc1, vld1q_f64(a + k + 2), vld1q_f64(b + k + 2));
    acc2 = step(acc2, vld1q_f64(a + k + 4), vld1q_f64(b + k + 4));
    acc3 = step(acc3, vld1q_f64(a + k + 6), vld1q_f64(b + k + 6));
  }
  for (; k + 2 <= n; k += 2) acc0 = step(acc0, vld1q_f64(a + k), vld1q_f64(b + k));
  double acc = vaddvq_f64(vaddq_f64(vaddq_f64(acc0, acc1), vaddq_f64(acc2, acc3)));
  for (; k < n; ++k) acc += tail(a[k], b[k]);
  return acc;
}

}  // namespace

double dot(const double* a, const double* b, std::size_t n) {
  return reduce(
      a, b, n, [](float64x2_t acc, float64x2_t x, float64x2_t y) { return vfmaq_f64(acc, x, y); },
      [](double x, double y) { return x * y; });
}

double squared_distance(const double* a, const double* b, std::size_t n) {
  return reduce(
      a, b, n,
      [](float64x2_t acc, float64x2_t x, float64x2_t y) {
        const float64x2_t d = vsubq_f64(x, y);
        return vfmaq_f64(acc, d, d);
      },
      [](double x, double y) { return (x - y) * (x - y); });
}

double l1_distance(const double* a, const double* b, std::size_t n) {
  return reduce(
      a, b, n, [](float64x2_t acc, float64x2_t x, float64x2_t y) { return vaddq_f64(acc, vabdq_f64(x, y)); },
      [](double x, double y) { return std::fabs(x - y); });
}

}  // namespace flaremap::kernels::neon

#endif
