#include <cmath>

#include "flaremap/kernels.hpp"

namespace flaremap::kernels::scalar {

double dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) acc += a[k] * b[k];
  return acc;
}

double squared_distance(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double d = a[k] - b[k];
    acc += d * d;
  }
  return acc;
}

double l1_distance(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) acc += std::fabs(a[k] - b[k]);
  return acc;
}

}  // namespace flaremap::kernels::scalar
