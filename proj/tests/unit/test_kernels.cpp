#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"

#include "flaremap/geometry.hpp"
#include "flaremap/kernels.hpp"
#include "support.hpp"

using namespace flaremap;
namespace k = flaremap::kernels;

namespace {

double rel_close(double a, double b) { return std::abs(a - b) <= 1e-12 * (1.0 + std::abs(a) + std::abs(b)); }

std::vector<k::Isa> vector_isas() {
  std::vector<k::Isa> out;
  for (auto isa : {k::Isa::Avx2, k::Isa::Neon})
    if (k::available(isa)) out.push_back(isa);
  return out;
}

}  // namespace

TEST_CASE("scalar kernels on small inputs") {
  const double a[] = {1, 2, 3};
  const double b[] = {4, -5, 6};
  CHECK(k::scalar::dot(a, b, 3) == 12.0);
  CHECK(k::scalar::squared_distance(a, b, 3) == 9 + 49 + 9);
  CHECK(k::scalar::l1_distance(a, b, 3) == 3 + 7 + 3);
  CHECK(k::scalar::dot(a, b, 0) == 0.0);
}

TEST_CASE("scalar is always available and is the reference") {
  CHECK(k::available(k::Isa::Scalar));
  CHECK(k::get(k::Isa::Scalar).dot == &k::scalar::dot);
  CHECK(k::parse_isa("scalar") == k::Isa::Scalar);
  CHECK_THROWS(k::parse_isa("sse9"));
}

TEST_CASE("vector kernels agree with the scalar reference") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> gauss(0.0, 3.0);
  for (auto isa : vector_isas()) {
    const auto& ks = k::get(isa);
    for (std::size_t n = 0; n <= 67; ++n) {
      for (int rep = 0; rep < 20; ++rep) {
        std::vector<double> a(n), b(n);
        for (auto& v : a) v = gauss(rng);
        for (auto& v : b) v = gauss(rng);
        CHECK(rel_close(ks.dot(a.data(), b.data(), n), k::scalar::dot(a.data(), b.data(), n)));
        CHECK(rel_close(ks.squared_distance(a.data(), b.data(), n),
                        k::scalar::squared_distance(a.data(), b.data(), n)));
        CHECK(rel_close(ks.l1_distance(a.data(), b.data(), n), k::scalar::l1_distance(a.data(), b.data(), n)));
      }
    }
  }
}

TEST_CASE("unaligned pointers are handled") {
  std::vector<double> buf(40);
  for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = 0.5 * static_cast<double>(i) - 3.0;
  for (auto isa : vector_isas()) {
    const auto& ks = k::get(isa);
    for (std::size_t off = 0; off < 4; ++off) {
      const double* a = buf.data() + off;
      const double* b = buf.data() + 40 - 33;
      CHECK(rel_close(ks.dot(a, b, 33), k::scalar::dot(a, b, 33)));
      CHECK(rel_close(ks.l1_distance(a, b, 33), k::scalar::l1_distance(a, b, 33)));
    }
  }
}

TEST_CASE("dissimilarity matrix is equivalent under every instruction set") {
  auto cloud = fmtest::two_blob_cloud(40, 3);
  const auto original = k::active().isa;
  for (auto metric : {Metric::cosine(), Metric::euclidean(), Metric::min_complement()}) {
    k::set_active(k::Isa::Scalar);
    auto ref = dissimilarity_matrix(cloud, metric, {1});
    for (auto isa : vector_isas()) {
      k::set_active(isa);
      auto dm = dissimilarity_matrix(cloud, metric, {1});
      for (std::size_t i = 0; i < ref.packed().size(); ++i)
        CHECK(std::abs(dm.packed()[i] - ref.packed()[i]) <= 1e-12);
    }
  }
  k::set_active(original);
}
