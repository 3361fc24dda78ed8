#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include <Eigen/Dense>

#include "flaremap/error.hpp"
#include "flaremap/geometry.hpp"
#include "flaremap/kernels.hpp"
#include "flaremap/parallel.hpp"

namespace flaremap {

namespace detail {
std::string metric_violation(std::span<const double> v, MetricKind kind);
}

namespace {

constexpr std::size_t kTile = 64;
constexpr char kMagic[8] = {'F', 'L', 'M', 'D', 'M', 'A', 'T', '\0'};
constexpr std::uint32_t kCacheVersion = 1;

static_assert(std::endian::native == std::endian::little, "matrix cache IO assumes a little-endian host");

// Row-wise representation on which every metric reduces to one kernel call.
struct Prepared {
  std::size_t dim = 0;
  std::vector<double> rows;
  std::vector<double> sq_norms;  // cosine / correlation only
};

Prepared prepare(const PointCloud& cloud, const Metric& metric) {
  Prepared p;
  p.dim = cloud.dimension();
  const std::size_t n = cloud.size();
  switch (metric.kind()) {
    case MetricKind::Cosine:
    case MetricKind::Euclidean:
      p.rows.assign(cloud.values().begin(), cloud.values().end());
      break;
    case MetricKind::Correlation:
      p.rows.resize(n * p.dim);
      for (std::size_t i = 0; i < n; ++i) {
        const auto r = cloud.row(i);
        double mean = 0.0;
        for (double x : r) mean += x;
        mean /= static_cast<double>(p.dim);
        for (std::size_t k = 0; k < p.dim; ++k) p.rows[i * p.dim + k] = r[k] - mean;
      }
      break;
    case MetricKind::MinComplement:
      p.rows.resize(n * p.dim);
      for (std::size_t i = 0; i < n; ++i) {
        const auto r = cloud.row(i);
        double total = 0.0;
        for (double x : r) total += x;
        for (std::size_t k = 0; k < p.dim; ++k) p.rows[i * p.dim + k] = r[k] / total;
      }
      break;
    case MetricKind::Mahalanobis: {
      // z = L^{-1} x turns the Mahalanobis form into a Euclidean distance.
      using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
      Eigen::Map<const RowMatrix> x(cloud.values().data(), static_cast<Eigen::Index>(n),
                                    static_cast<Eigen::Index>(p.dim));
      Eigen::MatrixXd zt = x.transpose();
      metric.model()->cholesky_lower.triangularView<Eigen::Lower>().solveInPlace(zt);
      p.rows.resize(n * p.dim);
      Eigen::Map<RowMatrix>(p.rows.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p.dim)) =
          zt.transpose();
      break;
    }
  }
  if (metric.kind() == MetricKind::Cosine || metric.kind() == MetricKind::Correlation) {
    const auto& k = kernels::active();
    p.sq_norms.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double* r = p.rows.data() + i * p.dim;
      p.sq_norms[i] = k.dot(r, r, p.dim);
    }
  }
  return p;
}

std::vector<std::string> collect_violations(const PointCloud& cloud, MetricKind kind) {
  std::vector<std::string> offenders;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (auto why = detail::metric_violation(cloud.row(i), kind); !why.empty()) {
      const auto& l = cloud.label(i);
      offenders.push_back(l.entity + "@" + std::to_string(l.period) + " (" + why + ")");
    }
  }
  return offenders;
}

}  // namespace

DissimilarityMatrix dissimilarity_matrix(const PointCloud& cloud, const Metric& metric_in, ExecOptions exec) {
  if (cloud.empty()) throw ValidationError("dissimilarity matrix of an empty cloud");
  const std::size_t n = cloud.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (double x : cloud.row(i))
      if (!std::isfinite(x)) throw DomainError("non-finite coordinate", {cloud.label(i).entity});
  }
  if (auto bad = collect_violations(cloud, metric_in.kind()); !bad.empty()) {
    throw DomainError(std::to_string(bad.size()) + " point(s) violate the " + to_string(metric_in.kind()) +
                          " metric preconditions",
                      std::move(bad));
  }
  const Metric metric = metric_in.needs_fit() ? metric_in.fitted_to(cloud) : metric_in;
  const Prepared prep = prepare(cloud, metric);
  const auto& kern = kernels::active();
  const MetricKind kind = metric.kind();
  const std::size_t dim = prep.dim;

  DissimilarityMatrix dm(n);
  const std::size_t row_tiles = (n + kTile - 1) / kTile;
  // Tiles of rows are independent; every entry is one kernel call on fixed
  // inputs, so the result does not depend on the thread count.
  parallel_for(row_tiles, exec.threads, [&](std::size_t tile) {
    const std::size_t p0 = tile * kTile;
    const std::size_t p1 = std::min(n, p0 + kTile);
    for (std::size_t q0 = 0; q0 < p1; q0 += kTile) {
      for (std::size_t p = std::max<std::size_t>(p0, 1); p < p1; ++p) {
        const double* a = prep.rows.data() + p * dim;
        auto out = dm.row_below_diagonal(p);
        const std::size_t q1 = std::min(p, q0 + kTile);
        for (std::size_t q = q0; q < q1; ++q) {
          const double* b = prep.rows.data() + q * dim;
          double v = 0.0;
          switch (kind) {
            case MetricKind::Cosine:
            case MetricKind::Correlation:
              v = std::clamp(1.0 - kern.dot(a, b, dim) / std::sqrt(prep.sq_norms[p] * prep.sq_norms[q]), 0.0, 2.0);
              break;
            case MetricKind::Euclidean:
            case MetricKind::Mahalanobis:
              v = std::sqrt(kern.squared_distance(a, b, dim));
              break;
            case MetricKind::MinComplement:
              v = 0.5 * kern.l1_distance(a, b, dim);
              break;
          }
          out[q] = v;
        }
      }
    }
  });
  return dm;
}

void write_matrix_cache(const std::filesystem::path& path, const DissimilarityMatrix& dm,
                        const std::string& descriptor) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write matrix cache " + path.string());
  const std::uint32_t version = kCacheVersion;
  const std::uint64_t n = dm.size();
  const auto desc_len = static_cast<std::uint32_t>(descriptor.size());
  out.write(kMagic, sizeof kMagic);
  out.write(reinterpret_cast<const char*>(&version), sizeof version);
  out.write(reinterpret_cast<const char*>(&n), sizeof n);
  out.write(reinterpret_cast<const char*>(&desc_len), sizeof desc_len);
  out.write(descriptor.data(), static_cast<std::streamsize>(descriptor.size()));
  const auto packed = dm.packed();
  out.write(reinterpret_cast<const char*>(packed.data()), static_cast<std::streamsize>(packed.size_bytes()));
  if (!out) throw ValidationError("failed writing matrix cache " + path.string());
}

std::optional<DissimilarityMatrix> read_matrix_cache(const std::filesystem::path& path,
                                                     const std::string& descriptor) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  char magic[8];
  std::uint32_t version = 0;
  std::uint64_t n = 0;
  std::uint32_t desc_len = 0;
  in.read(magic, sizeof magic);
  in.read(reinterpret_cast<char*>(&version), sizeof version);
  in.read(reinterpret_cast<char*>(&n), sizeof n);
  in.read(reinterpret_cast<char*>(&desc_len), sizeof desc_len);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0 || version != kCacheVersion) return std::nullopt;
  if (desc_len != descriptor.size()) return std::nullopt;
  std::string stored(desc_len, '\0');
  in.read(stored.data(), desc_len);
  if (!in || stored != descriptor) return std::nullopt;
  const std::size_t len = n * (n - (n > 0)) / 2;
  std::vector<double> packed(len);
  in.read(reinterpret_cast<char*>(packed.data()), static_cast<std::streamsize>(len * sizeof(double)));
  if (!in || in.peek() != std::char_traits<char>::eof()) return std::nullopt;
  return DissimilarityMatrix(n, std::move(packed));
}

}  // namespace flaremap
