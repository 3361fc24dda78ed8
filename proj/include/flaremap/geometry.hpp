#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "flaremap/panel.hpp"

namespace flaremap {

enum class MetricKind { Cosine, Euclidean, Correlation, MinComplement, Mahalanobis };

const char* to_string(MetricKind kind) noexcept;
MetricKind parse_metric(std::string_view text);

/// Regularized inverse covariance, stored as the Cholesky factor of (Sigma + lambda I).
struct MahalanobisModel {
  Eigen::MatrixXd cholesky_lower;  // L with L L^T = Sigma + lambda I
  double lambda = 0.0;
};

/// A dissimilarity function. Mahalanobis needs a covariance before it can be
/// evaluated; `fitted_to` estimates it from a point cloud.
class Metric {
 public:
  Metric() = default;
  static Metric cosine() { return Metric(MetricKind::Cosine); }
  static Metric euclidean() { return Metric(MetricKind::Euclidean); }
  static Metric correlation() { return Metric(MetricKind::Correlation); }
  static Metric min_complement() { return Metric(MetricKind::MinComplement); }
  /// Unfitted Mahalanobis. Without lambda the default 1e-6 * trace(Sigma) / dim is used.
  static Metric mahalanobis(std::optional<double> lambda = std::nullopt);
  /// Mahalanobis with an explicit covariance matrix.
  static Metric mahalanobis(const Eigen::MatrixXd& covariance, double lambda);
  static Metric of_kind(MetricKind kind, std::optional<double> lambda = std::nullopt);

  MetricKind kind() const noexcept { return kind_; }
  std::optional<double> lambda() const noexcept { return lambda_; }
  bool needs_fit() const noexcept { return kind_ == MetricKind::Mahalanobis && !model_; }
  const MahalanobisModel* model() const noexcept { return model_.get(); }

  /// Copy with the sample covariance of `cloud` attached (no-op for other kinds).
  Metric fitted_to(const PointCloud& cloud) const;

  /// Stable text form, e.g. "cosine" or "mahalanobis(lambda=1e-06)".
  std::string descriptor() const;

 private:
  explicit Metric(MetricKind kind) : kind_(kind) {}
  MetricKind kind_ = MetricKind::Cosine;
  std::optional<double> lambda_;
  std::shared_ptr<const MahalanobisModel> model_;
};

/// Dissimilarity between two vectors of equal dimension. Throws DomainError for
/// zero vectors (Cosine, MinComplement, Correlation) and constant vectors (Correlation).
double distance(std::span<const double> a, std::span<const double> b, const Metric& metric);

/// Symmetric N x N dissimilarities with zero diagonal, stored as the strict
/// lower triangle in row-major order: (1,0), (2,0), (2,1), (3,0), ...
class DissimilarityMatrix {
 public:
  DissimilarityMatrix() = default;
  explicit DissimilarityMatrix(std::size_t n) : n_(n), packed_(n * (n - (n > 0)) / 2, 0.0) {}
  DissimilarityMatrix(std::size_t n, std::vector<double> packed);

  std::size_t size() const noexcept { return n_; }

  double operator()(std::size_t p, std::size_t q) const noexcept {
    if (p == q) return 0.0;
    if (p < q) std::swap(p, q);
    return packed_[p * (p - 1) / 2 + q];
  }
  void set(std::size_t p, std::size_t q, double value) noexcept {
    if (p < q) std::swap(p, q);
    packed_[p * (p - 1) / 2 + q] = value;
  }
  std::span<const double> packed() const noexcept { return packed_; }
  std::span<double> row_below_diagonal(std::size_t p) noexcept {
    return {packed_.data() + p * (p - 1) / 2, p};
  }

 private:
  std::size_t n_ = 0;
  std::vector<double> packed_;
};

struct ExecOptions {
  unsigned threads = 0;  // 0 = hardware concurrency
};

/// All pairwise distances. Metric preconditions are checked for every point
/// first; violations raise one DomainError listing the offending labels.
DissimilarityMatrix dissimilarity_matrix(const PointCloud& cloud, const Metric& metric,
                                         ExecOptions exec = {});

/// Binary cache: "FLMDMAT\0", u32 version, u64 N, u32 descriptor length,
/// descriptor bytes, then the packed lower triangle as little-endian float64.
void write_matrix_cache(const std::filesystem::path& path, const DissimilarityMatrix& dm,
                        const std::string& descriptor);
/// Returns nullopt when the file is missing, malformed or its descriptor differs.
std::optional<DissimilarityMatrix> read_matrix_cache(const std::filesystem::path& path,
                                                     const std::string& descriptor);

/// Projection of the cloud onto its leading principal axes.
struct FilterImage {
  std::size_t dims = 0;
  std::vector<double> coords;  // N x dims, row-major
  Eigen::MatrixXd axes;        // dimension x dims, orthonormal columns
  Eigen::VectorXd mean;
  Eigen::VectorXd singular_values;  // leading `dims` singular values of the centered data

  std::size_t size() const noexcept { return dims == 0 ? 0 : coords.size() / dims; }
  double coord(std::size_t point, std::size_t k) const noexcept { return coords[point * dims + k]; }
};

/// PCA via SVD of the centered data. Each axis is signed so that its
/// largest-magnitude coordinate is positive. Throws ValidationError for d out of
/// range and DomainError("zero variance") when all points coincide.
FilterImage pca_filter(const PointCloud& cloud, std::size_t dims);

}  // namespace flaremap
