#include "flaremap/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "flaremap/error.hpp"
#include "flaremap/kernels.hpp"

namespace flaremap {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const RowMatrix> as_matrix(const PointCloud& cloud) {
  return {cloud.values().data(), static_cast<Eigen::Index>(cloud.size()),
          static_cast<Eigen::Index>(cloud.dimension())};
}

// 1 - <a,b> / (|a||b|) given squared norms; clamped to [0, 2] against rounding.
inline double cosine_from(double ab, double aa, double bb) {
  const double c = 1.0 - ab / std::sqrt(aa * bb);
  return std::clamp(c, 0.0, 2.0);
}

std::vector<double> centered(std::span<const double> v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  std::vector<double> out(v.begin(), v.end());
  for (double& x : out) x -= mean;
  return out;
}

double sum_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

std::vector<double> sum_normalized(std::span<const double> v, double total) {
  std::vector<double> out(v.begin(), v.end());
  for (double& x : out) x /= total;
  return out;
}

std::shared_ptr<const MahalanobisModel> make_model(const Eigen::MatrixXd& covariance, double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ValidationError("Mahalanobis lambda must be positive");
  Eigen::MatrixXd reg = covariance;
  reg.diagonal().array() += lambda;
  Eigen::LLT<Eigen::MatrixXd> llt(reg);
  if (llt.info() != Eigen::Success) throw DomainError("regularized covariance is not positive definite");
  auto model = std::make_shared<MahalanobisModel>();
  model->cholesky_lower = llt.matrixL();
  model->lambda = lambda;
  return model;
}

}  // namespace

namespace detail {

// Metric preconditions for one vector; returns an empty string when satisfied.
std::string metric_violation(std::span<const double> v, MetricKind kind) {
  switch (kind) {
    case MetricKind::Cosine:
      if (kernels::dot(v, v) == 0.0) return "zero vector";
      break;
    case MetricKind::MinComplement:
      if (sum_of(v) == 0.0) return "zero-sum vector";
      break;
    case MetricKind::Correlation: {
      const auto c = centered(v);
      if (kernels::dot(c, c) == 0.0) return "constant vector";
      break;
    }
    default:
      break;
  }
  return {};
}

}  // namespace detail

const char* to_string(MetricKind kind) noexcept {
  switch (kind) {
    case MetricKind::Cosine:
      return "cosine";
    case MetricKind::Euclidean:
      return "euclidean";
    case MetricKind::Correlation:
      return "correlation";
    case MetricKind::MinComplement:
      return "mincomplement";
    case MetricKind::Mahalanobis:
      return "mahalanobis";
  }
  return "?";
}

MetricKind parse_metric(std::string_view text) {
  for (auto kind : {MetricKind::Cosine, MetricKind::Euclidean, MetricKind::Correlation, MetricKind::MinComplement,
                    MetricKind::Mahalanobis}) {
    if (text == to_string(kind)) return kind;
  }
  throw ValidationError("unknown metric '" + std::string(text) +
                        "' (expected cosine|euclidean|correlation|mincomplement|mahalanobis)");
}

Metric Metric::mahalanobis(std::optional<double> lambda) {
  if (lambda && !(*lambda > 0.0)) throw ValidationError("Mahalanobis lambda must be positive");
  Metric m(MetricKind::Mahalanobis);
  m.lambda_ = lambda;
  return m;
}

Metric Metric::mahalanobis(const Eigen::MatrixXd& covariance, double lambda) {
  if (covariance.rows() != covariance.cols()) throw ValidationError("covariance must be square");
  Metric m(MetricKind::Mahalanobis);
  m.lambda_ = lambda;
  m.model_ = make_model(covariance, lambda);
  return m;
}

Metric Metric::of_kind(MetricKind kind, std::optional<double> lambda) {
  if (kind == MetricKind::Mahalanobis) return mahalanobis(lambda);
  return Metric(kind);
}

Metric Metric::fitted_to(const PointCloud& cloud) const {
  if (kind_ != MetricKind::Mahalanobis) return *this;
  if (cloud.empty()) throw ValidationError("cannot fit Mahalanobis covariance to an empty cloud");
  const auto x = as_matrix(cloud);
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const Eigen::MatrixXd xc = x.rowwise() - mean;
  const double denom = cloud.size() > 1 ? static_cast<double>(cloud.size() - 1) : 1.0;
  const Eigen::MatrixXd cov = (xc.transpose() * xc) / denom;
  double lambda = 0.0;
  if (lambda_) {
    lambda = *lambda_;
  } else {
    lambda = 1e-6 * cov.trace() / static_cast<double>(cloud.dimension());
    if (!(lambda > 0.0)) lambda = 1e-6;  // zero-variance cloud
  }
  Metric m = *this;
  m.model_ = make_model(cov, lambda);
  return m;
}

std::string Metric::descriptor() const {
  std::ostringstream os;
  os << to_string(kind_);
  if (kind_ == MetricKind::Mahalanobis) {
    os.precision(17);
    if (lambda_) {
      os << "(lambda=" << *lambda_ << ")";
    } else {
      os << "(lambda=auto)";
    }
  }
  return os.str();
}

double distance(std::span<const double> a, std::span<const double> b, const Metric& metric) {
  if (a.size() != b.size()) throw ValidationError("distance between vectors of different dimension");
  switch (metric.kind()) {
    case MetricKind::Cosine: {
      const double aa = kernels::dot(a, a);
      const double bb = kernels::dot(b, b);
      if (aa == 0.0 || bb == 0.0) throw DomainError("cosine distance of a zero vector");
      return cosine_from(kernels::dot(a, b), aa, bb);
    }
    case MetricKind::Euclidean:
      return std::sqrt(kernels::squared_distance(a, b));
    case MetricKind::Correlation: {
      const auto ac = centered(a);
      const auto bc = centered(b);
      const double aa = kernels::dot(ac, ac);
      const double bb = kernels::dot(bc, bc);
      if (aa == 0.0 || bb == 0.0) throw DomainError("correlation distance of a constant vector");
      return cosine_from(kernels::dot(ac, bc), aa, bb);
    }
    case MetricKind::MinComplement: {
      // 1 - sum_c min(a_c, b_c) on unit-sum vectors equals half their L1 distance.
      const double sa = sum_of(a);
      const double sb = sum_of(b);
      if (sa == 0.0 || sb == 0.0) throw DomainError("min-complement distance of a zero-sum vector");
      const auto an = sum_normalized(a, sa);
      const auto bn = sum_normalized(b, sb);
      return 0.5 * kernels::l1_distance(an, bn);
    }
    case MetricKind::Mahalanobis: {
      const auto* model = metric.model();
      if (!model) throw std::logic_error("Mahalanobis metric used before fitting a covariance");
      if (static_cast<std::size_t>(model->cholesky_lower.rows()) != a.size())
        throw ValidationError("Mahalanobis covariance dimension mismatch");
      Eigen::VectorXd diff(static_cast<Eigen::Index>(a.size()));
      for (std::size_t k = 0; k < a.size(); ++k) diff[static_cast<Eigen::Index>(k)] = a[k] - b[k];
      model->cholesky_lower.triangularView<Eigen::Lower>().solveInPlace(diff);
      return diff.norm();
    }
  }
  return 0.0;
}

DissimilarityMatrix::DissimilarityMatrix(std::size_t n, std::vector<double> packed)
    : n_(n), packed_(std::move(packed)) {
  if (packed_.size() != n * (n - (n > 0)) / 2) throw ValidationError("packed matrix has the wrong length");
}

FilterImage pca_filter(const PointCloud& cloud, std::size_t dims) {
  const std::size_t n = cloud.size();
  if (dims < 1) throw ValidationError("filter dimension must be >= 1");
  if (dims > std::min(n, cloud.dimension()))
    throw ValidationError("filter dimension " + std::to_string(dims) + " exceeds min(points, dimension) = " +
                          std::to_string(std::min(n, cloud.dimension())));
  const auto x = as_matrix(cloud);
  const Eigen::VectorXd mean = x.colwise().mean().transpose();
  RowMatrix xc = x.rowwise() - mean.transpose();

  bool identical = true;
  for (Eigen::Index i = 1; i < x.rows() && identical; ++i) identical = (x.row(i) == x.row(0));
  if (identical) throw DomainError("zero variance");

  Eigen::BDCSVD<Eigen::MatrixXd> svd(xc, Eigen::ComputeThinV);
  const auto d = static_cast<Eigen::Index>(dims);
  FilterImage img;
  img.dims = dims;
  img.mean = mean;
  img.axes = svd.matrixV().leftCols(d);
  img.singular_values = svd.singularValues().head(d);
  for (Eigen::Index k = 0; k < d; ++k) {
    Eigen::Index arg = 0;
    img.axes.col(k).cwiseAbs().maxCoeff(&arg);
    if (img.axes(arg, k) < 0.0) img.axes.col(k) *= -1.0;
  }
  const Eigen::MatrixXd projected = xc * img.axes;
  img.coords.resize(n * dims);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < dims; ++k)
      img.coords[i * dims + k] = projected(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
  return img;
}

}  // namespace flaremap
