#include "flaremap/regression.hpp"

#include <algorithm>
#include <charconv>
#include <array>
#include <cmath>
#include <fstream>
#include <map>

#include <Eigen/Dense>
#include <boost/math/distributions/fisher_f.hpp>

#include "flaremap/csv.hpp"
#include "flaremap/error.hpp"

namespace flaremap {

RegressionResult ols(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, std::vector<std::string> names) {
  const auto n = x.rows();
  const auto p = x.cols();
  if (y.size() != n) throw ValidationError("response and design have different row counts");
  if (names.empty())
    for (Eigen::Index j = 0; j < p; ++j) names.push_back("x" + std::to_string(j));
  if (static_cast<Eigen::Index>(names.size()) != p) throw ValidationError("one name per design column required");
  if (n <= p)
    throw ValidationError("need more observations (" + std::to_string(n) + ") than columns (" + std::to_string(p) + ")");

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  if (qr.rank() < p) {
    std::vector<std::string> dependent;
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index j = qr.rank(); j < p; ++j) dependent.push_back(names[static_cast<std::size_t>(perm[j])]);
    std::sort(dependent.begin(), dependent.end());
    std::string list;
    for (const auto& d : dependent) list += (list.empty() ? "" : ", ") + d;
    throw RankError("design matrix is rank deficient; collinear column(s): " + list, std::move(dependent));
  }

  RegressionResult r;
  r.names = std::move(names);
  r.n = static_cast<std::size_t>(n);
  r.coefficients = qr.solve(y);
  const Eigen::VectorXd resid = y - x * r.coefficients;
  r.rss = resid.squaredNorm();
  const double tss = (y.array() - y.mean()).square().sum();
  r.r_squared = tss > 0.0 ? std::clamp(1.0 - r.rss / tss, 0.0, 1.0) : 0.0;
  r.adj_r_squared = 1.0 - (1.0 - r.r_squared) * static_cast<double>(n - 1) / static_cast<double>(n - p);

  // (X'X)^{-1} = P R^{-1} R^{-T} P^T for X P = Q R.
  const Eigen::MatrixXd rmat = qr.matrixR().topLeftCorner(p, p).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd rinv =
      rmat.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
  const Eigen::MatrixXd perm_inv = rinv * rinv.transpose();
  const auto& perm = qr.colsPermutation();
  const Eigen::MatrixXd xtx_inv = perm * perm_inv * perm.transpose();
  const double sigma2 = r.rss / static_cast<double>(n - p);
  r.standard_errors = (sigma2 * xtx_inv.diagonal().array()).sqrt();
  return r;
}

const char* to_string(Outcome o) noexcept {
  switch (o) {
    case Outcome::Revenue:
      return "revenue";
    case Outcome::Ebit:
      return "ebit";
    case Outcome::MarketValue:
      return "market_value";
  }
  return "?";
}

const char* to_string(Regressors r) noexcept {
  switch (r) {
    case Regressors::FlareOnly:
      return "flare_only";
    case Regressors::CountOnly:
      return "count_only";
    case Regressors::Both:
      return "both";
  }
  return "?";
}

namespace {

std::optional<double> parse_optional(const std::string& text, std::size_t line, const char* column) {
  std::string_view s = text;
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  if (s.empty() || s == "NA" || s == "na") return std::nullopt;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
    throw ParseError(line, std::string(column) + " value '" + text + "' is not a number");
  return v;
}

}  // namespace

std::vector<FirmOutcome> read_outcomes(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!csv::read_line(in, line, line_no)) throw ParseError(1, "empty outcomes file");
  const auto header = csv::split_record(line);
  auto column = [&](const char* name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ParseError(line_no, std::string("missing column '") + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t c_entity = column("entity");
  const std::size_t c_rev = column("revenue");
  const std::size_t c_ebit = column("ebit");
  const std::size_t c_mv = column("market_value");
  const std::size_t width = std::max({c_entity, c_rev, c_ebit, c_mv}) + 1;
  std::vector<FirmOutcome> out;
  while (csv::read_line(in, line, line_no)) {
    const auto f = csv::split_record(line);
    if (f.size() < width) throw ParseError(line_no, "too few fields");
    FirmOutcome o;
    o.entity = f[c_entity];
    if (o.entity.empty()) throw ParseError(line_no, "empty entity id");
    o.revenue = parse_optional(f[c_rev], line_no, "revenue");
    o.ebit = parse_optional(f[c_ebit], line_no, "ebit");
    o.market_value = parse_optional(f[c_mv], line_no, "market_value");
    out.push_back(std::move(o));
  }
  return out;
}

std::vector<FirmOutcome> read_outcomes(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open outcomes file " + path.string());
  return read_outcomes(in);
}

RegressionResult flare_regression(const FlareCensus& census, const std::vector<FirmOutcome>& outcomes,
                                  Outcome outcome, Regressors regressors) {
  std::map<std::string, const FlareReport*, std::less<>> by_entity;
  for (const auto& r : census.reports)
    if (!r.absent) by_entity.emplace(r.entity, &r);

  const bool use_flare = regressors != Regressors::CountOnly;
  const bool use_count = regressors != Regressors::FlareOnly;
  std::vector<DroppedObservation> dropped;
  std::vector<double> ys;
  std::vector<std::array<double, 3>> rows;  // length, island dummy, ln p
  for (const auto& o : outcomes) {
    auto it = by_entity.find(o.entity);
    if (it == by_entity.end()) {
      dropped.push_back({o.entity, "not_in_graph"});
      continue;
    }
    const std::optional<double>& y =
        outcome == Outcome::Revenue ? o.revenue : outcome == Outcome::Ebit ? o.ebit : o.market_value;
    if (!y) {
      dropped.push_back({o.entity, "missing_outcome"});
      continue;
    }
    if (*y <= 0.0) {
      dropped.push_back({o.entity, "nonpositive_outcome"});
      continue;
    }
    if (use_count && o.total_count <= 0) {
      dropped.push_back({o.entity, "nonpositive_count"});
      continue;
    }
    const Hops k = it->second->length;
    ys.push_back(std::log(*y));
    rows.push_back({k.is_finite() ? static_cast<double>(k.value()) : 0.0, k.is_infinite() ? 1.0 : 0.0,
                    use_count ? std::log(static_cast<double>(o.total_count)) : 0.0});
  }
  if (ys.empty()) throw ValidationError("no outcome rows join the flare census");

  std::vector<std::string> names{"const"};
  if (use_flare) {
    names.emplace_back("flare_length");
    names.emplace_back("islands_only");
  }
  if (use_count) names.emplace_back("log_count");
  const auto n = static_cast<Eigen::Index>(ys.size());
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(names.size()));
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    Eigen::Index c = 0;
    x(i, c++) = 1.0;
    if (use_flare) {
      x(i, c++) = r[0];
      x(i, c++) = r[1];
    }
    if (use_count) x(i, c++) = r[2];
    y[i] = ys[static_cast<std::size_t>(i)];
  }
  auto result = ols(y, x, names);
  result.dropped = std::move(dropped);
  return result;
}

double f_statistic(double r2_unrestricted, double r2_restricted, int q, std::size_t n, std::size_t p_unrestricted) {
  if (q < 1) throw ValidationError("number of restrictions must be >= 1");
  if (n <= p_unrestricted) throw ValidationError("F-test needs n > number of unrestricted parameters");
  return ((r2_unrestricted - r2_restricted) / q) /
         ((1.0 - r2_unrestricted) / static_cast<double>(n - p_unrestricted));
}

double f_p_value(double f, int df_num, int df_den) {
  if (!(f > 0.0)) return 1.0;
  boost::math::fisher_f dist(df_num, df_den);
  return boost::math::cdf(boost::math::complement(dist, f));
}

FTest f_test_restriction(const RegressionResult& unrestricted, const RegressionResult& restricted, int q) {
  if (unrestricted.n != restricted.n)
    throw ValidationError("F-test models use different observation counts (" + std::to_string(unrestricted.n) +
                          " vs " + std::to_string(restricted.n) + ")");
  const std::size_t p = static_cast<std::size_t>(unrestricted.coefficients.size());
  FTest t;
  t.df_num = q;
  t.df_den = static_cast<int>(unrestricted.n - p);
  t.f = f_statistic(unrestricted.r_squared, restricted.r_squared, q, unrestricted.n, p);
  t.p_value = f_p_value(t.f, t.df_num, t.df_den);
  return t;
}

nlohmann::json regression_json(const RegressionResult& r) {
  nlohmann::json coefs = nlohmann::json::array();
  for (std::size_t j = 0; j < r.names.size(); ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    coefs.push_back({{"name", r.names[j]}, {"estimate", r.coefficients[jj]}, {"std_error", r.standard_errors[jj]}});
  }
  nlohmann::json dropped = nlohmann::json::array();
  for (const auto& d : r.dropped) dropped.push_back({{"entity", d.entity}, {"reason", d.reason}});
  return {{"coefficients", std::move(coefs)},
          {"r_squared", r.r_squared},
          {"adj_r_squared", r.adj_r_squared},
          {"rss", r.rss},
          {"n", r.n},
          {"dropped", std::move(dropped)}};
}

}  // namespace flaremap
