#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"

#include "flaremap/flare.hpp"

namespace flaremap {

struct DroppedObservation {
  std::string entity;
  std::string reason;
};

struct RegressionResult {
  std::vector<std::string> names;
  Eigen::VectorXd coefficients;
  Eigen::VectorXd standard_errors;
  double r_squared = 0.0;
  double adj_r_squared = 0.0;
  double rss = 0.0;
  std::size_t n = 0;
  std::vector<DroppedObservation> dropped;
};

/// Least squares via column-pivoted QR with classical standard errors. The
/// first column is assumed to be the intercept when computing R^2 (centered
/// total sum of squares). Throws RankError naming collinear columns and
/// ValidationError when n <= columns.
RegressionResult ols(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, std::vector<std::string> names = {});

struct FirmOutcome {
  std::string entity;
  std::optional<double> revenue;
  std::optional<double> ebit;
  std::optional<double> market_value;
  std::int64_t total_count = 0;  // sum over periods and categories
};

enum class Outcome { Revenue, Ebit, MarketValue };
enum class Regressors { FlareOnly, CountOnly, Both };

const char* to_string(Outcome o) noexcept;
const char* to_string(Regressors r) noexcept;

/// Outcomes CSV `entity,revenue,ebit,market_value`; empty cells are missing.
std::vector<FirmOutcome> read_outcomes(std::istream& in);
std::vector<FirmOutcome> read_outcomes(const std::filesystem::path& path);

/// ln y = a1 + a2 k + a3 1{k = inf} + a4 ln p. Islands-only firms enter with
/// length 0 and dummy 1. Rows are dropped (with reason) for a missing or
/// nonpositive outcome, an entity absent from the census, or a nonpositive count.
RegressionResult flare_regression(const FlareCensus& census, const std::vector<FirmOutcome>& outcomes,
                                  Outcome outcome, Regressors regressors);

struct FTest {
  double f = 0.0;
  double p_value = 1.0;
  int df_num = 0;
  int df_den = 0;
};

/// F = ((R2_ur - R2_r) / q) / ((1 - R2_ur) / (n - p_ur)).
double f_statistic(double r2_unrestricted, double r2_restricted, int q, std::size_t n, std::size_t p_unrestricted);

/// Upper-tail probability of F(df_num, df_den) at f.
double f_p_value(double f, int df_num, int df_den);

/// F-test of the restriction that turns `unrestricted` into `restricted`.
/// Throws ValidationError when n differs.
FTest f_test_restriction(const RegressionResult& unrestricted, const RegressionResult& restricted, int q);

nlohmann::json regression_json(const RegressionResult& r);

}  // namespace flaremap
