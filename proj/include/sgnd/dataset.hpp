#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "sgnd/errors.hpp"

namespace sgnd {

// Response plus design matrix; X has an explicit leading intercept column.
// col_sd holds the sample SDs (n-1 divisor) of the non-intercept columns,
// filled in by standardize().
struct Dataset {
  Eigen::VectorXd y;
  Eigen::MatrixXd X;
  std::vector<std::string> names;  // covariate names, excludes intercept
  Eigen::VectorXd col_sd;
  bool scaled = false;

  Eigen::Index n() const { return y.size(); }
  Eigen::Index p() const { return X.cols() - 1; }
};

inline Eigen::VectorXd column_sds(const Eigen::MatrixXd& X) {
  const double n = static_cast<double>(X.rows());
  Eigen::VectorXd sd(X.cols() - 1);
  for (Eigen::Index j = 1; j < X.cols(); ++j) {
    const double mean = X.col(j).mean();
    sd[j - 1] = std::sqrt((X.col(j).array() - mean).square().sum() / (n - 1.0));
  }
  return sd;
}

// Divide non-intercept columns by their sample SD (unit-variance rescaling).
inline Dataset standardize(const Dataset& data) {
  Dataset out = data;
  out.col_sd = column_sds(data.X);
  for (Eigen::Index j = 1; j < out.X.cols(); ++j) {
    if (out.col_sd[j - 1] <= 0.0 || !std::isfinite(out.col_sd[j - 1]))
      throw DegenerateColumn("covariate " + std::to_string(j) +
                             " has zero sample SD");
    out.X.col(j) /= out.col_sd[j - 1];
  }
  out.scaled = true;
  return out;
}

}  // namespace sgnd
