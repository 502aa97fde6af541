#pragma once

#include <Eigen/Dense>

namespace skno {

struct SvdResult {
  Eigen::MatrixXd left;     // rows x min(rows, cols), orthonormal columns
  Eigen::VectorXd values;   // descending, nonnegative
  Eigen::MatrixXd right;    // cols x min(rows, cols), orthonormal columns
};

/// Thin SVD of a tall (or square) real matrix.
SvdResult svd(const Eigen::MatrixXd& matrix);

}  // namespace skno
