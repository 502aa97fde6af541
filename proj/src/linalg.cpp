#include "skno/linalg.hpp"

#include "skno/error.hpp"

namespace skno {

SvdResult svd(const Eigen::MatrixXd& matrix) {
  if (!matrix.allFinite()) throw NumericError("svd input contains non-finite entries");
  if (matrix.rows() < matrix.cols())
    throw UsageError("svd expects rows >= cols (got " + std::to_string(matrix.rows()) + "x" +
                     std::to_string(matrix.cols()) + ")");
  Eigen::JacobiSVD<Eigen::MatrixXd> solver(matrix, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return SvdResult{solver.matrixU(), solver.singularValues(), solver.matrixV()};
}

}  // namespace skno
