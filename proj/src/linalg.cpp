#include "vstitch/linalg.hpp"

#include <cmath>

#include "vstitch/error.hpp"

namespace vstitch {

PivotedLu::PivotedLu(const Eigen::MatrixXd& a, double pivot_floor) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    throw InvalidArgument("PivotedLu: matrix must be square and non-empty");
  }
  const double scale = a.cwiseAbs().maxCoeff();
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw DegenerateConfiguration("PivotedLu: zero or non-finite matrix");
  }
  lu_.compute(a);
  const auto& packed = lu_.matrixLU();
  for (Eigen::Index k = 0; k < packed.rows(); ++k) {
    if (!(std::abs(packed(k, k)) >= pivot_floor * scale)) {
      throw DegenerateConfiguration("PivotedLu: pivot below floor, system is singular");
    }
  }
}

Eigen::MatrixXd PivotedLu::solve(const Eigen::MatrixXd& rhs) const {
  if (rhs.rows() != lu_.rows()) {
    throw InvalidArgument("PivotedLu::solve: right-hand side has wrong row count");
  }
  return lu_.solve(rhs);
}

}  // namespace vstitch
