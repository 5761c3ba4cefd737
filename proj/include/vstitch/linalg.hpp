#pragma once

#include <Eigen/Dense>

namespace vstitch {

/// Partial-pivoting LU with a relative pivot floor. Construction throws
/// DegenerateConfiguration when a pivot falls below floor * max|A|.
class PivotedLu {
 public:
  explicit PivotedLu(const Eigen::MatrixXd& a, double pivot_floor = 1e-12);

  Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const;
  Eigen::Index size() const { return lu_.rows(); }

 private:
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
};

}  // namespace vstitch
