#pragma once

#include <Eigen/Dense>
#include <vector>

namespace ovtsim {

// Convex quadratic program
//   min 0.5 x'Qx + c'x + c0   s.t.  A x >= b,  lb <= x <= ub.
// Q must be positive semidefinite. binaries lists the variable indices the
// MIQP layer constrains to {0,1}; solve_qp treats them as plain bounded
// variables (fixed when lb == ub, relaxed otherwise).
struct QpInstance {
  Eigen::MatrixXd Q;
  Eigen::VectorXd c;
  double c0 = 0.0;
  Eigen::MatrixXd A;  // zero rows allowed
  Eigen::VectorXd b;
  Eigen::VectorXd lb, ub;
  std::vector<int> binaries;

  int num_vars() const { return static_cast<int>(c.size()); }
  int num_rows() const { return static_cast<int>(b.size()); }

  double objective(const Eigen::VectorXd& x) const;
  // max violation over rows and box (0 when feasible)
  double max_violation(const Eigen::VectorXd& x) const;
  double max_violation(const Eigen::VectorXd& x, const Eigen::VectorXd& lo,
                       const Eigen::VectorXd& hi) const;
};

enum class QpStatus { Optimal, Infeasible };

struct QpResult {
  QpStatus status = QpStatus::Infeasible;
  Eigen::VectorXd x;
  double objective = 0.0;    // true objective at x, including c0
  double lower_bound = 0.0;  // valid lower bound on the true minimum
  int iterations = 0;
};

QpResult solve_qp(const QpInstance& inst);
QpResult solve_qp(const QpInstance& inst, const Eigen::VectorXd& lb,
                  const Eigen::VectorXd& ub);

}  // namespace ovtsim
