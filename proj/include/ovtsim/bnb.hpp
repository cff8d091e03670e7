#pragma once

#include <optional>
#include <string>

#include "ovtsim/qp.hpp"

namespace ovtsim {

struct BnbConfig {
  double abs_gap = 1e-9;
  double rel_gap = 1e-9;
  long node_limit = 20000;
  double time_limit_ms = 400.0;
  std::string branching = "most_fractional";
  double feas_tol = 1e-6;
  double int_tol = 1e-6;
};

enum class MiqpStatus { Optimal, FeasibleTimeout, Infeasible };

struct MiqpSolution {
  MiqpStatus status = MiqpStatus::Infeasible;
  Eigen::VectorXd x;  // empty when no incumbent was found
  double objective = 0.0;
  double gap = 0.0;
  long nodes = 0;
  double solve_time_ms = 0.0;

  bool has_solution() const { return x.size() > 0; }
};

// Branch-and-bound over the binary variables with a convex QP relaxation
// per node. Depth-first dives until the first incumbent, then best-bound.
// Deterministic for a given instance and config as long as the limits do
// not trigger. hint, when given, seeds an incumbent from its rounded
// binary assignment and steers dive direction.
MiqpSolution solve_miqp(const QpInstance& inst, const BnbConfig& cfg,
                        const Eigen::VectorXd* hint = nullptr);

// Exact optimum by enumerating every assignment of the free binaries;
// rejects instances with more than 20 of them.
MiqpSolution brute_force_miqp(const QpInstance& inst);

}  // namespace ovtsim
