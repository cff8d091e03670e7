#include "ovtsim/bnb.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ovtsim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start)
      .count();
}

// Drop rows that hold for every point of the box (they stay satisfied for
// every shrunken box met during the search); detect rows that can never
// hold. Returns false when the instance is trivially infeasible.
bool presolve_rows(QpInstance& inst, double feas_tol) {
  const int n = inst.num_vars();
  std::vector<int> keep;
  for (int i = 0; i < inst.num_rows(); ++i) {
    double lo = 0.0, hi = 0.0;
    for (int j = 0; j < n; ++j) {
      double a = inst.A(i, j);
      if (a > 0) {
        lo += a * inst.lb[j];
        hi += a * inst.ub[j];
      } else if (a < 0) {
        lo += a * inst.ub[j];
        hi += a * inst.lb[j];
      }
    }
    if (hi < inst.b[i] - feas_tol) return false;  // never satisfiable
    if (lo >= inst.b[i] - 1e-12) continue;        // always satisfied
    keep.push_back(i);
  }
  if (static_cast<int>(keep.size()) != inst.num_rows()) {
    Eigen::MatrixXd A(keep.size(), n);
    Eigen::VectorXd b(keep.size());
    for (std::size_t k = 0; k < keep.size(); ++k) {
      A.row(k) = inst.A.row(keep[k]);
      b[k] = inst.b[keep[k]];
    }
    inst.A = std::move(A);
    inst.b = std::move(b);
  }
  return true;
}

struct Node {
  Eigen::VectorXd lb, ub;
  double bound;  // parent relaxation lower bound
  long id;
  int depth;
};

}  // namespace

MiqpSolution solve_miqp(const QpInstance& inst_in, const BnbConfig& cfg,
                        const Eigen::VectorXd* hint) {
  auto start = Clock::now();
  MiqpSolution sol;

  QpInstance inst = inst_in;
  // binaries live in [0,1] intersected with the instance box
  for (int j : inst.binaries) {
    inst.lb[j] = std::max(inst.lb[j], 0.0);
    inst.ub[j] = std::min(inst.ub[j], 1.0);
    if (inst.lb[j] > inst.ub[j] + 1e-12) {
      sol.solve_time_ms = elapsed_ms(start);
      return sol;
    }
  }
  if (!presolve_rows(inst, cfg.feas_tol)) {
    sol.solve_time_ms = elapsed_ms(start);
    return sol;
  }

  Eigen::VectorXd x_inc;
  double f_inc = kInf;

  auto try_assignment = [&](const Eigen::VectorXd& values) {
    Eigen::VectorXd lo = inst.lb, hi = inst.ub;
    for (int j : inst.binaries) {
      double v = std::round(values[j]);
      v = std::clamp(v, inst.lb[j], inst.ub[j]);
      lo[j] = hi[j] = v;
    }
    QpResult r = solve_qp(inst, lo, hi);
    if (r.status == QpStatus::Optimal && r.objective < f_inc) {
      f_inc = r.objective;
      x_inc = r.x;
    }
  };
  if (hint && hint->size() == inst.num_vars()) try_assignment(*hint);

  std::vector<Node> open;
  long next_id = 0;
  open.push_back({inst.lb, inst.ub, -kInf, next_id++, 0});

  bool limit_hit = false;
  double best_open_bound = -kInf;

  auto gap_eps = [&]() {
    return std::max(cfg.abs_gap, cfg.rel_gap * std::abs(f_inc));
  };

  while (!open.empty()) {
    if (sol.nodes >= cfg.node_limit ||
        (cfg.time_limit_ms > 0 && elapsed_ms(start) > cfg.time_limit_ms)) {
      limit_hit = true;
      break;
    }

    // depth-first while hunting the first incumbent, then best-bound
    std::size_t pick = open.size() - 1;
    if (std::isfinite(f_inc)) {
      for (std::size_t i = 0; i < open.size(); ++i) {
        if (open[i].bound < open[pick].bound ||
            (open[i].bound == open[pick].bound &&
             (open[i].depth > open[pick].depth ||
              (open[i].depth == open[pick].depth &&
               open[i].id < open[pick].id))))
          pick = i;
      }
    }
    Node node = std::move(open[pick]);
    open.erase(open.begin() + pick);

    if (node.bound >= f_inc - gap_eps()) continue;

    QpResult rel = solve_qp(inst, node.lb, node.ub);
    sol.nodes++;
    if (rel.status != QpStatus::Optimal) continue;
    if (rel.lower_bound >= f_inc - gap_eps()) continue;

    // branch variable: most fractional free binary
    int branch = -1;
    double best_frac = cfg.int_tol;
    for (int j : inst.binaries) {
      if (node.ub[j] - node.lb[j] < 0.5) continue;  // fixed
      double f = std::abs(rel.x[j] - std::round(rel.x[j]));
      double score = std::min(f, 1.0 - f);
      if (f > cfg.int_tol && score > best_frac) {
        best_frac = score;
        branch = j;
      }
    }

    if (branch < 0) {
      // integral relaxation: pin the binaries and take the exact optimum
      Eigen::VectorXd lo = node.lb, hi = node.ub;
      for (int j : inst.binaries) lo[j] = hi[j] = std::round(rel.x[j]);
      QpResult exact = solve_qp(inst, lo, hi);
      if (exact.status == QpStatus::Optimal) {
        if (exact.objective < f_inc) {
          f_inc = exact.objective;
          x_inc = exact.x;
        }
        continue;
      }
      // knife-edge: the relaxed point was integral only to tolerance;
      // force explicit branching on the first free binary
      for (int j : inst.binaries) {
        if (node.ub[j] - node.lb[j] >= 0.5) {
          branch = j;
          break;
        }
      }
      if (branch < 0) continue;  // everything fixed and still infeasible
    }

    double preferred = std::round(rel.x[branch]);
    if (hint && hint->size() == inst.num_vars())
      preferred = std::round((*hint)[branch]);
    preferred = std::clamp(preferred, 0.0, 1.0);

    Node first{node.lb, node.ub, rel.lower_bound, 0, node.depth + 1};
    Node second{node.lb, node.ub, rel.lower_bound, 0, node.depth + 1};
    first.lb[branch] = first.ub[branch] = preferred;
    second.lb[branch] = second.ub[branch] = 1.0 - preferred;
    second.id = next_id++;
    first.id = next_id++;
    open.push_back(std::move(second));
    open.push_back(std::move(first));  // popped first when diving
  }

  if (limit_hit) {
    best_open_bound = kInf;
    for (const auto& nd : open)
      best_open_bound = std::min(best_open_bound, nd.bound);
    sol.status = MiqpStatus::FeasibleTimeout;
    if (std::isfinite(f_inc)) {
      sol.x = x_inc;
      sol.objective = f_inc;
      sol.gap = std::isfinite(best_open_bound)
                    ? std::max(0.0, f_inc - best_open_bound)
                    : kInf;
    }
  } else if (std::isfinite(f_inc)) {
    sol.status = MiqpStatus::Optimal;
    sol.x = x_inc;
    sol.objective = f_inc;
    sol.gap = 0.0;
  } else {
    sol.status = MiqpStatus::Infeasible;
  }
  sol.solve_time_ms = elapsed_ms(start);
  return sol;
}

MiqpSolution brute_force_miqp(const QpInstance& inst_in) {
  auto start = Clock::now();
  QpInstance inst = inst_in;
  std::vector<int> free_bin;
  for (int j : inst.binaries) {
    inst.lb[j] = std::max(inst.lb[j], 0.0);
    inst.ub[j] = std::min(inst.ub[j], 1.0);
    if (inst.ub[j] - inst.lb[j] > 1e-9) free_bin.push_back(j);
  }
  if (free_bin.size() > 20)
    throw std::invalid_argument("brute_force_miqp: more than 20 binaries");

  MiqpSolution sol;
  double f_best = kInf;
  const std::uint64_t count = 1ull << free_bin.size();
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    Eigen::VectorXd lo = inst.lb, hi = inst.ub;
    for (std::size_t k = 0; k < free_bin.size(); ++k) {
      double v = static_cast<double>((mask >> k) & 1ull);
      lo[free_bin[k]] = hi[free_bin[k]] = v;
    }
    QpResult r = solve_qp(inst, lo, hi);
    sol.nodes++;
    if (r.status == QpStatus::Optimal && r.objective < f_best) {
      f_best = r.objective;
      sol.x = r.x;
    }
  }
  if (std::isfinite(f_best)) {
    sol.status = MiqpStatus::Optimal;
    sol.objective = f_best;
  }
  sol.solve_time_ms = elapsed_ms(start);
  return sol;
}

}  // namespace ovtsim
