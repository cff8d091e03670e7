#include "ovtsim/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ovtsim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kFixedTol = 1e-9;   // ub-lb below this means fixed
constexpr double kZeroDiag = 1e-12;  // diagonal below this gets regularized
constexpr double kRegLambda = 1e-7;  // curvature added to zero-diag vars
constexpr double kSlackTol = 1e-10;  // violation threshold (normalized rows)
constexpr double kPivotTol = 1e-11;

}  // namespace

double QpInstance::objective(const Eigen::VectorXd& x) const {
  return 0.5 * x.dot(Q * x) + c.dot(x) + c0;
}

double QpInstance::max_violation(const Eigen::VectorXd& x) const {
  return max_violation(x, lb, ub);
}

double QpInstance::max_violation(const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& lo,
                                 const Eigen::VectorXd& hi) const {
  double worst = 0.0;
  if (num_rows() > 0) {
    Eigen::VectorXd slack = A * x - b;
    worst = std::max(worst, -slack.minCoeff());
  }
  for (int j = 0; j < num_vars(); ++j) {
    worst = std::max(worst, lo[j] - x[j]);
    worst = std::max(worst, x[j] - hi[j]);
  }
  return std::max(worst, 0.0);
}

namespace {

// Dual active-set method (Goldfarb-Idnani) on the reduced, strictly convex
// problem. Constraints are rows n_i'x >= d_i, all normalized to unit
// infinity norm.
class DualActiveSet {
 public:
  DualActiveSet(const Eigen::MatrixXd& G, const Eigen::VectorXd& g0,
                Eigen::MatrixXd rows, Eigen::VectorXd rhs)
      : n_(static_cast<int>(g0.size())),
        m_(static_cast<int>(rhs.size())),
        rows_(std::move(rows)),
        rhs_(std::move(rhs)) {
    Eigen::LLT<Eigen::MatrixXd> llt(G);
    if (llt.info() != Eigen::Success)
      throw std::invalid_argument("qp: cost matrix is not positive definite");
    J_ = llt.matrixU().solve(Eigen::MatrixXd::Identity(n_, n_));
    x_ = -llt.solve(g0);
    R_.setZero(n_, n_);
    active_.reserve(n_);
    in_active_.assign(m_, false);
  }

  // returns false when the constraint set is infeasible
  bool run(int& iterations) {
    int max_iter = 100 * (n_ + m_) + 1000;
    int iter = 0;
    Eigen::VectorXd u = Eigen::VectorXd::Zero(n_ + 1);

    while (true) {
      if (++iter > max_iter)
        throw std::runtime_error("qp: active-set iteration limit");
      // most violated inactive constraint
      int p = -1;
      double worst = -kSlackTol;
      for (int i = 0; i < m_; ++i) {
        if (in_active_[i]) continue;
        double s = rows_.row(i).dot(x_) - rhs_[i];
        if (s < worst) {
          worst = s;
          p = i;
        }
      }
      if (p < 0) {
        iterations = iter;
        return true;  // optimal
      }

      Eigen::VectorXd np = rows_.row(p).transpose();
      double sp = worst;
      int q = static_cast<int>(active_.size());
      u[q] = 0.0;

      while (true) {
        if (++iter > max_iter)
          throw std::runtime_error("qp: active-set iteration limit");
        Eigen::VectorXd d = J_.transpose() * np;
        Eigen::VectorXd z = J_.rightCols(n_ - q) * d.tail(n_ - q);
        Eigen::VectorXd r;
        if (q > 0) {
          r = R_.topLeftCorner(q, q)
                  .triangularView<Eigen::Upper>()
                  .solve(d.head(q));
        }

        // dual step length: first multiplier driven to zero
        double t1 = kInf;
        int k_drop = -1;
        for (int k = 0; k < q; ++k) {
          if (r[k] > kPivotTol) {
            double ratio = u[k] / r[k];
            if (ratio < t1) {
              t1 = ratio;
              k_drop = k;
            }
          }
        }
        // primal step length: full satisfaction of constraint p
        double zdot = z.dot(np);
        double t2 = (zdot > kPivotTol) ? -sp / zdot : kInf;

        double t = std::min(t1, t2);
        if (t == kInf) {
          iterations = iter;
          return false;  // no step possible: infeasible
        }

        if (t2 == kInf) {
          // dual-only step: drop the blocking constraint and retry
          for (int k = 0; k < q; ++k) u[k] -= t * r[k];
          u[q] += t;
          drop_constraint(k_drop, u, q);
          q = static_cast<int>(active_.size());
          continue;
        }

        x_ += t * z;
        for (int k = 0; k < q; ++k) u[k] -= t * r[k];
        u[q] += t;
        sp = np.dot(x_) - rhs_[p];

        if (t2 <= t1) {
          add_constraint(p, d, q);
          break;  // back to violation scan
        }
        drop_constraint(k_drop, u, q);
        q = static_cast<int>(active_.size());
      }
    }
  }

  const Eigen::VectorXd& x() const { return x_; }

 private:
  static void rotate(double a, double b, double& cs, double& sn) {
    double h = std::hypot(a, b);
    if (h == 0.0) {
      cs = 1.0;
      sn = 0.0;
    } else {
      cs = a / h;
      sn = b / h;
    }
  }

  void add_constraint(int p, Eigen::VectorXd d, int q) {
    // zero d[q+1..n-1] into d[q] with Givens rotations, mirrored on J
    for (int i = n_ - 1; i > q; --i) {
      if (std::abs(d[i]) < 1e-300) continue;
      double cs, sn;
      rotate(d[i - 1], d[i], cs, sn);
      d[i - 1] = cs * d[i - 1] + sn * d[i];
      d[i] = 0.0;
      Eigen::VectorXd ja = J_.col(i - 1);
      Eigen::VectorXd jb = J_.col(i);
      J_.col(i - 1) = cs * ja + sn * jb;
      J_.col(i) = -sn * ja + cs * jb;
    }
    R_.col(q).head(q + 1) = d.head(q + 1);
    active_.push_back(p);
    in_active_[p] = true;
  }

  void drop_constraint(int k, Eigen::VectorXd& u, int q) {
    in_active_[active_[k]] = false;
    active_.erase(active_.begin() + k);
    for (int j = k; j < q - 1; ++j) {
      u[j] = u[j + 1];
      R_.col(j) = R_.col(j + 1);
    }
    u[q - 1] = u[q];
    u[q] = 0.0;
    R_.col(q - 1).setZero();
    // re-triangularize: R columns k..q-2 have a subdiagonal entry
    for (int j = k; j < q - 1; ++j) {
      if (std::abs(R_(j + 1, j)) < 1e-300) continue;
      double cs, sn;
      rotate(R_(j, j), R_(j + 1, j), cs, sn);
      for (int col = j; col < q - 1; ++col) {
        double a = R_(j, col);
        double b = R_(j + 1, col);
        R_(j, col) = cs * a + sn * b;
        R_(j + 1, col) = -sn * a + cs * b;
      }
      Eigen::VectorXd ja = J_.col(j);
      Eigen::VectorXd jb = J_.col(j + 1);
      J_.col(j) = cs * ja + sn * jb;
      J_.col(j + 1) = -sn * ja + cs * jb;
    }
  }

  int n_, m_;
  Eigen::MatrixXd rows_;
  Eigen::VectorXd rhs_;
  Eigen::MatrixXd J_;
  Eigen::MatrixXd R_;
  Eigen::VectorXd x_;
  std::vector<int> active_;
  std::vector<bool> in_active_;
};

}  // namespace

QpResult solve_qp(const QpInstance& inst) {
  return solve_qp(inst, inst.lb, inst.ub);
}

QpResult solve_qp(const QpInstance& inst, const Eigen::VectorXd& lb,
                  const Eigen::VectorXd& ub) {
  const int n = inst.num_vars();
  const int m = inst.num_rows();
  QpResult res;

  // split fixed and free variables
  std::vector<int> free_idx;
  Eigen::VectorXd x_full = Eigen::VectorXd::Zero(n);
  for (int j = 0; j < n; ++j) {
    if (ub[j] - lb[j] < -kFixedTol) return res;  // empty box
    if (ub[j] - lb[j] <= kFixedTol) {
      x_full[j] = 0.5 * (lb[j] + ub[j]);
    } else {
      free_idx.push_back(j);
    }
  }
  const int nf = static_cast<int>(free_idx.size());

  if (nf == 0) {
    if (m > 0 && ((inst.A * x_full - inst.b).minCoeff() < -1e-7)) return res;
    res.status = QpStatus::Optimal;
    res.x = x_full;
    res.objective = inst.objective(x_full);
    res.lower_bound = res.objective;
    return res;
  }

  // reduced cost: substitute fixed values
  Eigen::MatrixXd G(nf, nf);
  Eigen::VectorXd g0(nf);
  for (int a = 0; a < nf; ++a) {
    for (int bcol = 0; bcol < nf; ++bcol)
      G(a, bcol) = inst.Q(free_idx[a], free_idx[bcol]);
    g0[a] = inst.c[free_idx[a]] + inst.Q.row(free_idx[a]).dot(x_full);
  }

  // regularize zero-curvature variables; track the bound slack it costs
  double reg_slack = 0.0;
  for (int a = 0; a < nf; ++a) {
    if (G(a, a) < kZeroDiag) {
      G(a, a) = 2.0 * kRegLambda;
      int j = free_idx[a];
      double extreme = std::max(lb[j] * lb[j], ub[j] * ub[j]);
      reg_slack += kRegLambda * extreme;
    }
  }

  // reduced rows: general rows plus finite box bounds, normalized
  std::vector<Eigen::VectorXd> row_list;
  std::vector<double> rhs_list;
  for (int i = 0; i < m; ++i) {
    Eigen::VectorXd a(nf);
    double fixed_part = 0.0;
    for (int k = 0; k < n; ++k) fixed_part += inst.A(i, k) * x_full[k];
    for (int k = 0; k < nf; ++k) a[k] = inst.A(i, free_idx[k]);
    double rhs = inst.b[i] - fixed_part;
    double scale = a.lpNorm<Eigen::Infinity>();
    if (scale <= 1e-14) {
      if (rhs > 1e-7) return res;  // 0 >= positive: infeasible
      continue;                    // trivially satisfied
    }
    row_list.push_back(a / scale);
    rhs_list.push_back(rhs / scale);
  }
  for (int k = 0; k < nf; ++k) {
    int j = free_idx[k];
    if (std::isfinite(lb[j])) {
      Eigen::VectorXd a = Eigen::VectorXd::Zero(nf);
      a[k] = 1.0;
      row_list.push_back(a);
      rhs_list.push_back(lb[j]);
    }
    if (std::isfinite(ub[j])) {
      Eigen::VectorXd a = Eigen::VectorXd::Zero(nf);
      a[k] = -1.0;
      row_list.push_back(a);
      rhs_list.push_back(-ub[j]);
    }
  }

  Eigen::MatrixXd rows(row_list.size(), nf);
  Eigen::VectorXd rhs(row_list.size());
  for (std::size_t i = 0; i < row_list.size(); ++i) {
    rows.row(i) = row_list[i].transpose();
    rhs[i] = rhs_list[i];
  }

  DualActiveSet solver(G, g0, std::move(rows), std::move(rhs));
  int iterations = 0;
  if (!solver.run(iterations)) {
    res.iterations = iterations;
    return res;  // infeasible
  }

  const Eigen::VectorXd& xr = solver.x();
  for (int k = 0; k < nf; ++k) {
    int j = free_idx[k];
    x_full[j] = std::clamp(xr[k], lb[j], ub[j]);
  }

  res.status = QpStatus::Optimal;
  res.x = x_full;
  res.objective = inst.objective(x_full);
  res.iterations = iterations;
  // regularized optimum bounds the true minimum from below (minus the
  // worst-case regularization contribution over the box)
  double f_reg = res.objective;
  for (int a = 0; a < nf; ++a) {
    int j = free_idx[a];
    if (inst.Q(j, j) < kZeroDiag) f_reg += kRegLambda * x_full[j] * x_full[j];
  }
  res.lower_bound = f_reg - reg_slack;
  return res;
}

}  // namespace ovtsim
