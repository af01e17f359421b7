/*
 * Copyright 2026 The vshp-mpc Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "vshp/qp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace vshp {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

QpProblem QpProblem::unconstrained(MatrixXd hessian, VectorXd gradient) {
  QpProblem p;
  const Index n = gradient.size();
  p.hessian = std::move(hessian);
  p.gradient = std::move(gradient);
  p.eq_a.resize(0, n);
  p.eq_b.resize(0);
  p.ineq_a.resize(0, n);
  p.ineq_b.resize(0);
  return p;
}

const char* to_string(QpStatus status) {
  switch (status) {
    case QpStatus::kSolved:
      return "solved";
    case QpStatus::kMaxIterations:
      return "max-iterations";
    case QpStatus::kInfeasible:
      return "infeasible";
  }
  return "unknown";
}

double objective_value(const QpProblem& p, const VectorXd& z) {
  return 0.5 * z.dot(p.hessian * z) + p.gradient.dot(z);
}

double kkt_residuals(const QpProblem& p, const QpSolution& s) {
  const Index n = p.num_variables();
  if (n == 0) return 0.0;
  VectorXd stat = p.hessian * s.z + p.gradient;
  double res = 0.0;
  if (p.num_equalities() > 0) {
    if (s.lambda_eq.size() == p.num_equalities()) stat += p.eq_a.transpose() * s.lambda_eq;
    res = std::max(res, (p.eq_a * s.z - p.eq_b).lpNorm<Eigen::Infinity>());
  }
  if (p.num_inequalities() > 0) {
    const VectorXd lam = s.lambda_ineq.size() == p.num_inequalities()
                             ? s.lambda_ineq
                             : VectorXd::Zero(p.num_inequalities());
    stat += p.ineq_a.transpose() * lam;
    const VectorXd slack = p.ineq_b - p.ineq_a * s.z;
    res = std::max(res, (-slack).cwiseMax(0.0).maxCoeff());
    res = std::max(res, (-lam).cwiseMax(0.0).maxCoeff());
    res = std::max(res, lam.cwiseProduct(slack).cwiseAbs().maxCoeff());
  }
  return std::max(res, stat.lpNorm<Eigen::Infinity>());
}

namespace {

// Inequality-only QP in reduced coordinates: min 1/2 y'Hy + g'y, Ay <= b.
struct ReducedQp {
  MatrixXd h;
  VectorXd g;
  MatrixXd a;
  VectorXd b;
};

struct ReducedResult {
  VectorXd y;
  VectorXd lambda;
  QpStatus status = QpStatus::kMaxIterations;
  int iterations = 0;
  std::string message;
};

double step_to_boundary(const VectorXd& v, const VectorXd& dv) {
  double alpha = 1.0;
  for (Index i = 0; i < v.size(); ++i) {
    if (dv[i] < 0.0) alpha = std::min(alpha, -v[i] / dv[i]);
  }
  return alpha;
}

struct IpmResult {
  VectorXd y, s, lambda;
  bool converged = false;
  bool infeasible = false;
  int iterations = 0;
};

// Mehrotra predictor-corrector on the reduced problem.
IpmResult interior_point(const ReducedQp& q, const VectorXd& y0, int max_iterations) {
  const Index n = q.h.rows();
  const Index m = q.a.rows();
  IpmResult r;
  r.y = y0;
  r.s = (q.b - q.a * r.y).cwiseMax(1.0);
  r.lambda = VectorXd::Ones(m);
  const double scale_d = 1.0 + q.g.lpNorm<Eigen::Infinity>();
  const double scale_p = 1.0 + q.b.lpNorm<Eigen::Infinity>();

  Eigen::LLT<MatrixXd> llt;
  for (int it = 0; it < max_iterations; ++it) {
    r.iterations = it + 1;
    const VectorXd rd = q.h * r.y + q.g + q.a.transpose() * r.lambda;
    const VectorXd rp = q.a * r.y + r.s - q.b;
    const double mu = r.s.dot(r.lambda) / static_cast<double>(m);
    if (rd.lpNorm<Eigen::Infinity>() <= 1e-10 * scale_d && rp.lpNorm<Eigen::Infinity>() <= 1e-10 * scale_p &&
        mu <= 1e-12) {
      r.converged = true;
      r.iterations = it;
      break;
    }
    const VectorXd d = r.lambda.cwiseQuotient(r.s);
    MatrixXd k = q.h;
    k.noalias() += q.a.transpose() * d.asDiagonal() * q.a;
    llt.compute(k);
    if (llt.info() != Eigen::Success) {
      k.diagonal().array() += 1e-12 * (1.0 + k.diagonal().cwiseAbs().maxCoeff());
      llt.compute(k);
      if (llt.info() != Eigen::Success) break;
    }
    auto solve_direction = [&](const VectorXd& rc, VectorXd& dy, VectorXd& ds, VectorXd& dl) {
      const VectorXd t = (-rc + r.lambda.cwiseProduct(rp)).cwiseQuotient(r.s);
      dy = llt.solve(-rd - q.a.transpose() * t);
      ds = -rp - q.a * dy;
      dl = (-rc - r.lambda.cwiseProduct(ds)).cwiseQuotient(r.s);
    };
    VectorXd dy, ds, dl;
    VectorXd rc = r.s.cwiseProduct(r.lambda);
    solve_direction(rc, dy, ds, dl);
    const double ap = step_to_boundary(r.s, ds);
    const double ad = step_to_boundary(r.lambda, dl);
    const double alpha_aff = std::min(ap, ad);
    const double mu_aff =
        (r.s + alpha_aff * ds).dot(r.lambda + alpha_aff * dl) / static_cast<double>(m);
    const double sigma = std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3);
    rc += ds.cwiseProduct(dl);
    rc.array() -= sigma * mu;
    solve_direction(rc, dy, ds, dl);
    const double alpha =
        std::min(1.0, 0.995 * std::min(step_to_boundary(r.s, ds), step_to_boundary(r.lambda, dl)));
    r.y += alpha * dy;
    r.s += alpha * ds;
    r.lambda += alpha * dl;
    if (!r.y.allFinite() || !r.lambda.allFinite()) break;
    if (r.lambda.lpNorm<Eigen::Infinity>() > 1e14 && rp.lpNorm<Eigen::Infinity>() > 1e-6 * scale_p) {
      r.infeasible = true;
      break;
    }
  }
  (void)n;
  return r;
}

// Equality-constrained QP on the working set:
// [H A_W'; A_W 0] [y; lam] = [rhs_top; rhs_bottom].
bool solve_kkt(const MatrixXd& h, const MatrixXd& aw, const VectorXd& top, const VectorXd& bottom,
               VectorXd& x, VectorXd& lam) {
  const Index n = h.rows();
  const Index k = aw.rows();
  MatrixXd kkt = MatrixXd::Zero(n + k, n + k);
  kkt.topLeftCorner(n, n) = h;
  if (k > 0) {
    kkt.topRightCorner(n, k) = aw.transpose();
    kkt.bottomLeftCorner(k, n) = aw;
  }
  VectorXd rhs(n + k);
  rhs.head(n) = top;
  rhs.tail(k) = bottom;
  Eigen::PartialPivLU<MatrixXd> lu(kkt);
  VectorXd sol = lu.solve(rhs);
  // One step of iterative refinement.
  sol += lu.solve(rhs - kkt * sol);
  if (!sol.allFinite()) return false;
  x = sol.head(n);
  lam = sol.tail(k);
  return true;
}

MatrixXd rows_of(const MatrixXd& a, const std::vector<Index>& idx) {
  MatrixXd out(static_cast<Index>(idx.size()), a.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Index>(i)) = a.row(idx[i]);
  return out;
}

VectorXd entries_of(const VectorXd& v, const std::vector<Index>& idx) {
  VectorXd out(static_cast<Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out[static_cast<Index>(i)] = v[idx[i]];
  return out;
}

// Keeps a linearly independent subset of the candidate rows, preferring the
// order given.
std::vector<Index> independent_rows(const MatrixXd& a, const std::vector<Index>& candidates) {
  if (candidates.empty()) return {};
  const MatrixXd at = rows_of(a, candidates).transpose();
  Eigen::ColPivHouseholderQR<MatrixXd> qr(at);
  qr.setThreshold(1e-10);
  std::vector<Index> kept;
  for (Index i = 0; i < qr.rank(); ++i) kept.push_back(candidates[qr.colsPermutation().indices()[i]]);
  std::sort(kept.begin(), kept.end());
  return kept;
}

constexpr double kFeasTol = 1e-11;
constexpr double kDualTol = 1e-10;

ReducedResult active_set(const ReducedQp& q, VectorXd y, std::vector<Index> work, int max_iterations) {
  const Index m = q.a.rows();
  ReducedResult res;
  const double step_tol = 1e-13;
  for (int it = 0; it < max_iterations; ++it) {
    res.iterations = it + 1;
    const MatrixXd aw = rows_of(q.a, work);
    VectorXd p, lam;
    if (!solve_kkt(q.h, aw, -(q.h * y + q.g), VectorXd::Zero(aw.rows()), p, lam)) {
      res.message = "singular working-set system";
      break;
    }
    if (p.lpNorm<Eigen::Infinity>() <= step_tol * (1.0 + y.lpNorm<Eigen::Infinity>())) {
      Index drop = -1;
      double most_negative = -kDualTol;
      for (Index i = 0; i < lam.size(); ++i) {
        if (lam[i] < most_negative) {
          most_negative = lam[i];
          drop = i;
        }
      }
      if (drop < 0) {
        res.y = y;
        res.lambda = VectorXd::Zero(m);
        for (std::size_t i = 0; i < work.size(); ++i) {
          res.lambda[work[i]] = std::max(0.0, lam[static_cast<Index>(i)]);
        }
        res.status = QpStatus::kSolved;
        return res;
      }
      work.erase(work.begin() + drop);
      continue;
    }
    double alpha = 1.0;
    Index blocking = -1;
    for (Index i = 0; i < m; ++i) {
      if (std::find(work.begin(), work.end(), i) != work.end()) continue;
      const double ap = q.a.row(i).dot(p);
      if (ap <= 1e-14 * (1.0 + q.a.row(i).cwiseAbs().maxCoeff() * p.lpNorm<Eigen::Infinity>())) continue;
      const double slack = std::max(0.0, q.b[i] - q.a.row(i).dot(y));
      const double ratio = slack / ap;
      if (ratio < alpha) {
        alpha = ratio;
        blocking = i;
      }
    }
    y += alpha * p;
    if (blocking >= 0) {
      work.push_back(blocking);
      std::sort(work.begin(), work.end());
    }
  }
  res.y = y;
  res.lambda = VectorXd::Zero(m);
  if (res.message.empty()) res.message = "active-set iteration cap reached";
  return res;
}

ReducedResult solve_reduced(const ReducedQp& q, const VectorXd& y0, int max_iterations) {
  const Index n = q.h.rows();
  const Index m = q.a.rows();
  ReducedResult out;
  if (n == 0) {
    out.y = VectorXd::Zero(0);
    out.lambda = VectorXd::Zero(m);
    out.status = (m == 0 || q.b.minCoeff() >= -kFeasTol) ? QpStatus::kSolved : QpStatus::kInfeasible;
    return out;
  }
  if (m == 0) {
    Eigen::LDLT<MatrixXd> ldlt(q.h);
    out.y = ldlt.solve(-q.g);
    out.y += ldlt.solve(-q.g - q.h * out.y);
    out.lambda = VectorXd::Zero(0);
    out.status = out.y.allFinite() ? QpStatus::kSolved : QpStatus::kMaxIterations;
    out.iterations = 1;
    return out;
  }

  const int ipm_cap = std::min(max_iterations, 100);
  IpmResult ipm = interior_point(q, y0, ipm_cap);
  if (ipm.infeasible) {
    out.y = ipm.y;
    out.lambda = VectorXd::Zero(m);
    out.status = QpStatus::kInfeasible;
    out.iterations = ipm.iterations;
    out.message = "inequalities appear infeasible";
    return out;
  }
  const double primal_violation = (q.a * ipm.y - q.b).maxCoeff();
  if (!ipm.converged && primal_violation > 1e-6 * (1.0 + q.b.lpNorm<Eigen::Infinity>())) {
    out.y = ipm.y;
    out.lambda = VectorXd::Zero(m);
    out.status = QpStatus::kInfeasible;
    out.iterations = ipm.iterations;
    out.message = "interior point could not reach a feasible point";
    return out;
  }

  // Guess the optimal working set from strict complementarity.
  std::vector<Index> guess;
  for (Index i = 0; i < m; ++i) {
    if (ipm.lambda[i] > ipm.s[i]) guess.push_back(i);
  }
  std::sort(guess.begin(), guess.end(),
            [&](Index a, Index b) { return ipm.lambda[a] > ipm.lambda[b]; });
  guess = independent_rows(q.a, guess);

  const int remaining = std::max(1, max_iterations - ipm.iterations);
  VectorXd yw, lw;
  const MatrixXd aw = rows_of(q.a, guess);
  if (solve_kkt(q.h, aw, -q.g, entries_of(q.b, guess), yw, lw)) {
    const double viol = (q.a * yw - q.b).maxCoeff();
    if (viol <= kFeasTol * (1.0 + q.b.lpNorm<Eigen::Infinity>())) {
      ReducedResult r = active_set(q, yw, guess, remaining);
      r.iterations += ipm.iterations;
      if (r.status == QpStatus::kSolved) return r;
    }
  }
  // Fall back to the strictly feasible interior iterate with an empty set.
  std::vector<Index> active;
  for (Index i = 0; i < m; ++i) {
    if (q.b[i] - q.a.row(i).dot(ipm.y) <= 0.0) active.push_back(i);
  }
  ReducedResult r = active_set(q, ipm.y, independent_rows(q.a, active), remaining);
  r.iterations += ipm.iterations;
  return r;
}

}  // namespace

QpSolution solve_qp(const QpProblem& p, const std::optional<VectorXd>& warm_start,
                    const QpOptions& options) {
  const Index n = p.num_variables();
  const Index meq = p.num_equalities();
  QpSolution sol;

  // Equality elimination: z = z_p + Z y.
  VectorXd z_p = VectorXd::Zero(n);
  MatrixXd z_basis;
  Eigen::ColPivHouseholderQR<MatrixXd> qr;
  Index rank = 0;
  if (meq > 0) {
    qr.setThreshold(1e-12);
    qr.compute(p.eq_a.transpose());
    rank = qr.rank();
    const VectorXd bp = qr.colsPermutation().transpose() * p.eq_b;
    VectorXd w = qr.matrixR().topLeftCorner(rank, rank).triangularView<Eigen::Upper>().transpose().solve(
        bp.head(rank));
    VectorXd t = VectorXd::Zero(n);
    t.head(rank) = w;
    z_p = qr.householderQ() * t;
    const double eq_res = (p.eq_a * z_p - p.eq_b).lpNorm<Eigen::Infinity>();
    if (eq_res > 1e-9 * (1.0 + p.eq_b.lpNorm<Eigen::Infinity>())) {
      sol.z = z_p;
      sol.lambda_eq = VectorXd::Zero(meq);
      sol.lambda_ineq = VectorXd::Zero(p.num_inequalities());
      sol.status = QpStatus::kInfeasible;
      sol.message = "inconsistent equality constraints";
      sol.kkt_residual = kkt_residuals(p, sol);
      sol.objective = objective_value(p, sol.z);
      return sol;
    }
    z_basis = MatrixXd::Zero(n, n - rank);
    z_basis.bottomRows(n - rank).setIdentity();
    z_basis.applyOnTheLeft(qr.householderQ());
  }

  ReducedQp q;
  if (meq > 0) {
    const MatrixXd hz = p.hessian * z_basis;
    q.h = z_basis.transpose() * hz;
    q.g = z_basis.transpose() * (p.hessian * z_p + p.gradient);
    q.a = p.ineq_a * z_basis;
  } else {
    q.h = p.hessian;
    q.g = p.gradient;
    q.a = p.ineq_a;
  }
  q.h = 0.5 * (q.h + q.h.transpose());
  q.h.diagonal().array() += options.jitter;
  q.b = p.ineq_b - p.ineq_a * z_p;

  VectorXd y0 = VectorXd::Zero(q.h.rows());
  if (warm_start && warm_start->size() == n) {
    y0 = meq > 0 ? VectorXd(z_basis.transpose() * (*warm_start - z_p)) : *warm_start;
  }

  const ReducedResult red = solve_reduced(q, y0, options.max_iterations);
  sol.z = meq > 0 ? VectorXd(z_p + z_basis * red.y) : red.y;
  sol.lambda_ineq = red.lambda;
  sol.iterations = red.iterations;
  sol.message = red.message;

  if (meq > 0) {
    VectorXd rhs = -(p.hessian * sol.z + p.gradient);
    if (p.num_inequalities() > 0) rhs -= p.ineq_a.transpose() * sol.lambda_ineq;
    const VectorXd c = qr.householderQ().transpose() * rhs;
    VectorXd v = qr.matrixR().topLeftCorner(rank, rank).triangularView<Eigen::Upper>().solve(c.head(rank));
    VectorXd lp = VectorXd::Zero(meq);
    lp.head(rank) = v;
    sol.lambda_eq = qr.colsPermutation() * lp;
  } else {
    sol.lambda_eq = VectorXd::Zero(0);
  }

  sol.kkt_residual = kkt_residuals(p, sol);
  sol.objective = objective_value(p, sol.z);
  if (red.status == QpStatus::kInfeasible) {
    sol.status = QpStatus::kInfeasible;
  } else if (red.status == QpStatus::kSolved && sol.kkt_residual <= options.tolerance) {
    sol.status = QpStatus::kSolved;
  } else {
    sol.status = QpStatus::kMaxIterations;
    if (sol.message.empty()) sol.message = "KKT residual above tolerance";
  }
  return sol;
}

}  // namespace vshp
