#pragma once

// Dense NLP solver for the smooth nonconvex regional subproblems:
//   min f(x)  s.t.  c_E(x) = 0,  c_I(x) <= 0,  lo <= x <= hi.
// Primal-dual interior point with slack variables on the inequalities and
// a log barrier with monotone mu reduction. A quadratic-penalty damped
// Newton fallback handles the rare case where the regularized KKT system
// cannot produce a usable direction.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace gridmm {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct NlpProblem {
  int n = 0;
  VectorXd lo, hi;  // entries may be +-inf
  std::function<double(const VectorXd&)> objective;
  std::function<VectorXd(const VectorXd&)> gradient;

  int num_eq = 0;
  std::function<VectorXd(const VectorXd&)> eq;
  std::function<MatrixXd(const VectorXd&)> eq_jac;

  int num_ineq = 0;  // c(x) <= 0
  std::function<VectorXd(const VectorXd&)> ineq;
  std::function<MatrixXd(const VectorXd&)> ineq_jac;

  // Hessian of the Lagrangian sigma*f + y'c_E + w'c_I. Optional; the
  // solver falls back to central differences of the Lagrangian gradient.
  std::function<MatrixXd(const VectorXd&, double, const VectorXd&, const VectorXd&)>
      lag_hessian;

  VectorXd x0;
};

enum class SolveStatus { converged, iteration_limit, failure };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::iteration_limit: return "iteration-limit";
    default: return "failure";
  }
}

struct NlpSolution {
  VectorXd x;
  double objective = 0.0;
  double max_violation = 0.0;
  double stationarity = 0.0;
  SolveStatus status = SolveStatus::failure;
  int iterations = 0;
  VectorXd y_eq;     // equality multipliers
  VectorXd w_ineq;   // inequality multipliers (>= 0)
  VectorXd z_lo, z_hi;
  std::vector<VectorXd> iterates;                      // filled when requested
  std::vector<std::pair<double, double>> merit_steps;  // (before, after) per accepted step
};

struct SolverOptions {
  double feas_tol = 1e-6;
  double opt_tol = 1e-6;
  int max_iter = 200;
  double mu0 = 1e-1;
  double tau_min = 0.99;   // fraction-to-boundary
  bool record_iterates = false;
  bool allow_penalty_fallback = true;
  bool force_penalty_fallback = false;  // diagnostic path
};

struct KktReport {
  double stationarity = 0.0;
  double max_violation = 0.0;
  double complementarity = 0.0;
};

namespace nlpdetail {

constexpr double kInf = std::numeric_limits<double>::infinity();

inline bool finite(double v) { return std::isfinite(v); }

inline bool all_finite(const VectorXd& v) { return v.allFinite(); }

struct Eval {
  double f = 0.0;
  VectorXd g;
  VectorXd cE, cI;
  MatrixXd JE, JI;
  bool ok = false;
};

inline Eval evaluate(const NlpProblem& p, const VectorXd& x) {
  Eval ev;
  ev.f = p.objective(x);
  ev.g = p.gradient(x);
  ev.cE = p.num_eq > 0 ? p.eq(x) : VectorXd(0);
  ev.JE = p.num_eq > 0 ? p.eq_jac(x) : MatrixXd(0, p.n);
  ev.cI = p.num_ineq > 0 ? p.ineq(x) : VectorXd(0);
  ev.JI = p.num_ineq > 0 ? p.ineq_jac(x) : MatrixXd(0, p.n);
  ev.ok = finite(ev.f) && all_finite(ev.g) && all_finite(ev.cE) &&
          all_finite(ev.cI) && ev.JE.allFinite() && ev.JI.allFinite();
  return ev;
}

inline MatrixXd fd_lag_hessian(const NlpProblem& p, const VectorXd& x,
                               const VectorXd& y, const VectorXd& w) {
  auto grad_lag = [&](const VectorXd& xx) -> VectorXd {
    VectorXd g = p.gradient(xx);
    if (p.num_eq > 0) g += p.eq_jac(xx).transpose() * y;
    if (p.num_ineq > 0) g += p.ineq_jac(xx).transpose() * w;
    return g;
  };
  const int n = p.n;
  MatrixXd H(n, n);
  VectorXd xp = x, xm = x;
  for (int j = 0; j < n; ++j) {
    double h = 1e-6 * (1.0 + std::abs(x[j]));
    xp[j] = x[j] + h;
    xm[j] = x[j] - h;
    H.col(j) = (grad_lag(xp) - grad_lag(xm)) / (2.0 * h);
    xp[j] = x[j];
    xm[j] = x[j];
  }
  return 0.5 * (H + H.transpose());
}

inline double true_violation(const Eval& ev) {
  double v = 0.0;
  for (int i = 0; i < ev.cE.size(); ++i) v = std::max(v, std::abs(ev.cE[i]));
  for (int i = 0; i < ev.cI.size(); ++i) v = std::max(v, ev.cI[i]);
  return v;
}

// Quadratic-penalty damped-Newton fallback. Box handled by projection.
inline NlpSolution penalty_fallback(const NlpProblem& p, const SolverOptions& opt,
                                    VectorXd x) {
  const int n = p.n;
  auto project = [&](VectorXd v) {
    for (int j = 0; j < n; ++j) v[j] = std::clamp(v[j], p.lo[j], p.hi[j]);
    return v;
  };
  x = project(x);
  double sigma = 10.0;
  NlpSolution sol;
  int total_it = 0;
  for (int outer = 0; outer < 12 && total_it < 40 * opt.max_iter; ++outer) {
    for (int inner = 0; inner < 60; ++inner, ++total_it) {
      Eval ev = evaluate(p, x);
      if (!ev.ok) { sol.status = SolveStatus::failure; sol.x = x; return sol; }
      VectorXd act = ev.cI.cwiseMax(0.0);
      VectorXd grad = ev.g;
      if (p.num_eq > 0) grad += sigma * ev.JE.transpose() * ev.cE;
      if (p.num_ineq > 0) grad += sigma * ev.JI.transpose() * act;
      // projected gradient as the stationarity measure on the box
      VectorXd pg = x - project(x - grad);
      if (pg.lpNorm<Eigen::Infinity>() < opt.opt_tol * (1.0 + sigma)) break;

      MatrixXd H = p.lag_hessian
                       ? p.lag_hessian(x, 1.0, sigma * ev.cE, sigma * act)
                       : fd_lag_hessian(p, x, sigma * ev.cE, sigma * act);
      if (p.num_eq > 0) H += sigma * ev.JE.transpose() * ev.JE;
      if (p.num_ineq > 0)
        for (int i = 0; i < p.num_ineq; ++i)
          if (ev.cI[i] > 0.0)
            H += sigma * ev.JI.row(i).transpose() * ev.JI.row(i);
      double damp = 1e-6;
      VectorXd step;
      for (int attempt = 0; attempt < 20; ++attempt) {
        MatrixXd Hd = H + damp * MatrixXd::Identity(n, n);
        Eigen::LDLT<MatrixXd> ldlt(Hd);
        step = ldlt.solve(-grad);
        if (ldlt.info() == Eigen::Success && step.allFinite() &&
            grad.dot(step) < 0.0)
          break;
        damp *= 10.0;
      }
      double phi0 = ev.f + 0.5 * sigma * (ev.cE.squaredNorm() + act.squaredNorm());
      double alpha = 1.0;
      bool accepted = false;
      for (int ls = 0; ls < 40; ++ls, alpha *= 0.5) {
        VectorXd xt = project(x + alpha * step);
        Eval et = evaluate(p, xt);
        if (!et.ok) continue;
        double phit = et.f + 0.5 * sigma *
                                 (et.cE.squaredNorm() +
                                  et.cI.cwiseMax(0.0).squaredNorm());
        if (phit <= phi0 - 1e-8 * alpha * std::abs(grad.dot(step))) {
          x = xt;
          accepted = true;
          break;
        }
      }
      if (!accepted) break;
    }
    Eval ev = evaluate(p, x);
    if (true_violation(ev) <= opt.feas_tol) break;
    sigma *= 10.0;
  }
  Eval ev = evaluate(p, x);
  sol.x = x;
  sol.objective = ev.f;
  sol.max_violation = true_violation(ev);
  sol.iterations = total_it;
  sol.y_eq = sigma * ev.cE;
  sol.w_ineq = sigma * ev.cI.cwiseMax(0.0);
  sol.z_lo = VectorXd::Zero(n);
  sol.z_hi = VectorXd::Zero(n);
  VectorXd grad = ev.g;
  if (p.num_eq > 0) grad += ev.JE.transpose() * sol.y_eq;
  if (p.num_ineq > 0) grad += ev.JI.transpose() * sol.w_ineq;
  VectorXd pg = x - project(x - grad);
  sol.stationarity = pg.lpNorm<Eigen::Infinity>();
  sol.status = (sol.max_violation <= opt.feas_tol &&
                sol.stationarity <= 1e2 * opt.opt_tol)
                   ? SolveStatus::converged
                   : SolveStatus::iteration_limit;
  return sol;
}

}  // namespace nlpdetail

inline NlpSolution solve(const NlpProblem& p, const SolverOptions& opt = {}) {
  using namespace nlpdetail;
  const int n = p.n;
  const int mE = p.num_eq;
  const int mI = p.num_ineq;

  if (opt.force_penalty_fallback)
    return penalty_fallback(p, opt, p.x0);

  // classify bounds
  std::vector<bool> has_lo(static_cast<std::size_t>(n)), has_hi(static_cast<std::size_t>(n)),
      fixed(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    has_lo[static_cast<std::size_t>(j)] = std::isfinite(p.lo[j]);
    has_hi[static_cast<std::size_t>(j)] = std::isfinite(p.hi[j]);
    fixed[static_cast<std::size_t>(j)] =
        has_lo[static_cast<std::size_t>(j)] && has_hi[static_cast<std::size_t>(j)] &&
        p.hi[j] - p.lo[j] < 1e-12;
  }

  // push the start point into the box interior
  VectorXd x = p.x0;
  for (int j = 0; j < n; ++j) {
    if (fixed[static_cast<std::size_t>(j)]) { x[j] = p.lo[j]; continue; }
    double width = (has_lo[static_cast<std::size_t>(j)] && has_hi[static_cast<std::size_t>(j)])
                       ? p.hi[j] - p.lo[j]
                       : 1.0;
    double push = std::min(1e-2 * width, 1e-2);
    if (has_lo[static_cast<std::size_t>(j)]) x[j] = std::max(x[j], p.lo[j] + push);
    if (has_hi[static_cast<std::size_t>(j)]) x[j] = std::min(x[j], p.hi[j] - push);
  }

  NlpSolution sol;
  Eval ev = evaluate(p, x);
  if (!ev.ok) {
    sol.x = x;
    sol.status = SolveStatus::failure;
    return sol;
  }

  double mu = opt.mu0;
  VectorXd s(mI), w(mI);
  for (int i = 0; i < mI; ++i) {
    s[i] = std::max(1e-4, -ev.cI[i]);
    w[i] = std::min(1e4, mu / s[i]);
  }
  VectorXd y = VectorXd::Zero(mE);
  VectorXd zL = VectorXd::Zero(n), zU = VectorXd::Zero(n);
  for (int j = 0; j < n; ++j) {
    if (fixed[static_cast<std::size_t>(j)]) continue;
    if (has_lo[static_cast<std::size_t>(j)]) zL[j] = std::min(1e4, mu / (x[j] - p.lo[j]));
    if (has_hi[static_cast<std::size_t>(j)]) zU[j] = std::min(1e4, mu / (p.hi[j] - x[j]));
  }

  const double mu_min = opt.opt_tol / 100.0;
  double nu = 1.0;  // l1 penalty weight of the merit function
  int it = 0;
  int passes = 0;
  const int max_passes = opt.max_iter + 80;

  auto dual_scale = [&]() {
    double sum = y.lpNorm<1>() + w.lpNorm<1>() + zL.lpNorm<1>() + zU.lpNorm<1>();
    int cnt = std::max(1, mE + mI + 2 * n);
    return std::max(100.0, sum / cnt) / 100.0;
  };

  auto barrier_value = [&](const VectorXd& xx, const VectorXd& ss, double ff) {
    double val = ff;
    for (int i = 0; i < mI; ++i) {
      if (ss[i] <= 0.0) return kInf;
      val -= mu * std::log(ss[i]);
    }
    for (int j = 0; j < n; ++j) {
      if (fixed[static_cast<std::size_t>(j)]) continue;
      if (has_lo[static_cast<std::size_t>(j)]) {
        if (xx[j] - p.lo[j] <= 0.0) return kInf;
        val -= mu * std::log(xx[j] - p.lo[j]);
      }
      if (has_hi[static_cast<std::size_t>(j)]) {
        if (p.hi[j] - xx[j] <= 0.0) return kInf;
        val -= mu * std::log(p.hi[j] - xx[j]);
      }
    }
    return val;
  };

  while (passes++ < max_passes && it < opt.max_iter) {
    // KKT error for the current barrier problem and for mu = 0
    VectorXd r_stat = ev.g;
    if (mE > 0) r_stat += ev.JE.transpose() * y;
    if (mI > 0) r_stat += ev.JI.transpose() * w;
    r_stat -= zL;
    r_stat += zU;
    double stat_inf = 0.0;
    for (int j = 0; j < n; ++j)
      if (!fixed[static_cast<std::size_t>(j)])
        stat_inf = std::max(stat_inf, std::abs(r_stat[j]));

    double comp0 = 0.0, comp_mu = 0.0;
    for (int i = 0; i < mI; ++i) {
      comp0 = std::max(comp0, std::abs(s[i] * w[i]));
      comp_mu = std::max(comp_mu, std::abs(s[i] * w[i] - mu));
    }
    for (int j = 0; j < n; ++j) {
      if (fixed[static_cast<std::size_t>(j)]) continue;
      if (has_lo[static_cast<std::size_t>(j)]) {
        comp0 = std::max(comp0, std::abs((x[j] - p.lo[j]) * zL[j]));
        comp_mu = std::max(comp_mu, std::abs((x[j] - p.lo[j]) * zL[j] - mu));
      }
      if (has_hi[static_cast<std::size_t>(j)]) {
        comp0 = std::max(comp0, std::abs((p.hi[j] - x[j]) * zU[j]));
        comp_mu = std::max(comp_mu, std::abs((p.hi[j] - x[j]) * zU[j] - mu));
      }
    }
    double viol = true_violation(ev);
    double slack_res = 0.0;
    for (int i = 0; i < mI; ++i)
      slack_res = std::max(slack_res, std::abs(ev.cI[i] + s[i]));
    double sd = dual_scale();

    if (stat_inf / sd <= opt.opt_tol && viol <= opt.feas_tol &&
        comp0 / sd <= 10.0 * opt.opt_tol) {
      sol.status = SolveStatus::converged;
      break;
    }
    double e_mu = std::max({stat_inf / sd, viol, slack_res, comp_mu / sd});
    if (e_mu <= 10.0 * mu && mu > mu_min) {
      mu = std::max(mu_min, std::min(0.2 * mu, std::pow(mu, 1.5)));
      continue;
    }

    // assemble the regularized KKT system
    MatrixXd W = p.lag_hessian ? p.lag_hessian(x, 1.0, y, w)
                               : fd_lag_hessian(p, x, y, w);
    if (!W.allFinite()) { sol.status = SolveStatus::failure; break; }
    VectorXd sigL = VectorXd::Zero(n), sigU = VectorXd::Zero(n);
    for (int j = 0; j < n; ++j) {
      if (fixed[static_cast<std::size_t>(j)]) continue;
      if (has_lo[static_cast<std::size_t>(j)]) sigL[j] = zL[j] / (x[j] - p.lo[j]);
      if (has_hi[static_cast<std::size_t>(j)]) sigU[j] = zU[j] / (p.hi[j] - x[j]);
    }

    const int dim = n + mE + mI;
    VectorXd rhs(dim);
    VectorXd rx = -ev.g;
    if (mE > 0) rx -= ev.JE.transpose() * y;
    if (mI > 0) rx -= ev.JI.transpose() * w;
    for (int j = 0; j < n; ++j) {
      if (fixed[static_cast<std::size_t>(j)]) continue;
      if (has_lo[static_cast<std::size_t>(j)]) rx[j] += mu / (x[j] - p.lo[j]);
      if (has_hi[static_cast<std::size_t>(j)]) rx[j] -= mu / (p.hi[j] - x[j]);
    }
    rhs.head(n) = rx;
    if (mE > 0) rhs.segment(n, mE) = -ev.cE;
    for (int i = 0; i < mI; ++i) rhs[n + mE + i] = -ev.cI[i] - mu / w[i];

    double delta_w = 0.0, delta_c = 0.0;
    VectorXd step(dim);
    bool have_direction = false;
    double dphi = 0.0;
    VectorXd dx, ds, dy, dw;
    for (int attempt = 0; attempt < 16; ++attempt) {
      MatrixXd K = MatrixXd::Zero(dim, dim);
      K.topLeftCorner(n, n) = W;
      for (int j = 0; j < n; ++j) {
        if (fixed[static_cast<std::size_t>(j)]) continue;
        K(j, j) += sigL[j] + sigU[j] + delta_w;
      }
      if (mE > 0) {
        K.block(n, 0, mE, n) = ev.JE;
        K.block(0, n, n, mE) = ev.JE.transpose();
        for (int i = 0; i < mE; ++i) K(n + i, n + i) = -delta_c;
      }
      if (mI > 0) {
        K.block(n + mE, 0, mI, n) = ev.JI;
        K.block(0, n + mE, n, mI) = ev.JI.transpose();
        for (int i = 0; i < mI; ++i) K(n + mE + i, n + mE + i) = -s[i] / w[i];
      }
      for (int j = 0; j < n; ++j)
        if (fixed[static_cast<std::size_t>(j)]) {
          K.row(j).setZero();
          K.col(j).setZero();
          K(j, j) = 1.0;
          rhs[j] = 0.0;
        }

      Eigen::PartialPivLU<MatrixXd> lu(K);
      step = lu.solve(rhs);
      bool good = step.allFinite() &&
                  (K * step - rhs).lpNorm<Eigen::Infinity>() <=
                      1e-6 * std::max(1.0, rhs.lpNorm<Eigen::Infinity>());
      if (good) {
        dx = step.head(n);
        dy = mE > 0 ? VectorXd(step.segment(n, mE)) : VectorXd(0);
        dw = mI > 0 ? VectorXd(step.tail(mI)) : VectorXd(0);
        ds = VectorXd(mI);
        for (int i = 0; i < mI; ++i)
          ds[i] = mu / w[i] - s[i] - (s[i] / w[i]) * dw[i];
        // barrier directional derivative
        dphi = ev.g.dot(dx);
        for (int i = 0; i < mI; ++i) dphi -= mu * ds[i] / s[i];
        for (int j = 0; j < n; ++j) {
          if (fixed[static_cast<std::size_t>(j)]) continue;
          if (has_lo[static_cast<std::size_t>(j)]) dphi -= mu * dx[j] / (x[j] - p.lo[j]);
          if (has_hi[static_cast<std::size_t>(j)]) dphi += mu * dx[j] / (p.hi[j] - x[j]);
        }
        double theta = ev.cE.lpNorm<1>();
        for (int i = 0; i < mI; ++i) theta += std::abs(ev.cI[i] + s[i]);
        if (theta > 1e-14) {
          if (dphi > 0.5 * nu * theta) nu = 2.0 * dphi / theta + 1.0;
          have_direction = true;
          break;
        }
        if (dphi < -1e-14 * std::max(1.0, std::abs(ev.f))) {
          have_direction = true;
          break;
        }
      }
      delta_w = delta_w == 0.0 ? 1e-8 : delta_w * 10.0;
      delta_c = 1e-10;
      if (delta_w > 1e10) break;
    }
    if (!have_direction) {
      if (opt.allow_penalty_fallback) return penalty_fallback(p, opt, x);
      sol.status = SolveStatus::failure;
      break;
    }

    // fraction-to-boundary step limits
    double tau = std::max(opt.tau_min, 1.0 - mu);
    double a_pri = 1.0, a_dual = 1.0;
    for (int i = 0; i < mI; ++i) {
      if (ds[i] < 0.0) a_pri = std::min(a_pri, -tau * s[i] / ds[i]);
      if (dw[i] < 0.0) a_dual = std::min(a_dual, -tau * w[i] / dw[i]);
    }
    VectorXd dzL = VectorXd::Zero(n), dzU = VectorXd::Zero(n);
    for (int j = 0; j < n; ++j) {
      if (fixed[static_cast<std::size_t>(j)]) continue;
      if (has_lo[static_cast<std::size_t>(j)]) {
        dzL[j] = mu / (x[j] - p.lo[j]) - zL[j] - sigL[j] * dx[j];
        if (dx[j] < 0.0) a_pri = std::min(a_pri, -tau * (x[j] - p.lo[j]) / dx[j]);
        if (dzL[j] < 0.0) a_dual = std::min(a_dual, -tau * zL[j] / dzL[j]);
      }
      if (has_hi[static_cast<std::size_t>(j)]) {
        dzU[j] = mu / (p.hi[j] - x[j]) - zU[j] + sigU[j] * dx[j];
        if (dx[j] > 0.0) a_pri = std::min(a_pri, tau * (p.hi[j] - x[j]) / dx[j]);
        if (dzU[j] < 0.0) a_dual = std::min(a_dual, -tau * zU[j] / dzU[j]);
      }
    }

    // Armijo backtracking on the l1-penalized barrier merit
    double theta0 = ev.cE.lpNorm<1>();
    for (int i = 0; i < mI; ++i) theta0 += std::abs(ev.cI[i] + s[i]);
    double merit0 = barrier_value(x, s, ev.f) + nu * theta0;
    double dmerit = dphi - nu * theta0;
    double alpha = a_pri;
    bool accepted = false;
    Eval evt;
    VectorXd xt, st;
    for (int ls = 0; ls < 48; ++ls, alpha *= 0.5) {
      xt = x + alpha * dx;
      st = s + alpha * ds;
      evt = evaluate(p, xt);
      if (!evt.ok) continue;
      double theta_t = evt.cE.lpNorm<1>();
      for (int i = 0; i < mI; ++i) theta_t += std::abs(evt.cI[i] + st[i]);
      double merit_t = barrier_value(xt, st, evt.f) + nu * theta_t;
      if (!finite(merit_t)) continue;
      if (merit_t <= merit0 + 1e-4 * alpha * dmerit) {
        accepted = true;
        if (opt.record_iterates) sol.merit_steps.push_back({merit0, merit_t});
        break;
      }
    }
    if (!accepted) {
      if (opt.allow_penalty_fallback) return penalty_fallback(p, opt, x);
      sol.status = SolveStatus::failure;
      break;
    }

    x = xt;
    s = st;
    ev = evt;
    if (mE > 0) y += a_dual * dy;
    for (int i = 0; i < mI; ++i) w[i] = std::max(1e-12, w[i] + a_dual * dw[i]);
    for (int j = 0; j < n; ++j) {
      if (fixed[static_cast<std::size_t>(j)]) continue;
      if (has_lo[static_cast<std::size_t>(j)]) {
        zL[j] = std::max(1e-12, zL[j] + a_dual * dzL[j]);
        // keep bound duals in a band around the barrier estimate
        double low = mu / (1e10 * (x[j] - p.lo[j]));
        double high = 1e10 * mu / (x[j] - p.lo[j]);
        zL[j] = std::clamp(zL[j], low, high);
      }
      if (has_hi[static_cast<std::size_t>(j)]) {
        zU[j] = std::max(1e-12, zU[j] + a_dual * dzU[j]);
        double low = mu / (1e10 * (p.hi[j] - x[j]));
        double high = 1e10 * mu / (p.hi[j] - x[j]);
        zU[j] = std::clamp(zU[j], low, high);
      }
    }
    ++it;
    if (opt.record_iterates) sol.iterates.push_back(x);
  }

  if (sol.status != SolveStatus::converged && sol.status != SolveStatus::failure)
    sol.status = SolveStatus::iteration_limit;
  if (sol.status == SolveStatus::iteration_limit && it >= opt.max_iter &&
      opt.allow_penalty_fallback) {
    NlpSolution fb = penalty_fallback(p, opt, x);
    if (fb.status == SolveStatus::converged) {
      fb.iterations += it;
      return fb;
    }
  }

  sol.x = x;
  sol.objective = ev.f;
  sol.max_violation = true_violation(ev);
  sol.iterations = it;
  sol.y_eq = y;
  sol.w_ineq = w;
  sol.z_lo = zL;
  sol.z_hi = zU;
  {
    VectorXd r = ev.g;
    if (mE > 0) r += ev.JE.transpose() * y;
    if (mI > 0) r += ev.JI.transpose() * w;
    r -= zL;
    r += zU;
    double stat = 0.0;
    for (int j = 0; j < n; ++j)
      if (!fixed[static_cast<std::size_t>(j)]) stat = std::max(stat, std::abs(r[j]));
    sol.stationarity = stat / dual_scale();
  }
  return sol;
}

// KKT measures at an arbitrary point. Multipliers are estimated by least
// squares over the active constraint set.
inline KktReport check_kkt(const NlpProblem& p, const VectorXd& x, double tol) {
  using namespace nlpdetail;
  KktReport rep;
  Eval ev = evaluate(p, x);
  rep.max_violation = true_violation(ev);
  for (int j = 0; j < p.n; ++j) {
    if (std::isfinite(p.lo[j])) rep.max_violation = std::max(rep.max_violation, p.lo[j] - x[j]);
    if (std::isfinite(p.hi[j])) rep.max_violation = std::max(rep.max_violation, x[j] - p.hi[j]);
  }

  // columns: equality rows, then active inequality rows and active bounds
  std::vector<VectorXd> cols;
  std::vector<int> kind;     // 0 eq (free sign), 1 ineq/bound (nonnegative)
  std::vector<double> cval;  // constraint value, for the complementarity gap
  for (int i = 0; i < p.num_eq; ++i) {
    cols.push_back(ev.JE.row(i).transpose());
    kind.push_back(0);
    cval.push_back(0.0);
  }
  double act_tol = std::max(tol, 1e-8);
  for (int i = 0; i < p.num_ineq; ++i)
    if (ev.cI[i] > -act_tol * (1.0 + std::abs(ev.cI[i]))) {
      cols.push_back(ev.JI.row(i).transpose());
      kind.push_back(1);
      cval.push_back(ev.cI[i]);
    }
  for (int j = 0; j < p.n; ++j) {
    if (std::isfinite(p.lo[j]) && x[j] - p.lo[j] < act_tol) {
      VectorXd e = VectorXd::Zero(p.n);
      e[j] = -1.0;
      cols.push_back(e);
      kind.push_back(1);
      cval.push_back(p.lo[j] - x[j]);
    }
    if (std::isfinite(p.hi[j]) && p.hi[j] - x[j] < act_tol) {
      VectorXd e = VectorXd::Zero(p.n);
      e[j] = 1.0;
      cols.push_back(e);
      kind.push_back(1);
      cval.push_back(x[j] - p.hi[j]);
    }
  }

  VectorXd resid = ev.g;
  double comp = 0.0;
  if (!cols.empty()) {
    MatrixXd A(p.n, static_cast<int>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) A.col(static_cast<int>(c)) = cols[c];
    VectorXd m = A.colPivHouseholderQr().solve(-ev.g);
    for (std::size_t c = 0; c < cols.size(); ++c)
      if (kind[c] == 1 && m[static_cast<int>(c)] < 0.0) m[static_cast<int>(c)] = 0.0;
    resid = ev.g + A * m;
    for (std::size_t c = 0; c < cols.size(); ++c)
      if (kind[c] == 1)
        comp = std::max(comp, std::abs(m[static_cast<int>(c)] * cval[c]));
  }
  rep.stationarity = resid.lpNorm<Eigen::Infinity>();
  rep.complementarity = comp;
  return rep;
}

}  // namespace gridmm
