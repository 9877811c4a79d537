#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "nlkpp/linear_evolution.hpp"

namespace nlkpp {

struct EigenOptions {
  double tol = 1e-10;     // relative change of the sup-norm growth factor
  int max_iter = 20000;
  int gap_iters = 20;
  bool want_gap = true;
  bool want_residual = true;
};

/// Principal spectrum point data: lambda0, positive eigenfunction phi with
/// sup norm 1, defect of the eigenrelation, and a deflation-based estimate of
/// |lambda_2|/|lambda_1| for the monodromy map.
struct EigenResult {
  double lambda0 = 0.0;
  double growth = 0.0;  // spectral radius of the period map, e^{lambda0 T}
  PeriodicField phi;
  double residual = 0.0;
  double gap_estimate = 0.0;
  int iterations = 0;
};

struct EigenNonConvergence : NumericalError {
  EigenNonConvergence(double q_prev, double q_last, int iters)
      : NumericalError("power iteration did not converge in " +
                       std::to_string(iters) + " iterations; last Rayleigh quotients " +
                       std::to_string(q_prev) + ", " + std::to_string(q_last) +
                       " (near-degenerate spectral gap?)"),
        q1(q_prev), q2(q_last) {}
  double q1, q2;
};

/// Defect sup |-d_t phi + C_mu phi - phi + a phi - lambda phi| with the time
/// derivative by 4th-order central periodic differences.
inline double eigen_residual(const EigenResult& res, const Kernel& kernel,
                             const TiltedDirection& td, const PeriodicField& a) {
  const PeriodicCell& cell = a.cell();
  const CirculantWeights C = periodize(kernel, td, cell.p, cell.n_x);
  const double dt = cell.dt();
  std::vector<double> conv(cell.n_x), ubuf;
  double worst = 0.0;
  for (int k = 0; k < cell.n_t; ++k) {
    C.apply(res.phi.row(k), conv.data(), ubuf);
    const double* pk = res.phi.row(k);
    const double* ak = a.row(k);
    const double* m2 = res.phi.row(k - 2);
    const double* m1 = res.phi.row(k - 1);
    const double* p1 = res.phi.row(k + 1);
    const double* p2 = res.phi.row(k + 2);
    for (int i = 0; i < cell.n_x; ++i) {
      const double dphi = (m2[i] - 8.0 * m1[i] + 8.0 * p1[i] - p2[i]) / (12.0 * dt);
      const double r = -dphi + conv[i] - pk[i] + ak[i] * pk[i] - res.lambda0 * pk[i];
      worst = std::max(worst, std::abs(r));
    }
  }
  return worst;
}

/// Power iteration on the period map, started from the constant field 1
/// (strictly positive, hence not orthogonal to the principal direction).
/// Growth factors are accumulated in log form so strong tilts stay in range.
inline EigenResult principal_eigen(const Kernel& kernel, const TiltedDirection& td,
                                   const PeriodicField& a,
                                   const EigenOptions& opts = {}) {
  const PeriodicCell& cell = a.cell();
  LinearOperatorBundle bundle(periodize(kernel, td, cell.p, cell.n_x), a);
  StepWorkspace ws;

  std::vector<double> v(cell.n_x, 1.0);
  double logr = 0.0, logr_prev = 0.0;
  int hits = 0, iter = 0;
  for (iter = 1; iter <= opts.max_iter; ++iter) {
    logr_prev = logr;
    logr = monodromy_apply_lognorm(v, bundle, ws);
    if (iter > 2 &&
        std::abs(logr - logr_prev) <= opts.tol * std::max(1.0, std::abs(logr))) {
      if (++hits >= 2) break;
    } else {
      hits = 0;
    }
  }
  if (iter > opts.max_iter)
    throw EigenNonConvergence(std::exp(logr_prev), std::exp(logr), opts.max_iter);

  EigenResult res;
  res.growth = std::exp(logr);
  res.lambda0 = logr / cell.T;
  res.iterations = iter;

  // phi(t_k) = e^{-lambda0 t_k} u(t_k) over one final period sweep, with the
  // exponent tracked in log form
  res.phi = PeriodicField(cell);
  {
    std::vector<double> u = v;
    double acc = 0.0;
    for (int k = 0; k < cell.n_t; ++k) {
      const double damp = std::exp(acc - res.lambda0 * cell.t(k));
      double* row = res.phi.row(k);
      for (int i = 0; i < cell.n_x; ++i) row[i] = damp * u[i];
      step_linear(u, k, bundle, ws);
      const double s = sup_norm(u);
      if (!(s > 0.0)) throw NumericalError("eigenfunction collapsed");
      acc += std::log(s);
      for (double& x : u) x /= s;
    }
    const double s = res.phi.sup();
    if (!(s > 0.0)) throw NumericalError("eigenfunction collapsed");
    for (double& x : res.phi.data()) x /= s;
  }

  if (opts.want_gap) {
    // one step of deflation: project out the converged direction and watch the
    // remainder's growth; a diagnostic, not a certified second eigenvalue
    std::vector<double> y(cell.n_x);
    for (int i = 0; i < cell.n_x; ++i) {
      const double th = 2.0 * std::numbers::pi * i / cell.n_x;
      y[i] = std::cos(th) + 0.5 * std::sin(2.0 * th);
    }
    auto project = [&](std::vector<double>& z) {
      double num = 0.0, den = 0.0;
      for (int i = 0; i < cell.n_x; ++i) {
        num += z[i] * v[i];
        den += v[i] * v[i];
      }
      const double c = num / den;
      for (int i = 0; i < cell.n_x; ++i) z[i] -= c * v[i];
    };
    project(y);
    double ratio_acc = 0.0;
    int ratio_cnt = 0;
    double yn = sup_norm(y);
    if (yn > 0) {
      for (double& z : y) z /= yn;
      for (int it = 0; it < opts.gap_iters; ++it) {
        const double lg = monodromy_apply_lognorm(y, bundle, ws);
        project(y);
        const double g = sup_norm(y);
        if (!(g > 0)) break;
        for (double& z : y) z /= g;
        if (it >= opts.gap_iters / 2) {
          ratio_acc += lg + std::log(g);
          ++ratio_cnt;
        }
      }
    }
    res.gap_estimate = ratio_cnt ? std::exp(ratio_acc / ratio_cnt - logr) : 0.0;
  }

  if (opts.want_residual) res.residual = eigen_residual(res, kernel, td, a);
  return res;
}

/// Prop 3.1 criterion: the principal spectrum point is an eigenvalue iff
/// lambda0 > -1 + max_x a_hat(x); the boundary case is excluded.
inline bool existence_check(const PeriodicField& a, double lambda0) {
  const auto ahat = time_average(a);
  const double mx = *std::max_element(ahat.begin(), ahat.end());
  return lambda0 - (-1.0 + mx) > 1e-9;
}

}  // namespace nlkpp
