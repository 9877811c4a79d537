#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "nlkpp/fields.hpp"
#include "nlkpp/kernel.hpp"

namespace nlkpp {

/// Everything needed to time-step the tilted linear equation on the cell:
/// du/dt = C_mu u - u + a(t,.) u. When the coefficient sample step T/n_t would
/// break the explicit-step sanity bound (strong tilts make the row sum large),
/// each sample interval is subdivided; coefficients stay linear in t between
/// the sampled rows.
struct LinearOperatorBundle {
  CirculantWeights C;
  const PeriodicField* a = nullptr;
  PeriodicCell cell;
  double dt = 0.0;       // explicit step actually taken
  int substeps = 1;      // steps per coefficient sample interval

  LinearOperatorBundle(CirculantWeights weights, const PeriodicField& a_field)
      : C(std::move(weights)), a(&a_field), cell(a_field.cell()) {
    if (C.n_x != cell.n_x)
      throw ValidationError("circulant weights do not match the cell grid");
    const double scale = a->sup() + C.row_sum + 1.0;
    substeps = std::max(1, static_cast<int>(std::ceil(cell.dt() * scale / 0.4)));
    dt = cell.dt() / substeps;
    if (!(dt * scale < 0.5))
      throw ValidationError(
          "explicit step sanity bound violated: dt*(|a|+k_hat+1) = " +
          std::to_string(dt * scale) + " >= 0.5");
  }
};

struct StepWorkspace {
  std::vector<double> ubuf, conv, k1, k2, k3, k4, stage, a_lo, a_mid, a_hi;
};

namespace detail {

inline void linear_rhs(const LinearOperatorBundle& b, const double* a_row,
                       const std::vector<double>& v, std::vector<double>& out,
                       std::vector<double>& ubuf) {
  out.resize(v.size());
  b.C.apply(v.data(), out.data(), ubuf);
  const int n = b.C.n_x;
  for (int i = 0; i < n; ++i) out[i] += (a_row[i] - 1.0) * v[i];
}

}  // namespace detail

namespace detail {

inline void blend_between(const double* a0, const double* a1, double theta, int n,
                          std::vector<double>& out) {
  out.resize(n);
  for (int i = 0; i < n; ++i) out[i] = (1.0 - theta) * a0[i] + theta * a1[i];
}

inline void rk4_sub(std::vector<double>& u, const double* a0, const double* a1,
                    double th0, double th1, const LinearOperatorBundle& b,
                    StepWorkspace& ws) {
  const int n = b.C.n_x;
  const double dt = b.dt;
  detail::blend_between(a0, a1, th0, n, ws.a_lo);
  detail::blend_between(a0, a1, 0.5 * (th0 + th1), n, ws.a_mid);
  detail::blend_between(a0, a1, th1, n, ws.a_hi);

  detail::linear_rhs(b, ws.a_lo.data(), u, ws.k1, ws.ubuf);
  ws.stage.resize(n);
  for (int i = 0; i < n; ++i) ws.stage[i] = u[i] + 0.5 * dt * ws.k1[i];
  detail::linear_rhs(b, ws.a_mid.data(), ws.stage, ws.k2, ws.ubuf);
  for (int i = 0; i < n; ++i) ws.stage[i] = u[i] + 0.5 * dt * ws.k2[i];
  detail::linear_rhs(b, ws.a_mid.data(), ws.stage, ws.k3, ws.ubuf);
  for (int i = 0; i < n; ++i) ws.stage[i] = u[i] + dt * ws.k3[i];
  detail::linear_rhs(b, ws.a_hi.data(), ws.stage, ws.k4, ws.ubuf);
  for (int i = 0; i < n; ++i)
    u[i] += dt / 6.0 * (ws.k1[i] + 2.0 * ws.k2[i] + 2.0 * ws.k3[i] + ws.k4[i]);
}

}  // namespace detail

/// Advance from t_k to t_{k+1} by classical RK4 (possibly subdivided to keep
/// the explicit step within the sanity bound); coefficient values at stage
/// times by linear interpolation of the sampled a.
inline void step_linear(std::vector<double>& u, int t_index,
                        const LinearOperatorBundle& b, StepWorkspace& ws) {
  const double* a0 = b.a->row(t_index);
  const double* a1 = b.a->row(t_index + 1);
  for (int s = 0; s < b.substeps; ++s)
    detail::rk4_sub(u, a0, a1, double(s) / b.substeps, double(s + 1) / b.substeps, b, ws);
  for (int i = 0; i < b.C.n_x; ++i)
    if (!std::isfinite(u[i]))
      throw NumericalError("linear step produced a non-finite value at t_index=" +
                           std::to_string(t_index) + ", node " + std::to_string(i));
}

/// Period (monodromy) map: composition of n_t linear steps over [0, T].
inline std::vector<double> monodromy_apply(const std::vector<double>& u0,
                                           const LinearOperatorBundle& b,
                                           StepWorkspace& ws) {
  std::vector<double> u = u0;
  for (int k = 0; k < b.cell.n_t; ++k) step_linear(u, k, b, ws);
  return u;
}

/// Period map with running sup normalization; returns log of the growth
/// factor. Keeps strong tilts (huge or tiny e^{lambda T}) inside double range.
inline double monodromy_apply_lognorm(std::vector<double>& u,
                                      const LinearOperatorBundle& b,
                                      StepWorkspace& ws) {
  double log_growth = 0.0;
  for (int k = 0; k < b.cell.n_t; ++k) {
    step_linear(u, k, b, ws);
    const double s = sup_norm(u);
    if (!(s > 0.0)) throw NumericalError("monodromy collapsed to zero");
    if (s > 1e100 || s < 1e-100) {
      log_growth += std::log(s);
      for (double& x : u) x /= s;
    }
  }
  const double s = sup_norm(u);
  log_growth += std::log(s);
  for (double& x : u) x /= s;
  return log_growth;
}

}  // namespace nlkpp
