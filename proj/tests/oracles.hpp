// Test-side oracles, independent of the library implementation paths they
// check: adaptive quadrature, closed-form profiles, scalar minimization,
// periodic-logistic shooting, and brute-force lattice sums.
#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace oracles {

inline double simpson_rec(const std::function<double(double)>& f, double a, double b,
                          double fa, double fm, double fb, double whole, double tol,
                          int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return simpson_rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
         simpson_rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

/// Adaptive Simpson quadrature.
inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-13) {
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_rec(f, a, b, fa, fm, fb, whole, tol, 48);
}

inline double biweight_profile(double s, double r0 = 1.0) {
  const double u = s / r0;
  const double q = 1.0 - u * u;
  return q <= 0.0 ? 0.0 : (15.0 / 16.0) * q * q / r0;
}

inline double triweight_profile(double s, double r0 = 1.0) {
  const double u = s / r0;
  const double q = 1.0 - u * u;
  return q <= 0.0 ? 0.0 : (35.0 / 32.0) * q * q * q / r0;
}

/// k_hat(mu) by adaptive quadrature of the closed-form profile.
inline double khat(const std::function<double(double)>& profile, double r0, double mu) {
  return integrate([&](double s) { return std::exp(-mu * s) * profile(s); }, -r0, r0);
}

/// Scalar minimization by ternary subdivision (independent of the library's
/// golden-section code).
inline std::pair<double, double> minimize(const std::function<double(double)>& f,
                                          double lo, double hi, double tol = 1e-10) {
  while (hi - lo > tol) {
    const double m1 = lo + (hi - lo) / 3.0;
    const double m2 = hi - (hi - lo) / 3.0;
    if (f(m1) < f(m2)) hi = m2;
    else lo = m1;
  }
  const double x = 0.5 * (lo + hi);
  return {x, f(x)};
}

/// Periodic orbit of u' = u (r(t) - u) by high-resolution RK4 shooting:
/// returns u(0) with u(T) = u(0).
inline double periodic_logistic_orbit(const std::function<double(double)>& r, double T,
                                      double u0_guess = 1.0, double dt = 1e-5) {
  auto flow = [&](double u0) {
    const long n = static_cast<long>(std::ceil(T / dt));
    const double h = T / n;
    double u = u0;
    for (long i = 0; i < n; ++i) {
      const double t = i * h;
      auto f = [&](double tt, double uu) { return uu * (r(tt) - uu); };
      const double k1 = f(t, u);
      const double k2 = f(t + h / 2, u + h / 2 * k1);
      const double k3 = f(t + h / 2, u + h / 2 * k2);
      const double k4 = f(t + h, u + h * k3);
      u += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    return u;
  };
  double a = u0_guess, ga = flow(a) - a;
  double b = u0_guess * 1.1, gb = flow(b) - b;
  for (int it = 0; it < 200 && std::abs(gb) > 1e-13; ++it) {
    const double c = b - gb * (b - a) / (gb - ga);
    a = b;
    ga = gb;
    b = c;
    gb = flow(b) - b;
  }
  return b;
}

/// Direct high-resolution lattice sum of exp(-nu s) k(s) over {j dx + m p}.
inline double lattice_sum(const std::function<double(double)>& profile, double r0,
                          double nu, double dx) {
  const long L = static_cast<long>(std::floor(r0 / dx + 1e-9));
  double s0 = 0.0, sm = 0.0;
  for (long l = -L; l <= L; ++l) {
    const double s = l * dx;
    s0 += profile(s);
    sm += profile(s) * std::exp(-nu * s);
  }
  return sm / s0;  // normalized the same way the library normalizes at mu = 0
}

}  // namespace oracles
