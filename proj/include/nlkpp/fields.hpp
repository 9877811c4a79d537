#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "nlkpp/grid.hpp"

namespace nlkpp {

/// One trigonometric mode amp*cos(2*pi*m*t/T + 2*pi*n*x/p + phase).
struct FourierMode {
  int m = 0;
  int n = 0;
  double amp = 0.0;
  double phase = 0.0;
};

/// Coefficient table: constant plus modes.
struct FourierTable {
  double constant = 0.0;
  std::vector<FourierMode> modes;
};

inline PeriodicField evaluate_fourier(const FourierTable& tab, const PeriodicCell& cell) {
  for (const auto& md : tab.modes) {
    if (md.m < 0) throw ValidationError("fourier mode: m must be >= 0");
    if (md.m >= (cell.n_t + 1) / 2 || std::abs(md.n) >= (cell.n_x + 1) / 2)
      throw ValidationError("fourier mode (" + std::to_string(md.m) + "," +
                            std::to_string(md.n) + ") beyond the grid Nyquist limit");
  }
  PeriodicField f(cell, tab.constant);
  const double wt = 2.0 * std::numbers::pi / cell.T;
  const double wx = 2.0 * std::numbers::pi / cell.p;
  for (const auto& md : tab.modes)
    for (int k = 0; k < cell.n_t; ++k) {
      double* row = f.row(k);
      const double pt = wt * md.m * cell.t(k) + md.phase;
      for (int i = 0; i < cell.n_x; ++i)
        row[i] += md.amp * std::cos(pt + wx * md.n * cell.x(i));
    }
  return f;
}

/// a_hat(x) = (1/T) int_0^T a(t,x) dt; the periodic trapezoid rule equals the
/// plain column mean.
inline std::vector<double> time_average(const PeriodicField& a) {
  std::vector<double> avg(a.n_x(), 0.0);
  for (int k = 0; k < a.n_t(); ++k) {
    const double* row = a.row(k);
    for (int i = 0; i < a.n_x(); ++i) avg[i] += row[i];
  }
  for (double& v : avg) v /= a.n_t();
  return avg;
}

/// KPP normal form f(t,x,u) = a0(t,x) - b(t,x)*u, with b bounded below by
/// b_min > 0 so (H1) holds structurally.
struct FitnessSpec {
  PeriodicField a0;
  PeriodicField b;

  double b_min() const { return b.min(); }
  void validate() const {
    if (!a0.finite() || !b.finite())
      throw ValidationError("fitness fields must be finite");
    if (!(b_min() > 0.0))
      throw ValidationError("saturation must be strictly positive");
    if (a0.cell() != b.cell())
      throw ValidationError("a0 and b must share the periodic cell");
  }
};

struct HypothesesReport {
  bool h1 = false;               // b_min > 0
  bool h2 = false;               // lambda0(a0) > 0
  bool principal_eigen = false;  // lambda0 > -1 + max a_hat  (existence criterion)
  double b_min = 0.0;
  double lambda0 = 0.0;
  double max_a_hat = 0.0;
};

inline HypothesesReport check_hypotheses(const FitnessSpec& fs, double lambda0_a0) {
  HypothesesReport r;
  r.b_min = fs.b.min();
  r.h1 = r.b_min > 0.0;
  r.lambda0 = lambda0_a0;
  r.h2 = lambda0_a0 > 0.0;
  const auto ahat = time_average(fs.a0);
  r.max_a_hat = *std::max_element(ahat.begin(), ahat.end());
  r.principal_eigen = (lambda0_a0 - (-1.0 + r.max_a_hat)) > 1e-9;
  return r;
}

/// Reflect a field through x -> -x (grid-exact); used to reduce xi = -1
/// problems to xi = +1 in the line solvers.
inline PeriodicField mirror_x(const PeriodicField& f) {
  PeriodicField g(f.cell());
  for (int k = 0; k < f.n_t(); ++k)
    for (int i = 0; i < f.n_x(); ++i) g.at(k, i) = f.at(k, -i);
  return g;
}

inline FitnessSpec mirror_x(const FitnessSpec& fs) {
  return FitnessSpec{mirror_x(fs.a0), mirror_x(fs.b)};
}

}  // namespace nlkpp
