#pragma once

#include <cmath>
#include <vector>

#include "nlkpp/fields.hpp"
#include "nlkpp/kernel.hpp"

namespace nlkpp {

struct SteadyOptions {
  double tol = 1e-10;      // sup change across whole periods (stroboscopic map)
  int max_periods = 10000;
  int n_threads = 0;
};

/// The unique positive time-space periodic solution u*(t,x) plus the
/// convergence and uniqueness diagnostics.
struct PeriodicOrbit {
  PeriodicField u_star;
  double period_map_residual = 0.0;
  double seeds_agreement = 0.0;
  int periods = 0;
};

namespace detail {

/// RK4 sweep of one full period of du/dt = C0 u - u + u (a0 - b max(u,0))
/// on the periodic cell; optionally records the orbit rows.
class CellReactionStepper {
 public:
  CellReactionStepper(const Kernel& kernel, const FitnessSpec& fs)
      : fs_(&fs), cell_(fs.a0.cell()), C_(periodize(kernel, TiltedDirection{+1, 0.0},
                                                    cell_.p, cell_.n_x)) {
    const double scale = 2.0 + fs.a0.sup() + fs.b.sup() * (fs.a0.sup() / fs.b.min() + 1.0);
    if (!(cell_.dt() * scale < 0.5))
      throw ValidationError("explicit step sanity bound violated for the reaction sweep"
                            " (increase n_t)");
  }

  const PeriodicCell& cell() const { return cell_; }

  void rhs(const double* a_row, const double* b_row, const std::vector<double>& v,
           std::vector<double>& out) {
    out.resize(v.size());
    C_.apply(v.data(), out.data(), ubuf_);
    for (int i = 0; i < cell_.n_x; ++i)
      out[i] += v[i] * (a_row[i] - b_row[i] * std::max(v[i], 0.0)) - v[i];
  }

  void step(std::vector<double>& u, int k) {
    const int n = cell_.n_x;
    const double dt = cell_.dt();
    fs_->a0.blend_rows(k, 0.5, amid_);
    fs_->b.blend_rows(k, 0.5, bmid_);
    rhs(fs_->a0.row(k), fs_->b.row(k), u, k1_);
    stage_.resize(n);
    for (int i = 0; i < n; ++i) stage_[i] = u[i] + 0.5 * dt * k1_[i];
    rhs(amid_.data(), bmid_.data(), stage_, k2_);
    for (int i = 0; i < n; ++i) stage_[i] = u[i] + 0.5 * dt * k2_[i];
    rhs(amid_.data(), bmid_.data(), stage_, k3_);
    for (int i = 0; i < n; ++i) stage_[i] = u[i] + dt * k3_[i];
    rhs(fs_->a0.row(k + 1), fs_->b.row(k + 1), stage_, k4_);
    for (int i = 0; i < n; ++i)
      u[i] += dt / 6.0 * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
    for (int i = 0; i < n; ++i)
      if (!std::isfinite(u[i]))
        throw NumericalError("reaction sweep diverged at t_index=" + std::to_string(k));
  }

  void period_sweep(std::vector<double>& u, PeriodicField* orbit = nullptr) {
    for (int k = 0; k < cell_.n_t; ++k) {
      if (orbit) std::copy(u.begin(), u.end(), orbit->row(k));
      step(u, k);
    }
  }

 private:
  const FitnessSpec* fs_;
  PeriodicCell cell_;
  CirculantWeights C_;
  std::vector<double> ubuf_, k1_, k2_, k3_, k4_, stage_, amid_, bmid_;
};

struct SeedRun {
  PeriodicField orbit;
  double residual = 0.0;
  int periods = 0;
};

inline SeedRun run_to_orbit(const Kernel& kernel, const FitnessSpec& fs, double seed,
                            const SteadyOptions& opts) {
  CellReactionStepper stepper(kernel, fs);
  const PeriodicCell& cell = stepper.cell();
  std::vector<double> u(cell.n_x, seed);
  SeedRun out;
  out.orbit = PeriodicField(cell);
  const double floor = 1e-6 * seed;
  for (int n = 1; n <= opts.max_periods; ++n) {
    std::vector<double> prev = u;
    stepper.period_sweep(u);
    double diff = 0.0;
    for (int i = 0; i < cell.n_x; ++i) diff = std::max(diff, std::abs(u[i] - prev[i]));
    if (sup_norm(u) < floor)
      throw NumericalError("steady state collapsed to zero (H2 violated numerically)");
    if (diff < opts.tol) {
      out.periods = n;
      std::vector<double> v = u;
      stepper.period_sweep(v, &out.orbit);
      double res = 0.0;
      for (int i = 0; i < cell.n_x; ++i)
        res = std::max(res, std::abs(v[i] - out.orbit.at(0, i)));
      out.residual = res;
      return out;
    }
  }
  throw NumericalError("steady state did not converge within max_periods");
}

}  // namespace detail

/// Iterate the nonlinear period map from two seeds; the pair of runs doubles
/// as a numerical uniqueness/stability check.
inline PeriodicOrbit steady_periodic(const Kernel& kernel, const FitnessSpec& fs,
                                     const SteadyOptions& opts = {},
                                     const double* lambda0_a0 = nullptr) {
  fs.validate();
  if (lambda0_a0 && !(*lambda0_a0 > 0.0))
    throw ValidationError("zero state not linearly unstable (lambda0(a0) <= 0)");

  const double seed1 = std::max(fs.a0.max() / fs.b.min(), 1e-2);
  const double positive_floor = std::max(fs.a0.min(), 1e-2 * fs.a0.max());
  const double seed2 = 0.01 * std::max(positive_floor / fs.b.max(), 1e-2 * seed1);

  detail::SeedRun runs[2];
  const double seeds[2] = {seed1, seed2};
  parallel_for(2, opts.n_threads, [&](int i) {
    runs[i] = detail::run_to_orbit(kernel, fs, seeds[i], opts);
  });

  PeriodicOrbit orbit;
  orbit.u_star = runs[0].orbit;
  orbit.period_map_residual = std::max(runs[0].residual, runs[1].residual);
  orbit.periods = std::max(runs[0].periods, runs[1].periods);
  double agree = 0.0;
  for (size_t i = 0; i < orbit.u_star.data().size(); ++i)
    agree = std::max(agree, std::abs(runs[0].orbit.data()[i] - runs[1].orbit.data()[i]));
  orbit.seeds_agreement = agree;
  if (!(orbit.u_star.min() > 0.0))
    throw NumericalError("steady orbit is not strictly positive");
  return orbit;
}

/// Linear-in-time sampler of the stored orbit at absolute grid column i.
class UStarSampler {
 public:
  explicit UStarSampler(const PeriodicField& orbit) : f_(&orbit) {}

  /// Value at time t (any real) and absolute column index i (any integer).
  double operator()(double t, int i) const {
    const PeriodicCell& c = f_->cell();
    double s = t / c.dt();
    double kf = std::floor(s);
    const double theta = s - kf;
    const int k = static_cast<int>(kf);
    return (1.0 - theta) * f_->at(k, i) + theta * f_->at(k + 1, i);
  }

  const PeriodicField& field() const { return *f_; }

 private:
  const PeriodicField* f_;
};

}  // namespace nlkpp
