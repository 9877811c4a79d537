#pragma once

#include "nlkpp/frontsim.hpp"
#include "nlkpp/speed.hpp"

namespace nlkpp {

struct FrontRunOptions {
  int horizon_periods = 60;
  double burn_in = 0.3;
  double theta = 0.5;           // front threshold as a fraction of min u*
  int n_t_sim = 64;             // RK4 steps per period on the line
  double x_l_cells = -10.0;     // domain in units of p
  double x_r_cells = 80.0;
  FrontDataKind kind = FrontDataKind::Step;
  double exp_mu = 1.0;          // decay rate for the exponential kind
};

struct FrontRunResult {
  int xi = +1;
  FrontTrace trace;
  SpeedFit fit;
  double speed = 0.0;  // directional speed (positive when the front invades)
};

/// Track a front-like initial datum and regress its level-crossing position;
/// xi = -1 is reduced to xi = +1 on the mirrored medium.
inline FrontRunResult run_front_speed(const Kernel& kernel, const FitnessSpec& fs,
                                      const PeriodicField& ustar, int xi,
                                      const FrontRunOptions& opts = {}) {
  const FitnessSpec fsm = xi == -1 ? mirror_x(fs) : fs;
  const PeriodicField usm = xi == -1 ? mirror_x(ustar) : ustar;
  const PeriodicCell& cell = fsm.a0.cell();
  const double p = cell.p, dx = cell.dx();

  LineGeom geom;
  geom.x_l = std::round(opts.x_l_cells * p / dx) * dx;
  geom.dx = dx;
  geom.n = static_cast<int>(std::round((opts.x_r_cells - opts.x_l_cells) * p / dx)) + 1;
  LineContext ctx(kernel, fsm, usm, geom, cell.T / opts.n_t_sim);

  FrontDataParams prm;
  prm.x0 = 0.0;
  prm.mu = opts.exp_mu;
  LineState s = make_front_data(opts.kind, ctx, prm);

  FrontRunResult out;
  out.xi = xi;
  out.trace.theta = opts.theta;
  out.trace.thresh = opts.theta * usm.min();
  const long total_steps = static_cast<long>(opts.horizon_periods) * opts.n_t_sim;
  out.trace.points.emplace_back(s.t, front_position(s, out.trace.thresh));
  for (long st = 0; st < total_steps; ++st) {
    ctx.rk4_step(s);
    out.trace.points.emplace_back(s.t, front_position(s, out.trace.thresh));
  }
  out.fit = estimate_speed(out.trace, opts.burn_in, cell.T);
  out.speed = out.fit.slope;
  return out;
}

struct SpreadOptions {
  int horizon_periods = 60;
  int final_window = 10;
  double sigma = 0.5;         // bump height
  double c_fast = 1.2;        // leading-edge frame multiple of c*
  double c_fast2 = 2.0;       // faster frame for the tail-monotonicity check
  double c_slow = 0.8;        // behind-front frame multiple of c*
  int n_t_sim = 64;
  double margin_cells = 4.0;  // spatial margin in units of p
  double lead_thresh = 1e-3;
  double behind_thresh = 5e-2;
};

struct SpreadReport {
  double lead_pos = 0.0, lead_neg = 0.0;      // max u ahead of c_fast * t
  double lead2_pos = 0.0, lead2_neg = 0.0;    // max u ahead of c_fast2 * t
  double behind_pos = 0.0, behind_neg = 0.0;  // max |u - u*| behind c_slow * t
  bool pass_lead_pos = false, pass_lead_neg = false;
  bool pass_behind_pos = false, pass_behind_neg = false;
  bool no_invasion = false;
  double c_star_pos = 0.0, c_star_neg = 0.0;
};

/// Direct verification of the spreading dichotomy from compact bump data:
/// decay ahead of frames faster than c*, locking onto u* behind slower ones.
inline SpreadReport verify_spreading(const Kernel& kernel, const FitnessSpec& fs,
                                     const PeriodicField& ustar, double c_star_pos,
                                     double c_star_neg, const SpreadOptions& opts = {}) {
  const PeriodicCell& cell = fs.a0.cell();
  const double p = cell.p, dx = cell.dx(), T = cell.T;
  const double horizon = opts.horizon_periods * T;
  const double c_max = std::max(c_star_pos, c_star_neg);
  const double half =
      std::ceil((opts.c_fast * c_max * horizon + opts.margin_cells * p + 2.0 * p) / p) * p;

  LineGeom geom;
  geom.x_l = -half;
  geom.dx = dx;
  geom.n = static_cast<int>(std::round(2.0 * half / dx)) + 1;
  // compact data decay in both directions; clamp both pads to zero
  LineContext ctx(kernel, fs, ustar, geom, T / opts.n_t_sim, PadMode::Zero,
                  PadMode::Zero);

  FrontDataParams prm;
  prm.sigma = opts.sigma;
  prm.core = p / 2.0;
  prm.taper = p / 2.0;
  LineState s = make_front_data(FrontDataKind::Bump, ctx, prm);

  SpreadReport rep;
  rep.c_star_pos = c_star_pos;
  rep.c_star_neg = c_star_neg;
  const double t_window = (opts.horizon_periods - opts.final_window) * T;
  const long total_steps = static_cast<long>(opts.horizon_periods) * opts.n_t_sim;
  for (long st = 0; st < total_steps; ++st) {
    ctx.rk4_step(s);
    if (s.t < t_window) continue;
    const double xf_pos = opts.c_fast * c_star_pos * s.t;
    const double xf2_pos = opts.c_fast2 * c_star_pos * s.t;
    const double xs_pos = opts.c_slow * c_star_pos * s.t;
    const double xf_neg = -opts.c_fast * c_star_neg * s.t;
    const double xf2_neg = -opts.c_fast2 * c_star_neg * s.t;
    const double xs_neg = -opts.c_slow * c_star_neg * s.t;
    for (int i = 0; i < geom.n; ++i) {
      const double x = geom.x(i);
      const double u = s.u[i];
      if (x >= xf_pos) rep.lead_pos = std::max(rep.lead_pos, u);
      if (x >= xf2_pos) rep.lead2_pos = std::max(rep.lead2_pos, u);
      if (x <= xf_neg) rep.lead_neg = std::max(rep.lead_neg, u);
      if (x <= xf2_neg) rep.lead2_neg = std::max(rep.lead2_neg, u);
      if (x >= 0.0 && x <= xs_pos)
        rep.behind_pos = std::max(rep.behind_pos,
                                  std::abs(u - ctx.ustar()(s.t, ctx.column(i))));
      if (x <= 0.0 && x >= xs_neg)
        rep.behind_neg = std::max(rep.behind_neg,
                                  std::abs(u - ctx.ustar()(s.t, ctx.column(i))));
    }
  }
  rep.no_invasion = sup_norm(s.u) < 1e-12;
  rep.pass_lead_pos = rep.lead_pos < opts.lead_thresh;
  rep.pass_lead_neg = rep.lead_neg < opts.lead_thresh;
  rep.pass_behind_pos = !rep.no_invasion && rep.behind_pos < opts.behind_thresh;
  rep.pass_behind_neg = !rep.no_invasion && rep.behind_neg < opts.behind_thresh;
  return rep;
}

/// Seeded comparison-principle property run: ordered smooth random pairs stay
/// ordered under the nonlinear line evolution.
struct ComparisonReport {
  int n_pairs = 0;
  double worst_violation = 0.0;
};

inline ComparisonReport comparison_property(const Kernel& kernel, const FitnessSpec& fs,
                                            const PeriodicField& ustar, int n_pairs,
                                            int n_periods, std::uint64_t seed,
                                            double domain_cells = 8.0,
                                            int n_t_sim = 64) {
  const PeriodicCell& cell = fs.a0.cell();
  const double p = cell.p, dx = cell.dx();
  LineGeom geom;
  geom.x_l = -std::round(domain_cells / 2.0) * p;
  geom.dx = dx;
  geom.n = static_cast<int>(std::round(domain_cells * p / dx)) + 1;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double umax = ustar.max();

  ComparisonReport rep;
  rep.n_pairs = n_pairs;
  for (int pair = 0; pair < n_pairs; ++pair) {
    LineContext ctx_a(kernel, fs, ustar, geom, cell.T / n_t_sim, PadMode::Zero,
                      PadMode::Zero);
    LineContext ctx_b(kernel, fs, ustar, geom, cell.T / n_t_sim, PadMode::Zero,
                      PadMode::Zero);
    LineState a, bst;
    a.g = bst.g = geom;
    a.u.resize(geom.n);
    bst.u.resize(geom.n);
    // smooth nonnegative profiles: squared random trigonometric polynomials
    double c1 = unif(rng), c2 = unif(rng), c3 = unif(rng), c4 = unif(rng);
    double d1 = unif(rng), d2 = unif(rng);
    for (int i = 0; i < geom.n; ++i) {
      const double x = geom.x(i);
      const double base = c1 * std::sin(2.0 * std::numbers::pi * x / (4.0 * p) + c2) +
                          c3 * std::cos(2.0 * std::numbers::pi * x / (3.0 * p) + c4);
      const double bump = d1 * std::sin(2.0 * std::numbers::pi * x / (5.0 * p) + d2);
      a.u[i] = 0.3 * umax * base * base;
      bst.u[i] = a.u[i] + 0.2 * umax * bump * bump;
    }
    for (int st = 0; st < n_periods * n_t_sim; ++st) {
      ctx_a.rk4_step(a);
      ctx_b.rk4_step(bst);
    }
    for (int i = 0; i < geom.n; ++i)
      rep.worst_violation = std::max(rep.worst_violation, a.u[i] - bst.u[i]);
  }
  return rep;
}

}  // namespace nlkpp
