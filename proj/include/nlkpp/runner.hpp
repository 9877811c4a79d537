#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>

#include "json.hpp"
#include "nlkpp/config.hpp"
#include "nlkpp/scenarios.hpp"
#include "nlkpp/steady_state.hpp"
#include "nlkpp/waves.hpp"

namespace nlkpp {

using json = nlohmann::json;

/// Shared lazily-built state for one configured problem.
class Workbench {
 public:
  explicit Workbench(ProblemConfig cfg)
      : cfg_(std::move(cfg)),
        kernel_(build_kernel(cfg_)),
        fs_(build_fitness(cfg_)),
        prob_(kernel_, fs_.a0, eigen_opts()) {}

  const ProblemConfig& cfg() const { return cfg_; }
  const Kernel& kernel() const { return kernel_; }
  const FitnessSpec& fitness() const { return fs_; }
  const EigenProblem& prob() const { return prob_; }

  EigenOptions eigen_opts() const {
    EigenOptions eo;
    eo.tol = cfg_.solver.eigen_tol;
    eo.max_iter = cfg_.solver.eigen_max_iter;
    return eo;
  }
  SpeedOptions speed_opts() const {
    SpeedOptions so;
    so.golden_tol = cfg_.solver.golden_tol;
    so.bracket_base = cfg_.solver.bracket_base;
    so.mu_max = cfg_.solver.mu_max;
    so.seed = cfg_.solver.seed;
    return so;
  }
  SteadyOptions steady_opts() const {
    SteadyOptions so;
    so.tol = cfg_.solver.steady_tol;
    so.max_periods = cfg_.solver.steady_max_periods;
    so.n_threads = cfg_.solver.threads;
    return so;
  }
  FrontRunOptions front_opts() const {
    FrontRunOptions fo;
    fo.horizon_periods = cfg_.solver.horizon_periods;
    fo.burn_in = cfg_.solver.burn_in;
    fo.theta = cfg_.solver.theta;
    fo.n_t_sim = cfg_.solver.line_n_t;
    fo.x_l_cells = cfg_.solver.front_x_l_cells;
    fo.x_r_cells = cfg_.solver.front_x_r_cells;
    return fo;
  }
  WaveOptions wave_opts() const {
    WaveOptions wo;
    wo.l_eta_over_mu = cfg_.solver.wave_l_eta;
    wo.n_z = cfg_.solver.wave_n_z;
    wo.n_t_wave = cfg_.solver.wave_n_t;
    wo.n_t_store = cfg_.solver.wave_n_t_store;
    wo.tol = cfg_.solver.wave_tol;
    wo.max_periods = cfg_.solver.wave_max_periods;
    wo.n_threads = cfg_.solver.threads;
    return wo;
  }

  const PeriodicOrbit& orbit() {
    if (!orbit_) {
      const double l0 = prob_.lambda(+1, 0.0);
      orbit_ = steady_periodic(kernel_, fs_, steady_opts(), &l0);
    }
    return *orbit_;
  }
  const SpeedResult& speed(int xi) {
    auto& slot = xi == +1 ? speed_pos_ : speed_neg_;
    if (!slot) slot = spreading_speed(prob_, xi, speed_opts());
    return *slot;
  }

 private:
  ProblemConfig cfg_;
  Kernel kernel_;
  FitnessSpec fs_;
  EigenProblem prob_;
  std::optional<PeriodicOrbit> orbit_;
  std::optional<SpeedResult> speed_pos_, speed_neg_;
};

namespace runner {

namespace fs_ns = std::filesystem;

inline void write_text(const fs_ns::path& path, const std::string& text) {
  fs_ns::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ValidationError("cannot write " + path.string());
  os << text;
}

inline void write_json_file(const fs_ns::path& path, const json& j) {
  write_text(path, j.dump(2) + "\n");
}

/// Manifest carries provenance (config hash, grids, version, wall time);
/// summaries stay free of wall-clock data so reruns are byte-identical.
inline void write_manifest(const fs_ns::path& dir, const ProblemConfig& cfg,
                           const std::string& command, double wall_s,
                           const std::vector<std::string>& artifacts) {
  json m;
  m["command"] = command;
  m["config_hash"] = config_hash(cfg);
  m["version"] = kVersion;
  m["grid"] = {{"n_t", cfg.cell.n_t}, {"n_x", cfg.cell.n_x},
               {"T", cfg.cell.T}, {"p", cfg.cell.p}};
  m["wall_time_s"] = wall_s;
  m["artifacts"] = artifacts;
  write_json_file(dir / (command + "_manifest.json"), m);
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(clock::now() - t0_).count();
  }

 private:
  using clock = std::chrono::steady_clock;
  clock::time_point t0_ = clock::now();
};

inline json run_eigen(Workbench& wb, double mu, int xi, bool dump_phi) {
  Stopwatch sw;
  const fs_ns::path dir = wb.cfg().solver.out_dir;
  fs_ns::create_directories(dir);
  EigenOptions eo = wb.eigen_opts();
  const EigenResult res =
      principal_eigen(wb.kernel(), TiltedDirection{xi, mu}, wb.fitness().a0, eo);
  json j;
  j["lambda0"] = res.lambda0;
  j["residual"] = res.residual;
  j["gap"] = res.gap_estimate;
  j["iterations"] = res.iterations;
  j["mu"] = mu;
  j["xi"] = xi;
  j["principal_eigenvalue_exists"] = existence_check(wb.fitness().a0, res.lambda0);
  std::vector<std::string> artifacts = {"eigen_summary.json"};
  if (dump_phi) {
    res.phi.write_csv((dir / "phi.csv").string());
    artifacts.push_back("phi.csv");
  }
  write_json_file(dir / "eigen_summary.json", j);
  write_manifest(dir, wb.cfg(), "eigen", sw.seconds(), artifacts);
  return j;
}

inline json speed_to_json(const SpeedResult& sr) {
  json j;
  j["xi"] = sr.xi;
  j["c_star"] = sr.c_star;
  j["mu_star"] = sr.mu_star;
  j["bracket"] = {sr.bracket_lo, sr.bracket_hi};
  j["n_samples"] = sr.samples.size();
  j["convexity_violations"] = sr.convexity_violations;
  j["derivative_violations"] = sr.derivative_violations;
  j["optimality"] = sr.optimality;
  return j;
}

inline void write_speed_samples(const fs_ns::path& path, const SpeedResult& sr) {
  std::ostringstream os;
  os << "mu,lambda,q\n";
  char buf[96];
  for (const auto& s : sr.samples) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", s.mu, s.lambda, s.q);
    os << buf;
  }
  write_text(path, os.str());
}

inline json run_speed(Workbench& wb, int xi) {
  Stopwatch sw;
  const fs_ns::path dir = wb.cfg().solver.out_dir;
  fs_ns::create_directories(dir);
  const SpeedResult& sr = wb.speed(xi);
  const json j = speed_to_json(sr);
  write_json_file(dir / "speed_summary.json", j);
  write_speed_samples(dir / "speed_samples.csv", sr);
  write_manifest(dir, wb.cfg(), "speed", sw.seconds(),
                 {"speed_summary.json", "speed_samples.csv"});
  return j;
}

inline json run_steady(Workbench& wb) {
  Stopwatch sw;
  const fs_ns::path dir = wb.cfg().solver.out_dir;
  fs_ns::create_directories(dir);
  const PeriodicOrbit& orb = wb.orbit();
  json j;
  j["period_map_residual"] = orb.period_map_residual;
  j["seeds_agreement"] = orb.seeds_agreement;
  j["periods"] = orb.periods;
  j["min"] = orb.u_star.min();
  j["max"] = orb.u_star.max();
  orb.u_star.write_csv((dir / "ustar.csv").string());
  write_json_file(dir / "steady_summary.json", j);
  write_manifest(dir, wb.cfg(), "steady", sw.seconds(),
                 {"steady_summary.json", "ustar.csv"});
  return j;
}

inline void write_trace_csv(const fs_ns::path& path, const FrontTrace& tr) {
  std::ostringstream os;
  os << "t,x_front\n";
  char buf[64];
  for (auto [t, x] : tr.points) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", t, x);
    os << buf;
  }
  write_text(path, os.str());
}

inline json run_simulate(Workbench& wb, const std::string& scenario, int xi) {
  Stopwatch sw;
  const fs_ns::path dir = wb.cfg().solver.out_dir;
  fs_ns::create_directories(dir);
  json j;
  std::vector<std::string> artifacts = {"simulate_summary.json"};
  if (scenario == "speed") {
    const auto run = run_front_speed(wb.kernel(), wb.fitness(), wb.orbit().u_star, xi,
                                     wb.front_opts());
    const double cs = wb.speed(xi).c_star;
    j["scenario"] = scenario;
    j["xi"] = xi;
    j["fitted_speed"] = run.speed;
    j["c_star"] = cs;
    j["rel_err"] = std::abs(run.speed - cs) / cs;
    j["n_fit_samples"] = run.fit.n_used;
    write_trace_csv(dir / "front_trace.csv", run.trace);
    artifacts.push_back("front_trace.csv");
  } else if (scenario == "spread") {
    SpreadOptions so;
    so.horizon_periods = wb.cfg().solver.horizon_periods;
    so.n_t_sim = wb.cfg().solver.line_n_t;
    const auto rep = verify_spreading(wb.kernel(), wb.fitness(), wb.orbit().u_star,
                                      wb.speed(+1).c_star, wb.speed(-1).c_star, so);
    j["scenario"] = scenario;
    j["lead_pos"] = rep.lead_pos;
    j["lead_neg"] = rep.lead_neg;
    j["lead2_pos"] = rep.lead2_pos;
    j["lead2_neg"] = rep.lead2_neg;
    j["behind_pos"] = rep.behind_pos;
    j["behind_neg"] = rep.behind_neg;
    j["pass_lead_pos"] = rep.pass_lead_pos;
    j["pass_lead_neg"] = rep.pass_lead_neg;
    j["pass_behind_pos"] = rep.pass_behind_pos;
    j["pass_behind_neg"] = rep.pass_behind_neg;
    j["no_invasion"] = rep.no_invasion;
  } else if (scenario == "compare") {
    json sides;
    for (int s : {+1, -1}) {
      const auto run = run_front_speed(wb.kernel(), wb.fitness(), wb.orbit().u_star, s,
                                       wb.front_opts());
      const double cs = wb.speed(s).c_star;
      json side;
      side["fitted_speed"] = run.speed;
      side["c_star"] = cs;
      side["rel_err"] = std::abs(run.speed - cs) / cs;
      sides[s == +1 ? "pos" : "neg"] = side;
    }
    j["scenario"] = scenario;
    j["directions"] = sides;
  } else {
    throw ValidationError("unknown scenario '" + scenario +
                          "' (speed, spread, compare)");
  }
  write_json_file(dir / "simulate_summary.json", j);
  write_manifest(dir, wb.cfg(), "simulate", sw.seconds(), artifacts);
  return j;
}

inline json wave_to_json(const WaveRun& run) {
  json j;
  j["xi"] = run.xi;
  j["c"] = run.c;
  j["c_star"] = run.bounds.c_star;
  j["mu"] = run.bounds.mu;
  j["mu1"] = run.bounds.mu1;
  j["mu_star"] = run.bounds.mu_star;
  j["d"] = run.bounds.d;
  j["b"] = run.bounds.b;
  j["M"] = run.bounds.M;
  j["floor_conditions_ok"] = run.bounds.cond57_ok();
  j["floor_condition_margins"] = run.bounds.cond57_margin;
  j["gap"] = run.profile.gap;
  j["periods"] = run.profile.periods;
  j["final_change"] = run.profile.final_change;
  j["mono_violation_upper"] = run.profile.mono_violation_up;
  j["mono_violation_lower"] = run.profile.mono_violation_lo;
  j["order_violation"] = run.profile.order_violation;
  j["left_limit_err"] = run.checks.left_limit_err;
  j["decay_ratio_min"] = run.checks.decay_ratio_min;
  j["decay_ratio_max"] = run.checks.decay_ratio_max;
  j["entire_residual"] = run.checks.entire_residual;
  j["periodicity_err"] = run.checks.periodicity_err;
  j["sandwich_upper_violation"] = run.checks.sandwich_up_violation;
  j["sandwich_lower_violation"] = run.checks.sandwich_lo_violation;
  j["floor_min"] = run.checks.floor_min;
  j["front_advance_dev"] = run.checks.front_advance_dev;
  return j;
}

inline void write_wave_csv(const fs_ns::path& path, const WaveProfile& wp) {
  std::ostringstream os;
  os << "t_slice,z_col,eta,psi_upper,psi_lower\n";
  char buf[128];
  const std::vector<int> slices = {0, wp.n_t_store / 4, wp.n_t_store / 2,
                                   3 * wp.n_t_store / 4};
  for (int s : slices)
    for (int zi = 0; zi < wp.n_z; ++zi)
      for (int ei = 0; ei < wp.n_eta; ++ei) {
        std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g,%.17g\n", s, wp.z_cols[zi],
                      wp.eta_at(ei), wp.up(s, zi, ei), wp.lo(s, zi, ei));
        os << buf;
      }
  write_text(path, os.str());
}

inline json run_wave_cmd(Workbench& wb, int xi, double speed_multiple) {
  Stopwatch sw;
  const fs_ns::path dir = wb.cfg().solver.out_dir;
  fs_ns::create_directories(dir);
  const WaveRun run = run_wave(wb.kernel(), wb.fitness(), wb.orbit().u_star, xi,
                               speed_multiple, wb.wave_opts(), wb.speed_opts());
  const json j = wave_to_json(run);
  write_json_file(dir / "wave_summary.json", j);
  write_wave_csv(dir / "wave_psi.csv", run.profile);
  write_manifest(dir, wb.cfg(), "wave", sw.seconds(),
                 {"wave_summary.json", "wave_psi.csv"});
  return j;
}

inline json run_sweep(Workbench& wb, const std::string& param, double from, double to,
                      int steps, int xi) {
  Stopwatch sw;
  if (steps < 2) throw ValidationError("sweep needs at least 2 steps");
  const fs_ns::path dir = wb.cfg().solver.out_dir;
  fs_ns::create_directories(dir);
  std::ostringstream os;
  json j;
  j["param"] = param;
  j["from"] = from;
  j["to"] = to;
  j["steps"] = steps;
  if (param == "mu") {
    os << "mu,lambda,q\n";
    char buf[96];
    for (int s = 0; s < steps; ++s) {
      const double mu = from + (to - from) * s / (steps - 1);
      const double l = wb.prob().lambda(xi, mu);
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", mu, l,
                    mu != 0.0 ? l / mu : 0.0);
      os << buf;
    }
  } else if (param == "amplitude") {
    os << "amplitude_scale,c_star,mu_star\n";
    char buf[96];
    for (int s = 0; s < steps; ++s) {
      const double scale = from + (to - from) * s / (steps - 1);
      FourierTable tab = wb.cfg().a0;
      for (auto& md : tab.modes) md.amp *= scale;
      const PeriodicField a0 = evaluate_fourier(tab, wb.cfg().cell);
      EigenProblem prob(wb.kernel(), a0, wb.eigen_opts());
      SpeedOptions so = wb.speed_opts();
      so.with_diagnostics = false;
      const SpeedResult sr = spreading_speed(prob, xi, so);
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", scale, sr.c_star, sr.mu_star);
      os << buf;
    }
  } else {
    throw ValidationError("unknown sweep param '" + param + "' (mu, amplitude)");
  }
  write_text(dir / "sweep.csv", os.str());
  write_json_file(dir / "sweep_summary.json", j);
  write_manifest(dir, wb.cfg(), "sweep", sw.seconds(),
                 {"sweep.csv", "sweep_summary.json"});
  return j;
}

struct VerifyCheck {
  std::string name;
  bool pass;
  double value;
  double tol;
};

/// Full property suite; returns the checks and writes a summary. Any failure
/// maps to CLI exit code 3.
inline std::vector<VerifyCheck> run_verify(Workbench& wb) {
  Stopwatch sw;
  std::vector<VerifyCheck> checks;
  const auto& cfg = wb.cfg();

  {
    const auto rep = comparison_property(wb.kernel(), wb.fitness(), wb.orbit().u_star,
                                         20, 3, cfg.solver.seed, 8.0,
                                         cfg.solver.line_n_t);
    checks.push_back({"comparison_ordering", rep.worst_violation <= 1e-10,
                      rep.worst_violation, 1e-10});
  }
  {
    double worst = 0.0;
    const double mu = 0.7;
    const double base = wb.prob().lambda(+1, mu);
    for (double delta : {-0.3, 0.2, 1.0}) {
      FourierTable tab = cfg.a0;
      tab.constant += delta;
      const PeriodicField a0 = evaluate_fourier(tab, cfg.cell);
      EigenProblem prob(wb.kernel(), a0, wb.eigen_opts());
      worst = std::max(worst, std::abs(prob.lambda(+1, mu) - base - delta));
    }
    checks.push_back({"shift_invariance", worst <= 1e-9, worst, 1e-9});
  }
  {
    const SpeedResult& sr = wb.speed(+1);
    checks.push_back({"convexity", sr.convexity_violations == 0,
                      double(sr.convexity_violations), 0.0});
    checks.push_back({"derivative_inequality", sr.derivative_violations == 0,
                      double(sr.derivative_violations), 0.0});
    checks.push_back({"interior_optimality", sr.optimality < 1e-4, sr.optimality, 1e-4});
  }
  {
    const double mu = 0.8;
    const double v = std::abs(wb.prob().lambda(+1, -mu) - wb.prob().lambda(-1, mu));
    checks.push_back({"reflection_identity", v <= 1e-9, v, 1e-9});
  }
  {
    EigenOptions eo = wb.eigen_opts();
    const EigenResult r =
        principal_eigen(wb.kernel(), TiltedDirection{+1, 0.0}, wb.fitness().a0, eo);
    checks.push_back({"eigen_residual", r.residual < 1e-5, r.residual, 1e-5});
    checks.push_back({"spectral_gap", r.gap_estimate < 1.0 - 1e-3, r.gap_estimate,
                      1.0 - 1e-3});
    checks.push_back({"existence_criterion",
                      existence_check(wb.fitness().a0, r.lambda0),
                      r.lambda0, 0.0});
  }
  {
    const PeriodicOrbit& orb = wb.orbit();
    checks.push_back({"steady_seeds_agreement", orb.seeds_agreement < 1e-8,
                      orb.seeds_agreement, 1e-8});
    const double lo_bound = wb.fitness().a0.min() / wb.fitness().b.max() - 1e-6;
    const double hi_bound = wb.fitness().a0.max() / wb.fitness().b.min() + 1e-6;
    const bool squeeze = orb.u_star.min() >= std::min(lo_bound, 0.0) &&
                         orb.u_star.max() <= hi_bound;
    checks.push_back({"steady_squeeze_bounds", squeeze, orb.u_star.max(), hi_bound});
  }
  {
    // sub/super-solution residual signs at c = 1.5 c*
    EigenProblem prob(wb.kernel(), wb.fitness().a0, wb.eigen_opts());
    SpeedOptions so = wb.speed_opts();
    so.with_diagnostics = false;
    const SpeedResult sr = spreading_speed(prob, +1, so);
    WaveOptions wo = wb.wave_opts();
    const WaveBounds bounds = build_bounds(wb.kernel(), wb.fitness(), wb.orbit().u_star,
                                           prob, 1.5 * sr.c_star, wo, so);
    const double rv = residual_check(CandidateKind::SuperV, wb.kernel(), wb.fitness(),
                                     wb.orbit().u_star, bounds, wo);
    const double ru = residual_check(CandidateKind::SuperUbar, wb.kernel(), wb.fitness(),
                                     wb.orbit().u_star, bounds, wo);
    const double rl = residual_check(CandidateKind::SubV, wb.kernel(), wb.fitness(),
                                     wb.orbit().u_star, bounds, wo);
    checks.push_back({"super_solution_vbar", rv >= -1e-9, rv, -1e-9});
    checks.push_back({"super_solution_ubar", ru >= -1e-9, ru, -1e-9});
    checks.push_back({"sub_solution_vunder", rl <= 1e-8, rl, 1e-8});
    checks.push_back({"floor_conditions_57", bounds.cond57_ok(),
                      *std::min_element(bounds.cond57_margin.begin(),
                                        bounds.cond57_margin.end()),
                      0.0});
  }

  json j;
  json arr = json::array();
  for (const auto& c : checks)
    arr.push_back({{"name", c.name}, {"pass", c.pass}, {"value", c.value},
                   {"tol", c.tol}});
  j["checks"] = arr;
  bool all = true;
  for (const auto& c : checks) all = all && c.pass;
  j["all_pass"] = all;
  const fs_ns::path dir = cfg.solver.out_dir;
  write_json_file(dir / "verify_summary.json", j);
  write_manifest(dir, cfg, "verify", sw.seconds(), {"verify_summary.json"});
  return checks;
}

}  // namespace runner
}  // namespace nlkpp
