#pragma once

#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "nlkpp/fields.hpp"
#include "nlkpp/kernel.hpp"

namespace nlkpp {

struct SolverOptions {
  double eigen_tol = 1e-10;
  int eigen_max_iter = 20000;
  double golden_tol = 1e-5;
  double bracket_base = 0.05;
  double mu_max = 100.0;
  double steady_tol = 1e-10;
  int steady_max_periods = 10000;
  double front_x_l_cells = -10.0;
  double front_x_r_cells = 80.0;
  int horizon_periods = 60;
  double burn_in = 0.3;
  double theta = 0.5;
  int line_n_t = 64;
  double wave_l_eta = 30.0;
  int wave_n_z = 16;
  int wave_n_t = 64;
  int wave_n_t_store = 32;
  double wave_tol = 1e-6;
  int wave_max_periods = 500;
  std::uint64_t seed = 0;
  int threads = 0;
  std::string out_dir = "out";

  void validate() const {
    for (double tol : {eigen_tol, golden_tol, steady_tol, wave_tol})
      if (!(tol > 0.0)) throw ValidationError("solver tolerances must be positive");
    if (!(burn_in >= 0.0 && burn_in < 1.0))
      throw ValidationError("burn_in must lie in [0, 1)");
    if (!(theta > 0.0 && theta < 1.0))
      throw ValidationError("theta must lie in (0, 1)");
  }
};

struct ProblemConfig {
  PeriodicCell cell;
  std::string kernel_name = "biweight";
  std::string kernel_table;  // CSV path; overrides kernel_name when set
  double r0 = 1.0;
  FourierTable a0;
  FourierTable b{1.0, {}};
  SolverOptions solver;
};

namespace cfgdetail {

struct Line {
  int no;
  std::string section, key, value;
};

inline std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double to_double(const Line& ln, const std::string& path) {
  try {
    size_t pos = 0;
    double v = std::stod(ln.value, &pos);
    if (pos != ln.value.size()) throw std::invalid_argument("");
    return v;
  } catch (...) {
    throw ValidationError(path + ":" + std::to_string(ln.no) + ": expected a number for '" +
                          ln.key + "', got '" + ln.value + "'");
  }
}

inline long to_int(const Line& ln, const std::string& path) {
  try {
    size_t pos = 0;
    long v = std::stol(ln.value, &pos);
    if (pos != ln.value.size()) throw std::invalid_argument("");
    return v;
  } catch (...) {
    throw ValidationError(path + ":" + std::to_string(ln.no) + ": expected an integer for '" +
                          ln.key + "', got '" + ln.value + "'");
  }
}

inline FourierMode to_mode(const Line& ln, const std::string& path) {
  std::istringstream ss(ln.value);
  FourierMode md;
  if (!(ss >> md.m >> md.n >> md.amp))
    throw ValidationError(path + ":" + std::to_string(ln.no) +
                          ": mode needs 'm n amplitude [phase]'");
  if (!(ss >> md.phase)) md.phase = 0.0;
  return md;
}

}  // namespace cfgdetail

inline ProblemConfig parse_config_text(const std::string& text,
                                       const std::string& path = "<config>") {
  using cfgdetail::Line;
  std::vector<Line> lines;
  {
    std::istringstream is(text);
    std::string raw, section;
    int no = 0;
    while (std::getline(is, raw)) {
      ++no;
      auto hash = raw.find_first_of("#;");
      if (hash != std::string::npos) raw = raw.substr(0, hash);
      const std::string t = cfgdetail::trim(raw);
      if (t.empty()) continue;
      if (t.front() == '[') {
        if (t.back() != ']')
          throw ValidationError(path + ":" + std::to_string(no) + ": unterminated section");
        section = cfgdetail::trim(t.substr(1, t.size() - 2));
        continue;
      }
      auto eq = t.find('=');
      if (eq == std::string::npos)
        throw ValidationError(path + ":" + std::to_string(no) + ": expected 'key = value'");
      if (section.empty())
        throw ValidationError(path + ":" + std::to_string(no) + ": key outside any section");
      lines.push_back({no, section, cfgdetail::trim(t.substr(0, eq)),
                       cfgdetail::trim(t.substr(eq + 1))});
    }
  }

  bool seen[4] = {false, false, false, false};
  for (const auto& ln : lines) {
    if (ln.section == "cell") seen[0] = true;
    if (ln.section == "kernel") seen[1] = true;
    if (ln.section == "a0") seen[2] = true;
    if (ln.section == "b") seen[3] = true;
  }
  const char* names[4] = {"cell", "kernel", "a0", "b"};
  for (int i = 0; i < 4; ++i)
    if (!seen[i])
      throw ValidationError(path + ": missing required section [" + names[i] + "]");

  ProblemConfig cfg;
  cfg.b.constant = 1.0;
  for (const auto& ln : lines) {
    auto bad_key = [&]() {
      throw ValidationError(path + ":" + std::to_string(ln.no) + ": unknown key '" +
                            ln.key + "' in section [" + ln.section + "]");
    };
    if (ln.section == "cell") {
      if (ln.key == "T") cfg.cell.T = cfgdetail::to_double(ln, path);
      else if (ln.key == "p") cfg.cell.p = cfgdetail::to_double(ln, path);
      else if (ln.key == "n_t") cfg.cell.n_t = static_cast<int>(cfgdetail::to_int(ln, path));
      else if (ln.key == "n_x") cfg.cell.n_x = static_cast<int>(cfgdetail::to_int(ln, path));
      else bad_key();
      if ((ln.key == "T" || ln.key == "p") &&
          !(cfgdetail::to_double(ln, path) > 0.0))
        throw ValidationError(path + ":" + std::to_string(ln.no) +
                              ": period must be positive");
    } else if (ln.section == "kernel") {
      if (ln.key == "name") cfg.kernel_name = ln.value;
      else if (ln.key == "table") cfg.kernel_table = ln.value;
      else if (ln.key == "r0") cfg.r0 = cfgdetail::to_double(ln, path);
      else bad_key();
    } else if (ln.section == "a0" || ln.section == "b") {
      FourierTable& tab = ln.section == "a0" ? cfg.a0 : cfg.b;
      if (ln.key == "constant") tab.constant = cfgdetail::to_double(ln, path);
      else if (ln.key == "mode") tab.modes.push_back(cfgdetail::to_mode(ln, path));
      else bad_key();
    } else if (ln.section == "solver") {
      SolverOptions& so = cfg.solver;
      if (ln.key == "eigen_tol") so.eigen_tol = cfgdetail::to_double(ln, path);
      else if (ln.key == "eigen_max_iter") so.eigen_max_iter = (int)cfgdetail::to_int(ln, path);
      else if (ln.key == "golden_tol") so.golden_tol = cfgdetail::to_double(ln, path);
      else if (ln.key == "bracket_base") so.bracket_base = cfgdetail::to_double(ln, path);
      else if (ln.key == "mu_max") so.mu_max = cfgdetail::to_double(ln, path);
      else if (ln.key == "steady_tol") so.steady_tol = cfgdetail::to_double(ln, path);
      else if (ln.key == "steady_max_periods") so.steady_max_periods = (int)cfgdetail::to_int(ln, path);
      else if (ln.key == "front_x_l_cells") so.front_x_l_cells = cfgdetail::to_double(ln, path);
      else if (ln.key == "front_x_r_cells") so.front_x_r_cells = cfgdetail::to_double(ln, path);
      else if (ln.key == "horizon_periods") so.horizon_periods = (int)cfgdetail::to_int(ln, path);
      else if (ln.key == "burn_in") so.burn_in = cfgdetail::to_double(ln, path);
      else if (ln.key == "theta") so.theta = cfgdetail::to_double(ln, path);
      else if (ln.key == "line_n_t") so.line_n_t = (int)cfgdetail::to_int(ln, path);
      else if (ln.key == "wave_l_eta") so.wave_l_eta = cfgdetail::to_double(ln, path);
      else if (ln.key == "wave_n_z") so.wave_n_z = (int)cfgdetail::to_int(ln, path);
      else if (ln.key == "wave_n_t") so.wave_n_t = (int)cfgdetail::to_int(ln, path);
      else if (ln.key == "wave_n_t_store") so.wave_n_t_store = (int)cfgdetail::to_int(ln, path);
      else if (ln.key == "wave_tol") so.wave_tol = cfgdetail::to_double(ln, path);
      else if (ln.key == "wave_max_periods") so.wave_max_periods = (int)cfgdetail::to_int(ln, path);
      else if (ln.key == "seed") so.seed = static_cast<std::uint64_t>(cfgdetail::to_int(ln, path));
      else if (ln.key == "threads") so.threads = (int)cfgdetail::to_int(ln, path);
      else if (ln.key == "out_dir") so.out_dir = ln.value;
      else bad_key();
    } else {
      throw ValidationError(path + ":" + std::to_string(ln.no) + ": unknown section [" +
                            ln.section + "]");
    }
  }
  cfg.cell.validate();
  cfg.solver.validate();
  if (!(cfg.r0 > 0.0)) throw ValidationError(path + ": kernel r0 must be positive");
  return cfg;
}

inline ProblemConfig parse_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ValidationError("cannot open config file: " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config_text(ss.str(), path);
}

inline std::string serialize_config(const ProblemConfig& cfg) {
  std::ostringstream os;
  auto num = [](double x) { return PeriodicField::fmt(x); };
  os << "[cell]\n"
     << "T = " << num(cfg.cell.T) << "\np = " << num(cfg.cell.p)
     << "\nn_t = " << cfg.cell.n_t << "\nn_x = " << cfg.cell.n_x << "\n\n[kernel]\n";
  if (!cfg.kernel_table.empty()) os << "table = " << cfg.kernel_table << "\n";
  else os << "name = " << cfg.kernel_name << "\n";
  os << "r0 = " << num(cfg.r0) << "\n";
  for (int sec = 0; sec < 2; ++sec) {
    const FourierTable& tab = sec == 0 ? cfg.a0 : cfg.b;
    os << "\n[" << (sec == 0 ? "a0" : "b") << "]\n"
       << "constant = " << num(tab.constant) << "\n";
    for (const auto& md : tab.modes)
      os << "mode = " << md.m << " " << md.n << " " << num(md.amp) << " "
         << num(md.phase) << "\n";
  }
  const SolverOptions& so = cfg.solver;
  os << "\n[solver]\n"
     << "eigen_tol = " << num(so.eigen_tol) << "\n"
     << "eigen_max_iter = " << so.eigen_max_iter << "\n"
     << "golden_tol = " << num(so.golden_tol) << "\n"
     << "bracket_base = " << num(so.bracket_base) << "\n"
     << "mu_max = " << num(so.mu_max) << "\n"
     << "steady_tol = " << num(so.steady_tol) << "\n"
     << "steady_max_periods = " << so.steady_max_periods << "\n"
     << "front_x_l_cells = " << num(so.front_x_l_cells) << "\n"
     << "front_x_r_cells = " << num(so.front_x_r_cells) << "\n"
     << "horizon_periods = " << so.horizon_periods << "\n"
     << "burn_in = " << num(so.burn_in) << "\n"
     << "theta = " << num(so.theta) << "\n"
     << "line_n_t = " << so.line_n_t << "\n"
     << "wave_l_eta = " << num(so.wave_l_eta) << "\n"
     << "wave_n_z = " << so.wave_n_z << "\n"
     << "wave_n_t = " << so.wave_n_t << "\n"
     << "wave_n_t_store = " << so.wave_n_t_store << "\n"
     << "wave_tol = " << num(so.wave_tol) << "\n"
     << "wave_max_periods = " << so.wave_max_periods << "\n"
     << "seed = " << so.seed << "\n"
     << "threads = " << so.threads << "\n"
     << "out_dir = " << so.out_dir << "\n";
  return os.str();
}

inline Kernel build_kernel(const ProblemConfig& cfg) {
  if (!cfg.kernel_table.empty()) {
    std::ifstream is(cfg.kernel_table);
    if (!is) throw ValidationError("cannot open kernel table: " + cfg.kernel_table);
    std::vector<std::pair<double, double>> table;
    std::string line;
    while (std::getline(is, line)) {
      const std::string t = cfgdetail::trim(line);
      if (t.empty() || t[0] == '#' || std::isalpha(static_cast<unsigned char>(t[0])))
        continue;
      std::istringstream ls(t);
      double s, v;
      char comma;
      if (ls >> s) {
        ls >> comma >> v;
        table.emplace_back(s, v);
      }
    }
    return make_kernel_from_table(std::move(table), cfg.r0);
  }
  return make_kernel(cfg.kernel_name, cfg.r0);
}

inline FitnessSpec build_fitness(const ProblemConfig& cfg) {
  FitnessSpec fs{evaluate_fourier(cfg.a0, cfg.cell), evaluate_fourier(cfg.b, cfg.cell)};
  if (!(fs.b.min() > 0.0))
    throw ValidationError("saturation must be strictly positive");
  fs.validate();
  return fs;
}

inline std::string config_hash(const ProblemConfig& cfg) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(serialize_config(cfg))));
  return buf;
}

}  // namespace nlkpp
