#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "nlkpp/common.hpp"

namespace nlkpp {

/// Fundamental periodic cell [0,T) x [0,p) with uniform grids.
struct PeriodicCell {
  double T = 1.0;
  double p = 2.0;
  int n_t = 512;
  int n_x = 256;

  void validate() const {
    if (!(T > 0.0) || !(p > 0.0))
      throw ValidationError("periodic cell: periods must be positive");
    if (n_t < 8 || n_x < 8)
      throw ValidationError("periodic cell: n_t and n_x must be >= 8");
  }

  double dt() const { return T / n_t; }
  double dx() const { return p / n_x; }
  double t(int k) const { return T * k / n_t; }
  double x(int i) const { return p * i / n_x; }

  bool operator==(const PeriodicCell&) const = default;
};

/// Time-space periodic sampled field, row-major (t-index, x-index),
/// wrap-around access everywhere.
class PeriodicField {
 public:
  PeriodicField() = default;
  PeriodicField(const PeriodicCell& cell, double fill = 0.0)
      : cell_(cell), v_(static_cast<size_t>(cell.n_t) * cell.n_x, fill) {
    cell_.validate();
  }

  const PeriodicCell& cell() const { return cell_; }
  int n_t() const { return cell_.n_t; }
  int n_x() const { return cell_.n_x; }

  double& at(int k, int i) {
    return v_[static_cast<size_t>(wrap_index(k, cell_.n_t)) * cell_.n_x +
              wrap_index(i, cell_.n_x)];
  }
  double at(int k, int i) const {
    return v_[static_cast<size_t>(wrap_index(k, cell_.n_t)) * cell_.n_x +
              wrap_index(i, cell_.n_x)];
  }
  double operator()(int k, int i) const { return at(k, i); }

  double* row(int k) { return v_.data() + static_cast<size_t>(wrap_index(k, cell_.n_t)) * cell_.n_x; }
  const double* row(int k) const {
    return v_.data() + static_cast<size_t>(wrap_index(k, cell_.n_t)) * cell_.n_x;
  }

  std::vector<double>& data() { return v_; }
  const std::vector<double>& data() const { return v_; }

  double max() const {
    double m = -std::numeric_limits<double>::infinity();
    for (double x : v_) m = std::max(m, x);
    return m;
  }
  double min() const {
    double m = std::numeric_limits<double>::infinity();
    for (double x : v_) m = std::min(m, x);
    return m;
  }
  double sup() const { return sup_norm(v_); }

  bool finite() const { return all_finite(v_); }

  /// Linear-in-time blend of rows for stage times t = (k + theta) * dt,
  /// theta in [0,1]; wraps at the period seam.
  void blend_rows(int k, double theta, std::vector<double>& out) const {
    out.resize(cell_.n_x);
    const double* r0 = row(k);
    const double* r1 = row(k + 1);
    for (int i = 0; i < cell_.n_x; ++i) out[i] = (1.0 - theta) * r0[i] + theta * r1[i];
  }

  void write_csv(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw ValidationError("cannot open for writing: " + path);
    char buf[64];
    os << "# nlkpp-field T=" << fmt(cell_.T) << " p=" << fmt(cell_.p)
       << " n_t=" << cell_.n_t << " n_x=" << cell_.n_x << "\n";
    os << "t_index,x_index,value\n";
    for (int k = 0; k < cell_.n_t; ++k)
      for (int i = 0; i < cell_.n_x; ++i) {
        std::snprintf(buf, sizeof buf, "%d,%d,%.17g\n", k, i, at(k, i));
        os << buf;
      }
  }

  static PeriodicField read_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ValidationError("cannot open field csv: " + path);
    std::string line;
    if (!std::getline(is, line) || line.rfind("# nlkpp-field", 0) != 0)
      throw ValidationError(path + ": missing field header");
    PeriodicCell cell;
    {
      std::istringstream hs(line.substr(13));
      std::string tok;
      while (hs >> tok) {
        auto eq = tok.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = tok.substr(0, eq);
        const std::string val = tok.substr(eq + 1);
        if (key == "T") cell.T = std::stod(val);
        else if (key == "p") cell.p = std::stod(val);
        else if (key == "n_t") cell.n_t = std::stoi(val);
        else if (key == "n_x") cell.n_x = std::stoi(val);
      }
    }
    PeriodicField f(cell);
    std::getline(is, line);  // column header
    int k, i;
    double val;
    char c1, c2;
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      std::istringstream ls(line);
      if (!(ls >> k >> c1 >> i >> c2 >> val))
        throw ValidationError(path + ": malformed row: " + line);
      f.at(k, i) = val;
    }
    return f;
  }

  static std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
  }

 private:
  PeriodicCell cell_;
  std::vector<double> v_;
};

}  // namespace nlkpp
