#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "nlkpp/common.hpp"

namespace nlkpp {

/// Direction and exponential tilt of the dispersal operator. In one space
/// dimension the direction is just a sign.
struct TiltedDirection {
  int xi = +1;     // +1 or -1
  double mu = 0.0; // decay rate, 1/length

  void validate() const {
    if (xi != 1 && xi != -1) throw ValidationError("xi must be +1 or -1");
  }
  double nu() const { return mu * xi; }  // effective 1-D tilt
};

namespace detail {

/// Natural cubic spline through (x_i, y_i); evaluates 0 outside the data range.
class CubicSpline {
 public:
  CubicSpline(std::vector<double> x, std::vector<double> y)
      : x_(std::move(x)), y_(std::move(y)) {
    const int n = static_cast<int>(x_.size());
    m_.assign(n, 0.0);
    if (n < 3) return;
    std::vector<double> a(n, 0.0), b(n, 0.0), c(n, 0.0), d(n, 0.0);
    b[0] = 1.0;
    b[n - 1] = 1.0;
    for (int i = 1; i + 1 < n; ++i) {
      const double h0 = x_[i] - x_[i - 1], h1 = x_[i + 1] - x_[i];
      a[i] = h0 / 6.0;
      b[i] = (h0 + h1) / 3.0;
      c[i] = h1 / 6.0;
      d[i] = (y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0;
    }
    for (int i = 1; i < n; ++i) {
      const double w = a[i] / b[i - 1];
      b[i] -= w * c[i - 1];
      d[i] -= w * d[i - 1];
    }
    m_[n - 1] = d[n - 1] / b[n - 1];
    for (int i = n - 2; i >= 0; --i) m_[i] = (d[i] - c[i] * m_[i + 1]) / b[i];
  }

  double operator()(double s) const {
    if (x_.empty() || s < x_.front() || s > x_.back()) return 0.0;
    int lo = 0, hi = static_cast<int>(x_.size()) - 1;
    while (hi - lo > 1) {
      const int mid = (lo + hi) / 2;
      (x_[mid] <= s ? lo : hi) = mid;
    }
    const double h = x_[hi] - x_[lo];
    const double A = (x_[hi] - s) / h, B = (s - x_[lo]) / h;
    return A * y_[lo] + B * y_[hi] +
           ((A * A * A - A) * m_[lo] + (B * B * B - B) * m_[hi]) * h * h / 6.0;
  }

 private:
  std::vector<double> x_, y_, m_;
};

}  // namespace detail

/// Compactly supported normalized dispersal kernel on [-r0, r0].
class Kernel {
 public:
  Kernel() = default;
  Kernel(std::string name, double r0, std::function<double(double)> raw_profile)
      : name_(std::move(name)), r0_(r0), raw_(std::move(raw_profile)) {
    if (!(r0_ > 0.0)) throw ValidationError("kernel radius r0 must be positive");
    sample_and_validate();
  }

  const std::string& name() const { return name_; }
  double r0() const { return r0_; }
  double second_moment() const { return second_moment_; }
  const std::vector<double>& samples() const { return samples_; }
  double sample_ds() const { return ds_; }

  /// Normalized profile; zero outside (-r0, r0).
  double operator()(double s) const {
    if (std::abs(s) >= r0_) return 0.0;
    return norm_ * raw_(s);
  }

 private:
  void sample_and_validate();

  std::string name_;
  double r0_ = 1.0;
  std::function<double(double)> raw_;
  double norm_ = 1.0;
  double second_moment_ = 0.0;
  std::vector<double> samples_;  // normalized values on the internal grid
  double ds_ = 0.0;

  static constexpr int kSamples = 4097;  // odd, for composite Simpson
};

namespace detail {

inline double simpson(const std::vector<double>& f, double h) {
  const int n = static_cast<int>(f.size());
  double s = f[0] + f[n - 1];
  for (int i = 1; i + 1 < n; ++i) s += f[i] * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

}  // namespace detail

inline void Kernel::sample_and_validate() {
  const int n = kSamples;
  ds_ = 2.0 * r0_ / (n - 1);
  std::vector<double> raw(n);
  double vmax = 0.0;
  for (int i = 0; i < n; ++i) {
    raw[i] = raw_(-r0_ + i * ds_);
    vmax = std::max(vmax, raw[i]);
  }
  if (vmax <= 0.0)
    throw ValidationError("kernel not positive on support");
  for (int i = 0; i < n; ++i)
    if (raw[i] < -1e-14 * vmax)
      throw ValidationError("kernel has a negative sample at s=" +
                            std::to_string(-r0_ + i * ds_));
  for (int i = 0; i < n; ++i)
    if (std::abs(raw[i] - raw[n - 1 - i]) > 1e-12 * vmax)
      throw ValidationError("kernel profile is not even (asymmetry beyond 1e-12)");
  for (int i = 1; i + 1 < n; ++i)
    if (raw[i] <= 0.0)
      throw ValidationError("kernel not positive on support");
  if (std::abs(raw[0]) > 1e-10 * vmax || std::abs(raw[n - 1]) > 1e-10 * vmax)
    throw ValidationError("kernel must vanish at the support boundary +-r0");
  // one-sided 2nd-order derivative at the boundary; C1 extension by zero
  const double d_left = (-3.0 * raw[0] + 4.0 * raw[1] - raw[2]) / (2.0 * ds_);
  const double d_right = (3.0 * raw[n - 1] - 4.0 * raw[n - 2] + raw[n - 3]) / (2.0 * ds_);
  const double dtol = 2e-4 * vmax / r0_;
  if (std::abs(d_left) > dtol || std::abs(d_right) > dtol)
    throw ValidationError("kernel derivative must vanish at +-r0 (C1 extension)");

  const double integral = detail::simpson(raw, ds_);
  if (!(integral > 0.0)) throw ValidationError("kernel integral must be positive");
  norm_ = 1.0 / integral;

  samples_.resize(n);
  std::vector<double> s2(n);
  for (int i = 0; i < n; ++i) {
    samples_[i] = raw[i] * norm_;
    const double s = -r0_ + i * ds_;
    s2[i] = s * s * samples_[i];
  }
  const double check = detail::simpson(samples_, ds_);
  if (std::abs(check - 1.0) > 1e-10)
    throw NumericalError("kernel normalization failed to reach 1e-10");
  second_moment_ = detail::simpson(s2, ds_);
}

inline Kernel make_kernel(const std::string& name, double r0) {
  if (name == "biweight") {
    return Kernel(name, r0, [r0](double s) {
      const double u = s / r0;
      const double q = 1.0 - u * u;
      return q <= 0.0 ? 0.0 : (15.0 / 16.0) * q * q / r0;
    });
  }
  if (name == "triweight") {
    return Kernel(name, r0, [r0](double s) {
      const double u = s / r0;
      const double q = 1.0 - u * u;
      return q <= 0.0 ? 0.0 : (35.0 / 32.0) * q * q * q / r0;
    });
  }
  throw ValidationError("unknown kernel '" + name +
                        "' (built-ins: biweight, triweight)");
}

/// Arbitrary sample table (s, value); spline-resampled onto the internal grid.
inline Kernel make_kernel_from_table(std::vector<std::pair<double, double>> table,
                                     double r0) {
  if (table.size() < 5)
    throw ValidationError("kernel table needs at least 5 samples");
  std::sort(table.begin(), table.end());
  std::vector<double> xs, ys;
  xs.reserve(table.size());
  ys.reserve(table.size());
  for (auto& [s, v] : table) {
    xs.push_back(s);
    ys.push_back(v);
  }
  if (xs.front() > -r0 + 1e-12 || xs.back() < r0 - 1e-12)
    throw ValidationError("kernel table must span [-r0, r0]");
  double vmax = 0.0;
  for (double v : ys) vmax = std::max(vmax, v);
  if (vmax <= 0.0) throw ValidationError("kernel not positive on support");
  for (double v : ys)
    if (v < -1e-14 * vmax)
      throw ValidationError("kernel has a negative sample");
  auto spline = std::make_shared<detail::CubicSpline>(xs, ys);
  return Kernel("table", r0, [spline](double s) { return std::max(0.0, (*spline)(s)); });
}

/// Tilted moment transform k_hat(mu) = int e^{-mu s} k(s) ds  (>= 1, entire).
inline double moment_transform(const Kernel& k, double mu) {
  const auto& v = k.samples();
  const int n = static_cast<int>(v.size());
  const double ds = k.sample_ds();
  std::vector<double> f(n);
  for (int i = 0; i < n; ++i) {
    const double s = -k.r0() + i * ds;
    f[i] = std::exp(-mu * s) * v[i];
  }
  return detail::simpson(f, ds);
}

/// Scale factor 1/S0 making the discrete untilted lattice sum exactly 1.
/// Shared by the cell circulant and the open-line weights so both realize the
/// same discrete operator.
inline double lattice_scale(const Kernel& k, double dx) {
  const int L = static_cast<int>(std::floor(k.r0() / dx + 1e-9));
  double s = 0.0;
  for (int l = -L; l <= L; ++l) s += k(l * dx);
  s *= dx;
  if (!(s > 0.0)) throw ValidationError("kernel lattice sum is not positive");
  return 1.0 / s;
}

/// Exact one-cell reduction of the tilted convolution for p-periodic fields.
struct CirculantWeights {
  int n_x = 0;
  double dx = 0.0;
  double nu = 0.0;  // effective tilt mu*xi
  std::vector<double> w;  // offset-indexed, size n_x
  double row_sum = 0.0;   // discrete k_hat(nu)

  void apply(const double* u, double* out, std::vector<double>& ubuf) const {
    ubuf.resize(2 * static_cast<size_t>(n_x));
    std::copy(u, u + n_x, ubuf.begin());
    std::copy(u, u + n_x, ubuf.begin() + n_x);
    convolve_valid(w.data(), n_x, ubuf.data(), out, n_x);
  }
};

inline CirculantWeights periodize(const Kernel& k, const TiltedDirection& td,
                                  double p, int n_x) {
  td.validate();
  if (n_x < 8) throw ValidationError("periodize: n_x must be >= 8");
  if (!(p > 0.0)) throw ValidationError("periodize: p must be positive");
  CirculantWeights cw;
  cw.n_x = n_x;
  cw.dx = p / n_x;
  cw.nu = td.nu();
  cw.w.assign(n_x, 0.0);
  const double scale = lattice_scale(k, cw.dx);
  const int L = static_cast<int>(std::floor(k.r0() / cw.dx + 1e-9));
  for (int l = -L; l <= L; ++l) {
    const double s = l * cw.dx;
    const double kv = k(s);
    if (kv == 0.0) continue;
    cw.w[wrap_index(l, n_x)] += cw.dx * scale * kv * std::exp(-cw.nu * s);
  }
  cw.row_sum = 0.0;
  for (double x : cw.w) cw.row_sum += x;
  return cw;
}

/// Untilted open-line weights dx*k(l*dx)/S0 for l in [-half, half].
struct LineWeights {
  int half = 0;
  double dx = 0.0;
  std::vector<double> w;  // size 2*half+1, centered
};

inline LineWeights line_weights(const Kernel& k, double dx) {
  LineWeights lw;
  lw.dx = dx;
  lw.half = static_cast<int>(std::floor(k.r0() / dx + 1e-9));
  lw.w.assign(2 * lw.half + 1, 0.0);
  const double scale = lattice_scale(k, dx);
  for (int l = -lw.half; l <= lw.half; ++l)
    lw.w[l + lw.half] = dx * scale * k(l * dx);
  return lw;
}

}  // namespace nlkpp
