#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "nlkpp/steady_state.hpp"

namespace nlkpp {

/// Uniform line grid aligned with the periodic cell lattice (dx = p/n_x).
struct LineGeom {
  double x_l = 0.0;
  double dx = 0.0;
  int n = 0;  // interior nodes, x_i = x_l + i*dx

  double x(int i) const { return x_l + i * dx; }
  double x_r() const { return x(n - 1); }
};

/// Truncated-line state: interior values plus implicit pads (left clamped to
/// u*(t,x), right clamped to 0) wide enough for the nonlocal stencil.
struct LineState {
  LineGeom g;
  std::vector<double> u;
  double t = 0.0;
  long step = 0;
};

/// Pad clamping outside the truncated line. The default (u* on the left,
/// zero on the right) realizes membership of X+(xi) at the truncation.
/// Fn supplies values through a callback (node index may lie outside the
/// interior range); the wave iteration uses it to continue the exponential
/// tails analytically, which a pulled front needs.
enum class PadMode { UStar, Zero, Fn };

class LineContext {
 public:
  LineContext(const Kernel& kernel, const FitnessSpec& fs, const PeriodicField& u_star,
              LineGeom geom, double dt, PadMode left = PadMode::UStar,
              PadMode right = PadMode::Zero)
      : fs_(&fs), ustar_(u_star), geom_(geom), dt_(dt),
        lw_(line_weights(kernel, geom.dx)), cell_(fs.a0.cell()),
        left_pad_(left), right_pad_(right) {
    if (std::abs(geom_.dx - cell_.dx()) > 1e-12 * cell_.dx())
      throw ValidationError("line grid spacing must equal the cell dx");
    const double col = geom_.x_l / geom_.dx;
    col0_ = static_cast<int>(std::llround(col));
    if (std::abs(col - col0_) > 1e-9)
      throw ValidationError("line origin must sit on the cell lattice");
    sentinel_ = u_star.max() + 1.0;
    const double scale = 2.0 + fs.a0.sup() + fs.b.sup() * (sentinel_ + 1.0);
    if (!(dt_ * scale < 0.5))
      throw ValidationError("explicit step sanity bound violated on the line "
                            "(reduce dt)");
  }

  const LineGeom& geom() const { return geom_; }
  double dt() const { return dt_; }
  int pad() const { return lw_.half; }
  double sentinel() const { return sentinel_; }
  const UStarSampler& ustar() const { return ustar_; }
  const FitnessSpec& fitness() const { return *fs_; }
  const PeriodicCell& cell() const { return cell_; }

  /// Absolute cell column of line node i (i may address pad positions too).
  int column(int i) const { return wrap_index(col0_ + i, cell_.n_x); }

  /// dv/dt at stage time ts for interior values v; pads are refreshed here.
  using PadFn = std::function<double(double ts, int node_index)>;
  void set_right_pad(PadFn f) {
    right_fn_ = std::move(f);
    right_pad_ = PadMode::Fn;
  }

  void rhs(double ts, const std::vector<double>& v, std::vector<double>& out) {
    const int n = geom_.n, h = lw_.half;
    uext_.resize(static_cast<size_t>(n) + 2 * h);
    for (int j = 0; j < h; ++j)
      uext_[j] = left_pad_ == PadMode::UStar ? ustar_(ts, col0_ - h + j) : 0.0;
    std::copy(v.begin(), v.end(), uext_.begin() + h);
    switch (right_pad_) {
      case PadMode::UStar:
        for (int j = 0; j < h; ++j) uext_[h + n + j] = ustar_(ts, col0_ + n + j);
        break;
      case PadMode::Fn:
        for (int j = 0; j < h; ++j) uext_[h + n + j] = right_fn_(ts, n + j);
        break;
      case PadMode::Zero:
        std::fill(uext_.begin() + h + n, uext_.end(), 0.0);
        break;
    }

    out.resize(n);
    convolve_valid(lw_.w.data(), 2 * h + 1, uext_.data(), out.data(), n);

    blend_line(fs_->a0, ts, a_line_);
    blend_line(fs_->b, ts, b_line_);
    for (int i = 0; i < n; ++i)
      out[i] += v[i] * (a_line_[i] - b_line_[i] * std::max(v[i], 0.0)) - v[i];
  }

  void rk4_step(LineState& s) {
    const int n = geom_.n;
    const double dt = dt_;
    rhs(s.t, s.u, k1_);
    stage_.resize(n);
    for (int i = 0; i < n; ++i) stage_[i] = s.u[i] + 0.5 * dt * k1_[i];
    rhs(s.t + 0.5 * dt, stage_, k2_);
    for (int i = 0; i < n; ++i) stage_[i] = s.u[i] + 0.5 * dt * k2_[i];
    rhs(s.t + 0.5 * dt, stage_, k3_);
    for (int i = 0; i < n; ++i) stage_[i] = s.u[i] + dt * k3_[i];
    rhs(s.t + dt, stage_, k4_);
    for (int i = 0; i < n; ++i)
      s.u[i] += dt / 6.0 * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
    s.t += dt;
    ++s.step;
    check_sentinel(s);
  }

 private:
  void blend_line(const PeriodicField& f, double ts, std::vector<double>& out) {
    const double sidx = ts / cell_.dt();
    const double kf = std::floor(sidx);
    const double theta = sidx - kf;
    const int k = static_cast<int>(kf);
    const double* r0 = f.row(k);
    const double* r1 = f.row(k + 1);
    out.resize(geom_.n);
    for (int i = 0; i < geom_.n; ++i) {
      const int c = column(i);
      out[i] = (1.0 - theta) * r0[c] + theta * r1[c];
    }
  }

  void check_sentinel(const LineState& s) const {
    for (int i = 0; i < geom_.n; ++i) {
      const double v = s.u[i];
      if (!(v >= -1e-9) || !(v <= sentinel_) || !std::isfinite(v))
        throw NumericalError("line state breached the sentinel at t=" +
                             std::to_string(s.t) + ", step " + std::to_string(s.step) +
                             ", x=" + std::to_string(geom_.x(i)) +
                             ", value=" + std::to_string(v));
    }
  }

  const FitnessSpec* fs_;
  UStarSampler ustar_;
  LineGeom geom_;
  double dt_;
  LineWeights lw_;
  PeriodicCell cell_;
  PadMode left_pad_ = PadMode::UStar;
  PadMode right_pad_ = PadMode::Zero;
  PadFn right_fn_;
  int col0_ = 0;
  double sentinel_ = 0.0;
  std::vector<double> uext_, a_line_, b_line_, k1_, k2_, k3_, k4_, stage_;
};

inline void step_nonlinear(LineState& s, LineContext& ctx) { ctx.rk4_step(s); }

enum class FrontDataKind { Step, Exponential, Bump };

inline FrontDataKind front_data_kind(const std::string& s) {
  if (s == "step") return FrontDataKind::Step;
  if (s == "exponential") return FrontDataKind::Exponential;
  if (s == "bump") return FrontDataKind::Bump;
  throw ValidationError("unknown front data kind '" + s +
                        "' (step, exponential, bump)");
}

struct FrontDataParams {
  double x0 = 0.0;     // front location / bump center
  double mu = 1.0;     // exponential decay rate
  double sigma = 0.5;  // bump height
  double core = 1.0;   // bump flat-core half width
  double taper = 1.0;  // bump taper width (support = core + taper each side)
};

inline LineState make_front_data(FrontDataKind kind, LineContext& ctx,
                                 const FrontDataParams& prm = {}) {
  LineState s;
  s.g = ctx.geom();
  s.u.assign(s.g.n, 0.0);
  const double u_min = ctx.ustar().field().min();
  for (int i = 0; i < s.g.n; ++i) {
    const double x = s.g.x(i);
    const double us0 = ctx.ustar()(0.0, ctx.column(i));
    switch (kind) {
      case FrontDataKind::Step:
        s.u[i] = x <= prm.x0 ? us0 : 0.0;
        break;
      case FrontDataKind::Exponential: {
        const double e = -prm.mu * (x - prm.x0);
        s.u[i] = std::min(us0, e > 30.0 ? us0 : u_min * std::exp(e));
        break;
      }
      case FrontDataKind::Bump: {
        const double r = std::abs(x - prm.x0);
        if (r <= prm.core) s.u[i] = prm.sigma;
        else if (r <= prm.core + prm.taper) {
          const double c = std::cos(0.5 * std::numbers::pi * (r - prm.core) / prm.taper);
          s.u[i] = prm.sigma * c * c;
        }
        break;
      }
    }
  }
  return s;
}

/// Rightmost (xi=+1) or leftmost (xi=-1) linearly interpolated crossing of the
/// threshold value; x_L / x_R conventions per the absorbed / saturated cases.
inline double front_position(const LineState& s, double thresh, int xi = +1) {
  const int n = s.g.n;
  if (xi == +1) {
    if (s.u[n - 1] >= thresh) return s.g.x_r();
    for (int i = n - 2; i >= 0; --i)
      if (s.u[i] >= thresh && s.u[i + 1] < thresh) {
        const double f = (s.u[i] - thresh) / (s.u[i] - s.u[i + 1]);
        return s.g.x(i) + f * s.g.dx;
      }
    return s.g.x_l;
  }
  if (s.u[0] >= thresh) return s.g.x_l;
  for (int i = 1; i < n; ++i)
    if (s.u[i] >= thresh && s.u[i - 1] < thresh) {
      const double f = (s.u[i] - thresh) / (s.u[i] - s.u[i - 1]);
      return s.g.x(i) - f * s.g.dx;
    }
  return s.g.x_r();
}

/// Level-crossing trail (t, x_f(t)) at a fixed threshold.
struct FrontTrace {
  double theta = 0.5;        // threshold fraction of min u*
  double thresh = 0.0;       // absolute threshold value
  std::vector<std::pair<double, double>> points;
};

struct SpeedFit {
  double slope = 0.0;
  double intercept = 0.0;
  int n_used = 0;
  std::vector<double> per_period_increments;
};

/// Least-squares slope of x_f against t over the post-burn-in window.
inline SpeedFit estimate_speed(const FrontTrace& trace, double burn_in_fraction,
                               double period = 0.0) {
  if (trace.points.empty()) throw ValidationError("empty front trace");
  const double t_end = trace.points.back().first;
  const double t0 = burn_in_fraction * t_end;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (auto [t, xf] : trace.points) {
    if (t < t0) continue;
    sx += t;
    sy += xf;
    sxx += t * t;
    sxy += t * xf;
    ++n;
  }
  if (n < 20) throw ValidationError("fewer than 20 post-burn-in trace samples");
  SpeedFit fit;
  fit.n_used = n;
  const double det = n * sxx - sx * sx;
  fit.slope = (n * sxy - sx * sy) / det;
  fit.intercept = (sy * sxx - sx * sxy) / det;
  if (period > 0.0) {
    // per-period increments for drift inspection
    double prev_t = -1e300, prev_x = 0.0;
    for (auto [t, xf] : trace.points) {
      if (t < t0) continue;
      if (prev_t < -1e299) {
        prev_t = t;
        prev_x = xf;
        continue;
      }
      if (t - prev_t >= period - 1e-9) {
        fit.per_period_increments.push_back(xf - prev_x);
        prev_t = t;
        prev_x = xf;
      }
    }
  }
  return fit;
}

}  // namespace nlkpp
