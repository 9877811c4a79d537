#pragma once

#include <array>
#include <cstring>
#include <map>
#include <random>
#include <vector>

#include "nlkpp/spectrum.hpp"

namespace nlkpp {

/// Memoized lambda0(xi, mu) evaluations for a fixed medium and grid.
class EigenProblem {
 public:
  EigenProblem(const Kernel& kernel, const PeriodicField& a0, EigenOptions opts = {})
      : kernel_(&kernel), a0_(&a0), opts_(opts) {
    opts_.want_gap = false;
    opts_.want_residual = false;
  }

  const Kernel& kernel() const { return *kernel_; }
  const PeriodicField& a0() const { return *a0_; }
  const PeriodicCell& cell() const { return a0_->cell(); }

  double lambda(int xi, double mu) const {
    const Key key{xi, bits(mu)};
    {
      std::lock_guard<std::mutex> lk(mu_);
      auto it = cache_.find(key);
      if (it != cache_.end()) return it->second;
    }
    EigenResult r = principal_eigen(*kernel_, TiltedDirection{xi, mu}, *a0_, opts_);
    std::lock_guard<std::mutex> lk(mu_);
    cache_.emplace(key, r.lambda0);
    return r.lambda0;
  }

  double q(int xi, double mu) const { return lambda(xi, mu) / mu; }

  /// Full eigen data (phi etc.); not cached, call sparingly.
  EigenResult eigen(int xi, double mu, const EigenOptions& o) const {
    return principal_eigen(*kernel_, TiltedDirection{xi, mu}, *a0_, o);
  }

 private:
  struct Key {
    int xi;
    std::uint64_t mu_bits;
    bool operator<(const Key& o) const {
      return xi != o.xi ? xi < o.xi : mu_bits < o.mu_bits;
    }
  };
  static std::uint64_t bits(double x) {
    std::uint64_t b;
    std::memcpy(&b, &x, sizeof b);
    return b;
  }

  const Kernel* kernel_;
  const PeriodicField* a0_;
  EigenOptions opts_;
  mutable std::map<Key, double> cache_;
  mutable std::mutex mu_;
};

struct SpeedOptions {
  double bracket_base = 0.05;
  double bracket_growth = 2.0;
  double mu_max = 100.0;
  double golden_tol = 1e-5;
  bool with_diagnostics = true;
  int n_derivative_samples = 10;
  int n_convexity_triples = 30;
  double fd_step = 1e-4;
  std::uint64_t seed = 0;
};

struct SpeedSample {
  double mu, lambda, q;
};

struct DerivativeCheck {
  double mu, lambda_prime, q, margin;  // margin = q - lambda' (> 0 expected below mu*)
};

struct ConvexityCheck {
  double mu1, mu2, alpha, slack;  // slack = alpha*l1+(1-alpha)*l2 - l(mid) (>= -tol)
};

struct SpeedResult {
  int xi = +1;
  double c_star = 0.0;
  double mu_star = 0.0;
  double bracket_lo = 0.0, bracket_hi = 0.0;
  std::vector<SpeedSample> samples;
  std::vector<DerivativeCheck> derivative_checks;
  std::vector<ConvexityCheck> convexity_checks;
  double optimality = 0.0;  // |mu* lambda'(mu*) - lambda(mu*)|
  int convexity_violations = 0;
  int derivative_violations = 0;
};

namespace detail {

inline double lambda_prime(const EigenProblem& prob, int xi, double mu, double h) {
  // central differences with one Richardson step-halving
  auto D = [&](double hh) {
    return (prob.lambda(xi, mu + hh) - prob.lambda(xi, mu - hh)) / (2.0 * hh);
  };
  return (4.0 * D(h / 2.0) - D(h)) / 3.0;
}

}  // namespace detail

/// Convexity triples on an equally spaced mu grid; alpha in {1/4, 1/2, 3/4}
/// chosen so the blend lands exactly on a grid point (every lambda reused).
inline std::vector<ConvexityCheck> convexity_suite(const EigenProblem& prob, int xi,
                                                   double mu_hi, int n_grid,
                                                   int n_triples, std::uint64_t seed) {
  const double h = mu_hi / n_grid;
  std::vector<std::array<int, 3>> cand;  // i, j, alpha index (1..3 quarters)
  for (int i = 1; i <= n_grid; ++i)
    for (int j = i + 1; j <= n_grid; ++j)
      for (int qa = 1; qa <= 3; ++qa)
        if ((qa * i + (4 - qa) * j) % 4 == 0) cand.push_back({i, j, qa});
  std::mt19937_64 rng(seed);
  std::shuffle(cand.begin(), cand.end(), rng);
  if (static_cast<int>(cand.size()) > n_triples) cand.resize(n_triples);

  std::vector<ConvexityCheck> out;
  for (auto [i, j, qa] : cand) {
    const double alpha = qa / 4.0;
    const int mid = (qa * i + (4 - qa) * j) / 4;
    const double l1 = prob.lambda(xi, i * h);
    const double l2 = prob.lambda(xi, j * h);
    const double lm = prob.lambda(xi, mid * h);
    out.push_back({i * h, j * h, alpha, alpha * l1 + (1.0 - alpha) * l2 - lm});
  }
  return out;
}

/// c*(xi) = inf_{mu>0} lambda0(xi,mu,a0)/mu by geometric bracket scan plus
/// golden-section minimization (valid: lambda convex, lambda(0) > 0).
inline SpeedResult spreading_speed(const EigenProblem& prob, int xi,
                                   const SpeedOptions& opts = {}) {
  SpeedResult res;
  res.xi = xi;
  const double lambda0_at0 = prob.lambda(xi, 0.0);
  if (!(lambda0_at0 > 0.0))
    throw ValidationError("zero state not linearly unstable (lambda0(a0) = " +
                          std::to_string(lambda0_at0) + " <= 0)");

  auto record = [&](double mu) {
    const double l = prob.lambda(xi, mu);
    res.samples.push_back({mu, l, l / mu});
    return l / mu;
  };

  // geometric scan until the quotient increases on two consecutive samples
  std::vector<double> mus, qs;
  int increases = 0;
  for (double mu = opts.bracket_base;; mu *= opts.bracket_growth) {
    if (mu > opts.mu_max)
      throw NumericalError("bracket scan exceeded mu_max without locating a minimum");
    mus.push_back(mu);
    qs.push_back(record(mu));
    const int m = static_cast<int>(qs.size());
    if (m >= 2) {
      increases = qs[m - 1] > qs[m - 2] ? increases + 1 : 0;
      if (increases >= 2) break;
    }
  }
  int jmin = 0;
  for (int j = 1; j < static_cast<int>(qs.size()); ++j)
    if (qs[j] < qs[jmin]) jmin = j;
  double lo = jmin == 0 ? mus[0] / opts.bracket_growth : mus[jmin - 1];
  double hi = mus[std::min<int>(jmin + 1, mus.size() - 1)];
  res.bracket_lo = lo;
  res.bracket_hi = hi;

  // golden-section on q(mu)
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - gr * (hi - lo);
  double d = lo + gr * (hi - lo);
  double qc = record(c), qd = record(d);
  while (hi - lo > opts.golden_tol) {
    if (qc < qd) {
      hi = d;
      d = c;
      qd = qc;
      c = hi - gr * (hi - lo);
      qc = record(c);
    } else {
      lo = c;
      c = d;
      qc = qd;
      d = lo + gr * (hi - lo);
      qd = record(d);
    }
  }
  res.mu_star = qc < qd ? c : d;
  res.c_star = std::min(qc, qd);
  if (!(res.bracket_lo < res.mu_star && res.mu_star < res.bracket_hi))
    throw NumericalError("minimizer not strictly interior to the bracket");

  std::sort(res.samples.begin(), res.samples.end(),
            [](const SpeedSample& a, const SpeedSample& b) { return a.mu < b.mu; });
  res.samples.erase(std::unique(res.samples.begin(), res.samples.end(),
                                [](const SpeedSample& a, const SpeedSample& b) {
                                  return a.mu == b.mu;
                                }),
                    res.samples.end());

  if (opts.with_diagnostics) {
    for (int j = 1; j <= opts.n_derivative_samples; ++j) {
      const double mu = res.mu_star * j / (opts.n_derivative_samples + 1);
      const double lp = detail::lambda_prime(prob, xi, mu, opts.fd_step);
      const double qq = prob.q(xi, mu);
      res.derivative_checks.push_back({mu, lp, qq, qq - lp});
      if (!(qq - lp > 0.0)) ++res.derivative_violations;
    }
    const double lps = detail::lambda_prime(prob, xi, res.mu_star, opts.fd_step);
    res.optimality = std::abs(res.mu_star * lps - prob.lambda(xi, res.mu_star));
    res.convexity_checks = convexity_suite(prob, xi, 1.2 * res.mu_star, 12,
                                           opts.n_convexity_triples, opts.seed);
    for (const auto& ck : res.convexity_checks)
      if (ck.slack < -1e-8) ++res.convexity_violations;
  }
  return res;
}

}  // namespace nlkpp
