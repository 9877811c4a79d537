#include <catch2/catch_amalgamated.hpp>
#include <numbers>
#include <random>

#include "nlkpp/linear_evolution.hpp"
#include "../oracles.hpp"

using namespace nlkpp;
using Catch::Matchers::WithinAbs;

namespace {

const PeriodicCell kCell{1.0, 2.0, 128, 64};

LinearOperatorBundle make_bundle(const Kernel& k, const PeriodicField& a, double mu) {
  return LinearOperatorBundle(periodize(k, {+1, mu}, a.cell().p, a.cell().n_x), a);
}

}  // namespace

TEST_CASE("constants are fixed points of the untilted drift-free step") {
  const Kernel k = make_kernel("biweight", 1.0);
  const auto a = evaluate_fourier({0.0, {}}, kCell);
  auto b = make_bundle(k, a, 0.0);
  StepWorkspace ws;
  std::vector<double> u(kCell.n_x, 1.0);
  step_linear(u, 0, b, ws);
  for (double v : u) REQUIRE_THAT(v, WithinAbs(1.0, 1e-12));
}

TEST_CASE("constant coefficient gives the scalar exponential") {
  const Kernel k = make_kernel("biweight", 1.0);
  const double alpha = 0.7;
  const auto a = evaluate_fourier({alpha, {}}, kCell);
  auto b = make_bundle(k, a, 0.0);
  StepWorkspace ws;

  std::vector<double> u(kCell.n_x, 1.0);
  step_linear(u, 0, b, ws);
  for (double v : u)
    REQUIRE_THAT(v, WithinAbs(std::exp(alpha * kCell.dt()), 1e-13));

  const auto m = monodromy_apply(std::vector<double>(kCell.n_x, 1.0), b, ws);
  for (double v : m) REQUIRE_THAT(v, WithinAbs(std::exp(alpha * kCell.T), 1e-8));
}

TEST_CASE("positivity and order preservation") {
  const Kernel k = make_kernel("biweight", 1.0);
  const auto a = evaluate_fourier({0.5, {{1, 1, 0.3, 0.2}}}, kCell);
  auto b = make_bundle(k, a, 0.5);
  StepWorkspace ws;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  std::vector<double> u(kCell.n_x), v(kCell.n_x);
  for (int i = 0; i < kCell.n_x; ++i) {
    u[i] = unif(rng);
    v[i] = u[i] + 0.5 * unif(rng);
  }
  auto mu_ = monodromy_apply(u, b, ws);
  auto mv = monodromy_apply(v, b, ws);
  for (int i = 0; i < kCell.n_x; ++i) {
    REQUIRE(mu_[i] >= -1e-12);
    REQUIRE(mu_[i] <= mv[i] + 1e-12);
  }

  // strict positivity from nonnegative nonzero data
  std::vector<double> spike(kCell.n_x, 0.0);
  spike[5] = 1.0;
  auto ms = monodromy_apply(spike, b, ws);
  for (double x : ms) REQUIRE(x > 0.0);
}

TEST_CASE("monodromy is linear") {
  const Kernel k = make_kernel("biweight", 1.0);
  const auto a = evaluate_fourier({0.5, {{0, 1, 0.3, 0.0}}}, kCell);
  auto b = make_bundle(k, a, 0.0);
  StepWorkspace ws;
  std::vector<double> u(kCell.n_x);
  for (int i = 0; i < kCell.n_x; ++i) u[i] = 1.0 + std::sin(2.0 * std::numbers::pi * i / kCell.n_x);
  auto m1 = monodromy_apply(u, b, ws);
  std::vector<double> u2 = u;
  for (double& x : u2) x *= 2.0;
  auto m2 = monodromy_apply(u2, b, ws);
  for (int i = 0; i < kCell.n_x; ++i) REQUIRE(m2[i] == 2.0 * m1[i]);
}

TEST_CASE("separable coefficient factorizes through the scalar exponential") {
  // a(t,x) = alpha(t) + beta(x): monodromy = exp(int alpha) * monodromy(beta)
  const Kernel k = make_kernel("biweight", 1.0);
  const FourierTable alpha_tab{0.2, {{1, 0, 0.4, 0.3}}};
  const FourierTable beta_tab{0.3, {{0, 1, 0.25, 0.0}}};
  FourierTable sum = alpha_tab;
  sum.constant += beta_tab.constant;
  sum.modes.insert(sum.modes.end(), beta_tab.modes.begin(), beta_tab.modes.end());

  const auto a_sum = evaluate_fourier(sum, kCell);
  const auto a_beta = evaluate_fourier(beta_tab, kCell);
  auto b_sum = make_bundle(k, a_sum, 0.4);
  auto b_beta = make_bundle(k, a_beta, 0.4);
  StepWorkspace ws;

  std::vector<double> u(kCell.n_x);
  for (int i = 0; i < kCell.n_x; ++i)
    u[i] = 1.0 + 0.4 * std::cos(2.0 * std::numbers::pi * i / kCell.n_x);
  const auto msum = monodromy_apply(u, b_sum, ws);
  const auto mbeta = monodromy_apply(u, b_beta, ws);
  // alpha has zero-mean oscillation plus constant 0.2, so the factor is e^{0.2 T}
  const double factor = std::exp(
      oracles::integrate([&](double t) { return 0.2 + 0.4 * std::cos(2.0 * std::numbers::pi * t + 0.3); },
                         0.0, 1.0, 1e-14));
  for (int i = 0; i < kCell.n_x; ++i)
    REQUIRE_THAT(msum[i], WithinAbs(factor * mbeta[i], 1e-8));
}

TEST_CASE("step doubling converges at 4th order on time-constant media") {
  const Kernel k = make_kernel("biweight", 1.0);
  auto run = [&](int n_t) {
    const PeriodicCell cell{1.0, 2.0, n_t, 64};
    const auto a = evaluate_fourier({0.3, {{0, 1, 0.25, 0.4}}}, cell);
    auto b = make_bundle(k, a, 0.6);
    StepWorkspace ws;
    std::vector<double> u(cell.n_x);
    for (int i = 0; i < cell.n_x; ++i)
      u[i] = 1.0 + 0.3 * std::sin(2.0 * std::numbers::pi * i / cell.n_x);
    return monodromy_apply(u, b, ws);
  };
  const auto c1 = run(32), c2 = run(64), c3 = run(128);
  double e12 = 0.0, e23 = 0.0;
  for (size_t i = 0; i < c1.size(); ++i) {
    e12 = std::max(e12, std::abs(c2[i] - c1[i]));
    e23 = std::max(e23, std::abs(c3[i] - c2[i]));
  }
  REQUIRE(e23 * 12.0 <= e12);  // >= 4th order would give a factor 16
}

TEST_CASE("the explicit-step sanity bound is enforced") {
  const Kernel k = make_kernel("biweight", 1.0);
  const PeriodicCell tiny{1.0, 2.0, 8, 64};  // dt = 1/8 with a large coefficient
  const auto a = evaluate_fourier({6.0, {}}, tiny);
  REQUIRE_THROWS_AS(make_bundle(k, a, 0.0), ValidationError);
}

TEST_CASE("non-finite states abort with a diagnostic") {
  const Kernel k = make_kernel("biweight", 1.0);
  const auto a = evaluate_fourier({0.5, {}}, kCell);
  auto b = make_bundle(k, a, 0.0);
  StepWorkspace ws;
  std::vector<double> u(kCell.n_x, 1.0);
  u[3] = std::numeric_limits<double>::quiet_NaN();
  REQUIRE_THROWS_AS(step_linear(u, 0, b, ws), NumericalError);
}
