#include <catch2/catch_amalgamated.hpp>
#include <numbers>
#include <random>

#include "nlkpp/spectrum.hpp"
#include "../oracles.hpp"

using namespace nlkpp;
using Catch::Matchers::WithinAbs;

namespace {
const PeriodicCell kCell{1.0, 2.0, 256, 128};
const double kPi = std::numbers::pi;

EigenOptions tight() {
  EigenOptions eo;
  eo.tol = 1e-12;
  return eo;
}
}  // namespace

TEST_CASE("constant medium: lambda0 = khat(mu) - 1 + alpha with phi = 1") {
  const Kernel k = make_kernel("biweight", 1.0);

  SECTION("mu = 0") {
    const auto a = evaluate_fourier({0.5, {}}, kCell);
    const auto r = principal_eigen(k, {+1, 0.0}, a, tight());
    REQUIRE_THAT(r.lambda0, WithinAbs(0.5, 1e-9));
    for (int i = 0; i < kCell.n_x; ++i)
      REQUIRE_THAT(r.phi.at(3, i), WithinAbs(1.0, 1e-9));
    REQUIRE(r.residual < 1e-10);
    REQUIRE(existence_check(a, r.lambda0));
  }
  SECTION("mu = 1") {
    const auto a = evaluate_fourier({0.5, {}}, kCell);
    const auto r = principal_eigen(k, {+1, 1.0}, a, tight());
    const double khat1 = oracles::khat(
        [](double s) { return oracles::biweight_profile(s); }, 1.0, 1.0);
    REQUIRE_THAT(r.lambda0, WithinAbs(khat1 - 1.0 + 0.5, 1e-6));
  }
  SECTION("time oscillation averages out") {
    const auto a = evaluate_fourier({0.5, {{1, 0, 1.0, -kPi / 2.0}}}, kCell);
    const auto r = principal_eigen(k, {+1, 1.0}, a, tight());
    const double khat1 = oracles::khat(
        [](double s) { return oracles::biweight_profile(s); }, 1.0, 1.0);
    REQUIRE_THAT(r.lambda0, WithinAbs(khat1 - 1.0 + 0.5, 1e-6));
  }
}

TEST_CASE("spectral properties on a heterogeneous medium") {
  const Kernel k = make_kernel("biweight", 1.0);
  const FourierTable het{1.0, {{0, 1, 0.3, 0.0}, {1, 0, 0.3, 0.0}}};
  const auto a = evaluate_fourier(het, kCell);

  SECTION("shift invariance in the coefficient") {
    const auto base = principal_eigen(k, {+1, 0.7}, a, tight());
    for (double delta : {-0.3, 0.2, 1.0}) {
      FourierTable shifted = het;
      shifted.constant += delta;
      const auto r =
          principal_eigen(k, {+1, 0.7}, evaluate_fourier(shifted, kCell), tight());
      REQUIRE_THAT(r.lambda0 - base.lambda0, WithinAbs(delta, 1e-9));
    }
  }

  SECTION("monotonicity in the coefficient") {
    const auto base = principal_eigen(k, {+1, 0.7}, a, tight());
    FourierTable bigger = het;
    bigger.constant += 0.15;
    const auto r =
        principal_eigen(k, {+1, 0.7}, evaluate_fourier(bigger, kCell), tight());
    REQUIRE(base.lambda0 <= r.lambda0 + 1e-9);
  }

  SECTION("reflection identity lambda(xi,-mu) = lambda(-xi,mu)") {
    const auto rp = principal_eigen(k, {+1, -0.8}, a, tight());
    const auto rm = principal_eigen(k, {-1, 0.8}, a, tight());
    REQUIRE_THAT(rp.lambda0, WithinAbs(rm.lambda0, 1e-9));
  }

  SECTION("convexity in mu") {
    auto lam = [&](double mu) {
      return principal_eigen(k, {+1, mu}, a, tight()).lambda0;
    };
    const double l1 = lam(0.2), l2 = lam(0.6);
    for (double alpha : {0.25, 0.5, 0.75}) {
      const double mid = lam(alpha * 0.2 + (1.0 - alpha) * 0.6);
      REQUIRE(alpha * l1 + (1.0 - alpha) * l2 >= mid - 1e-8);
    }
  }

  SECTION("positive normalized eigenfunction with a small defect") {
    // the defect of the stored orbit against the 4th-order time difference is
    // dominated by the linear-in-t coefficient interpolation, O(dt^2); the
    // 1e-5 figure needs the default n_t = 512
    const PeriodicCell dflt{1.0, 2.0, 512, 128};
    const auto r = principal_eigen(k, {+1, 0.7}, evaluate_fourier(het, dflt), tight());
    REQUIRE(r.phi.min() > 0.0);
    REQUIRE_THAT(r.phi.sup(), WithinAbs(1.0, 1e-12));
    REQUIRE(r.residual < 1e-5);
    REQUIRE(r.gap_estimate < 1.0 - 1e-3);
    REQUIRE(r.gap_estimate > 0.0);
  }

  SECTION("residual detector reacts to a perturbed eigenfunction") {
    auto r = principal_eigen(k, {+1, 0.7}, a, tight());
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> unif(-0.01, 0.01);
    for (double& v : r.phi.data()) v *= 1.0 + unif(rng);
    REQUIRE(eigen_residual(r, k, {+1, 0.7}, a) > 1e-3);
  }

  SECTION("grid refinement moves lambda0 by less than 1e-5") {
    const PeriodicCell fine{1.0, 2.0, 2 * kCell.n_t, 2 * kCell.n_x};
    const auto rc = principal_eigen(k, {+1, 0.7}, a, tight());
    const auto rf =
        principal_eigen(k, {+1, 0.7}, evaluate_fourier(het, fine), tight());
    REQUIRE_THAT(rc.lambda0, WithinAbs(rf.lambda0, 1e-5));
  }
}

TEST_CASE("existence criterion boundary is excluded") {
  const auto a = evaluate_fourier({0.5, {}}, kCell);
  REQUIRE_FALSE(existence_check(a, -1.0 + 0.5));  // exactly on the boundary
  REQUIRE(existence_check(a, -1.0 + 0.5 + 1e-6));
}

TEST_CASE("non-convergence carries the last Rayleigh quotients") {
  const Kernel k = make_kernel("biweight", 1.0);
  const auto a = evaluate_fourier({0.5, {{0, 1, 0.3, 0.0}}}, kCell);
  EigenOptions eo;
  eo.tol = 0.0;  // unreachable
  eo.max_iter = 5;
  eo.want_gap = false;
  eo.want_residual = false;
  try {
    principal_eigen(k, {+1, 0.3}, a, eo);
    FAIL("expected EigenNonConvergence");
  } catch (const EigenNonConvergence& e) {
    REQUIRE(e.q1 > 0.0);
    REQUIRE(e.q2 > 0.0);
  }
}
