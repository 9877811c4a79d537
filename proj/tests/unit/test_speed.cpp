#include <catch2/catch_amalgamated.hpp>

#include "nlkpp/speed.hpp"
#include "../oracles.hpp"

using namespace nlkpp;
using Catch::Matchers::WithinAbs;

namespace {

const PeriodicCell kCell{1.0, 2.0, 128, 128};

EigenOptions tight() {
  EigenOptions eo;
  eo.tol = 1e-12;
  return eo;
}

}  // namespace

TEST_CASE("lambda(mu) wrapper on a homogeneous medium") {
  const Kernel k = make_kernel("biweight", 1.0);
  const auto a = evaluate_fourier({1.0, {}}, kCell);
  EigenProblem prob(k, a, tight());

  REQUIRE_THAT(prob.lambda(+1, 0.0), WithinAbs(1.0, 1e-9));
  const double khat2 =
      oracles::khat([](double s) { return oracles::biweight_profile(s); }, 1.0, 2.0);
  REQUIRE_THAT(prob.lambda(+1, 2.0), WithinAbs(khat2, 1e-6));
  // q(mu) -> infinity as mu -> 0+ when lambda(0) > 0
  REQUIRE(prob.q(+1, 0.01) > 50.0);
}

TEST_CASE("homogeneous spreading speed matches the scalar minimization oracle") {
  const Kernel k = make_kernel("biweight", 1.0);
  const auto a = evaluate_fourier({1.0, {}}, kCell);
  EigenProblem prob(k, a, tight());
  SpeedOptions so;
  const auto sp = spreading_speed(prob, +1, so);

  auto khat = [](double mu) {
    return oracles::khat([](double s) { return oracles::biweight_profile(s); }, 1.0, mu);
  };
  const auto [mu_star, c_star] =
      oracles::minimize([&](double mu) { return khat(mu) / mu; }, 0.05, 20.0);
  REQUIRE_THAT(sp.c_star, WithinAbs(c_star, 2e-6));
  REQUIRE_THAT(sp.mu_star, WithinAbs(mu_star, 2e-3));
  REQUIRE(sp.bracket_lo < sp.mu_star);
  REQUIRE(sp.mu_star < sp.bracket_hi);

  // q(mu*) is the sampled minimum
  for (const auto& s : sp.samples)
    if (s.mu >= sp.bracket_lo && s.mu <= sp.bracket_hi) REQUIRE(sp.c_star <= s.q + 1e-12);

  // even kernel, homogeneous medium: both directions agree
  const auto sm = spreading_speed(prob, -1, so);
  REQUIRE_THAT(sp.c_star, WithinAbs(sm.c_star, 1e-8));

  // diagnostics: no violations, interior optimality
  REQUIRE(sp.convexity_violations == 0);
  REQUIRE(sp.derivative_violations == 0);
  REQUIRE(sp.optimality < 1e-4);
  for (const auto& d : sp.derivative_checks) REQUIRE(d.margin > 0.0);
}

TEST_CASE("coefficient shift moves the speed through the shifted quotient") {
  const Kernel k = make_kernel("biweight", 1.0);
  const auto a = evaluate_fourier({1.0, {}}, kCell);
  const auto a_shift = evaluate_fourier({1.1, {}}, kCell);
  EigenProblem prob(k, a, tight());
  EigenProblem prob_shift(k, a_shift, tight());
  SpeedOptions so;
  so.with_diagnostics = false;
  const auto sp = spreading_speed(prob, +1, so);
  const auto sps = spreading_speed(prob_shift, +1, so);
  REQUIRE(sps.c_star > sp.c_star);

  // recompute the shifted minimum from the unshifted lambda samples
  const auto [mu2, c2] = oracles::minimize(
      [&](double mu) { return (prob.lambda(+1, mu) + 0.1) / mu; }, 0.05, 20.0, 1e-9);
  REQUIRE_THAT(sps.c_star, WithinAbs(c2, 1e-7));
}

TEST_CASE("speed is monotone in the growth coefficient") {
  const Kernel k = make_kernel("biweight", 1.0);
  const FourierTable het{1.0, {{0, 1, 0.3, 0.0}}};
  FourierTable bigger = het;
  bigger.constant += 0.1;
  EigenOptions eo = tight();
  const auto a1 = evaluate_fourier(het, kCell);
  const auto a2 = evaluate_fourier(bigger, kCell);
  EigenProblem p1(k, a1, eo), p2(k, a2, eo);
  SpeedOptions so;
  so.with_diagnostics = false;
  REQUIRE(spreading_speed(p1, +1, so).c_star <=
          spreading_speed(p2, +1, so).c_star + 1e-8);
}

TEST_CASE("H2 violation is reported as an error") {
  const Kernel k = make_kernel("biweight", 1.0);
  const auto a = evaluate_fourier({-0.1, {}}, kCell);
  EigenProblem prob(k, a, tight());
  REQUIRE_THROWS_WITH(spreading_speed(prob, +1, {}),
                      Catch::Matchers::ContainsSubstring("not linearly unstable"));
}

TEST_CASE("convexity suite runs clean on the heterogeneous medium") {
  const Kernel k = make_kernel("biweight", 1.0);
  const auto a = evaluate_fourier({1.0, {{0, 1, 0.3, 0.0}, {1, 0, 0.3, 0.0}}}, kCell);
  EigenProblem prob(k, a, tight());
  const auto checks = convexity_suite(prob, +1, 3.0, 12, 30, 0);
  REQUIRE(checks.size() == 30);
  for (const auto& c : checks) REQUIRE(c.slack >= -1e-8);
}
