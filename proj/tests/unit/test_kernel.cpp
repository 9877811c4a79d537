#include <catch2/catch_amalgamated.hpp>

#include "nlkpp/kernel.hpp"
#include "../oracles.hpp"

using namespace nlkpp;
using Catch::Matchers::WithinAbs;

TEST_CASE("built-in kernels are normalized with the expected moments") {
  const Kernel bw = make_kernel("biweight", 1.0);
  // exact polynomial integration: int s^2 (15/16)(1-s^2)^2 ds = 1/7
  REQUIRE_THAT(bw.second_moment(), WithinAbs(1.0 / 7.0, 1e-10));
  REQUIRE_THAT(oracles::integrate([&](double s) { return bw(s); }, -1, 1),
               WithinAbs(1.0, 1e-10));

  const Kernel tw = make_kernel("triweight", 1.0);
  REQUIRE_THAT(tw.second_moment(), WithinAbs(1.0 / 9.0, 1e-10));

  const Kernel bw2 = make_kernel("biweight", 0.7);
  REQUIRE_THAT(bw2.second_moment(), WithinAbs(0.7 * 0.7 / 7.0, 1e-10));

  REQUIRE_THROWS_WITH(make_kernel("gaussian", 1.0),
                      Catch::Matchers::ContainsSubstring("biweight"));
}

TEST_CASE("kernel validation rejects degenerate tables") {
  std::vector<std::pair<double, double>> zeros;
  for (int i = 0; i <= 32; ++i) zeros.emplace_back(-1.0 + i / 16.0, 0.0);
  REQUIRE_THROWS_WITH(make_kernel_from_table(zeros, 1.0),
                      Catch::Matchers::ContainsSubstring("not positive"));

  std::vector<std::pair<double, double>> neg = zeros;
  for (int i = 0; i <= 32; ++i) neg[i].second = oracles::biweight_profile(neg[i].first);
  neg[7].second = -0.05;
  REQUIRE_THROWS_WITH(make_kernel_from_table(neg, 1.0),
                      Catch::Matchers::ContainsSubstring("negative"));

  // non-vanishing endpoint value
  REQUIRE_THROWS(Kernel("clipped", 1.0, [](double s) {
    return std::abs(s) >= 1.0 ? 0.0 : 0.5 + 0.0 * s;
  }));

  // odd asymmetry beyond 1e-12
  REQUIRE_THROWS_WITH(Kernel("skew", 1.0,
                             [](double s) {
                               return oracles::biweight_profile(s) * (1.0 + 1e-6 * s);
                             }),
                      Catch::Matchers::ContainsSubstring("even"));
}

TEST_CASE("moment transform matches the adaptive-quadrature oracle") {
  const Kernel bw = make_kernel("biweight", 1.0);
  REQUIRE_THAT(moment_transform(bw, 0.0), WithinAbs(1.0, 1e-12));
  // small-mu expansion 1 + mu^2 * m2 / 2 = 1 + 0.01/14
  REQUIRE_THAT(moment_transform(bw, 0.1), WithinAbs(1.0 + 0.01 / 14.0, 1e-5));
  const double oracle = oracles::khat([](double s) { return oracles::biweight_profile(s); },
                                      1.0, 0.1);
  REQUIRE_THAT(moment_transform(bw, 0.1), WithinAbs(oracle, 1e-11));

  // closed form at mu = 1: 60 sinh(1) - 45 cosh(1)
  const double khat1 = 60.0 * std::sinh(1.0) - 45.0 * std::cosh(1.0);
  REQUIRE_THAT(moment_transform(bw, 1.0), WithinAbs(khat1, 1e-10));
  REQUIRE_THAT(moment_transform(bw, -1.0),
               WithinAbs(moment_transform(bw, 1.0), 1e-13));
  REQUIRE(moment_transform(bw, 2.5) >= 1.0);
}

TEST_CASE("periodized weights reduce the tilted convolution to one cell") {
  const Kernel bw = make_kernel("biweight", 1.0);

  SECTION("untilted weights sum to exactly 1 after renormalization") {
    const auto cw = periodize(bw, {+1, 0.0}, 2.0, 256);
    REQUIRE_THAT(cw.row_sum, WithinAbs(1.0, 1e-14));
  }

  SECTION("circulant applied to the constant field returns k_hat") {
    const auto cw = periodize(bw, {+1, 1.0}, 2.0, 256);
    std::vector<double> one(256, 1.0), out(256), ubuf;
    cw.apply(one.data(), out.data(), ubuf);
    const double khat1 = 60.0 * std::sinh(1.0) - 45.0 * std::cosh(1.0);
    for (double v : out) REQUIRE_THAT(v, WithinAbs(khat1, 1e-6));
  }

  SECTION("p = 0.5 < 2 r0 wraps several images and keeps the row sum") {
    const auto cw = periodize(bw, {+1, 1.0}, 0.5, 64);
    // wrap count: support (-1,1) against cell 0.5 -> at least 4 images
    const double direct = oracles::lattice_sum(
        [](double s) { return oracles::biweight_profile(s); }, 1.0, 1.0, 0.5 / 64);
    REQUIRE_THAT(cw.row_sum, WithinAbs(direct, 1e-12));
  }

  SECTION("evenness: mu -> -mu equals index reflection") {
    const auto wplus = periodize(bw, {+1, 0.8}, 2.0, 128).w;
    const auto wminus = periodize(bw, {+1, -0.8}, 2.0, 128).w;
    for (int j = 0; j < 128; ++j)
      REQUIRE_THAT(wminus[j], WithinAbs(wplus[wrap_index(-j, 128)], 1e-15));
  }

  SECTION("xi folds into the sign of the tilt") {
    const auto a = periodize(bw, {-1, 0.8}, 2.0, 128).w;
    const auto b = periodize(bw, {+1, -0.8}, 2.0, 128).w;
    for (int j = 0; j < 128; ++j) REQUIRE(a[j] == b[j]);
  }
}

TEST_CASE("refinement convergence of the discrete operator") {
  const Kernel bw = make_kernel("biweight", 1.0);
  auto apply_at = [&](int n_x, double x) {
    const auto cw = periodize(bw, {+1, 0.5}, 2.0, n_x);
    std::vector<double> u(n_x), out(n_x), ubuf;
    for (int i = 0; i < n_x; ++i)
      u[i] = std::exp(std::sin(std::numbers::pi * (2.0 * i / n_x)));
    cw.apply(u.data(), out.data(), ubuf);
    const int i = static_cast<int>(std::round(x / (2.0 / n_x)));
    return out[i];
  };
  const double c1 = apply_at(64, 0.5);
  const double c2 = apply_at(128, 0.5);
  const double c3 = apply_at(256, 0.5);
  REQUIRE(std::abs(c3 - c2) * 3.0 <= std::abs(c2 - c1));
}

TEST_CASE("line weights share the cell renormalization") {
  const Kernel bw = make_kernel("biweight", 1.0);
  const double dx = 2.0 / 256;
  const auto lw = line_weights(bw, dx);
  double sum = 0.0;
  for (double w : lw.w) sum += w;
  REQUIRE_THAT(sum, WithinAbs(1.0, 1e-14));
  const auto cw = periodize(bw, {+1, 0.0}, 2.0, 256);
  // same lattice, same scale: the circulant is the wrapped line stencil
  REQUIRE_THAT(cw.w[0], WithinAbs(lw.w[lw.half], 1e-18));
}
