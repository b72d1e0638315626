#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "smpp/special.hpp"

using Catch::Approx;

TEST_CASE("lbeta matches the closed form on integer shapes") {
  // Beta(2,3) = 1!2!/4! = 1/12.
  CHECK(smpp::lbeta(2.0, 3.0) == Approx(std::log(1.0 / 12.0)).margin(1e-14));
  CHECK(smpp::lbeta(1.0, 1.0) == Approx(0.0).margin(1e-14));
}

TEST_CASE("regularized incomplete beta matches frozen references") {
  // Reference values computed with 50-digit arithmetic.
  CHECK(smpp::inc_beta(2.5, 3.5, 0.3) ==
        Approx(0.29675298929566637832).margin(1e-12));
  // Large symmetric shapes stress the continued fraction.
  CHECK(smpp::inc_beta(287.5, 287.5, 0.52) ==
        Approx(0.83125419028208034706).margin(1e-12));
}

TEST_CASE("incomplete beta endpoints and symmetry") {
  CHECK(smpp::inc_beta(2.0, 5.0, 0.0) == 0.0);
  CHECK(smpp::inc_beta(2.0, 5.0, -0.5) == 0.0);
  CHECK(smpp::inc_beta(2.0, 5.0, 1.0) == 1.0);
  CHECK(smpp::inc_beta(2.0, 5.0, 1.5) == 1.0);
  for (double x : {0.1, 0.35, 0.6, 0.9}) {
    CHECK(smpp::inc_beta(2.0, 7.0, x) ==
          Approx(1.0 - smpp::inc_beta(7.0, 2.0, 1.0 - x)).margin(1e-13));
  }
  CHECK_THROWS_AS(smpp::inc_beta(0.0, 1.0, 0.5), smpp::numeric_error);
}

TEST_CASE("incomplete beta agrees with direct quadrature of the density") {
  const double a = 3.2;
  const double b = 1.7;
  const double x = 0.44;
  const double direct = oracles::integrate(
      [&](double t) {
        return std::exp((a - 1.0) * std::log(t) + (b - 1.0) * std::log1p(-t) -
                        smpp::lbeta(a, b));
      },
      1e-12, x, 1e-13);
  CHECK(smpp::inc_beta(a, b, x) == Approx(direct).margin(1e-10));
}

TEST_CASE("lower incomplete gamma matches the closed form for shape two") {
  for (double x : {0.2, 1.0, 3.5, 10.0}) {
    const double expected = 1.0 - std::exp(-x) * (1.0 + x);
    CHECK(smpp::inc_gamma_lower(2.0, x) == Approx(expected).margin(1e-13));
  }
  CHECK(smpp::inc_gamma_lower(2.0, 0.0) == 0.0);
  CHECK_THROWS_AS(smpp::inc_gamma_lower(-1.0, 1.0), smpp::numeric_error);
}

TEST_CASE("normal cdf hits the textbook quantiles") {
  CHECK(smpp::normal_cdf(0.0) == Approx(0.5).margin(1e-15));
  CHECK(smpp::normal_cdf(1.96) == Approx(0.975).margin(1e-4));
  CHECK(smpp::normal_cdf(1.0, 1.0, 2.0) == Approx(0.5).margin(1e-15));
  CHECK(smpp::normal_cdf(-8.0) > 0.0);
}

TEST_CASE("normal quantile matches frozen references") {
  CHECK(smpp::normal_quantile(0.975) ==
        Approx(1.959963984540054).margin(1e-12));
  CHECK(smpp::normal_quantile(0.3) ==
        Approx(-0.5244005127080409).margin(1e-13));
  CHECK(smpp::normal_quantile(1e-9) ==
        Approx(-5.9978070150076865).margin(1e-11));
  CHECK(smpp::normal_quantile(0.5) == Approx(0.0).margin(1e-15));
  CHECK_THROWS_AS(smpp::normal_quantile(0.0), smpp::numeric_error);
  CHECK_THROWS_AS(smpp::normal_quantile(1.0), smpp::numeric_error);
}

TEST_CASE("normal quantile inverts the cdf") {
  for (double p : {0.001, 0.2, 0.5, 0.77, 0.9999}) {
    CHECK(smpp::normal_cdf(smpp::normal_quantile(p)) ==
          Approx(p).margin(1e-12));
  }
}

TEST_CASE("log densities agree with their definitions") {
  CHECK(smpp::normal_logpdf(0.0, 0.0, 1.0) ==
        Approx(-0.5 * std::log(2.0 * std::numbers::pi)).margin(1e-14));
  // Gamma(1, rate) is Exponential(rate).
  CHECK(smpp::gamma_logpdf(0.7, 1.0, 2.0) ==
        Approx(std::log(2.0) - 2.0 * 0.7).margin(1e-14));
  CHECK(smpp::gamma_logpdf(-1.0, 2.0, 1.0) == smpp::neg_inf());
  CHECK(smpp::gamma_logpdf(0.0, 2.0, 1.0) == smpp::neg_inf());
}

TEST_CASE("gamma cdf integrates the gamma density") {
  const double shape = 3.3;
  const double rate = 0.8;
  const double x = 4.1;
  const double direct = oracles::integrate(
      [&](double t) { return std::exp(smpp::gamma_logpdf(t, shape, rate)); },
      1e-12, x, 1e-13);
  CHECK(smpp::gamma_cdf(x, shape, rate) == Approx(direct).margin(1e-10));
  CHECK(smpp::gamma_cdf(0.0, shape, rate) == 0.0);
}
