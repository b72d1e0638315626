#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "smpp/stats.hpp"

using Catch::Approx;

TEST_CASE("mean, variance, and quantile basics") {
  const std::vector<double> x = {1.0, 2.0, 3.0, 4.0};
  CHECK(smpp::mean(x) == Approx(2.5).margin(1e-15));
  CHECK(smpp::sample_variance(x) == Approx(5.0 / 3.0).margin(1e-14));
  CHECK(smpp::quantile(x, 0.0) == 1.0);
  CHECK(smpp::quantile(x, 1.0) == 4.0);
  CHECK(smpp::quantile(x, 0.5) == Approx(2.5).margin(1e-15));
  // Linear interpolation between order statistics: h = 3 * 0.25 = 0.75.
  CHECK(smpp::quantile(x, 0.25) == Approx(1.75).margin(1e-15));

  const std::vector<double> empty;
  CHECK_THROWS_AS(smpp::mean(empty), smpp::numeric_error);
  CHECK_THROWS_AS(smpp::quantile(empty, 0.5), smpp::numeric_error);
  CHECK_THROWS_AS(smpp::quantile(x, 1.5), smpp::numeric_error);
}

TEST_CASE("autocorrelation identities") {
  const std::vector<double> x = {0.4, 1.3, -0.2, 2.2, 0.9, -1.1, 0.5, 1.8};
  CHECK(smpp::autocorrelation(x, 0) == Approx(1.0).margin(1e-14));
  const std::vector<double> constant = {2.0, 2.0, 2.0, 2.0};
  CHECK_THROWS_AS(smpp::autocorrelation(constant, 1), smpp::numeric_error);
  CHECK_THROWS_AS(smpp::autocorrelation(x, 7), smpp::numeric_error);
}

TEST_CASE("ks statistic matches a hand computation") {
  const std::vector<double> u = {0.1, 0.2, 0.3};
  // Largest gap is at the upper end: 1 - 0.3 = 0.7.
  CHECK(smpp::ks_statistic_uniform(u) == Approx(0.7).margin(1e-15));

  const std::vector<double> single = {0.25};
  CHECK(smpp::ks_statistic_uniform(single) == Approx(0.75).margin(1e-15));
}

TEST_CASE("exact small-sample ks p-values match frozen references") {
  // References: one minus the exact finite-sample cdf P(D_n <= d),
  // computed independently.
  CHECK(smpp::ks_pvalue(0.3, 10) ==
        Approx(1.0 - 0.7294644252000005).margin(1e-9));
  CHECK(smpp::ks_pvalue(0.2, 25) ==
        Approx(1.0 - 0.7636793435546241).margin(1e-9));
  CHECK(smpp::ks_pvalue(0.5, 5) == Approx(1.0 - 0.888).margin(1e-9));
  CHECK(smpp::ks_pvalue(0.15, 40) ==
        Approx(1.0 - 0.7015860093178695).margin(1e-9));
}

TEST_CASE("limiting distribution matches the frozen reference at one") {
  CHECK(smpp::detail::kolmogorov_sf(1.0) ==
        Approx(0.26999967167735456).margin(1e-12));
  // Large samples route through the corrected asymptotic argument.
  const double n = 100.0;
  const double corrected = std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n);
  const double d = 1.0 / corrected;
  CHECK(smpp::ks_pvalue(d, 100) ==
        Approx(0.26999967167735456).margin(1e-9));
}

TEST_CASE("ks p-value edge cases") {
  CHECK(smpp::ks_pvalue(0.0, 10) == 1.0);
  CHECK(smpp::ks_pvalue(1.0, 10) == 0.0);
  CHECK_THROWS_AS(smpp::ks_pvalue(0.3, 0), smpp::numeric_error);
}

TEST_CASE("ks test bundles statistic and p-value") {
  const std::vector<double> u = {0.05, 0.21, 0.37, 0.44, 0.58, 0.71, 0.86,
                                 0.93};
  const auto r = smpp::ks_test_uniform(u);
  CHECK(r.n == 8);
  CHECK(r.statistic == Approx(smpp::ks_statistic_uniform(u)).margin(1e-15));
  CHECK(r.p_value > 0.5);  // nearly ideal uniform spacing
}
