#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "oracles.hpp"
#include "smpp/ddp.hpp"
#include "smpp/special.hpp"
#include "smpp/stats.hpp"

using Catch::Approx;

namespace {

// Small fully hand-set mixture state used by the enumeration checks.
smpp::DdpState manual_state() {
  smpp::DdpState s;
  s.N = 3;
  s.z = {0.2, 0.375};
  s.w = {0.2, 0.3, 0.5};
  s.mu = smpp::Matrix(3, 2);
  s.nu = smpp::Matrix(3, 2);
  s.eta = smpp::Matrix(3, 2);
  s.v = smpp::Matrix(3, 2, 1.0);
  const double mu_vals[3][2] = {{0.25, 0.3}, {0.55, 0.5}, {0.8, 0.75}};
  const double nu_vals[3][2] = {{-0.4, -0.2}, {0.1, 0.0}, {0.6, 0.5}};
  const double eta_vals[3][2] = {{-1.0, -0.8}, {0.2, 0.1}, {1.4, 1.2}};
  for (std::size_t j = 0; j < 3; ++j) {
    for (std::size_t k = 0; k < 2; ++k) {
      s.mu(j, k) = mu_vals[j][k];
      s.nu(j, k) = nu_vals[j][k];
      s.eta(j, k) = eta_vals[j][k];
    }
  }
  s.tau = 40.0;
  s.sigma2 = 0.49;
  s.zeta2 = 1.21;
  s.arity = smpp::ModelArity::TimeWindDamage;
  return s;
}

}  // namespace

TEST_CASE("stick breaking produces an exact simplex") {
  SECTION("hand examples") {
    const std::vector<double> z = {0.5, 0.5};
    const auto w = smpp::stick_break(z);
    REQUIRE(w.size() == 3);
    CHECK(w[0] == Approx(0.5).margin(1e-15));
    CHECK(w[1] == Approx(0.25).margin(1e-15));
    CHECK(w[2] == Approx(0.25).margin(1e-15));

    const std::vector<double> z1 = {0.3};
    const auto w1 = smpp::stick_break(z1);
    REQUIRE(w1.size() == 2);
    CHECK(w1[0] == Approx(0.3).margin(1e-15));
    CHECK(w1[1] == Approx(0.7).margin(1e-15));
  }
  SECTION("empty stick vector gives the single-component mixture") {
    const auto w = smpp::stick_break(std::vector<double>{});
    REQUIRE(w.size() == 1);
    CHECK(w[0] == 1.0);
  }
  SECTION("the closing weight equals the untouched stick remainder") {
    std::vector<double> z(49, 0.01);
    const auto w = smpp::stick_break(z);
    CHECK(w.back() == Approx(std::pow(0.99, 49)).epsilon(1e-12));
  }
  SECTION("weights sum to one and stay nonnegative") {
    smpp::SeededRng rng(5);
    std::vector<double> z(49);
    for (double& zj : z) zj = rng.uniform();
    const auto w = smpp::stick_break(z);
    CHECK(std::accumulate(w.begin(), w.end(), 0.0) == Approx(1.0).margin(1e-12));
    CHECK(*std::min_element(w.begin(), w.end()) >= 0.0);
  }
  SECTION("sticks outside (0,1) are rejected") {
    CHECK_THROWS_AS(smpp::stick_break(std::vector<double>{0.5, 0.0}), smpp::numeric_error);
    CHECK_THROWS_AS(smpp::stick_break(std::vector<double>{1.0}), smpp::numeric_error);
    CHECK_THROWS_AS(smpp::stick_break(std::vector<double>{-0.2}), smpp::numeric_error);
  }
}

TEST_CASE("truncation mass follows the closed form") {
  CHECK(smpp::truncation_mass(1.0, 1) == Approx(0.5).margin(1e-15));
  CHECK(smpp::truncation_mass(1.0, 2) == Approx(0.75).margin(1e-15));
  CHECK(smpp::truncation_mass(3.0, 2) == Approx(1.0 - 0.5625).margin(1e-15));
  CHECK(smpp::truncation_mass(0.5, 500) == Approx(1.0).margin(1e-12));
  for (int n = 1; n < 20; ++n) {
    CHECK(smpp::truncation_mass(2.0, n + 1) > smpp::truncation_mass(2.0, n));
  }
  CHECK_THROWS_AS(smpp::truncation_mass(0.0, 10), smpp::numeric_error);
  CHECK_THROWS_AS(smpp::truncation_mass(-1.0, 10), smpp::numeric_error);
  CHECK_THROWS_AS(smpp::truncation_mass(1.0, 0), smpp::numeric_error);
}

TEST_CASE("expected retained mass under the precision prior") {
  // E_{alpha ~ Gamma(2,1)} [1 - (alpha/(alpha+1))^50], by quadrature of the
  // smooth integrand against the Gamma(2,1) density alpha exp(-alpha).
  const double expected = oracles::integrate(
      [](double a) {
        return (1.0 - std::pow(a / (a + 1.0), 50)) * a * std::exp(-a);
      },
      1e-12, 60.0, 1e-13);
  CHECK(expected == Approx(0.9999582642460916).margin(1e-10));
  const double mean_mass = oracles::integrate(
      [](double a) { return smpp::truncation_mass(a, 50) * a * std::exp(-a); }, 1e-12, 60.0,
      1e-13);
  CHECK(mean_mass == Approx(expected).margin(1e-12));
}

TEST_CASE("inverse-gamma helpers") {
  CHECK(smpp::ig_rate_from_range(8.0) == Approx(4.0).margin(1e-15));
  CHECK(smpp::ig_rate_from_range(1.0) == Approx(0.0625).margin(1e-15));
  CHECK_THROWS_AS(smpp::ig_rate_from_range(0.0), smpp::numeric_error);
  CHECK_THROWS_AS(smpp::ig_rate_from_range(-2.0), smpp::numeric_error);

  // log IG(x; s, r) = log Gamma(1/x; s, r) - 2 log x (change of variables).
  for (double x : {0.2, 0.7, 1.3, 4.0}) {
    CHECK(smpp::inv_gamma_logpdf(x, 3.0, 2.0) ==
          Approx(smpp::gamma_logpdf(1.0 / x, 3.0, 2.0) - 2.0 * std::log(x)).margin(1e-12));
  }
  CHECK(smpp::inv_gamma_logpdf(0.0, 3.0, 2.0) == smpp::neg_inf());
  CHECK(smpp::inv_gamma_logpdf(-1.0, 3.0, 2.0) == smpp::neg_inf());

  // IG(3, 2) has mean rate/(shape-1) = 1 and finite variance; Monte Carlo
  // agreement within four standard errors.
  smpp::SeededRng rng(11);
  const int n = 200000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += smpp::draw_inv_gamma(rng, 3.0, 2.0);
  // Var IG(3,2) = r^2 / ((s-1)^2 (s-2)) = 1.
  CHECK(sum / n == Approx(1.0).margin(4.0 / std::sqrt(static_cast<double>(n))));
}

TEST_CASE("prior state draw has the documented shape") {
  smpp::PriorConfig config;
  config.truncation = 7;
  smpp::SeededRng rng(42);
  const smpp::DdpState s = smpp::sample_prior_state(3, config, rng);

  CHECK(s.N == 7);
  CHECK(s.z.size() == 6);
  CHECK(s.w.size() == 7);
  CHECK(s.mu.rows() == 7);
  CHECK(s.mu.cols() == 3);
  CHECK(s.num_periods() == 3);
  CHECK(s.nu.rows() == 7);
  CHECK(s.eta.cols() == 3);
  CHECK(s.v.rows() == 7);
  for (std::size_t j = 0; j < 7; ++j) {
    CHECK(s.v(j, 0) == 1.0);  // placeholder column: no transition into period 1
    for (std::size_t k = 0; k < 3; ++k) {
      CHECK(s.mu(j, k) > 0.0);
      CHECK(s.mu(j, k) < 1.0);
      if (k > 0) {
        CHECK(s.v(j, k) > 0.0);
        CHECK(s.v(j, k) < 1.0);
      }
    }
  }
  CHECK(std::accumulate(s.w.begin(), s.w.end(), 0.0) == Approx(1.0).margin(1e-12));
  CHECK(s.alpha > 0.0);
  CHECK(s.rho > 0.0);
  CHECK(s.rho < 1.0);
  CHECK(s.sigma2 > 0.0);
  CHECK(s.beta_ar > -1.0);
  CHECK(s.beta_ar < 1.0);

  SECTION("same seed reproduces the same state") {
    smpp::SeededRng r1(42), r2(42);
    const smpp::DdpState a = smpp::sample_prior_state(3, config, r1);
    const smpp::DdpState b = smpp::sample_prior_state(3, config, r2);
    CHECK(a.alpha == b.alpha);
    CHECK(a.rho == b.rho);
    CHECK(a.z == b.z);
    CHECK(a.mu == b.mu);
    CHECK(a.nu == b.nu);
    CHECK(a.eta == b.eta);
  }
  SECTION("invalid sizes are rejected") {
    smpp::SeededRng r(1);
    CHECK_THROWS_AS(smpp::sample_prior_state(0, config, r), smpp::numeric_error);
    smpp::PriorConfig bad = config;
    bad.truncation = 0;
    CHECK_THROWS_AS(smpp::sample_prior_state(2, bad, r), smpp::numeric_error);
  }
}

TEST_CASE("fixed hyperparameters are honored exactly") {
  smpp::PriorConfig config;
  config.truncation = 4;
  config.fixed_alpha = 1.7;
  config.fixed_rho = 0.62;
  config.fixed_sigma2 = 0.25;
  config.fixed_zeta2 = 2.5;
  config.fixed_beta_ar = 0.45;
  config.fixed_phi_ar = -0.3;
  config.fixed_sigma1_2 = 0.36;
  config.fixed_sigma2_2 = 0.8;
  smpp::SeededRng rng(9);
  const smpp::DdpState s = smpp::sample_prior_state(2, config, rng);
  CHECK(s.alpha == 1.7);
  CHECK(s.rho == 0.62);
  CHECK(s.sigma2 == 0.25);
  CHECK(s.zeta2 == 2.5);
  CHECK(s.beta_ar == 0.45);
  CHECK(s.phi_ar == -0.3);
  CHECK(s.sigma1_2 == 0.36);
  CHECK(s.sigma2_2 == 0.8);
}

TEST_CASE("prior atoms follow their stationary laws") {
  // Pin the hyperparameters so every component row is an independent draw
  // from a known law; a single wide state then gives thousands of iid rows.
  smpp::PriorConfig config;
  config.truncation = 4000;
  config.fixed_alpha = 1.0;
  config.fixed_rho = 0.7;
  config.fixed_beta_ar = 0.5;
  config.fixed_sigma1_2 = 0.36;  // stationary variance 0.36 / 0.75 = 0.48
  config.fixed_phi_ar = -0.4;
  config.fixed_sigma2_2 = 0.84;  // stationary variance 0.84 / 0.84 = 1.0
  smpp::SeededRng rng(31);
  const smpp::DdpState s = smpp::sample_prior_state(2, config, rng);
  const std::size_t n = 4000;

  SECTION("time atoms are uniform in every period") {
    std::vector<double> col0(n), col1(n);
    for (std::size_t j = 0; j < n; ++j) {
      col0[j] = s.mu(j, 0);
      col1[j] = s.mu(j, 1);
    }
    CHECK(smpp::ks_test_uniform(col0).p_value > 1e-3);
    // The Beta autoregression holds its uniform stationary law one step on.
    CHECK(smpp::ks_test_uniform(col1).p_value > 1e-3);
  }
  SECTION("wind atoms match the AR(1) stationary normal at both periods") {
    for (std::size_t k = 0; k < 2; ++k) {
      std::vector<double> col(n);
      for (std::size_t j = 0; j < n; ++j) col[j] = s.nu(j, k);
      const double m = oracles::mean(col);
      const double v = oracles::variance(col);
      CHECK(m == Approx(0.0).margin(4.0 * std::sqrt(0.48 / n)));
      CHECK(v == Approx(0.48).margin(4.0 * 0.48 * std::sqrt(2.0 / (n - 1.0))));
    }
  }
  SECTION("wind atom pairs carry the AR(1) lag correlation") {
    double sum01 = 0.0;
    for (std::size_t j = 0; j < n; ++j) sum01 += s.nu(j, 0) * s.nu(j, 1);
    const double corr = (sum01 / n) / 0.48;
    CHECK(corr == Approx(0.5).margin(4.0 / std::sqrt(static_cast<double>(n))));
  }
  SECTION("damage atoms keep unit stationary variance with negative drift") {
    std::vector<double> col(n);
    for (std::size_t j = 0; j < n; ++j) col[j] = s.eta(j, 1);
    CHECK(oracles::mean(col) == Approx(0.0).margin(4.0 * std::sqrt(1.0 / n)));
    CHECK(oracles::variance(col) == Approx(1.0).margin(4.0 * std::sqrt(2.0 / (n - 1.0))));
    double sum01 = 0.0;
    for (std::size_t j = 0; j < n; ++j) sum01 += s.eta(j, 0) * s.eta(j, 1);
    CHECK(sum01 / n == Approx(-0.4).margin(4.0 / std::sqrt(static_cast<double>(n))));
  }
}

TEST_CASE("mixture density equals its explicit enumeration") {
  const smpp::DdpState s = manual_state();
  const double pts[][3] = {{0.3, -0.1, 0.4}, {0.62, 0.5, -0.9}, {0.97, -1.2, 2.0}};
  for (const auto& p : pts) {
    const double t = p[0], y = p[1], z = p[2];
    for (std::size_t k = 0; k < 2; ++k) {
      double f_t = 0.0, f_ty = 0.0, f_tyz = 0.0;
      for (std::size_t j = 0; j < 3; ++j) {
        const double bt = std::exp(smpp::beta_logpdf(t, s.mu(j, k) * s.tau,
                                                     (1.0 - s.mu(j, k)) * s.tau));
        const double gy =
            std::exp(-0.5 * (y - s.nu(j, k)) * (y - s.nu(j, k)) / s.sigma2) /
            std::sqrt(2.0 * M_PI * s.sigma2);
        const double gz =
            std::exp(-0.5 * (z - s.eta(j, k)) * (z - s.eta(j, k)) / s.zeta2) /
            std::sqrt(2.0 * M_PI * s.zeta2);
        f_t += s.w[j] * bt;
        f_ty += s.w[j] * bt * gy;
        f_tyz += s.w[j] * bt * gy * gz;
      }
      CHECK(std::exp(smpp::mixture_logdensity(s, k, t)) == Approx(f_t).epsilon(1e-12));
      CHECK(std::exp(smpp::mixture_logdensity(s, k, t, y)) == Approx(f_ty).epsilon(1e-12));
      CHECK(std::exp(smpp::mixture_logdensity(s, k, t, y, z)) == Approx(f_tyz).epsilon(1e-12));
    }
  }
}

TEST_CASE("single-component truncation collapses to one kernel") {
  smpp::PriorConfig config;
  config.truncation = 1;
  smpp::SeededRng rng(3);
  const smpp::DdpState s = smpp::sample_prior_state(2, config, rng);
  REQUIRE(s.w.size() == 1);
  CHECK(s.w[0] == 1.0);
  for (double t : {0.1, 0.5, 0.9}) {
    CHECK(smpp::mixture_logdensity(s, 1, t) ==
          Approx(s.time_kernel(0, 1).logpdf(t)).margin(1e-13));
  }
}

TEST_CASE("seasonal density integrates to one") {
  const smpp::DdpState s = manual_state();
  for (std::size_t k = 0; k < 2; ++k) {
    const double mass = oracles::integrate(
        [&](double t) { return smpp::seasonal_density(s, k, t); }, 1e-10, 1.0 - 1e-10, 1e-10);
    CHECK(mass == Approx(1.0).margin(1e-7));
  }
}

TEST_CASE("joint time-wind density integrates to one") {
  smpp::DdpState s = manual_state();
  s.arity = smpp::ModelArity::TimeWind;
  const double band = 10.0 * std::sqrt(s.sigma2) + 1.0;
  const double mass = oracles::integrate2(
      [&](double t, double y) { return std::exp(smpp::mixture_logdensity(s, 0, t, y)); }, 1e-9,
      1.0 - 1e-9, [&](double) { return -band; }, [&](double) { return band; }, 1e-7);
  CHECK(mass == Approx(1.0).margin(1e-4));
}

TEST_CASE("seasonal cdf matches quadrature of the density") {
  const smpp::DdpState s = manual_state();
  for (double t0 : {0.15, 0.37, 0.71}) {
    const double by_quad = oracles::integrate(
        [&](double t) { return smpp::seasonal_density(s, 0, t); }, 1e-12, t0, 1e-11);
    CHECK(smpp::seasonal_cdf(s, 0, t0) == Approx(by_quad).margin(1e-8));
  }
  CHECK(smpp::seasonal_cdf(s, 0, 0.0) == 0.0);
  CHECK(smpp::seasonal_cdf(s, 0, -0.5) == 0.0);
  CHECK(smpp::seasonal_cdf(s, 0, 1.0) == 1.0);
  CHECK(smpp::seasonal_cdf(s, 0, 1.5) == 1.0);
  double prev = 0.0;
  for (int i = 1; i <= 20; ++i) {
    const double cur = smpp::seasonal_cdf(s, 0, i / 21.0);
    CHECK(cur >= prev);
    prev = cur;
  }
}

TEST_CASE("mixture density is invariant under component relabeling") {
  const smpp::DdpState s = manual_state();
  smpp::DdpState p = s;  // permute components (2, 0, 1)
  const std::size_t perm[3] = {2, 0, 1};
  for (std::size_t j = 0; j < 3; ++j) {
    p.w[j] = s.w[perm[j]];
    for (std::size_t k = 0; k < 2; ++k) {
      p.mu(j, k) = s.mu(perm[j], k);
      p.nu(j, k) = s.nu(perm[j], k);
      p.eta(j, k) = s.eta(perm[j], k);
    }
  }
  for (double t : {0.2, 0.5, 0.88}) {
    CHECK(smpp::mixture_logdensity(p, 0, t) ==
          Approx(smpp::mixture_logdensity(s, 0, t)).margin(1e-12));
    CHECK(smpp::mixture_logdensity(p, 1, t, 0.3, -0.5) ==
          Approx(smpp::mixture_logdensity(s, 1, t, 0.3, -0.5)).margin(1e-12));
    CHECK(smpp::seasonal_cdf(p, 0, t) == Approx(smpp::seasonal_cdf(s, 0, t)).margin(1e-12));
  }
}

TEST_CASE("mixture density rejects invalid arguments") {
  const smpp::DdpState s = manual_state();
  CHECK_THROWS_AS(smpp::mixture_logdensity(s, 0, 0.0), std::domain_error);
  CHECK_THROWS_AS(smpp::mixture_logdensity(s, 0, 1.0), std::domain_error);
  CHECK_THROWS_AS(smpp::mixture_logdensity(s, 0, -0.3), std::domain_error);
  CHECK_THROWS_AS(smpp::mixture_logdensity(s, 0, 0.5, std::nullopt, 0.7), std::domain_error);
}

TEST_CASE("default hyperprior constants") {
  const smpp::Hyperpriors h;
  CHECK(h.alpha_shape == 2.0);
  CHECK(h.alpha_rate == 1.0);
  CHECK(h.ig_shape == 3.0);
  CHECK(h.sigma2_rate == 2.0);
  CHECK(h.zeta2_rate == 10.0);
  CHECK(h.sigma1_2_rate == 2.0);
  CHECK(h.sigma2_2_rate == 10.0);
  const smpp::PriorConfig c;
  CHECK(c.truncation == 50);
  CHECK(c.tau == 575.0);
}
