#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <vector>

#include "smpp/common.hpp"

using Catch::Approx;

TEST_CASE("clamp_unit pins values into the open unit interval") {
  CHECK(smpp::clamp_unit(0.5) == 0.5);
  CHECK(smpp::clamp_unit(-1.0) == smpp::kUnitClamp);
  CHECK(smpp::clamp_unit(0.0) == smpp::kUnitClamp);
  CHECK(smpp::clamp_unit(2.0) == 1.0 - smpp::kUnitClamp);
  CHECK(smpp::clamp_unit(1.0) == 1.0 - smpp::kUnitClamp);
  CHECK(smpp::clamp_unit(0.3) == 0.3);
}

TEST_CASE("log_sum_exp matches direct evaluation") {
  const std::vector<double> x = {std::log(1.0), std::log(2.0), std::log(3.0)};
  CHECK(smpp::log_sum_exp(x) == Approx(std::log(6.0)).epsilon(1e-14));
  CHECK(smpp::log_sum_exp(std::log(2.0), std::log(5.0)) ==
        Approx(std::log(7.0)).epsilon(1e-14));
}

TEST_CASE("log_sum_exp is shift-stable for large magnitudes") {
  const std::vector<double> x = {1000.0, 1000.0};
  CHECK(smpp::log_sum_exp(x) == Approx(1000.0 + std::log(2.0)).epsilon(1e-14));
  const std::vector<double> y = {-1000.0, -1000.0, -1000.0};
  CHECK(smpp::log_sum_exp(y) ==
        Approx(-1000.0 + std::log(3.0)).epsilon(1e-14));
}

TEST_CASE("log_sum_exp tolerates -inf entries") {
  const double ninf = smpp::neg_inf();
  const std::vector<double> x = {ninf, std::log(4.0), ninf};
  CHECK(smpp::log_sum_exp(x) == Approx(std::log(4.0)).epsilon(1e-14));
  const std::vector<double> all_ninf = {ninf, ninf};
  CHECK(smpp::log_sum_exp(all_ninf) == ninf);
}

TEST_CASE("Matrix stores row-major values and compares by value") {
  smpp::Matrix m(2, 3, 0.5);
  CHECK(m.rows() == 2);
  CHECK(m.cols() == 3);
  CHECK(m(1, 2) == 0.5);
  m(0, 1) = 7.0;
  CHECK(m(0, 1) == 7.0);
  CHECK(m.data()[1] == 7.0);

  smpp::Matrix n(2, 3, 0.5);
  CHECK_FALSE(m == n);
  n(0, 1) = 7.0;
  CHECK(m == n);
}
