#include <doctest.h>

#include <cmath>

#include "artic/verify.hpp"

using namespace artic;

namespace {

void check_all(const std::vector<CheckResult>& results) {
  for (const auto& r : results) {
    INFO(r.name, ": ", r.detail);
    CHECK(r.pass);
  }
}

}  // namespace

TEST_CASE("mle derivation equivalence battery") { check_all(verify_mle_equivalence(123)); }

TEST_CASE("loss gradient battery vs finite differences") {
  check_all(verify_loss_gradients(123));
}

TEST_CASE("impairment sampler battery") { check_all(verify_sampler(123)); }

TEST_CASE("loss property battery") { check_all(verify_loss_properties(123)); }

TEST_CASE("regularized incomplete gamma sanity") {
  // P(1, x) = 1 - e^-x
  CHECK(reg_lower_gamma(1.0, 1.0) == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-12));
  CHECK(reg_lower_gamma(1.0, 5.0) == doctest::Approx(1.0 - std::exp(-5.0)).epsilon(1e-12));
  // symmetry point of the chi-square family: P(a, a) ~ 0.5 for large a
  CHECK(reg_lower_gamma(50.0, 50.0) == doctest::Approx(0.5).epsilon(0.05));
  // P(1/2, x) = erf(sqrt(x))
  CHECK(reg_lower_gamma(0.5, 2.0) == doctest::Approx(std::erf(std::sqrt(2.0))).epsilon(1e-12));
}
