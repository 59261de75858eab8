#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "rdme/controller.hpp"
#include "rdme/errors.hpp"

using namespace rdme;

namespace {
ControllerConfig config() {
  ControllerConfig c;
  c.epsilon = {0.05};
  c.dt_min = 1e-6;
  c.dt_max = 10.0;
  return c;
}
}  // namespace

TEST_SUITE("controller") {
  TEST_CASE("zero error doubles the step") {
    const std::vector<double> eta{0.0, 0.0};
    const auto d = propose(eta, config(), 0.1);
    CHECK(d.accept);
    CHECK(d.next_dt == doctest::Approx(0.2).epsilon(1e-15));
    auto c = config();
    c.dt_max = 0.15;
    CHECK(propose(eta, c, 0.1).next_dt == 0.15);
  }

  TEST_CASE("ratio 4 rejects to 0.045") {
    const std::vector<double> eta{0.2};
    const auto d = propose(eta, config(), 0.1);
    CHECK_FALSE(d.accept);
    CHECK(d.next_dt == doctest::Approx(0.045).epsilon(1e-14));
    CHECK(d.eta_max == doctest::Approx(4.0));
  }

  TEST_CASE("ratio 0.81 keeps the step") {
    const std::vector<double> eta{0.0405};
    const auto d = propose(eta, config(), 0.1);
    CHECK(d.accept);
    CHECK(d.next_dt == doctest::Approx(0.1).epsilon(1e-14));
  }

  TEST_CASE("growth clamp on acceptance") {
    const std::vector<double> tiny{1e-8};
    CHECK(propose(tiny, config(), 0.1).next_dt == doctest::Approx(0.2));
    const std::vector<double> near{0.05};
    CHECK(propose(near, config(), 0.1).next_dt == doctest::Approx(0.09));
  }

  TEST_CASE("worst species and per-species tolerances") {
    auto c = config();
    c.epsilon = {0.1, 0.01};
    const std::vector<double> eta{0.05, 0.008};
    const auto d = propose(eta, c, 0.1);
    CHECK(d.worst_species == 1);
    CHECK(d.eta_max == doctest::Approx(0.8));
    CHECK(d.accept);
  }

  TEST_CASE("floor acceptance is flagged") {
    auto c = config();
    c.dt_min = 0.01;
    const std::vector<double> eta{1.0};
    const auto d = propose(eta, c, 0.01);
    CHECK(d.accept);
    CHECK(d.status == DecisionStatus::infeasible);
    CHECK(d.next_dt == 0.01);
  }

  TEST_CASE("non-finite error halves the step") {
    const std::vector<double> eta{0.01, std::numeric_limits<double>::quiet_NaN()};
    const auto d = propose(eta, config(), 0.1);
    CHECK_FALSE(d.accept);
    CHECK(d.status == DecisionStatus::non_finite);
    CHECK(d.next_dt == doctest::Approx(0.05));
  }

  TEST_CASE("next step stays in bounds") {
    auto c = config();
    c.dt_min = 0.01;
    c.dt_max = 0.5;
    for (double e : {0.0, 1e-9, 0.01, 0.05, 0.5, 50.0, 1e9})
      for (double dt : {0.01, 0.1, 0.5}) {
        const std::vector<double> eta{e};
        const auto d = propose(eta, c, dt);
        CHECK(d.next_dt >= c.dt_min);
        CHECK(d.next_dt <= c.dt_max);
      }
  }

  TEST_CASE("grid snapping") {
    CHECK(snap_to_grid(1.0) == 1.0);
    CHECK(snap_to_grid(0.5) == 0.5);
    CHECK(snap_to_grid(0.9) == doctest::Approx(std::exp2(-0.25)));
    CHECK(snap_to_grid(0.3) == doctest::Approx(std::exp2(-1.75)));
    auto c = config();
    c.snap_grid = true;
    const std::vector<double> eta{0.0};
    CHECK(propose(eta, c, 0.25).next_dt == 0.5);
  }

  TEST_CASE("estimation stride") {
    auto c = config();
    c.stride = 10;
    for (std::uint64_t k : {0, 10, 20}) CHECK(should_estimate(k, c));
    for (std::uint64_t k = 1; k < 10; ++k) CHECK_FALSE(should_estimate(k, c));
    CHECK(should_estimate(7, c, true));
    c.stride = 1;
    for (std::uint64_t k = 0; k < 5; ++k) CHECK(should_estimate(k, c));
  }

  TEST_CASE("identical inputs give identical decisions") {
    const std::vector<double> eta{0.031, 0.2};
    const auto a = propose(eta, config(), 0.0123);
    const auto b = propose(eta, config(), 0.0123);
    CHECK(a.next_dt == b.next_dt);
    CHECK(a.accept == b.accept);
  }

  TEST_CASE("validation") {
    auto c = config();
    CHECK_NOTHROW(c.validate(3));
    c.epsilon = {0.1, 0.2};
    CHECK_THROWS_AS(c.validate(3), InvalidArgument);
    c = config();
    c.epsilon = {0.0};
    CHECK_THROWS_AS(c.validate(1), InvalidArgument);
    c = config();
    c.stride = 0;
    CHECK_THROWS_AS(c.validate(1), InvalidArgument);
    c = config();
    c.safety = 1.0;
    CHECK_THROWS_AS(c.validate(1), InvalidArgument);
    c = config();
    c.dt_min = 20.0;
    CHECK_THROWS_AS(c.validate(1), InvalidArgument);
  }
}
