#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "sid/quadrature.hpp"

using Catch::Approx;

TEST_CASE("polynomial and trig integrals", "[quadrature]") {
    CHECK(sid::integrate_or_throw([](double x) { return x * x; }, 0.0, 1.0) ==
          Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(sid::integrate_or_throw([](double x) { return std::sin(x); }, 0.0, M_PI) ==
          Approx(2.0).epsilon(1e-12));
    CHECK(sid::integrate_or_throw([](double x) { return std::exp(-x); }, 0.0, 50.0) ==
          Approx(1.0).epsilon(1e-9));
}

TEST_CASE("empty interval is zero", "[quadrature]") {
    CHECK(sid::integrate([](double) { return 7.0; }, 2.0, 2.0).value == 0.0);
}

TEST_CASE("adaptive refinement handles peaked integrands", "[quadrature]") {
    // narrow Gaussian bump away from panel centers
    auto f = [](double x) { return std::exp(-1e4 * (x - 0.3123) * (x - 0.3123)); };
    double exact = std::sqrt(M_PI / 1e4);
    CHECK(sid::integrate_or_throw(f, 0.0, 1.0) == Approx(exact).epsilon(1e-7));
}

TEST_CASE("non-convergence is reported with diagnostics", "[quadrature]") {
    auto nasty = [](double x) { return std::sin(1e7 * x); };
    sid::QuadResult r = sid::integrate(nasty, 0.0, 1.0, 1e-12, 1e-12, 8);
    CHECK_FALSE(r.converged);
    CHECK(r.intervals == 8);
    CHECK_THROWS_AS(sid::integrate_or_throw(nasty, 0.0, 1.0, 1e-12, 1e-12), sid::NumericError);
}
