#include <doctest.h>

#include <cmath>
#include <random>

#include "mshybrid/problem.hpp"

using namespace msh;

TEST_CASE("1D coefficient values") {
    const FineProblem1D prob(1.0 / 16.0);
    CHECK(prob.coeff(0.0) == doctest::Approx(1.0 / 1.2).epsilon(1e-12));
    CHECK(prob.coeff(prob.eps / 4.0) == doctest::Approx(1.0 / 2.2).epsilon(1e-12));
    CHECK(coeff_1d_mean(prob.eps) == doctest::Approx(1.0 / std::sqrt(0.44)).epsilon(1e-14));

    // bounds and periodicity
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> uni(0.0, 1.0 - prob.eps);
    for (int i = 0; i < 100; ++i) {
        const double x = uni(rng);
        CHECK(prob.coeff(x) >= 1.0 / 2.2 - 1e-12);
        CHECK(prob.coeff(x) <= 1.0 / 0.2 + 1e-12);
        CHECK(prob.coeff(x) == doctest::Approx(prob.coeff(x + prob.eps)).epsilon(1e-10));
    }
}

TEST_CASE("1D source and right-hand side") {
    const FineProblem1D prob(1.0 / 16.0);
    CHECK(prob.source_q(0.5) == 0.0);
    CHECK(prob.source_q(0.25) == doctest::Approx(1.5));
    CHECK(prob.coeff_dx(0.0) ==
          doctest::Approx(-2.0 * 3.14159265358979323846 / (prob.eps * 1.44)).epsilon(1e-12));
    CHECK(prob.rhs(0.25) == doctest::Approx(prob.source_q(0.25) + prob.coeff_dx(0.25)));
}

TEST_CASE("analytic coefficient derivative matches finite differences") {
    const FineProblem1D prob(1.0 / 16.0);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> uni(0.01, 0.99);
    const double h = 1e-7;
    for (int i = 0; i < 100; ++i) {
        const double x = uni(rng);
        const double fd = (prob.coeff(x + h) - prob.coeff(x - h)) / (2.0 * h);
        CHECK(prob.coeff_dx(x) == doctest::Approx(fd).epsilon(1e-6));
    }
}

TEST_CASE("2D coefficient values") {
    FineProblem2D prob;
    prob.which = Coeff2D::K1;
    CHECK(prob.coeff(0.0, 0.0) == doctest::Approx(3.0));
    CHECK(prob.min_scale() == doctest::Approx(1.0 / 32.0));

    prob.which = Coeff2D::K3;
    CHECK(prob.coeff(0.0, 0.0) == doctest::Approx(0.5));
    CHECK(prob.min_scale() == doctest::Approx(1.0 / 16.0));

    prob.which = Coeff2D::K2;
    const double e1 = 1.0 / 16.0;
    CHECK(prob.coeff(e1 / 4.0, 0.0) == doctest::Approx(5.5));

    // sources
    CHECK(prob.source(0.3, 0.7) == 0.0);
    prob.gaussian_source = true;
    CHECK(prob.source(0.5, 0.5) == doctest::Approx(1.0));
    CHECK(prob.source(0.0, 0.5) == doctest::Approx(std::exp(-0.25)));
}
