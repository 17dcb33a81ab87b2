#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "mshybrid/fem1d.hpp"

using namespace msh;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_CASE("P1 stiffness and mass entries") {
    const Mesh1D mesh(7);
    const Tridiag B = assemble_stiffness(mesh);
    const Tridiag M = assemble_mass(mesh);
    const double h = mesh.h;
    CHECK(B.diag.isApproxToConstant(2.0 / h));
    CHECK(B.sub.isApproxToConstant(-1.0 / h));
    CHECK(M.diag.isApproxToConstant(2.0 * h / 3.0));
    CHECK(M.sub.isApproxToConstant(h / 6.0));

    // interior rows away from the ends annihilate constants
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(mesh.N);
    const Eigen::VectorXd r = tridiag_apply(B, ones);
    for (int i = 1; i + 1 < mesh.N; ++i) CHECK(r(i) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("load vector quadrature") {
    const Mesh1D mesh(9);
    CHECK(load_vector([](double) { return 0.0; }, mesh).norm() == 0.0);

    const Eigen::VectorXd F1 = load_vector([](double) { return 1.0; }, mesh);
    CHECK(F1.isApproxToConstant(mesh.h, 1e-13));

    const Eigen::VectorXd Fq = load_vector([](double x) { return -3.0 * (2.0 * x - 1.0); }, mesh);
    for (int i = 0; i < mesh.N; ++i)
        CHECK(Fq(i) == doctest::Approx(-Fq(mesh.N - 1 - i)).epsilon(1e-12));
}

TEST_CASE("Thomas solver: identity scaling") {
    Tridiag A;
    A.diag = Eigen::VectorXd::Constant(5, 3.0);
    A.sub = Eigen::VectorXd::Zero(4);
    A.sup = A.sub;
    Eigen::VectorXd rhs(5);
    rhs << 1, 2, 3, 4, 5;
    CHECK(solve_tridiag(A, rhs).isApprox(rhs / 3.0, 1e-14));
}

TEST_CASE("Thomas solver: -u'' = 2 gives x(1-x)") {
    const Mesh1D mesh(199);
    const Tridiag B = assemble_stiffness(mesh);
    const Eigen::VectorXd F = load_vector([](double) { return 2.0; }, mesh);
    const Eigen::VectorXd u = solve_scaled(1.0, B, F);
    double worst = 0.0;
    for (int i = 0; i < mesh.N; ++i) {
        const double x = mesh.node(i);
        worst = std::max(worst, std::abs(u(i) - x * (1.0 - x)));
    }
    CHECK(worst <= 1e-3);
}

TEST_CASE("Thomas solver matches dense elimination on random SPD systems") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> uni(0.1, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        const int N = 20;
        Tridiag A;
        A.sub.resize(N - 1);
        A.diag.resize(N);
        for (int i = 0; i < N - 1; ++i) A.sub(i) = -uni(rng);
        for (int i = 0; i < N; ++i) {
            double row = uni(rng);
            if (i > 0) row += std::abs(A.sub(i - 1));
            if (i < N - 1) row += std::abs(A.sub(i));
            A.diag(i) = row;   // strictly diagonally dominant, SPD
        }
        A.sup = A.sub;
        Eigen::MatrixXd D = Eigen::MatrixXd::Zero(N, N);
        D.diagonal() = A.diag;
        D.diagonal(-1) = A.sub;
        D.diagonal(1) = A.sup;
        Eigen::VectorXd rhs(N);
        for (int i = 0; i < N; ++i) rhs(i) = uni(rng) - 0.5;
        const Eigen::VectorXd u = solve_tridiag(A, rhs);
        const Eigen::VectorXd v = D.fullPivLu().solve(rhs);
        CHECK((u - v).norm() / v.norm() < 1e-10);
        CHECK((tridiag_apply(A, u) - rhs).lpNorm<Eigen::Infinity>() <=
              1e-12 * rhs.lpNorm<Eigen::Infinity>() + 1e-14);
    }
}

TEST_CASE("coarse solves: linearity in the coefficient and symmetry") {
    const Mesh1D mesh(50);
    CoarseSystem sys(mesh, [](double x) { return -3.0 * (2.0 * x - 1.0); });

    sys.solve_state(1.0);
    const Eigen::VectorXd y1 = sys.y_h;
    sys.solve_state(2.0);
    CHECK(sys.y_h.isApprox(0.5 * y1, 1e-12));

    CHECK(solve_scaled(1.3, sys.B_h, Eigen::VectorXd::Zero(mesh.N)).norm() == 0.0);

    sys.solve_state(0.834);
    for (int i = 0; i < mesh.N; ++i)
        CHECK(sys.y_h(i) == doctest::Approx(-sys.y_h(mesh.N - 1 - i)).epsilon(1e-10));

    CHECK_THROWS_AS(sys.solve_state(-1.0), std::runtime_error);
}

TEST_CASE("state scaling law y(k) = y(1)/k over a coefficient range") {
    const Mesh1D mesh(30);
    CoarseSystem sys(mesh, [](double x) { return std::sin(3.0 * x); });
    sys.solve_state(1.0);
    const Eigen::VectorXd base = sys.y_h;
    for (double k : {0.1, 0.5, 2.0, 10.0}) {
        sys.solve_state(k);
        CHECK(sys.y_h.isApprox(base / k, 1e-12));
    }
}

TEST_CASE("fine reference solver basics") {
    const FineProblem1D prob(1.0 / 16.0);
    const Eigen::VectorXd u = fine_reference(prob);
    CHECK(u.size() == 1001);
    CHECK(u(0) == 0.0);
    CHECK(u(1000) == 0.0);
    CHECK(u.lpNorm<Eigen::Infinity>() > 0.01);

    CHECK_THROWS_AS(fine_reference(prob, 20), std::runtime_error);
}

TEST_CASE("manufactured solution converges at second order") {
    // -u'' = pi^2 sin(pi x), u = sin(pi x)
    auto solve_err = [](int N) {
        const Mesh1D mesh(N);
        const Tridiag B = assemble_stiffness(mesh);
        const Eigen::VectorXd F =
            load_vector([](double x) { return kPi * kPi * std::sin(kPi * x); }, mesh);
        const Eigen::VectorXd u = solve_scaled(1.0, B, F);
        double acc = 0.0;
        for (int i = 0; i < N; ++i) {
            const double d = u(i) - std::sin(kPi * mesh.node(i));
            acc += d * d * mesh.h;
        }
        return std::sqrt(acc);
    };
    const double e1 = solve_err(49);    // h = 1/50
    const double e2 = solve_err(99);    // h = 1/100
    CHECK(e1 / e2 >= 3.8);
}

TEST_CASE("relative l2 error") {
    Eigen::VectorXd ref(4);
    ref << 1, -2, 3, 0.5;
    CHECK(relative_l2(ref, ref) == 0.0);
    CHECK(relative_l2(Eigen::VectorXd::Zero(4), ref) == doctest::Approx(1.0));
    CHECK(relative_l2(1.1 * ref, ref) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK_THROWS_AS(relative_l2(ref, Eigen::VectorXd::Zero(4)), std::invalid_argument);
}
