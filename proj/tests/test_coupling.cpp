#include <doctest.h>

#include <cmath>
#include <random>

#include "mshybrid/coupling.hpp"

using namespace msh;

TEST_CASE("window size from mesh and delta") {
    CHECK(make_compression(Mesh1D(50), 1.0 / 16.0).window == 3);
    CHECK(make_compression(Mesh1D(50), 1.0 / 48.0).window == 1);
    CHECK(make_compression(Mesh1D(70), 1.0 / 64.0).window == 1);
    CHECK_THROWS_AS(make_compression(Mesh1D(10), 0.0), std::invalid_argument);
}

TEST_CASE("moving average basics") {
    const Mesh1D mesh(5);
    CompressionSpec spec = make_compression(mesh, 1.0 / 16.0);
    spec.window = 1;

    Eigen::VectorXd v(5);
    v << 0, 1, 2, 3, 4;
    const Eigen::VectorXd out = compress(v, spec);
    CHECK(out(2) == doctest::Approx(2.0));

    // constants are preserved for any window
    for (int w : {0, 1, 2}) {
        spec.window = w;
        CHECK(compress(Eigen::VectorXd::Constant(5, 3.25), spec)
                  .isApproxToConstant(3.25, 1e-14));
    }

    spec.window = 0;
    CHECK(compress(v, spec).isApprox(v));
}

TEST_CASE("linearity, contraction and boundary passthrough") {
    std::mt19937_64 rng(12);
    std::normal_distribution<double> gauss;
    for (int N : {10, 50, 70}) {
        const Mesh1D mesh(N);
        for (int w : {0, 1, 3}) {
            CompressionSpec spec = make_compression(mesh, 1.0 / 16.0);
            spec.window = w;
            Eigen::VectorXd u(N), v(N);
            for (int i = 0; i < N; ++i) {
                u(i) = gauss(rng);
                v(i) = gauss(rng);
            }
            const Eigen::VectorXd lhs = compress(2.0 * u - 0.5 * v, spec);
            const Eigen::VectorXd rhs = 2.0 * compress(u, spec) - 0.5 * compress(v, spec);
            CHECK((lhs - rhs).lpNorm<Eigen::Infinity>() < 1e-12);

            CHECK(compress(u, spec).lpNorm<Eigen::Infinity>() <=
                  u.lpNorm<Eigen::Infinity>() + 1e-14);

            const Eigen::VectorXd c = compress(u, spec);
            for (int i = 0; i < N; ++i) {
                const double x = mesh.node(i);
                if (x < spec.delta / 2 || x > 1.0 - spec.delta / 2) CHECK(c(i) == u(i));
            }
        }
    }
}

TEST_CASE("compress_adjoint is the transpose") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> gauss;
    const Mesh1D mesh(23);
    CompressionSpec spec = make_compression(mesh, 1.0 / 8.0);
    Eigen::VectorXd u(23), r(23);
    for (int i = 0; i < 23; ++i) {
        u(i) = gauss(rng);
        r(i) = gauss(rng);
    }
    CHECK(compress(u, spec).dot(r) == doctest::Approx(u.dot(compress_adjoint(r, spec))).epsilon(1e-12));
}

TEST_CASE("coupling loss and adjoint right-hand side") {
    Eigen::VectorXd Qv(3), y(3);
    Qv << 1, 2, 3;
    y << 1, 2, 3;
    CHECK(coupling_loss(Qv, y, 0.1) == 0.0);
    CHECK(adjoint_rhs(Qv, y, 5.0, 0.1).norm() == 0.0);
    CHECK(adjoint_rhs(Qv, y, 0.0, 0.1).norm() == 0.0);

    y << 0, 2, 3;
    CHECK(coupling_loss(Qv, y, 0.1) == doctest::Approx(0.1));
    CHECK(adjoint_rhs(Qv, y, 5.0, 0.1)(0) == doctest::Approx(1.0));

    // FD in y: d loss(tau2=1)/dy_j = -(adjoint_rhs)_j
    const double h = 0.05, step = 1e-6;
    for (int j = 0; j < 3; ++j) {
        Eigen::VectorXd yp = y, ym = y;
        yp(j) += step;
        ym(j) -= step;
        const double fd = (coupling_loss(Qv, yp, h) - coupling_loss(Qv, ym, h)) / (2 * step);
        CHECK(fd == doctest::Approx(-adjoint_rhs(Qv, y, 1.0, h)(j)).epsilon(1e-7));
    }
}

TEST_CASE("coupling parameter gradient matches finite differences") {
    Architecture a;
    a.hidden_widths = {8};
    a.num_features = 2;
    a.feature_rows = 4;
    a.feature_scales = {1.0, 4.0};
    NetParams p = init_glorot(a, 6);

    const Mesh1D mesh(10);
    const CompressionSpec spec = make_compression(mesh, 0.25);
    std::mt19937_64 rng(8);
    std::normal_distribution<double> gauss;
    Eigen::VectorXd y(10);
    for (int i = 0; i < 10; ++i) y(i) = 0.05 * gauss(rng);

    BatchTape tape(p, mesh.nodes());
    tape.forward(p);
    const Eigen::VectorXd g = coupling_param_grad(tape, spec, y, mesh.h);

    const Eigen::VectorXd theta = p.flatten();
    auto loss_at = [&](const Eigen::VectorXd& th) {
        NetParams q = p;
        q.unflatten(th);
        BatchTape t2(q, mesh.nodes());
        t2.forward(q);
        return coupling_loss(compress(t2.value().matrix(), spec), y, mesh.h);
    };
    const double step = 1e-6;
    double worst = 0.0;
    for (Eigen::Index k = 0; k < theta.size(); k += 2) {
        Eigen::VectorXd tp = theta, tm = theta;
        tp(k) += step;
        tm(k) -= step;
        const double fd = (loss_at(tp) - loss_at(tm)) / (2 * step);
        const double denom = std::max({std::abs(fd), std::abs(g(k)), 1e-8});
        worst = std::max(worst, std::abs(fd - g(k)) / denom);
    }
    CHECK(worst < 1e-5);

    // zero residual -> zero gradient
    tape.forward(p);
    const Eigen::VectorXd y_match = compress(tape.value().matrix(), spec);
    CHECK(coupling_param_grad(tape, spec, y_match, mesh.h).norm() < 1e-14);
}
