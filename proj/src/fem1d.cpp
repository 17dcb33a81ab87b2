#include "mshybrid/fem1d.hpp"

#include <cmath>
#include <stdexcept>

namespace msh {

Eigen::VectorXd Mesh1D::nodes() const {
    Eigen::VectorXd x(N);
    for (int i = 0; i < N; ++i) x(i) = node(i);
    return x;
}

Tridiag assemble_stiffness(const Mesh1D& mesh) {
    Tridiag A;
    A.diag = Eigen::VectorXd::Constant(mesh.N, 2.0 / mesh.h);
    A.sub = Eigen::VectorXd::Constant(mesh.N - 1, -1.0 / mesh.h);
    A.sup = A.sub;
    return A;
}

Tridiag assemble_mass(const Mesh1D& mesh) {
    Tridiag A;
    A.diag = Eigen::VectorXd::Constant(mesh.N, 2.0 * mesh.h / 3.0);
    A.sub = Eigen::VectorXd::Constant(mesh.N - 1, mesh.h / 6.0);
    A.sup = A.sub;
    return A;
}

Eigen::VectorXd load_vector(const std::function<double(double)>& q, const Mesh1D& mesh) {
    const int N = mesh.N;
    const double h = mesh.h;
    // Gauss points on the reference element [0,1]
    const double g0 = 0.5 - 0.5 / std::sqrt(3.0);
    const double g1 = 0.5 + 0.5 / std::sqrt(3.0);
    Eigen::VectorXd F = Eigen::VectorXd::Zero(N);
    for (int e = 0; e <= N; ++e) {   // element [e*h, (e+1)*h]
        const double x0 = e * h;
        const double q0 = q(x0 + g0 * h), q1 = q(x0 + g1 * h);
        if (e >= 1)  // left node of the element, hat decreasing: 1 - t
            F(e - 1) += 0.5 * h * (q0 * (1.0 - g0) + q1 * (1.0 - g1));
        if (e < N)   // right node, hat increasing: t
            F(e) += 0.5 * h * (q0 * g0 + q1 * g1);
    }
    return F;
}

Eigen::VectorXd solve_tridiag(const Tridiag& A, const Eigen::VectorXd& rhs) {
    const Eigen::Index N = A.diag.size();
    if (rhs.size() != N) throw std::invalid_argument("fem1d: rhs size mismatch");
    Eigen::VectorXd c(N), d(N);
    double piv = A.diag(0);
    if (std::abs(piv) < 1e-300) throw std::runtime_error("fem1d: singular tridiagonal pivot");
    c(0) = (N > 1) ? A.sup(0) / piv : 0.0;
    d(0) = rhs(0) / piv;
    for (Eigen::Index i = 1; i < N; ++i) {
        piv = A.diag(i) - A.sub(i - 1) * c(i - 1);
        if (std::abs(piv) < 1e-300) throw std::runtime_error("fem1d: singular tridiagonal pivot");
        c(i) = (i + 1 < N) ? A.sup(i) / piv : 0.0;
        d(i) = (rhs(i) - A.sub(i - 1) * d(i - 1)) / piv;
    }
    Eigen::VectorXd u(N);
    u(N - 1) = d(N - 1);
    for (Eigen::Index i = N - 2; i >= 0; --i) u(i) = d(i) - c(i) * u(i + 1);
    return u;
}

Eigen::VectorXd tridiag_apply(const Tridiag& A, const Eigen::VectorXd& x) {
    const Eigen::Index N = A.diag.size();
    if (x.size() != N) throw std::invalid_argument("fem1d: vector size mismatch");
    Eigen::VectorXd y = A.diag.cwiseProduct(x);
    if (N > 1) {
        y.head(N - 1) += A.sup.cwiseProduct(x.tail(N - 1));
        y.tail(N - 1) += A.sub.cwiseProduct(x.head(N - 1));
    }
    return y;
}

Eigen::VectorXd solve_scaled(double ktilde, const Tridiag& B_h, const Eigen::VectorXd& rhs) {
    if (!(ktilde > 0.0)) throw std::runtime_error("fem1d: coarse coefficient lost coercivity");
    Tridiag A;
    A.diag = ktilde * B_h.diag;
    A.sub = ktilde * B_h.sub;
    A.sup = ktilde * B_h.sup;
    return solve_tridiag(A, rhs);
}

CoarseSystem::CoarseSystem(const Mesh1D& m, const std::function<double(double)>& q)
    : mesh(m),
      B_h(assemble_stiffness(m)),
      M_h(assemble_mass(m)),
      F_h(load_vector(q, m)),
      y_h(Eigen::VectorXd::Zero(m.N)),
      p_h(Eigen::VectorXd::Zero(m.N)) {}

void CoarseSystem::solve_state(double ktilde) { y_h = solve_scaled(ktilde, B_h, F_h); }

void CoarseSystem::solve_adjoint(double ktilde, const Eigen::VectorXd& rhs) {
    p_h = solve_scaled(ktilde, B_h, rhs);
}

Eigen::VectorXd fine_reference(const FineProblem1D& problem, int N_ref) {
    const Mesh1D mesh(N_ref);
    const int N = mesh.N;
    const double h = mesh.h;
    if (h > 0.2 * problem.eps)
        throw std::runtime_error("fem1d: reference mesh too coarse for eps");

    // element midpoint coefficient values; element e spans [e*h, (e+1)*h]
    Eigen::VectorXd Ke(N + 1);
    for (int e = 0; e <= N; ++e) Ke(e) = problem.coeff((e + 0.5) * h);

    Tridiag A;
    A.diag.resize(N);
    A.sub.resize(N - 1);
    for (int i = 0; i < N; ++i) A.diag(i) = (Ke(i) + Ke(i + 1)) / h;
    for (int i = 0; i + 1 < N; ++i) A.sub(i) = -Ke(i + 1) / h;
    A.sup = A.sub;

    const Eigen::VectorXd F = load_vector([&](double x) { return problem.rhs(x); }, mesh);
    const Eigen::VectorXd u = solve_tridiag(A, F);

    Eigen::VectorXd full = Eigen::VectorXd::Zero(N + 2);
    full.segment(1, N) = u;
    return full;
}

Eigen::VectorXd fine_reference_nodes(int N_ref) {
    const double h = 1.0 / (N_ref + 1);
    Eigen::VectorXd x(N_ref + 2);
    for (int j = 0; j < N_ref + 2; ++j) x(j) = j * h;
    return x;
}

double relative_l2(const Eigen::VectorXd& pred, const Eigen::VectorXd& ref) {
    if (pred.size() != ref.size()) throw std::invalid_argument("fem1d: length mismatch");
    const double denom = ref.norm();
    if (denom == 0.0) throw std::invalid_argument("fem1d: zero reference norm");
    return (pred - ref).norm() / denom;
}

} // namespace msh
