#ifndef MSHYBRID_FEM1D_HPP
#define MSHYBRID_FEM1D_HPP

#include <Eigen/Core>

#include <functional>

#include "mshybrid/problem.hpp"

namespace msh {

/// Uniform 1D mesh on (0,1), interior-unknown convention: N interior nodes
/// x_i = i*h, h = 1/(N+1); the homogeneous Dirichlet ends carry no unknowns.
struct Mesh1D {
    int N;
    double h;

    explicit Mesh1D(int n) : N(n), h(1.0 / (n + 1)) {}

    double node(int i) const { return (i + 1) * h; }   // i = 0..N-1
    Eigen::VectorXd nodes() const;
};

struct Tridiag {
    Eigen::VectorXd sub, diag, sup;   // lengths N-1, N, N-1
};

/// P1 stiffness (2/h main, -1/h off) and mass (2h/3 main, h/6 off).
Tridiag assemble_stiffness(const Mesh1D& mesh);
Tridiag assemble_mass(const Mesh1D& mesh);

/// Load vector <q, phi_j>, two-point Gauss per element (exact for cubic q).
Eigen::VectorXd load_vector(const std::function<double(double)>& q, const Mesh1D& mesh);

/// Thomas algorithm. Throws std::runtime_error on a vanishing pivot.
Eigen::VectorXd solve_tridiag(const Tridiag& A, const Eigen::VectorXd& rhs);

/// Matrix-vector product with a tridiagonal matrix.
Eigen::VectorXd tridiag_apply(const Tridiag& A, const Eigen::VectorXd& x);

/// Coarse-scale systems of the hybrid loop: ktilde * B_h * u = rhs. The state
/// and adjoint share the operator (it is self-adjoint); ktilde must stay
/// coercive.
Eigen::VectorXd solve_scaled(double ktilde, const Tridiag& B_h, const Eigen::VectorXd& rhs);

struct CoarseSystem {
    Mesh1D mesh;
    Tridiag B_h, M_h;
    Eigen::VectorXd F_h;   // load from the slow source q only
    Eigen::VectorXd y_h;   // current state
    Eigen::VectorXd p_h;   // current adjoint

    CoarseSystem(const Mesh1D& m, const std::function<double(double)>& q);

    void solve_state(double ktilde);
    void solve_adjoint(double ktilde, const Eigen::VectorXd& rhs);
};

/// Fine-mesh variable-coefficient reference solution of
/// -(K u')' = f on the uniform grid with N_ref interior nodes. Returns the
/// full nodal vector including the zero Dirichlet endpoints
/// (length N_ref + 2); per-element midpoint evaluation of K.
Eigen::VectorXd fine_reference(const FineProblem1D& problem, int N_ref = 999);

/// Grid matching fine_reference output: x_j = j/(N_ref+1), j = 0..N_ref+1.
Eigen::VectorXd fine_reference_nodes(int N_ref = 999);

/// ||pred - ref||_2 / ||ref||_2 over shared sample points.
double relative_l2(const Eigen::VectorXd& pred, const Eigen::VectorXd& ref);

} // namespace msh

#endif
