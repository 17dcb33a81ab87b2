#include "mshybrid/fem2d.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace msh {

namespace {

// 2x2 Gauss rule on the reference square [-1,1]^2, unit weights.
constexpr double kG = 0.57735026918962576451;   // 1/sqrt(3)
constexpr std::array<double, 2> kGp = {-kG, kG};

// bilinear shape functions at (xi, eta); corner order (-1,-1), (1,-1), (1,1), (-1,1)
std::array<double, 4> shape(double xi, double eta) {
    return {0.25 * (1 - xi) * (1 - eta), 0.25 * (1 + xi) * (1 - eta),
            0.25 * (1 + xi) * (1 + eta), 0.25 * (1 - xi) * (1 + eta)};
}

// reference-coordinate gradients, same corner order
std::array<Eigen::Vector2d, 4> shape_grad(double xi, double eta) {
    return {Eigen::Vector2d{-0.25 * (1 - eta), -0.25 * (1 - xi)},
            Eigen::Vector2d{0.25 * (1 - eta), -0.25 * (1 + xi)},
            Eigen::Vector2d{0.25 * (1 + eta), 0.25 * (1 + xi)},
            Eigen::Vector2d{-0.25 * (1 + eta), 0.25 * (1 - xi)}};
}

std::array<int, 4> cell_nodes(const Grid2D& g, int cx, int cy) {
    return {g.node(cx, cy), g.node(cx + 1, cy), g.node(cx + 1, cy + 1), g.node(cx, cy + 1)};
}

} // namespace

BlockRect full_domain_block(const Grid2D& grid) { return {0, 0, grid.Nc, grid.Nc}; }

Eigen::VectorXd solve_fine_2d(const FineProblem2D& problem, int dir, const Grid2D& grid) {
    if (dir != 1 && dir != 2) throw std::invalid_argument("fem2d: dir must be 1 or 2");
    if (grid.h > problem.min_scale() / 4.0)
        throw std::runtime_error("fem2d: grid does not resolve the coefficient oscillations");

    const int n = grid.num_nodes();
    const int nps = grid.nodes_per_side();
    const double h = grid.h;

    std::vector<int> unknown_of(n, -1);
    std::vector<int> node_of;
    for (int iy = 0; iy < nps; ++iy)
        for (int ix = 0; ix < nps; ++ix)
            if (!grid.boundary(ix, iy)) {
                unknown_of[grid.node(ix, iy)] = static_cast<int>(node_of.size());
                node_of.push_back(grid.node(ix, iy));
            }
    const int nu = static_cast<int>(node_of.size());

    Eigen::VectorXd w(n);
    for (int iy = 0; iy < nps; ++iy)
        for (int ix = 0; ix < nps; ++ix)
            w(grid.node(ix, iy)) = (dir == 1) ? grid.x(ix) : grid.y(iy);
    // interior values are overwritten by the solve; boundary keeps x_dir

    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(nu) * 9);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(nu);
    const double detJ = h * h / 4.0;   // reference-to-physical Jacobian determinant

    for (int cy = 0; cy < grid.Nc; ++cy) {
        for (int cx = 0; cx < grid.Nc; ++cx) {
            const auto nodes = cell_nodes(grid, cx, cy);
            Eigen::Matrix4d Ke = Eigen::Matrix4d::Zero();
            Eigen::Vector4d fe = Eigen::Vector4d::Zero();
            for (double eta : kGp) {
                for (double xi : kGp) {
                    const double xq = (cx + 0.5 * (1 + xi)) * h;
                    const double yq = (cy + 0.5 * (1 + eta)) * h;
                    const double K = problem.coeff(xq, yq);
                    const auto N = shape(xi, eta);
                    const auto dN = shape_grad(xi, eta);
                    for (int a = 0; a < 4; ++a) {
                        const Eigen::Vector2d ga = (2.0 / h) * dN[a];
                        for (int bx = 0; bx < 4; ++bx)
                            Ke(a, bx) += K * ga.dot((2.0 / h) * dN[bx]) * detJ;
                        fe(a) += problem.source(xq, yq) * N[a] * detJ;
                    }
                }
            }
            for (int a = 0; a < 4; ++a) {
                const int ra = unknown_of[nodes[a]];
                if (ra < 0) continue;
                b(ra) += fe(a);
                for (int c = 0; c < 4; ++c) {
                    const int rc = unknown_of[nodes[c]];
                    if (rc >= 0)
                        trips.emplace_back(ra, rc, Ke(a, c));
                    else
                        b(ra) -= Ke(a, c) * w(nodes[c]);
                }
            }
        }
    }

    Eigen::SparseMatrix<double> A(nu, nu);
    A.setFromTriplets(trips.begin(), trips.end());

    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                             Eigen::DiagonalPreconditioner<double>> cg;
    cg.setTolerance(1e-10);
    cg.setMaxIterations(50 * grid.Nc);
    cg.compute(A);
    const Eigen::VectorXd u = cg.solve(b);
    if (cg.info() != Eigen::Success)
        throw std::runtime_error("fem2d: CG did not converge within the iteration cap");

    for (int i = 0; i < nu; ++i) w(node_of[i]) = u(i);
    return w;
}

BlockAverages average_flux_and_gradient(const Eigen::VectorXd& w, const FineProblem2D& problem,
                                        const Grid2D& grid, const BlockRect& block) {
    if (block.i0 < 0 || block.j0 < 0 || block.ni < 1 || block.nj < 1 ||
        block.i0 + block.ni > grid.Nc || block.j0 + block.nj > grid.Nc)
        throw std::invalid_argument("fem2d: block not aligned with the cell grid");

    const double h = grid.h;
    const double detJ = h * h / 4.0;
    Eigen::Vector2d flux = Eigen::Vector2d::Zero();
    Eigen::Vector2d grad = Eigen::Vector2d::Zero();

    for (int cy = block.j0; cy < block.j0 + block.nj; ++cy) {
        for (int cx = block.i0; cx < block.i0 + block.ni; ++cx) {
            const auto nodes = cell_nodes(grid, cx, cy);
            for (double eta : kGp) {
                for (double xi : kGp) {
                    const double xq = (cx + 0.5 * (1 + xi)) * h;
                    const double yq = (cy + 0.5 * (1 + eta)) * h;
                    const auto dN = shape_grad(xi, eta);
                    Eigen::Vector2d g = Eigen::Vector2d::Zero();
                    for (int a = 0; a < 4; ++a) g += w(nodes[a]) * (2.0 / h) * dN[a];
                    grad += g * detJ;
                    flux += problem.coeff(xq, yq) * g * detJ;
                }
            }
        }
    }
    const double area = double(block.ni) * double(block.nj) * h * h;
    return {flux / area, grad / area};
}

} // namespace msh
