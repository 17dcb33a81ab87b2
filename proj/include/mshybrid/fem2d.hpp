#ifndef MSHYBRID_FEM2D_HPP
#define MSHYBRID_FEM2D_HPP

#include <Eigen/Core>

#include "mshybrid/problem.hpp"

namespace msh {

/// Structured grid of bilinear quads on [0,1]^2: Nc cells per side,
/// (Nc+1)^2 nodes, lexicographic node numbering (x fastest).
struct Grid2D {
    int Nc;
    double h;

    explicit Grid2D(int cells) : Nc(cells), h(1.0 / cells) {}

    int nodes_per_side() const { return Nc + 1; }
    int num_nodes() const { return (Nc + 1) * (Nc + 1); }
    int node(int ix, int iy) const { return iy * (Nc + 1) + ix; }
    double x(int ix) const { return ix * h; }
    double y(int iy) const { return iy * h; }
    bool boundary(int ix, int iy) const { return ix == 0 || iy == 0 || ix == Nc || iy == Nc; }
};

/// Axis-aligned block of whole cells: cells [i0, i0+ni) x [j0, j0+nj).
struct BlockRect {
    int i0 = 0, j0 = 0, ni = 0, nj = 0;
};

/// Solves -div(K grad w) = q with the linear temperature drop boundary
/// condition w = x_dir (dir = 1 or 2) on the whole boundary. Bilinear FEM,
/// 2x2 Gauss quadrature with per-point coefficient evaluation,
/// Jacobi-preconditioned CG (rel. tol 1e-10, cap 50*Nc). Returns the full
/// nodal field. Throws on CG non-convergence or under-resolved grid.
Eigen::VectorXd solve_fine_2d(const FineProblem2D& problem, int dir, const Grid2D& grid);

struct BlockAverages {
    Eigen::Vector2d flux;   // <K grad w> over the block
    Eigen::Vector2d grad;   // <grad w> over the block
};

BlockAverages average_flux_and_gradient(const Eigen::VectorXd& w, const FineProblem2D& problem,
                                        const Grid2D& grid, const BlockRect& block);

/// Whole domain as a single block.
BlockRect full_domain_block(const Grid2D& grid);

} // namespace msh

#endif
