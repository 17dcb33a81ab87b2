#ifndef MSHYBRID_UPSCALE_HPP
#define MSHYBRID_UPSCALE_HPP

#include <Eigen/Core>

#include <vector>

#include "mshybrid/fem2d.hpp"
#include "mshybrid/net.hpp"
#include "mshybrid/problem.hpp"

namespace msh {

/// Default coercivity threshold for upscaled conductivities.
inline constexpr double kKappaMin = 1e-6;

/// Midpoint collocation grid x_i = (i - 1/2)/M, i = 1..M.
Eigen::VectorXd collocation_midpoints(int M);

/// K[u] = int K(x) (u_x + 1) dx by the midpoint rule over a tape holding the
/// current network derivatives at the collocation points.
double upscale_1d_from_net(const BatchTape& tape, const FineProblem1D& problem);

/// Same quantity from a fine FEM reference (full nodal vector including the
/// endpoints): central-difference nodal derivative, uniform nodal mean.
double upscale_1d_from_fem(const Eigen::VectorXd& u_full, const FineProblem1D& problem);

/// d/dtheta of upscale_1d_from_net: (1/M) sum_i K(x_i) d(v_x(x_i))/dtheta.
Eigen::VectorXd ktilde_param_grad(const BatchTape& tape, const FineProblem1D& problem);

/// 2x2 upscaled tensor for one block. valid is false when the averaged
/// gradient matrix is too ill-conditioned to invert; coercive tracks the
/// minimum eigenvalue of the symmetric part against kKappaMin.
struct UpscaledTensor {
    int block_id = 0;
    Eigen::Matrix2d K = Eigen::Matrix2d::Zero();
    bool valid = false;
    bool coercive = false;
};

/// Per-block tensors from the two linear-drop solutions: solves
/// K * [T1 T2] = [F1 F2] with block-averaged gradients T_i and fluxes F_i.
/// A single full-domain block uses the fluxes directly (the averaged
/// gradient matrix is the identity under linear-drop boundary conditions).
std::vector<UpscaledTensor> upscale_2d(const Eigen::VectorXd& w1, const Eigen::VectorXd& w2,
                                       const FineProblem2D& problem, const Grid2D& grid,
                                       const std::vector<BlockRect>& blocks,
                                       double cond_cap = 1e8);

} // namespace msh

#endif
