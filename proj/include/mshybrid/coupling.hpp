#ifndef MSHYBRID_COUPLING_HPP
#define MSHYBRID_COUPLING_HPP

#include <Eigen/Core>

#include "mshybrid/fem1d.hpp"
#include "mshybrid/net.hpp"

namespace msh {

/// Moving-average compression on the coarse node values. Interior nodes get
/// the mean over indices |j - i| <= window; nodes inside the boundary strip
/// x < delta/2 or x > 1 - delta/2 pass through unchanged. Windows reaching
/// past the ends of the array are clipped with renormalized count.
struct CompressionSpec {
    Eigen::VectorXd nodes;   // coarse node coordinates
    double delta = 0.0;      // strip half-width parameter, = eps by default
    int window = 0;          // half-width in nodes
};

/// window = floor(N * delta) for an N-node coarse mesh.
CompressionSpec make_compression(const Mesh1D& mesh, double delta);

Eigen::VectorXd compress(const Eigen::VectorXd& v, const CompressionSpec& spec);

/// Transpose of the (linear) compression operator: <compress(v), r> = <v, adjoint(r)>.
Eigen::VectorXd compress_adjoint(const Eigen::VectorXd& r, const CompressionSpec& spec);

/// Lumped discrete misfit h * sum_i (Qv_i - y_i)^2 (the tau_2 factor is
/// applied by the caller).
double coupling_loss(const Eigen::VectorXd& Qv, const Eigen::VectorXd& y, double h);

/// Right-hand side of the adjoint solve: 2 * tau2 * h * (Qv - y), the
/// y-derivative of the tau2-weighted misfit under the same lumping.
Eigen::VectorXd adjoint_rhs(const Eigen::VectorXd& Qv, const Eigen::VectorXd& y,
                            double tau2, double h);

/// d/dtheta of coupling_loss at fixed y: backward pass on a tape built over
/// the coarse nodes with seed 2h * Q^T (Qv - y) on the values.
Eigen::VectorXd coupling_param_grad(const BatchTape& node_tape, const CompressionSpec& spec,
                                    const Eigen::VectorXd& y, double h);

} // namespace msh

#endif
