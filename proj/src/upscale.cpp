#include "mshybrid/upscale.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>

namespace msh {

Eigen::VectorXd collocation_midpoints(int M) {
    if (M < 1) throw std::invalid_argument("upscale: M must be positive");
    Eigen::VectorXd x(M);
    for (int i = 0; i < M; ++i) x(i) = (i + 0.5) / M;
    return x;
}

double upscale_1d_from_net(const BatchTape& tape, const FineProblem1D& problem) {
    const Eigen::VectorXd& x = tape.points();
    const Eigen::Index M = x.size();
    double acc = 0.0;
    for (Eigen::Index i = 0; i < M; ++i) acc += problem.coeff(x(i)) * (tape.dx()(i) + 1.0);
    return acc / double(M);
}

double upscale_1d_from_fem(const Eigen::VectorXd& u_full, const FineProblem1D& problem) {
    const Eigen::Index n = u_full.size();
    if (n < 3) throw std::invalid_argument("upscale: reference vector too short");
    const double h = 1.0 / double(n - 1);
    double acc = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        double ux;
        if (j == 0)
            ux = (u_full(1) - u_full(0)) / h;
        else if (j == n - 1)
            ux = (u_full(n - 1) - u_full(n - 2)) / h;
        else
            ux = (u_full(j + 1) - u_full(j - 1)) / (2.0 * h);
        acc += problem.coeff(j * h) * (ux + 1.0);
    }
    return acc / double(n);
}

Eigen::VectorXd ktilde_param_grad(const BatchTape& tape, const FineProblem1D& problem) {
    const Eigen::VectorXd& x = tape.points();
    const Eigen::Index M = x.size();
    Eigen::ArrayXd seed_dx(M);
    for (Eigen::Index i = 0; i < M; ++i) seed_dx(i) = problem.coeff(x(i)) / double(M);
    const Eigen::ArrayXd zero = Eigen::ArrayXd::Zero(M);
    return tape.backward(zero, seed_dx, zero);
}

std::vector<UpscaledTensor> upscale_2d(const Eigen::VectorXd& w1, const Eigen::VectorXd& w2,
                                       const FineProblem2D& problem, const Grid2D& grid,
                                       const std::vector<BlockRect>& blocks,
                                       double cond_cap) {
    std::vector<UpscaledTensor> out;
    out.reserve(blocks.size());
    const BlockRect full = full_domain_block(grid);

    int id = 0;
    for (const BlockRect& blk : blocks) {
        UpscaledTensor t;
        t.block_id = id++;

        const BlockAverages a1 = average_flux_and_gradient(w1, problem, grid, blk);
        const BlockAverages a2 = average_flux_and_gradient(w2, problem, grid, blk);

        const bool is_full = blk.i0 == full.i0 && blk.j0 == full.j0 &&
                             blk.ni == full.ni && blk.nj == full.nj;
        if (is_full) {
            // <grad w_i> = e_i on the full domain, so the fluxes are the columns
            t.K.col(0) = a1.flux;
            t.K.col(1) = a2.flux;
            t.valid = true;
        } else {
            Eigen::Matrix2d G, F;
            G.col(0) = a1.grad;
            G.col(1) = a2.grad;
            F.col(0) = a1.flux;
            F.col(1) = a2.flux;
            const Eigen::JacobiSVD<Eigen::Matrix2d> svd(G, Eigen::ComputeFullU | Eigen::ComputeFullV);
            const double smin = svd.singularValues()(1);
            if (smin <= 0.0 || svd.singularValues()(0) / smin > cond_cap) {
                t.valid = false;
                out.push_back(t);
                continue;
            }
            t.K = F * G.inverse();
            t.valid = true;
        }

        const Eigen::Matrix2d sym = 0.5 * (t.K + t.K.transpose());
        const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(sym);
        t.coercive = es.eigenvalues().minCoeff() > kKappaMin;
        out.push_back(t);
    }
    return out;
}

} // namespace msh
