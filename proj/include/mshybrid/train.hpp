#ifndef MSHYBRID_TRAIN_HPP
#define MSHYBRID_TRAIN_HPP

#include <Eigen/Core>

#include <cstdint>
#include <vector>

#include "mshybrid/coupling.hpp"
#include "mshybrid/fem1d.hpp"
#include "mshybrid/net.hpp"
#include "mshybrid/problem.hpp"

namespace msh {

enum class TrainMode { hybrid, pinn, vpinn_schedule };

struct TrainConfig {
    double eps = 1.0 / 16.0;
    double tau1 = 0.0;      // boundary-term weight; inert here (exact BC)
    double tau2 = 10.0;
    int M = 280;            // collocation points
    int N_h = 50;           // coarse interior nodes
    long it_max = 30000;
    double tol = 0.0;       // stop when total loss <= tol (0 = run to it_max)
    double lr0 = 5e-4;
    double lr_decay = 0.75;
    int lr_step = 1000;
    double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
    std::uint64_t seed = 0;
    TrainMode mode = TrainMode::hybrid;
    double kappa_min = 1e-6;
    Architecture arch;
    int log_every = 500;    // relative-error validation cadence
    int N_ref = 999;        // validation reference mesh
    double stop_rel_l2 = 0.0;   // > 0: stop once the validation error drops below

    void validate() const;   // throws std::invalid_argument
};

/// Two-branch Fourier feature net with scales (1, 1/eps) and the given
/// hidden widths; width must be even (m = width/2).
Architecture feature_architecture(const std::vector<int>& widths, double eps);

/// Plain feed-forward baseline of the same widths.
Architecture vanilla_architecture(const std::vector<int>& widths);

struct HistoryRow {
    long it = 0;
    double lr = 0.0;
    double residual = 0.0;
    double coupling = 0.0;
    double rel_l2 = 0.0;    // last computed validation error
    double ktilde = 0.0;
    bool fallback = false;  // coercivity guard tripped this iteration
};

struct TrainResult {
    NetParams params;
    Eigen::VectorXd y_h;
    std::vector<HistoryRow> history;
    double final_rel_l2 = 0.0;
    double final_ktilde = 0.0;
    long iterations = 0;
    bool hit_tolerance = false;
};

double lr_schedule(long it, const TrainConfig& cfg);

/// Coupling weight at a given iteration; constant except in the
/// vpinn_schedule mode (5e5 for the first 14500 iterations, then 5e2).
double tau2_schedule(long it, const TrainConfig& cfg);

/// PDE residual r_i = f(x_i) + K'(x_i) v_x + K(x_i) v_xx at the tape points.
Eigen::ArrayXd residual(const BatchTape& tape, const FineProblem1D& problem);

/// (1/M) sum r_i^2.
double residual_loss(const BatchTape& tape, const FineProblem1D& problem);

/// Gradient of residual_loss through the tape.
Eigen::VectorXd residual_grad(const BatchTape& tape, const FineProblem1D& problem);

struct AdamState {
    Eigen::VectorXd m, v;
    long t = 0;
};

void adam_step(Eigen::VectorXd& theta, AdamState& st, const Eigen::VectorXd& grad,
               double lr, const TrainConfig& cfg);

/// Assembled gradient of the reduced total loss at the current iterate.
/// colloc_tape and node_tape must be forwarded for params; y_h must solve the
/// coarse state system for the current upscaled coefficient. When the
/// coefficient falls below kappa_min the coupling/adjoint part is skipped and
/// *fallback is set.
Eigen::VectorXd total_gradient(const BatchTape& colloc_tape, const BatchTape& node_tape,
                               const FineProblem1D& problem, const CoarseSystem& coarse,
                               const CompressionSpec& spec, double tau2, double ktilde,
                               double kappa_min, bool* fallback);

/// Full training loop: initial state solve, then per iteration the adjoint
/// solve, gradient assembly, Adam step, control update and state solve.
/// Throws std::runtime_error on NaN loss.
TrainResult run_training(const TrainConfig& cfg);

} // namespace msh

#endif
