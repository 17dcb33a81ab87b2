#include "mshybrid/train.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "mshybrid/upscale.hpp"

namespace msh {

void TrainConfig::validate() const {
    if (!(eps > 0.0)) throw std::invalid_argument("train: eps must be positive");
    if (tau2 < 0.0 || tau1 < 0.0) throw std::invalid_argument("train: weights must be >= 0");
    if (M < 1 || N_h < 1) throw std::invalid_argument("train: M and N_h must be positive");
    if (it_max < 0) throw std::invalid_argument("train: it_max must be >= 0");
    if (!(lr0 > 0.0) || !(lr_decay > 0.0) || lr_step < 1)
        throw std::invalid_argument("train: learning-rate schedule must be positive");
    if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0) || !(adam_eps > 0.0))
        throw std::invalid_argument("train: Adam parameters out of range");
    arch.validate();
}

Architecture feature_architecture(const std::vector<int>& widths, double eps) {
    if (widths.empty() || widths.front() % 2 != 0)
        throw std::invalid_argument("train: first hidden width must be even");
    Architecture a;
    a.hidden_widths = widths;
    a.num_features = 2;
    a.feature_rows = widths.front() / 2;
    a.feature_scales = {1.0, 1.0 / eps};
    return a;
}

Architecture vanilla_architecture(const std::vector<int>& widths) {
    Architecture a;
    a.hidden_widths = widths;
    return a;
}

double lr_schedule(long it, const TrainConfig& cfg) {
    return cfg.lr0 * std::pow(cfg.lr_decay, double(it / cfg.lr_step));
}

double tau2_schedule(long it, const TrainConfig& cfg) {
    if (cfg.mode == TrainMode::pinn) return 0.0;
    if (cfg.mode == TrainMode::vpinn_schedule) return it < 14500 ? 5e5 : 5e2;
    return cfg.tau2;
}

Eigen::ArrayXd residual(const BatchTape& tape, const FineProblem1D& problem) {
    const Eigen::VectorXd& x = tape.points();
    Eigen::ArrayXd r(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i)
        r(i) = problem.rhs(x(i)) + problem.coeff_dx(x(i)) * tape.dx()(i)
               + problem.coeff(x(i)) * tape.dxx()(i);
    return r;
}

double residual_loss(const BatchTape& tape, const FineProblem1D& problem) {
    const Eigen::ArrayXd r = residual(tape, problem);
    return r.square().sum() / double(r.size());
}

Eigen::VectorXd residual_grad(const BatchTape& tape, const FineProblem1D& problem) {
    const Eigen::VectorXd& x = tape.points();
    const Eigen::Index M = x.size();
    const Eigen::ArrayXd r = residual(tape, problem);
    Eigen::ArrayXd seed_dx(M), seed_dxx(M);
    for (Eigen::Index i = 0; i < M; ++i) {
        seed_dx(i) = 2.0 / double(M) * problem.coeff_dx(x(i)) * r(i);
        seed_dxx(i) = 2.0 / double(M) * problem.coeff(x(i)) * r(i);
    }
    return tape.backward(Eigen::ArrayXd::Zero(M), seed_dx, seed_dxx);
}

void adam_step(Eigen::VectorXd& theta, AdamState& st, const Eigen::VectorXd& grad,
               double lr, const TrainConfig& cfg) {
    ++st.t;
    st.m = cfg.beta1 * st.m + (1.0 - cfg.beta1) * grad;
    st.v = cfg.beta2 * st.v + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(cfg.beta1, double(st.t));
    const double c2 = 1.0 - std::pow(cfg.beta2, double(st.t));
    theta.array() -= lr * (st.m.array() / c1)
                     / ((st.v.array() / c2).sqrt() + cfg.adam_eps);
}

Eigen::VectorXd total_gradient(const BatchTape& colloc_tape, const BatchTape& node_tape,
                               const FineProblem1D& problem, const CoarseSystem& coarse,
                               const CompressionSpec& spec, double tau2, double ktilde,
                               double kappa_min, bool* fallback) {
    if (fallback != nullptr) *fallback = false;
    if (tau2 == 0.0 || !(ktilde > kappa_min)) {
        if (tau2 != 0.0 && fallback != nullptr) *fallback = true;
        return residual_grad(colloc_tape, problem);
    }

    const double h = coarse.mesh.h;
    const Eigen::VectorXd Qv = compress(node_tape.value().matrix(), spec);
    const Eigen::VectorXd rhs = adjoint_rhs(Qv, coarse.y_h, tau2, h);
    const Eigen::VectorXd p = solve_scaled(ktilde, coarse.B_h, rhs);
    const double s = coarse.y_h.dot(tridiag_apply(coarse.B_h, p));

    // residual seeds plus the adjoint contribution s * k_M[theta] folded into
    // one backward pass over the collocation tape
    const Eigen::VectorXd& x = colloc_tape.points();
    const Eigen::Index M = x.size();
    const Eigen::ArrayXd r = residual(colloc_tape, problem);
    Eigen::ArrayXd seed_dx(M), seed_dxx(M);
    for (Eigen::Index i = 0; i < M; ++i) {
        const double K = problem.coeff(x(i));
        seed_dx(i) = (2.0 * problem.coeff_dx(x(i)) * r(i) + s * K) / double(M);
        seed_dxx(i) = 2.0 / double(M) * K * r(i);
    }
    Eigen::VectorXd grad = colloc_tape.backward(Eigen::ArrayXd::Zero(M), seed_dx, seed_dxx);
    grad += tau2 * coupling_param_grad(node_tape, spec, coarse.y_h, h);
    return grad;
}

TrainResult run_training(const TrainConfig& cfg) {
    cfg.validate();
    const FineProblem1D problem(cfg.eps);

    NetParams params = init_glorot(cfg.arch, cfg.seed);
    Eigen::VectorXd theta = params.flatten();
    AdamState adam{Eigen::VectorXd::Zero(theta.size()), Eigen::VectorXd::Zero(theta.size()), 0};

    BatchTape colloc(params, collocation_midpoints(cfg.M));
    const Mesh1D coarse_mesh(cfg.N_h);
    BatchTape nodes(params, coarse_mesh.nodes());
    const CompressionSpec spec = make_compression(coarse_mesh, cfg.eps);
    CoarseSystem coarse(coarse_mesh, [&](double x) { return problem.source_q(x); });

    const Eigen::VectorXd u_ref = fine_reference(problem, cfg.N_ref);
    BatchTape valid(params, fine_reference_nodes(cfg.N_ref));

    TrainResult result;
    result.history.reserve(static_cast<std::size_t>(cfg.it_max) + 1);

    const bool coupled = cfg.mode != TrainMode::pinn;
    double ktilde = 0.0;
    double rel_l2 = 0.0;

    auto refresh = [&]() {
        colloc.forward(params);
        nodes.forward(params);
        ktilde = upscale_1d_from_net(colloc, problem);
        if (coupled && ktilde > cfg.kappa_min) coarse.solve_state(ktilde);
    };
    auto validate_now = [&]() {
        valid.forward(params);
        rel_l2 = relative_l2(valid.value().matrix(), u_ref);
    };

    refresh();
    validate_now();

    for (long it = 0; it < cfg.it_max; ++it) {
        const double tau2 = coupled ? tau2_schedule(it, cfg) : 0.0;
        const double res_loss = residual_loss(colloc, problem);
        const double cpl_loss =
            coupled ? coupling_loss(compress(nodes.value().matrix(), spec), coarse.y_h,
                                    coarse.mesh.h)
                    : 0.0;
        const double total = res_loss + tau2 * cpl_loss;
        if (!std::isfinite(total))
            throw std::runtime_error("train: non-finite loss at iteration " + std::to_string(it));

        const double lr = lr_schedule(it, cfg);
        bool fallback = false;
        const Eigen::VectorXd grad =
            total_gradient(colloc, nodes, problem, coarse, spec, tau2, ktilde,
                           cfg.kappa_min, &fallback);

        if (it % cfg.log_every == 0) validate_now();
        result.history.push_back({it, lr, res_loss, tau2 * cpl_loss, rel_l2, ktilde, fallback});

        if (cfg.tol > 0.0 && total <= cfg.tol) {
            result.hit_tolerance = true;
            result.iterations = it;
            break;
        }
        if (cfg.stop_rel_l2 > 0.0 && rel_l2 <= cfg.stop_rel_l2) {
            result.hit_tolerance = true;
            result.iterations = it;
            break;
        }

        adam_step(theta, adam, grad, lr, cfg);
        params.unflatten(theta);
        refresh();
        result.iterations = it + 1;
    }

    validate_now();
    result.params = std::move(params);
    result.y_h = coarse.y_h;
    result.final_rel_l2 = rel_l2;
    result.final_ktilde = ktilde;
    return result;
}

} // namespace msh
