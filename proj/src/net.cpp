#include "mshybrid/net.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace msh {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

int num_branches(const Architecture& a) { return a.num_features > 0 ? a.num_features : 1; }

// Second-order dual number in x: value, d/dx, d2/dx2. Scalar reference path
// for eval_with_derivs; the batched tape uses the same propagation rules on
// whole matrices.
struct Dual2 {
    double v = 0.0, d1 = 0.0, d2 = 0.0;
};

Dual2 operator+(const Dual2& a, const Dual2& b) { return {a.v + b.v, a.d1 + b.d1, a.d2 + b.d2}; }
Dual2 operator*(double c, const Dual2& a) { return {c * a.v, c * a.d1, c * a.d2}; }
Dual2 operator*(const Dual2& a, const Dual2& b) {
    return {a.v * b.v, a.d1 * b.v + a.v * b.d1, a.d2 * b.v + 2.0 * a.d1 * b.d1 + a.v * b.d2};
}
Dual2 tanh(const Dual2& a) {
    const double t = std::tanh(a.v);
    const double tp = 1.0 - t * t;        // tanh'
    const double tpp = -2.0 * t * tp;     // tanh''
    return {t, tp * a.d1, tpp * a.d1 * a.d1 + tp * a.d2};
}
Dual2 sin(const Dual2& a) {
    const double s = std::sin(a.v), c = std::cos(a.v);
    return {s, c * a.d1, -s * a.d1 * a.d1 + c * a.d2};
}
Dual2 cos(const Dual2& a) {
    const double s = std::sin(a.v), c = std::cos(a.v);
    return {c, -s * a.d1, -c * a.d1 * a.d1 - s * a.d2};
}

} // namespace

int Architecture::first_layer_inputs() const {
    return num_features > 0 ? 2 * feature_rows : input_dim;
}

int Architecture::output_inputs() const {
    return num_branches(*this) * hidden_widths.back();
}

int Architecture::num_trainable() const {
    int n = 0;
    int in = first_layer_inputs();
    for (int w : hidden_widths) {
        n += w * in + w;
        in = w;
    }
    n += output_inputs() + 1;
    return n;
}

void Architecture::validate() const {
    if (hidden_widths.empty()) throw std::invalid_argument("net: depth must be >= 1");
    for (int w : hidden_widths)
        if (w < 1) throw std::invalid_argument("net: hidden width must be positive");
    if (num_features > 0) {
        if (input_dim != 1) throw std::invalid_argument("net: Fourier features expect 1D input");
        if (2 * feature_rows != hidden_widths.front())
            throw std::invalid_argument("net: 2*m must equal the first hidden width");
        if (static_cast<int>(feature_scales.size()) != num_features)
            throw std::invalid_argument("net: one scale per feature map required");
        for (double r : feature_scales)
            if (!(r > 0.0)) throw std::invalid_argument("net: feature scales must be positive");
    } else if (input_dim != 1) {
        throw std::invalid_argument("net: only 1D input is supported");
    }
}

Eigen::VectorXd NetParams::flatten() const {
    Eigen::VectorXd theta(arch.num_trainable());
    Eigen::Index pos = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        const auto& W = weights[l];
        theta.segment(pos, W.size()) = Eigen::Map<const Eigen::VectorXd>(W.data(), W.size());
        pos += W.size();
        theta.segment(pos, biases[l].size()) = biases[l];
        pos += biases[l].size();
    }
    return theta;
}

void NetParams::unflatten(const Eigen::VectorXd& theta) {
    if (theta.size() != arch.num_trainable())
        throw std::invalid_argument("net: theta length mismatch");
    Eigen::Index pos = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        auto& W = weights[l];
        Eigen::Map<Eigen::VectorXd>(W.data(), W.size()) = theta.segment(pos, W.size());
        pos += W.size();
        biases[l] = theta.segment(pos, biases[l].size());
        pos += biases[l].size();
    }
}

NetParams init_glorot(const Architecture& arch, std::uint64_t seed) {
    arch.validate();
    NetParams p;
    p.arch = arch;
    std::mt19937_64 rng(seed);

    for (int k = 0; k < arch.num_features; ++k) {
        std::normal_distribution<double> gauss(0.0, arch.feature_scales[k]);
        Eigen::MatrixXd B(arch.feature_rows, arch.input_dim);
        for (Eigen::Index j = 0; j < B.size(); ++j) B.data()[j] = gauss(rng);
        p.features.push_back(std::move(B));
    }

    int in = arch.first_layer_inputs();
    std::vector<std::pair<int, int>> shapes;
    for (int w : arch.hidden_widths) {
        shapes.emplace_back(w, in);
        in = w;
    }
    shapes.emplace_back(1, arch.output_inputs());

    for (auto [rows, cols] : shapes) {
        const double limit = std::sqrt(6.0 / double(rows + cols));
        std::uniform_real_distribution<double> uni(-limit, limit);
        Eigen::MatrixXd W(rows, cols);
        for (Eigen::Index j = 0; j < W.size(); ++j) W.data()[j] = uni(rng);
        p.weights.push_back(std::move(W));
        p.biases.emplace_back(Eigen::VectorXd::Zero(rows));
    }
    return p;
}

EvalTriple eval_with_derivs(const NetParams& params, double x) {
    const Architecture& arch = params.arch;
    const int nb = num_branches(arch);
    const int nl = static_cast<int>(arch.hidden_widths.size());
    const Dual2 xd{x, 1.0, 0.0};

    std::vector<Dual2> concat;
    concat.reserve(arch.output_inputs());
    for (int k = 0; k < nb; ++k) {
        std::vector<Dual2> a;
        if (arch.num_features > 0) {
            const auto& B = params.features[k];
            a.resize(2 * arch.feature_rows);
            for (int r = 0; r < arch.feature_rows; ++r) {
                const Dual2 arg = (kTwoPi * B(r, 0)) * xd;
                a[r] = cos(arg);
                a[arch.feature_rows + r] = sin(arg);
            }
        } else {
            a = {xd};
        }
        for (int l = 0; l < nl; ++l) {
            const auto& W = params.weights[l];
            const auto& b = params.biases[l];
            std::vector<Dual2> z(W.rows());
            for (Eigen::Index i = 0; i < W.rows(); ++i) {
                Dual2 u{b(i), 0.0, 0.0};
                for (Eigen::Index j = 0; j < W.cols(); ++j) u = u + W(i, j) * a[j];
                z[i] = tanh(u);
            }
            a = std::move(z);
        }
        concat.insert(concat.end(), a.begin(), a.end());
    }

    const auto& Wout = params.weights.back();
    Dual2 raw{params.biases.back()(0), 0.0, 0.0};
    for (Eigen::Index j = 0; j < Wout.cols(); ++j) raw = raw + Wout(0, j) * concat[j];

    // boundary transform v = x(1-x) vbar, applied as the final layer
    const Dual2 g{x * (1.0 - x), 1.0 - 2.0 * x, -2.0};
    const Dual2 v = g * raw;
    return {v.v, v.d1, v.d2};
}

BatchTape::BatchTape(const NetParams& params, Eigen::VectorXd xs) : arch_(params.arch), xs_(std::move(xs)) {
    arch_.validate();
    const int nb = num_branches(arch_);
    const int nl = static_cast<int>(arch_.hidden_widths.size());
    const Eigen::Index M = xs_.size();

    inputs_.resize(nb);
    preact_.assign(nb, std::vector<Triple>(nl));
    act_.assign(nb, std::vector<Triple>(nl));

    for (int k = 0; k < nb; ++k) {
        Triple& in = inputs_[k];
        if (arch_.num_features > 0) {
            const int m = arch_.feature_rows;
            const Eigen::VectorXd freq = kTwoPi * params.features[k].col(0);
            const Eigen::MatrixXd arg = freq * xs_.transpose();   // m x M
            in.resize(2 * m, M);
            in.v.topRows(m) = arg.array().cos();
            in.v.bottomRows(m) = arg.array().sin();
            in.x.topRows(m) = -(in.v.bottomRows(m).array().colwise() * freq.array());
            in.x.bottomRows(m) = in.v.topRows(m).array().colwise() * freq.array();
            const Eigen::ArrayXd freq2 = freq.array().square();
            in.xx.topRows(m) = -(in.v.topRows(m).array().colwise() * freq2);
            in.xx.bottomRows(m) = -(in.v.bottomRows(m).array().colwise() * freq2);
        } else {
            in.resize(1, M);
            in.v = xs_.transpose();
            in.x.setOnes();
            in.xx.setZero();
        }
        int w_in = arch_.first_layer_inputs();
        for (int l = 0; l < nl; ++l) {
            preact_[k][l].resize(arch_.hidden_widths[l], M);
            act_[k][l].resize(arch_.hidden_widths[l], M);
            w_in = arch_.hidden_widths[l];
        }
    }
    raw_out_.resize(1, M);
    value_.resize(M);
    dx_.resize(M);
    dxx_.resize(M);
}

void BatchTape::forward(const NetParams& params) {
    const int nb = num_branches(arch_);
    const int nl = static_cast<int>(arch_.hidden_widths.size());
    const Eigen::Index M = xs_.size();
    last_params_ = &params;

    const auto& Wout = params.weights.back();
    raw_out_.v.setConstant(params.biases.back()(0));
    raw_out_.x.setZero();
    raw_out_.xx.setZero();

    const int w_last = arch_.hidden_widths.back();
    for (int k = 0; k < nb; ++k) {
        const Triple* prev = &inputs_[k];
        for (int l = 0; l < nl; ++l) {
            Triple& U = preact_[k][l];
            Triple& Z = act_[k][l];
            const auto& W = params.weights[l];
            U.v.noalias() = W * prev->v;
            U.v.colwise() += params.biases[l];
            U.x.noalias() = W * prev->x;
            U.xx.noalias() = W * prev->xx;

            const auto t = U.v.array().tanh();
            Z.v = t;
            const auto tp = 1.0 - t.square();
            Z.x = tp * U.x.array();
            Z.xx = tp * U.xx.array() - 2.0 * t * tp * U.x.array().square();
            prev = &Z;
        }
        const auto Wk = Wout.middleCols(Eigen::Index(k) * w_last, w_last);
        raw_out_.v.noalias() += Wk * prev->v;
        raw_out_.x.noalias() += Wk * prev->x;
        raw_out_.xx.noalias() += Wk * prev->xx;
    }

    const Eigen::ArrayXd x = xs_.array();
    const Eigen::ArrayXd g = x * (1.0 - x);
    const Eigen::ArrayXd gp = 1.0 - 2.0 * x;
    const Eigen::ArrayXd rv = raw_out_.v.transpose().array();
    const Eigen::ArrayXd rx = raw_out_.x.transpose().array();
    const Eigen::ArrayXd rxx = raw_out_.xx.transpose().array();
    value_ = g * rv;
    dx_ = gp * rv + g * rx;
    dxx_ = -2.0 * rv + 2.0 * gp * rx + g * rxx;
    (void)M;
}

Eigen::VectorXd BatchTape::backward(const Eigen::ArrayXd& seed_value,
                                    const Eigen::ArrayXd& seed_dx,
                                    const Eigen::ArrayXd& seed_dxx) const {
    if (last_params_ == nullptr) throw std::logic_error("net: backward before forward");
    const NetParams& params = *last_params_;
    const int nb = num_branches(arch_);
    const int nl = static_cast<int>(arch_.hidden_widths.size());
    const int w_last = arch_.hidden_widths.back();

    // seeds on (v, v_x, v_xx) -> seeds on the raw output vbar triple
    const Eigen::ArrayXd x = xs_.array();
    const Eigen::ArrayXd g = x * (1.0 - x);
    const Eigen::ArrayXd gp = 1.0 - 2.0 * x;
    Eigen::RowVectorXd sv = (g * seed_value + gp * seed_dx - 2.0 * seed_dxx).matrix().transpose();
    Eigen::RowVectorXd sx = (g * seed_dx + 2.0 * gp * seed_dxx).matrix().transpose();
    Eigen::RowVectorXd sxx = (g * seed_dxx).matrix().transpose();

    std::vector<Eigen::MatrixXd> gW(params.weights.size());
    std::vector<Eigen::VectorXd> gb(params.biases.size());
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
        gW[l].setZero(params.weights[l].rows(), params.weights[l].cols());
        gb[l].setZero(params.biases[l].size());
    }

    gb.back()(0) = sv.sum();
    const auto& Wout = params.weights.back();

    Triple adj;       // adjoint of the current activation triple
    Triple adj_pre;   // adjoint of the pre-activation triple
    for (int k = 0; k < nb; ++k) {
        const auto Wk = Wout.middleCols(Eigen::Index(k) * w_last, w_last);
        const Triple& Zl = act_[k][nl - 1];
        auto gWk = gW.back().middleCols(Eigen::Index(k) * w_last, w_last);
        gWk.noalias() += sv * Zl.v.transpose();
        gWk.noalias() += sx * Zl.x.transpose();
        gWk.noalias() += sxx * Zl.xx.transpose();

        adj.v.noalias() = Wk.transpose() * sv;
        adj.x.noalias() = Wk.transpose() * sx;
        adj.xx.noalias() = Wk.transpose() * sxx;

        for (int l = nl - 1; l >= 0; --l) {
            const Triple& U = preact_[k][l];
            const auto t = act_[k][l].v.array();
            const auto tp = 1.0 - t.square();
            const auto tpp = -2.0 * t * tp;
            const auto tppp = -2.0 * tp.square() + 4.0 * t.square() * tp;
            const auto ux = U.x.array();
            const auto uxx = U.xx.array();

            adj_pre.v = (adj.v.array() * tp + adj.x.array() * (tpp * ux)
                         + adj.xx.array() * (tppp * ux.square() + tpp * uxx)).matrix();
            adj_pre.x = (adj.x.array() * tp + adj.xx.array() * (2.0 * tpp * ux)).matrix();
            adj_pre.xx = (adj.xx.array() * tp).matrix();

            const Triple& prev = (l == 0) ? inputs_[k] : act_[k][l - 1];
            gW[l].noalias() += adj_pre.v * prev.v.transpose();
            gW[l].noalias() += adj_pre.x * prev.x.transpose();
            gW[l].noalias() += adj_pre.xx * prev.xx.transpose();
            gb[l] += adj_pre.v.rowwise().sum();

            if (l > 0) {
                const auto& W = params.weights[l];
                adj.v.noalias() = W.transpose() * adj_pre.v;
                adj.x.noalias() = W.transpose() * adj_pre.x;
                adj.xx.noalias() = W.transpose() * adj_pre.xx;
            }
        }
    }

    Eigen::VectorXd grad(arch_.num_trainable());
    Eigen::Index pos = 0;
    for (std::size_t l = 0; l < gW.size(); ++l) {
        grad.segment(pos, gW[l].size()) = Eigen::Map<const Eigen::VectorXd>(gW[l].data(), gW[l].size());
        pos += gW[l].size();
        grad.segment(pos, gb[l].size()) = gb[l];
        pos += gb[l].size();
    }
    return grad;
}

Eigen::VectorXd grad_params(const NetParams& params, double x, WhichDeriv which) {
    Eigen::VectorXd xs(1);
    xs(0) = x;
    BatchTape tape(params, xs);
    tape.forward(params);
    Eigen::ArrayXd a = Eigen::ArrayXd::Zero(1), b = a, c = a;
    switch (which) {
        case WhichDeriv::value: a(0) = 1.0; break;
        case WhichDeriv::dx: b(0) = 1.0; break;
        case WhichDeriv::dxx: c(0) = 1.0; break;
    }
    return tape.backward(a, b, c);
}

} // namespace msh
