#include "mshybrid/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace msh {

CompressionSpec make_compression(const Mesh1D& mesh, double delta) {
    if (!(delta > 0.0)) throw std::invalid_argument("coupling: delta must be positive");
    CompressionSpec spec;
    spec.nodes = mesh.nodes();
    spec.delta = delta;
    spec.window = static_cast<int>(std::floor(mesh.N * delta));
    return spec;
}

namespace {

bool in_strip(double x, double delta) { return x < 0.5 * delta || x > 1.0 - 0.5 * delta; }

} // namespace

Eigen::VectorXd compress(const Eigen::VectorXd& v, const CompressionSpec& spec) {
    const Eigen::Index n = v.size();
    if (spec.nodes.size() != n) throw std::invalid_argument("coupling: node count mismatch");
    Eigen::VectorXd out(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (in_strip(spec.nodes(i), spec.delta)) {
            out(i) = v(i);
            continue;
        }
        const Eigen::Index lo = std::max<Eigen::Index>(0, i - spec.window);
        const Eigen::Index hi = std::min<Eigen::Index>(n - 1, i + spec.window);
        out(i) = v.segment(lo, hi - lo + 1).mean();
    }
    return out;
}

Eigen::VectorXd compress_adjoint(const Eigen::VectorXd& r, const CompressionSpec& spec) {
    const Eigen::Index n = r.size();
    if (spec.nodes.size() != n) throw std::invalid_argument("coupling: node count mismatch");
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (in_strip(spec.nodes(i), spec.delta)) {
            out(i) += r(i);
            continue;
        }
        const Eigen::Index lo = std::max<Eigen::Index>(0, i - spec.window);
        const Eigen::Index hi = std::min<Eigen::Index>(n - 1, i + spec.window);
        out.segment(lo, hi - lo + 1).array() += r(i) / double(hi - lo + 1);
    }
    return out;
}

double coupling_loss(const Eigen::VectorXd& Qv, const Eigen::VectorXd& y, double h) {
    return h * (Qv - y).squaredNorm();
}

Eigen::VectorXd adjoint_rhs(const Eigen::VectorXd& Qv, const Eigen::VectorXd& y,
                            double tau2, double h) {
    return 2.0 * tau2 * h * (Qv - y);
}

Eigen::VectorXd coupling_param_grad(const BatchTape& node_tape, const CompressionSpec& spec,
                                    const Eigen::VectorXd& y, double h) {
    const Eigen::VectorXd v = node_tape.value().matrix();
    const Eigen::VectorXd res = compress(v, spec) - y;
    const Eigen::ArrayXd seed = 2.0 * h * compress_adjoint(res, spec).array();
    const Eigen::ArrayXd zero = Eigen::ArrayXd::Zero(seed.size());
    return node_tape.backward(seed, zero, zero);
}

} // namespace msh
