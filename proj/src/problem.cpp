#include "mshybrid/problem.hpp"

#include <cmath>

namespace msh {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

double FineProblem1D::coeff(double x) const {
    return 1.0 / (1.2 + std::sin(kTwoPi * x / eps));
}

double FineProblem1D::coeff_dx(double x) const {
    const double s = std::sin(kTwoPi * x / eps);
    const double c = std::cos(kTwoPi * x / eps);
    const double d = 1.2 + s;
    return -(kTwoPi / eps) * c / (d * d);
}

double FineProblem1D::source_q(double x) const { return -3.0 * (2.0 * x - 1.0); }

double FineProblem1D::rhs(double x) const { return source_q(x) + coeff_dx(x); }

double coeff_1d_mean(double /*eps*/) {
    // independent of eps for full-period coefficients
    return 1.0 / std::sqrt(1.2 * 1.2 - 1.0);
}

double FineProblem2D::coeff(double x1, double x2) const {
    if (constant > 0.0) return constant;
    switch (which) {
        case Coeff2D::K1: {
            const double eps = 1.0 / 32.0;
            return 3.0 + std::sin(kTwoPi * x1 / eps) + std::sin(kTwoPi * x2 / eps);
        }
        case Coeff2D::K2: {
            const double e1 = 1.0 / 16.0, e2 = 1.0 / 32.0;
            return 3.0 + std::sin(kTwoPi * x1 / e1) + 1.5 * std::cos(kTwoPi * x2 / e2);
        }
        case Coeff2D::K3: {
            const double eps = 1.0 / 16.0;
            return 1.0 / (2.0 + 1.8 * std::sin(kTwoPi * (2.0 * x1 - x2) / eps));
        }
    }
    return 0.0;
}

double FineProblem2D::source(double x1, double x2) const {
    if (!gaussian_source) return 0.0;
    const double dx = x1 - 0.5, dy = x2 - 0.5;
    return std::exp(-(dx * dx + dy * dy));
}

double FineProblem2D::min_scale() const {
    if (constant > 0.0) return 1.0;
    switch (which) {
        case Coeff2D::K1: return 1.0 / 32.0;
        case Coeff2D::K2: return 1.0 / 32.0;
        case Coeff2D::K3: return 1.0 / 16.0;
    }
    return 1.0;
}

} // namespace msh
