#ifndef MSHYBRID_PROBLEM_HPP
#define MSHYBRID_PROBLEM_HPP

#include <functional>

namespace msh {

/// 1D fine-scale heat conduction problem on (0,1) with homogeneous
/// Dirichlet ends: -(K u')' = f, K(x) = 1/(1.2 + sin(2*pi*x/eps)),
/// f = q + K' with q(x) = -3(2x - 1).
struct FineProblem1D {
    double eps;

    explicit FineProblem1D(double eps_) : eps(eps_) {}

    double coeff(double x) const;
    double coeff_dx(double x) const;   // analytic K'
    double source_q(double x) const;   // q = -3(2x - 1)
    double rhs(double x) const;        // f = q + K'
};

/// Exact value of the integral of K over [0,1] for full-period eps = 1/k:
/// int 1/(a + sin) over a period is 1/sqrt(a^2 - 1).
double coeff_1d_mean(double eps);

enum class Coeff2D { K1, K2, K3 };

/// 2D oscillatory coefficient field on [0,1]^2 with an optional Gaussian
/// source. The three closed-form coefficients cover isotropic, axis-aligned
/// anisotropic and sheared media.
struct FineProblem2D {
    Coeff2D which = Coeff2D::K1;
    bool gaussian_source = false;   // default q = 0 for upscaling runs
    double constant = 0.0;          // > 0 overrides with a homogeneous medium

    double coeff(double x1, double x2) const;
    double source(double x1, double x2) const;
    /// Smallest oscillation scale of the selected coefficient.
    double min_scale() const;
};

} // namespace msh

#endif
