#ifndef MSHYBRID_NET_HPP
#define MSHYBRID_NET_HPP

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace msh {

/// Multi-scale Fourier feature network layout. num_features == 0 selects a
/// plain feed-forward network taking x directly (the vanilla baseline).
struct Architecture {
    int input_dim = 1;
    std::vector<int> hidden_widths;       // depth x width
    int num_features = 0;                 // K
    int feature_rows = 0;                 // m, rows of each B^(k)
    std::vector<double> feature_scales;   // rho_k > 0, std of B^(k) entries

    /// Input dimension of the first hidden layer: 2m for Fourier features,
    /// otherwise input_dim.
    int first_layer_inputs() const;
    int output_inputs() const;            // width of the concatenated last layer
    int num_trainable() const;            // n, length of flattened theta
    void validate() const;                // throws std::invalid_argument
};

/// Trainable weights/biases plus the fixed Fourier matrices B^(k).
/// The B matrices are sampled once and never updated; only W/b enter theta.
struct NetParams {
    Architecture arch;
    std::vector<Eigen::MatrixXd> weights;   // hidden layers then output layer
    std::vector<Eigen::VectorXd> biases;
    std::vector<Eigen::MatrixXd> features;  // B^(k), m x input_dim, fixed

    Eigen::VectorXd flatten() const;
    void unflatten(const Eigen::VectorXd& theta);
};

struct EvalTriple {
    double value = 0.0;
    double dx = 0.0;
    double dxx = 0.0;
};

enum class WhichDeriv { value, dx, dxx };

/// Glorot-uniform weights, zero biases, Gaussian B^(k) with std rho_k.
/// Deterministic for a given (arch, seed).
NetParams init_glorot(const Architecture& arch, std::uint64_t seed);

/// Network output v(x) = x(1-x) * vbar(x) together with its first and second
/// spatial derivatives, exact to machine precision (second-order dual number
/// propagation, scalar reference path).
EvalTriple eval_with_derivs(const NetParams& params, double x);

/// Gradient with respect to flattened theta of v, v_x or v_xx at one point.
Eigen::VectorXd grad_params(const NetParams& params, double x, WhichDeriv which);

/// Batched forward/reverse evaluator over a fixed set of points. The Fourier
/// feature activations depend only on B^(k) and the points, so they are
/// cached at construction; forward() re-runs the trainable layers only.
///
/// backward(a, b, c) returns d/dtheta of sum_i a_i v(x_i) + b_i v_x(x_i)
/// + c_i v_xx(x_i), i.e. reverse accumulation with per-point seeds on the
/// value and its spatial derivatives. Summation order is fixed, so results
/// are bitwise reproducible.
class BatchTape {
public:
    BatchTape(const NetParams& params, Eigen::VectorXd xs);

    void forward(const NetParams& params);

    const Eigen::VectorXd& points() const { return xs_; }
    const Eigen::ArrayXd& value() const { return value_; }
    const Eigen::ArrayXd& dx() const { return dx_; }
    const Eigen::ArrayXd& dxx() const { return dxx_; }

    Eigen::VectorXd backward(const Eigen::ArrayXd& seed_value,
                             const Eigen::ArrayXd& seed_dx,
                             const Eigen::ArrayXd& seed_dxx) const;

private:
    struct Triple {
        Eigen::MatrixXd v, x, xx;
        void resize(Eigen::Index rows, Eigen::Index cols) {
            v.resize(rows, cols);
            x.resize(rows, cols);
            xx.resize(rows, cols);
        }
    };

    Architecture arch_;
    Eigen::VectorXd xs_;
    const NetParams* last_params_ = nullptr;

    // per feature branch: cached input triple, then per hidden layer the
    // pre-activation and activation triples
    std::vector<Triple> inputs_;                   // [branch]
    std::vector<std::vector<Triple>> preact_;      // [branch][layer]
    std::vector<std::vector<Triple>> act_;         // [branch][layer]
    Triple raw_out_;                               // vbar triple, 1 x M
    Eigen::ArrayXd value_, dx_, dxx_;              // after BC transform
};

} // namespace msh

#endif
