#pragma once

#include "unilearn/exponent.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace unilearn {

using Point = std::vector<double>;

/// One affine map x -> W x + b. W is rows x cols, stored row-major.
struct Layer {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> weights;
    std::vector<double> bias;

    double& w(std::size_t r, std::size_t c) { return weights[r * cols + c]; }
    double w(std::size_t r, std::size_t c) const { return weights[r * cols + c]; }

    friend bool operator==(const Layer&, const Layer&) = default;
};

/// Dense feed-forward ReLU network with architecture (N0, ..., NL).
/// ReLU follows every layer except the last, which is affine.
class Mlp {
public:
    /// All-zero network. Throws PreconditionError if arch has fewer than two
    /// entries or a zero width.
    explicit Mlp(std::vector<std::size_t> arch);

    /// Adopts explicit layers; shapes must agree with arch.
    Mlp(std::vector<std::size_t> arch, std::vector<Layer> layers);

    const std::vector<std::size_t>& arch() const { return arch_; }
    std::size_t depth() const { return layers_.size(); }
    std::size_t input_dim() const { return arch_.front(); }
    std::size_t output_dim() const { return arch_.back(); }
    std::size_t parameter_count() const;

    const Layer& layer(std::size_t i) const { return layers_[i]; }
    Layer& layer(std::size_t i) { return layers_[i]; }
    const std::vector<Layer>& layers() const { return layers_; }

    /// Multiplies every weight and bias by t.
    Mlp scaled(double t) const;

    friend bool operator==(const Mlp&, const Mlp&) = default;

private:
    std::vector<std::size_t> arch_;
    std::vector<Layer> layers_;
};

/// Descriptor of the class of realizations with architecture `arch` and
/// coefficient norm ||Phi||_{lq} <= c.
struct NetworkClass {
    std::vector<std::size_t> arch;
    double c;
    Exponent q;

    /// Validates c > 0, q >= 1 and the architecture.
    NetworkClass(std::vector<std::size_t> arch, double c, Exponent q);

    std::size_t depth() const { return arch.size() - 1; }
};

/// Training data for the mean squared error loss (1/n) sum_j (f(x_j) - t_j)^2.
struct GradientBatch {
    std::vector<Point> inputs;
    std::vector<double> targets;
};

/// Realization of the network at x.
std::vector<double> forward(const Mlp& net, std::span<const double> x);

/// Scalar output convenience; requires N_L = 1.
double forward_scalar(const Mlp& net, std::span<const double> x);

/// Post-activation after the first `layers` layers (0 returns x itself).
/// Requires layers < depth, since the last layer carries no activation.
std::vector<double> forward_prefix(const Mlp& net, std::span<const double> x, std::size_t layers);

/// Entrywise lq norm of a coefficient array, computed as
/// amax * (sum (|v|/amax)^q)^(1/q) so that uniform-magnitude arrays are
/// summed exactly.
double entrywise_norm(std::span<const double> values, Exponent q);

/// max over layers of max(||W^i||_lq, ||b^i||_lq).
double coefficient_norm(const Mlp& net, Exponent q);

/// True iff the architecture matches and coefficient_norm <= c + slack.
bool in_class(const Mlp& net, const NetworkClass& cls, double slack = 0.0);

/// Gradient of the batch MSE with respect to every weight and bias, laid out
/// exactly like the network. The ReLU derivative at 0 is taken as 0.
Mlp backprop_grad(const Mlp& net, const GradientBatch& batch);

/// Mean squared error of the network on the batch.
double batch_mse(const Mlp& net, const GradientBatch& batch);

/// Largest difference quotient ||f(x)-f(y)||_2 / ||x-y||_2 over n_pairs
/// seeded uniform pairs in [0,1]^{N0}. Never exceeds the true constant.
double lipschitz_lower_estimate(const Mlp& net, std::size_t n_pairs, std::uint64_t seed);

} // namespace unilearn
