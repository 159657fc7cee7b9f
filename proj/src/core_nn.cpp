#include "unilearn/core_nn.hpp"

#include "unilearn/errors.hpp"
#include "unilearn/rng.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace unilearn {

namespace {

void check_arch(const std::vector<std::size_t>& arch) {
    if (arch.size() < 2)
        throw PreconditionError("architecture needs at least N0 and N1 (L >= 1)");
    for (std::size_t n : arch)
        if (n == 0)
            throw PreconditionError("architecture widths must be positive");
}

void check_input(const Mlp& net, std::span<const double> x) {
    if (x.size() != net.input_dim())
        throw PreconditionError("input has dimension " + std::to_string(x.size()) + ", network expects " +
                                std::to_string(net.input_dim()));
}

inline double relu(double v) { return v > 0.0 ? v : 0.0; }

// z = W a + b
void affine(const Layer& layer, const double* a, double* z) {
    for (std::size_t r = 0; r < layer.rows; ++r) {
        const double* row = &layer.weights[r * layer.cols];
        double s = 0.0;
        for (std::size_t c = 0; c < layer.cols; ++c)
            s += row[c] * a[c];
        z[r] = s + layer.bias[r];
    }
}

} // namespace

Mlp::Mlp(std::vector<std::size_t> arch) : arch_(std::move(arch)) {
    check_arch(arch_);
    layers_.reserve(arch_.size() - 1);
    for (std::size_t i = 1; i < arch_.size(); ++i) {
        Layer l;
        l.rows = arch_[i];
        l.cols = arch_[i - 1];
        l.weights.assign(l.rows * l.cols, 0.0);
        l.bias.assign(l.rows, 0.0);
        layers_.push_back(std::move(l));
    }
}

Mlp::Mlp(std::vector<std::size_t> arch, std::vector<Layer> layers)
    : arch_(std::move(arch)), layers_(std::move(layers)) {
    check_arch(arch_);
    if (layers_.size() != arch_.size() - 1)
        throw PreconditionError("expected " + std::to_string(arch_.size() - 1) + " layers, got " +
                                std::to_string(layers_.size()));
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const Layer& l = layers_[i];
        if (l.rows != arch_[i + 1] || l.cols != arch_[i] || l.weights.size() != l.rows * l.cols ||
            l.bias.size() != l.rows)
            throw PreconditionError("layer " + std::to_string(i + 1) + " shape does not match architecture");
    }
}

std::size_t Mlp::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_)
        n += l.weights.size() + l.bias.size();
    return n;
}

Mlp Mlp::scaled(double t) const {
    Mlp out = *this;
    for (auto& l : out.layers_) {
        for (double& v : l.weights)
            v *= t;
        for (double& v : l.bias)
            v *= t;
    }
    return out;
}

NetworkClass::NetworkClass(std::vector<std::size_t> arch_in, double c_in, Exponent q_in)
    : arch(std::move(arch_in)), c(c_in), q(q_in) {
    check_arch(arch);
    if (!(c > 0.0) || !std::isfinite(c))
        throw PreconditionError("class bound c must be finite and > 0");
    if (!q.at_least(1.0))
        throw PreconditionError("class exponent q must be >= 1");
}

std::vector<double> forward_prefix(const Mlp& net, std::span<const double> x, std::size_t layers) {
    check_input(net, x);
    if (layers >= net.depth())
        throw PreconditionError("forward_prefix: layer count must be below the depth");
    std::vector<double> a(x.begin(), x.end());
    std::vector<double> z;
    for (std::size_t i = 0; i < layers; ++i) {
        const Layer& l = net.layer(i);
        z.resize(l.rows);
        affine(l, a.data(), z.data());
        for (double& v : z)
            v = relu(v);
        a.swap(z);
    }
    return a;
}

std::vector<double> forward(const Mlp& net, std::span<const double> x) {
    check_input(net, x);
    std::vector<double> a(x.begin(), x.end());
    std::vector<double> z;
    const std::size_t L = net.depth();
    for (std::size_t i = 0; i < L; ++i) {
        const Layer& l = net.layer(i);
        z.resize(l.rows);
        affine(l, a.data(), z.data());
        if (i + 1 < L)
            for (double& v : z)
                v = relu(v);
        a.swap(z);
    }
    return a;
}

double forward_scalar(const Mlp& net, std::span<const double> x) {
    if (net.output_dim() != 1)
        throw PreconditionError("forward_scalar requires a scalar-output network");
    return forward(net, x)[0];
}

double entrywise_norm(std::span<const double> values, Exponent q) {
    double amax = 0.0;
    for (double v : values)
        amax = std::max(amax, std::abs(v));
    if (q.is_infinite() || amax == 0.0)
        return amax;
    const double p = q.value();
    double sum = 0.0;
    for (double v : values)
        sum += std::pow(std::abs(v) / amax, p);
    return amax * std::pow(sum, 1.0 / p);
}

double coefficient_norm(const Mlp& net, Exponent q) {
    if (!q.at_least(1.0))
        throw PreconditionError("coefficient norm exponent must be >= 1");
    double norm = 0.0;
    for (const auto& l : net.layers())
        norm = std::max({norm, entrywise_norm(l.weights, q), entrywise_norm(l.bias, q)});
    return norm;
}

bool in_class(const Mlp& net, const NetworkClass& cls, double slack) {
    if (net.arch() != cls.arch)
        return false;
    return coefficient_norm(net, cls.q) <= cls.c + slack;
}

double batch_mse(const Mlp& net, const GradientBatch& batch) {
    if (batch.inputs.empty() || batch.inputs.size() != batch.targets.size())
        throw PreconditionError("batch needs equally many inputs and targets (at least one)");
    double sum = 0.0;
    for (std::size_t j = 0; j < batch.inputs.size(); ++j) {
        const double r = forward_scalar(net, batch.inputs[j]) - batch.targets[j];
        sum += r * r;
    }
    return sum / static_cast<double>(batch.inputs.size());
}

Mlp backprop_grad(const Mlp& net, const GradientBatch& batch) {
    if (batch.inputs.empty() || batch.inputs.size() != batch.targets.size())
        throw PreconditionError("batch needs equally many inputs and targets (at least one)");
    if (net.output_dim() != 1)
        throw PreconditionError("backprop_grad expects a scalar-output network");

    const std::size_t L = net.depth();
    const auto& arch = net.arch();
    Mlp grad(arch);

    // acts[i] is the input to layer i (acts[0] = x); pre[i] the pre-activation of layer i.
    std::vector<std::vector<double>> acts(L + 1), pre(L);
    for (std::size_t i = 0; i <= L; ++i)
        acts[i].resize(arch[i]);
    for (std::size_t i = 0; i < L; ++i)
        pre[i].resize(arch[i + 1]);
    std::vector<double> delta, prev_delta;

    const double scale = 2.0 / static_cast<double>(batch.inputs.size());
    for (std::size_t j = 0; j < batch.inputs.size(); ++j) {
        check_input(net, batch.inputs[j]);
        std::copy(batch.inputs[j].begin(), batch.inputs[j].end(), acts[0].begin());
        for (std::size_t i = 0; i < L; ++i) {
            affine(net.layer(i), acts[i].data(), pre[i].data());
            for (std::size_t r = 0; r < pre[i].size(); ++r)
                acts[i + 1][r] = (i + 1 < L) ? relu(pre[i][r]) : pre[i][r];
        }

        delta.assign(1, scale * (acts[L][0] - batch.targets[j]));
        for (std::size_t i = L; i-- > 0;) {
            const Layer& l = net.layer(i);
            Layer& g = grad.layer(i);
            for (std::size_t r = 0; r < l.rows; ++r) {
                const double dr = delta[r];
                if (dr == 0.0)
                    continue;
                double* grow = &g.weights[r * l.cols];
                for (std::size_t c = 0; c < l.cols; ++c)
                    grow[c] += dr * acts[i][c];
                g.bias[r] += dr;
            }
            if (i == 0)
                break;
            prev_delta.assign(l.cols, 0.0);
            for (std::size_t r = 0; r < l.rows; ++r) {
                const double dr = delta[r];
                if (dr == 0.0)
                    continue;
                const double* row = &l.weights[r * l.cols];
                for (std::size_t c = 0; c < l.cols; ++c)
                    prev_delta[c] += row[c] * dr;
            }
            for (std::size_t c = 0; c < l.cols; ++c)
                if (!(pre[i - 1][c] > 0.0))
                    prev_delta[c] = 0.0;
            delta.swap(prev_delta);
        }
    }
    return grad;
}

double lipschitz_lower_estimate(const Mlp& net, std::size_t n_pairs, std::uint64_t seed) {
    if (n_pairs == 0)
        throw PreconditionError("lipschitz_lower_estimate needs at least one pair");
    Rng rng(seed);
    const std::size_t d = net.input_dim();
    Point x(d), y(d);
    double best = 0.0;
    for (std::size_t k = 0; k < n_pairs; ++k) {
        for (std::size_t i = 0; i < d; ++i)
            x[i] = rng.uniform();
        for (std::size_t i = 0; i < d; ++i)
            y[i] = rng.uniform();
        double dx = 0.0;
        for (std::size_t i = 0; i < d; ++i)
            dx += (x[i] - y[i]) * (x[i] - y[i]);
        if (dx == 0.0)
            continue;
        const auto fx = forward(net, x);
        const auto fy = forward(net, y);
        double df = 0.0;
        for (std::size_t i = 0; i < fx.size(); ++i)
            df += (fx[i] - fy[i]) * (fx[i] - fy[i]);
        best = std::max(best, std::sqrt(df) / std::sqrt(dx));
    }
    return best;
}

} // namespace unilearn
