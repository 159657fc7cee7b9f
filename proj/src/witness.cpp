#include "unilearn/witness.hpp"

#include "unilearn/errors.hpp"
#include "unilearn/parallel.hpp"
#include "unilearn/rng.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace unilearn {

std::string to_string(ConstructionBranch b) { return b == ConstructionBranch::BigQ ? "big_q" : "small_q"; }

namespace {

[[noreturn]] void violated(const std::string& inequality, const std::string& detail) {
    throw PreconditionError("construction precondition violated: " + inequality + " (" + detail + ")");
}

std::string kv(const char* name, double v) {
    std::ostringstream os;
    os << name << "=" << v;
    return os.str();
}

// c * n^{-e}, where the caller passes e = k/q (0 for q = inf).
double scaled(double c, double n, double e) { return c * std::pow(n, -e); }

// Shrinks `entry` by ulps until `count` copies have entrywise lq norm <= c.
// Uniform-magnitude layers sit exactly on the class boundary, where one
// rounding step can otherwise push the computed norm above c.
double fit_uniform_entry(double entry, std::size_t count, double c, Exponent q) {
    std::vector<double> probe(count, entry);
    while (entrywise_norm(probe, q) > c) {
        entry = std::nextafter(entry, 0.0);
        std::fill(probe.begin(), probe.end(), entry);
    }
    return entry;
}

} // namespace

ConstructionPlan make_plan(const NetworkClass& cls, const HatSpec& spec, ConstructionBranch branch) {
    const auto& arch = cls.arch;
    const std::size_t L = cls.depth();
    if (L < 3)
        violated("L >= 3", kv("L", static_cast<double>(L)));
    const std::size_t d = arch.front();
    const std::size_t B = arch[1];
    for (std::size_t i = 1; i + 1 < arch.size(); ++i)
        if (arch[i] != B)
            violated("arch = (d, B, ..., B, 1)", "hidden widths differ");
    if (arch.back() != 1)
        violated("arch = (d, B, ..., B, 1)", "output width must be 1");
    if (B < 3)
        violated("B >= 3", kv("B", static_cast<double>(B)));
    if (spec.d != d)
        violated("hat dimension d = N0", kv("d", static_cast<double>(spec.d)) + ", " + kv("N0", static_cast<double>(d)));
    if (spec.s < 1 || spec.s > d)
        violated("1 <= s <= d", kv("s", static_cast<double>(spec.s)) + ", " + kv("d", static_cast<double>(d)));
    if (3 * spec.s > B)
        violated("s <= B/3", kv("s", static_cast<double>(spec.s)) + ", " + kv("B", static_cast<double>(B)));
    if (!(spec.M >= 1.0) || spec.M != std::floor(spec.M))
        violated("M integer >= 1", kv("M", spec.M));
    spec.validate();
    if (branch == ConstructionBranch::BigQ && !cls.q.at_least(2.0))
        violated("q >= 2", "q=" + cls.q.to_string());
    if (branch == ConstructionBranch::SmallQ && !cls.q.at_most(2.0))
        violated("q <= 2", "q=" + cls.q.to_string());

    ConstructionPlan plan;
    plan.branch = branch;
    plan.d = d;
    plan.width = B;
    plan.depth = L;
    plan.s = spec.s;
    plan.blocks = branch == ConstructionBranch::BigQ ? B / (3 * spec.s) : 1;
    const double s = static_cast<double>(spec.s);
    for (std::size_t j = 0; j < spec.s; ++j) {
        plan.alpha.push_back((1.0 / spec.M - spec.y[j]) / 2.0);
        plan.beta.push_back(-spec.y[j]);
        plan.gamma.push_back((s - 1.0) / s * (1.0 / (2.0 * spec.M)));
    }
    return plan;
}

double big_q_lambda_guarantee(double c, std::size_t L, std::size_t B, Exponent q) {
    const double g = 1.0 - 2.0 * q.reciprocal();
    return std::pow(c, static_cast<double>(L)) * std::pow(std::pow(static_cast<double>(B), g), static_cast<double>(L - 1)) /
           12.0;
}

Construction construct_big_q(const NetworkClass& cls, const HatSpec& spec) {
    const ConstructionPlan plan = make_plan(cls, spec, ConstructionBranch::BigQ);
    const std::size_t B = plan.width, L = plan.depth, s = plan.s, r = plan.blocks;
    const double c = cls.c;
    const double inv_q = cls.q.reciprocal();
    const double n_first = static_cast<double>(3 * s * r);

    Mlp net(cls.arch);

    // Layer 1: r blocks of (I_s/2 | I_s | 0_{d x s})^T, bias blocks (alpha | beta | gamma).
    const double a1 = scaled(c, n_first, inv_q);
    Layer& l1 = net.layer(0);
    for (std::size_t b = 0; b < r; ++b) {
        for (std::size_t j = 0; j < s; ++j) {
            const std::size_t base = 3 * s * b;
            l1.w(base + j, j) = a1 * 0.5;
            l1.w(base + s + j, j) = a1;
            l1.bias[base + j] = a1 * plan.alpha[j];
            l1.bias[base + s + j] = a1 * plan.beta[j];
            l1.bias[base + 2 * s + j] = a1 * plan.gamma[j];
        }
    }

    // Layer 2: every row is r blocks of (1_s | -1_s | -1_s), then zeros.
    const double a2 = fit_uniform_entry(scaled(c, n_first * static_cast<double>(B), inv_q), 3 * s * r * B, c, cls.q);
    Layer& l2 = net.layer(1);
    for (std::size_t row = 0; row < B; ++row)
        for (std::size_t b = 0; b < r; ++b)
            for (std::size_t j = 0; j < s; ++j) {
                const std::size_t base = 3 * s * b;
                l2.w(row, base + j) = a2;
                l2.w(row, base + s + j) = -a2;
                l2.w(row, base + 2 * s + j) = -a2;
            }

    // Layers 3..L-1: (c / B^{2/q}) 1_{B x B}.
    const double a_mid = fit_uniform_entry(scaled(c, static_cast<double>(B), 2.0 * inv_q), B * B, c, cls.q);
    for (std::size_t i = 2; i + 1 < L; ++i)
        std::fill(net.layer(i).weights.begin(), net.layer(i).weights.end(), a_mid);

    // Layer L: (nu c / B^{1/q}) 1_{1 x B}.
    const double a_last = fit_uniform_entry(scaled(c, static_cast<double>(B), inv_q), B, c, cls.q);
    std::fill(net.layer(L - 1).weights.begin(), net.layer(L - 1).weights.end(), spec.nu * a_last);

    const double g = 1.0 - 2.0 * inv_q;
    const double lambda = std::pow(c, static_cast<double>(L)) *
                          std::pow(std::pow(static_cast<double>(B), g), static_cast<double>(L - 2)) *
                          std::pow(n_first, g) / 6.0;

    Construction out{ConstructionBranch::BigQ, std::move(net), lambda, lambda / (spec.M * static_cast<double>(s)), spec};
    out.hat.amplitude = out.amplitude;
    return out;
}

Construction construct_small_q(const NetworkClass& cls, const HatSpec& spec) {
    const ConstructionPlan plan = make_plan(cls, spec, ConstructionBranch::SmallQ);
    const std::size_t L = plan.depth, s = plan.s;
    const double c = cls.c;
    const double inv_q = cls.q.reciprocal();
    const double three_s = static_cast<double>(3 * s);

    Mlp net(cls.arch);

    // Layer 1: (I_s/2 | I_s | 0)^T, bias (alpha | beta | gamma | 0).
    const double a1 = scaled(c, three_s, inv_q);
    Layer& l1 = net.layer(0);
    for (std::size_t j = 0; j < s; ++j) {
        l1.w(j, j) = a1 * 0.5;
        l1.w(s + j, j) = a1;
        l1.bias[j] = a1 * plan.alpha[j];
        l1.bias[s + j] = a1 * plan.beta[j];
        l1.bias[2 * s + j] = a1 * plan.gamma[j];
    }

    // Layer 2: only the first row is nonzero, (1_s | -1_{2s} | 0).
    const double a2 = fit_uniform_entry(scaled(c, three_s, inv_q), 3 * s, c, cls.q);
    Layer& l2 = net.layer(1);
    for (std::size_t col = 0; col < 3 * s; ++col)
        l2.w(0, col) = col < s ? a2 : -a2;

    // Layers 3..L-1 pass the first unit through with gain c.
    for (std::size_t i = 2; i + 1 < L; ++i)
        net.layer(i).w(0, 0) = c;

    net.layer(L - 1).w(0, 0) = spec.nu * c;

    const double numerator = std::pow(c, static_cast<double>(L)) * std::pow(static_cast<double>(s), 1.0 - 2.0 * inv_q) /
                             (2.0 * std::pow(3.0, 2.0 * inv_q));
    Construction out{ConstructionBranch::SmallQ, std::move(net), numerator,
                     numerator / (spec.M * static_cast<double>(s)), spec};
    out.hat.amplitude = out.amplitude;
    return out;
}

Construction construct_hat_network(const NetworkClass& cls, const HatSpec& spec) {
    return cls.q.at_least(2.0) ? construct_big_q(cls, spec) : construct_small_q(cls, spec);
}

double verify_construction(const Mlp& net, const HatSpec& spec, double expected_amplitude, std::size_t n_points,
                           std::uint64_t seed) {
    if (net.input_dim() != spec.d || net.output_dim() != 1 || spec.y.size() != spec.d)
        throw PreconditionError("verify_construction: network and hat dimensions disagree");

    std::vector<Point> points;
    auto add = [&](Point p) {
        for (double& v : p)
            v = std::clamp(v, 0.0, 1.0);
        points.push_back(std::move(p));
    };
    const double w = 1.0 / spec.M;
    const double plateau = 1.0 / (2.0 * spec.M * static_cast<double>(spec.s));
    add(spec.y);
    if (spec.s <= 12) {
        for (std::size_t mask = 0; mask < (std::size_t{1} << spec.s); ++mask) {
            Point p = spec.y;
            for (std::size_t i = 0; i < spec.s; ++i)
                p[i] += (mask >> i & 1) ? w : -w;
            add(std::move(p));
        }
    }
    for (std::size_t i = 0; i < spec.s; ++i) {
        for (double sign : {-1.0, 1.0}) {
            Point p = spec.y;
            p[i] += sign * w;
            add(std::move(p));
            Point q = spec.y;
            q[i] += sign * plateau;
            add(std::move(q));
        }
    }
    for (double sign : {-1.0, 1.0}) {
        Point p = spec.y;
        for (std::size_t i = 0; i < spec.s; ++i)
            p[i] += sign * plateau;
        add(std::move(p));
    }
    Rng rng(seed);
    for (std::size_t k = 0; k < n_points; ++k) {
        Point p(spec.d);
        for (double& v : p)
            v = rng.uniform();
        points.push_back(std::move(p));
    }

    std::vector<double> dev(points.size());
    parallel_for(points.size(), [&](std::size_t k) {
        const double target = static_cast<double>(spec.nu) * expected_amplitude * hat_unit(spec, points[k]);
        dev[k] = std::abs(forward_scalar(net, points[k]) - target);
    });
    return dev.empty() ? 0.0 : *std::max_element(dev.begin(), dev.end());
}

} // namespace unilearn
