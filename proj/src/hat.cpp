#include "unilearn/hat.hpp"

#include "unilearn/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace unilearn {

void HatSpec::validate() const {
    if (d < 1)
        throw PreconditionError("hat: d must be >= 1");
    if (s < 1 || s > d)
        throw PreconditionError("hat: need 1 <= s <= d");
    if (!(M >= 1.0) || !std::isfinite(M))
        throw PreconditionError("hat: need M >= 1");
    if (y.size() != d)
        throw PreconditionError("hat: center y must have d coordinates");
    for (double v : y)
        if (!(v >= 0.0 && v <= 1.0))
            throw PreconditionError("hat: center y must lie in [0,1]^d");
    if (nu != 1 && nu != -1)
        throw PreconditionError("hat: nu must be +1 or -1");
    if (!(amplitude > 0.0) || !std::isfinite(amplitude))
        throw PreconditionError("hat: amplitude must be > 0");
}

double lambda_eval(double M, double sigma, double t) {
    if (t <= sigma - 1.0 / M)
        return 0.0;
    return 1.0 - M * std::abs(t - sigma);
}

static void check_dims(const HatSpec& spec, std::span<const double> x) {
    if (x.size() != spec.d)
        throw PreconditionError("hat: point has dimension " + std::to_string(x.size()) + ", expected " +
                                std::to_string(spec.d));
}

double delta_eval(const HatSpec& spec, std::span<const double> x) {
    check_dims(spec, x);
    double sum = 0.0;
    for (std::size_t i = 0; i < spec.s; ++i)
        sum += lambda_eval(spec.M, spec.y[i], x[i]);
    return sum - static_cast<double>(spec.s - 1);
}

bool in_open_support(const HatSpec& spec, std::span<const double> x) {
    check_dims(spec, x);
    for (std::size_t i = 0; i < spec.s; ++i)
        if (!(lambda_eval(spec.M, spec.y[i], x[i]) > 0.0))
            return false;
    return true;
}

double hat_unit(const HatSpec& spec, std::span<const double> x) {
    if (!in_open_support(spec, x))
        return 0.0;
    return std::max(0.0, delta_eval(spec, x));
}

double hat_eval(const HatSpec& spec, std::span<const double> x) {
    return static_cast<double>(spec.nu) * spec.amplitude * hat_unit(spec, x);
}

SupportBox support_box(const HatSpec& spec) {
    SupportBox box;
    for (std::size_t i = 0; i < spec.s; ++i) {
        box.lo.push_back(spec.y[i] - 1.0 / spec.M);
        box.hi.push_back(spec.y[i] + 1.0 / spec.M);
    }
    return box;
}

bool open_boxes_intersect(const SupportBox& a, const SupportBox& b) {
    const std::size_t n = std::min(a.lo.size(), b.lo.size());
    for (std::size_t i = 0; i < n; ++i) {
        const double lo = std::max(a.lo[i], b.lo[i]);
        const double hi = std::min(a.hi[i], b.hi[i]);
        const double scale = std::max({std::abs(lo), std::abs(hi), 1.0});
        if (!(hi - lo > 8.0 * std::numeric_limits<double>::epsilon() * scale))
            return false;
    }
    return true;
}

std::pair<double, double> hat_lp_bounds(std::size_t s, double M, Exponent p) {
    if (s < 1 || !(M >= 1.0))
        throw PreconditionError("hat_lp_bounds: need s >= 1 and M >= 1");
    if (p.is_infinite())
        return {0.5, 1.0};
    const double e = static_cast<double>(s) / p.value();
    const double lower = 0.5 * std::pow(4.0 * static_cast<double>(s), -e) * std::pow(M, -e);
    const double upper = std::pow(2.0, e) * std::pow(M, -e);
    return {lower, upper};
}

double hat_lp_norm_numeric(const HatSpec& spec, Exponent p, std::size_t resolution) {
    spec.validate();
    const double needed = std::ceil(8.0 * spec.M * static_cast<double>(spec.s));
    if (static_cast<double>(resolution) < needed)
        throw PreconditionError("hat_lp_norm_numeric: resolution must be >= 8*M*s = " +
                                std::to_string(static_cast<long long>(needed)));

    const std::size_t s = spec.s;
    Point lo(s), step(s);
    double cell_volume = 1.0;
    for (std::size_t i = 0; i < s; ++i) {
        lo[i] = std::max(0.0, spec.y[i] - 1.0 / spec.M);
        const double hi = std::min(1.0, spec.y[i] + 1.0 / spec.M);
        step[i] = (hi - lo[i]) / static_cast<double>(resolution);
        cell_volume *= step[i];
    }

    // Inactive coordinates are irrelevant; pin them at y.
    Point x = spec.y;
    std::vector<std::size_t> idx(s, 0);
    double peak = 0.0;
    long double sum = 0.0L;
    const bool inf = p.is_infinite();
    const double pv = inf ? 0.0 : p.value();
    for (;;) {
        for (std::size_t i = 0; i < s; ++i)
            x[i] = lo[i] + (static_cast<double>(idx[i]) + 0.5) * step[i];
        const double v = hat_unit(spec, x);
        if (inf)
            peak = std::max(peak, v);
        else if (v > 0.0)
            sum += static_cast<long double>(std::pow(v, pv));

        std::size_t axis = 0;
        while (axis < s && ++idx[axis] == resolution)
            idx[axis++] = 0;
        if (axis == s)
            break;
    }

    if (inf) {
        Point center = spec.y;
        for (double& v : center)
            v = std::clamp(v, 0.0, 1.0);
        return std::max(peak, hat_unit(spec, center));
    }
    return std::pow(static_cast<double>(sum) * cell_volume, 1.0 / pv);
}

} // namespace unilearn
