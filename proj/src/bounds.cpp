#include "unilearn/bounds.hpp"

#include "unilearn/errors.hpp"
#include "unilearn/network_io.hpp"

#include <algorithm>
#include <cmath>

namespace unilearn {

NetworkClass BoundQuery::network_class() const {
    std::vector<std::size_t> arch;
    arch.push_back(d);
    for (std::size_t i = 0; i + 1 < L; ++i)
        arch.push_back(B);
    arch.push_back(1);
    return NetworkClass(std::move(arch), c, q);
}

void BoundQuery::validate() const {
    if (d < 1 || B < 1)
        throw PreconditionError("bounds: d and B must be >= 1");
    if (L < 3)
        throw PreconditionError("bounds: lower bounds need L >= 3");
    if (!(m >= 1.0))
        throw PreconditionError("bounds: m must be >= 1");
    if (!(epsilon > 0.0))
        throw PreconditionError("bounds: epsilon must be > 0");
    if (!(c > 0.0) || !(c0 > 0.0))
        throw PreconditionError("bounds: c and c0 must be > 0");
    if (!q.at_least(1.0) || !p.at_least(1.0))
        throw PreconditionError("bounds: p and q must be >= 1");
    if (s < 1 || s > d || 3 * s > B)
        throw PreconditionError("bounds: need 1 <= s <= min(floor(B/3), d)");
}

double omega_constant(double c, std::size_t L, std::size_t B, std::size_t s, Exponent q) {
    const double g = 1.0 - 2.0 * q.reciprocal();
    const double cL = std::pow(c, static_cast<double>(L));
    double omega = 0.0;
    if (q.at_most(2.0)) {
        omega = cL * std::pow(static_cast<double>(s), g) / (4.0 * std::pow(3.0, 2.0 * q.reciprocal()));
    }
    if (q.at_least(2.0)) {
        const double big = cL * std::pow(std::pow(static_cast<double>(B), g), static_cast<double>(L - 1)) / 24.0;
        omega = std::max(omega, big);
    }
    return omega;
}

double lower_bound_error(const BoundQuery& query) {
    query.validate();
    const double s = static_cast<double>(query.s);
    const double inv_p = query.p.reciprocal();
    const double omega = omega_constant(query.c, query.L, query.B, query.s, query.q);
    return query.c0 * omega * std::pow(64.0 * s, -(1.0 + s * inv_p)) * std::pow(query.m, -inv_p - 1.0 / s);
}

double min_samples_for_uniform_accuracy(const BoundQuery& query) {
    query.validate();
    const double s = static_cast<double>(query.s);
    const double omega = omega_constant(query.c, query.L, query.B, query.s, query.q);
    return s * std::log2(query.c0 * omega / (64.0 * s)) + s * std::log2(1.0 / query.epsilon);
}

double operator_norm_bound(std::size_t n_rows, std::size_t n_cols, Exponent q, double entrywise_norm) {
    if (!(entrywise_norm >= 0.0))
        throw PreconditionError("operator_norm_bound: entrywise norm must be >= 0");
    if (q.at_most(2.0))
        return entrywise_norm;
    const double g = 1.0 - 2.0 * q.reciprocal();
    return std::pow(std::sqrt(static_cast<double>(n_rows) * static_cast<double>(n_cols)), g) * entrywise_norm;
}

double lipschitz_bound(const NetworkClass& cls) {
    const std::size_t L = cls.depth();
    const double cL = std::pow(cls.c, static_cast<double>(L));
    if (cls.q.at_most(2.0))
        return cL;
    const double g = 1.0 - 2.0 * cls.q.reciprocal();
    double widths = std::sqrt(static_cast<double>(cls.arch.front()) * static_cast<double>(cls.arch.back()));
    for (std::size_t i = 1; i < L; ++i)
        widths *= static_cast<double>(cls.arch[i]);
    return cL * std::pow(widths, g);
}

double upper_bound_error(const NetworkClass& cls, double m) {
    if (!(m >= 1.0))
        throw PreconditionError("upper_bound_error: m must be >= 1");
    if (cls.arch.back() != 1)
        throw PreconditionError("upper_bound_error: output width must be 1");
    const double d = static_cast<double>(cls.arch.front());
    // The Lipschitz bound with N0 = d, NL = 1 is exactly the q-dependent factor.
    return 2.0 * std::sqrt(d) * lipschitz_bound(cls) * std::pow(m, -1.0 / d);
}

BoundReport compute_bounds(const BoundQuery& query) {
    query.validate();
    BoundReport r;
    r.omega = omega_constant(query.c, query.L, query.B, query.s, query.q);
    r.omega_q2_tie = !query.q.is_infinite() && query.q.value() == 2.0;
    r.lower_bound_error = lower_bound_error(query);
    r.log2_min_samples = min_samples_for_uniform_accuracy(query);
    const NetworkClass cls = query.network_class();
    r.upper_bound_error = upper_bound_error(cls, query.m);
    r.lipschitz_bound = lipschitz_bound(cls);
    return r;
}

nlohmann::json to_json(const BoundQuery& query, const BoundReport& report) {
    return nlohmann::json{
        {"query",
         {{"d", query.d},
          {"L", query.L},
          {"B", query.B},
          {"c", query.c},
          {"q", exponent_to_json(query.q)},
          {"m", query.m},
          {"p", exponent_to_json(query.p)},
          {"s", query.s},
          {"epsilon", query.epsilon},
          {"c0", query.c0}}},
        {"omega", report.omega},
        {"omega_q2_tie", report.omega_q2_tie},
        {"lower_bound_error", report.lower_bound_error},
        {"log2_min_samples", report.log2_min_samples},
        {"upper_bound_error", report.upper_bound_error},
        {"lipschitz_bound", report.lipschitz_bound},
    };
}

} // namespace unilearn
