#pragma once

#include "unilearn/core_nn.hpp"
#include "unilearn/exponent.hpp"

#include <cstddef>
#include <string>

#include <json.hpp>

namespace unilearn {

/// Inputs to the lower/upper bound formulas. The class is (d, B, ..., B, 1)
/// with depth L for the lower bounds.
struct BoundQuery {
    std::size_t d = 1;
    std::size_t L = 3;
    std::size_t B = 3;
    double c = 1.0;
    Exponent q = Exponent::infinity();
    double m = 1.0;
    Exponent p = Exponent::infinity();
    std::size_t s = 1;
    double epsilon = 1.0;
    double c0 = 1.0;

    NetworkClass network_class() const;
    /// Throws PreconditionError unless m >= 1, epsilon > 0, L >= 3 and
    /// 1 <= s <= min(floor(B/3), d).
    void validate() const;
};

struct BoundReport {
    double omega = 0.0;
    /// True when q = 2 and both branches of Omega apply; the larger is used.
    bool omega_q2_tie = false;
    double lower_bound_error = 0.0;
    /// log2 of the minimal sample count for uniform accuracy epsilon.
    double log2_min_samples = 0.0;
    double upper_bound_error = 0.0;
    double lipschitz_bound = 0.0;
};

/// Omega = c^L s^{1-2/q} / (4 * 3^{2/q}) for q <= 2 and
/// c^L (B^{1-2/q})^{L-1} / 24 for q >= 2; at q = 2 the larger branch.
double omega_constant(double c, std::size_t L, std::size_t B, std::size_t s, Exponent q);

/// c0 * Omega * (64 s)^{-(1 + s/p)} * m^{-1/p - 1/s}.
double lower_bound_error(const BoundQuery& query);

/// Inverts the p = inf lower bound: any method reaching uniform accuracy
/// epsilon needs m >= (c0 Omega / (64 s epsilon))^s. Returned as log2(m).
/// With s = d, B = 3d, c0 = 1 this is d log2(Omega/(64d)) + d log2(1/epsilon).
double min_samples_for_uniform_accuracy(const BoundQuery& query);

/// ||W||_{2->2} <= ||W||_lq for q <= 2 and (sqrt(N M))^{1-2/q} ||W||_lq for q >= 2.
double operator_norm_bound(std::size_t n_rows, std::size_t n_cols, Exponent q, double entrywise_norm);

/// c^L for q <= 2, c^L (sqrt(N0 NL) N1 ... N_{L-1})^{1-2/q} for q >= 2.
double lipschitz_bound(const NetworkClass& cls);

/// 2 sqrt(d) c^L m^{-1/d} for q <= 2, with the extra factor
/// (sqrt(d) N1 ... N_{L-1})^{1-2/q} for q >= 2. Requires N_L = 1.
double upper_bound_error(const NetworkClass& cls, double m);

/// Everything above for one query.
BoundReport compute_bounds(const BoundQuery& query);

nlohmann::json to_json(const BoundQuery& query, const BoundReport& report);

} // namespace unilearn
