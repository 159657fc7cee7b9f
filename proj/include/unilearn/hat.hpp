#pragma once

#include "unilearn/core_nn.hpp"
#include "unilearn/exponent.hpp"

#include <cstddef>
#include <span>
#include <utility>

namespace unilearn {

/// Parameters of the scaled hat x -> nu * amplitude * theta_{M,y}^{(s)}(x).
struct HatSpec {
    std::size_t d = 1;
    std::size_t s = 1;
    double M = 1.0;
    Point y;
    int nu = 1;
    double amplitude = 1.0;

    /// Throws PreconditionError unless 1 <= s <= d, M >= 1, y in [0,1]^d,
    /// |y| = d, nu = +-1 and amplitude > 0.
    void validate() const;
};

/// Axis-aligned box [lo, hi] over the first s coordinates.
struct SupportBox {
    Point lo;
    Point hi;
};

/// Lambda_{M,sigma}(t): 0 for t <= sigma - 1/M, else 1 - M |t - sigma|.
double lambda_eval(double M, double sigma, double t);

/// Delta(x) = sum_{i<s} Lambda_{M,y_i}(x_i) - (s - 1).
double delta_eval(const HatSpec& spec, std::span<const double> x);

/// True iff Lambda_{M,y_i}(x_i) > 0 for every active coordinate, i.e. x lies
/// in the open support box. The unscaled hat is nonzero only there.
bool in_open_support(const HatSpec& spec, std::span<const double> x);

/// theta(x) = max(0, Delta(x)) in [0,1], exactly 0 outside the open support box.
double hat_unit(const HatSpec& spec, std::span<const double> x);

/// nu * amplitude * theta(x).
double hat_eval(const HatSpec& spec, std::span<const double> x);

/// Closed support box y* + M^{-1}[-1,1]^s (not clipped to the cube).
SupportBox support_box(const HatSpec& spec);

/// True iff the interiors of the two boxes intersect. Overlaps no wider than the
/// rounding of the box ends (a few ulps) count as shared faces.
bool open_boxes_intersect(const SupportBox& a, const SupportBox& b);

/// Closed-form sandwich for ||theta||_{L^p([0,1]^d)}, p in (0, inf]:
/// lower = 1/2 (4s)^{-s/p} M^{-s/p}, upper = 2^{s/p} M^{-s/p}.
std::pair<double, double> hat_lp_bounds(std::size_t s, double M, Exponent p);

/// Midpoint-rule quadrature of theta^p over the support box clipped to
/// [0,1]^s with `resolution` cells per active axis; theta does not depend on
/// the remaining coordinates. For p = inf returns the maximum over the cell
/// midpoints and the (clipped) center. Requires resolution >= 8 M s.
double hat_lp_norm_numeric(const HatSpec& spec, Exponent p, std::size_t resolution);

} // namespace unilearn
