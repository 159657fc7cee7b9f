#pragma once

#include "unilearn/core_nn.hpp"
#include "unilearn/hat.hpp"

#include <cstdint>
#include <string>

namespace unilearn {

enum class ConstructionBranch { BigQ, SmallQ };

std::string to_string(ConstructionBranch b);

/// The auxiliary row blocks shared by both constructions:
///   alpha_j = (1/M - y_j)/2,  beta_j = -y_j,  gamma_j = (s-1)/s * 1/(2M).
/// All entries lie in [-1, 1].
struct ConstructionPlan {
    ConstructionBranch branch;
    std::size_t d = 0;
    std::size_t width = 0;   // B
    std::size_t depth = 0;   // L
    std::size_t s = 0;
    std::size_t blocks = 0;  // r = floor(B / 3s); 1 in the small-q branch
    Point alpha;
    Point beta;
    Point gamma;
};

/// Network realizing nu * amplitude * theta_{M,y}^{(s)} inside the class.
struct Construction {
    ConstructionBranch branch;
    Mlp net;
    /// lambda for the big-q branch, c^L s^{1-2/q} / (2 * 3^{2/q}) for small q.
    double numerator;
    /// numerator / (M s): the exact prefactor of theta in the realization.
    double amplitude;
    /// The target hat with amplitude filled in.
    HatSpec hat;
};

/// Checks the shared preconditions (arch = (d, B, ..., B, 1), L >= 3, B >= 3,
/// s <= min(B/3, d), integer M >= 1, y in [0,1]^d, nu = +-1) plus the q range
/// of the branch, and returns the auxiliary blocks. Throws PreconditionError
/// naming the violated inequality.
ConstructionPlan make_plan(const NetworkClass& cls, const HatSpec& spec, ConstructionBranch branch);

/// Deep construction for q in [2, inf]: r blocks of (I_s/2 | I_s | 0) in the
/// first layer, all-ones propagation in layers 3..L-1. The returned numerator
/// is lambda = c^L (B^{1-2/q})^{L-2} (3rs)^{1-2/q} / 6.
Construction construct_big_q(const NetworkClass& cls, const HatSpec& spec);

/// Construction for q in [1, 2] with a single active unit carried through
/// layers 3..L-1.
Construction construct_small_q(const NetworkClass& cls, const HatSpec& spec);

/// Dispatch on q; q = 2 uses the big-q branch.
Construction construct_hat_network(const NetworkClass& cls, const HatSpec& spec);

/// The lower bound c^L (B^{1-2/q})^{L-1} / 12 guaranteed for lambda.
double big_q_lambda_guarantee(double c, std::size_t L, std::size_t B, Exponent q);

/// Largest deviation |forward(net, x) - nu * expected_amplitude * theta(x)| over
/// structured points (center, support corners, splice planes, plateau points,
/// clipped to the cube) plus n_points seeded uniform points in [0,1]^d.
double verify_construction(const Mlp& net, const HatSpec& spec, double expected_amplitude,
                           std::size_t n_points, std::uint64_t seed);

} // namespace unilearn
