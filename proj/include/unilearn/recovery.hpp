#pragma once

#include "unilearn/core_nn.hpp"
#include "unilearn/exponent.hpp"
#include "unilearn/hat.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace unilearn {

/// A function [0,1]^d -> R.
using Function = std::function<double(std::span<const double>)>;

/// The output A(u) of a method; must be evaluable anywhere on [0,1]^d.
using Predictor = Function;

/// Point-sample access to the unknown function. Every query is recorded;
/// exceeding the budget throws BudgetExceeded.
class Oracle {
public:
    Oracle(Function target, std::size_t dim, std::size_t budget);

    double operator()(std::span<const double> x);

    std::size_t dim() const { return dim_; }
    std::size_t budget() const { return budget_; }
    std::size_t calls() const { return points_.size(); }
    const std::vector<Point>& points() const { return points_; }
    const std::vector<double>& values() const { return values_; }

private:
    Function target_;
    std::size_t dim_;
    std::size_t budget_;
    std::vector<Point> points_;
    std::vector<double> values_;
};

/// An adaptive deterministic method: the i-th query may depend on all
/// earlier answers; the predictor depends only on the queries and answers.
struct DeterministicMethod {
    std::string name;
    std::size_t dim = 1;
    std::size_t budget = 0;
    std::function<Predictor(Oracle&)> run;
    /// Guaranteed sup error, when the method carries one.
    std::optional<double> sup_error_guarantee;
};

struct QueryTranscript {
    std::vector<Point> points;
    std::vector<double> values;
    Predictor predictor;
};

/// Runs the method against u through a recording oracle.
QueryTranscript run_with_recording(const DeterministicMethod& method, const Function& u);

/// Bitwise equality of queried points and returned values.
bool transcripts_identical(const QueryTranscript& a, const QueryTranscript& b);

/// Queries nothing and predicts 0.
DeterministicMethod zero_method(std::size_t d, std::size_t budget);

/// Samples the lattice {0, 1/K, ..., (K-1)/K}^d with K = floor(m^{1/d}) and
/// predicts the sample value on the half-open cell x_i + [0, 1/K)^d (closed on
/// the top face). For `lipschitz`-Lipschitz u the sup error is at most
/// lipschitz * 2 sqrt(d) m^{-1/d}.
DeterministicMethod grid_recovery_method(std::size_t d, std::size_t m, double lipschitz);

/// Largest K with K^d <= m.
std::size_t grid_resolution(std::size_t d, std::size_t m);

struct LpEstimateOptions {
    std::size_t samples = 100000;
    std::uint64_t seed = 0;
    /// For p = inf: refine the ten largest samples (and any hints) by local
    /// grid search, since narrow spikes are easily missed by plain sampling.
    bool refine_peaks = true;
    /// Initial refinement step; 0 picks samples^{-1/d} / 4.
    double refine_step = 0.0;
    std::vector<Point> hints;
};

/// Monte Carlo estimate of ||f - g||_{L^p([0,1]^d)} from seeded uniform
/// samples. For p = inf the result is the largest |f - g| found, which never
/// exceeds the true sup.
double lp_error_estimate(const Function& f, const Function& g, Exponent p, std::size_t d,
                         const LpEstimateOptions& options);

/// Convenience overload with default options.
double lp_error_estimate(const Function& f, const Function& g, Exponent p, std::size_t n, std::uint64_t seed,
                         std::size_t d);

/// Grid parameter of the attack: the smallest k with k^s >= m, doubled while
/// (4k)^s <= m (which cannot happen for k^s >= m; kept as a guard).
std::size_t fooling_grid_k(std::size_t m, std::size_t s);

struct FoolingResult {
    std::string method;
    std::size_t d = 1;
    std::size_t s = 1;
    std::size_t m = 0;
    Exponent p = Exponent::infinity();
    std::size_t k = 1;
    double M = 8.0;
    /// Times k was doubled because (4k)^s <= m.
    std::size_t k_doublings = 0;
    std::vector<std::size_t> chosen_ell;
    int chosen_nu = 1;
    HatSpec fooling_hat;
    std::string u0_label;
    std::size_t total_cells = 0;
    std::size_t queries_made = 0;
    std::size_t untouched_count = 0;
    double measured_error = 0.0;
    double measured_error_plus = 0.0;
    double measured_error_minus = 0.0;
    double theoretical_floor = 0.0;
    bool blindness_verified = false;
};

struct AttackOptions {
    LpEstimateOptions estimate;
    std::string u0_label = "u0";
};

/// Fooling-set attack. Runs the method on u0, finds the grid cells
/// y^l = 1/(8k) + (l-1)/(4k) (l in [4k]^s, k = ceil(m^{1/s}), M = 8k) whose
/// open hat support contains no queried point, picks the lexicographically
/// smallest, and re-runs the method on u0 +- amplitude * theta_{M,y^l}. The
/// transcripts must match the u0 run bit for bit; otherwise AttackAborted.
/// The reported error is the larger of the two estimated Lp errors, and the
/// floor is amplitude times the lower Lp bound of theta.
FoolingResult fooling_attack(const DeterministicMethod& method, std::size_t s, double amplitude,
                             const Function& u0, Exponent p, const AttackOptions& options = {});

nlohmann::json to_json(const FoolingResult& r);
std::string fooling_csv_header();
std::string fooling_csv_row(const FoolingResult& r);

/// Affine maps between the unit cube used by the theory and the centered
/// cube [-0.5, 0.5]^d used by the experiments.
Point to_centered_cube(std::span<const double> unit);
Point to_unit_cube(std::span<const double> centered);

} // namespace unilearn
