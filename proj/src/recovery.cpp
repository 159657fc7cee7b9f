#include "unilearn/recovery.hpp"

#include "unilearn/errors.hpp"
#include "unilearn/network_io.hpp"
#include "unilearn/parallel.hpp"
#include "unilearn/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

namespace unilearn {

Oracle::Oracle(Function target, std::size_t dim, std::size_t budget)
    : target_(std::move(target)), dim_(dim), budget_(budget) {}

double Oracle::operator()(std::span<const double> x) {
    if (x.size() != dim_)
        throw PreconditionError("oracle: query has dimension " + std::to_string(x.size()) + ", expected " +
                                std::to_string(dim_));
    for (double v : x)
        if (!(v >= 0.0 && v <= 1.0))
            throw PreconditionError("oracle: query points must lie in [0,1]^d");
    if (points_.size() >= budget_)
        throw BudgetExceeded("oracle: method exceeded its budget of " + std::to_string(budget_) + " queries");
    const double v = target_(x);
    points_.emplace_back(x.begin(), x.end());
    values_.push_back(v);
    return v;
}

QueryTranscript run_with_recording(const DeterministicMethod& method, const Function& u) {
    Oracle oracle(u, method.dim, method.budget);
    Predictor predictor = method.run(oracle);
    if (!predictor)
        throw std::runtime_error("method '" + method.name + "' returned an empty predictor");
    return QueryTranscript{oracle.points(), oracle.values(), std::move(predictor)};
}

namespace {

bool bits_equal(std::span<const double> a, std::span<const double> b) {
    return a.size() == b.size() && (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

// Smallest k with k^s >= m.
std::size_t ceil_root(std::size_t m, std::size_t s) {
    auto pow_at_least = [&](std::size_t k) {
        long double v = 1.0L;
        for (std::size_t i = 0; i < s; ++i)
            v *= static_cast<long double>(k);
        return v >= static_cast<long double>(m);
    };
    std::size_t k = static_cast<std::size_t>(std::ceil(std::pow(static_cast<double>(m), 1.0 / static_cast<double>(s))));
    k = std::max<std::size_t>(k, 1);
    while (k > 1 && pow_at_least(k - 1))
        --k;
    while (!pow_at_least(k))
        ++k;
    return k;
}

std::size_t checked_pow(std::size_t base, std::size_t exp) {
    std::size_t v = 1;
    for (std::size_t i = 0; i < exp; ++i) {
        if (base != 0 && v > std::numeric_limits<std::size_t>::max() / base)
            throw PreconditionError("grid size overflows");
        v *= base;
    }
    return v;
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

} // namespace

bool transcripts_identical(const QueryTranscript& a, const QueryTranscript& b) {
    if (a.points.size() != b.points.size() || !bits_equal(a.values, b.values))
        return false;
    for (std::size_t i = 0; i < a.points.size(); ++i)
        if (!bits_equal(a.points[i], b.points[i]))
            return false;
    return true;
}

DeterministicMethod zero_method(std::size_t d, std::size_t budget) {
    DeterministicMethod m;
    m.name = "zero";
    m.dim = d;
    m.budget = budget;
    m.run = [](Oracle&) -> Predictor { return [](std::span<const double>) { return 0.0; }; };
    return m;
}

std::size_t grid_resolution(std::size_t d, std::size_t m) {
    if (d == 0 || m == 0)
        throw PreconditionError("grid_resolution: need d >= 1 and m >= 1");
    auto pow_at_most = [&](std::size_t k) {
        long double v = 1.0L;
        for (std::size_t i = 0; i < d; ++i)
            v *= static_cast<long double>(k);
        return v <= static_cast<long double>(m);
    };
    std::size_t K = static_cast<std::size_t>(std::floor(std::pow(static_cast<double>(m), 1.0 / static_cast<double>(d))));
    K = std::max<std::size_t>(K, 1);
    while (!pow_at_most(K))
        --K;
    while (pow_at_most(K + 1))
        ++K;
    return K;
}

DeterministicMethod grid_recovery_method(std::size_t d, std::size_t m, double lipschitz) {
    if (m < 1)
        throw PreconditionError("grid_recovery_method: m must be >= 1");
    const std::size_t K = grid_resolution(d, m);
    const std::size_t cells = checked_pow(K, d);

    DeterministicMethod method;
    method.name = "grid";
    method.dim = d;
    method.budget = m;
    method.sup_error_guarantee =
        lipschitz * 2.0 * std::sqrt(static_cast<double>(d)) * std::pow(static_cast<double>(m), -1.0 / static_cast<double>(d));
    method.run = [d, K, cells](Oracle& oracle) -> Predictor {
        auto values = std::make_shared<std::vector<double>>(cells);
        Point x(d);
        for (std::size_t idx = 0; idx < cells; ++idx) {
            // Lexicographic order, first coordinate most significant.
            std::size_t rest = idx;
            for (std::size_t i = d; i-- > 0;) {
                x[i] = static_cast<double>(rest % K) / static_cast<double>(K);
                rest /= K;
            }
            (*values)[idx] = oracle(x);
        }
        return [d, K, values](std::span<const double> p) {
            std::size_t idx = 0;
            for (std::size_t i = 0; i < d; ++i) {
                const double scaled = std::floor(p[i] * static_cast<double>(K));
                const std::size_t j =
                    scaled <= 0.0 ? 0 : std::min(K - 1, static_cast<std::size_t>(scaled));
                idx = idx * K + j;
            }
            return (*values)[idx];
        };
    };
    return method;
}

namespace {

double abs_diff(const Function& f, const Function& g, std::span<const double> x) { return std::abs(f(x) - g(x)); }

// Local grid search from `start`, halving the step when no neighbour improves.
double refine_peak(const Function& f, const Function& g, Point x, double step) {
    const std::size_t d = x.size();
    double best = abs_diff(f, g, x);
    const bool full_stencil = d <= 3;
    const std::size_t stencil = full_stencil ? checked_pow(3, d) : 2 * d;
    Point trial(d);
    for (int iter = 0; iter < 400 && step > 1e-13; ++iter) {
        double best_trial = best;
        Point best_point;
        for (std::size_t k = 0; k < stencil; ++k) {
            trial = x;
            if (full_stencil) {
                std::size_t rest = k;
                bool moved = false;
                for (std::size_t i = 0; i < d; ++i) {
                    const int offset = static_cast<int>(rest % 3) - 1;
                    rest /= 3;
                    trial[i] = std::clamp(x[i] + offset * step, 0.0, 1.0);
                    moved |= offset != 0;
                }
                if (!moved)
                    continue;
            } else {
                const std::size_t axis = k / 2;
                trial[axis] = std::clamp(x[axis] + (k % 2 == 0 ? -step : step), 0.0, 1.0);
            }
            const double v = abs_diff(f, g, trial);
            if (v > best_trial) {
                best_trial = v;
                best_point = trial;
            }
        }
        if (!best_point.empty()) {
            best = best_trial;
            x = best_point;
        } else {
            step *= 0.5;
        }
    }
    return best;
}

} // namespace

double lp_error_estimate(const Function& f, const Function& g, Exponent p, std::size_t d,
                         const LpEstimateOptions& options) {
    const std::size_t n = options.samples;
    if (n < 1)
        throw PreconditionError("lp_error_estimate: need at least one sample");
    Rng rng(options.seed);
    std::vector<Point> xs(n, Point(d));
    for (auto& x : xs)
        for (double& v : x)
            v = rng.uniform();

    std::vector<double> err(n);
    parallel_for(n, [&](std::size_t j) { err[j] = abs_diff(f, g, xs[j]); });

    if (!p.is_infinite()) {
        const double pv = p.value();
        for (double& e : err)
            e = std::pow(e, pv);
        return std::pow(pairwise_sum(err) / static_cast<double>(n), 1.0 / pv);
    }

    double best = *std::max_element(err.begin(), err.end());
    if (!options.refine_peaks)
        return best;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    const std::size_t top = std::min<std::size_t>(10, n);
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(top), order.end(),
                      [&](std::size_t a, std::size_t b) { return err[a] > err[b] || (err[a] == err[b] && a < b); });
    std::vector<Point> seeds;
    for (std::size_t i = 0; i < top; ++i)
        seeds.push_back(xs[order[i]]);
    for (const auto& h : options.hints) {
        if (h.size() != d)
            throw PreconditionError("lp_error_estimate: hint has wrong dimension");
        Point c = h;
        for (double& v : c)
            v = std::clamp(v, 0.0, 1.0);
        seeds.push_back(std::move(c));
    }

    const double step = options.refine_step > 0.0
                            ? options.refine_step
                            : 0.25 * std::pow(static_cast<double>(n), -1.0 / static_cast<double>(d));
    std::vector<double> refined(seeds.size());
    parallel_for(seeds.size(), [&](std::size_t i) { refined[i] = refine_peak(f, g, seeds[i], step); });
    for (double v : refined)
        best = std::max(best, v);
    return best;
}

double lp_error_estimate(const Function& f, const Function& g, Exponent p, std::size_t n, std::uint64_t seed,
                         std::size_t d) {
    LpEstimateOptions options;
    options.samples = n;
    options.seed = seed;
    return lp_error_estimate(f, g, p, d, options);
}

std::size_t fooling_grid_k(std::size_t m, std::size_t s) {
    if (m < 1 || s < 1)
        throw PreconditionError("fooling_grid_k: need m >= 1 and s >= 1");
    std::size_t k = ceil_root(m, s);
    while (checked_pow(4 * k, s) <= m)
        k *= 2;
    return k;
}

FoolingResult fooling_attack(const DeterministicMethod& method, std::size_t s, double amplitude, const Function& u0,
                             Exponent p, const AttackOptions& options) {
    const std::size_t d = method.dim;
    const std::size_t m = method.budget;
    if (s < 1 || s > d)
        throw PreconditionError("fooling_attack: need 1 <= s <= d");
    if (!(amplitude > 0.0))
        throw PreconditionError("fooling_attack: amplitude must be > 0");
    if (m < 1)
        throw PreconditionError("fooling_attack: budget m must be >= 1");
    if (!p.at_least(1.0))
        throw PreconditionError("fooling_attack: p must be >= 1");

    FoolingResult result;
    result.method = method.name;
    result.d = d;
    result.s = s;
    result.m = m;
    result.p = p;
    result.u0_label = options.u0_label;

    const std::size_t k0 = ceil_root(m, s);
    const std::size_t k = fooling_grid_k(m, s);
    for (std::size_t kk = k0; kk < k; kk *= 2)
        ++result.k_doublings;
    const std::size_t per_axis = 4 * k;
    const double M = 8.0 * static_cast<double>(k);
    result.k = k;
    result.M = M;
    result.total_cells = checked_pow(per_axis, s);

    auto cell_spec = [&](const std::vector<std::size_t>& cell, int nu) {
        HatSpec spec;
        spec.d = d;
        spec.s = s;
        spec.M = M;
        spec.nu = nu;
        spec.amplitude = amplitude;
        spec.y.assign(d, 1.0 / (8.0 * static_cast<double>(k)));
        for (std::size_t i = 0; i < s; ++i)
            spec.y[i] += static_cast<double>(cell[i]) / static_cast<double>(per_axis);
        return spec;
    };

    // Step 1: the u0 run.
    const QueryTranscript base = run_with_recording(method, u0);
    result.queries_made = base.points.size();

    // Step 2: cells whose open support contains a queried point. Cell j on an
    // axis covers [j/(4k), (j+1)/(4k)], so only neighbours of floor(4k x) can hit.
    std::set<std::vector<std::size_t>> touched;
    for (const Point& x : base.points) {
        std::vector<std::vector<std::size_t>> candidates(s);
        for (std::size_t i = 0; i < s; ++i) {
            const long long j = static_cast<long long>(std::floor(x[i] * static_cast<double>(per_axis)));
            for (long long c = j - 1; c <= j + 1; ++c)
                if (c >= 0 && c < static_cast<long long>(per_axis))
                    candidates[i].push_back(static_cast<std::size_t>(c));
        }
        std::vector<std::size_t> pick(s, 0), cell(s);
        for (;;) {
            for (std::size_t i = 0; i < s; ++i)
                cell[i] = candidates[i][pick[i]];
            if (in_open_support(cell_spec(cell, 1), x))
                touched.insert(cell);
            std::size_t axis = 0;
            while (axis < s && ++pick[axis] == candidates[axis].size())
                pick[axis++] = 0;
            if (axis == s)
                break;
        }
    }
    result.untouched_count = result.total_cells - touched.size();
    if (result.untouched_count == 0)
        throw AttackAborted("fooling_attack: every candidate cell was touched by a query");
    if (result.untouched_count + result.queries_made < result.total_cells)
        throw AttackAborted("fooling_attack: untouched cells fewer than (4k)^s - queries; supports overlap numerically");

    // Lexicographically smallest untouched cell (first coordinate most significant).
    std::vector<std::size_t> cell(s, 0);
    while (touched.count(cell)) {
        std::size_t axis = s;
        while (axis-- > 0) {
            if (++cell[axis] < per_axis)
                break;
            cell[axis] = 0;
        }
    }
    result.chosen_ell.resize(s);
    for (std::size_t i = 0; i < s; ++i)
        result.chosen_ell[i] = cell[i] + 1;

    // Step 3: both signs must leave the method blind.
    LpEstimateOptions est = options.estimate;
    est.hints.push_back(cell_spec(cell, 1).y);
    std::vector<Point> probes;
    {
        Rng rng(derive_seed(options.estimate.seed, {0x70726f6265ULL}));
        for (int i = 0; i < 64; ++i) {
            Point x(d);
            for (double& v : x)
                v = rng.uniform();
            probes.push_back(std::move(x));
        }
    }
    double errors[2] = {0.0, 0.0};
    for (int sign_index = 0; sign_index < 2; ++sign_index) {
        const int nu = sign_index == 0 ? 1 : -1;
        const HatSpec spec = cell_spec(cell, nu);
        Function f = [&u0, spec](std::span<const double> x) {
            const double base_value = u0(x);
            const double bump = hat_eval(spec, x);
            return bump == 0.0 ? base_value : base_value + bump;
        };
        const QueryTranscript rerun = run_with_recording(method, f);
        if (!transcripts_identical(base, rerun))
            throw AttackAborted("fooling_attack: blindness violated for nu=" + std::to_string(nu) +
                                "; the method is nondeterministic or the oracle is mis-wired");
        for (const Point& x : probes) {
            const double a = base.predictor(x);
            const double b = rerun.predictor(x);
            if (std::memcmp(&a, &b, sizeof(double)) != 0)
                throw AttackAborted("fooling_attack: predictors differ on identical transcripts");
        }
        errors[sign_index] = lp_error_estimate(f, rerun.predictor, p, d, est);
    }
    result.blindness_verified = true;
    result.measured_error_plus = errors[0];
    result.measured_error_minus = errors[1];
    result.chosen_nu = errors[1] > errors[0] ? -1 : 1;
    result.measured_error = std::max(errors[0], errors[1]);
    result.fooling_hat = cell_spec(cell, result.chosen_nu);
    result.theoretical_floor = amplitude * hat_lp_bounds(s, M, p).first;
    return result;
}

nlohmann::json to_json(const FoolingResult& r) {
    return nlohmann::json{
        {"method", r.method},
        {"d", r.d},
        {"s", r.s},
        {"m", r.m},
        {"p", exponent_to_json(r.p)},
        {"k", r.k},
        {"M", r.M},
        {"k_doublings", r.k_doublings},
        {"chosen_ell", r.chosen_ell},
        {"chosen_nu", r.chosen_nu},
        {"fooling_function",
         {{"d", r.fooling_hat.d},
          {"s", r.fooling_hat.s},
          {"M", r.fooling_hat.M},
          {"y", r.fooling_hat.y},
          {"nu", r.fooling_hat.nu},
          {"amplitude", r.fooling_hat.amplitude},
          {"u0", r.u0_label}}},
        {"total_cells", r.total_cells},
        {"queries_made", r.queries_made},
        {"untouched_count", r.untouched_count},
        {"measured_error", r.measured_error},
        {"measured_error_plus", r.measured_error_plus},
        {"measured_error_minus", r.measured_error_minus},
        {"theoretical_floor", r.theoretical_floor},
        {"blindness_verified", r.blindness_verified},
    };
}

std::string fooling_csv_header() {
    return "method,d,s,m,p,k,M,chosen_ell,chosen_nu,untouched_count,total_cells,queries_made,measured_error,"
           "theoretical_floor,blindness_verified";
}

std::string fooling_csv_row(const FoolingResult& r) {
    std::ostringstream os;
    std::string ell;
    for (std::size_t i = 0; i < r.chosen_ell.size(); ++i)
        ell += (i ? ";" : "") + std::to_string(r.chosen_ell[i]);
    os << r.method << ',' << r.d << ',' << r.s << ',' << r.m << ',' << r.p.to_string() << ',' << r.k << ','
       << fmt(r.M) << ',' << ell << ',' << r.chosen_nu << ',' << r.untouched_count << ',' << r.total_cells << ','
       << r.queries_made << ',' << fmt(r.measured_error) << ',' << fmt(r.theoretical_floor) << ','
       << (r.blindness_verified ? "true" : "false");
    return os.str();
}

Point to_centered_cube(std::span<const double> unit) {
    Point out(unit.begin(), unit.end());
    for (double& v : out)
        v -= 0.5;
    return out;
}

Point to_unit_cube(std::span<const double> centered) {
    Point out(centered.begin(), centered.end());
    for (double& v : out)
        v += 0.5;
    return out;
}

} // namespace unilearn
