#include "support/oracles.hpp"

#include "unilearn/bounds.hpp"
#include "unilearn/errors.hpp"
#include "unilearn/recovery.hpp"
#include "unilearn/witness.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace unilearn;

namespace {

const Exponent inf = Exponent::infinity();

Function constant(double v) {
    return [v](std::span<const double>) { return v; };
}

// Queries 0.25; then 0.75 if the answer was positive, else 0.5.
DeterministicMethod adaptive_probe() {
    DeterministicMethod m;
    m.name = "adaptive";
    m.dim = 1;
    m.budget = 2;
    m.run = [](Oracle& o) -> Predictor {
        const double first = o(Point{0.25});
        const double second = o(Point{first > 0.0 ? 0.75 : 0.5});
        return [first, second](std::span<const double>) { return first + second; };
    };
    return m;
}

} // namespace

TEST_CASE("oracle enforces budget and domain") {
    Oracle o(constant(1.0), 2, 2);
    CHECK(o(Point{0.0, 1.0}) == 1.0);
    CHECK_THROWS_AS(o(Point{0.5}), PreconditionError);
    CHECK_THROWS_AS(o(Point{0.5, 1.5}), PreconditionError);
    CHECK(o(Point{0.5, 0.5}) == 1.0);
    CHECK_THROWS_AS(o(Point{0.5, 0.5}), BudgetExceeded);
    CHECK(o.calls() == 2);

    DeterministicMethod greedy = zero_method(1, 1);
    greedy.run = [](Oracle& oracle) -> Predictor {
        oracle(Point{0.1});
        oracle(Point{0.2});
        return constant(0.0);
    };
    CHECK_THROWS_AS(run_with_recording(greedy, constant(0.0)), BudgetExceeded);
}

TEST_CASE("zero method records nothing") {
    const QueryTranscript t = run_with_recording(zero_method(3, 10), constant(5.0));
    CHECK(t.points.empty());
    CHECK(t.values.empty());
    CHECK(t.predictor(Point{0.1, 0.2, 0.3}) == 0.0);
}

TEST_CASE("adaptive queries depend on answers") {
    const Function pos = [](std::span<const double> x) { return x[0]; };
    const Function neg = [](std::span<const double> x) { return -x[0]; };
    const QueryTranscript a = run_with_recording(adaptive_probe(), pos);
    const QueryTranscript b = run_with_recording(adaptive_probe(), neg);
    REQUIRE(a.points.size() == 2);
    CHECK(a.points[1][0] == 0.75);
    CHECK(b.points[1][0] == 0.5);
    CHECK_FALSE(transcripts_identical(a, b));
    CHECK(transcripts_identical(a, run_with_recording(adaptive_probe(), pos)));
}

TEST_CASE("grid resolution") {
    CHECK(grid_resolution(1, 4) == 4);
    CHECK(grid_resolution(2, 16) == 4);
    CHECK(grid_resolution(2, 15) == 3);
    CHECK(grid_resolution(3, 1000) == 10);
    CHECK(grid_resolution(3, 999) == 9);
    CHECK(grid_resolution(5, 1) == 1);
}

TEST_CASE("grid recovery of the identity is a staircase") {
    const Function id = [](std::span<const double> x) { return x[0]; };
    const DeterministicMethod grid = grid_recovery_method(1, 4, 1.0);
    const QueryTranscript t = run_with_recording(grid, id);
    REQUIRE(t.points.size() == 4);
    for (std::size_t i = 0; i < 4; ++i)
        CHECK(t.points[i][0] == 0.25 * static_cast<double>(i));
    CHECK(t.predictor(Point{0.0}) == 0.0);
    CHECK(t.predictor(Point{0.3}) == 0.25);
    CHECK(t.predictor(Point{0.5}) == 0.5);
    CHECK(t.predictor(Point{1.0}) == 0.75);
    LpEstimateOptions est;
    est.samples = 10000;
    const double sup = lp_error_estimate(id, t.predictor, inf, 1, est);
    CHECK(sup == doctest::Approx(0.25).epsilon(1e-9));
    CHECK(sup <= *grid.sup_error_guarantee);
    CHECK(*grid.sup_error_guarantee == doctest::Approx(0.5));
}

TEST_CASE("grid recovery of constants and zero") {
    for (std::size_t d : {1, 2, 3}) {
        const QueryTranscript t = run_with_recording(grid_recovery_method(d, 30, 1.0), constant(2.5));
        for (double v : t.values)
            CHECK(v == 2.5);
        CHECK(lp_error_estimate(constant(2.5), t.predictor, inf, 1000, 1, d) == 0.0);
    }
    const QueryTranscript z = run_with_recording(grid_recovery_method(2, 9, 1.0), constant(0.0));
    CHECK(z.points.size() == 9);
    CHECK(z.predictor(Point{1.0, 1.0}) == 0.0);
}

TEST_CASE("grid cells cover the cube including the top faces") {
    const Function f = [](std::span<const double> x) { return 10.0 * x[0] + x[1]; };
    const QueryTranscript t = run_with_recording(grid_recovery_method(2, 9, 1.0), f);
    CHECK(t.predictor(Point{1.0, 1.0}) == f(Point{2.0 / 3.0, 2.0 / 3.0}));
    CHECK(t.predictor(Point{0.0, 1.0}) == f(Point{0.0, 2.0 / 3.0}));
    CHECK(t.predictor(Point{1.0 / 3.0, 0.5}) == f(Point{1.0 / 3.0, 1.0 / 3.0}));
}

TEST_CASE("grid recovery meets its bound on constructed hats") {
    Rng rng(12);
    for (int k = 0; k < 6; ++k) {
        const std::size_t d = 1 + rng.below(2);
        const NetworkClass cls({d, 3, 3, 1}, 0.5 + rng.uniform() * 1.5, Exponent::finite(1.0 + rng.uniform()));
        Point y(d);
        for (double& v : y)
            v = rng.uniform();
        const Construction con = construct_hat_network(cls, HatSpec{d, 1, 2.0, y, 1, 1.0});
        const Mlp net = con.net;
        const Function u = [&net](std::span<const double> x) { return forward_scalar(net, x); };
        for (std::size_t m : {16, 256}) {
            const QueryTranscript t = run_with_recording(grid_recovery_method(d, m, lipschitz_bound(cls)), u);
            LpEstimateOptions est;
            est.samples = 20000;
            CHECK(lp_error_estimate(u, t.predictor, inf, d, est) <= upper_bound_error(cls, static_cast<double>(m)));
        }
    }
}

TEST_CASE("Lp estimates of a known hat") {
    const HatSpec spec{1, 1, 2.0, {0.5}, 1, 0.7};
    const Function f = [&spec](std::span<const double> x) { return hat_eval(spec, x); };
    const Function zero = constant(0.0);
    CHECK(lp_error_estimate(f, f, inf, 1000, 3, 1) == 0.0);
    CHECK(lp_error_estimate(f, f, Exponent::finite(1), 1000, 3, 1) == 0.0);
    CHECK(lp_error_estimate(f, zero, Exponent::finite(1), 200000, 3, 1) == doctest::Approx(0.35).epsilon(0.02));

    // A narrow spike is found by refinement even when no sample lands near it.
    const HatSpec narrow{2, 2, 512.0, {0.3141, 0.7777}, -1, 2.0};
    const Function g = [&narrow](std::span<const double> x) { return hat_eval(narrow, x); };
    LpEstimateOptions est;
    est.samples = 1000;
    est.hints = {narrow.y};
    CHECK(std::abs(lp_error_estimate(g, zero, inf, 2, est) - 2.0) <= 1e-3);

    const HatSpec wide{1, 1, 8.0, {0.4}, 1, 1.0};
    const Function w = [&wide](std::span<const double> x) { return hat_eval(wide, x); };
    CHECK(std::abs(lp_error_estimate(w, zero, inf, 2000, 9, 1) - 1.0) <= 1e-3);
}

TEST_CASE("fooling the zero method") {
    const FoolingResult r = fooling_attack(zero_method(1, 1), 1, 1.0, constant(0.0), inf);
    CHECK(r.k == 1);
    CHECK(r.M == 8.0);
    CHECK(r.total_cells == 4);
    CHECK(r.untouched_count == 4);
    CHECK(r.chosen_ell == std::vector<std::size_t>{1});
    CHECK(r.fooling_hat.y == Point{0.125});
    CHECK(r.measured_error == 1.0);
    CHECK(r.theoretical_floor == 0.5);
    CHECK(r.blindness_verified);
}

TEST_CASE("fooling grid recovery") {
    const DeterministicMethod grid = grid_recovery_method(1, 16, 1.0);
    for (const Exponent p : {inf, Exponent::finite(1)}) {
        const FoolingResult r = fooling_attack(grid, 1, 1.0, constant(0.0), p);
        CHECK(r.k == 16);
        CHECK(r.M == 128.0);
        CHECK(r.total_cells == 64);
        CHECK(r.queries_made == 16);
        CHECK(r.untouched_count >= r.total_cells - r.queries_made);
        CHECK(r.k_doublings == 0);
        CHECK(r.blindness_verified);
        CHECK(r.measured_error >= r.theoretical_floor);
        if (p.is_infinite())
            CHECK(r.measured_error >= 0.5);
    }
}

TEST_CASE("untouched-cell count against a brute-force scan") {
    Rng rng(31);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t s = 1 + rng.below(2);
        const std::size_t m = 1 + rng.below(40);
        std::vector<Point> qs;
        DeterministicMethod scatter;
        scatter.name = "scatter";
        scatter.dim = 2;
        scatter.budget = m;
        Rng qrng(trial);
        for (std::size_t i = 0; i < m; ++i)
            qs.push_back({qrng.uniform(), qrng.uniform()});
        scatter.run = [qs](Oracle& o) -> Predictor {
            for (const Point& x : qs)
                o(x);
            return constant(0.0);
        };
        const FoolingResult r = fooling_attack(scatter, s, 1.0, constant(0.0), inf);

        // Brute force over all cells: touched means some query lies in the open support box.
        // Cells where the hat itself is nonzero at a query must be among them.
        const std::size_t n = 4 * r.k;
        std::size_t touched = 0;
        std::size_t hat_touched = 0;
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b < (s == 2 ? n : 1); ++b) {
                Point y{1.0 / (8.0 * r.k) + a / (4.0 * r.k), 1.0 / (8.0 * r.k)};
                if (s == 2)
                    y[1] += b / (4.0 * r.k);
                const HatSpec h{2, s, r.M, y, 1, 1.0};
                bool in_box = false;
                bool nonzero = false;
                for (const Point& x : qs) {
                    bool inside = true;
                    for (std::size_t i = 0; i < s; ++i)
                        inside = inside && std::abs(x[i] - y[i]) < 1.0 / r.M;
                    in_box = in_box || inside;
                    nonzero = nonzero || hat_unit(h, x) != 0.0;
                }
                touched += in_box ? 1 : 0;
                hat_touched += nonzero ? 1 : 0;
                if (nonzero)
                    CHECK(in_box);
            }
        CHECK(r.untouched_count == r.total_cells - touched);
        CHECK(hat_touched <= touched);
        CHECK(r.untouched_count >= r.total_cells - m);
    }
}

TEST_CASE("fooling with a hat-network base function") {
    const NetworkClass cls({1, 3, 3, 1}, 1.0, inf);
    const Construction con = construct_hat_network(cls, HatSpec{1, 1, 2.0, {0.5}, 1, 1.0});
    const Mlp net = con.net;
    const Function u0 = [&net](std::span<const double> x) { return forward_scalar(net, x); };
    const FoolingResult r = fooling_attack(zero_method(1, 3), 1, 0.2, u0, inf);
    CHECK(r.blindness_verified);
    // sup |u0| = 0.75 is attained at the center; refinement lands within rounding of it.
    CHECK(r.measured_error >= 0.75 - 1e-9);
}

TEST_CASE("nondeterministic methods are caught") {
    auto counter = std::make_shared<int>(0);
    DeterministicMethod flaky;
    flaky.name = "flaky";
    flaky.dim = 1;
    flaky.budget = 1;
    flaky.run = [counter](Oracle& o) -> Predictor {
        o(Point{(*counter)++ % 2 == 0 ? 0.9 : 0.95});
        return constant(0.0);
    };
    CHECK_THROWS_AS(fooling_attack(flaky, 1, 1.0, constant(0.0), inf), AttackAborted);
}

TEST_CASE("attack preconditions") {
    CHECK_THROWS_AS(fooling_attack(zero_method(1, 1), 2, 1.0, constant(0.0), inf), PreconditionError);
    CHECK_THROWS_AS(fooling_attack(zero_method(1, 1), 1, 0.0, constant(0.0), inf), PreconditionError);
    CHECK_THROWS_AS(fooling_attack(zero_method(1, 0), 1, 1.0, constant(0.0), inf), PreconditionError);
}

TEST_CASE("attack grid parameter") {
    CHECK(fooling_grid_k(1, 1) == 1);
    CHECK(fooling_grid_k(16, 1) == 16);
    CHECK(fooling_grid_k(16, 2) == 4);
    CHECK(fooling_grid_k(17, 2) == 5);
    CHECK(fooling_grid_k(1000, 3) == 10);
}

TEST_CASE("cube shims are inverse") {
    const Point x{0.0, 0.25, 1.0};
    CHECK(to_centered_cube(x) == Point{-0.5, -0.25, 0.5});
    CHECK(to_unit_cube(to_centered_cube(x)) == x);
}

TEST_CASE("fooling result serialization") {
    const FoolingResult r = fooling_attack(zero_method(1, 1), 1, 1.0, constant(0.0), inf);
    const auto j = to_json(r);
    CHECK(j["measured_error"] == 1.0);
    CHECK(j["p"] == "inf");
    CHECK(j["fooling_function"]["y"][0] == 0.125);
    const std::string row = fooling_csv_row(r);
    const std::string header = fooling_csv_header();
    CHECK(std::count(row.begin(), row.end(), ',') == std::count(header.begin(), header.end(), ','));
}
