#include "support/oracles.hpp"

#include "unilearn/errors.hpp"
#include "unilearn/hat.hpp"
#include "unilearn/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace unilearn;

namespace {

double relu(double t) { return t > 0.0 ? t : 0.0; }

HatSpec spec_of(std::size_t d, std::size_t s, double M, Point y, int nu = 1, double amplitude = 1.0) {
    return HatSpec{d, s, M, std::move(y), nu, amplitude};
}

} // namespace

TEST_CASE("lambda values") {
    CHECK(lambda_eval(2, 1, 1) == 1.0);
    CHECK(lambda_eval(2, 1, 0.5) == 0.0);
    CHECK(lambda_eval(4, 1.5, 2.0) == -1.0);
    // Left of the splice the function is clamped to zero.
    CHECK(lambda_eval(2, 1, 0.0) == 0.0);
}

TEST_CASE("two ReLUs build the tent") {
    Rng rng(1);
    for (int k = 0; k < 10000; ++k) {
        const double M = 1.0 + rng.uniform() * 20.0;
        const double y = rng.uniform();
        const double t = rng.uniform(-0.5, 1.5);
        const double lhs = 0.5 * relu(t - y + 1.0 / M) - relu(t - y);
        CHECK(std::abs(lhs - lambda_eval(M, y, t) / (2.0 * M)) <= 1e-12);
    }
}

TEST_CASE("delta values") {
    const auto s3 = spec_of(4, 3, 5, {0.2, 0.4, 0.6, 0.8});
    CHECK(delta_eval(s3, s3.y) == doctest::Approx(1.0).epsilon(1e-15));
    const auto s1 = spec_of(2, 1, 3, {0.5, 0.5});
    CHECK(delta_eval(s1, Point{0.6, 0.9}) == lambda_eval(3, 0.5, 0.6));
    const auto s2 = spec_of(2, 2, 4, {0.5, 0.5});
    CHECK(delta_eval(s2, Point{0.5, 0.75}) == 0.0);
}

TEST_CASE("hat values and support") {
    const auto spec = spec_of(2, 2, 4, {0.5, 0.5});
    CHECK(hat_eval(spec, spec.y) == 1.0);
    CHECK(hat_eval(spec, Point{0.75, 0.5}) == 0.0);
    CHECK(hat_eval(spec, Point{0.9, 0.5}) == 0.0);
    const auto neg = spec_of(2, 2, 4, {0.5, 0.5}, -1, 3.0);
    CHECK(hat_eval(neg, neg.y) == -3.0);

    // Plateau: within 1/(2Ms) of the center the hat is at least half the amplitude.
    Rng rng(2);
    for (int k = 0; k < 2000; ++k) {
        const std::size_t s = 1 + rng.below(3);
        const std::size_t d = s + rng.below(2);
        const double M = 1.0 + static_cast<double>(rng.below(8));
        Point y(d);
        for (double& v : y)
            v = rng.uniform();
        const auto h = spec_of(d, s, M, y, 1, 2.0);
        Point x = y;
        for (std::size_t i = 0; i < s; ++i)
            x[i] += rng.uniform(-1.0, 1.0) / (2.0 * M * static_cast<double>(s));
        CHECK(hat_eval(h, x) >= 1.0 - 1e-12);

        // Nonzero only inside the support box.
        Point z(d);
        for (double& v : z)
            v = rng.uniform();
        if (hat_eval(h, z) != 0.0)
            for (std::size_t i = 0; i < s; ++i)
                CHECK(std::abs(z[i] - y[i]) <= 1.0 / M);
        CHECK(hat_unit(h, z) >= 0.0);
        CHECK(hat_unit(h, z) <= 1.0);
    }
}

TEST_CASE("spec validation") {
    CHECK_THROWS_AS(spec_of(1, 2, 2, {0.5}).validate(), PreconditionError);
    CHECK_THROWS_AS(spec_of(1, 1, 0.5, {0.5}).validate(), PreconditionError);
    CHECK_THROWS_AS(spec_of(1, 1, 2, {1.5}).validate(), PreconditionError);
    CHECK_THROWS_AS(spec_of(1, 1, 2, {0.5}, 0).validate(), PreconditionError);
    CHECK_THROWS_AS(spec_of(1, 1, 2, {0.5}, 1, 0.0).validate(), PreconditionError);
    CHECK_NOTHROW(spec_of(3, 2, 2, {0.5, 0.0, 1.0}).validate());
}

TEST_CASE("closed-form Lp sandwich") {
    for (std::size_t s : {1, 3, 7})
        for (double M : {1.0, 4.0, 100.0}) {
            const auto [lo, hi] = hat_lp_bounds(s, M, Exponent::infinity());
            CHECK(lo == 0.5);
            CHECK(hi == 1.0);
        }
    auto b1 = hat_lp_bounds(1, 8, Exponent::finite(1));
    CHECK(b1.first == doctest::Approx(0.015625).epsilon(1e-15));
    CHECK(b1.second == doctest::Approx(0.25).epsilon(1e-15));
    auto b2 = hat_lp_bounds(2, 8, Exponent::finite(2));
    CHECK(b2.first == doctest::Approx(0.0078125).epsilon(1e-15));
    CHECK(b2.second == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("numeric Lp norm") {
    const auto tent = spec_of(1, 1, 2, {0.5});
    CHECK(hat_lp_norm_numeric(tent, Exponent::finite(1), 64) == doctest::Approx(0.5).epsilon(1e-3));
    CHECK(hat_lp_norm_numeric(tent, Exponent::finite(1), 64) ==
          doctest::Approx(oracle::tent_integral(2, 0.5)).epsilon(1e-3));

    // Clipped at the boundary of the cube.
    const auto edge = spec_of(1, 1, 4, {0.1});
    CHECK(hat_lp_norm_numeric(edge, Exponent::finite(1), 512) ==
          doctest::Approx(oracle::tent_integral(4, 0.1)).epsilon(1e-4));

    const auto interior = spec_of(2, 2, 8, {0.5, 0.4});
    CHECK(std::abs(hat_lp_norm_numeric(interior, Exponent::infinity(), 128) - 1.0) <= 1e-9);

    CHECK_THROWS_AS(hat_lp_norm_numeric(interior, Exponent::finite(1), 100), PreconditionError);

    Rng rng(5);
    for (int k = 0; k < 50; ++k) {
        const std::size_t s = 1 + rng.below(2);
        const std::size_t d = s + rng.below(2);
        const double M = 1.0 + static_cast<double>(rng.below(6));
        Point y(d);
        for (double& v : y)
            v = rng.uniform();
        const auto h = spec_of(d, s, M, y);
        const std::size_t res = static_cast<std::size_t>(std::ceil(8.0 * M * static_cast<double>(s))) * 4;
        for (const Exponent p : {Exponent::finite(1), Exponent::finite(2), Exponent::infinity()}) {
            const double v = hat_lp_norm_numeric(h, p, res);
            const auto [lo, hi] = hat_lp_bounds(s, M, p);
            CHECK(lo <= v);
            CHECK(v <= hi);
        }
    }
}

TEST_CASE("fooling grid cells have disjoint open supports") {
    for (std::size_t k : {1, 2, 3}) {
        const double M = 8.0 * static_cast<double>(k);
        const std::size_t n = 4 * k;
        std::vector<SupportBox> boxes;
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b < n; ++b) {
                const Point y{1.0 / (8.0 * k) + a / (4.0 * k), 1.0 / (8.0 * k) + b / (4.0 * k)};
                boxes.push_back(support_box(spec_of(2, 2, M, y)));
            }
        for (std::size_t i = 0; i < boxes.size(); ++i)
            for (std::size_t j = i + 1; j < boxes.size(); ++j)
                CHECK_FALSE(open_boxes_intersect(boxes[i], boxes[j]));
        CHECK(open_boxes_intersect(boxes[0], boxes[0]));
    }
    // Two grid hats are never both nonzero at a point.
    const std::size_t k = 3;
    const double M = 8.0 * k;
    Rng rng(12);
    for (int t = 0; t < 20000; ++t) {
        const Point x{rng.uniform(), rng.uniform()};
        int nonzero = 0;
        for (std::size_t a = 0; a < 4 * k; ++a)
            for (std::size_t b = 0; b < 4 * k; ++b) {
                const Point y{1.0 / (8.0 * k) + a / (4.0 * k), 1.0 / (8.0 * k) + b / (4.0 * k)};
                nonzero += hat_unit(spec_of(2, 2, M, y), x) != 0.0 ? 1 : 0;
            }
        CHECK(nonzero <= 1);
    }
}
