#include "support/oracles.hpp"

#include "unilearn/errors.hpp"
#include "unilearn/witness.hpp"

#include <doctest.h>

#include <cmath>
#include <string>

using namespace unilearn;

namespace {

std::vector<std::size_t> arch_of(std::size_t d, std::size_t L, std::size_t B) {
    std::vector<std::size_t> a{d};
    for (std::size_t i = 0; i + 1 < L; ++i)
        a.push_back(B);
    a.push_back(1);
    return a;
}

HatSpec hat(std::size_t d, std::size_t s, double M, Point y, int nu = 1) { return HatSpec{d, s, M, std::move(y), nu, 1.0}; }

} // namespace

TEST_CASE("smallest big-q construction by hand") {
    const NetworkClass cls(arch_of(1, 3, 3), 1.0, Exponent::infinity());
    const Construction con = construct_big_q(cls, hat(1, 1, 2, {0.5}));
    CHECK(con.numerator == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(con.numerator >= 0.75);
    CHECK(con.amplitude == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(forward_scalar(con.net, Point{0.5}) == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(in_class(con.net, cls, 0.0));
    CHECK(verify_construction(con.net, con.hat, con.amplitude, 10000, 1) <= 1e-10 * 0.75);
}

TEST_CASE("small-q numerators") {
    const NetworkClass q1(arch_of(1, 3, 3), 1.0, Exponent::finite(1));
    CHECK(construct_small_q(q1, hat(1, 1, 2, {0.5})).numerator == doctest::Approx(1.0 / 18.0).epsilon(1e-15));
    const NetworkClass q2(arch_of(1, 3, 3), 1.0, Exponent::finite(2));
    const double small = construct_small_q(q2, hat(1, 1, 2, {0.5})).numerator;
    const double big = construct_big_q(q2, hat(1, 1, 2, {0.5})).numerator;
    CHECK(small == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
    // Both branches apply at q = 2 and differ by a bounded factor.
    CHECK(big / small > 0.1);
    CHECK(big / small < 10.0);
    CHECK(construct_hat_network(q2, hat(1, 1, 2, {0.5})).branch == ConstructionBranch::BigQ);
}

TEST_CASE("nu flips the realization") {
    for (const char* q : {"1", "inf"}) {
        const NetworkClass cls(arch_of(2, 4, 6), 1.0, Exponent::parse(q));
        const Construction pos = construct_hat_network(cls, hat(2, 2, 4, {0.4, 0.6}, 1));
        const Construction neg = construct_hat_network(cls, hat(2, 2, 4, {0.4, 0.6}, -1));
        Rng rng(3);
        for (int k = 0; k < 500; ++k) {
            const Point x{rng.uniform(), rng.uniform()};
            CHECK(forward_scalar(neg.net, x) == -forward_scalar(pos.net, x));
        }
    }
}

TEST_CASE("preconditions name the violated inequality") {
    auto message = [](auto&& fn) {
        try {
            fn();
        } catch (const PreconditionError& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    const NetworkClass shallow(arch_of(1, 2, 3), 1.0, Exponent::infinity());
    CHECK(message([&] { construct_big_q(shallow, hat(1, 1, 2, {0.5})); }).find("L >= 3") != std::string::npos);
    const NetworkClass narrow(arch_of(2, 3, 3), 1.0, Exponent::infinity());
    CHECK(message([&] { construct_big_q(narrow, hat(2, 2, 2, {0.5, 0.5})); }).find("s <= B/3") != std::string::npos);
    const NetworkClass cls(arch_of(1, 3, 3), 1.0, Exponent::infinity());
    CHECK(message([&] { construct_big_q(cls, hat(1, 1, 2.5, {0.5})); }).find("M integer") != std::string::npos);
    CHECK(message([&] { construct_small_q(cls, hat(1, 1, 2, {0.5})); }).find("q <= 2") != std::string::npos);
    const NetworkClass q1(arch_of(1, 3, 3), 1.0, Exponent::finite(1));
    CHECK(message([&] { construct_big_q(q1, hat(1, 1, 2, {0.5})); }).find("q >= 2") != std::string::npos);
}

TEST_CASE("auxiliary blocks stay in [-1, 1]") {
    const NetworkClass cls(arch_of(3, 3, 9), 2.0, Exponent::finite(3));
    for (double M : {1.0, 2.0, 8.0}) {
        const ConstructionPlan plan = make_plan(cls, hat(3, 3, M, {0.0, 0.5, 1.0}), ConstructionBranch::BigQ);
        CHECK(plan.blocks == 1);
        for (const Point* v : {&plan.alpha, &plan.beta, &plan.gamma})
            for (double e : *v) {
                CHECK(e >= -1.0);
                CHECK(e <= 1.0);
            }
    }
}

TEST_CASE("exactness and membership over the parameter grid") {
    Rng rng(17);
    int combos = 0;
    for (std::size_t d : {1, 2, 3})
        for (std::size_t L : {3, 4, 5})
            for (std::size_t B : {3, 6, 9})
                for (double c : {0.5, 1.0, 2.0})
                    for (const char* qs : {"1", "1.5", "2", "3", "inf"})
                        for (double M : {1.0, 2.0, 8.0}) {
                            const std::size_t s = 1 + rng.below(std::min(B / 3, d));
                            Point y(d);
                            for (double& v : y)
                                v = rng.uniform();
                            const int nu = rng.below(2) ? 1 : -1;
                            const NetworkClass cls(arch_of(d, L, B), c, Exponent::parse(qs));
                            const Construction con = construct_hat_network(cls, hat(d, s, M, y, nu));
                            CHECK(in_class(con.net, cls, 0.0));
                            CHECK(verify_construction(con.net, con.hat, con.amplitude, 300, combos) <=
                                  1e-10 * con.amplitude);
                            if (cls.q.at_least(2.0))
                                CHECK(con.numerator >= big_q_lambda_guarantee(c, L, B, cls.q));
                            ++combos;
                        }
    CHECK(combos >= 200);
}

TEST_CASE("second layer collapses to a multiple of the hat") {
    const NetworkClass cls(arch_of(2, 4, 9), 1.5, Exponent::finite(3));
    const HatSpec spec = hat(2, 2, 4, {0.3, 0.55});
    const Construction con = construct_big_q(cls, spec);
    const double B = 9, s = 2, r = 1, q = 3, c = 1.5;
    const double factor = c * c * r / (2.0 * spec.M * std::pow(3.0 * r * s, 2.0 / q) * std::pow(B, 1.0 / q));
    Rng rng(4);
    for (int k = 0; k < 500; ++k) {
        const Point x{rng.uniform(), rng.uniform()};
        const auto h2 = forward_prefix(con.net, x, 2);
        const double expected = factor * std::max(0.0, delta_eval(spec, x));
        for (double v : h2)
            CHECK(std::abs(v - expected) <= 1e-12);
    }
}

TEST_CASE("all-ones layers scale constant vectors") {
    const NetworkClass cls(arch_of(1, 5, 6), 2.0, Exponent::finite(4));
    const Construction con = construct_big_q(cls, hat(1, 1, 2, {0.5}));
    const Layer& mid = con.net.layer(2);
    const double gain = 2.0 * std::pow(6.0, 1.0 - 2.0 / 4.0);
    for (double kappa : {0.0, 0.3, 1.7}) {
        for (std::size_t row = 0; row < mid.rows; ++row) {
            double acc = 0.0;
            for (std::size_t col = 0; col < mid.cols; ++col)
                acc += mid.w(row, col) * kappa;
            CHECK(acc == doctest::Approx(gain * kappa).epsilon(1e-14));
        }
    }
}

TEST_CASE("verification detects corruption") {
    CHECK(verify_construction(Mlp({1, 3, 3, 1}), hat(1, 1, 2, {0.5}), 0.0, 100, 1) == 0.0);
    const NetworkClass cls(arch_of(2, 3, 6), 1.0, Exponent::infinity());
    Construction con = construct_big_q(cls, hat(2, 1, 2, {0.5, 0.5}));
    con.net.layer(0).weights[0] += 1e-3;
    CHECK(verify_construction(con.net, con.hat, con.amplitude, 1000, 2) > 1e-6);
}

TEST_CASE("constructions agree with the naive forward oracle") {
    const NetworkClass cls(arch_of(3, 4, 9), 1.0, Exponent::finite(1.5));
    const Construction con = construct_small_q(cls, hat(3, 3, 8, {0.2, 0.5, 0.9}));
    Rng rng(8);
    for (int k = 0; k < 200; ++k) {
        const Point x{rng.uniform(), rng.uniform(), rng.uniform()};
        CHECK(forward_scalar(con.net, x) == doctest::Approx(oracle::naive_forward(con.net, x)[0]).epsilon(1e-13));
    }
}
