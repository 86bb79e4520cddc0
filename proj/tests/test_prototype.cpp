#include "mixkern/prototype.hpp"

#include "mixkern/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace mixkern;
using namespace mixkern::proto;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_SUITE_BEGIN("prototype");

TEST_CASE("three-branch evaluation with paper boundary conventions") {
    PiecewiseProto p;
    p.t = 2.0;
    p.s_minus = -0.5;
    p.s_plus = 1.0;
    const double r = p.r();
    const double sqrt2 = std::sqrt(2.0);

    CHECK(eval_piecewise(p, sqrt2 * p.s_minus - 0.1) == doctest::Approx(-r * 2.0));
    CHECK(eval_piecewise(p, sqrt2 * p.s_minus) == doctest::Approx(-r * 2.0));  // closed below
    CHECK(eval_piecewise(p, 0.3) == 0.0);
    CHECK(eval_piecewise(p, sqrt2 * p.s_plus) == 0.0);  // closed at s+
    CHECK(eval_piecewise(p, sqrt2 * p.s_plus + 1e-12) == doctest::Approx(2.0));  // open above
}

TEST_CASE("symmetric thresholds give an odd function with r = 1") {
    PiecewiseProto p;
    p.t = 1.5;
    p.s_minus = -0.8;
    p.s_plus = 0.8;
    CHECK(p.r() == doctest::Approx(1.0));
    for (double x : {0.3, 0.9, 1.5, 2.4})
        CHECK(eval_piecewise(p, -x) == doctest::Approx(-eval_piecewise(p, x)));
}

TEST_CASE("closed-form coefficients in the odd case") {
    PiecewiseProto p;
    p.t = 1.7;
    p.s_minus = -0.6;
    p.s_plus = 0.6;
    const hermite::HermiteCoeffs c = coeffs_of_piecewise(p);
    const double s = 0.6;
    CHECK(c.a2 == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(c.a1 == doctest::Approx(2.0 * p.t * std::exp(-s * s) / std::sqrt(2.0 * kPi)));
    CHECK(c.nu == doctest::Approx(p.t * p.t * (1.0 - std::erf(s))));
}

TEST_CASE("vanishing tail: s+ large kills a1 and nu") {
    PiecewiseProto p;
    p.t = 1.0;
    p.s_minus = 6.0;
    p.s_plus = 8.0;
    const hermite::HermiteCoeffs c = coeffs_of_piecewise(p);
    CHECK(std::abs(c.a1) < 1e-13);
    CHECK(std::abs(c.nu) < 1e-25);
}

TEST_CASE("closed forms agree with declared-breakpoint quadrature") {
    auto stream = rng::Xoshiro256pp::for_stream(7, 0);
    for (int trial = 0; trial < 100; ++trial) {
        PiecewiseProto p;
        p.t = 0.2 + 2.5 * stream.uniform();
        p.s_minus = -2.0 + 2.0 * stream.uniform();
        p.s_plus = p.s_minus + 2.5 * stream.uniform();
        p.sign_flip = stream.uniform() < 0.5;
        const hermite::HermiteCoeffs closed = coeffs_of_piecewise(p);
        const hermite::HermiteCoeffs quad = hermite::compute_coeffs(to_kernel_func(p));
        CHECK(std::abs(closed.a1 - quad.a1) < 1e-8);
        CHECK(std::abs(closed.a2 - quad.a2) < 1e-8);
        CHECK(std::abs(closed.nu - quad.nu) < 1e-8);
        CHECK(std::abs(quad.a0) < 1e-8);
    }
}

TEST_CASE("negation flips (a1, a2) exactly and preserves nu") {
    PiecewiseProto p;
    p.t = 1.3;
    p.s_minus = -0.4;
    p.s_plus = 0.9;
    const hermite::HermiteCoeffs base = coeffs_of_piecewise(p);
    PiecewiseProto flipped = p;
    flipped.sign_flip = true;
    const hermite::HermiteCoeffs neg = coeffs_of_piecewise(flipped);
    CHECK(neg.a1 == -base.a1);
    CHECK(neg.a2 == -base.a2);
    CHECK(neg.nu == base.nu);
}

TEST_CASE("design recovers the sign function family") {
    hermite::HermiteCoeffs target;
    target.a1 = std::sqrt(2.0 / kPi);
    target.a2 = 0.0;
    target.nu = 1.0;
    const DesignResult res = design_piecewise(target);
    CHECK(res.converged);
    CHECK(res.residual < 1e-10);
    const hermite::HermiteCoeffs achieved = coeffs_of_piecewise(res.proto);
    CHECK(std::abs(achieved.a1 - target.a1) < 1e-10);
    CHECK(std::abs(achieved.a2 - target.a2) < 1e-10);
    CHECK(std::abs(achieved.nu - target.nu) < 1e-10);
}

TEST_CASE("negated target comes back with sign_flip") {
    hermite::HermiteCoeffs target;
    target.a1 = -0.5;
    target.a2 = 0.1;
    target.nu = 0.6;
    const DesignResult res = design_piecewise(target);
    CHECK(res.proto.sign_flip);
    const hermite::HermiteCoeffs achieved = coeffs_of_piecewise(res.proto);
    CHECK(std::abs(achieved.a1 - target.a1) < 1e-10);
    CHECK(std::abs(achieved.a2 - target.a2) < 1e-10);
}

TEST_CASE("centered ReLU fingerprint is honestly reported unreachable") {
    // the target satisfies nu >= a1^2 + a2^2 yet no (t, s-, s+) attains it:
    // a full-box sweep bottoms out at residual ~ 4.2e-2 (the family is not
    // surjective onto the moment cone)
    const hermite::HermiteCoeffs target = hermite::compute_coeffs(hermite::relu_centered());
    const FeasibilityReport rep = feasibility(target);
    CHECK(rep.necessary_condition);
    CHECK_FALSE(rep.feasible);
    CHECK(rep.best_residual > 1e-3);
    CHECK(rep.best_residual < 0.1);
    try {
        design_piecewise(target);
        FAIL("design_piecewise should have thrown");
    } catch (const InfeasibleError& err) {
        CHECK(err.best_residual == doctest::Approx(rep.best_residual).epsilon(1e-3));
    }
}

TEST_CASE("feasibility verdicts") {
    SUBCASE("variance below moment bound is infeasible") {
        const FeasibilityReport rep = feasibility({0.0, 1.0, 0.0, 0.5});
        CHECK_FALSE(rep.feasible);
        CHECK_FALSE(rep.necessary_condition);
    }
    SUBCASE("sign coefficients are feasible") {
        const FeasibilityReport rep =
            feasibility({0.0, std::sqrt(2.0 / kPi), 0.0, 1.0});
        CHECK(rep.feasible);
    }
    SUBCASE("a1 = 0 with positive variance is unreachable in this family") {
        // a1 > 0 whenever t > 0, so these targets must be reported infeasible
        const FeasibilityReport zero_mean = feasibility({0.0, 0.0, 0.0, 1.0});
        CHECK_FALSE(zero_mean.feasible);
        const FeasibilityReport pure_p2 = feasibility({0.0, 0.0, 1.0, 1.0});
        CHECK_FALSE(pure_p2.feasible);
    }
}

TEST_CASE("design round trip over a target grid") {
    auto stream = rng::Xoshiro256pp::for_stream(11, 0);
    int tested = 0;
    while (tested < 20) {
        PiecewiseProto p;
        p.t = 0.3 + 2.0 * stream.uniform();
        p.s_minus = -1.5 + 1.5 * stream.uniform();
        p.s_plus = p.s_minus + 2.0 * stream.uniform();
        const hermite::HermiteCoeffs target = coeffs_of_piecewise(p);  // feasible by construction
        const DesignResult res = design_piecewise(target);
        const hermite::HermiteCoeffs achieved = coeffs_of_piecewise(res.proto);
        CHECK(std::abs(achieved.a1 - target.a1) < 1e-10);
        CHECK(std::abs(achieved.a2 - target.a2) < 1e-10);
        CHECK(std::abs(achieved.nu - target.nu) < 1e-10);
        ++tested;
    }
}

TEST_CASE("invalid prototypes rejected") {
    PiecewiseProto bad;
    bad.t = -1.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad.t = 1.0;
    bad.s_minus = 1.0;
    bad.s_plus = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    CHECK_THROWS_AS(design_piecewise({0.0, 2.0, 0.0, 1.0}), InfeasibleError);
}

TEST_SUITE_END();
