#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "ergoloop/control.hpp"
#include "ergoloop/errors.hpp"
#include "ergoloop/numerics/spectral.hpp"
#include "ergoloop/rng.hpp"

using namespace ergoloop;

TEST_CASE("linear step emits output before updating the state") {
    // pure proportional: zero-dimensional state
    LinearController prop(Matrix::Zero(0, 0), Matrix::Zero(0, 1), Matrix::Zero(1, 0),
                          Matrix::Constant(1, 1, 3.0));
    Vector empty(0);
    CHECK(linear_step(prop, empty, 2.0) == doctest::Approx(6.0));

    // one-dimensional: pi(k) must use x_c(k), not x_c(k+1)
    LinearController c(Matrix::Constant(1, 1, 0.5), Matrix::Constant(1, 1, 1.0),
                       Matrix::Constant(1, 1, 2.0), Matrix::Constant(1, 1, 0.0));
    Vector x = Vector::Constant(1, 1.0);
    CHECK(linear_step(c, x, 10.0) == doctest::Approx(2.0));
    CHECK(x(0) == doctest::Approx(10.5));
}

TEST_CASE("PI realization matches its pinned coefficients") {
    const LinearController pi = pi_controller(0.1, -4.0);
    CHECK(pi.a(0, 0) == 1.0);
    CHECK(pi.b(0, 0) == 1.0);
    CHECK(pi.c(0, 0) == doctest::Approx(0.5)); // kappa (1 - alpha)
    CHECK(pi.d(0, 0) == doctest::Approx(0.1));
    CHECK_FALSE(is_schur(pi.a, 1e-9)); // integrator pole at z = 1
    CHECK(spectral_radius(pi.a) == doctest::Approx(1.0));

    const LinearController cancel = pi_controller(0.3, 1.0);
    CHECK(cancel.c(0, 0) == doctest::Approx(0.0)); // pole/zero cancellation
    CHECK_THROWS_AS(pi_controller(0.0, -4.0), ModelValidationError);
}

TEST_CASE("PI realization unrolls to the difference-equation values") {
    // pi(k) = pi(k-1) + kappa (e(k) - alpha e(k-1)), e = 1, kappa = 0.1, alpha = -4
    const LinearController pi = pi_controller(0.1, -4.0);
    Vector x = Vector::Zero(1);
    CHECK(linear_step(pi, x, 1.0) == doctest::Approx(0.1));
    CHECK(linear_step(pi, x, 1.0) == doctest::Approx(0.6));
    CHECK(linear_step(pi, x, 1.0) == doctest::Approx(1.1));
}

TEST_CASE("PI realization equals the recursion on arbitrary inputs") {
    std::mt19937_64 seq(5);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    const double kappa = 0.7;
    const double alpha = -1.3;
    const LinearController pi = pi_controller(kappa, alpha);
    Vector x = Vector::Constant(1, 0.4);
    // recursion bootstrapped with pi(-1) = c x_c(0) and e(-1) = 0
    double prev_pi = pi.c(0, 0) * x(0);
    double prev_e = 0.0;
    for (int k = 0; k < 50; ++k) {
        const double e = dist(seq);
        const double expected = prev_pi + kappa * (e - alpha * prev_e);
        const double got = linear_step(pi, x, e);
        CHECK(got == doctest::Approx(expected).epsilon(1e-12));
        prev_pi = expected;
        prev_e = e;
    }
}

TEST_CASE("lag realization and its DC gain") {
    const LinearController lag = lag_controller(0.1, -4.01, 0.99);
    CHECK(lag.a(0, 0) == doctest::Approx(0.99));
    CHECK(lag.c(0, 0) == doctest::Approx(0.5)); // kappa (beta - alpha) = 0.1 * 5.00
    CHECK(lag.d(0, 0) == doctest::Approx(0.1));
    CHECK(is_schur(lag.a, 1e-6));
    CHECK_THROWS_AS(lag_controller(0.1, -4.0, 1.0), ModelValidationError);
    CHECK_THROWS_AS(lag_controller(0.1, -4.0, -1.2), ModelValidationError);

    // step response converges to kappa (1 - alpha) / (1 - beta) = 50.1
    Vector x = Vector::Zero(1);
    double out = 0.0;
    for (int k = 0; k < 1500; ++k) {
        out = linear_step(lag, x, 1.0);
    }
    CHECK(out == doctest::Approx(50.1).epsilon(1e-4));

    // beta = 0 degenerates to the FIR pi(k) = kappa e(k) - kappa alpha e(k-1)
    const LinearController fir = lag_controller(0.2, -3.0, 0.0);
    Vector xf = Vector::Zero(1);
    std::mt19937_64 seq(11);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    double prev_e = 0.0;
    for (int k = 0; k < 10; ++k) {
        const double e = dist(seq);
        CHECK(linear_step(fir, xf, e) ==
              doctest::Approx(0.2 * e + 0.6 * prev_e).epsilon(1e-12));
        prev_e = e;
    }
}

TEST_CASE("memoryless gain is g |e|") {
    const MemorylessGainController half{Rational(1, 2)};
    CHECK(gain_step(half, 1.0) == doctest::Approx(0.5));
    const MemorylessGainController percent{Rational(1, 100)};
    CHECK(gain_step(percent, 0.0) == 0.0);
    CHECK(gain_step(percent, -50.0) == doctest::Approx(0.5));
    CHECK_THROWS_AS(MemorylessGainController(Rational(0)), ModelValidationError);
    CHECK_THROWS_AS(MemorylessGainController(Rational(-1, 2)), ModelValidationError);
}

namespace {

LinearController simple_mode(double a, double d) {
    return {Matrix::Constant(1, 1, a), Matrix::Constant(1, 1, 1.0), Matrix::Constant(1, 1, 1.0),
            Matrix::Constant(1, 1, d)};
}

} // namespace

TEST_CASE("switched controller with a single mode is the linear controller") {
    const LinearController mode = simple_mode(0.5, 0.2);
    const SwitchedController sw({mode}, StateSwitchRule{[](const Vector&) { return 0; }});
    Vector xs = Vector::Constant(1, 0.3);
    Vector xl = xs;
    std::mt19937_64 seq(17);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (int k = 0; k < 100; ++k) {
        const double e = dist(seq);
        CHECK(switched_step(sw, xs, e, k, 0.0) == doctest::Approx(linear_step(mode, xl, e)));
        CHECK(xs(0) == doctest::Approx(xl(0)));
    }
}

TEST_CASE("state-dependent switching selects by half-space") {
    const SwitchedController sw({simple_mode(0.0, 1.0), simple_mode(0.0, -1.0)},
                                StateSwitchRule{[](const Vector& x) { return x(0) >= 0 ? 1 : 0; }});
    Vector x = Vector::Constant(1, 2.0);
    int mode = -1;
    switched_step(sw, x, 0.0, 0, 0.0, &mode);
    CHECK(mode == 1);
    x(0) = -2.0;
    switched_step(sw, x, 0.0, 1, 0.0, &mode);
    CHECK(mode == 0);
}

TEST_CASE("randomized switching respects the mode floor") {
    RandomizedSwitchRule rule;
    rule.floor = 0.05;
    rule.probabilities = [](const Vector&) {
        Vector p(2);
        p << 0.95, 0.05; // second mode exactly at the floor
        return p;
    };
    const SwitchedController sw({simple_mode(0.5, 1.0), simple_mode(0.5, 1.0)}, rule);
    RandomStream rng(make_stream(5, 5, 5));
    int hits = 0;
    const int n = 10000;
    Vector x = Vector::Zero(1);
    for (int k = 0; k < n; ++k) {
        int mode = -1;
        Vector scratch = x;
        switched_step(sw, scratch, 0.1, k, rng.uniform(), &mode);
        hits += mode == 1 ? 1 : 0;
    }
    CHECK(hits >= static_cast<int>(n * rule.floor / 2)); // frequency >= floor/2

    // identical modes: the trajectory cannot depend on the drawn mode
    Vector xa = Vector::Constant(1, 0.2);
    Vector xb = xa;
    const LinearController single = simple_mode(0.5, 1.0);
    RandomStream rng2(make_stream(6, 6, 6));
    for (int k = 0; k < 50; ++k) {
        const double pi_sw = switched_step(sw, xa, 0.3, k, rng2.uniform());
        const double pi_lin = linear_step(single, xb, 0.3);
        CHECK(pi_sw == doctest::Approx(pi_lin));
    }
}

TEST_CASE("external switching sequences exhaust") {
    const SwitchedController sw({simple_mode(0.1, 1.0), simple_mode(0.2, 1.0)},
                                ExternalSwitchRule{{0, 1, 0}});
    Vector x = Vector::Zero(1);
    for (int k = 0; k < 3; ++k) {
        CHECK_NOTHROW(switched_step(sw, x, 1.0, k, 0.0));
    }
    CHECK_THROWS_AS(switched_step(sw, x, 1.0, 3, 0.0), InputExhaustedError);
}

TEST_CASE("probability map kinds") {
    const auto clamp = ProbabilityMap::clamp(Rational(0), Rational(1));
    CHECK(clamp.apply(1.7) == 1.0);
    CHECK(clamp.apply(-0.2) == 0.0);
    CHECK(clamp.apply(0.4) == doctest::Approx(0.4));

    const auto affine =
        ProbabilityMap::affine_clamp(Rational(1, 100), Rational(1, 100), Rational(1, 100));
    CHECK(apply_probability_map(affine, 50.0) == doctest::Approx(0.51));
    CHECK(affine.apply(0.0) == doctest::Approx(0.01));
    CHECK(affine.apply(1e9) == doctest::Approx(0.99));
    CHECK(affine.apply_exact(Rational(50)) == Rational(51, 100));

    CHECK(ProbabilityMap::identity().apply(123.0) == 123.0);
    CHECK_THROWS_AS(ProbabilityMap::clamp(Rational(1), Rational(0)), ModelValidationError);
    CHECK_THROWS_AS(ProbabilityMap::clamp(Rational(0), Rational(2)), ModelValidationError);
    CHECK_THROWS_AS(ProbabilityMap::affine_clamp(Rational(1), Rational(0), Rational(1, 2)),
                    ModelValidationError);
}

TEST_CASE("clamp outputs stay inside their interval") {
    const auto clamp = ProbabilityMap::clamp(Rational(1, 10), Rational(9, 10));
    std::mt19937_64 seq(23);
    std::uniform_real_distribution<double> dist(-1e6, 1e6);
    for (int i = 0; i < 1000; ++i) {
        const double out = clamp.apply(dist(seq));
        CHECK(out >= 0.1);
        CHECK(out <= 0.9);
    }
    const auto range = clamp.output_range();
    REQUIRE(range.has_value());
    CHECK(range->first == doctest::Approx(0.1));
    CHECK(range->second == doctest::Approx(0.9));
    CHECK_FALSE(ProbabilityMap::identity().output_range().has_value());
}
