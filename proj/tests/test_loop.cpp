#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>

#include "ergoloop/errors.hpp"
#include "ergoloop/loop.hpp"
#include "ergoloop/numerics/spectral.hpp"
#include "support.hpp"

using namespace ergoloop;
using ergoloop::testing::make_example1_loop;
using ergoloop::testing::make_pivslag_loop;
using ergoloop::testing::make_random_affine_loop;
using ergoloop::testing::random_affine_state;

TEST_CASE("signal evaluation order matches the block diagram") {
    const ClosedLoop loop = make_example1_loop();
    RandomStream rng(make_stream(1, 0, 0));
    const LoopState s = initial_state(loop, std::vector<double>{0.0, 0.0}, Vector(0));
    const Signals sig = compute_signals(loop, s, rng);
    CHECK(sig.y == 0.0);
    CHECK(sig.yhat == 0.0);
    CHECK(sig.e == 1.0);
    CHECK(sig.pi == doctest::Approx(0.5));
}

TEST_CASE("example-one transitions from the idle state are uniform") {
    const ClosedLoop loop = make_example1_loop();
    RandomStream rng(make_stream(2, 0, 0));
    const LoopState start = initial_state(loop, std::vector<double>{0.0, 0.0}, Vector(0));
    int counts[2][2] = {{0, 0}, {0, 0}};
    const int n = 4000;
    for (int i = 0; i < n; ++i) {
        const StepResult res = step(loop, start, rng);
        counts[static_cast<int>(res.next.x[0](0))][static_cast<int>(res.next.x[1](0))]++;
    }
    const double se = std::sqrt(0.25 * 0.75 / n);
    for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
            CHECK(std::abs(counts[a][b] / static_cast<double>(n) - 0.25) < 4.0 * se);
        }
    }
}

TEST_CASE("example-one satisfied states are absorbing") {
    const ClosedLoop loop = make_example1_loop();
    RandomStream rng(make_stream(3, 0, 0));
    LoopState s = initial_state(loop, std::vector<double>{1.0, 0.0}, Vector(0));
    for (int k = 0; k < 20; ++k) {
        const StepResult res = step(loop, s, rng);
        CHECK(res.signals.e == 0.0);
        CHECK(res.signals.pi == 0.0);
        CHECK(res.next.x[0](0) == 1.0);
        CHECK(res.next.x[1](0) == 0.0);
        s = res.next;
    }
}

TEST_CASE("gain plus identity filter exposes e and pi at every step") {
    const ClosedLoop loop = ergoloop::testing::make_population_loop(6, Rational(3), Rational(1, 10));
    RandomStream rng(make_stream(8, 0, 0));
    LoopState s = initial_state(loop, std::vector<double>(6, 0.0), Vector(0));
    for (int k = 0; k < 30; ++k) {
        const StepResult res = step(loop, s, rng);
        CHECK(res.signals.e == doctest::Approx(3.0 - res.signals.y));
        CHECK(res.signals.pi == doctest::Approx(0.1 * std::abs(res.signals.e)));
        s = res.next;
    }
}

TEST_CASE("pi out of range at a binary agent raises a signal-range error") {
    std::vector<AgentModel> agents{BinaryFlipAgent{}};
    const ClosedLoop loop(std::move(agents), MemorylessGainController(Rational(2)), std::nullopt,
                          MovingAverageFilter::identity(), Rational(1));
    RandomStream rng(make_stream(4, 0, 0));
    const LoopState s = initial_state(loop, std::vector<double>{0.0}, Vector(0));
    try {
        (void)step(loop, s, rng);
        FAIL("expected SignalRangeError");
    } catch (const SignalRangeError& err) {
        CHECK(err.step == 0);
        CHECK(err.pi == doctest::Approx(2.0));
    }
}

TEST_CASE("sigmoid population centres on the reference at extreme signals") {
    const ClosedLoop loop = make_pivslag_loop(true);
    double expected_y = 0.0;
    for (const auto& agent : loop.agents) {
        expected_y += std::get<SigmoidBernoulliAgent>(agent).prob_active(0.0);
    }
    CHECK(expected_y == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("simulate produces deterministic traces") {
    const ClosedLoop loop = make_example1_loop();
    const LoopState init = initial_state(loop, std::vector<double>{0.0, 0.0}, Vector(0));

    const Trace tiny = simulate(loop, init, 0, 123);
    CHECK(tiny.records.size() == 1);
    CHECK(tiny.joint_branches.empty());

    const Trace a = simulate(loop, init, 60, 2024);
    const Trace b = simulate(loop, init, 60, 2024);
    REQUIRE(a.records.size() == 61);
    for (std::size_t k = 0; k < a.records.size(); ++k) {
        CHECK(a.records[k].x == b.records[k].x);
        CHECK(a.records[k].pi == b.records[k].pi);
    }
    CHECK(a.joint_branches == b.joint_branches);

    // a non-absorbing loop keeps drawing, so different seeds must diverge
    const ClosedLoop busy = make_pivslag_loop(false);
    const LoopState busy_init =
        initial_state(busy, std::vector<double>{0, 0, 0, 0}, Vector::Constant(1, 5.0));
    const Trace c = simulate(busy, busy_init, 60, 2024);
    const Trace d = simulate(busy, busy_init, 60, 2025);
    bool differs = false;
    for (std::size_t k = 0; k < c.records.size(); ++k) {
        differs = differs || c.records[k].x != d.records[k].x;
    }
    CHECK(differs);

    // absorbing start stays put forever
    const LoopState absorbed = initial_state(loop, std::vector<double>{1.0, 0.0}, Vector(0));
    const Trace flat = simulate(loop, absorbed, 50, 7);
    for (const auto& rec : flat.records) {
        CHECK(rec.x == std::vector<double>{1.0, 0.0});
    }
}

TEST_CASE("augmented matrix carries the component spectra") {
    std::mt19937_64 rng(404);
    for (int trial = 0; trial < 8; ++trial) {
        const ClosedLoop loop = make_random_affine_loop(rng);
        const Matrix big = augmented_matrix(loop);

        std::vector<ComplexScalar> expected;
        auto absorb = [&](const Matrix& m) {
            if (m.rows() == 0) return;
            Eigen::EigenSolver<Matrix> es(m, false);
            for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
                expected.push_back(es.eigenvalues()(i));
            }
        };
        for (const auto& agent : loop.agents) {
            absorb(std::get<AffineIFSAgent>(agent).a);
        }
        const auto& filter = std::get<LinearFilter>(loop.filter);
        absorb(filter.af);
        absorb(std::get<LinearController>(loop.controller).a);
        // the delay line and the y, yhat, e, pi rows contribute zeros
        const std::size_t structural_zeros = static_cast<std::size_t>(filter.taps) + 4;
        REQUIRE(static_cast<Eigen::Index>(expected.size() + structural_zeros) == big.rows());

        Eigen::EigenSolver<Matrix> es(big, false);
        std::vector<ComplexScalar> got;
        for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
            got.push_back(es.eigenvalues()(i));
        }
        // component eigenvalues are simple: matched greedily within 1e-8
        for (const auto& lambda : expected) {
            double best = 1e9;
            std::size_t best_idx = 0;
            for (std::size_t i = 0; i < got.size(); ++i) {
                const double dist = std::abs(got[i] - lambda);
                if (dist < best) {
                    best = dist;
                    best_idx = i;
                }
            }
            REQUIRE(best < 1e-8);
            got.erase(got.begin() + static_cast<std::ptrdiff_t>(best_idx));
        }
        // the zero eigenvalues sit in Jordan chains, where eigensolvers only
        // reach eps^(1/m); check count and a cluster radius instead
        REQUIRE(got.size() == structural_zeros);
        for (const auto& leftover : got) {
            CHECK(std::abs(leftover) < 1e-3);
        }
    }
}

TEST_CASE("augmented matrix of a bare integrator block") {
    // one frozen agent, trivial filter, controller pole at 0.5
    Matrix zero = Matrix::Zero(1, 1);
    ProbabilityLaw sure = [](const Vector&, double) { return Vector::Ones(1); };
    std::vector<AgentModel> agents;
    agents.emplace_back(AffineIFSAgent(zero, {Vector::Zero(1)}, sure, 1.0));
    LinearController ctl(Matrix::Constant(1, 1, 0.5), Matrix::Zero(1, 1), Matrix::Zero(1, 1),
                         Matrix::Zero(1, 1));
    LinearFilter flt(Matrix::Zero(1, 1), Matrix::Zero(1, 1), Matrix::Zero(1, 0),
                     Matrix::Zero(1, 1), 0);
    const ClosedLoop loop(std::move(agents), std::move(ctl), std::nullopt, std::move(flt),
                          Rational(0));
    const Matrix big = augmented_matrix(loop);
    Eigen::EigenSolver<Matrix> es(big, false);
    bool found = false;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        found = found || std::abs(es.eigenvalues()(i) - ComplexScalar(0.5, 0.0)) < 1e-9;
    }
    CHECK(found);
}

TEST_CASE("contracting power exists when all components are stable") {
    std::mt19937_64 rng(505);
    const ClosedLoop loop = make_random_affine_loop(rng);
    const auto m = contraction_index(augmented_matrix(loop), 200);
    CHECK(m.has_value());
}

TEST_CASE("offset vectors enumerate joint branches lexicographically") {
    std::mt19937_64 rng(606);
    const ClosedLoop loop = make_random_affine_loop(rng);
    std::size_t expected = 1;
    for (const auto& agent : loop.agents) {
        expected *= std::get<AffineIFSAgent>(agent).offsets.size();
    }
    CHECK(offset_vectors(loop).size() == expected);

    // two branches per agent: 2^N offsets
    Matrix zero = Matrix::Zero(1, 1);
    ProbabilityLaw fifty = [](const Vector&, double) {
        Vector p(2);
        p << 0.5, 0.5;
        return p;
    };
    std::vector<AgentModel> agents;
    for (int i = 0; i < 3; ++i) {
        agents.emplace_back(
            AffineIFSAgent(zero, {Vector::Zero(1), Vector::Ones(1)}, fifty, 0.5));
    }
    LinearController ctl(Matrix::Constant(1, 1, 0.5), Matrix::Ones(1, 1), Matrix::Ones(1, 1),
                         Matrix::Ones(1, 1));
    LinearFilter flt(Matrix::Zero(1, 1), Matrix::Ones(1, 1), Matrix::Zero(1, 0),
                     Matrix::Ones(1, 1), 0);
    const ClosedLoop cube(std::move(agents), std::move(ctl), std::nullopt, std::move(flt),
                          Rational(1));
    const auto offsets = offset_vectors(cube);
    REQUIRE(offsets.size() == 8);
    // lexicographic with agent 0 most significant: offset 5 = (1,0,1)
    CHECK(offsets[5](0) == 1.0);
    CHECK(offsets[5](1) == 0.0);
    CHECK(offsets[5](2) == 1.0);
    CHECK(offsets[5](3) == 2.0); // y row: sum of agent offsets
}

TEST_CASE("component stepping equals the augmented affine form") {
    std::mt19937_64 rng(707);
    for (int trial = 0; trial < 5; ++trial) {
        const ClosedLoop loop = make_random_affine_loop(rng);
        const Matrix big = augmented_matrix(loop);
        const auto offsets = offset_vectors(loop);

        RandomStream stream(make_stream(900 + static_cast<std::uint64_t>(trial), 0, 0));
        LoopState state = random_affine_state(loop, rng);
        RandomStream probe = stream; // copy: signals must not consume draws here
        Vector xi = augmented_state(loop, state, compute_signals(loop, state, probe));

        for (int k = 0; k < 100; ++k) {
            const StepResult res = step(loop, state, stream);
            const Vector expected = big * xi + offsets[res.joint_branch];
            RandomStream probe2 = stream;
            const Vector actual =
                augmented_state(loop, res.next, compute_signals(loop, res.next, probe2));
            REQUIRE((expected - actual).cwiseAbs().maxCoeff() < 1e-10);
            xi = actual;
            state = res.next;
        }
    }
}

TEST_CASE("augmented form rejects non-affine structure") {
    CHECK_THROWS_AS(augmented_matrix(make_example1_loop()), UnsupportedStructureError);
    CHECK_THROWS_AS(augmented_matrix(make_pivslag_loop(true)), UnsupportedStructureError);
    CHECK_THROWS_AS(offset_vectors(make_example1_loop()), UnsupportedStructureError);
}

TEST_CASE("switched controllers run inside the loop") {
    RandomizedSwitchRule rule;
    rule.floor = 0.2;
    rule.probabilities = [](const Vector&) {
        Vector p(2);
        p << 0.8, 0.2;
        return p;
    };
    std::vector<LinearController> modes{lag_controller(0.1, -4.01, 0.9),
                                        lag_controller(0.2, -2.0, 0.5)};
    std::vector<AgentModel> agents{ergoloop::testing::increasing_sigmoid(),
                                   ergoloop::testing::decreasing_sigmoid()};
    const ClosedLoop loop(std::move(agents), SwitchedController(modes, rule), std::nullopt,
                          MovingAverageFilter::identity(), Rational(1));
    const LoopState init = initial_state(loop, std::vector<double>{0.0, 1.0}, Vector::Zero(1));
    const Trace a = simulate(loop, init, 200, 31);
    const Trace b = simulate(loop, init, 200, 31);
    REQUIRE(a.records.size() == 201);
    for (std::size_t k = 0; k < a.records.size(); ++k) {
        CHECK(a.records[k].x == b.records[k].x);
        CHECK(a.records[k].x_c == b.records[k].x_c);
    }
}

TEST_CASE("initial state validates dimensions") {
    const ClosedLoop loop = make_example1_loop();
    CHECK_THROWS_AS(initial_state(loop, std::vector<double>{0.0}, Vector(0)), DimensionError);
    CHECK_THROWS_AS(initial_state(loop, std::vector<double>{0.0, 0.0}, Vector::Zero(1)),
                    DimensionError);
    CHECK_THROWS_AS(simulate(loop, initial_state(loop, std::vector<double>{0.0, 0.0}, Vector(0)),
                             -1, 0),
                    ModelValidationError);
}
