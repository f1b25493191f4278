#pragma once

// Shared builders for the systems the test suites exercise repeatedly.

#include <Eigen/Eigenvalues>
#include <random>

#include "ergoloop/loop.hpp"

namespace ergoloop::testing {

/// Two binary agents sharing one resource unit, pi = |e|/2, no filter.
inline ClosedLoop make_example1_loop() {
    std::vector<AgentModel> agents{BinaryFlipAgent{}, BinaryFlipAgent{}};
    return {std::move(agents), MemorylessGainController(Rational(1, 2)), std::nullopt,
            MovingAverageFilter::identity(), Rational(1)};
}

/// N binary agents, reference r, pi = g|e|, identity filter.
inline ClosedLoop make_population_loop(std::size_t n, Rational r, Rational g) {
    std::vector<AgentModel> agents(n, AgentModel{BinaryFlipAgent{}});
    return {std::move(agents), MemorylessGainController(std::move(g)), std::nullopt,
            MovingAverageFilter::identity(), std::move(r)};
}

inline SigmoidBernoulliAgent increasing_sigmoid() {
    return {0.02, 0.95, 100.0, 5.0, SigmoidBernoulliAgent::Orientation::Increasing};
}

inline SigmoidBernoulliAgent decreasing_sigmoid() {
    return {0.03, 0.95, 100.0, 1.0, SigmoidBernoulliAgent::Orientation::Decreasing};
}

/// Four sigmoid agents, the half-half moving average, r = 2, PI or lag control.
inline ClosedLoop make_pivslag_loop(bool use_pi) {
    std::vector<AgentModel> agents{increasing_sigmoid(), increasing_sigmoid(),
                                   decreasing_sigmoid(), decreasing_sigmoid()};
    ControllerModel controller = use_pi ? pi_controller(0.1, -4.0)
                                        : lag_controller(0.1, -4.01, 0.99);
    return {std::move(agents), std::move(controller), std::nullopt,
            MovingAverageFilter(std::vector<Rational>{Rational(1, 2), Rational(1, 2)}),
            Rational(2)};
}

inline ProbabilityLaw logistic_law(const SigmoidBernoulliAgent& curve) {
    return [curve](const Vector&, double pi) {
        const double p1 = curve.prob_active(pi);
        Vector p(2);
        p << 1.0 - p1, p1;
        return p;
    };
}

/// The all-Schur bundle: sigmoid behaviour re-expressed as two-branch zero-A
/// IFS agents, lag control, and the moving average in state-space form.
inline ClosedLoop make_theorem1_loop() {
    const Matrix zero = Matrix::Zero(1, 1);
    const std::vector<Vector> offsets{Vector::Zero(1), Vector::Ones(1)};
    std::vector<AgentModel> agents;
    agents.emplace_back(AffineIFSAgent(zero, offsets, logistic_law(increasing_sigmoid()), 0.02));
    agents.emplace_back(AffineIFSAgent(zero, offsets, logistic_law(increasing_sigmoid()), 0.02));
    agents.emplace_back(AffineIFSAgent(zero, offsets, logistic_law(decreasing_sigmoid()), 0.02));
    agents.emplace_back(AffineIFSAgent(zero, offsets, logistic_law(decreasing_sigmoid()), 0.02));
    const MovingAverageFilter ma(std::vector<Rational>{Rational(1, 2), Rational(1, 2)});
    return {std::move(agents), lag_controller(0.1, -4.01, 0.99), std::nullopt,
            LinearFilter::embed(ma), Rational(2)};
}

inline Matrix random_matrix(std::mt19937_64& rng, int rows, int cols) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Matrix m(rows, cols);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            m(r, c) = dist(rng);
        }
    }
    return m;
}

/// Random square matrix scaled to operator norm `norm` (so spectral radius
/// is at most `norm`).
inline Matrix random_contraction(std::mt19937_64& rng, int dim, double norm) {
    Matrix m = random_matrix(rng, dim, dim);
    const double scale = m.jacobiSvd().singularValues()(0);
    return m * (norm / scale);
}

/// As above, but resampled until every eigenvalue stays away from zero, so
/// component spectra cannot blur into the structural zero eigenvalues of the
/// stacked loop matrix.
inline Matrix random_regular_contraction(std::mt19937_64& rng, int dim, double norm) {
    while (true) {
        Matrix m = random_contraction(rng, dim, norm);
        Eigen::EigenSolver<Matrix> es(m, false);
        if (es.eigenvalues().cwiseAbs().minCoeff() > 0.01 * norm) {
            return m;
        }
    }
}

/// Fully affine loop with random Schur components, for the augmented-form
/// cross-validation and spectrum tests.
inline ClosedLoop make_random_affine_loop(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> small(1, 2);
    std::uniform_int_distribution<int> taps_dist(0, 2);
    std::uniform_int_distribution<int> n_agents_dist(1, 3);
    std::uniform_int_distribution<int> branches_dist(2, 3);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);

    const int n_agents = n_agents_dist(rng);
    std::vector<AgentModel> agents;
    for (int i = 0; i < n_agents; ++i) {
        const int dim = small(rng);
        const int branches = branches_dist(rng);
        Matrix a = random_regular_contraction(rng, dim, 0.85);
        std::vector<Vector> offsets;
        Vector raw(branches);
        for (int b = 0; b < branches; ++b) {
            Vector off(dim);
            for (int d = 0; d < dim; ++d) {
                off(d) = unit(rng);
            }
            offsets.push_back(std::move(off));
            raw(b) = 0.2 + std::abs(unit(rng));
        }
        const Vector probs = raw / raw.sum();
        ProbabilityLaw law = [probs](const Vector&, double) { return probs; };
        agents.emplace_back(AffineIFSAgent(std::move(a), std::move(offsets), std::move(law),
                                           probs.minCoeff() * 0.99));
    }

    const int nc = small(rng);
    LinearController controller(random_regular_contraction(rng, nc, 0.9), random_matrix(rng, nc, 1),
                                random_matrix(rng, 1, nc), random_matrix(rng, 1, 1));

    const int nf = small(rng);
    const int taps = taps_dist(rng);
    LinearFilter filter(random_regular_contraction(rng, nf, 0.9), random_matrix(rng, nf, 1),
                        random_matrix(rng, nf, taps), random_matrix(rng, 1, nf), taps);

    return {std::move(agents), std::move(controller), std::nullopt, std::move(filter),
            Rational(static_cast<long long>(rng() % 9) - 4, 2)};
}

/// Randomly generated switched-system instance that satisfies the Lyapunov
/// inequalities by construction: P_i with eigenvalues in [0.6, 1.8] and A_i
/// scaled so max_j ||P_j^(1/2) A_i P_i^(-1/2)|| = 0.8.
struct VerifiedSwitchedInstance {
    std::vector<Matrix> a;
    std::vector<Matrix> p;
};

inline VerifiedSwitchedInstance make_verified_switched_instance(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> eig_dist(0.6, 1.8);
    std::uniform_int_distribution<int> count_dist(2, 3);
    const int ns = count_dist(rng);
    const int dim = 2 + static_cast<int>(rng() % 2);
    VerifiedSwitchedInstance out;
    std::vector<Matrix> p_sqrt, p_inv_sqrt;
    for (int i = 0; i < ns; ++i) {
        Eigen::HouseholderQR<Matrix> qr(random_matrix(rng, dim, dim));
        const Matrix orth = qr.householderQ();
        Vector eigs(dim);
        for (int d = 0; d < dim; ++d) eigs(d) = eig_dist(rng);
        out.p.push_back(orth * eigs.asDiagonal() * orth.transpose());
        p_sqrt.push_back(orth * eigs.cwiseSqrt().asDiagonal() * orth.transpose());
        p_inv_sqrt.push_back(orth * eigs.cwiseSqrt().cwiseInverse().asDiagonal() *
                             orth.transpose());
    }
    for (int i = 0; i < ns; ++i) {
        const Matrix raw = random_matrix(rng, dim, dim);
        double worst = 0.0;
        for (int j = 0; j < ns; ++j) {
            worst = std::max(worst,
                             (p_sqrt[j] * raw * p_inv_sqrt[i]).jacobiSvd().singularValues()(0));
        }
        out.a.push_back(raw * (0.8 / worst));
    }
    return out;
}

/// Random initial state for an affine loop.
inline LoopState random_affine_state(const ClosedLoop& loop, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::vector<Vector> values;
    for (const auto& agent : loop.agents) {
        Vector x(state_dim(agent));
        for (Eigen::Index d = 0; d < x.size(); ++d) {
            x(d) = unit(rng);
        }
        values.push_back(std::move(x));
    }
    Vector xc(loop.controller_dim());
    for (Eigen::Index d = 0; d < xc.size(); ++d) {
        xc(d) = unit(rng);
    }
    return initial_state(loop, std::move(values), std::move(xc));
}

} // namespace ergoloop::testing
