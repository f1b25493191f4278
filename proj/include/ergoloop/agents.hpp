#pragma once

#include <functional>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "ergoloop/numerics/matrix.hpp"
#include "ergoloop/numerics/rational.hpp"

namespace ergoloop {

// ---------------------------------------------------------------------------
// Agent families
// ---------------------------------------------------------------------------

/// Binary agent that flips its state with probability pi. Stateless beyond
/// the {0,1} value itself.
struct BinaryFlipAgent {};

/// Flips x in {0,1} with probability pi; `draw` is uniform in [0,1).
/// pi outside [0,1] is a signal-range error (callers must clamp upstream).
double binary_flip_step(double x, double pi, double draw);

/// Memoryless Bernoulli agent whose activation probability is a logistic
/// curve in the broadcast signal.
struct SigmoidBernoulliAgent {
    enum class Orientation { Increasing, Decreasing };

    SigmoidBernoulliAgent(double base, double amplitude, double slope, double threshold,
                          Orientation orientation);

    double base;
    double amplitude;
    double slope;
    double threshold;
    Orientation orientation;

    /// P(next state = 1) given the broadcast signal; always within
    /// [base, base + amplitude].
    [[nodiscard]] double prob_active(double pi) const;

    /// Uniform lower bound on both branch probabilities.
    [[nodiscard]] double floor() const;
};

double sigmoid_step(const SigmoidBernoulliAgent& agent, double pi, double draw);

/// Branch-selection law of an affine IFS agent: maps (state, signal) to a
/// probability vector over the declared offsets. Must be Lipschitz and
/// bounded below by the declared floor.
using ProbabilityLaw = std::function<Vector(const Vector& x, double pi)>;

/// Agent evolving by x <- A x + b_j, with branch j drawn from a
/// state/signal-dependent law whose probabilities stay above `floor`.
struct AffineIFSAgent {
    AffineIFSAgent(Matrix a, std::vector<Vector> offsets, ProbabilityLaw law, double floor);

    Matrix a;
    std::vector<Vector> offsets;
    ProbabilityLaw law;
    double floor;

    [[nodiscard]] int dim() const { return static_cast<int>(a.rows()); }
};

/// Applies one IFS transition. Branch selected by inverse CDF over the law's
/// probabilities in declared offset order. Returns (next state, branch index).
std::pair<Vector, int> affine_ifs_step(const AffineIFSAgent& agent, const Vector& x, double pi,
                                       double draw);

// ---------------------------------------------------------------------------
// Uniform agent handling
// ---------------------------------------------------------------------------

using AgentModel = std::variant<BinaryFlipAgent, SigmoidBernoulliAgent, AffineIFSAgent>;

int state_dim(const AgentModel& agent);
int branch_count(const AgentModel& agent);

/// One transition of any agent family (one uniform draw). For the scalar
/// families the branch index equals the next state value.
std::pair<Vector, int> agent_step(const AgentModel& agent, const Vector& x, double pi,
                                  double draw);

/// Same transition without allocating; returns the branch index.
int agent_step_inplace(const AgentModel& agent, Vector& x, double pi, double draw);

/// Exact value set of the agent, when finite: {0,1} for the scalar families,
/// the (dyadic-exact) offset values for a scalar zero-A IFS agent.
std::optional<std::vector<Rational>> finite_alphabet(const AgentModel& agent);

/// Affine-IFS view of the agent for the contraction analysis. `pi_range` is
/// the guaranteed range of the broadcast signal, used to bound flip
/// probabilities of binary agents; the declared floor is 0 when no positive
/// bound can be guaranteed.
struct AffineView {
    Matrix a;
    std::vector<Vector> offsets;
    ProbabilityLaw law;
    double declared_floor;
};

AffineView affine_view(const AgentModel& agent,
                       std::optional<std::pair<double, double>> pi_range);

/// Total resource use: sum over all agents (and state components).
double aggregate(const std::vector<Vector>& states);

} // namespace ergoloop
