#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ergoloop/agents.hpp"
#include "ergoloop/control.hpp"
#include "ergoloop/filters.hpp"
#include "ergoloop/rng.hpp"

namespace ergoloop {

using ControllerModel = std::variant<LinearController, MemorylessGainController, SwitchedController>;
using FilterModel = std::variant<MovingAverageFilter, LinearFilter>;
using FilterStateModel = std::variant<std::vector<double>, LinearFilterState>;

/// The assembled feedback system: agent population, controller (optionally
/// cascaded with a probability map), filter, and reference.
struct ClosedLoop {
    ClosedLoop(std::vector<AgentModel> agents, ControllerModel controller,
               std::optional<ProbabilityMap> prob_map, FilterModel filter, Rational reference);

    std::vector<AgentModel> agents;
    ControllerModel controller;
    std::optional<ProbabilityMap> prob_map;
    FilterModel filter;
    Rational reference;

    [[nodiscard]] double reference_value() const { return reference_d_; }
    [[nodiscard]] std::size_t agent_count() const { return agents.size(); }
    [[nodiscard]] int total_agent_dim() const { return total_agent_dim_; }
    [[nodiscard]] int controller_dim() const;
    [[nodiscard]] bool has_binary_agent() const { return has_binary_; }

private:
    double reference_d_ = 0.0;
    int total_agent_dim_ = 0;
    bool has_binary_ = false;
};

struct LoopState {
    std::int64_t k = 0;
    std::vector<Vector> x; // per-agent states
    Vector x_c;
    FilterStateModel filter;
};

/// Signals evaluated at one step: y from the agents, yhat from the filter,
/// e = r - yhat, pi from the controller cascade. `mode` is the switched
/// controller mode used (0 otherwise).
struct Signals {
    double y = 0.0;
    double yhat = 0.0;
    double e = 0.0;
    double pi = 0.0;
    int mode = 0;
};

/// k=0 state. Filter delay lines start at `filter_warm` (default 0).
LoopState initial_state(const ClosedLoop& loop, std::vector<Vector> agent_values, Vector x_c,
                        std::optional<double> filter_warm = {});

/// Convenience for populations of scalar agents.
LoopState initial_state(const ClosedLoop& loop, const std::vector<double>& agent_values,
                        const Vector& x_c, std::optional<double> filter_warm = {});

/// Signal evaluation at the state's step. Consumes one draw only for
/// randomized switching rules.
Signals compute_signals(const ClosedLoop& loop, const LoopState& s, RandomStream& rng);

struct StepResult {
    LoopState next;
    Signals signals;        // signals at the step that was taken
    std::size_t joint_branch; // lexicographic joint agent branch index
};

/// One loop transition. Per-step draw order: one mode draw when the
/// switching rule is randomized, then one draw per agent in ascending index
/// order. Throws SignalRangeError if pi leaves [0,1] while binary agents are
/// present.
StepResult step(const ClosedLoop& loop, const LoopState& s, RandomStream& rng);

struct TraceRecord {
    std::int64_t k = 0;
    std::vector<double> x; // flattened agent states
    double y = 0.0;
    double yhat = 0.0;
    double e = 0.0;
    double pi = 0.0;
    std::vector<double> x_c;
};

struct Trace {
    std::uint64_t master_seed = 0;
    std::string config_digest;
    std::vector<TraceRecord> records;         // horizon + 1 entries
    std::vector<std::size_t> joint_branches;  // horizon entries
};

/// Runs the loop for `horizon` steps; a pure function of
/// (loop, initial, horizon, seed).
Trace simulate(const ClosedLoop& loop, const LoopState& initial, std::int64_t horizon,
               std::uint64_t seed);

// ---------------------------------------------------------------------------
// Augmented affine form
// ---------------------------------------------------------------------------
// For loops made of affine-IFS agents, a linear controller, and a linear
// filter, one transition is xi <- A xi + b_l over the stacked state
// xi = [x, y, ytilde, x_f, yhat, e, x_c, pi], with the branch l drawn
// jointly across agents.

/// The stacked transition matrix. Throws UnsupportedStructureError unless
/// every component is linear/affine (probability map absent or identity).
Matrix augmented_matrix(const ClosedLoop& loop);

/// One offset per joint branch choice, in lexicographic order with agent 0
/// most significant (matching StepResult::joint_branch).
std::vector<Vector> offset_vectors(const ClosedLoop& loop, std::size_t budget = 1'000'000);

/// Stacks a loop state and its signals into the augmented state vector.
Vector augmented_state(const ClosedLoop& loop, const LoopState& s, const Signals& sig);

} // namespace ergoloop
