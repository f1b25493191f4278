#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ergoloop/loop.hpp"

namespace ergoloop {

/// A labelled starting point for ensemble runs.
struct InitialCondition {
    std::string label;
    std::vector<Vector> agent_values;
    Vector controller_state;
    std::optional<double> filter_warm;
};

InitialCondition scalar_initial_condition(std::string label, const std::vector<double>& values,
                                          const Vector& controller_state,
                                          std::optional<double> filter_warm = {});

struct GroupStats {
    double mean = 0.0;
    double se = 0.0;
    std::size_t agent_count = 0;
};

/// Long-run statistics of one initial condition: per-agent time-average mean
/// and standard error over realizations, group statistics by initial agent
/// state, and (optionally) ensemble-mean trajectories.
struct ConditionStats {
    std::string label;
    std::size_t realizations = 0;
    std::int64_t horizon = 0;
    std::vector<double> agent_mean;
    std::vector<double> agent_se;
    std::optional<GroupStats> initially_active;
    std::optional<GroupStats> initially_inactive;
    std::vector<double> y_mean_traj;                  // empty unless recorded
    std::vector<double> xc_mean_traj;                 // first controller state component
    std::vector<std::vector<double>> agent_mean_traj; // per agent
};

struct EnsembleOptions {
    std::size_t realizations = 1000;
    std::int64_t horizon = 1000;
    std::uint64_t master_seed = 0;
    bool record_trajectories = false;
    unsigned threads = 0; // 0 = hardware, capped by ERGOLOOP_THREADS
};

struct EnsembleStats {
    std::uint64_t master_seed = 0;
    std::vector<ConditionStats> conditions;

    [[nodiscard]] const ConditionStats& condition(const std::string& label) const;
};

/// Independent realizations per initial condition with streams
/// (master_seed, ic_index, realization_index). Chunked accumulation in fixed
/// realization order makes results identical for any thread count.
EnsembleStats ensemble(const ClosedLoop& loop, const std::vector<InitialCondition>& ics,
                       const EnsembleOptions& opts);

// ---------------------------------------------------------------------------
// Initial-condition dependence test
// ---------------------------------------------------------------------------

enum class IcVerdict { NonErgodic, ConsistentWithErgodic, Inconclusive };

std::string to_string(IcVerdict v);

/// Selects one long-run statistic out of EnsembleStats.
struct StatKey {
    enum class Kind { Agent, GroupActive, GroupInactive };
    std::string condition;
    Kind kind = Kind::Agent;
    std::size_t agent = 0;
};

/// Flags empirical non-ergodicity when the two statistics differ by more
/// than threshold + 3 combined standard errors; consistent-with-ergodic when
/// they differ by less than threshold; inconclusive in between.
IcVerdict ic_dependence_test(const EnsembleStats& stats, const StatKey& a, const StatKey& b,
                             double threshold);

/// Mean of an agent's ensemble-average trajectory over the last `window`
/// recorded steps: the settled value the figures plot, insensitive to long
/// metastable transients that full-horizon time-averages retain. Requires
/// recorded trajectories.
double trajectory_tail_mean(const ConditionStats& c, std::size_t agent, std::size_t window);

} // namespace ergoloop
