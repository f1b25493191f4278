#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ergoloop/analysis/ensemble.hpp"
#include "ergoloop/loop.hpp"
#include "ergoloop/numerics/matrix.hpp"

namespace ergoloop {

/// One system variant (e.g. the PI and lag controllers of the same loop).
struct VariantConfig {
    std::string label;
    ClosedLoop loop;
};

struct IcTestConfig {
    enum class Statistic { TimeAverage, TrajectoryTail };
    StatKey a;
    StatKey b;
    double threshold = 0.05;
    Statistic statistic = Statistic::TimeAverage;
    std::size_t tail_window = 500;
};

struct Lemma1Config {
    std::vector<Matrix> a;
    std::vector<Matrix> p;
    int m_max = 20;
};

/// Parsed experiment description: system variants, run parameters, analysis
/// requests, output naming, and the content digest recorded in every output.
struct ExperimentConfig {
    std::string digest; // 16 hex digits over the canonical JSON form
    std::vector<VariantConfig> variants;
    std::vector<InitialCondition> initial_conditions;
    std::int64_t horizon = 1000;
    std::size_t realizations = 1;
    std::uint64_t master_seed = 0;
    bool record_trajectories = false;
    std::vector<std::string> certificates;
    int k_max = 1024;
    int m_max = 2048;
    double threshold = 0.05;
    std::optional<Lemma1Config> lemma1;
    std::optional<IcTestConfig> ic_test;
    std::string prefix = "experiment";
};

/// Parses and validates a config; throws ConfigError on any problem.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

/// FNV-1a hash of the canonical serialized form.
std::string config_digest(const nlohmann::json& j);

} // namespace ergoloop
