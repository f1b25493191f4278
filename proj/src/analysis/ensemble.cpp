#include "ergoloop/analysis/ensemble.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <thread>

#include "ergoloop/errors.hpp"

namespace ergoloop {

InitialCondition scalar_initial_condition(std::string label, const std::vector<double>& values,
                                          const Vector& controller_state,
                                          std::optional<double> filter_warm) {
    InitialCondition ic;
    ic.label = std::move(label);
    ic.agent_values.reserve(values.size());
    for (double v : values) {
        Vector x(1);
        x(0) = v;
        ic.agent_values.push_back(std::move(x));
    }
    ic.controller_state = controller_state;
    ic.filter_warm = filter_warm;
    return ic;
}

const ConditionStats& EnsembleStats::condition(const std::string& label) const {
    for (const auto& c : conditions) {
        if (c.label == label) return c;
    }
    throw LookupError("EnsembleStats: no condition labelled '" + label + "'");
}

namespace {

constexpr std::size_t kChunk = 16; // fixed so parallel and serial runs merge identically

unsigned resolve_threads(unsigned requested) {
    unsigned threads = requested != 0 ? requested : std::max(1U, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("ERGOLOOP_THREADS")) {
        const long cap = std::strtol(env, nullptr, 10);
        if (cap >= 1) {
            threads = std::min<unsigned>(threads, static_cast<unsigned>(cap));
        }
    }
    return std::max(1U, threads);
}

struct Partial {
    std::vector<double> agent_sum, agent_sumsq;
    double active_sum = 0.0, active_sumsq = 0.0;
    double inactive_sum = 0.0, inactive_sumsq = 0.0;
    std::vector<double> y_traj, xc_traj;
    std::vector<std::vector<double>> agent_traj;

    void init(std::size_t n_agents, std::int64_t horizon, bool trajectories) {
        agent_sum.assign(n_agents, 0.0);
        agent_sumsq.assign(n_agents, 0.0);
        if (trajectories) {
            const auto len = static_cast<std::size_t>(horizon) + 1;
            y_traj.assign(len, 0.0);
            xc_traj.assign(len, 0.0);
            agent_traj.assign(n_agents, std::vector<double>(len, 0.0));
        }
    }
};

struct RunContext {
    const ClosedLoop* loop = nullptr;
    const InitialCondition* ic = nullptr;
    std::int64_t horizon = 0;
    bool trajectories = false;
    bool fast_binary = false; // all binary agents + gain controller + MA filter
    std::vector<char> group_active;   // per agent: initial value == 1
    std::vector<char> group_inactive; // per agent: initial value == 0
    std::size_t n_active = 0, n_inactive = 0;
};

/// Generic realization: full variant dispatch; used for anything that is not
/// the pure binary-population fast path.
void run_generic(const RunContext& ctx, RandomStream rng, Partial& acc) {
    const ClosedLoop& loop = *ctx.loop;
    const std::size_t n = loop.agents.size();
    LoopState state =
        initial_state(loop, ctx.ic->agent_values, ctx.ic->controller_state, ctx.ic->filter_warm);
    std::vector<double> tsum(n, 0.0);

    auto record_point = [&](const LoopState& s, const Signals& sig, std::int64_t k) {
        for (std::size_t i = 0; i < n; ++i) {
            tsum[i] += s.x[i].sum();
        }
        if (ctx.trajectories) {
            const auto kk = static_cast<std::size_t>(k);
            acc.y_traj[kk] += sig.y;
            if (s.x_c.size() > 0) {
                acc.xc_traj[kk] += s.x_c(0);
            }
            for (std::size_t i = 0; i < n; ++i) {
                acc.agent_traj[i][kk] += s.x[i].sum();
            }
        }
    };

    for (std::int64_t k = 0; k < ctx.horizon; ++k) {
        StepResult res = step(loop, state, rng);
        record_point(state, res.signals, k);
        state = std::move(res.next);
    }
    const Signals last = compute_signals(loop, state, rng);
    record_point(state, last, ctx.horizon);

    const double denom = static_cast<double>(ctx.horizon) + 1.0;
    double active_avg = 0.0, inactive_avg = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double avg = tsum[i] / denom;
        acc.agent_sum[i] += avg;
        acc.agent_sumsq[i] += avg * avg;
        if (ctx.group_active[i]) active_avg += avg;
        if (ctx.group_inactive[i]) inactive_avg += avg;
    }
    if (ctx.n_active > 0) {
        const double g = active_avg / static_cast<double>(ctx.n_active);
        acc.active_sum += g;
        acc.active_sumsq += g * g;
    }
    if (ctx.n_inactive > 0) {
        const double g = inactive_avg / static_cast<double>(ctx.n_inactive);
        acc.inactive_sum += g;
        acc.inactive_sumsq += g * g;
    }
}

/// Binary-population fast path (binary-flip agents, memoryless gain, moving
/// average). Arithmetic and draw order match run_generic exactly; once the
/// loop freezes (pi = 0 with a settled buffer) the tail is finished
/// analytically, which changes no output because frozen steps consume no
/// state-relevant randomness.
void run_binary_fast(const RunContext& ctx, RandomStream rng, Partial& acc) {
    const ClosedLoop& loop = *ctx.loop;
    const auto& gain = std::get<MemorylessGainController>(loop.controller);
    const auto& ma = std::get<MovingAverageFilter>(loop.filter);
    const std::size_t n = loop.agents.size();
    const std::size_t taps = static_cast<std::size_t>(ma.taps());
    const double r = loop.reference_value();

    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = ctx.ic->agent_values[i](0);
    }
    std::vector<double> buffer(taps, ctx.ic->filter_warm.value_or(0.0));
    std::vector<double> tsum(n, 0.0);

    for (std::int64_t k = 0;; ++k) {
        double y = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            y += x[i];
        }
        double yhat = ma.weights[0] * y;
        for (std::size_t j = 0; j < taps; ++j) {
            yhat += ma.weights[j + 1] * buffer[j];
        }
        const double e = r - yhat;
        const double raw = gain.gain_value * std::abs(e);
        const double pi = loop.prob_map ? loop.prob_map->apply(raw) : raw;

        for (std::size_t i = 0; i < n; ++i) {
            tsum[i] += x[i];
        }
        if (ctx.trajectories) {
            const auto kk = static_cast<std::size_t>(k);
            acc.y_traj[kk] += y;
            for (std::size_t i = 0; i < n; ++i) {
                acc.agent_traj[i][kk] += x[i];
            }
        }
        if (k == ctx.horizon) {
            break;
        }
        if (pi < 0.0 || pi > 1.0) {
            throw SignalRangeError("ensemble: pi outside [0,1] reached a binary agent at k=" +
                                       std::to_string(k),
                                   k, pi);
        }

        bool frozen = pi == 0.0;
        for (std::size_t j = 0; frozen && j < taps; ++j) {
            frozen = buffer[j] == y;
        }
        if (frozen) {
            const auto remaining = static_cast<double>(ctx.horizon - k);
            for (std::size_t i = 0; i < n; ++i) {
                tsum[i] += x[i] * remaining;
            }
            if (ctx.trajectories) {
                for (std::int64_t kk = k + 1; kk <= ctx.horizon; ++kk) {
                    acc.y_traj[static_cast<std::size_t>(kk)] += y;
                    for (std::size_t i = 0; i < n; ++i) {
                        acc.agent_traj[i][static_cast<std::size_t>(kk)] += x[i];
                    }
                }
            }
            break;
        }

        for (std::size_t i = 0; i < n; ++i) {
            const double draw = rng.uniform();
            if (draw < pi) {
                x[i] = 1.0 - x[i];
            }
        }
        if (taps > 0) {
            for (std::size_t j = taps - 1; j > 0; --j) {
                buffer[j] = buffer[j - 1];
            }
            buffer[0] = y;
        }
    }

    const double denom = static_cast<double>(ctx.horizon) + 1.0;
    double active_avg = 0.0, inactive_avg = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double avg = tsum[i] / denom;
        acc.agent_sum[i] += avg;
        acc.agent_sumsq[i] += avg * avg;
        if (ctx.group_active[i]) active_avg += avg;
        if (ctx.group_inactive[i]) inactive_avg += avg;
    }
    if (ctx.n_active > 0) {
        const double g = active_avg / static_cast<double>(ctx.n_active);
        acc.active_sum += g;
        acc.active_sumsq += g * g;
    }
    if (ctx.n_inactive > 0) {
        const double g = inactive_avg / static_cast<double>(ctx.n_inactive);
        acc.inactive_sum += g;
        acc.inactive_sumsq += g * g;
    }
}

double stderr_of_mean(double sum, double sumsq, std::size_t n) {
    if (n < 2) return 0.0;
    const double nn = static_cast<double>(n);
    const double var = std::max(0.0, (sumsq - sum * sum / nn) / (nn - 1.0));
    return std::sqrt(var / nn);
}

} // namespace

EnsembleStats ensemble(const ClosedLoop& loop, const std::vector<InitialCondition>& ics,
                       const EnsembleOptions& opts) {
    if (ics.empty()) {
        throw ModelValidationError("ensemble: need at least one initial condition");
    }
    if (opts.realizations < 1 || opts.horizon < 0) {
        throw ModelValidationError("ensemble: need realizations >= 1 and horizon >= 0");
    }
    const unsigned threads = resolve_threads(opts.threads);

    bool all_binary = true;
    for (const auto& agent : loop.agents) {
        all_binary = all_binary && std::holds_alternative<BinaryFlipAgent>(agent);
    }
    const bool fast = all_binary &&
                      std::holds_alternative<MemorylessGainController>(loop.controller) &&
                      std::holds_alternative<MovingAverageFilter>(loop.filter);

    EnsembleStats stats;
    stats.master_seed = opts.master_seed;

    for (std::size_t ic_index = 0; ic_index < ics.size(); ++ic_index) {
        const InitialCondition& ic = ics[ic_index];
        // Validate dimensions once up front (initial_state throws on mismatch).
        (void)initial_state(loop, ic.agent_values, ic.controller_state, ic.filter_warm);

        RunContext ctx;
        ctx.loop = &loop;
        ctx.ic = &ic;
        ctx.horizon = opts.horizon;
        ctx.trajectories = opts.record_trajectories;
        ctx.fast_binary = fast;
        const std::size_t n = loop.agents.size();
        ctx.group_active.assign(n, 0);
        ctx.group_inactive.assign(n, 0);
        for (std::size_t i = 0; i < n; ++i) {
            if (ic.agent_values[i].size() == 1) {
                if (ic.agent_values[i](0) == 1.0) {
                    ctx.group_active[i] = 1;
                    ++ctx.n_active;
                } else if (ic.agent_values[i](0) == 0.0) {
                    ctx.group_inactive[i] = 1;
                    ++ctx.n_inactive;
                }
            }
        }

        const std::size_t chunks = (opts.realizations + kChunk - 1) / kChunk;
        std::vector<Partial> partials(chunks);
        for (auto& p : partials) {
            p.init(n, opts.horizon, opts.record_trajectories);
        }

        auto run_chunk = [&](std::size_t chunk) {
            const std::size_t begin = chunk * kChunk;
            const std::size_t end = std::min(opts.realizations, begin + kChunk);
            for (std::size_t rep = begin; rep < end; ++rep) {
                RandomStream rng = make_stream(opts.master_seed, ic_index, rep);
                if (ctx.fast_binary) {
                    run_binary_fast(ctx, rng, partials[chunk]);
                } else {
                    run_generic(ctx, rng, partials[chunk]);
                }
            }
        };

        if (threads == 1 || chunks == 1) {
            for (std::size_t c = 0; c < chunks; ++c) {
                run_chunk(c);
            }
        } else {
            std::atomic<std::size_t> next{0};
            std::exception_ptr failure;
            std::mutex failure_mutex;
            std::vector<std::thread> pool;
            const unsigned n_workers = std::min<unsigned>(threads, static_cast<unsigned>(chunks));
            pool.reserve(n_workers);
            for (unsigned t = 0; t < n_workers; ++t) {
                pool.emplace_back([&] {
                    while (true) {
                        const std::size_t c = next.fetch_add(1);
                        if (c >= chunks) break;
                        try {
                            run_chunk(c);
                        } catch (...) {
                            std::lock_guard<std::mutex> lock(failure_mutex);
                            if (!failure) failure = std::current_exception();
                            break;
                        }
                    }
                });
            }
            for (auto& t : pool) {
                t.join();
            }
            if (failure) {
                std::rethrow_exception(failure);
            }
        }

        // Merge partials in ascending chunk order so results are independent
        // of the thread count.
        Partial total;
        total.init(n, opts.horizon, opts.record_trajectories);
        for (const auto& p : partials) {
            for (std::size_t i = 0; i < n; ++i) {
                total.agent_sum[i] += p.agent_sum[i];
                total.agent_sumsq[i] += p.agent_sumsq[i];
            }
            total.active_sum += p.active_sum;
            total.active_sumsq += p.active_sumsq;
            total.inactive_sum += p.inactive_sum;
            total.inactive_sumsq += p.inactive_sumsq;
            if (opts.record_trajectories) {
                for (std::size_t k = 0; k < total.y_traj.size(); ++k) {
                    total.y_traj[k] += p.y_traj[k];
                    total.xc_traj[k] += p.xc_traj[k];
                }
                for (std::size_t i = 0; i < n; ++i) {
                    for (std::size_t k = 0; k < total.y_traj.size(); ++k) {
                        total.agent_traj[i][k] += p.agent_traj[i][k];
                    }
                }
            }
        }

        ConditionStats cs;
        cs.label = ic.label;
        cs.realizations = opts.realizations;
        cs.horizon = opts.horizon;
        const double big_r = static_cast<double>(opts.realizations);
        cs.agent_mean.resize(n);
        cs.agent_se.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            cs.agent_mean[i] = total.agent_sum[i] / big_r;
            cs.agent_se[i] = stderr_of_mean(total.agent_sum[i], total.agent_sumsq[i],
                                            opts.realizations);
        }
        if (ctx.n_active > 0) {
            cs.initially_active = GroupStats{
                total.active_sum / big_r,
                stderr_of_mean(total.active_sum, total.active_sumsq, opts.realizations),
                ctx.n_active};
        }
        if (ctx.n_inactive > 0) {
            cs.initially_inactive = GroupStats{
                total.inactive_sum / big_r,
                stderr_of_mean(total.inactive_sum, total.inactive_sumsq, opts.realizations),
                ctx.n_inactive};
        }
        if (opts.record_trajectories) {
            cs.y_mean_traj.resize(total.y_traj.size());
            cs.xc_mean_traj.resize(total.xc_traj.size());
            for (std::size_t k = 0; k < total.y_traj.size(); ++k) {
                cs.y_mean_traj[k] = total.y_traj[k] / big_r;
                cs.xc_mean_traj[k] = total.xc_traj[k] / big_r;
            }
            cs.agent_mean_traj.resize(n);
            for (std::size_t i = 0; i < n; ++i) {
                cs.agent_mean_traj[i].resize(total.agent_traj[i].size());
                for (std::size_t k = 0; k < total.agent_traj[i].size(); ++k) {
                    cs.agent_mean_traj[i][k] = total.agent_traj[i][k] / big_r;
                }
            }
        }
        stats.conditions.push_back(std::move(cs));
    }
    return stats;
}

std::string to_string(IcVerdict v) {
    switch (v) {
    case IcVerdict::NonErgodic: return "non-ergodic";
    case IcVerdict::ConsistentWithErgodic: return "consistent-with-ergodic";
    case IcVerdict::Inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

namespace {

std::pair<double, double> pick_statistic(const EnsembleStats& stats, const StatKey& key) {
    const ConditionStats& c = stats.condition(key.condition);
    switch (key.kind) {
    case StatKey::Kind::Agent:
        if (key.agent >= c.agent_mean.size()) {
            throw LookupError("ic_dependence_test: agent index out of range");
        }
        return {c.agent_mean[key.agent], c.agent_se[key.agent]};
    case StatKey::Kind::GroupActive:
        if (!c.initially_active) {
            throw LookupError("ic_dependence_test: no initially-active group in condition '" +
                              key.condition + "'");
        }
        return {c.initially_active->mean, c.initially_active->se};
    case StatKey::Kind::GroupInactive:
        if (!c.initially_inactive) {
            throw LookupError("ic_dependence_test: no initially-inactive group in condition '" +
                              key.condition + "'");
        }
        return {c.initially_inactive->mean, c.initially_inactive->se};
    }
    throw LookupError("ic_dependence_test: bad statistic kind");
}

} // namespace

IcVerdict ic_dependence_test(const EnsembleStats& stats, const StatKey& a, const StatKey& b,
                             double threshold) {
    const auto [mean_a, se_a] = pick_statistic(stats, a);
    const auto [mean_b, se_b] = pick_statistic(stats, b);
    const double diff = std::abs(mean_a - mean_b);
    if (diff > threshold + 3.0 * (se_a + se_b)) {
        return IcVerdict::NonErgodic;
    }
    if (diff < threshold) {
        return IcVerdict::ConsistentWithErgodic;
    }
    return IcVerdict::Inconclusive;
}

double trajectory_tail_mean(const ConditionStats& c, std::size_t agent, std::size_t window) {
    if (agent >= c.agent_mean_traj.size() || c.agent_mean_traj[agent].empty()) {
        throw LookupError("trajectory_tail_mean: no recorded trajectory for that agent");
    }
    const auto& traj = c.agent_mean_traj[agent];
    const std::size_t w = std::min(std::max<std::size_t>(window, 1), traj.size());
    double sum = 0.0;
    for (std::size_t k = traj.size() - w; k < traj.size(); ++k) {
        sum += traj[k];
    }
    return sum / static_cast<double>(w);
}

} // namespace ergoloop
