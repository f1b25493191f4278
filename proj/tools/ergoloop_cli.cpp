// Config-driven experiment runner: simulation traces, Monte Carlo ensembles,
// ergodicity certificates, and figure-data bundles.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "ergoloop/analysis/certificates.hpp"
#include "ergoloop/analysis/ensemble.hpp"
#include "ergoloop/analysis/finite_chain.hpp"
#include "ergoloop/errors.hpp"
#include "ergoloop/io/config.hpp"
#include "ergoloop/io/csv.hpp"
#include "ergoloop/loop.hpp"

namespace fs = std::filesystem;
using namespace ergoloop;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> realizations;
    std::optional<std::int64_t> horizon;
};

ExperimentConfig load_with_overrides(const CommonArgs& args) {
    ExperimentConfig cfg = load_config(args.config_path);
    if (args.seed) cfg.master_seed = *args.seed;
    if (args.realizations) cfg.realizations = *args.realizations;
    if (args.horizon) cfg.horizon = *args.horizon;
    return cfg;
}

std::ofstream open_output(const fs::path& path) {
    fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot open output file '" + path.string() + "'");
    }
    return out;
}

std::string file_tag(const std::string& prefix, const std::string& variant,
                     const std::string& rest) {
    std::string tag = prefix;
    if (!variant.empty()) tag += "_" + variant;
    if (!rest.empty()) tag += "_" + rest;
    return tag;
}

void cmd_simulate(const CommonArgs& args) {
    const ExperimentConfig cfg = load_with_overrides(args);
    if (cfg.initial_conditions.empty()) {
        throw ConfigError("config: simulate needs run.initial_conditions");
    }
    for (const auto& variant : cfg.variants) {
        for (const auto& ic : cfg.initial_conditions) {
            const LoopState init =
                initial_state(variant.loop, ic.agent_values, ic.controller_state, ic.filter_warm);
            Trace trace = simulate(variant.loop, init, cfg.horizon, cfg.master_seed);
            trace.config_digest = cfg.digest;
            const fs::path path = fs::path(args.out_dir) /
                                  (file_tag(cfg.prefix, variant.label, ic.label) + "_trace.csv");
            auto out = open_output(path);
            write_trace_csv(out, trace);
            std::cout << "wrote " << path.string() << "\n";
        }
    }
}

void write_trajectory_csv(const fs::path& path, const ConditionStats& c,
                          const std::string& digest, std::uint64_t seed) {
    auto out = open_output(path);
    out << "# config_digest=" << digest << "\n";
    out << "# master_seed=" << seed << "\n";
    out << "k,ybar";
    for (std::size_t i = 0; i < c.agent_mean_traj.size(); ++i) {
        out << ",xbar_" << (i + 1);
    }
    out << ",xcbar\n";
    for (std::size_t k = 0; k < c.y_mean_traj.size(); ++k) {
        out << k << "," << format_double(c.y_mean_traj[k]);
        for (const auto& traj : c.agent_mean_traj) {
            out << "," << format_double(traj[k]);
        }
        out << "," << format_double(c.xc_mean_traj[k]) << "\n";
    }
}

EnsembleStats run_ensemble(const ExperimentConfig& cfg, const VariantConfig& variant) {
    EnsembleOptions opts;
    opts.realizations = cfg.realizations;
    opts.horizon = cfg.horizon;
    opts.master_seed = cfg.master_seed;
    opts.record_trajectories = cfg.record_trajectories;
    return ensemble(variant.loop, cfg.initial_conditions, opts);
}

void cmd_ensemble(const CommonArgs& args) {
    const ExperimentConfig cfg = load_with_overrides(args);
    if (cfg.initial_conditions.empty()) {
        throw ConfigError("config: ensemble needs run.initial_conditions");
    }
    for (const auto& variant : cfg.variants) {
        const EnsembleStats stats = run_ensemble(cfg, variant);
        const fs::path path =
            fs::path(args.out_dir) / (file_tag(cfg.prefix, variant.label, "") + "_ensemble.csv");
        auto out = open_output(path);
        write_ensemble_csv(out, stats, cfg.digest);
        std::cout << "wrote " << path.string() << "\n";
        if (cfg.record_trajectories) {
            for (const auto& c : stats.conditions) {
                const fs::path tpath =
                    fs::path(args.out_dir) /
                    (file_tag(cfg.prefix, variant.label, c.label) + "_traj.csv");
                write_trajectory_csv(tpath, c, cfg.digest, stats.master_seed);
                std::cout << "wrote " << tpath.string() << "\n";
            }
        }
        if (cfg.ic_test) {
            IcVerdict verdict;
            if (cfg.ic_test->statistic == IcTestConfig::Statistic::TrajectoryTail) {
                const double a = trajectory_tail_mean(stats.condition(cfg.ic_test->a.condition),
                                                      cfg.ic_test->a.agent,
                                                      cfg.ic_test->tail_window);
                const double b = trajectory_tail_mean(stats.condition(cfg.ic_test->b.condition),
                                                      cfg.ic_test->b.agent,
                                                      cfg.ic_test->tail_window);
                verdict = std::abs(a - b) > cfg.ic_test->threshold
                              ? IcVerdict::NonErgodic
                              : IcVerdict::ConsistentWithErgodic;
            } else {
                verdict = ic_dependence_test(stats, cfg.ic_test->a, cfg.ic_test->b,
                                             cfg.ic_test->threshold);
            }
            std::cout << "ic_dependence_test[" << variant.label << "]: " << to_string(verdict)
                      << "\n";
        }
    }
}

void cmd_certify(const CommonArgs& args) {
    const ExperimentConfig cfg = load_with_overrides(args);
    if (cfg.certificates.empty() && !cfg.lemma1) {
        throw ConfigError("config: certify needs analysis.certificates or analysis.lemma1");
    }
    for (const auto& variant : cfg.variants) {
        std::string document;
        document += "# config_digest=" + cfg.digest + "\n";
        document += "# master_seed=" + std::to_string(cfg.master_seed) + "\n";
        for (const auto& kind : cfg.certificates) {
            Certificate cert;
            if (kind == "theorem1") {
                cert = verify_theorem1(variant.loop, cfg.m_max);
            } else if (kind == "theorem3") {
                cert = nonergodicity_certificate(variant.loop, cfg.k_max);
            } else if (kind == "finite_chain") {
                cert = chain_ergodicity_verdict(build_finite_chain(variant.loop));
            } else if (kind == "lemma1") {
                if (!cfg.lemma1) {
                    throw ConfigError("config: lemma1 certificate needs analysis.lemma1 matrices");
                }
                cert = verify_lemma1(cfg.lemma1->a, cfg.lemma1->p, cfg.lemma1->m_max);
            } else {
                throw ConfigError("config: unknown certificate '" + kind + "'");
            }
            document += cert.to_text() + "\n";
        }
        if (cfg.lemma1 &&
            std::find(cfg.certificates.begin(), cfg.certificates.end(), "lemma1") ==
                cfg.certificates.end()) {
            document += verify_lemma1(cfg.lemma1->a, cfg.lemma1->p, cfg.lemma1->m_max).to_text() +
                        "\n";
        }
        const fs::path path = fs::path(args.out_dir) /
                              (file_tag(cfg.prefix, variant.label, "") + "_certificates.txt");
        auto out = open_output(path);
        out << document;
        std::cout << document;
        std::cout << "wrote " << path.string() << "\n";
    }
}

void cmd_reproduce(const std::string& figure, const std::string& configs_dir,
                   const CommonArgs& base) {
    CommonArgs args = base;
    if (figure == "fig2") {
        args.config_path = (fs::path(configs_dir) / "ex1.cfg").string();
        const ExperimentConfig cfg = load_with_overrides(args);
        const FiniteChain chain = build_finite_chain(cfg.variants.front().loop);
        std::cout << "transition matrix (rows/columns ordered as listed):\n";
        for (std::size_t i = 0; i < chain.size(); ++i) {
            std::cout << chain.states[i].label() << ":";
            for (std::size_t j = 0; j < chain.size(); ++j) {
                std::cout << " " << chain.probability(i, j).str();
            }
            std::cout << "\n";
        }
        const fs::path path = fs::path(args.out_dir) / "fig2_transition.csv";
        auto out = open_output(path);
        out << "# config_digest=" << cfg.digest << "\n";
        out << "# master_seed=" << cfg.master_seed << "\n";
        out << "state";
        for (std::size_t j = 0; j < chain.size(); ++j) {
            out << "," << chain.states[j].label();
        }
        out << "\n";
        for (std::size_t i = 0; i < chain.size(); ++i) {
            out << chain.states[i].label();
            for (std::size_t j = 0; j < chain.size(); ++j) {
                out << "," << chain.probability(i, j).str();
            }
            out << "\n";
        }
        const Certificate cert = chain_ergodicity_verdict(chain);
        std::cout << cert.to_text();
        std::cout << "wrote " << path.string() << "\n";
        return;
    }
    if (figure == "fig3") {
        args.config_path = (fs::path(configs_dir) / "ex2.cfg").string();
        const ExperimentConfig cfg = load_with_overrides(args);
        const EnsembleStats stats = run_ensemble(cfg, cfg.variants.front());
        const fs::path path = fs::path(args.out_dir) / "fig3_curves.csv";
        auto out = open_output(path);
        out << "# config_digest=" << cfg.digest << "\n";
        out << "# master_seed=" << stats.master_seed << "\n";
        out << "initial_active,active_mean,active_se,inactive_mean,inactive_se\n";
        for (const auto& c : stats.conditions) {
            std::size_t active = 0;
            if (c.initially_active) active = c.initially_active->agent_count;
            out << active;
            if (c.initially_active) {
                out << "," << format_double(c.initially_active->mean) << ","
                    << format_double(c.initially_active->se);
            } else {
                out << ",,";
            }
            if (c.initially_inactive) {
                out << "," << format_double(c.initially_inactive->mean) << ","
                    << format_double(c.initially_inactive->se);
            } else {
                out << ",,";
            }
            out << "\n";
        }
        std::cout << "wrote " << path.string() << "\n";
        return;
    }
    if (figure == "fig456") {
        args.config_path = (fs::path(configs_dir) / "pivslag.cfg").string();
        ExperimentConfig cfg = load_with_overrides(args);
        cfg.record_trajectories = true;
        struct Series {
            std::string label;
            const ConditionStats* stats;
        };
        std::vector<EnsembleStats> all;
        all.reserve(cfg.variants.size());
        for (const auto& variant : cfg.variants) {
            all.push_back(run_ensemble(cfg, variant));
        }
        std::vector<Series> series;
        for (std::size_t v = 0; v < cfg.variants.size(); ++v) {
            for (const auto& c : all[v].conditions) {
                series.push_back({cfg.variants[v].label + "_" + c.label, &c});
            }
        }
        const auto write_series = [&](const std::string& name, auto&& pick) {
            const fs::path path = fs::path(args.out_dir) / name;
            auto out = open_output(path);
            out << "# config_digest=" << cfg.digest << "\n";
            out << "# master_seed=" << cfg.master_seed << "\n";
            out << "k";
            for (const auto& s : series) {
                out << "," << s.label;
            }
            out << "\n";
            const std::size_t len = series.front().stats->y_mean_traj.size();
            for (std::size_t k = 0; k < len; ++k) {
                out << k;
                for (const auto& s : series) {
                    out << "," << format_double(pick(*s.stats, k));
                }
                out << "\n";
            }
            std::cout << "wrote " << path.string() << "\n";
        };
        write_series("fig4_ybar.csv",
                     [](const ConditionStats& c, std::size_t k) { return c.y_mean_traj[k]; });
        write_series("fig5_x1bar.csv", [](const ConditionStats& c, std::size_t k) {
            return c.agent_mean_traj.front()[k];
        });
        write_series("fig6_xcbar.csv",
                     [](const ConditionStats& c, std::size_t k) { return c.xc_mean_traj[k]; });
        return;
    }
    throw ConfigError("reproduce: unknown figure '" + figure + "' (use fig2, fig3, or fig456)");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"ergoloop: stochastic agent-population feedback simulator and "
                 "ergodicity certification toolkit"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string figure;
    std::string configs_dir = "configs";

    auto add_common = [&](CLI::App* cmd, bool need_config) {
        if (need_config) {
            cmd->add_option("--config", args.config_path, "experiment config file")->required();
        }
        cmd->add_option("--out", args.out_dir, "output directory");
        cmd->add_option("--seed", args.seed, "master seed override");
        cmd->add_option("--realizations", args.realizations, "realization count override");
        cmd->add_option("--horizon", args.horizon, "horizon override");
    };

    CLI::App* sim = app.add_subcommand("simulate", "run one trace per variant and initial condition");
    add_common(sim, true);
    CLI::App* ens = app.add_subcommand("ensemble", "run Monte Carlo ensembles");
    add_common(ens, true);
    CLI::App* cert = app.add_subcommand("certify", "evaluate the configured certificates");
    add_common(cert, true);
    CLI::App* rep = app.add_subcommand("reproduce", "emit figure data bundles");
    rep->add_option("figure", figure, "fig2, fig3, or fig456")->required();
    rep->add_option("--configs", configs_dir, "directory holding the bundled configs");
    add_common(rep, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (sim->parsed()) {
            cmd_simulate(args);
        } else if (ens->parsed()) {
            cmd_ensemble(args);
        } else if (cert->parsed()) {
            cmd_certify(args);
        } else if (rep->parsed()) {
            cmd_reproduce(figure, configs_dir, args);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
