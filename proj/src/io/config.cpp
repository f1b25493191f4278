#include "ergoloop/io/config.hpp"

#include <cmath>
#include <fstream>

#include "ergoloop/errors.hpp"

namespace ergoloop {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& msg) {
    throw ConfigError("config: " + msg);
}

const json& require(const json& j, const std::string& key, const std::string& where) {
    const auto it = j.find(key);
    if (it == j.end()) {
        fail(where + ": missing key '" + key + "'");
    }
    return *it;
}

Rational parse_rational(const json& j, const std::string& where) {
    try {
        if (j.is_string()) {
            return Rational::parse(j.get<std::string>());
        }
        if (j.is_number_integer()) {
            return Rational(j.get<long long>());
        }
        if (j.is_number_float()) {
            return Rational::from_double(j.get<double>());
        }
    } catch (const Error& e) {
        fail(where + ": " + e.what());
    }
    fail(where + ": expected a number or rational string");
}

double parse_double(const json& j, const std::string& where) {
    if (!j.is_number()) {
        fail(where + ": expected a number");
    }
    return j.get<double>();
}

Matrix parse_matrix(const json& j, const std::string& where) {
    if (!j.is_array() || j.empty()) {
        fail(where + ": expected a non-empty array of rows");
    }
    const auto rows = j.size();
    if (!j[0].is_array() || j[0].empty()) {
        fail(where + ": rows must be non-empty arrays");
    }
    const auto cols = j[0].size();
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < rows; ++r) {
        if (!j[r].is_array() || j[r].size() != cols) {
            fail(where + ": ragged matrix");
        }
        for (std::size_t c = 0; c < cols; ++c) {
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                parse_double(j[r][c], where);
        }
    }
    return m;
}

Vector parse_vector(const json& j, const std::string& where) {
    if (!j.is_array()) {
        fail(where + ": expected an array");
    }
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        v(static_cast<Eigen::Index>(i)) = parse_double(j[i], where);
    }
    return v;
}

SigmoidBernoulliAgent::Orientation parse_orientation(const json& j, const std::string& where) {
    const std::string s = j.get<std::string>();
    if (s == "increasing") return SigmoidBernoulliAgent::Orientation::Increasing;
    if (s == "decreasing") return SigmoidBernoulliAgent::Orientation::Decreasing;
    fail(where + ": orientation must be 'increasing' or 'decreasing'");
}

ProbabilityLaw parse_law(const json& j, std::size_t n_branches, const std::string& where) {
    const std::string kind = require(j, "kind", where).get<std::string>();
    if (kind == "constant") {
        const Vector probs = parse_vector(require(j, "probs", where), where + ".probs");
        if (static_cast<std::size_t>(probs.size()) != n_branches) {
            fail(where + ": probs length must match the offset count");
        }
        return [probs](const Vector&, double) { return probs; };
    }
    if (kind == "logistic") {
        if (n_branches != 2) {
            fail(where + ": logistic law requires exactly two offsets");
        }
        const SigmoidBernoulliAgent curve(
            parse_double(require(j, "base", where), where + ".base"),
            parse_double(require(j, "amplitude", where), where + ".amplitude"),
            parse_double(require(j, "slope", where), where + ".slope"),
            parse_double(require(j, "threshold", where), where + ".threshold"),
            parse_orientation(require(j, "orientation", where), where));
        return [curve](const Vector&, double pi) {
            const double p1 = curve.prob_active(pi);
            Vector p(2);
            p << 1.0 - p1, p1;
            return p;
        };
    }
    fail(where + ": unknown law kind '" + kind + "'");
}

std::vector<AgentModel> parse_agents(const json& j) {
    if (!j.is_array() || j.empty()) {
        fail("system.agents: expected a non-empty array");
    }
    std::vector<AgentModel> agents;
    for (std::size_t idx = 0; idx < j.size(); ++idx) {
        const json& spec = j[idx];
        const std::string where = "system.agents[" + std::to_string(idx) + "]";
        const std::string kind = require(spec, "kind", where).get<std::string>();
        const std::size_t count = spec.value("count", std::size_t{1});
        if (count < 1) {
            fail(where + ": count must be >= 1");
        }
        for (std::size_t c = 0; c < count; ++c) {
            try {
                if (kind == "binary_flip") {
                    agents.emplace_back(BinaryFlipAgent{});
                } else if (kind == "sigmoid") {
                    agents.emplace_back(SigmoidBernoulliAgent(
                        parse_double(require(spec, "base", where), where + ".base"),
                        parse_double(require(spec, "amplitude", where), where + ".amplitude"),
                        parse_double(require(spec, "slope", where), where + ".slope"),
                        parse_double(require(spec, "threshold", where), where + ".threshold"),
                        parse_orientation(require(spec, "orientation", where), where)));
                } else if (kind == "affine_ifs") {
                    const Matrix a = parse_matrix(require(spec, "a", where), where + ".a");
                    const json& offs = require(spec, "offsets", where);
                    if (!offs.is_array() || offs.empty()) {
                        fail(where + ".offsets: expected a non-empty array");
                    }
                    std::vector<Vector> offsets;
                    for (const auto& o : offs) {
                        offsets.push_back(parse_vector(o, where + ".offsets"));
                    }
                    ProbabilityLaw law =
                        parse_law(require(spec, "law", where), offsets.size(), where + ".law");
                    const double floor =
                        parse_double(require(spec, "floor", where), where + ".floor");
                    agents.emplace_back(AffineIFSAgent(a, std::move(offsets), std::move(law), floor));
                } else {
                    fail(where + ": unknown agent kind '" + kind + "'");
                }
            } catch (const ConfigError&) {
                throw;
            } catch (const Error& e) {
                fail(where + ": " + e.what());
            }
        }
    }
    return agents;
}

ControllerModel parse_controller(const json& j) {
    const std::string kind = require(j, "kind", "system.controller").get<std::string>();
    try {
        if (kind == "pi") {
            return pi_controller(parse_double(require(j, "kappa", "controller"), "kappa"),
                                 parse_double(require(j, "alpha", "controller"), "alpha"));
        }
        if (kind == "lag") {
            return lag_controller(parse_double(require(j, "kappa", "controller"), "kappa"),
                                  parse_double(require(j, "alpha", "controller"), "alpha"),
                                  parse_double(require(j, "beta", "controller"), "beta"));
        }
        if (kind == "gain") {
            return MemorylessGainController(
                parse_rational(require(j, "gain", "controller"), "controller.gain"));
        }
        if (kind == "linear") {
            return LinearController(parse_matrix(require(j, "a", "controller"), "controller.a"),
                                    parse_matrix(require(j, "b", "controller"), "controller.b"),
                                    parse_matrix(require(j, "c", "controller"), "controller.c"),
                                    parse_matrix(require(j, "d", "controller"), "controller.d"));
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        fail(std::string("system.controller: ") + e.what());
    }
    fail("system.controller: unknown kind '" + kind + "'");
}

std::optional<ProbabilityMap> parse_probability_map(const json& system) {
    const auto it = system.find("probability_map");
    if (it == system.end() || it->is_null()) {
        return std::nullopt;
    }
    const std::string kind = require(*it, "kind", "probability_map").get<std::string>();
    try {
        if (kind == "identity") {
            return ProbabilityMap::identity();
        }
        if (kind == "clamp") {
            return ProbabilityMap::clamp(
                parse_rational(require(*it, "lo", "probability_map"), "probability_map.lo"),
                parse_rational(require(*it, "hi", "probability_map"), "probability_map.hi"));
        }
        if (kind == "affine_clamp") {
            return ProbabilityMap::affine_clamp(
                parse_rational(require(*it, "alpha", "probability_map"), "probability_map.alpha"),
                parse_rational(require(*it, "beta", "probability_map"), "probability_map.beta"),
                parse_rational(require(*it, "epsilon", "probability_map"),
                               "probability_map.epsilon"));
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        fail(std::string("system.probability_map: ") + e.what());
    }
    fail("system.probability_map: unknown kind '" + kind + "'");
}

FilterModel parse_filter(const json& j) {
    const std::string kind = require(j, "kind", "system.filter").get<std::string>();
    try {
        if (kind == "identity") {
            return MovingAverageFilter::identity();
        }
        if (kind == "moving_average" || kind == "moving_average_state_space") {
            const json& coeffs = require(j, "coefficients", "filter");
            if (!coeffs.is_array() || coeffs.empty()) {
                fail("system.filter.coefficients: expected a non-empty array");
            }
            std::vector<Rational> exact;
            for (std::size_t i = 0; i < coeffs.size(); ++i) {
                exact.push_back(parse_rational(coeffs[i], "system.filter.coefficients"));
            }
            MovingAverageFilter ma(std::move(exact));
            if (kind == "moving_average_state_space") {
                return LinearFilter::embed(ma);
            }
            return ma;
        }
        if (kind == "linear") {
            return LinearFilter(parse_matrix(require(j, "af", "filter"), "filter.af"),
                                parse_matrix(require(j, "bf", "filter"), "filter.bf"),
                                parse_matrix(require(j, "cf", "filter"), "filter.cf"),
                                parse_matrix(require(j, "df", "filter"), "filter.df"),
                                static_cast<int>(require(j, "taps", "filter").get<long long>()));
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        fail(std::string("system.filter: ") + e.what());
    }
    fail("system.filter: unknown kind '" + kind + "'");
}

ClosedLoop parse_system(const json& system) {
    try {
        return {parse_agents(require(system, "agents", "system")),
                parse_controller(require(system, "controller", "system")),
                parse_probability_map(system), parse_filter(require(system, "filter", "system")),
                parse_rational(require(system, "reference", "system"), "system.reference")};
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        fail(std::string("system: ") + e.what());
    }
}

StatKey parse_stat_key(const json& j, const std::string& where) {
    StatKey key;
    key.condition = require(j, "condition", where).get<std::string>();
    if (j.contains("group")) {
        const std::string g = j["group"].get<std::string>();
        if (g == "initially_active") {
            key.kind = StatKey::Kind::GroupActive;
        } else if (g == "initially_inactive") {
            key.kind = StatKey::Kind::GroupInactive;
        } else {
            fail(where + ": group must be 'initially_active' or 'initially_inactive'");
        }
    } else {
        key.kind = StatKey::Kind::Agent;
        key.agent = j.value("agent", std::size_t{0});
    }
    return key;
}

} // namespace

std::string config_digest(const json& j) {
    const std::string canon = j.dump();
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : canon) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

ExperimentConfig parse_config(const json& j) {
    ExperimentConfig cfg;
    cfg.digest = config_digest(j);

    const json& system = require(j, "system", "config");
    if (j.contains("variants")) {
        const json& variants = j["variants"];
        if (!variants.is_array() || variants.empty()) {
            fail("variants: expected a non-empty array");
        }
        for (const auto& v : variants) {
            json merged = system;
            for (const auto& [key, value] : v.items()) {
                if (key != "label") {
                    merged[key] = value;
                }
            }
            cfg.variants.push_back(
                {v.value("label", "variant" + std::to_string(cfg.variants.size())),
                 parse_system(merged)});
        }
    } else {
        cfg.variants.push_back({"", parse_system(system)});
    }
    const ClosedLoop& base = cfg.variants.front().loop;

    const json& run = require(j, "run", "config");
    cfg.horizon = run.value("horizon", std::int64_t{1000});
    cfg.realizations = run.value("realizations", std::size_t{1});
    cfg.master_seed = run.value("master_seed", std::uint64_t{0});
    cfg.record_trajectories = run.value("record_trajectories", false);
    if (cfg.horizon < 0) {
        fail("run.horizon: must be >= 0");
    }
    if (cfg.realizations < 1) {
        fail("run.realizations: must be >= 1");
    }

    const auto ics_it = run.find("initial_conditions");
    if (ics_it != run.end()) {
        if (!ics_it->is_array() || ics_it->empty()) {
            fail("run.initial_conditions: expected a non-empty array");
        }
        auto make_active_ic = [&](std::size_t active, const std::string& where) {
            if (active > base.agent_count()) {
                fail(where + ": active_count exceeds the agent count");
            }
            InitialCondition ic;
            ic.label = "active" + std::to_string(active);
            for (std::size_t a = 0; a < base.agent_count(); ++a) {
                Vector x(1);
                x(0) = a < active ? 1.0 : 0.0;
                ic.agent_values.push_back(std::move(x));
            }
            return ic;
        };
        for (std::size_t i = 0; i < ics_it->size(); ++i) {
            const json& spec = (*ics_it)[i];
            const std::string where = "run.initial_conditions[" + std::to_string(i) + "]";
            if (spec.contains("active_count_range")) {
                const json& range = spec["active_count_range"];
                const auto from = require(range, "from", where).get<std::size_t>();
                const auto to = require(range, "to", where).get<std::size_t>();
                const auto step = range.value("step", std::size_t{1});
                if (step < 1 || to < from) {
                    fail(where + ": need step >= 1 and to >= from");
                }
                for (std::size_t active = from; active <= to; active += step) {
                    InitialCondition ic = make_active_ic(active, where);
                    if (spec.contains("controller_state")) {
                        ic.controller_state = parse_vector(spec["controller_state"], where);
                    } else {
                        ic.controller_state = Vector::Zero(base.controller_dim());
                    }
                    if (spec.contains("filter_warm")) {
                        ic.filter_warm = parse_double(spec["filter_warm"], where + ".filter_warm");
                    }
                    cfg.initial_conditions.push_back(std::move(ic));
                }
                continue;
            }
            InitialCondition ic;
            if (spec.contains("active_count")) {
                const auto active = spec["active_count"].get<std::size_t>();
                ic = make_active_ic(active, where);
                ic.label = spec.value("label", ic.label);
            } else {
                ic.label = spec.value("label", "ic" + std::to_string(i));
                const json& vals = require(spec, "agents", where);
                if (!vals.is_array() || vals.size() != base.agent_count()) {
                    fail(where + ".agents: need one entry per agent");
                }
                for (std::size_t a = 0; a < vals.size(); ++a) {
                    if (vals[a].is_array()) {
                        ic.agent_values.push_back(parse_vector(vals[a], where + ".agents"));
                    } else {
                        Vector x(1);
                        x(0) = parse_double(vals[a], where + ".agents");
                        ic.agent_values.push_back(std::move(x));
                    }
                }
            }
            if (spec.contains("controller_state")) {
                ic.controller_state = parse_vector(spec["controller_state"], where);
            } else {
                ic.controller_state = Vector::Zero(base.controller_dim());
            }
            if (spec.contains("filter_warm")) {
                ic.filter_warm = parse_double(spec["filter_warm"], where + ".filter_warm");
            }
            cfg.initial_conditions.push_back(std::move(ic));
        }
        for (const auto& variant : cfg.variants) {
            for (const auto& ic : cfg.initial_conditions) {
                try {
                    (void)initial_state(variant.loop, ic.agent_values, ic.controller_state,
                                        ic.filter_warm);
                } catch (const Error& e) {
                    fail("initial condition '" + ic.label + "' does not fit variant '" +
                         variant.label + "': " + e.what());
                }
            }
        }
    }

    if (j.contains("analysis")) {
        const json& analysis = j["analysis"];
        if (analysis.contains("certificates")) {
            for (const auto& c : analysis["certificates"]) {
                cfg.certificates.push_back(c.get<std::string>());
            }
        }
        cfg.k_max = analysis.value("k_max", 1024);
        cfg.m_max = analysis.value("m_max", 2048);
        cfg.threshold = analysis.value("threshold", 0.05);
        if (analysis.contains("lemma1")) {
            const json& lem = analysis["lemma1"];
            Lemma1Config lc;
            for (const auto& m : require(lem, "a", "analysis.lemma1")) {
                lc.a.push_back(parse_matrix(m, "analysis.lemma1.a"));
            }
            for (const auto& m : require(lem, "p", "analysis.lemma1")) {
                lc.p.push_back(parse_matrix(m, "analysis.lemma1.p"));
            }
            lc.m_max = lem.value("m_max", 20);
            cfg.lemma1 = std::move(lc);
        }
        if (analysis.contains("ic_test")) {
            const json& t = analysis["ic_test"];
            IcTestConfig tc;
            tc.a = parse_stat_key(require(t, "a", "analysis.ic_test"), "analysis.ic_test.a");
            tc.b = parse_stat_key(require(t, "b", "analysis.ic_test"), "analysis.ic_test.b");
            tc.threshold = t.value("threshold", cfg.threshold);
            const std::string stat = t.value("statistic", std::string("time_average"));
            if (stat == "trajectory_tail") {
                tc.statistic = IcTestConfig::Statistic::TrajectoryTail;
            } else if (stat != "time_average") {
                fail("analysis.ic_test.statistic: must be 'time_average' or 'trajectory_tail'");
            }
            tc.tail_window = t.value("tail_window", std::size_t{500});
            cfg.ic_test = std::move(tc);
        }
    }

    if (j.contains("output")) {
        cfg.prefix = j["output"].value("prefix", cfg.prefix);
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        fail("cannot open '" + path + "'");
    }
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        fail("parse error in '" + path + "': " + e.what());
    }
    return parse_config(j);
}

} // namespace ergoloop
