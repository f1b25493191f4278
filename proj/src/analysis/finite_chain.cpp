#include "ergoloop/analysis/finite_chain.hpp"

#include <algorithm>
#include <set>

#include "ergoloop/errors.hpp"

namespace ergoloop {

namespace {
constexpr std::size_t kDenseLimit = 4096; // dense double views beyond this are refused
}

std::string ChainState::label() const {
    std::string out = "(";
    for (std::size_t i = 0; i < agents.size(); ++i) {
        if (i > 0) out += ",";
        out += agents[i].str();
    }
    out += ")";
    if (!buffer.empty()) {
        out += "|(";
        for (std::size_t i = 0; i < buffer.size(); ++i) {
            if (i > 0) out += ",";
            out += buffer[i].str();
        }
        out += ")";
    }
    return out;
}

Rational FiniteChain::probability(std::size_t from, std::size_t to) const {
    const Row& row = rows.at(from);
    const auto it = std::lower_bound(row.begin(), row.end(), to,
                                     [](const auto& entry, std::size_t col) {
                                         return entry.first < col;
                                     });
    if (it != row.end() && it->first == to) {
        return it->second;
    }
    return Rational(0);
}

Matrix FiniteChain::transition_matrix() const {
    if (size() > kDenseLimit) {
        throw BudgetError("FiniteChain::transition_matrix: chain too large for a dense view");
    }
    const auto n = static_cast<Eigen::Index>(size());
    Matrix p = Matrix::Zero(n, n);
    for (std::size_t i = 0; i < size(); ++i) {
        for (const auto& [j, prob] : rows[i]) {
            p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = prob.to_double();
        }
    }
    return p;
}

std::optional<std::size_t> FiniteChain::find_state(const ChainState& s) const {
    for (std::size_t i = 0; i < states.size(); ++i) {
        if (states[i] == s) return i;
    }
    return std::nullopt;
}

std::vector<Rational> attainable_sums(const std::vector<std::vector<Rational>>& alphabets,
                                      std::size_t budget) {
    if (alphabets.empty()) {
        throw DimensionError("attainable_sums: no alphabets given");
    }
    std::set<Rational> sums{Rational(0)};
    for (const auto& alphabet : alphabets) {
        if (alphabet.empty()) {
            throw DimensionError("attainable_sums: empty alphabet");
        }
        if (sums.size() > budget / alphabet.size()) {
            throw BudgetError("attainable_sums: enumeration budget exceeded");
        }
        std::set<Rational> next;
        for (const auto& s : sums) {
            for (const auto& v : alphabet) {
                next.insert(s + v);
            }
        }
        sums = std::move(next);
    }
    return {sums.begin(), sums.end()};
}

FiniteChain build_finite_chain(const ClosedLoop& loop, std::size_t max_states) {
    const auto n = loop.agents.size();
    for (const auto& agent : loop.agents) {
        if (!std::holds_alternative<BinaryFlipAgent>(agent)) {
            throw UnsupportedStructureError(
                "build_finite_chain: only binary-flip agents are supported");
        }
    }
    const auto* gain = std::get_if<MemorylessGainController>(&loop.controller);
    if (gain == nullptr) {
        throw UnsupportedStructureError(
            "build_finite_chain: controller state space must be finite; only the memoryless "
            "gain controller is supported");
    }
    const auto* ma = std::get_if<MovingAverageFilter>(&loop.filter);
    if (ma == nullptr) {
        throw UnsupportedStructureError("build_finite_chain: filter must be a moving average");
    }
    if (!ma->exact_weights) {
        throw RepresentationError("build_finite_chain: filter coefficients must be exact");
    }
    const auto& coeffs = *ma->exact_weights;
    const auto taps = static_cast<std::size_t>(ma->taps());

    // Buffer slots range over the attainable aggregate values.
    std::vector<std::vector<Rational>> alphabets(n,
                                                 std::vector<Rational>{Rational(0), Rational(1)});
    const std::vector<Rational> y_alphabet = attainable_sums(alphabets);

    std::size_t total = 1;
    for (std::size_t i = 0; i < n; ++i) {
        if (total > max_states / 2) {
            throw BudgetError("build_finite_chain: state budget exceeded");
        }
        total *= 2;
    }
    for (std::size_t j = 0; j < taps; ++j) {
        if (total > max_states / y_alphabet.size()) {
            throw BudgetError("build_finite_chain: state budget exceeded");
        }
        total *= y_alphabet.size();
    }
    const std::size_t outcomes = std::size_t{1} << n;
    if (total > 10'000'000 / outcomes) {
        throw BudgetError("build_finite_chain: transition enumeration budget exceeded");
    }

    FiniteChain chain;
    chain.states.reserve(total);
    for (std::size_t code = 0; code < total; ++code) {
        ChainState s;
        std::size_t rem = code;
        s.buffer.resize(taps);
        for (std::size_t j = taps; j-- > 0;) {
            s.buffer[j] = y_alphabet[rem % y_alphabet.size()];
            rem /= y_alphabet.size();
        }
        s.agents.resize(n);
        for (std::size_t i = n; i-- > 0;) {
            s.agents[i] = Rational(static_cast<long long>(rem % 2));
            rem /= 2;
        }
        chain.states.push_back(std::move(s));
    }

    auto state_index = [&](const std::vector<Rational>& agents,
                           const std::vector<Rational>& buffer) {
        std::size_t code = 0;
        for (const auto& a : agents) {
            code = code * 2 + (a == Rational(1) ? 1 : 0);
        }
        for (const auto& b : buffer) {
            const auto it = std::lower_bound(y_alphabet.begin(), y_alphabet.end(), b);
            code = code * y_alphabet.size() +
                   static_cast<std::size_t>(std::distance(y_alphabet.begin(), it));
        }
        return code;
    };

    const Rational one(1);
    chain.rows.resize(total);
    std::map<std::size_t, Rational> row_acc;
    for (std::size_t si = 0; si < total; ++si) {
        const ChainState& s = chain.states[si];
        Rational y(0);
        for (const auto& a : s.agents) y += a;
        Rational yhat = coeffs[0] * y;
        for (std::size_t j = 0; j < taps; ++j) {
            yhat += coeffs[j + 1] * s.buffer[j];
        }
        const Rational e = loop.reference - yhat;
        Rational pi = gain->gain * e.abs();
        if (loop.prob_map) {
            pi = loop.prob_map->apply_exact(pi);
        }
        if (pi < Rational(0) || pi > one) {
            throw SignalRangeError("build_finite_chain: pi outside [0,1] at state " + s.label(),
                                   -1, pi.to_double());
        }

        std::vector<Rational> next_buffer(taps);
        if (taps > 0) {
            next_buffer[0] = y;
            for (std::size_t j = 1; j < taps; ++j) {
                next_buffer[j] = s.buffer[j - 1];
            }
        }

        row_acc.clear();
        Rational row_sum(0);
        for (std::size_t mask = 0; mask < outcomes; ++mask) {
            Rational prob = one;
            std::vector<Rational> next_agents = s.agents;
            for (std::size_t i = 0; i < n; ++i) {
                const bool flip = ((mask >> (n - 1 - i)) & 1U) != 0;
                prob *= flip ? pi : one - pi;
                if (flip) {
                    next_agents[i] = one - next_agents[i];
                }
            }
            if (prob.is_zero()) continue;
            row_acc[state_index(next_agents, next_buffer)] += prob;
            row_sum += prob;
        }
        if (!(row_sum == one)) {
            throw ModelValidationError("build_finite_chain: row does not sum to 1 exactly");
        }
        chain.rows[si].assign(row_acc.begin(), row_acc.end());
    }
    return chain;
}

namespace {

/// Strongly connected components by iterative Kosaraju; returns component id
/// per state.
std::vector<int> scc_components(const std::vector<std::vector<std::size_t>>& adj, int& count) {
    const std::size_t n = adj.size();
    std::vector<std::vector<std::size_t>> radj(n);
    for (std::size_t u = 0; u < n; ++u) {
        for (std::size_t v : adj[u]) {
            radj[v].push_back(u);
        }
    }
    std::vector<char> seen(n, 0);
    std::vector<std::size_t> order;
    order.reserve(n);
    for (std::size_t root = 0; root < n; ++root) {
        if (seen[root]) continue;
        std::vector<std::pair<std::size_t, std::size_t>> stack{{root, 0}};
        seen[root] = 1;
        while (!stack.empty()) {
            auto& [u, next] = stack.back();
            if (next < adj[u].size()) {
                const std::size_t v = adj[u][next++];
                if (!seen[v]) {
                    seen[v] = 1;
                    stack.emplace_back(v, 0);
                }
            } else {
                order.push_back(u);
                stack.pop_back();
            }
        }
    }
    std::vector<int> comp(n, -1);
    count = 0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        if (comp[*it] != -1) continue;
        std::vector<std::size_t> stack{*it};
        comp[*it] = count;
        while (!stack.empty()) {
            const std::size_t u = stack.back();
            stack.pop_back();
            for (std::size_t v : radj[u]) {
                if (comp[v] == -1) {
                    comp[v] = count;
                    stack.push_back(v);
                }
            }
        }
        ++count;
    }
    return comp;
}

std::vector<std::vector<std::size_t>> support_graph(const FiniteChain& chain) {
    const std::size_t n = chain.size();
    std::vector<std::vector<std::size_t>> adj(n);
    for (std::size_t i = 0; i < n; ++i) {
        adj[i].reserve(chain.rows[i].size());
        for (const auto& [j, prob] : chain.rows[i]) {
            if (!prob.is_zero()) {
                adj[i].push_back(j);
            }
        }
    }
    return adj;
}

} // namespace

std::vector<std::vector<std::size_t>> recurrent_classes(const FiniteChain& chain) {
    const auto adj = support_graph(chain);
    int count = 0;
    const std::vector<int> comp = scc_components(adj, count);

    std::vector<char> closed(static_cast<std::size_t>(count), 1);
    for (std::size_t u = 0; u < adj.size(); ++u) {
        for (std::size_t v : adj[u]) {
            if (comp[u] != comp[v]) {
                closed[static_cast<std::size_t>(comp[u])] = 0;
            }
        }
    }
    std::vector<std::vector<std::size_t>> classes(static_cast<std::size_t>(count));
    for (std::size_t u = 0; u < adj.size(); ++u) {
        classes[static_cast<std::size_t>(comp[u])].push_back(u);
    }
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t c = 0; c < classes.size(); ++c) {
        if (closed[c]) {
            out.push_back(std::move(classes[c]));
        }
    }
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    return out;
}

std::vector<Vector> stationary_measures(const FiniteChain& chain) {
    const auto classes = recurrent_classes(chain);
    std::vector<Vector> measures;
    measures.reserve(classes.size());
    for (const auto& cls : classes) {
        Vector mu = Vector::Zero(static_cast<Eigen::Index>(chain.size()));
        const auto m = static_cast<Eigen::Index>(cls.size());
        if (m == 1) {
            mu(static_cast<Eigen::Index>(cls[0])) = 1.0;
        } else {
            Matrix pc = Matrix::Zero(m, m);
            std::map<std::size_t, Eigen::Index> local;
            for (Eigen::Index a = 0; a < m; ++a) {
                local[cls[static_cast<std::size_t>(a)]] = a;
            }
            for (Eigen::Index a = 0; a < m; ++a) {
                for (const auto& [j, prob] : chain.rows[cls[static_cast<std::size_t>(a)]]) {
                    pc(a, local.at(j)) = prob.to_double();
                }
            }
            // mu P = mu with sum(mu) = 1: replace one equation by the
            // normalization row.
            Matrix lhs = pc.transpose() - Matrix::Identity(m, m);
            lhs.row(0).setOnes();
            Vector rhs = Vector::Zero(m);
            rhs(0) = 1.0;
            const Vector mu_c = lhs.fullPivLu().solve(rhs);
            for (Eigen::Index a = 0; a < m; ++a) {
                mu(static_cast<Eigen::Index>(cls[static_cast<std::size_t>(a)])) = mu_c(a);
            }
        }
        measures.push_back(std::move(mu));
    }
    return measures;
}

std::map<std::size_t, double> absorption_probabilities(const FiniteChain& chain,
                                                       std::size_t start) {
    if (start >= chain.size()) {
        throw LookupError("absorption_probabilities: start state out of range");
    }
    const auto classes = recurrent_classes(chain);
    std::vector<int> class_of(chain.size(), -1);
    for (std::size_t c = 0; c < classes.size(); ++c) {
        for (std::size_t s : classes[c]) {
            class_of[s] = static_cast<int>(c);
        }
    }
    std::map<std::size_t, double> result;
    if (class_of[start] >= 0) {
        result[static_cast<std::size_t>(class_of[start])] = 1.0;
        return result;
    }

    std::vector<std::size_t> transient;
    std::vector<Eigen::Index> t_index(chain.size(), -1);
    for (std::size_t s = 0; s < chain.size(); ++s) {
        if (class_of[s] < 0) {
            t_index[s] = static_cast<Eigen::Index>(transient.size());
            transient.push_back(s);
        }
    }
    if (transient.size() > kDenseLimit) {
        throw BudgetError("absorption_probabilities: too many transient states for dense solve");
    }
    const auto nt = static_cast<Eigen::Index>(transient.size());
    const auto nc = static_cast<Eigen::Index>(classes.size());
    Matrix q = Matrix::Zero(nt, nt);
    Matrix b = Matrix::Zero(nt, nc);
    for (Eigen::Index a = 0; a < nt; ++a) {
        const std::size_t s = transient[static_cast<std::size_t>(a)];
        for (const auto& [j, prob] : chain.rows[s]) {
            if (class_of[j] >= 0) {
                b(a, class_of[j]) += prob.to_double();
            } else {
                q(a, t_index[j]) = prob.to_double();
            }
        }
    }
    const Matrix h =
        (Matrix::Identity(nt, nt) - q).fullPivLu().solve(b); // fundamental-matrix system
    const Eigen::Index row = t_index[start];
    for (Eigen::Index c = 0; c < nc; ++c) {
        result[static_cast<std::size_t>(c)] = h(row, c);
    }
    return result;
}

} // namespace ergoloop
