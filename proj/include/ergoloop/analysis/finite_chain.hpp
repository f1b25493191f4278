#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ergoloop/loop.hpp"
#include "ergoloop/numerics/matrix.hpp"
#include "ergoloop/numerics/rational.hpp"

namespace ergoloop {

/// One joint discrete state: the agent values plus the filter's delay-line
/// contents (newest first).
struct ChainState {
    std::vector<Rational> agents;
    std::vector<Rational> buffer;

    [[nodiscard]] std::string label() const;
    friend bool operator==(const ChainState&, const ChainState&) = default;
};

/// Exact transition matrix over an enumerated finite state space. Rows are
/// stored sparsely (column index, probability), sorted by column.
struct FiniteChain {
    using Row = std::vector<std::pair<std::size_t, Rational>>;

    std::vector<ChainState> states;
    std::vector<Row> rows;

    [[nodiscard]] Rational probability(std::size_t from, std::size_t to) const;
    /// Dense double view; guarded against oversized chains.
    [[nodiscard]] Matrix transition_matrix() const;
    [[nodiscard]] std::optional<std::size_t> find_state(const ChainState& s) const;
    [[nodiscard]] std::size_t size() const { return states.size(); }
};

/// Exact set of attainable sums over one value drawn from each alphabet.
std::vector<Rational> attainable_sums(const std::vector<std::vector<Rational>>& alphabets,
                                      std::size_t budget = 10'000'000);

/// Exact chain of a loop made of binary-flip agents, a memoryless gain
/// controller (plus optional probability map), and a moving-average filter
/// with exact coefficients. Throws UnsupportedStructureError otherwise and
/// BudgetError when the joint state space exceeds `max_states`.
FiniteChain build_finite_chain(const ClosedLoop& loop, std::size_t max_states = 1'000'000);

/// Closed communicating classes (each carrying one ergodic stationary
/// distribution), ordered by smallest member state index.
std::vector<std::vector<std::size_t>> recurrent_classes(const FiniteChain& chain);

/// One stationary distribution per recurrent class, as full-length vectors
/// supported on the class.
std::vector<Vector> stationary_measures(const FiniteChain& chain);

/// Probability of eventual absorption into each recurrent class when started
/// from `start`; keys index into recurrent_classes(chain).
std::map<std::size_t, double> absorption_probabilities(const FiniteChain& chain,
                                                       std::size_t start);

} // namespace ergoloop
