#include "ergoloop/agents.hpp"

#include <algorithm>
#include <cmath>

#include "ergoloop/errors.hpp"
#include "ergoloop/numerics/spectral.hpp"

namespace ergoloop {

double binary_flip_step(double x, double pi, double draw) {
    if (x != 0.0 && x != 1.0) {
        throw ModelValidationError("binary_flip_step: state must be 0 or 1");
    }
    if (pi < 0.0 || pi > 1.0) {
        throw SignalRangeError("binary_flip_step: pi outside [0,1]", -1, pi);
    }
    return draw < pi ? 1.0 - x : x;
}

SigmoidBernoulliAgent::SigmoidBernoulliAgent(double base, double amplitude, double slope,
                                             double threshold, Orientation orientation)
    : base(base), amplitude(amplitude), slope(slope), threshold(threshold),
      orientation(orientation) {
    if (!(base > 0.0) || !(amplitude > 0.0) || !(base + amplitude < 1.0)) {
        throw ModelValidationError(
            "SigmoidBernoulliAgent: need base > 0, amplitude > 0, base + amplitude < 1");
    }
}

double SigmoidBernoulliAgent::prob_active(double pi) const {
    const double s = 1.0 / (1.0 + std::exp(-slope * (pi - threshold)));
    if (orientation == Orientation::Increasing) {
        return base + amplitude * s;
    }
    return (base + amplitude) - amplitude * s;
}

double SigmoidBernoulliAgent::floor() const {
    // P(active) lies in [base, base+amplitude]; P(inactive) in
    // [1-base-amplitude, 1-base].
    return std::min(base, 1.0 - base - amplitude);
}

double sigmoid_step(const SigmoidBernoulliAgent& agent, double pi, double draw) {
    return draw < agent.prob_active(pi) ? 1.0 : 0.0;
}

namespace {

/// Deterministic sample points used to spot-check user-supplied laws.
std::vector<Vector> law_check_states(const AffineIFSAgent& agent, int points) {
    const int dim = agent.dim();
    double lo = 0.0;
    double hi = 0.0;
    for (const auto& b : agent.offsets) {
        lo = std::min(lo, b.minCoeff());
        hi = std::max(hi, b.maxCoeff());
    }
    const double norm_a = operator_norm(agent.a);
    if (norm_a < 1.0) {
        const double reach = std::max(std::abs(lo), std::abs(hi)) / (1.0 - norm_a);
        lo = -reach;
        hi = reach;
    }
    std::vector<Vector> states;
    states.reserve(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i) {
        const double t = points == 1 ? 0.5 : static_cast<double>(i) / (points - 1);
        Vector x(dim);
        for (int d = 0; d < dim; ++d) {
            // low-discrepancy shift per component so vector states get a spread
            const double u = std::fmod(t + 0.618033988749895 * d, 1.0);
            x(d) = lo + u * (hi - lo);
        }
        states.push_back(std::move(x));
    }
    return states;
}

void check_law_at(const AffineIFSAgent& agent, const Vector& x, double pi) {
    const Vector p = agent.law(x, pi);
    if (p.size() != static_cast<Eigen::Index>(agent.offsets.size())) {
        throw ModelValidationError("AffineIFSAgent: law returned wrong number of probabilities");
    }
    if (std::abs(p.sum() - 1.0) > 1e-12) {
        throw ModelValidationError("AffineIFSAgent: branch probabilities do not sum to 1");
    }
    if (p.minCoeff() < agent.floor - 1e-12) {
        throw ModelValidationError("AffineIFSAgent: branch probability below declared floor");
    }
}

} // namespace

AffineIFSAgent::AffineIFSAgent(Matrix a_, std::vector<Vector> offsets_, ProbabilityLaw law_,
                               double floor_)
    : a(std::move(a_)), offsets(std::move(offsets_)), law(std::move(law_)), floor(floor_) {
    if (a.rows() != a.cols() || a.rows() == 0) {
        throw DimensionError("AffineIFSAgent: state matrix must be square and non-empty");
    }
    if (offsets.empty()) {
        throw ModelValidationError("AffineIFSAgent: need at least one offset");
    }
    for (const auto& b : offsets) {
        if (b.size() != a.rows()) {
            throw DimensionError("AffineIFSAgent: offset dimension mismatch");
        }
    }
    if (!(floor > 0.0)) {
        throw ModelValidationError("AffineIFSAgent: probability floor must be positive");
    }
    if (!is_schur(a, 1e-9) && !a.isZero(0.0)) {
        throw ModelValidationError("AffineIFSAgent: state matrix must be Schur");
    }
    if (!law) {
        throw ModelValidationError("AffineIFSAgent: missing probability law");
    }
    // Spot-check the law on a sample grid; full validation is impossible for
    // opaque maps, but malformed laws should fail at construction.
    for (const auto& x : law_check_states(*this, 21)) {
        for (int j = 0; j <= 20; ++j) {
            check_law_at(*this, x, static_cast<double>(j) / 20.0);
        }
    }
}

std::pair<Vector, int> affine_ifs_step(const AffineIFSAgent& agent, const Vector& x, double pi,
                                       double draw) {
    const Vector p = agent.law(x, pi);
    if (p.size() != static_cast<Eigen::Index>(agent.offsets.size()) ||
        std::abs(p.sum() - 1.0) > 1e-12 || p.minCoeff() < agent.floor - 1e-12) {
        throw ModelValidationError("affine_ifs_step: law violated its contract");
    }
    int branch = static_cast<int>(agent.offsets.size()) - 1;
    double cum = 0.0;
    for (int j = 0; j < p.size(); ++j) {
        cum += p(j);
        if (draw < cum) {
            branch = j;
            break;
        }
    }
    return {agent.a * x + agent.offsets[static_cast<std::size_t>(branch)], branch};
}

int state_dim(const AgentModel& agent) {
    return std::visit(
        [](const auto& a) -> int {
            using T = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<T, AffineIFSAgent>) {
                return a.dim();
            } else {
                return 1;
            }
        },
        agent);
}

int branch_count(const AgentModel& agent) {
    return std::visit(
        [](const auto& a) -> int {
            using T = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<T, AffineIFSAgent>) {
                return static_cast<int>(a.offsets.size());
            } else {
                return 2;
            }
        },
        agent);
}

std::pair<Vector, int> agent_step(const AgentModel& agent, const Vector& x, double pi,
                                  double draw) {
    Vector next = x;
    const int branch = agent_step_inplace(agent, next, pi, draw);
    return {std::move(next), branch};
}

int agent_step_inplace(const AgentModel& agent, Vector& x, double pi, double draw) {
    return std::visit(
        [&](const auto& a) -> int {
            using T = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<T, BinaryFlipAgent>) {
                x(0) = binary_flip_step(x(0), pi, draw);
                return static_cast<int>(x(0));
            } else if constexpr (std::is_same_v<T, SigmoidBernoulliAgent>) {
                x(0) = sigmoid_step(a, pi, draw);
                return static_cast<int>(x(0));
            } else {
                auto [next, branch] = affine_ifs_step(a, x, pi, draw);
                x = std::move(next);
                return branch;
            }
        },
        agent);
}

std::optional<std::vector<Rational>> finite_alphabet(const AgentModel& agent) {
    return std::visit(
        [](const auto& a) -> std::optional<std::vector<Rational>> {
            using T = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<T, AffineIFSAgent>) {
                if (a.dim() != 1 || !a.a.isZero(0.0)) {
                    return std::nullopt;
                }
                std::vector<Rational> values;
                values.reserve(a.offsets.size());
                for (const auto& b : a.offsets) {
                    values.push_back(Rational::from_double(b(0)));
                }
                std::sort(values.begin(), values.end());
                values.erase(std::unique(values.begin(), values.end()), values.end());
                return values;
            } else {
                (void)a;
                return std::vector<Rational>{Rational(0), Rational(1)};
            }
        },
        agent);
}

AffineView affine_view(const AgentModel& agent,
                       std::optional<std::pair<double, double>> pi_range) {
    Matrix zero = Matrix::Zero(1, 1);
    Vector b0 = Vector::Zero(1);
    Vector b1 = Vector::Ones(1);
    return std::visit(
        [&](const auto& a) -> AffineView {
            using T = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<T, BinaryFlipAgent>) {
                // Branches (go-to-0, go-to-1); P(go-to-1) = (1-x) pi + x (1-pi),
                // the affine Lipschitz extension of the flip rule.
                ProbabilityLaw law = [](const Vector& x, double pi) {
                    const double p1 = (1.0 - x(0)) * pi + x(0) * (1.0 - pi);
                    Vector p(2);
                    p << 1.0 - p1, p1;
                    return p;
                };
                double floor = 0.0;
                if (pi_range) {
                    floor = std::max(0.0, std::min(pi_range->first, 1.0 - pi_range->second));
                }
                return {zero, {b0, b1}, std::move(law), floor};
            } else if constexpr (std::is_same_v<T, SigmoidBernoulliAgent>) {
                ProbabilityLaw law = [a](const Vector&, double pi) {
                    const double p1 = a.prob_active(pi);
                    Vector p(2);
                    p << 1.0 - p1, p1;
                    return p;
                };
                return {zero, {b0, b1}, std::move(law), a.floor()};
            } else {
                return {a.a, a.offsets, a.law, a.floor};
            }
        },
        agent);
}

double aggregate(const std::vector<Vector>& states) {
    if (states.empty()) {
        throw DimensionError("aggregate: empty state list");
    }
    double sum = 0.0;
    for (const auto& x : states) {
        sum += x.sum();
    }
    return sum;
}

} // namespace ergoloop
