#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "ergoloop/numerics/matrix.hpp"
#include "ergoloop/numerics/rational.hpp"

namespace ergoloop {

// ---------------------------------------------------------------------------
// Linear state-space controller
// ---------------------------------------------------------------------------

/// SISO controller x_c <- A x_c + B e, pi = C x_c + D e. Holds parameters
/// only; the state vector is owned by whoever runs the loop.
struct LinearController {
    LinearController(Matrix a, Matrix b, Matrix c, Matrix d);

    Matrix a; // n_c x n_c
    Matrix b; // n_c x 1
    Matrix c; // 1 x n_c
    Matrix d; // 1 x 1

    [[nodiscard]] int state_dim() const { return static_cast<int>(a.rows()); }
};

/// Emits pi from the current state, then updates the state in place
/// (output strictly precedes the state update).
double linear_step(const LinearController& c, Vector& x_c, double e);

/// Canonical PI realization a=[1], b=[1], c=[kappa(1-alpha)], d=[kappa];
/// transfer function kappa (1 - alpha z^-1) / (1 - z^-1).
LinearController pi_controller(double kappa, double alpha);

/// Lag realization a=[beta], b=[1], c=[kappa(beta-alpha)], d=[kappa];
/// requires |beta| < 1 (beta = 1 would be the PI).
LinearController lag_controller(double kappa, double alpha, double beta);

// ---------------------------------------------------------------------------
// Memoryless gain
// ---------------------------------------------------------------------------

/// pi = g |e|, no internal state. The gain is kept exact so finite-chain
/// analysis can work in rational arithmetic.
struct MemorylessGainController {
    explicit MemorylessGainController(Rational gain);

    Rational gain;
    double gain_value;
};

double gain_step(const MemorylessGainController& c, double e);

// ---------------------------------------------------------------------------
// Switched controller
// ---------------------------------------------------------------------------

/// Mode is dictated by an externally supplied index sequence.
struct ExternalSwitchRule {
    std::vector<int> sigma;
};

/// Mode is a deterministic function of the controller state.
struct StateSwitchRule {
    std::function<int(const Vector& x_c)> select;
};

/// Mode drawn from state-dependent probabilities, each bounded below by
/// `floor` so no mode ever becomes unreachable.
struct RandomizedSwitchRule {
    std::function<Vector(const Vector& x_c)> probabilities;
    double floor;
};

using SwitchRule = std::variant<ExternalSwitchRule, StateSwitchRule, RandomizedSwitchRule>;

struct SwitchedController {
    SwitchedController(std::vector<LinearController> modes, SwitchRule rule);

    std::vector<LinearController> modes; // all share n_c
    SwitchRule rule;

    [[nodiscard]] int state_dim() const { return modes.front().state_dim(); }
};

/// Mode selection alone (consumes `draw` only for randomized rules, `k` only
/// for external sequences).
int select_switch_mode(const SwitchedController& c, const Vector& x_c, std::int64_t k,
                       double draw);

/// Selects a mode per the rule, then applies that mode's linear step.
double switched_step(const SwitchedController& c, Vector& x_c, double e, std::int64_t k,
                     double draw, int* mode_out = nullptr);

// ---------------------------------------------------------------------------
// Probability map (the C_p stage)
// ---------------------------------------------------------------------------

/// Continuous map applied to the raw controller output before broadcast.
/// Clamp kinds guarantee output within [0,1]. Parameters are exact rationals
/// so chain analysis stays exact.
class ProbabilityMap {
public:
    enum class Kind { Identity, Clamp, AffineClamp };

    static ProbabilityMap identity();
    static ProbabilityMap clamp(Rational lo, Rational hi);
    /// alpha |raw| + beta, clamped into [epsilon, 1 - epsilon].
    static ProbabilityMap affine_clamp(Rational alpha, Rational beta, Rational epsilon);

    [[nodiscard]] Kind kind() const { return kind_; }
    [[nodiscard]] double apply(double raw) const;
    [[nodiscard]] Rational apply_exact(const Rational& raw) const;

    /// Guaranteed output interval for arbitrary real input; nullopt for the
    /// identity map.
    [[nodiscard]] std::optional<std::pair<double, double>> output_range() const;

private:
    ProbabilityMap(Kind kind, Rational lo, Rational hi, Rational alpha, Rational beta,
                   Rational epsilon);

    Kind kind_;
    Rational lo_, hi_;             // clamp bounds
    Rational alpha_, beta_, eps_;  // affine-clamp parameters
    double lo_d_ = 0.0, hi_d_ = 0.0, alpha_d_ = 0.0, beta_d_ = 0.0, eps_d_ = 0.0;
};

double apply_probability_map(const ProbabilityMap& m, double raw);

} // namespace ergoloop
