#pragma once

#include <optional>
#include <vector>

#include "ergoloop/numerics/matrix.hpp"
#include "ergoloop/numerics/rational.hpp"

namespace ergoloop {

// ---------------------------------------------------------------------------
// FIR moving average
// ---------------------------------------------------------------------------

/// Weighted sum of the current input and the last M inputs,
/// yhat(k) = sum_j c_j y(k-j). Coefficients constructed from rationals keep
/// an exact copy for output-set enumeration.
struct MovingAverageFilter {
    explicit MovingAverageFilter(std::vector<Rational> coefficients);

    /// Coefficients given as plain reals; no exact side, so output-set
    /// enumeration is unavailable for such filters.
    static MovingAverageFilter from_reals(std::vector<double> coefficients);

    /// The all-pass filter F = 1 (single coefficient 1).
    static MovingAverageFilter identity();

    std::vector<double> weights;                         // c_0 .. c_M
    std::optional<std::vector<Rational>> exact_weights;

    [[nodiscard]] int taps() const { return static_cast<int>(weights.size()) - 1; } // M

private:
    MovingAverageFilter() = default;
};

/// Filter output for input y; `buffer` holds the last M inputs, newest
/// first, and is shifted in place. Buffer length must equal taps().
double ma_step(const MovingAverageFilter& f, std::vector<double>& buffer, double y);

// ---------------------------------------------------------------------------
// General linear filter with tapped delay line
// ---------------------------------------------------------------------------

/// Strictly causal filter
///   x_f <- A_f x_f + B_f y + C_f ytilde,   yhat = D_f x_f,
/// where ytilde is the unit-shift delay line of the last `taps` inputs.
struct LinearFilter {
    LinearFilter(Matrix af, Matrix bf, Matrix cf, Matrix df, int taps);

    /// State-space form of a moving average: A_f = 0, B_f = c_0,
    /// C_f = [c_1 .. c_M], D_f = 1. Being strictly causal, it emits the
    /// moving average with one step of latency.
    static LinearFilter embed(const MovingAverageFilter& f);

    Matrix af; // n_f x n_f
    Matrix bf; // n_f x 1
    Matrix cf; // n_f x M
    Matrix df; // 1 x n_f
    int taps;  // M

    [[nodiscard]] int state_dim() const { return static_cast<int>(af.rows()); }
};

struct LinearFilterState {
    Vector x_f;
    Vector ytilde; // last `taps` inputs, newest first
};

/// Emits yhat = D_f x_f from the current state, then advances the state and
/// the delay line with the new input.
double linear_filter_step(const LinearFilter& f, LinearFilterState& s, double y);

/// Exact set of values the moving average can emit when inputs range over
/// `alphabet`: { sum_j c_j v_j } over all tuples, deduplicated and sorted.
/// Requires exact coefficients; enumeration guarded by `budget` tuples.
std::vector<Rational> enumerate_outputs(const MovingAverageFilter& f,
                                        const std::vector<Rational>& alphabet,
                                        std::size_t budget = 10'000'000);

} // namespace ergoloop
