#include "ergoloop/filters.hpp"

#include <algorithm>
#include <set>

#include "ergoloop/errors.hpp"

namespace ergoloop {

MovingAverageFilter::MovingAverageFilter(std::vector<Rational> coefficients) {
    if (coefficients.empty()) {
        throw ModelValidationError("MovingAverageFilter: need at least one coefficient");
    }
    weights.reserve(coefficients.size());
    for (const auto& c : coefficients) {
        weights.push_back(c.to_double());
    }
    exact_weights = std::move(coefficients);
}

MovingAverageFilter MovingAverageFilter::from_reals(std::vector<double> coefficients) {
    if (coefficients.empty()) {
        throw ModelValidationError("MovingAverageFilter: need at least one coefficient");
    }
    MovingAverageFilter f;
    f.weights = std::move(coefficients);
    return f;
}

MovingAverageFilter MovingAverageFilter::identity() {
    return MovingAverageFilter(std::vector<Rational>{Rational(1)});
}

double ma_step(const MovingAverageFilter& f, std::vector<double>& buffer, double y) {
    const auto m = static_cast<std::size_t>(f.taps());
    if (buffer.size() != m) {
        throw DimensionError("ma_step: buffer length must equal the filter's tap count");
    }
    double yhat = f.weights[0] * y;
    for (std::size_t j = 0; j < m; ++j) {
        yhat += f.weights[j + 1] * buffer[j];
    }
    if (m > 0) {
        for (std::size_t j = m - 1; j > 0; --j) {
            buffer[j] = buffer[j - 1];
        }
        buffer[0] = y;
    }
    return yhat;
}

LinearFilter::LinearFilter(Matrix af_, Matrix bf_, Matrix cf_, Matrix df_, int taps_)
    : af(std::move(af_)), bf(std::move(bf_)), cf(std::move(cf_)), df(std::move(df_)),
      taps(taps_) {
    const auto n = af.rows();
    if (af.cols() != n || n == 0 || bf.rows() != n || bf.cols() != 1 || cf.rows() != n ||
        cf.cols() != taps || df.rows() != 1 || df.cols() != n || taps < 0) {
        throw DimensionError("LinearFilter: inconsistent block dimensions");
    }
}

LinearFilter LinearFilter::embed(const MovingAverageFilter& f) {
    const int m = f.taps();
    Matrix af = Matrix::Zero(1, 1);
    Matrix bf(1, 1);
    bf << f.weights[0];
    Matrix cf(1, m);
    for (int j = 0; j < m; ++j) {
        cf(0, j) = f.weights[static_cast<std::size_t>(j) + 1];
    }
    Matrix df(1, 1);
    df << 1.0;
    return {af, bf, cf, df, m};
}

double linear_filter_step(const LinearFilter& f, LinearFilterState& s, double y) {
    if (s.x_f.size() != f.state_dim() || s.ytilde.size() != f.taps) {
        throw DimensionError("linear_filter_step: state dimension mismatch");
    }
    const double yhat = (f.df * s.x_f)(0);
    Vector next = f.af * s.x_f + f.bf * y;
    if (f.taps > 0) {
        next += f.cf * s.ytilde;
        // delay line: ytilde <- J y + L ytilde (unit shift)
        for (int j = f.taps - 1; j > 0; --j) {
            s.ytilde(j) = s.ytilde(j - 1);
        }
        s.ytilde(0) = y;
    }
    s.x_f = std::move(next);
    return yhat;
}

std::vector<Rational> enumerate_outputs(const MovingAverageFilter& f,
                                        const std::vector<Rational>& alphabet,
                                        std::size_t budget) {
    if (!f.exact_weights) {
        throw RepresentationError(
            "enumerate_outputs: filter was built from reals, exact coefficients unavailable");
    }
    if (alphabet.empty()) {
        throw DimensionError("enumerate_outputs: empty alphabet");
    }
    const auto& coeffs = *f.exact_weights;
    std::size_t tuples = 1;
    for (std::size_t i = 0; i < coeffs.size(); ++i) {
        if (tuples > budget / alphabet.size()) {
            throw BudgetError("enumerate_outputs: |alphabet|^(M+1) exceeds enumeration budget");
        }
        tuples *= alphabet.size();
    }

    // Accumulate partial sums coefficient by coefficient, deduplicating as we
    // go; keeps the live set no larger than the final output set.
    std::set<Rational> sums{Rational(0)};
    for (const auto& c : coeffs) {
        std::set<Rational> next;
        for (const auto& s : sums) {
            for (const auto& v : alphabet) {
                next.insert(s + c * v);
            }
        }
        sums = std::move(next);
    }
    return {sums.begin(), sums.end()};
}

} // namespace ergoloop
