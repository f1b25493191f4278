#include "ergoloop/control.hpp"

#include <cmath>

#include "ergoloop/errors.hpp"

namespace ergoloop {

LinearController::LinearController(Matrix a_, Matrix b_, Matrix c_, Matrix d_)
    : a(std::move(a_)), b(std::move(b_)), c(std::move(c_)), d(std::move(d_)) {
    const auto n = a.rows();
    if (a.cols() != n || b.rows() != n || b.cols() != 1 || c.rows() != 1 || c.cols() != n ||
        d.rows() != 1 || d.cols() != 1) {
        throw DimensionError("LinearController: inconsistent block dimensions");
    }
}

double linear_step(const LinearController& c, Vector& x_c, double e) {
    if (x_c.size() != c.state_dim()) {
        throw DimensionError("linear_step: state dimension mismatch");
    }
    const double pi = (c.c * x_c)(0) + c.d(0, 0) * e;
    x_c = c.a * x_c + c.b * e;
    return pi;
}

LinearController pi_controller(double kappa, double alpha) {
    if (kappa == 0.0) {
        throw ModelValidationError("pi_controller: kappa must be non-zero");
    }
    Matrix a(1, 1), b(1, 1), c(1, 1), d(1, 1);
    a << 1.0;
    b << 1.0;
    c << kappa * (1.0 - alpha);
    d << kappa;
    return {a, b, c, d};
}

LinearController lag_controller(double kappa, double alpha, double beta) {
    if (kappa == 0.0) {
        throw ModelValidationError("lag_controller: kappa must be non-zero");
    }
    if (!(std::abs(beta) < 1.0)) {
        throw ModelValidationError("lag_controller: |beta| must be < 1 (beta = 1 is the PI)");
    }
    Matrix a(1, 1), b(1, 1), c(1, 1), d(1, 1);
    a << beta;
    b << 1.0;
    c << kappa * (beta - alpha);
    d << kappa;
    return {a, b, c, d};
}

MemorylessGainController::MemorylessGainController(Rational gain_)
    : gain(std::move(gain_)), gain_value(gain.to_double()) {
    if (!(gain > Rational(0))) {
        throw ModelValidationError("MemorylessGainController: gain must be positive");
    }
}

double gain_step(const MemorylessGainController& c, double e) {
    return c.gain_value * std::abs(e);
}

SwitchedController::SwitchedController(std::vector<LinearController> modes_, SwitchRule rule_)
    : modes(std::move(modes_)), rule(std::move(rule_)) {
    if (modes.empty()) {
        throw ModelValidationError("SwitchedController: need at least one mode");
    }
    const int n = modes.front().state_dim();
    for (const auto& m : modes) {
        if (m.state_dim() != n) {
            throw DimensionError("SwitchedController: modes must share the state dimension");
        }
    }
    if (const auto* rnd = std::get_if<RandomizedSwitchRule>(&rule)) {
        if (!(rnd->floor > 0.0)) {
            throw ModelValidationError("SwitchedController: randomized rule needs floor > 0");
        }
    }
}

int select_switch_mode(const SwitchedController& c, const Vector& x_c, std::int64_t k,
                       double draw) {
    const int ns = static_cast<int>(c.modes.size());
    int mode = 0;
    if (const auto* ext = std::get_if<ExternalSwitchRule>(&c.rule)) {
        if (k < 0 || static_cast<std::size_t>(k) >= ext->sigma.size()) {
            throw InputExhaustedError("switched_step: external switching sequence exhausted at k=" +
                                      std::to_string(k));
        }
        mode = ext->sigma[static_cast<std::size_t>(k)];
    } else if (const auto* dep = std::get_if<StateSwitchRule>(&c.rule)) {
        mode = dep->select(x_c);
    } else {
        const auto& rnd = std::get<RandomizedSwitchRule>(c.rule);
        const Vector probs = rnd.probabilities(x_c);
        if (probs.size() != ns || std::abs(probs.sum() - 1.0) > 1e-12 ||
            probs.minCoeff() < rnd.floor - 1e-12) {
            throw ModelValidationError("switched_step: mode probabilities violate their contract");
        }
        mode = ns - 1;
        double cum = 0.0;
        for (int j = 0; j < ns; ++j) {
            cum += probs(j);
            if (draw < cum) {
                mode = j;
                break;
            }
        }
    }
    if (mode < 0 || mode >= ns) {
        throw ModelValidationError("switched_step: rule selected an invalid mode index");
    }
    return mode;
}

double switched_step(const SwitchedController& c, Vector& x_c, double e, std::int64_t k,
                     double draw, int* mode_out) {
    const int mode = select_switch_mode(c, x_c, k, draw);
    if (mode_out != nullptr) {
        *mode_out = mode;
    }
    return linear_step(c.modes[static_cast<std::size_t>(mode)], x_c, e);
}

ProbabilityMap::ProbabilityMap(Kind kind, Rational lo, Rational hi, Rational alpha, Rational beta,
                               Rational epsilon)
    : kind_(kind), lo_(std::move(lo)), hi_(std::move(hi)), alpha_(std::move(alpha)),
      beta_(std::move(beta)), eps_(std::move(epsilon)) {
    lo_d_ = lo_.to_double();
    hi_d_ = hi_.to_double();
    alpha_d_ = alpha_.to_double();
    beta_d_ = beta_.to_double();
    eps_d_ = eps_.to_double();
}

ProbabilityMap ProbabilityMap::identity() {
    return {Kind::Identity, Rational(0), Rational(0), Rational(0), Rational(0), Rational(0)};
}

ProbabilityMap ProbabilityMap::clamp(Rational lo, Rational hi) {
    if (lo > hi || lo < Rational(0) || hi > Rational(1)) {
        throw ModelValidationError("ProbabilityMap::clamp: need 0 <= lo <= hi <= 1");
    }
    return {Kind::Clamp, std::move(lo), std::move(hi), Rational(0), Rational(0), Rational(0)};
}

ProbabilityMap ProbabilityMap::affine_clamp(Rational alpha, Rational beta, Rational epsilon) {
    if (epsilon <= Rational(0) || epsilon >= Rational(1, 2)) {
        throw ModelValidationError("ProbabilityMap::affine_clamp: need 0 < epsilon < 1/2");
    }
    Rational lo = epsilon;
    Rational hi = Rational(1) - epsilon;
    return {Kind::AffineClamp, std::move(lo), std::move(hi), std::move(alpha), std::move(beta),
            std::move(epsilon)};
}

double ProbabilityMap::apply(double raw) const {
    switch (kind_) {
    case Kind::Identity:
        return raw;
    case Kind::Clamp:
        return std::min(hi_d_, std::max(lo_d_, raw));
    case Kind::AffineClamp: {
        const double v = alpha_d_ * std::abs(raw) + beta_d_;
        return std::min(hi_d_, std::max(lo_d_, v));
    }
    }
    return raw;
}

Rational ProbabilityMap::apply_exact(const Rational& raw) const {
    switch (kind_) {
    case Kind::Identity:
        return raw;
    case Kind::Clamp:
        return std::min(hi_, std::max(lo_, raw));
    case Kind::AffineClamp: {
        const Rational v = alpha_ * raw.abs() + beta_;
        return std::min(hi_, std::max(lo_, v));
    }
    }
    return raw;
}

std::optional<std::pair<double, double>> ProbabilityMap::output_range() const {
    switch (kind_) {
    case Kind::Identity:
        return std::nullopt;
    case Kind::Clamp:
        return std::make_pair(lo_d_, hi_d_);
    case Kind::AffineClamp: {
        // alpha|raw| + beta >= beta for alpha >= 0, so the clamped output
        // never drops below clamp(beta).
        const double lower = alpha_d_ >= 0.0 ? std::min(hi_d_, std::max(lo_d_, beta_d_)) : lo_d_;
        return std::make_pair(lower, hi_d_);
    }
    }
    return std::nullopt;
}

double apply_probability_map(const ProbabilityMap& m, double raw) {
    return m.apply(raw);
}

} // namespace ergoloop
