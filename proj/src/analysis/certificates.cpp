#include "ergoloop/analysis/certificates.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstdio>

#include "ergoloop/errors.hpp"
#include "ergoloop/numerics/spectral.hpp"

namespace ergoloop {

namespace {

std::string fmt_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

} // namespace

std::string to_string(Verdict v) {
    switch (v) {
    case Verdict::ErgodicCertified: return "ergodic-certified";
    case Verdict::NonErgodicCertified: return "non-ergodic-certified";
    case Verdict::Inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

std::string to_string(CertificateKind k) {
    switch (k) {
    case CertificateKind::Theorem1: return "theorem1";
    case CertificateKind::Lemma1: return "lemma1";
    case CertificateKind::Theorem3: return "theorem3";
    case CertificateKind::FiniteChainKind: return "finite-chain";
    }
    return "unknown";
}

void Certificate::add_evidence(std::string key, std::string value) {
    evidence.emplace_back(std::move(key), std::move(value));
}

std::string Certificate::evidence_value(const std::string& key) const {
    for (const auto& [k, v] : evidence) {
        if (k == key) return v;
    }
    return "";
}

std::string Certificate::to_text() const {
    std::string out;
    out += "kind: " + to_string(kind) + "\n";
    out += "verdict: " + to_string(verdict) + "\n";
    for (const auto& [k, v] : evidence) {
        out += "evidence." + k + ": " + v + "\n";
    }
    for (std::size_t i = 0; i < reasons.size(); ++i) {
        out += "reason." + std::to_string(i) + ": " + reasons[i] + "\n";
    }
    return out;
}

Certificate chain_ergodicity_verdict(const FiniteChain& chain) {
    Certificate cert;
    cert.kind = CertificateKind::FiniteChainKind;
    const auto classes = recurrent_classes(chain);
    cert.add_evidence("states", std::to_string(chain.size()));
    cert.add_evidence("recurrent_classes", std::to_string(classes.size()));
    for (std::size_t c = 0; c < classes.size(); ++c) {
        std::string desc = std::to_string(classes[c].size()) + " state(s)";
        if (classes[c].size() <= 8) {
            desc += ":";
            for (std::size_t s : classes[c]) {
                desc += " " + chain.states[s].label();
            }
        }
        cert.add_evidence("class." + std::to_string(c), desc);
    }
    if (classes.size() >= 2) {
        cert.verdict = Verdict::NonErgodicCertified;
        cert.reasons.push_back("distinct closed classes carry distinct invariant measures whose "
                               "trajectories remain a positive distance apart");
    } else {
        cert.verdict = Verdict::ErgodicCertified;
    }
    return cert;
}

// ---------------------------------------------------------------------------
// Theorem 1: average contractivity of the assembled affine loop
// ---------------------------------------------------------------------------

namespace {

struct GridCheck {
    bool ok = true;
    double min_prob = 1.0;
    double worst_sum_err = 0.0;
};

GridCheck grid_check_law(const AffineView& view, std::pair<double, double> pi_range) {
    GridCheck res;
    // 21 x 21 samples over the state hull and the guaranteed signal range.
    double lo = 0.0;
    double hi = 0.0;
    for (const auto& b : view.offsets) {
        lo = std::min(lo, b.minCoeff());
        hi = std::max(hi, b.maxCoeff());
    }
    const double norm_a = operator_norm(view.a);
    if (norm_a < 1.0) {
        const double reach = std::max(std::abs(lo), std::abs(hi)) / (1.0 - norm_a);
        lo = -reach;
        hi = reach;
    }
    const int dim = static_cast<int>(view.a.rows());
    for (int si = 0; si <= 20; ++si) {
        const double t = static_cast<double>(si) / 20.0;
        Vector x(dim);
        for (int d = 0; d < dim; ++d) {
            const double u = std::fmod(t + 0.618033988749895 * d, 1.0);
            x(d) = lo + u * (hi - lo);
        }
        for (int pj = 0; pj <= 20; ++pj) {
            const double pi =
                pi_range.first + (pi_range.second - pi_range.first) * pj / 20.0;
            const Vector p = view.law(x, pi);
            res.min_prob = std::min(res.min_prob, p.minCoeff());
            res.worst_sum_err = std::max(res.worst_sum_err, std::abs(p.sum() - 1.0));
            if (p.minCoeff() < view.declared_floor - 1e-12 || std::abs(p.sum() - 1.0) > 1e-9) {
                res.ok = false;
            }
        }
    }
    return res;
}

} // namespace

Certificate verify_theorem1(const ClosedLoop& loop, int m_max, double schur_tol) {
    Certificate cert;
    cert.kind = CertificateKind::Theorem1;

    const auto map_range = loop.prob_map ? loop.prob_map->output_range() : std::nullopt;
    const std::pair<double, double> pi_grid =
        map_range ? std::make_pair(std::max(0.0, map_range->first),
                                   std::min(1.0, map_range->second))
                  : std::make_pair(0.0, 1.0);

    // Controller structure and spectrum.
    const auto* ctl = std::get_if<LinearController>(&loop.controller);
    if (ctl == nullptr) {
        cert.reasons.push_back("controller is not a linear state-space system");
    } else if (ctl->state_dim() > 0) {
        const double rc = spectral_radius(ctl->a);
        cert.add_evidence("radius.controller", fmt_g(rc));
        if (!is_schur(ctl->a, schur_tol)) {
            cert.reasons.push_back("controller state matrix is not Schur (spectral radius " +
                                   fmt_g(rc) + ")");
        }
    }

    // Filter structure and spectrum (moving averages embed as state space).
    std::optional<LinearFilter> filt;
    if (const auto* lin = std::get_if<LinearFilter>(&loop.filter)) {
        filt = *lin;
    } else {
        filt = LinearFilter::embed(std::get<MovingAverageFilter>(loop.filter));
    }
    const double rf = spectral_radius(filt->af);
    cert.add_evidence("radius.filter", fmt_g(rf));
    if (!is_schur(filt->af, schur_tol)) {
        cert.reasons.push_back("filter state matrix is not Schur (spectral radius " + fmt_g(rf) +
                               ")");
    }

    // Agents: affine views, Schur state matrices, validated floors.
    std::optional<std::pair<double, double>> pi_bounds;
    if (map_range) {
        pi_bounds = pi_grid;
    }
    std::vector<AffineView> views;
    double delta = 1.0;
    for (std::size_t i = 0; i < loop.agents.size(); ++i) {
        AffineView view = affine_view(loop.agents[i], pi_bounds);
        const double ra = spectral_radius(view.a);
        cert.add_evidence("radius.agent." + std::to_string(i), fmt_g(ra));
        if (!view.a.isZero(0.0) && !is_schur(view.a, schur_tol)) {
            cert.reasons.push_back("agent " + std::to_string(i) + " state matrix is not Schur");
        }
        cert.add_evidence("floor.agent." + std::to_string(i), fmt_g(view.declared_floor));
        if (!(view.declared_floor > 0.0)) {
            cert.reasons.push_back(
                "agent " + std::to_string(i) +
                " has no positive probability floor (pi = 0 admissible, so branch "
                "probabilities are not bounded away from zero)");
        } else {
            const GridCheck check = grid_check_law(view, pi_grid);
            if (!check.ok) {
                cert.reasons.push_back("agent " + std::to_string(i) +
                                       " law violates its declared floor on the sample grid "
                                       "(min probability " +
                                       fmt_g(check.min_prob) + ")");
            }
            delta *= view.declared_floor;
        }
        views.push_back(std::move(view));
    }

    if (!cert.reasons.empty()) {
        cert.verdict = Verdict::Inconclusive;
        return cert;
    }
    cert.add_evidence("delta", fmt_g(delta));

    // Assemble the affine form and search for the contracting power.
    try {
        std::vector<AgentModel> affine_agents;
        affine_agents.reserve(views.size());
        for (auto& view : views) {
            affine_agents.emplace_back(
                AffineIFSAgent(view.a, view.offsets, view.law, view.declared_floor));
        }
        const ClosedLoop affine_loop(std::move(affine_agents), *ctl, std::nullopt, *filt,
                                     loop.reference);
        const Matrix big = augmented_matrix(affine_loop);
        cert.add_evidence("augmented_dim", std::to_string(big.rows()));
        const auto m = contraction_index(big, m_max);
        if (!m) {
            cert.reasons.push_back("no contracting power of the stacked matrix found within m_max=" +
                                   std::to_string(m_max));
            cert.verdict = Verdict::Inconclusive;
            return cert;
        }
        Matrix power = Matrix::Identity(big.rows(), big.cols());
        for (int j = 0; j < *m; ++j) power = power * big;
        cert.add_evidence("m", std::to_string(*m));
        cert.add_evidence("norm_A_pow_m", fmt_g(operator_norm(power)));
    } catch (const Error& err) {
        cert.reasons.push_back(std::string("affine assembly failed: ") + err.what());
        cert.verdict = Verdict::Inconclusive;
        return cert;
    }

    cert.verdict = Verdict::ErgodicCertified;
    return cert;
}

// ---------------------------------------------------------------------------
// Lemma 1: switched-system contraction
// ---------------------------------------------------------------------------

Certificate verify_lemma1(const std::vector<Matrix>& a, const std::vector<Matrix>& p, int m_max) {
    Certificate cert;
    cert.kind = CertificateKind::Lemma1;
    const bool lmi_ok = verify_lmi(a, p);
    cert.add_evidence("modes", std::to_string(a.size()));
    cert.add_evidence("lmi", lmi_ok ? "satisfied" : "violated");
    if (!lmi_ok) {
        cert.verdict = Verdict::Inconclusive;
        cert.reasons.push_back("Lyapunov inequalities A_i' P_j A_i - P_i < 0 not satisfied");
        return cert;
    }
    cert.verdict = Verdict::ErgodicCertified;
    try {
        const auto m = product_contraction_index(a, m_max);
        if (m) {
            cert.add_evidence("m", std::to_string(*m));
        } else {
            cert.add_evidence("m", "not-found-within-budget");
        }
    } catch (const BudgetError&) {
        cert.add_evidence("m", "not-found-within-budget");
    }
    return cert;
}

// ---------------------------------------------------------------------------
// Theorem 3: unit-circle-pole obstruction
// ---------------------------------------------------------------------------

std::vector<Rational> loop_y_alphabet(const ClosedLoop& loop) {
    std::vector<std::vector<Rational>> alphabets;
    alphabets.reserve(loop.agents.size());
    for (std::size_t i = 0; i < loop.agents.size(); ++i) {
        auto alphabet = finite_alphabet(loop.agents[i]);
        if (!alphabet) {
            throw UnsupportedStructureError("agent " + std::to_string(i) +
                                            " has no finite rational value set");
        }
        alphabets.push_back(std::move(*alphabet));
    }
    return attainable_sums(alphabets);
}

Certificate nonergodicity_certificate(const ClosedLoop& loop, int k_max, double tol) {
    Certificate cert;
    cert.kind = CertificateKind::Theorem3;

    const auto* ctl = std::get_if<LinearController>(&loop.controller);
    if (ctl == nullptr) {
        throw UnsupportedStructureError(
            "nonergodicity_certificate: controller must decompose as a linear part "
            "(optionally cascaded with a probability map)");
    }
    const auto* ma = std::get_if<MovingAverageFilter>(&loop.filter);
    if (ma == nullptr) {
        throw UnsupportedStructureError(
            "nonergodicity_certificate: filter must be a finite moving average");
    }
    if (!ma->exact_weights) {
        throw RepresentationError(
            "nonergodicity_certificate: filter coefficients must be exact rationals");
    }

    // (a) A rational unit-circle pole of the linear part, with the remaining
    // spectrum marginally stable and circle modes semisimple.
    bool marginal = true;
    bool semisimple = true;
    std::optional<int> order;
    ComplexScalar pole;
    const int nc = ctl->state_dim();
    if (nc == 0) {
        cert.reasons.push_back("controller has no internal state, hence no unit-circle pole");
    } else {
        Eigen::EigenSolver<Matrix> solver(ctl->a);
        const auto eigs = solver.eigenvalues();
        for (Eigen::Index i = 0; i < eigs.size(); ++i) {
            if (std::abs(eigs(i)) > 1.0 + 1e-9) {
                marginal = false;
            }
        }
        if (!marginal) {
            cert.reasons.push_back("controller spectrum leaves the closed unit disc");
        }
        for (Eigen::Index i = 0; i < eigs.size(); ++i) {
            const ComplexScalar lambda = eigs(i);
            if (std::abs(std::abs(lambda) - 1.0) >= tol) continue;
            // semisimplicity: geometric multiplicity must match algebraic
            int algebraic = 0;
            for (Eigen::Index j = 0; j < eigs.size(); ++j) {
                if (std::abs(eigs(j) - lambda) < 1e-8) ++algebraic;
            }
            Eigen::MatrixXcd shifted = ctl->a.cast<ComplexScalar>();
            shifted.diagonal().array() -= lambda;
            Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(shifted);
            qr.setThreshold(1e-9);
            const int geometric = nc - static_cast<int>(qr.rank());
            if (geometric < algebraic) {
                semisimple = false;
            }
            const auto k = root_of_unity_order(lambda, k_max, std::max(tol, 1e-9));
            if (k && (!order || *k < *order)) {
                order = *k;
                pole = lambda;
            }
        }
        if (!semisimple) {
            cert.reasons.push_back("a unit-circle controller pole is not semisimple");
        }
        if (!order) {
            cert.reasons.push_back("no unit-circle pole of finite rational order within k_max=" +
                                   std::to_string(k_max));
        }
    }
    if (order) {
        cert.add_evidence("pole", fmt_g(pole.real()) + (pole.imag() >= 0 ? "+" : "") +
                                      fmt_g(pole.imag()) + "i");
        cert.add_evidence("K", std::to_string(*order));
    }

    // (b) Finite filter output set over the aggregate alphabet.
    const std::vector<Rational> y_alphabet = loop_y_alphabet(loop);
    const std::vector<Rational> outputs = enumerate_outputs(*ma, y_alphabet);
    cert.add_evidence("y_alphabet_size", std::to_string(y_alphabet.size()));
    cert.add_evidence("filter_output_count", std::to_string(outputs.size()));

    // (c) Discreteness of the error lattice {r - yhat}.
    std::vector<Rational> diffs;
    diffs.reserve(outputs.size());
    for (const auto& out : outputs) {
        diffs.push_back(loop.reference - out);
    }
    const Rational g = group_generator(diffs);
    cert.add_evidence("g", g.str());
    if (g.is_zero()) {
        cert.reasons.push_back("error lattice is trivial (g = 0); the group hypothesis is vacuous");
    }

    cert.verdict = (order && marginal && semisimple && !g.is_zero())
                       ? Verdict::NonErgodicCertified
                       : Verdict::Inconclusive;
    return cert;
}

} // namespace ergoloop
