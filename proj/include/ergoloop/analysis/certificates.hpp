#pragma once

#include <string>
#include <utility>
#include <vector>

#include "ergoloop/analysis/finite_chain.hpp"
#include "ergoloop/loop.hpp"

namespace ergoloop {

enum class Verdict { ErgodicCertified, NonErgodicCertified, Inconclusive };
enum class CertificateKind { Theorem1, Lemma1, Theorem3, FiniteChainKind };

std::string to_string(Verdict v);
std::string to_string(CertificateKind k);

/// Structured verdict of one analysis. Evidence is an ordered key/value list
/// so serialized certificates diff cleanly.
struct Certificate {
    CertificateKind kind;
    Verdict verdict = Verdict::Inconclusive;
    std::vector<std::pair<std::string, std::string>> evidence;
    std::vector<std::string> reasons;

    void add_evidence(std::string key, std::string value);
    [[nodiscard]] std::string evidence_value(const std::string& key) const; // "" if absent
    [[nodiscard]] std::string to_text() const;
};

/// Unique-recurrent-class test: non-ergodic when two or more closed classes
/// exist (their stationary measures cannot couple), ergodic when exactly one.
Certificate chain_ergodicity_verdict(const FiniteChain& chain);

/// Average-contractivity certificate for linear/affine loops: all component
/// state matrices Schur, agent branch probabilities floor-bounded (declared
/// floors spot-checked on a grid), and some power of the stacked transition
/// matrix contracting. Never throws; structural mismatches yield an
/// inconclusive verdict with reasons.
Certificate verify_theorem1(const ClosedLoop& loop, int m_max = 2048, double schur_tol = 1e-9);

/// Switched-system contraction certificate: Lyapunov LMIs verified for the
/// given P matrices, then the shortest uniformly contracting product length
/// searched up to m_max.
Certificate verify_lemma1(const std::vector<Matrix>& a, const std::vector<Matrix>& p, int m_max);

/// Unit-circle-pole obstruction certificate: the linear controller part has
/// a rational unit-circle pole (order <= k_max), the filter output set is
/// finite, and the error lattice r - O_F generates a non-trivial discrete
/// group.
Certificate nonergodicity_certificate(const ClosedLoop& loop, int k_max = 1024,
                                      double tol = 1e-9);

/// Exact aggregate-value alphabet of the loop's agent population.
std::vector<Rational> loop_y_alphabet(const ClosedLoop& loop);

} // namespace ergoloop
