#pragma once

#include <optional>
#include <vector>

#include "ergoloop/numerics/matrix.hpp"

namespace ergoloop {

/// Largest eigenvalue magnitude of a square matrix.
double spectral_radius(const Matrix& m);

/// True iff spectral_radius(m) < 1 - tol.
bool is_schur(const Matrix& m, double tol = 1e-9);

/// Induced 2-norm (largest singular value).
double operator_norm(const Matrix& m);

/// Smallest k <= m_max with ||m^k|| < 1, if any.
std::optional<int> contraction_index(const Matrix& m, int m_max);

/// Smallest m <= m_max such that every length-m product drawn from `mats`
/// has operator norm < 1 (exhaustive enumeration over index sequences).
/// Throws BudgetError when the enumeration would exceed `budget` products.
std::optional<int> product_contraction_index(const std::vector<Matrix>& mats, int m_max,
                                             std::size_t budget = 10'000'000);

/// Checks the switched-system Lyapunov inequalities: every P_i positive
/// definite and every A_i' P_j A_i - P_i negative definite, decided by
/// eigenvalue sign with the given margin. P matrices are symmetrized first.
bool verify_lmi(const std::vector<Matrix>& a, const std::vector<Matrix>& p, double margin = 1e-10);

/// Smallest K <= k_max with |lambda^K - 1| < tol, provided |lambda| is within
/// tol of 1; absent otherwise.
std::optional<int> root_of_unity_order(ComplexScalar lambda, int k_max, double tol);

} // namespace ergoloop
