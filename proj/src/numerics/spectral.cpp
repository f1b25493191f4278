#include "ergoloop/numerics/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>

#include "ergoloop/errors.hpp"

namespace ergoloop {

namespace {

void require_square(const Matrix& m, const char* who) {
    if (m.rows() != m.cols() || m.rows() == 0) {
        throw DimensionError(std::string(who) + ": matrix must be square and non-empty");
    }
    if (!m.allFinite()) {
        throw ModelValidationError(std::string(who) + ": matrix has non-finite entries");
    }
}

} // namespace

double spectral_radius(const Matrix& m) {
    require_square(m, "spectral_radius");
    Eigen::EigenSolver<Matrix> solver(m, /*computeEigenvectors=*/false);
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

bool is_schur(const Matrix& m, double tol) {
    if (tol <= 0) {
        throw ModelValidationError("is_schur: tolerance must be positive");
    }
    return spectral_radius(m) < 1.0 - tol;
}

double operator_norm(const Matrix& m) {
    if (m.size() == 0) {
        throw DimensionError("operator_norm: empty matrix");
    }
    if (!m.allFinite()) {
        throw ModelValidationError("operator_norm: matrix has non-finite entries");
    }
    Eigen::JacobiSVD<Matrix> svd(m);
    return svd.singularValues()(0);
}

std::optional<int> contraction_index(const Matrix& m, int m_max) {
    require_square(m, "contraction_index");
    if (m_max < 1) {
        throw ModelValidationError("contraction_index: m_max must be >= 1");
    }
    Matrix power = m;
    for (int k = 1; k <= m_max; ++k) {
        if (operator_norm(power) < 1.0) {
            return k;
        }
        if (k < m_max) {
            power = power * m;
        }
    }
    return std::nullopt;
}

std::optional<int> product_contraction_index(const std::vector<Matrix>& mats, int m_max,
                                             std::size_t budget) {
    if (mats.empty()) {
        throw DimensionError("product_contraction_index: empty matrix set");
    }
    const auto dim = mats.front().rows();
    for (const auto& m : mats) {
        require_square(m, "product_contraction_index");
        if (m.rows() != dim) {
            throw DimensionError("product_contraction_index: matrices differ in dimension");
        }
    }
    const std::size_t ns = mats.size();
    std::size_t count = 1;
    for (int m = 1; m <= m_max; ++m) {
        if (count > budget / ns) {
            throw BudgetError("product_contraction_index: enumeration budget exceeded at m=" +
                              std::to_string(m));
        }
        count *= ns;
        // All length-m products, built by extending index sequences one factor
        // at a time; bail out of the current length on the first norm >= 1.
        std::vector<std::size_t> idx(static_cast<std::size_t>(m), 0);
        bool all_contract = true;
        while (true) {
            Matrix prod = mats[idx[0]];
            for (std::size_t j = 1; j < idx.size(); ++j) {
                prod = mats[idx[j]] * prod;
            }
            if (operator_norm(prod) >= 1.0) {
                all_contract = false;
                break;
            }
            std::size_t pos = 0;
            while (pos < idx.size() && ++idx[pos] == ns) {
                idx[pos] = 0;
                ++pos;
            }
            if (pos == idx.size()) break;
        }
        if (all_contract) {
            return m;
        }
    }
    return std::nullopt;
}

bool verify_lmi(const std::vector<Matrix>& a, const std::vector<Matrix>& p, double margin) {
    if (a.empty() || a.size() != p.size()) {
        throw DimensionError("verify_lmi: need matching non-empty A and P lists");
    }
    const auto dim = a.front().rows();
    for (const auto& m : a) {
        require_square(m, "verify_lmi");
        if (m.rows() != dim) throw DimensionError("verify_lmi: dimension mismatch");
    }
    std::vector<Matrix> sym(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        require_square(p[i], "verify_lmi");
        if (p[i].rows() != dim) throw DimensionError("verify_lmi: dimension mismatch");
        sym[i] = 0.5 * (p[i] + p[i].transpose());
    }

    Eigen::SelfAdjointEigenSolver<Matrix> es;
    for (const auto& pi : sym) {
        es.compute(pi, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() <= margin) {
            return false;
        }
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < a.size(); ++j) {
            const Matrix lhs = a[i].transpose() * sym[j] * a[i] - sym[i];
            es.compute(0.5 * (lhs + lhs.transpose()), Eigen::EigenvaluesOnly);
            if (es.eigenvalues().maxCoeff() >= -margin) {
                return false;
            }
        }
    }
    return true;
}

std::optional<int> root_of_unity_order(ComplexScalar lambda, int k_max, double tol) {
    if (k_max < 1 || tol <= 0) {
        throw ModelValidationError("root_of_unity_order: need k_max >= 1 and tol > 0");
    }
    if (std::abs(std::abs(lambda) - 1.0) >= tol) {
        return std::nullopt;
    }
    ComplexScalar power = lambda;
    for (int k = 1; k <= k_max; ++k) {
        if (std::abs(power - ComplexScalar(1.0, 0.0)) < tol) {
            return k;
        }
        power *= lambda;
    }
    return std::nullopt;
}

} // namespace ergoloop
