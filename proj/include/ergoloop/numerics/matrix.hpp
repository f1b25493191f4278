#pragma once

#include <Eigen/Dense>
#include <complex>

namespace ergoloop {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using ComplexScalar = std::complex<double>;

} // namespace ergoloop
