#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

namespace irsotfs {

using cd = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Unitary n-point DFT matrix: F[j,k] = exp(-2*pi*i*j*k/n) / sqrt(n).
CMat dft_matrix(int n);

CMat kron(const CMat& a, const CMat& b);

CMat blkdiag(const std::vector<CMat>& blocks);

/// Wrap an angle into (-pi, pi].
double wrap_angle(double theta);

}  // namespace irsotfs
