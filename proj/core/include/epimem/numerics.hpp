#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <string_view>

namespace epimem {

// Row-major storage matches the on-disk snapshot layout and makes row
// (encoding) access contiguous.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

struct ToleranceConfig {
  // Singular values below rcond * sigma_max are treated as zero.
  double rcond = 1e-10;
  // Diagonal shift used when the key covariance is (near) singular.
  double ridge_epsilon = 1e-8;
  // Relative tolerance for symmetry / PSD / equality assertions.
  double match_tol = 1e-8;

  /// Throws Error(kInvalidArgument) unless all three are positive and rcond < 1.
  void validate() const;
};

/// Throws unless every entry of `m` is finite. `what` names the operand in the
/// error message.
void require_finite(const Matrix& m, std::string_view what);

/// Moore-Penrose pseudoinverse via SVD with a relative singular-value cutoff.
/// Throws "empty matrix" for a zero-sized input.
Matrix pinv(const Matrix& a, const ToleranceConfig& tol = {});

/// Minimum-Frobenius-norm minimiser of ||B - A X||_F, i.e. pinv(A) * B.
Matrix solve_least_squares(const Matrix& a, const Matrix& b, const ToleranceConfig& tol = {});

/// Inverse of a symmetric PSD key covariance. Falls back to (C + ridge I)^-1
/// when the smallest eigenvalue is below ridge_epsilon.
Matrix invert_covariance(const Matrix& c, const ToleranceConfig& tol = {});

/// Same operator as invert_covariance(c, tol) * rhs without forming the
/// inverse explicitly.
Matrix solve_covariance(const Matrix& c, const Matrix& rhs, const ToleranceConfig& tol = {});

/// Covariance solve for the recursive memory update. Unlike solve_covariance
/// the ridge is relative: ridge_epsilon * max(1, ||C||_F, magnitude), so large
/// keys do not turn a tiny absolute shift into a badly conditioned system.
/// Pass the norm of the covariance before a downdate as `magnitude`: C was
/// formed by subtraction and carries rounding error at that scale. When the ridge
/// is active, `steps` rounds of iterative refinement against the unridged C
/// follow. For rhs in the range of C the ridge bias shrinks by
/// eps / (lambda + eps) per round, so the result approaches pinv(C) * rhs
/// without ever inverting a singular matrix.
Matrix solve_covariance_refined(const Matrix& c, const Matrix& rhs, const ToleranceConfig& tol = {},
                                int steps = 2, double magnitude = 0.0);

/// True when solve_covariance_refined falls back to the ridge for `c`, i.e.
/// lambda_min(C) <= ridge_epsilon * max(1, ||C||_F, magnitude).
bool covariance_needs_ridge(const Matrix& c, const ToleranceConfig& tol = {}, double magnitude = 0.0);

/// True when the smallest eigenvalue of symmetric `c` is >= -slack.
bool is_positive_semidefinite(const Matrix& c, double slack);

/// ||a - b||_F / max(||b||_F, floor).
double relative_error(const Matrix& a, const Matrix& b, double floor = 1e-300);

}  // namespace epimem
