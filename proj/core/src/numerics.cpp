#include "epimem/numerics.hpp"

#include "epimem/error.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <string>

namespace epimem {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kShapeMismatch: return "shape_mismatch";
    case ErrorCode::kNumerical: return "numerical";
    case ErrorCode::kNotInHistory: return "not_in_history";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kFormat: return "format";
  }
  return "unknown";
}

void ToleranceConfig::validate() const {
  if (!(rcond > 0.0 && rcond < 1.0) || !(ridge_epsilon > 0.0) || !(match_tol > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "tolerances must be positive with rcond < 1");
  }
}

void require_finite(const Matrix& m, std::string_view what) {
  if (!m.allFinite()) {
    throw Error(ErrorCode::kNumerical, std::string(what) + " contains non-finite entries");
  }
}

Matrix pinv(const Matrix& a, const ToleranceConfig& tol) {
  if (a.rows() == 0 || a.cols() == 0) {
    throw Error(ErrorCode::kInvalidArgument, "empty matrix");
  }
  require_finite(a, "pinv input");

  const Eigen::MatrixXd dense = a;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(dense, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sigma = svd.singularValues();
  const double cutoff = sigma.size() > 0 ? tol.rcond * sigma(0) : 0.0;

  Eigen::VectorXd inv = Eigen::VectorXd::Zero(sigma.size());
  for (Eigen::Index i = 0; i < sigma.size(); ++i) {
    if (sigma(i) > cutoff && sigma(i) > 0.0) inv(i) = 1.0 / sigma(i);
  }
  Matrix result = svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
  require_finite(result, "pinv output");
  return result;
}

Matrix solve_least_squares(const Matrix& a, const Matrix& b, const ToleranceConfig& tol) {
  if (a.rows() != b.rows()) {
    throw Error(ErrorCode::kShapeMismatch,
                "least squares: A has " + std::to_string(a.rows()) + " rows, B has " +
                    std::to_string(b.rows()));
  }
  return pinv(a, tol) * b;
}

namespace {

void require_symmetric(const Matrix& c, const ToleranceConfig& tol) {
  if (c.rows() == 0 || c.rows() != c.cols()) {
    throw Error(ErrorCode::kShapeMismatch, "covariance must be square and non-empty");
  }
  require_finite(c, "covariance");
  const double scale = std::max(1.0, c.norm());
  if ((c - c.transpose()).norm() > tol.match_tol * scale) {
    throw Error(ErrorCode::kNumerical, "covariance not symmetric");
  }
}

// Applies the covariance inverse (with ridge fallback) to `rhs`. When the
// ridge is active, `refine` rounds of x += S (rhs - C x) pull the answer back
// towards pinv(C) rhs on the range of C.
Eigen::MatrixXd covariance_solve(const Matrix& c, const Eigen::MatrixXd& rhs,
                                 const ToleranceConfig& tol, int refine = 0) {
  require_symmetric(c, tol);
  const Eigen::Index k = c.rows();
  const Eigen::MatrixXd sym = 0.5 * (c + c.transpose());
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(k, k);

  // LLT of C - eps I succeeds exactly when lambda_min(C) > eps.
  Eigen::LLT<Eigen::MatrixXd> shifted(sym - tol.ridge_epsilon * identity);
  Eigen::MatrixXd out;
  if (shifted.info() == Eigen::Success) {
    Eigen::LLT<Eigen::MatrixXd> llt(sym);
    out = llt.solve(rhs);
  } else {
    const Eigen::MatrixXd ridged = sym + tol.ridge_epsilon * identity;
    Eigen::LLT<Eigen::MatrixXd> llt(ridged);
    if (llt.info() == Eigen::Success) {
      out = llt.solve(rhs);
      for (int step = 0; step < refine; ++step) out += llt.solve(rhs - sym * out);
    } else {
      // Indefinite input; only reachable for callers that skipped the PSD check.
      out = ridged.fullPivLu().solve(rhs);
    }
  }
  if (!out.allFinite()) {
    throw Error(ErrorCode::kNumerical, "covariance inversion produced non-finite values");
  }
  return out;
}

}  // namespace

Matrix invert_covariance(const Matrix& c, const ToleranceConfig& tol) {
  const Eigen::Index k = c.rows();
  Matrix inv = covariance_solve(c, Eigen::MatrixXd::Identity(k, k), tol);
  // Symmetrise the solve output; both triangles are computed independently.
  return 0.5 * (inv + inv.transpose());
}

Matrix solve_covariance(const Matrix& c, const Matrix& rhs, const ToleranceConfig& tol) {
  if (rhs.rows() != c.rows()) {
    throw Error(ErrorCode::kShapeMismatch, "covariance solve: rhs row count mismatch");
  }
  return covariance_solve(c, rhs, tol);
}

ToleranceConfig scaled_ridge(const Matrix& c, const ToleranceConfig& tol, double magnitude) {
  ToleranceConfig scaled = tol;
  scaled.ridge_epsilon = tol.ridge_epsilon * std::max({1.0, c.norm(), magnitude});
  return scaled;
}

bool covariance_needs_ridge(const Matrix& c, const ToleranceConfig& tol, double magnitude) {
  require_symmetric(c, tol);
  const Eigen::Index k = c.rows();
  const double eps = scaled_ridge(c, tol, magnitude).ridge_epsilon;
  Eigen::LLT<Eigen::MatrixXd> shifted(0.5 * (c + c.transpose()) - eps * Eigen::MatrixXd::Identity(k, k));
  return shifted.info() != Eigen::Success;
}

Matrix solve_covariance_refined(const Matrix& c, const Matrix& rhs, const ToleranceConfig& tol,
                                int steps, double magnitude) {
  if (rhs.rows() != c.rows()) {
    throw Error(ErrorCode::kShapeMismatch, "covariance solve: rhs row count mismatch");
  }
  if (steps < 0) throw Error(ErrorCode::kInvalidArgument, "refinement steps must be >= 0");
  return covariance_solve(c, rhs, scaled_ridge(c, tol, magnitude), steps);
}

bool is_positive_semidefinite(const Matrix& c, double slack) {
  const Eigen::Index k = c.rows();
  const Eigen::MatrixXd sym = 0.5 * (c + c.transpose());
  Eigen::LLT<Eigen::MatrixXd> llt(sym + slack * Eigen::MatrixXd::Identity(k, k));
  return llt.info() == Eigen::Success;
}

double relative_error(const Matrix& a, const Matrix& b, double floor) {
  return (a - b).norm() / std::max(b.norm(), floor);
}

}  // namespace epimem
