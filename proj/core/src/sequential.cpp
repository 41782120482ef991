#include "epimem/sequential.hpp"

#include "epimem/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace epimem {

void AddressingMode::validate() const {
  if (variant == Variant::kGaussianReference && !(gaussian_alpha > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "gaussian_alpha must be > 0");
  }
}

const char* to_string(AddressingMode::Variant variant) {
  switch (variant) {
    case AddressingMode::Variant::kPseudoinverseCurrent: return "pinv-current";
    case AddressingMode::Variant::kPseudoinverseReference: return "pinv-ref";
    case AddressingMode::Variant::kGaussianReference: return "gaussian";
  }
  return "?";
}

AddressingMode::Variant parse_addressing(std::string_view name) {
  if (name == "pinv-current") return AddressingMode::Variant::kPseudoinverseCurrent;
  if (name == "pinv-ref") return AddressingMode::Variant::kPseudoinverseReference;
  if (name == "gaussian") return AddressingMode::Variant::kGaussianReference;
  throw Error(ErrorCode::kInvalidArgument, "unknown addressing mode '" + std::string(name) + "'");
}

ReferenceMemory::ReferenceMemory(Matrix reference, const ToleranceConfig& tol)
    : matrix_(std::move(reference)), pinv_(pinv(matrix_, tol)) {}

SequentialState::SequentialState(Matrix memory, Matrix covariance,
                                 std::shared_ptr<const ReferenceMemory> reference,
                                 std::size_t update_count)
    : memory_(std::move(memory)),
      covariance_(std::move(covariance)),
      reference_(std::move(reference)),
      update_count_(update_count) {
  if (!reference_) throw Error(ErrorCode::kInvalidArgument, "reference memory is required");
  if (memory_.rows() != reference_->slots() || memory_.cols() != reference_->latent_dim()) {
    throw Error(ErrorCode::kShapeMismatch, "memory and reference memory must share shape");
  }
  if (covariance_.rows() != memory_.rows() || covariance_.cols() != memory_.rows()) {
    throw Error(ErrorCode::kShapeMismatch, "covariance must be K x K");
  }
  require_finite(memory_, "memory");
  require_finite(covariance_, "covariance");
}

SequentialState SequentialState::empty(std::shared_ptr<const ReferenceMemory> reference) {
  if (!reference) throw Error(ErrorCode::kInvalidArgument, "reference memory is required");
  const Eigen::Index k = reference->slots();
  const Eigen::Index c = reference->latent_dim();
  return SequentialState(Matrix::Zero(k, c), Matrix::Zero(k, k), std::move(reference));
}

namespace {

// Lower triangle of `c` plus alpha * W^T W, mirrored so the result is exactly symmetric.
Matrix symmetric_rank_update(const Matrix& c, const Matrix& w, double alpha) {
  Eigen::MatrixXd out = c;
  out.selfadjointView<Eigen::Lower>().rankUpdate(w.transpose(), alpha);
  out.triangularView<Eigen::StrictlyUpper>() = out.transpose();
  return out;
}

}  // namespace

SequentialState init_sequential(const EpisodeEncoding& z0, const AddressWeights& w0,
                                std::shared_ptr<const ReferenceMemory> reference,
                                const ToleranceConfig& tol) {
  if (!reference) throw Error(ErrorCode::kInvalidArgument, "reference memory is required");
  if (w0.size() != z0.size()) {
    throw Error(ErrorCode::kShapeMismatch, "W0 and Z0 must have the same number of rows");
  }
  if (w0.slots() != reference->slots() || z0.latent_dim() != reference->latent_dim()) {
    throw Error(ErrorCode::kShapeMismatch, "W0 columns / Z0 width must match the reference memory");
  }
  Matrix memory = solve_least_squares(w0.w, z0.z, tol);
  Matrix covariance = symmetric_rank_update(Matrix::Zero(w0.slots(), w0.slots()), w0.w, 1.0);
  return SequentialState(std::move(memory), std::move(covariance), std::move(reference));
}

Vector gaussian_weights(const Vector& z, const Matrix& reference, double gaussian_alpha) {
  if (reference.rows() < 1 || reference.cols() != z.size()) {
    throw Error(ErrorCode::kShapeMismatch, "gaussian weights: z width must match reference rows");
  }
  const Eigen::Index k = reference.rows();
  Vector dist2(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    dist2(i) = (reference.row(i).transpose() - z).squaredNorm();
  }
  Eigen::Index nearest = 0;
  const double min_dist2 = dist2.minCoeff(&nearest);  // first index on ties

  Vector w = Vector::Zero(k);
  if (std::sqrt(min_dist2) < 1e-12) {
    w(nearest) = 1.0;
    return w;
  }
  // Shifting by the minimum cancels in the normalisation and keeps the
  // nearest term at exp(0) even for tiny alpha.
  const double scale = 2.0 * gaussian_alpha * min_dist2;
  for (Eigen::Index i = 0; i < k; ++i) w(i) = std::exp(-(dist2(i) - min_dist2) / scale);
  return w / w.sum();
}

AddressWeights compute_weights(const SequentialState& state, const EpisodeEncoding& z,
                               const AddressingMode& mode, const ToleranceConfig& tol) {
  mode.validate();
  if (z.latent_dim() != state.latent_dim()) {
    throw Error(ErrorCode::kShapeMismatch, "encoding width does not match memory");
  }
  using V = AddressingMode::Variant;
  switch (mode.variant) {
    case V::kPseudoinverseCurrent:
      return AddressWeights(z.z * pinv(state.memory(), tol));
    case V::kPseudoinverseReference:
      return AddressWeights(z.z * state.reference().pseudo_inverse());
    case V::kGaussianReference: {
      Matrix w(z.size(), state.slots());
      for (Eigen::Index i = 0; i < z.size(); ++i) {
        w.row(i) = gaussian_weights(z.z.row(i).transpose(), state.reference().matrix(),
                                    mode.gaussian_alpha)
                       .transpose();
      }
      return AddressWeights(std::move(w));
    }
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown addressing variant");
}

SequentialState apply_update(const SequentialState& state, const EpisodeEncoding& z,
                             const AddressWeights& w, UpdateSign sign,
                             const ToleranceConfig& tol) {
  if (w.size() != z.size()) {
    throw Error(ErrorCode::kShapeMismatch, "W and Z must have the same number of rows");
  }
  if (w.slots() != state.slots() || z.latent_dim() != state.latent_dim()) {
    throw Error(ErrorCode::kShapeMismatch, "update shapes do not match the memory");
  }
  require_finite(w.w, "weights");

  const double alpha = to_alpha(sign);
  Matrix covariance = symmetric_rank_update(state.covariance(), w.w, alpha);

  if (sign == UpdateSign::kForget) {
    const double slack = tol.match_tol * std::max(1.0, state.covariance().norm());
    if (!is_positive_semidefinite(covariance, slack)) {
      throw Error(ErrorCode::kNotInHistory, "forget target not in memory history");
    }
  }

  const Matrix residual = z.z - w.w * state.memory();
  Matrix memory;
  const double magnitude = state.covariance().norm();
  if (sign == UpdateSign::kForget && covariance_needs_ridge(covariance, tol, magnitude)) {
    // The removed keys may leave the span of the remaining ones. The gain form
    // alone cannot shrink M along the lost direction, and there it only
    // amplifies rounding in the residual. Solving C' M' = C' Y maps the gain
    // update Y onto the span of the remaining keys, which is exactly the least
    // squares solution over the remaining episodes.
    const Matrix gain = solve_covariance_refined(covariance, w.w.transpose(), tol, 2, magnitude);
    const Matrix updated = state.memory() + alpha * gain * residual;
    memory = solve_covariance_refined(covariance, covariance * updated, tol, 2, magnitude);
  } else {
    // (C'^-1 W^T) first: K x N, so the K x C product is an outer-product
    // update. Refinement keeps the recursion on the least-squares solution
    // when C' is rank deficient (fewer independent keys than slots).
    const Matrix gain = solve_covariance_refined(covariance, w.w.transpose(), tol, 2, magnitude);
    memory = state.memory() + alpha * gain * residual;
  }

  return SequentialState(std::move(memory), std::move(covariance), state.reference_ptr(),
                         state.update_count() + 1);
}

SequentialState forget(const SequentialState& state, const EpisodeEncoding& z,
                       const AddressingMode& mode, const ToleranceConfig& tol) {
  return forget_keyed(state, z, z, mode, tol);
}

SequentialState forget_keyed(const SequentialState& state, const EpisodeEncoding& key_source,
                             const EpisodeEncoding& z, const AddressingMode& mode,
                             const ToleranceConfig& tol) {
  if (!mode.uses_reference()) {
    throw Error(ErrorCode::kInvalidArgument,
                "forgetting requires reference-memory addressing (keys not recomputable)");
  }
  const AddressWeights w = compute_weights(state, key_source, mode, tol);
  return apply_update(state, z, w, UpdateSign::kForget, tol);
}

}  // namespace epimem
