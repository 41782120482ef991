#pragma once

#include "epimem/memory.hpp"
#include "epimem/numerics.hpp"

#include <cstddef>
#include <memory>
#include <string_view>

namespace epimem {

enum class UpdateSign : int { kWrite = 1, kForget = -1 };

inline double to_alpha(UpdateSign sign) { return static_cast<int>(sign); }

struct AddressingMode {
  enum class Variant { kPseudoinverseCurrent, kPseudoinverseReference, kGaussianReference };

  Variant variant = Variant::kPseudoinverseReference;
  // Sparsity of Gaussian weights; only read for kGaussianReference.
  double gaussian_alpha = 1e-3;

  static AddressingMode pinv_current() { return {Variant::kPseudoinverseCurrent, 1e-3}; }
  static AddressingMode pinv_reference() { return {Variant::kPseudoinverseReference, 1e-3}; }
  static AddressingMode gaussian(double alpha = 1e-3) { return {Variant::kGaussianReference, alpha}; }

  /// Keys can be recomputed later only when they depend on the fixed reference.
  bool uses_reference() const { return variant != Variant::kPseudoinverseCurrent; }

  void validate() const;
};

/// CLI spelling: "pinv-current", "pinv-ref", "gaussian".
const char* to_string(AddressingMode::Variant variant);
AddressingMode::Variant parse_addressing(std::string_view name);

/// Fixed reference memory together with its cached pseudoinverse.
class ReferenceMemory {
 public:
  ReferenceMemory(Matrix reference, const ToleranceConfig& tol = {});

  const Matrix& matrix() const { return matrix_; }
  const Matrix& pseudo_inverse() const { return pinv_; }
  Eigen::Index slots() const { return matrix_.rows(); }
  Eigen::Index latent_dim() const { return matrix_.cols(); }

 private:
  Matrix matrix_;
  Matrix pinv_;
};

/// Running least-squares memory: M_i, key covariance C_i, and the shared,
/// immutable reference memory.
class SequentialState {
 public:
  SequentialState(Matrix memory, Matrix covariance, std::shared_ptr<const ReferenceMemory> reference,
                  std::size_t update_count = 0);

  /// M = 0, C = 0: the least-squares state over an empty history.
  static SequentialState empty(std::shared_ptr<const ReferenceMemory> reference);

  const Matrix& memory() const { return memory_; }
  const Matrix& covariance() const { return covariance_; }
  const ReferenceMemory& reference() const { return *reference_; }
  const std::shared_ptr<const ReferenceMemory>& reference_ptr() const { return reference_; }
  std::size_t update_count() const { return update_count_; }
  Eigen::Index slots() const { return memory_.rows(); }
  Eigen::Index latent_dim() const { return memory_.cols(); }

 private:
  Matrix memory_;
  Matrix covariance_;
  std::shared_ptr<const ReferenceMemory> reference_;
  std::size_t update_count_;
};

/// M = pinv(W0) Z0, C = W0^T W0.
SequentialState init_sequential(const EpisodeEncoding& z0, const AddressWeights& w0,
                                std::shared_ptr<const ReferenceMemory> reference,
                                const ToleranceConfig& tol = {});

/// Normalised Gaussian-kernel weights of `z` against the rows of `reference`.
/// The kernel width is the nearest-row distance; an exact match (width below
/// 1e-12) yields a one-hot at the lowest-index nearest row.
Vector gaussian_weights(const Vector& z, const Matrix& reference, double gaussian_alpha);

AddressWeights compute_weights(const SequentialState& state, const EpisodeEncoding& z,
                               const AddressingMode& mode, const ToleranceConfig& tol = {});

/// C' = C + a W^T W;  M' = M + a C'^-1 W^T (Z - W M).
/// Throws kNotInHistory when a forget leaves C' indefinite.
SequentialState apply_update(const SequentialState& state, const EpisodeEncoding& z,
                             const AddressWeights& w, UpdateSign sign,
                             const ToleranceConfig& tol = {});

/// Removes Z from the least-squares history, recomputing its keys from Z
/// against the reference memory.
SequentialState forget(const SequentialState& state, const EpisodeEncoding& z,
                       const AddressingMode& mode, const ToleranceConfig& tol = {});

/// As forget(), but the keys are recomputed from `key_source` (e.g. prompt
/// encodings when values were written as prompt+answer encodings).
SequentialState forget_keyed(const SequentialState& state, const EpisodeEncoding& key_source,
                             const EpisodeEncoding& z, const AddressingMode& mode,
                             const ToleranceConfig& tol = {});

}  // namespace epimem
