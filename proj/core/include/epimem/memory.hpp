#pragma once

#include "epimem/numerics.hpp"

#include <cstddef>
#include <cstdint>

namespace epimem {

/// N x C latent encodings of one exchangeable episode (one row per item).
struct EpisodeEncoding {
  Matrix z;

  EpisodeEncoding() = default;
  explicit EpisodeEncoding(Matrix rows);

  /// Single-row episode.
  static EpisodeEncoding from_vector(const Vector& row);

  Eigen::Index size() const { return z.rows(); }
  Eigen::Index latent_dim() const { return z.cols(); }
};

/// N x K addressing weights coupling an episode to memory slots.
struct AddressWeights {
  Matrix w;

  AddressWeights() = default;
  explicit AddressWeights(Matrix weights) : w(std::move(weights)) {}

  Eigen::Index size() const { return w.rows(); }
  Eigen::Index slots() const { return w.cols(); }
};

struct NoiseConfig {
  double sigma_xi = 0.0;  // write noise on encodings
  double sigma_w = 0.0;   // read-weight noise
  std::uint64_t seed = 0;

  void validate() const;
};

/// Posterior memory M and the prior M0 it was addressed through.
class MemoryState {
 public:
  /// M starts equal to the prior.
  explicit MemoryState(Matrix prior);
  MemoryState(Matrix memory, Matrix prior);

  /// Prior with i.i.d. N(0, 1) entries.
  static MemoryState random_prior(Eigen::Index slots, Eigen::Index latent_dim, std::uint64_t seed);

  const Matrix& memory() const { return memory_; }
  const Matrix& prior() const { return prior_; }
  Eigen::Index slots() const { return memory_.rows(); }
  Eigen::Index latent_dim() const { return memory_.cols(); }

 private:
  Matrix memory_;
  Matrix prior_;
};

struct WriteResult {
  MemoryState state;
  AddressWeights weights;
};

// One-shot write: W0 = Z_xi pinv(M0), M = pinv(W0) Z_xi. M0 is left intact.
WriteResult write_episode(const MemoryState& state, const EpisodeEncoding& episode,
                          const NoiseConfig& noise = {}, const ToleranceConfig& tol = {});

// Z_read = (Z pinv(M) + eta) M.
EpisodeEncoding read(const MemoryState& state, const EpisodeEncoding& query,
                     const NoiseConfig& noise = {}, const ToleranceConfig& tol = {});

// Z = W M with W ~ N(0, I).
EpisodeEncoding generate(const MemoryState& state, std::size_t n_samples,
                         const NoiseConfig& noise = {});

}  // namespace epimem
