#include "epimem/memory.hpp"

#include "epimem/error.hpp"
#include "epimem/random.hpp"

#include <string>

namespace epimem {

EpisodeEncoding::EpisodeEncoding(Matrix rows) : z(std::move(rows)) {
  if (z.rows() < 1 || z.cols() < 1) {
    throw Error(ErrorCode::kInvalidArgument, "episode must contain at least one encoding");
  }
  require_finite(z, "episode");
}

EpisodeEncoding EpisodeEncoding::from_vector(const Vector& row) {
  return EpisodeEncoding(Matrix(row.transpose()));
}

void NoiseConfig::validate() const {
  if (!(sigma_xi >= 0.0) || !(sigma_w >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "noise standard deviations must be >= 0");
  }
}

MemoryState::MemoryState(Matrix prior) : MemoryState(prior, prior) {}

MemoryState::MemoryState(Matrix memory, Matrix prior)
    : memory_(std::move(memory)), prior_(std::move(prior)) {
  if (memory_.rows() < 1 || memory_.cols() < 1) {
    throw Error(ErrorCode::kInvalidArgument, "memory must be non-empty");
  }
  if (memory_.rows() != prior_.rows() || memory_.cols() != prior_.cols()) {
    throw Error(ErrorCode::kShapeMismatch, "memory and prior must share shape");
  }
  require_finite(memory_, "memory");
  require_finite(prior_, "prior");
}

MemoryState MemoryState::random_prior(Eigen::Index slots, Eigen::Index latent_dim,
                                      std::uint64_t seed) {
  return MemoryState(gaussian_matrix(slots, latent_dim, seed));
}

namespace {

void require_latent_dim(const MemoryState& state, const EpisodeEncoding& episode) {
  if (episode.latent_dim() != state.latent_dim()) {
    throw Error(ErrorCode::kShapeMismatch,
                "episode latent dim " + std::to_string(episode.latent_dim()) +
                    " != memory latent dim " + std::to_string(state.latent_dim()));
  }
}

}  // namespace

WriteResult write_episode(const MemoryState& state, const EpisodeEncoding& episode,
                          const NoiseConfig& noise, const ToleranceConfig& tol) {
  noise.validate();
  require_latent_dim(state, episode);

  Matrix z_noisy = episode.z;
  if (noise.sigma_xi > 0.0) {
    z_noisy += gaussian_matrix(z_noisy.rows(), z_noisy.cols(), noise.seed, noise.sigma_xi);
  }
  Matrix w0 = z_noisy * pinv(state.prior(), tol);
  Matrix posterior = pinv(w0, tol) * z_noisy;
  return {MemoryState(std::move(posterior), state.prior()), AddressWeights(std::move(w0))};
}

EpisodeEncoding read(const MemoryState& state, const EpisodeEncoding& query,
                     const NoiseConfig& noise, const ToleranceConfig& tol) {
  noise.validate();
  require_latent_dim(state, query);

  Matrix w = query.z * pinv(state.memory(), tol);
  if (noise.sigma_w > 0.0) {
    w += gaussian_matrix(w.rows(), w.cols(), noise.seed, noise.sigma_w);
  }
  return EpisodeEncoding(w * state.memory());
}

EpisodeEncoding generate(const MemoryState& state, std::size_t n_samples,
                         const NoiseConfig& noise) {
  if (n_samples < 1) {
    throw Error(ErrorCode::kInvalidArgument, "generate needs n_samples >= 1");
  }
  const Matrix w =
      gaussian_matrix(static_cast<Eigen::Index>(n_samples), state.slots(), noise.seed);
  return EpisodeEncoding(w * state.memory());
}

}  // namespace epimem
