#include "epimem/hierarchy.hpp"

#include "epimem/error.hpp"
#include "epimem/random.hpp"

#include <algorithm>
#include <string>

namespace epimem {

void HierarchyConfig::validate() const {
  if (episode_window < 1) throw Error(ErrorCode::kInvalidArgument, "episode_window must be >= 1");
  if (leaf_slots < 1) throw Error(ErrorCode::kInvalidArgument, "leaf_slots must be >= 1");
  addressing.validate();
}

MemoryForest::MemoryForest(std::vector<MemoryState> leaves, HierarchyConfig config,
                           std::vector<ScopeStore> leaf_scopes)
    : leaves_(std::move(leaves)), config_(config), leaf_scopes_(std::move(leaf_scopes)) {
  if (leaves_.empty()) throw Error(ErrorCode::kInvalidArgument, "forest needs at least one leaf");
  const auto c = leaves_.front().latent_dim();
  for (const auto& leaf : leaves_) {
    if (leaf.latent_dim() != c) throw Error(ErrorCode::kShapeMismatch, "leaves must share C");
  }
  if (!leaf_scopes_.empty() && leaf_scopes_.size() != leaves_.size()) {
    throw Error(ErrorCode::kShapeMismatch, "one scope store per leaf expected");
  }
}

namespace {

constexpr std::uint64_t kLeafStream = 0x1eaf;
constexpr std::uint64_t kSuccessorStream = 0x5cce55;

std::uint64_t successor_seed(std::uint64_t seed, std::size_t depth, std::size_t group) {
  return derive_seed(derive_seed(derive_seed(seed, kSuccessorStream), depth), group);
}

// Writes `episode` into a fresh successor memory and reads the query back.
Vector successor_read(const EpisodeEncoding& episode, const Vector& query,
                      const HierarchyConfig& config, std::uint64_t seed,
                      const ToleranceConfig& tol) {
  const auto slots = static_cast<Eigen::Index>(config.leaf_slots);
  const EpisodeEncoding q = EpisodeEncoding::from_vector(query);
  if (!config.addressing.uses_reference()) {
    const auto written =
        write_episode(MemoryState::random_prior(slots, query.size(), seed), episode, {}, tol);
    return read(written.state, q, {}, tol).z.row(0).transpose();
  }
  auto reference =
      std::make_shared<const ReferenceMemory>(gaussian_matrix(slots, query.size(), seed), tol);
  const auto scratch = SequentialState::empty(reference);
  const auto w = compute_weights(scratch, episode, config.addressing, tol);
  const auto state = init_sequential(episode, w, reference, tol);
  const auto wq = compute_weights(state, q, config.addressing, tol);
  return (wq.w * state.memory()).row(0).transpose();
}

// Readouts of a query orthogonal to a memory's content are rounding noise
// that still lies in the content's span; a scale-invariant successor write
// would amplify it back to full size. Such readouts stay in the episode but
// as exact zeros.
Vector snap_to_zero(Vector readout, double query_norm, const ToleranceConfig& tol) {
  if (readout.norm() <= tol.rcond * query_norm) readout.setZero();
  return readout;
}

}  // namespace

std::uint64_t leaf_prior_seed(std::uint64_t seed, std::size_t leaf) {
  return derive_seed(derive_seed(seed, kLeafStream), leaf);
}

MemoryForest build_forest(std::span<const EpisodeEncoding> chunks, const HierarchyConfig& config,
                          const ToleranceConfig& tol) {
  config.validate();
  if (chunks.empty()) throw Error(ErrorCode::kInvalidArgument, "no chunks to store");
  std::vector<MemoryState> leaves;
  std::vector<ScopeStore> scopes;
  leaves.reserve(chunks.size());
  const auto slots = static_cast<Eigen::Index>(config.leaf_slots);
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    const auto& chunk = chunks[i];
    if (static_cast<std::size_t>(chunk.size()) > config.episode_window) {
      throw Error(ErrorCode::kInvalidArgument, "chunk exceeds episode window");
    }
    if (i > 0 && chunk.latent_dim() != chunks[0].latent_dim()) {
      throw Error(ErrorCode::kShapeMismatch, "chunks must share latent dimension");
    }
    const auto prior = MemoryState::random_prior(slots, chunk.latent_dim(), leaf_prior_seed(config.seed, i));
    leaves.push_back(write_episode(prior, chunk, {}, tol).state);

    if (config.leaf_scope_threshold) {
      ScopeStore store(static_cast<std::size_t>(chunk.latent_dim()));
      std::vector<Vector> rows;
      std::vector<std::string> ids;
      for (Eigen::Index r = 0; r < chunk.size(); ++r) {
        if (chunk.z.row(r).norm() == 0.0) continue;
        rows.emplace_back(chunk.z.row(r).transpose());
        ids.push_back(std::to_string(i) + "/" + std::to_string(r));
      }
      store.add(rows, ids);
      scopes.push_back(std::move(store));
    }
  }
  return MemoryForest(std::move(leaves), config, std::move(scopes));
}

RecursiveReadout recursive_read(const MemoryForest& forest, const Vector& query,
                                const ToleranceConfig& tol) {
  const auto& config = forest.config();
  if (query.size() != forest.latent_dim()) {
    throw Error(ErrorCode::kShapeMismatch, "query width does not match the forest");
  }
  const EpisodeEncoding q = EpisodeEncoding::from_vector(query);
  const bool filter = config.leaf_scope_threshold.has_value() && query.norm() > 0.0;

  std::vector<Vector> readouts;
  for (std::size_t i = 0; i < forest.size(); ++i) {
    if (filter) {
      const auto& scope = forest.leaf_scopes()[i];
      if (scope.empty() || !detect(scope, query, *config.leaf_scope_threshold).in_scope) continue;
    }
    readouts.push_back(
        snap_to_zero(read(forest.leaves()[i], q, {}, tol).z.row(0).transpose(), query.norm(), tol));
  }
  if (readouts.empty()) return {Vector::Zero(query.size()), 0};

  // A window of one could never shrink the readout count.
  const std::size_t group = std::max<std::size_t>(config.episode_window, 2);
  std::size_t depth = 0;
  while (readouts.size() > 1) {
    ++depth;
    std::vector<Vector> next;
    for (std::size_t start = 0, g = 0; start < readouts.size(); start += group, ++g) {
      const std::size_t end = std::min(readouts.size(), start + group);
      Matrix rows(static_cast<Eigen::Index>(end - start), query.size());
      for (std::size_t r = start; r < end; ++r) {
        rows.row(static_cast<Eigen::Index>(r - start)) = readouts[r].transpose();
      }
      next.push_back(snap_to_zero(successor_read(EpisodeEncoding(std::move(rows)), query, config,
                                                 successor_seed(config.seed, depth, g), tol),
                                  query.norm(), tol));
    }
    readouts = std::move(next);
  }
  return {std::move(readouts.front()), depth};
}

std::size_t recursion_depth(std::size_t leaves, std::size_t episode_window) {
  const std::size_t group = std::max<std::size_t>(episode_window, 2);
  std::size_t depth = 0;
  while (leaves > 1) {
    leaves = (leaves + group - 1) / group;
    ++depth;
  }
  return depth;
}

}  // namespace epimem
