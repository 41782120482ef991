#pragma once

#include "epimem/memory.hpp"
#include "epimem/scope.hpp"
#include "epimem/sequential.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace epimem {

struct HierarchyConfig {
  // Maximum encodings per memory (the training-context analog).
  std::size_t episode_window = 16;
  // Slots per leaf and per successor memory.
  std::size_t leaf_slots = 32;
  // How successor memories address their readout episodes.
  AddressingMode addressing = AddressingMode::pinv_reference();
  std::uint64_t seed = 0;
  // Optional per-leaf scope filter: leaf readouts are dropped when the query's
  // best cosine against that leaf's encodings is below this threshold.
  std::optional<double> leaf_scope_threshold;

  void validate() const;
  /// leaf_slots >= episode_window; otherwise leaves are over-full.
  bool well_provisioned() const { return leaf_slots >= episode_window; }
};

/// One one-shot memory per chunk of a long encoding stream.
class MemoryForest {
 public:
  MemoryForest(std::vector<MemoryState> leaves, HierarchyConfig config,
               std::vector<ScopeStore> leaf_scopes = {});

  const std::vector<MemoryState>& leaves() const { return leaves_; }
  const HierarchyConfig& config() const { return config_; }
  const std::vector<ScopeStore>& leaf_scopes() const { return leaf_scopes_; }
  std::size_t size() const { return leaves_.size(); }
  Eigen::Index latent_dim() const { return leaves_.front().latent_dim(); }
  // Level of the leaves in the hierarchy (always 0 for a built forest).
  std::size_t level() const { return 0; }

 private:
  std::vector<MemoryState> leaves_;
  HierarchyConfig config_;
  std::vector<ScopeStore> leaf_scopes_;
};

/// Seed of leaf i's N(0,1) prior.
std::uint64_t leaf_prior_seed(std::uint64_t seed, std::size_t leaf);

/// Writes each chunk into its own memory with a zero-noise one-shot write.
/// Leaf i uses an N(0,1) prior seeded from (config.seed, i).
MemoryForest build_forest(std::span<const EpisodeEncoding> chunks, const HierarchyConfig& config,
                          const ToleranceConfig& tol = {});

struct RecursiveReadout {
  Vector z;
  // Successor levels built; 0 when the forest has a single leaf.
  std::size_t depth = 0;
};

/// Reads the query from every leaf, then repeatedly writes groups of at most
/// episode_window readouts into fresh successor memories and reads again,
/// until a single readout remains.
RecursiveReadout recursive_read(const MemoryForest& forest, const Vector& query,
                                const ToleranceConfig& tol = {});

/// Successor levels recursive_read builds for `leaves` leaves.
std::size_t recursion_depth(std::size_t leaves, std::size_t episode_window);

}  // namespace epimem
