#pragma once

#include "epimem/codec.hpp"
#include "epimem/numerics.hpp"
#include "epimem/sequential.hpp"

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace epimem {

inline constexpr int kSnapshotVersion = 1;

/// Self-describing text snapshot of a memory:
///
///   epimem-snapshot
///   format_version 1
///   K <k>
///   C <c>
///   encoder hash_dim=<n> latent_dim=<c> projection_seed=<s> case_fold=<0|1> fingerprint=<hex>
///   update_count <n>
///   created <free text, one line>
///   matrix M <k> <c>        followed by k lines of c numbers
///   matrix M0 <k> <c>
///   matrix M_ref <k> <c>
///   matrix Ckk <k> <k>
///   end
///
/// Numbers use 17 significant digits, so save -> load -> save is byte-identical.
struct MemorySnapshot {
  int format_version = kSnapshotVersion;
  EncoderConfig encoder;
  std::size_t update_count = 0;
  std::string created;
  Matrix memory;      // M
  Matrix prior;       // M0
  Matrix reference;   // M_ref
  Matrix covariance;  // Ckk

  Eigen::Index slots() const { return memory.rows(); }
  Eigen::Index latent_dim() const { return memory.cols(); }

  /// Throws kShapeMismatch unless all four matrices agree on K and C.
  void validate() const;

  SequentialState to_sequential(const ToleranceConfig& tol = {}) const;
  static MemorySnapshot from_sequential(const SequentialState& state, const Matrix& prior,
                                        const EncoderConfig& encoder, std::string created);
};

struct SnapshotShape {
  std::size_t slots;
  std::size_t latent_dim;
};

void write_snapshot(std::ostream& out, const MemorySnapshot& snapshot);
/// Parses a complete snapshot or throws; never returns partial state.
MemorySnapshot read_snapshot(std::istream& in, std::optional<SnapshotShape> expected = {});

void save_snapshot(const std::filesystem::path& path, const MemorySnapshot& snapshot);
MemorySnapshot load_snapshot(const std::filesystem::path& path,
                             std::optional<SnapshotShape> expected = {});

}  // namespace epimem
