#pragma once

#include "epimem/codec.hpp"
#include "epimem/memory.hpp"
#include "epimem/numerics.hpp"
#include "epimem/sequential.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace epimem {

struct ExperimentConfig {
  std::size_t slots = 64;        // K
  std::size_t latent_dim = 64;   // C
  std::size_t episode_window = 16;
  std::size_t leaf_slots = 32;
  std::size_t hash_dim = 4096;
  std::uint64_t projection_seed = 0x5eed;
  // Unset: each command picks the recipe its protocol calls for.
  std::optional<AddressingMode::Variant> addressing;
  double gaussian_alpha = 1e-3;
  NoiseConfig noise;
  // Set: queries below this 1-NN cosine skip memory and decode unconditioned.
  std::optional<double> scope_threshold;
  std::uint64_t seed = 0;
  ToleranceConfig tolerances;

  void validate() const;

  EncoderConfig encoder() const;
  AddressingMode addressing_or(AddressingMode::Variant fallback) const;
};

std::string to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace epimem
