#pragma once

#include "epimem/codec.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace epimem {

// Facts files are JSON Lines: {"prompt": ..., "answer": ..., "rephrasings": [...]}.
// Answers are normalised with normalize_answer() on ingest.

std::vector<FactRecord> parse_facts(std::istream& in);
std::vector<FactRecord> load_facts(const std::filesystem::path& path);

void write_facts(std::ostream& out, std::span<const FactRecord> facts);
void save_facts(const std::filesystem::path& path, std::span<const FactRecord> facts);

/// Deterministic synthetic corpus: templated prompts about pseudo-word
/// subjects, pseudo-word answers, and `rephrasings` perturbed paraphrases per
/// fact. Prompts are pairwise distinct.
std::vector<FactRecord> synthetic_facts(std::size_t count, std::size_t rephrasings,
                                        std::uint64_t seed);

/// Sorted unique answers.
std::vector<std::string> unique_answers(std::span<const FactRecord> facts);

}  // namespace epimem
