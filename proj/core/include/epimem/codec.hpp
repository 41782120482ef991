#pragma once

#include "epimem/numerics.hpp"
#include "epimem/random.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace epimem {

/// Answer written in place of a deleted fact.
inline constexpr std::string_view kUnknownAnswer = "unknown.";

struct FactRecord {
  std::string prompt;
  std::string answer;
  std::vector<std::string> rephrasings;
};

/// Trims whitespace and appends a trailing period when missing.
std::string normalize_answer(std::string_view answer);

/// Bumped whenever tokenisation, hashing or projection changes.
inline constexpr int kEncoderVersion = 1;

struct EncoderConfig {
  std::size_t hash_dim = 4096;
  std::size_t latent_dim = 64;
  std::uint64_t projection_seed = 0x5eed;
  bool case_fold = true;

  void validate() const;
  /// FNV-1a over a canonical description (version, hash, all fields).
  std::uint64_t fingerprint() const;
};

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);

/// Splits on anything that is not an ASCII alphanumeric or a non-ASCII byte.
std::vector<std::string> tokenize(std::string_view text, bool case_fold);

/// Feature hashing (bucket = fnv1a64(token) mod hash_dim) followed by a fixed
/// seed-derived +-1/sqrt(C) projection and L2 normalisation. Empty text maps
/// to the zero vector.
class Encoder {
 public:
  explicit Encoder(EncoderConfig config);

  const EncoderConfig& config() const { return config_; }
  Eigen::Index latent_dim() const { return static_cast<Eigen::Index>(config_.latent_dim); }

  Vector encode(std::string_view text) const;
  /// encode(prompt + " " + answer); throws on an empty prompt.
  Vector encode_fact(const FactRecord& fact) const;
  Vector encode_fact(std::string_view prompt, std::string_view answer) const;

  /// Rows are encode(texts[i]).
  Matrix encode_rows(std::span<const std::string> texts) const;

 private:
  EncoderConfig config_;
};

struct CandidateVocabulary {
  std::vector<std::string> answers;
  Matrix encodings;  // one row per answer

  std::size_t size() const { return answers.size(); }
};

/// Candidates scored in the context of the query prompt: row i is
/// encode(prompt + " " + answers[i]).
CandidateVocabulary prompt_conditioned_vocabulary(const Encoder& encoder, std::string_view prompt,
                                                  std::span<const std::string> answers);

struct Decoded {
  std::string answer;
  double score = 0.0;
  std::size_t index = 0;
};

/// Vocabulary answer with maximum cosine to the readout (lowest index on ties).
Decoded decode_retrieve(const CandidateVocabulary& vocab, const Vector& z_read);

/// Word dropout plus synonym substitution from a small fixed table; stands in
/// for human paraphrases.
class Rephraser {
 public:
  struct Options {
    double dropout = 0.1;
    double synonym_probability = 0.5;
  };

  Rephraser();
  explicit Rephraser(Options options);

  std::string rephrase(std::string_view text, Rng& rng) const;

  static const std::unordered_map<std::string, std::vector<std::string>>& synonym_table();

 private:
  Options options_;
};

}  // namespace epimem
