#pragma once

#include "epimem/codec.hpp"
#include "epimem/config.hpp"
#include "epimem/metrics.hpp"
#include "epimem/scope.hpp"
#include "epimem/sequential.hpp"

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace epimem {

/// Recipes for the fixed reference memory.
enum class ReferenceRecipe {
  kEncodedPrompts,  // row i = encode(prompt of fact i)
  kFirstPhrasing,   // row i = encode(first phrasing of unique fact i)
  kRandomGaussian,  // i.i.d. N(0, 1)
};

/// Builds a K x C reference. Prompt recipes use unit-normalised prompt
/// encodings and pad missing rows with random unit vectors.
Matrix build_reference(ReferenceRecipe recipe, const Encoder& encoder,
                       std::span<const FactRecord> facts, std::size_t slots, std::uint64_t seed);

/// Key-value memory over facts: keys come from prompt encodings, values are
/// prompt+answer encodings, both routed through the sequential least-squares
/// memory.
class FactMemory {
 public:
  FactMemory(const Encoder& encoder, std::shared_ptr<const ReferenceMemory> reference,
             AddressingMode mode, ToleranceConfig tol = {});
  FactMemory(const Encoder& encoder, SequentialState state, AddressingMode mode,
             ToleranceConfig tol = {});

  void write(std::string_view prompt, std::string_view answer);
  void forget(std::string_view prompt, std::string_view answer);
  /// All facts as one episode. From an empty history this is the one-shot
  /// least-squares write M = pinv(W) Z.
  void write_batch(std::span<const FactRecord> facts);

  AddressWeights keys(const Matrix& prompt_encodings) const;
  Vector readout(std::string_view prompt) const;
  Vector readout_encoded(const Vector& prompt_encoding) const;

  const SequentialState& state() const { return state_; }
  const AddressingMode& mode() const { return mode_; }

 private:
  const Encoder* encoder_;
  SequentialState state_;
  AddressingMode mode_;
  ToleranceConfig tol_;
};

struct QueryOutcome {
  std::string answer;  // empty when the readout carried nothing
  double score = 0.0;
  bool unconditioned = false;
};

/// Optional scope gate in front of memory-conditioned decoding.
struct ScopeGate {
  const ScopeStore* store = nullptr;
  double threshold = 0.0;

  bool enabled() const { return store != nullptr && !store->empty(); }
};

/// Decodes `readout` against prompt-conditioned candidates. Out-of-scope
/// queries bypass the readout and decode the raw query encoding.
QueryOutcome answer_query(const Encoder& encoder, std::string_view prompt, const Vector& readout,
                          std::span<const std::string> answers, const ScopeGate& gate = {});

// Desk-scale experiment protocols. All are deterministic in (config, facts).

/// Writes the first N facts as one episode for each N in `sizes`, then
/// queries every written prompt. N = 0 contributes no rows.
MetricsReport cmd_batch_sim(const ExperimentConfig& config, std::span<const FactRecord> facts,
                            std::span<const std::size_t> sizes);

/// Writes N facts one at a time, forgets fact 0 and writes "unknown." in its
/// place; reports forgotten and retained recall.
MetricsReport cmd_forget_sim(const ExperimentConfig& config, std::span<const FactRecord> facts,
                             std::size_t n);

struct SeqSimParams {
  std::size_t n_facts = 0;     // 0: all facts
  std::size_t n_reph = 1;      // phrasings written per fact
  std::size_t n_edits = 0;     // 0: every available write
  std::size_t eval_every = 0;  // 0: about 20 curve points
};

/// Streams rephrase+answer writes and tracks recall on held-out phrasings.
MetricsReport cmd_seq_sim(const ExperimentConfig& config, std::span<const FactRecord> facts,
                          const SeqSimParams& params);

struct LeakSimParams {
  std::size_t n_facts = 0;  // 0: all facts
  std::size_t budget = 20;  // rephrase queries per fact
  bool batch = false;       // one episode instead of sequential writes
};

/// Rephrase attack against "unknown."-protected facts, paired with an
/// unprotected baseline on the same queries.
MetricsReport cmd_leak_sim(const ExperimentConfig& config, std::span<const FactRecord> facts,
                           const LeakSimParams& params);

/// Hierarchical recall for n_fact = T * episode_window, for each T.
MetricsReport cmd_longctx_sim(const ExperimentConfig& config, std::span<const FactRecord> facts,
                              std::span<const std::size_t> chunk_counts);

}  // namespace epimem
