#include "epimem/experiments.hpp"

#include "epimem/error.hpp"
#include "epimem/facts.hpp"
#include "epimem/hierarchy.hpp"
#include "epimem/random.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <string>
#include <utility>

namespace epimem {

namespace {

constexpr std::uint64_t kReferenceStream = 0x7ef;
constexpr std::uint64_t kPaddingStream = 0x9ad;
constexpr std::uint64_t kAttackStream = 0xa77ac;

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, a, b, c);
  return buf;
}

double fraction(std::size_t hits, std::size_t total) {
  return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
}

void require_reference(const AddressingMode& mode, const char* command) {
  if (!mode.uses_reference()) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string(command) + " needs a reference memory; use pinv-ref or gaussian addressing");
  }
}

std::span<const FactRecord> take(std::span<const FactRecord> facts, std::size_t n) {
  if (n > facts.size()) {
    throw Error(ErrorCode::kInvalidArgument, "requested " + std::to_string(n) + " facts but only " +
                                                 std::to_string(facts.size()) + " are available");
  }
  return facts.first(n);
}

// Gaussian addressing needs reference rows that look like queries; the
// pseudoinverse recipes use a random matrix.
ReferenceRecipe default_recipe(const AddressingMode& mode) {
  return mode.variant == AddressingMode::Variant::kGaussianReference ? ReferenceRecipe::kEncodedPrompts
                                                                     : ReferenceRecipe::kRandomGaussian;
}

std::shared_ptr<const ReferenceMemory> make_reference(ReferenceRecipe recipe, const Encoder& encoder,
                                                      std::span<const FactRecord> facts,
                                                      std::size_t slots, const ExperimentConfig& config) {
  return std::make_shared<const ReferenceMemory>(
      build_reference(recipe, encoder, facts, slots, derive_seed(config.seed, kReferenceStream)),
      config.tolerances);
}

std::vector<std::string> with_unknown(std::vector<std::string> answers) {
  const std::string unknown(kUnknownAnswer);
  if (std::find(answers.begin(), answers.end(), unknown) == answers.end()) answers.push_back(unknown);
  return answers;
}

std::string variant_name(const AddressingMode& mode) { return to_string(mode.variant); }

// Scope store over the encodings of everything written so far.
class WrittenScope {
 public:
  WrittenScope(const ExperimentConfig& config)
      : enabled_(config.scope_threshold.has_value()),
        threshold_(config.scope_threshold.value_or(0.0)),
        store_(config.latent_dim) {}

  void add(const Vector& prompt_encoding) {
    if (!enabled_ || prompt_encoding.norm() == 0.0) return;
    const Vector rows[] = {prompt_encoding};
    const std::string ids[] = {std::to_string(next_id_++)};
    store_.add(rows, ids);
  }

  ScopeGate gate() const { return enabled_ ? ScopeGate{&store_, threshold_} : ScopeGate{}; }
  bool enabled() const { return enabled_; }

 private:
  bool enabled_;
  double threshold_;
  ScopeStore store_;
  std::size_t next_id_ = 0;
};

QueryOutcome decide(const CandidateVocabulary& vocab, const Vector& query, const Vector& readout,
                    const ScopeGate& gate) {
  if (gate.enabled()) {
    if (query.norm() == 0.0) return {{}, 0.0, true};
    if (!detect(*gate.store, query, gate.threshold).in_scope) {
      const auto d = decode_retrieve(vocab, query);
      return {d.answer, d.score, true};
    }
  }
  // A readout with no energy conditions nothing; count it as no answer.
  if (readout.norm() == 0.0) return {};
  const auto d = decode_retrieve(vocab, readout);
  return {d.answer, d.score, false};
}

}  // namespace

Matrix build_reference(ReferenceRecipe recipe, const Encoder& encoder,
                       std::span<const FactRecord> facts, std::size_t slots, std::uint64_t seed) {
  if (slots < 1) throw Error(ErrorCode::kInvalidArgument, "reference needs at least one slot");
  const auto k = static_cast<Eigen::Index>(slots);
  const auto c = encoder.latent_dim();
  if (recipe == ReferenceRecipe::kRandomGaussian) return gaussian_matrix(k, c, seed);

  Matrix ref(k, c);
  Rng pad(derive_seed(seed, kPaddingStream));
  std::normal_distribution<double> normal;
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    Vector row = idx < facts.size() ? encoder.encode(facts[idx].prompt) : Vector::Zero(c);
    // Missing or empty prompts get a random unit row so every slot is reachable.
    while (row.norm() == 0.0) {
      for (Eigen::Index j = 0; j < c; ++j) row(j) = normal(pad);
    }
    ref.row(i) = row.normalized().transpose();
  }
  return ref;
}

FactMemory::FactMemory(const Encoder& encoder, std::shared_ptr<const ReferenceMemory> reference,
                       AddressingMode mode, ToleranceConfig tol)
    : FactMemory(encoder, SequentialState::empty(std::move(reference)), mode, tol) {}

FactMemory::FactMemory(const Encoder& encoder, SequentialState state, AddressingMode mode,
                       ToleranceConfig tol)
    : encoder_(&encoder), state_(std::move(state)), mode_(mode), tol_(tol) {
  mode_.validate();
  tol_.validate();
  if (state_.latent_dim() != encoder.latent_dim()) {
    throw Error(ErrorCode::kShapeMismatch, "memory width does not match encoder latent_dim");
  }
}

AddressWeights FactMemory::keys(const Matrix& prompt_encodings) const {
  return compute_weights(state_, EpisodeEncoding(prompt_encodings), mode_, tol_);
}

void FactMemory::write(std::string_view prompt, std::string_view answer) {
  const EpisodeEncoding key = EpisodeEncoding::from_vector(encoder_->encode(prompt));
  const EpisodeEncoding value = EpisodeEncoding::from_vector(encoder_->encode_fact(prompt, answer));
  const auto w = compute_weights(state_, key, mode_, tol_);
  state_ = apply_update(state_, value, w, UpdateSign::kWrite, tol_);
}

void FactMemory::forget(std::string_view prompt, std::string_view answer) {
  const EpisodeEncoding key = EpisodeEncoding::from_vector(encoder_->encode(prompt));
  const EpisodeEncoding value = EpisodeEncoding::from_vector(encoder_->encode_fact(prompt, answer));
  state_ = forget_keyed(state_, key, value, mode_, tol_);
}

void FactMemory::write_batch(std::span<const FactRecord> facts) {
  if (facts.empty()) return;
  const auto c = encoder_->latent_dim();
  Matrix keys_in(static_cast<Eigen::Index>(facts.size()), c);
  Matrix values(static_cast<Eigen::Index>(facts.size()), c);
  for (std::size_t i = 0; i < facts.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    keys_in.row(r) = encoder_->encode(facts[i].prompt).transpose();
    values.row(r) = encoder_->encode_fact(facts[i]).transpose();
  }
  const EpisodeEncoding z(std::move(values));
  const auto w = keys(keys_in);
  if (state_.update_count() == 0 && state_.covariance().isZero(0.0)) {
    state_ = init_sequential(z, w, state_.reference_ptr(), tol_);
  } else {
    state_ = apply_update(state_, z, w, UpdateSign::kWrite, tol_);
  }
}

Vector FactMemory::readout_encoded(const Vector& prompt_encoding) const {
  const auto w = compute_weights(state_, EpisodeEncoding::from_vector(prompt_encoding), mode_, tol_);
  return (w.w * state_.memory()).row(0).transpose();
}

Vector FactMemory::readout(std::string_view prompt) const {
  return readout_encoded(encoder_->encode(prompt));
}

QueryOutcome answer_query(const Encoder& encoder, std::string_view prompt, const Vector& readout,
                          std::span<const std::string> answers, const ScopeGate& gate) {
  const auto vocab = prompt_conditioned_vocabulary(encoder, prompt, answers);
  return decide(vocab, encoder.encode(prompt), readout, gate);
}

MetricsReport cmd_batch_sim(const ExperimentConfig& config, std::span<const FactRecord> facts,
                            std::span<const std::size_t> sizes) {
  config.validate();
  MetricsReport report;
  report.experiment = "batch-sim";
  const Encoder encoder(config.encoder());
  const auto mode = config.addressing_or(AddressingMode::Variant::kPseudoinverseReference);
  require_reference(mode, "batch-sim");
  for (const auto n : sizes) take(facts, n);

  const auto reference = make_reference(default_recipe(mode), encoder, facts, config.slots, config);
  const auto variant = variant_name(mode);

  std::vector<std::pair<std::size_t, double>> curve;
  for (const auto n : sizes) {
    if (n == 0) continue;
    const auto subset = take(facts, n);
    const auto answers = unique_answers(subset);
    WrittenScope scope(config);

    const auto start = Clock::now();
    FactMemory memory(encoder, reference, mode, config.tolerances);
    memory.write_batch(subset);
    for (const auto& f : subset) scope.add(encoder.encode(f.prompt));

    std::size_t hits = 0;
    std::size_t unconditioned = 0;
    for (const auto& f : subset) {
      const auto outcome = answer_query(encoder, f.prompt, memory.readout(f.prompt), answers, scope.gate());
      hits += outcome.answer == f.answer;
      unconditioned += outcome.unconditioned;
    }
    report.latencies_ms.push_back(elapsed_ms(start) / static_cast<double>(n));

    const double recall = fraction(hits, n);
    curve.emplace_back(n, recall);
    report.add(variant, "n_facts", static_cast<double>(n), "recall", recall, true);
    if (scope.enabled()) {
      report.add(variant, "n_facts", static_cast<double>(n), "unconditioned_fraction",
                 fraction(unconditioned, n), true);
    }
    report.summary.push_back(fmt("N=%.0f recall %.4f", static_cast<double>(n), recall));
  }

  // Beyond K the memory is over-full; recall should not recover as N grows.
  std::sort(curve.begin(), curve.end());
  constexpr double kNoise = 0.05;
  bool monotone = true;
  std::optional<double> previous;
  for (const auto& [n, recall] : curve) {
    if (n < config.slots) continue;
    if (previous && recall > *previous + kNoise) monotone = false;
    previous = recall;
  }
  if (!curve.empty()) {
    report.add(variant, "slots", static_cast<double>(config.slots), "monotone_beyond_k",
               monotone ? 1.0 : 0.0, true);
    if (!monotone) report.summary.push_back("warning: recall increased with N beyond K");
  }
  report.validate();
  return report;
}

MetricsReport cmd_forget_sim(const ExperimentConfig& config, std::span<const FactRecord> facts,
                             std::size_t n) {
  config.validate();
  MetricsReport report;
  report.experiment = "forget-sim";
  if (n < 2) throw Error(ErrorCode::kInvalidArgument, "forget-sim needs N >= 2");
  const Encoder encoder(config.encoder());
  const auto mode = config.addressing_or(AddressingMode::Variant::kPseudoinverseReference);
  require_reference(mode, "forget-sim");
  const auto subset = take(facts, n);
  const auto answers = with_unknown(unique_answers(subset));
  const auto variant = variant_name(mode);

  FactMemory memory(encoder, make_reference(default_recipe(mode), encoder, subset, config.slots, config),
                    mode, config.tolerances);
  WrittenScope scope(config);
  for (const auto& f : subset) {
    const auto start = Clock::now();
    memory.write(f.prompt, f.answer);
    (void)memory.readout(f.prompt);
    report.latencies_ms.push_back(elapsed_ms(start));
    scope.add(encoder.encode(f.prompt));
  }

  const auto& target = subset.front();
  const auto before = answer_query(encoder, target.prompt, memory.readout(target.prompt), answers, scope.gate());

  memory.forget(target.prompt, target.answer);
  memory.write(target.prompt, kUnknownAnswer);

  const auto after = answer_query(encoder, target.prompt, memory.readout(target.prompt), answers, scope.gate());
  std::size_t retained = 0;
  for (std::size_t i = 1; i < n; ++i) {
    const auto& f = subset[i];
    retained += answer_query(encoder, f.prompt, memory.readout(f.prompt), answers, scope.gate()).answer ==
                f.answer;
  }

  const double nd = static_cast<double>(n);
  const double forgotten = after.answer == target.answer ? 1.0 : 0.0;
  const double retained_recall = fraction(retained, n - 1);
  report.add(variant, "n_facts", nd, "recall_before_forget", before.answer == target.answer ? 1.0 : 0.0, true);
  report.add(variant, "n_facts", nd, "forgotten_recall", forgotten, true);
  report.add(variant, "n_facts", nd, "forgotten_decodes_unknown", after.answer == kUnknownAnswer ? 1.0 : 0.0,
             true);
  report.add(variant, "n_facts", nd, "retained_recall", retained_recall, true);
  report.summary.push_back(fmt("N=%.0f forgotten %.4f retained %.4f", nd, forgotten, retained_recall));
  report.summary.push_back("forgotten fact now decodes as '" + after.answer + "'");
  report.validate();
  return report;
}

MetricsReport cmd_seq_sim(const ExperimentConfig& config, std::span<const FactRecord> facts,
                          const SeqSimParams& params) {
  config.validate();
  MetricsReport report;
  report.experiment = "seq-sim";
  const Encoder encoder(config.encoder());
  const auto mode = config.addressing_or(AddressingMode::Variant::kGaussianReference);
  require_reference(mode, "seq-sim");
  if (params.n_reph < 1) throw Error(ErrorCode::kInvalidArgument, "seq-sim needs n_reph >= 1");

  const auto subset = take(facts, params.n_facts == 0 ? facts.size() : params.n_facts);
  if (subset.empty()) throw Error(ErrorCode::kInvalidArgument, "seq-sim needs at least one fact");
  const auto answers = unique_answers(subset);
  const auto variant = variant_name(mode);

  // Phrasing 0 is the prompt itself; the first n_reph phrasings are written,
  // the next n_reph (when present) are held out for evaluation.
  struct Write {
    std::size_t fact;
    const std::string* text;
  };
  struct Query {
    std::size_t fact;
    std::string text;
  };
  std::vector<Write> writes;
  std::vector<Query> heldout;
  for (std::size_t i = 0; i < subset.size(); ++i) {
    const auto& f = subset[i];
    if (f.rephrasings.size() + 1 < params.n_reph) {
      throw Error(ErrorCode::kInvalidArgument,
                  "fact " + std::to_string(i) + " has fewer than n_reph phrasings");
    }
    for (std::size_t j = 0; j < params.n_reph; ++j) {
      writes.push_back({i, j == 0 ? &f.prompt : &f.rephrasings[j - 1]});
    }
    for (std::size_t j = params.n_reph; j < 2 * params.n_reph && j <= f.rephrasings.size(); ++j) {
      heldout.push_back({i, f.rephrasings[j - 1]});
    }
  }
  const std::size_t n_edits = params.n_edits == 0 ? writes.size() : params.n_edits;
  if (n_edits > writes.size()) {
    throw Error(ErrorCode::kInvalidArgument, "n_edits " + std::to_string(n_edits) +
                                                 " exceeds the " + std::to_string(writes.size()) +
                                                 " available writes");
  }
  const std::size_t eval_every =
      params.eval_every == 0 ? std::max<std::size_t>(1, n_edits / 20) : params.eval_every;

  // One reference slot per unique fact, keyed by its first prompt.
  constexpr std::size_t kMaxSlots = 512;
  const std::size_t slots = std::min(subset.size(), kMaxSlots);
  FactMemory memory(encoder, make_reference(ReferenceRecipe::kFirstPhrasing, encoder, subset, slots, config),
                    mode, config.tolerances);

  // Keys depend only on the fixed reference, so query weights are computed once.
  auto prepare = [&](auto&& text_of, std::size_t count) {
    Matrix q(static_cast<Eigen::Index>(count), encoder.latent_dim());
    std::vector<CandidateVocabulary> vocab;
    vocab.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      const std::string& text = text_of(i);
      q.row(static_cast<Eigen::Index>(i)) = encoder.encode(text).transpose();
      vocab.push_back(prompt_conditioned_vocabulary(encoder, text, answers));
    }
    return std::make_pair(std::move(q), std::move(vocab));
  };
  auto [heldout_q, heldout_vocab] = prepare([&](std::size_t i) -> const std::string& { return heldout[i].text; },
                                            heldout.size());
  auto [prompt_q, prompt_vocab] =
      prepare([&](std::size_t i) -> const std::string& { return subset[i].prompt; }, subset.size());
  const Matrix heldout_w = heldout.empty() ? Matrix() : memory.keys(heldout_q).w;
  const Matrix prompt_w = memory.keys(prompt_q).w;

  WrittenScope scope(config);
  auto recall_of = [&](const Matrix& w, const Matrix& q, const std::vector<CandidateVocabulary>& vocab,
                       auto&& fact_of, std::size_t* unconditioned) {
    if (q.rows() == 0) return 0.0;
    const Matrix readouts = w * memory.state().memory();
    std::size_t hits = 0;
    for (Eigen::Index i = 0; i < q.rows(); ++i) {
      const auto outcome = decide(vocab[static_cast<std::size_t>(i)], q.row(i).transpose(),
                                  readouts.row(i).transpose(), scope.gate());
      hits += outcome.answer == subset[fact_of(static_cast<std::size_t>(i))].answer;
      if (unconditioned) *unconditioned += outcome.unconditioned;
    }
    return fraction(hits, static_cast<std::size_t>(q.rows()));
  };
  const auto heldout_fact = [&](std::size_t i) { return heldout[i].fact; };
  const auto prompt_fact = [](std::size_t i) { return i; };

  double heldout_recall = 0.0;
  std::size_t unconditioned = 0;
  for (std::size_t e = 0; e < n_edits; ++e) {
    const auto& wr = writes[e];
    const auto start = Clock::now();
    memory.write(*wr.text, subset[wr.fact].answer);
    (void)memory.readout(*wr.text);
    report.latencies_ms.push_back(elapsed_ms(start));
    scope.add(encoder.encode(*wr.text));

    const std::size_t done = e + 1;
    if (done % eval_every == 0 || done == n_edits) {
      unconditioned = 0;
      heldout_recall = recall_of(heldout_w, heldout_q, heldout_vocab, heldout_fact, &unconditioned);
      report.add(variant, "edits", static_cast<double>(done), "heldout_recall", heldout_recall, true);
    }
  }

  const double prompt_recall = recall_of(prompt_w, prompt_q, prompt_vocab, prompt_fact, nullptr);
  const double nf = static_cast<double>(subset.size());
  report.add(variant, "n_facts", nf, "final_heldout_recall", heldout_recall, true);
  report.add(variant, "n_facts", nf, "prompt_recall", prompt_recall, true);
  if (scope.enabled()) {
    report.add(variant, "n_facts", nf, "unconditioned_fraction",
               fraction(unconditioned, heldout.size()), true);
  }
  report.summary.push_back(fmt("facts %.0f, phrasings written per fact %.0f, edits %.0f", nf,
                               static_cast<double>(params.n_reph), static_cast<double>(n_edits)));
  report.summary.push_back(fmt("held-out recall %.4f over %.0f queries; own-prompt recall %.4f",
                               heldout_recall, static_cast<double>(heldout.size()), prompt_recall));
  report.validate();
  return report;
}

MetricsReport cmd_leak_sim(const ExperimentConfig& config, std::span<const FactRecord> facts,
                           const LeakSimParams& params) {
  config.validate();
  MetricsReport report;
  report.experiment = "leak-sim";
  const Encoder encoder(config.encoder());
  const auto mode = config.addressing_or(AddressingMode::Variant::kGaussianReference);
  require_reference(mode, "leak-sim");
  const auto subset = take(facts, params.n_facts == 0 ? facts.size() : params.n_facts);
  const auto answers = with_unknown(unique_answers(subset));
  const std::size_t n = subset.size();

  constexpr std::size_t kMaxSlots = 512;
  const std::size_t slots = std::max<std::size_t>(1, std::min(n, kMaxSlots));
  const auto reference = make_reference(ReferenceRecipe::kEncodedPrompts, encoder, subset, slots, config);

  // Both arms face the same attack queries.
  Rng attack(derive_seed(config.seed, kAttackStream));
  const Rephraser rephraser;
  std::vector<std::vector<std::string>> queries(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t b = 0; b < params.budget; ++b) {
      queries[i].push_back(rephraser.rephrase(subset[i].prompt, attack));
    }
  }

  auto run_arm = [&](bool protect, std::size_t* exact_unknown) {
    FactMemory memory(encoder, reference, mode, config.tolerances);
    WrittenScope scope(config);
    if (params.batch) {
      std::vector<FactRecord> written(subset.begin(), subset.end());
      if (protect) {
        for (auto& f : written) f.answer = std::string(kUnknownAnswer);
      }
      memory.write_batch(written);
    } else {
      for (const auto& f : subset) {
        const auto start = Clock::now();
        memory.write(f.prompt, protect ? kUnknownAnswer : std::string_view(f.answer));
        (void)memory.readout(f.prompt);
        report.latencies_ms.push_back(elapsed_ms(start));
      }
    }
    for (const auto& f : subset) scope.add(encoder.encode(f.prompt));

    std::size_t leaked = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& f = subset[i];
      if (exact_unknown) {
        *exact_unknown +=
            answer_query(encoder, f.prompt, memory.readout(f.prompt), answers, scope.gate()).answer ==
            kUnknownAnswer;
      }
      for (const auto& q : queries[i]) {
        if (answer_query(encoder, q, memory.readout(q), answers, scope.gate()).answer == f.answer) {
          ++leaked;
          break;
        }
      }
    }
    return fraction(leaked, n);
  };

  std::size_t exact_unknown = 0;
  const double protected_success = run_arm(true, &exact_unknown);
  const double baseline_success = run_arm(false, nullptr);
  const double budget = static_cast<double>(params.budget);
  const std::string arm = params.batch ? "batch" : "sequential";

  report.add("protected-" + arm, "budget", budget, "attack_success", protected_success, true);
  report.add("baseline-" + arm, "budget", budget, "attack_success", baseline_success, true);
  report.add("protected-" + arm, "budget", budget, "exact_prompt_unknown", fraction(exact_unknown, n), true);
  report.summary.push_back(fmt("%.0f facts, budget %.0f: attack success %.4f", static_cast<double>(n), budget,
                               protected_success) +
                           fmt(" (unprotected baseline %.4f)", baseline_success));
  report.validate();
  return report;
}

MetricsReport cmd_longctx_sim(const ExperimentConfig& config, std::span<const FactRecord> facts,
                              std::span<const std::size_t> chunk_counts) {
  config.validate();
  MetricsReport report;
  report.experiment = "longctx-sim";
  if (chunk_counts.empty()) throw Error(ErrorCode::kInvalidArgument, "empty chunk list");
  const Encoder encoder(config.encoder());

  HierarchyConfig hc;
  hc.episode_window = config.episode_window;
  hc.leaf_slots = config.leaf_slots;
  hc.addressing = config.addressing_or(AddressingMode::Variant::kPseudoinverseReference);
  hc.seed = config.seed;
  hc.validate();
  const auto variant = variant_name(hc.addressing);
  for (const auto t : chunk_counts) {
    if (t == 0) throw Error(ErrorCode::kInvalidArgument, "chunk count must be >= 1");
    take(facts, t * hc.episode_window);
  }

  for (const auto t : chunk_counts) {
    const std::size_t n = t * hc.episode_window;
    const auto subset = take(facts, n);
    const auto answers = unique_answers(subset);
    const auto c = encoder.latent_dim();

    std::vector<EpisodeEncoding> chunks;
    Matrix all(static_cast<Eigen::Index>(n), c);
    for (std::size_t k = 0; k < t; ++k) {
      Matrix rows(static_cast<Eigen::Index>(hc.episode_window), c);
      for (std::size_t r = 0; r < hc.episode_window; ++r) {
        const Vector z = encoder.encode_fact(subset[k * hc.episode_window + r]);
        rows.row(static_cast<Eigen::Index>(r)) = z.transpose();
        all.row(static_cast<Eigen::Index>(k * hc.episode_window + r)) = z.transpose();
      }
      chunks.emplace_back(std::move(rows));
    }
    const auto forest = build_forest(chunks, hc, config.tolerances);

    // Flat baseline: one memory holding every fact, sharing leaf 0's prior
    // stream so that a single chunk reproduces the leaf exactly.
    const auto flat_slots = static_cast<Eigen::Index>(std::max(hc.leaf_slots, n));
    const auto flat = write_episode(MemoryState::random_prior(flat_slots, c, leaf_prior_seed(hc.seed, 0)),
                                    EpisodeEncoding(all), {}, config.tolerances)
                          .state;

    std::size_t hits = 0;
    std::size_t flat_hits = 0;
    std::size_t depth = 0;
    for (const auto& f : subset) {
      const Vector q = encoder.encode(f.prompt);
      const auto start = Clock::now();
      const auto r = recursive_read(forest, q, config.tolerances);
      report.latencies_ms.push_back(elapsed_ms(start));
      depth = r.depth;
      hits += answer_query(encoder, f.prompt, r.z, answers).answer == f.answer;
      const Vector flat_z = read(flat, EpisodeEncoding::from_vector(q), {}, config.tolerances).z.row(0).transpose();
      flat_hits += answer_query(encoder, f.prompt, flat_z, answers).answer == f.answer;
    }
    const double nd = static_cast<double>(n);
    const double recall = fraction(hits, n);
    const double flat_recall = fraction(flat_hits, n);
    report.add(variant, "n_fact", nd, "recall", recall, true);
    report.add(variant, "n_fact", nd, "flat_recall", flat_recall, true);
    report.add(variant, "n_fact", nd, "depth", static_cast<double>(depth), false);
    report.summary.push_back(fmt("n_fact=%.0f recall %.4f (flat %.4f)", nd, recall, flat_recall));
  }
  report.validate();
  return report;
}

}  // namespace epimem
