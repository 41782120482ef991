// Command-line harness: memory editing on snapshot files plus the desk-scale
// experiment protocols. Metrics go to CSV (--out) and a summary to stdout.

#include "epimem/codec.hpp"
#include "epimem/config.hpp"
#include "epimem/error.hpp"
#include "epimem/experiments.hpp"
#include "epimem/facts.hpp"
#include "epimem/metrics.hpp"
#include "epimem/random.hpp"
#include "epimem/snapshot.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace epimem;

struct GlobalFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> slots;
  std::optional<std::size_t> latent_dim;
  std::optional<std::string> addressing;
  std::optional<double> gaussian_alpha;
  std::optional<double> scope_threshold;
  std::string out;
};

struct FactSource {
  std::string path;
  std::optional<std::size_t> synthetic;
  std::size_t rephrasings = 20;
};

ExperimentConfig resolve_config(const GlobalFlags& g) {
  ExperimentConfig c = g.config_path.empty() ? ExperimentConfig{} : load_config(g.config_path);
  if (g.seed) c.seed = *g.seed;
  if (g.slots) c.slots = *g.slots;
  if (g.latent_dim) c.latent_dim = *g.latent_dim;
  if (g.addressing) c.addressing = parse_addressing(*g.addressing);
  if (g.gaussian_alpha) c.gaussian_alpha = *g.gaussian_alpha;
  if (g.scope_threshold) c.scope_threshold = *g.scope_threshold;
  c.validate();
  return c;
}

std::vector<FactRecord> resolve_facts(const FactSource& src, const ExperimentConfig& config,
                                      std::size_t default_count) {
  if (!src.path.empty()) return load_facts(src.path);
  return synthetic_facts(src.synthetic.value_or(default_count), src.rephrasings, config.seed);
}

void add_fact_source(CLI::App* cmd, FactSource& src) {
  cmd->add_option("--facts", src.path, "JSONL facts file (prompt, answer, rephrasings)");
  cmd->add_option("--synthetic", src.synthetic, "Generate this many synthetic facts instead");
  cmd->add_option("--rephrasings", src.rephrasings, "Rephrasings per synthetic fact");
}

void emit(const MetricsReport& report, const GlobalFlags& g) {
  write_summary(std::cout, report);
  if (g.out.empty()) return;
  std::ofstream out(g.out, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + g.out);
  write_csv(out, report);
  if (!out) throw Error(ErrorCode::kIo, "failed writing " + g.out);
}

std::string created_tag(const ExperimentConfig& c) {
  return "epimem " + std::to_string(c.slots) + "x" + std::to_string(c.latent_dim) + " seed " +
         std::to_string(c.seed);
}

struct OpenMemory {
  Encoder encoder;
  SequentialState state;
  AddressingMode mode;
};

AddressingMode editing_mode(const ExperimentConfig& c) {
  const auto mode = c.addressing_or(AddressingMode::Variant::kPseudoinverseReference);
  if (!mode.uses_reference()) {
    throw Error(ErrorCode::kInvalidArgument, "snapshot editing needs pinv-ref or gaussian addressing");
  }
  return mode;
}

// Fresh memory for snapshot editing. Gaussian addressing keys on the prompts
// it is first given; the pseudoinverse modes use a random reference.
OpenMemory fresh_memory(const ExperimentConfig& c, std::span<const FactRecord> seed_facts) {
  const auto mode = editing_mode(c);
  Encoder encoder(c.encoder());
  const auto recipe = mode.variant == AddressingMode::Variant::kGaussianReference
                          ? ReferenceRecipe::kEncodedPrompts
                          : ReferenceRecipe::kRandomGaussian;
  auto ref = std::make_shared<const ReferenceMemory>(
      build_reference(recipe, encoder, seed_facts, c.slots, derive_seed(c.seed, 0x7ef)), c.tolerances);
  return {encoder, SequentialState::empty(std::move(ref)), mode};
}

OpenMemory open_snapshot(const std::string& path, const ExperimentConfig& c, bool explicit_shape) {
  const std::optional<SnapshotShape> shape =
      explicit_shape ? std::optional<SnapshotShape>(SnapshotShape{c.slots, c.latent_dim}) : std::nullopt;
  const auto snap = load_snapshot(path, shape);
  return {Encoder(snap.encoder), snap.to_sequential(c.tolerances), editing_mode(c)};
}

void store(const std::string& path, const FactMemory& memory, const Encoder& encoder,
           const ExperimentConfig& c) {
  const Matrix prior = Matrix::Zero(memory.state().slots(), memory.state().latent_dim());
  save_snapshot(path, MemorySnapshot::from_sequential(memory.state(), prior, encoder.config(), created_tag(c)));
}

int report_error(const std::string& code, const std::string& message) {
  std::cerr << "error: " << code << ": " << message << '\n';
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Episodic memory editing harness"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalFlags g;
  app.add_option("--config", g.config_path, "JSON experiment config")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Master seed");
  app.add_option("--k", g.slots, "Memory slots K");
  app.add_option("--latent-dim", g.latent_dim, "Latent dimension C");
  app.add_option("--addressing", g.addressing, "pinv-current, pinv-ref or gaussian")
      ->check(CLI::IsMember({"pinv-current", "pinv-ref", "gaussian"}));
  app.add_option("--gaussian-alpha", g.gaussian_alpha, "Gaussian addressing sparsity");
  app.add_option("--scope-threshold", g.scope_threshold, "Enable scope routing at this cosine");
  app.add_option("--out", g.out, "Metrics CSV path");

  bool shape_given = false;
  auto mark_shape = [&] { shape_given = g.slots.has_value() || g.latent_dim.has_value(); };

  // Snapshot editing.
  std::string snapshot;
  std::vector<std::string> prompts;
  std::string answer;
  std::vector<std::string> candidates;
  FactSource src;
  bool keep_deleted = false;

  auto* write_cmd = app.add_subcommand("write", "Write facts into a snapshot (created if missing)");
  write_cmd->add_option("--snapshot", snapshot, "Snapshot file")->required();
  write_cmd->add_option("--prompt", prompts, "Prompt to write");
  write_cmd->add_option("--answer", answer, "Answer for --prompt");
  add_fact_source(write_cmd, src);

  auto* read_cmd = app.add_subcommand("read", "Decode prompts against a snapshot");
  read_cmd->add_option("--snapshot", snapshot, "Snapshot file")->required()->check(CLI::ExistingFile);
  read_cmd->add_option("--prompt", prompts, "Prompt to query (repeatable)");
  read_cmd->add_option("--candidate", candidates, "Answer the decoder may choose (repeatable)");
  add_fact_source(read_cmd, src);

  auto* forget_cmd = app.add_subcommand("forget", "Remove a written fact and store 'unknown.' instead");
  forget_cmd->add_option("--snapshot", snapshot, "Snapshot file")->required()->check(CLI::ExistingFile);
  forget_cmd->add_option("--prompt", prompts, "Prompt of the fact")->required()->expected(1);
  forget_cmd->add_option("--answer", answer, "Answer that was written")->required();
  forget_cmd->add_flag("--no-unknown", keep_deleted, "Only remove; do not write 'unknown.'");

  auto* save_cmd = app.add_subcommand("save", "Create a snapshot from config (optionally with facts)");
  save_cmd->add_option("--snapshot", snapshot, "Output snapshot file")->required();
  add_fact_source(save_cmd, src);

  std::string resave;
  auto* load_cmd = app.add_subcommand("load", "Validate a snapshot and print its header");
  load_cmd->add_option("--snapshot", snapshot, "Snapshot file")->required()->check(CLI::ExistingFile);
  load_cmd->add_option("--resave", resave, "Write the loaded snapshot back out here");

  // Experiments.
  std::vector<std::size_t> sizes{1, 16, 32, 48, 64, 80, 96, 128};
  auto* batch_cmd = app.add_subcommand("batch-sim", "Batch editing recall vs number of facts");
  batch_cmd->add_option("--sizes", sizes, "Comma-separated batch sizes")->delimiter(',');
  add_fact_source(batch_cmd, src);

  std::size_t forget_n = 64;
  auto* forget_sim_cmd = app.add_subcommand("forget-sim", "Selective forgetting of one fact among N");
  forget_sim_cmd->add_option("--n", forget_n, "Facts written before forgetting");
  add_fact_source(forget_sim_cmd, src);

  SeqSimParams seq;
  seq.n_facts = 20;
  auto* seq_cmd = app.add_subcommand("seq-sim", "Sequential rephrase writes vs held-out recall");
  seq_cmd->add_option("--n-facts", seq.n_facts, "Unique facts (0: all)");
  seq_cmd->add_option("--n-reph", seq.n_reph, "Phrasings written per fact");
  seq_cmd->add_option("--n-edits", seq.n_edits, "Writes to stream (0: all)");
  seq_cmd->add_option("--eval-every", seq.eval_every, "Curve spacing in writes (0: auto)");
  add_fact_source(seq_cmd, src);

  LeakSimParams leak;
  leak.n_facts = 50;
  auto* leak_cmd = app.add_subcommand("leak-sim", "Rephrase attack on deleted facts");
  leak_cmd->add_option("--n-facts", leak.n_facts, "Protected facts (0: all)");
  leak_cmd->add_option("--budget", leak.budget, "Rephrase queries per fact");
  leak_cmd->add_flag("--batch", leak.batch, "Write all facts as one episode");
  add_fact_source(leak_cmd, src);

  std::vector<std::size_t> chunks{1, 2, 4, 8};
  std::optional<std::size_t> window;
  std::optional<std::size_t> leaf_slots;
  auto* longctx_cmd = app.add_subcommand("longctx-sim", "Hierarchical recall vs context length");
  longctx_cmd->add_option("--chunks", chunks, "Comma-separated chunk counts T")->delimiter(',');
  longctx_cmd->add_option("--window", window, "Encodings per leaf memory");
  longctx_cmd->add_option("--leaf-slots", leaf_slots, "Slots per leaf memory");
  add_fact_source(longctx_cmd, src);

  CLI11_PARSE(app, argc, argv);
  mark_shape();

  try {
    auto config = resolve_config(g);

    if (*batch_cmd) {
      const std::size_t need = sizes.empty() ? 0 : *std::max_element(sizes.begin(), sizes.end());
      const auto facts = resolve_facts(src, config, need);
      emit(cmd_batch_sim(config, facts, sizes), g);
    } else if (*forget_sim_cmd) {
      emit(cmd_forget_sim(config, resolve_facts(src, config, forget_n), forget_n), g);
    } else if (*seq_cmd) {
      emit(cmd_seq_sim(config, resolve_facts(src, config, seq.n_facts), seq), g);
    } else if (*leak_cmd) {
      emit(cmd_leak_sim(config, resolve_facts(src, config, leak.n_facts), leak), g);
    } else if (*longctx_cmd) {
      if (window) config.episode_window = *window;
      if (leaf_slots) config.leaf_slots = *leaf_slots;
      config.validate();
      const std::size_t t_max = chunks.empty() ? 0 : *std::max_element(chunks.begin(), chunks.end());
      emit(cmd_longctx_sim(config, resolve_facts(src, config, t_max * config.episode_window), chunks), g);
    } else if (*save_cmd) {
      const bool with_facts = !src.path.empty() || src.synthetic;
      const auto facts = with_facts ? resolve_facts(src, config, 0) : std::vector<FactRecord>{};
      const auto open = fresh_memory(config, facts);
      FactMemory memory(open.encoder, open.state, open.mode, config.tolerances);
      memory.write_batch(facts);
      store(snapshot, memory, open.encoder, config);
      std::cout << "saved " << snapshot << " (" << config.slots << "x" << config.latent_dim << ", "
                << facts.size() << " facts)\n";
    } else if (*load_cmd) {
      const auto snap = load_snapshot(snapshot, shape_given ? std::optional<SnapshotShape>(
                                                                  SnapshotShape{config.slots, config.latent_dim})
                                                            : std::nullopt);
      std::cout << "snapshot " << snapshot << ": format_version " << snap.format_version << ", K "
                << snap.slots() << ", C " << snap.latent_dim() << ", updates " << snap.update_count
                << ", created '" << snap.created << "'\n";
      if (!resave.empty()) save_snapshot(resave, snap);
    } else if (*write_cmd) {
      std::vector<FactRecord> facts;
      if (!src.path.empty() || src.synthetic) facts = resolve_facts(src, config, 0);
      for (const auto& p : prompts) {
        if (answer.empty()) throw Error(ErrorCode::kInvalidArgument, "--prompt needs --answer");
        facts.push_back({p, normalize_answer(answer), {}});
      }
      if (facts.empty()) throw Error(ErrorCode::kInvalidArgument, "nothing to write");
      const bool exists = std::filesystem::exists(snapshot);
      const auto loaded = exists ? open_snapshot(snapshot, config, shape_given) : fresh_memory(config, facts);
      FactMemory memory(loaded.encoder, loaded.state, loaded.mode, config.tolerances);
      for (const auto& f : facts) memory.write(f.prompt, f.answer);
      store(snapshot, memory, loaded.encoder, config);
      std::cout << "wrote " << facts.size() << " facts to " << snapshot << '\n';
    } else if (*read_cmd) {
      const auto loaded = open_snapshot(snapshot, config, shape_given);
      FactMemory memory(loaded.encoder, loaded.state, loaded.mode, config.tolerances);
      std::vector<FactRecord> facts;
      if (!src.path.empty() || src.synthetic) facts = resolve_facts(src, config, 0);
      // Snapshots hold no vocabulary: candidates come from --facts and --candidate.
      auto answers = unique_answers(facts);
      for (const auto& c : candidates) answers.push_back(normalize_answer(c));
      answers.emplace_back(kUnknownAnswer);
      std::sort(answers.begin(), answers.end());
      answers.erase(std::unique(answers.begin(), answers.end()), answers.end());
      std::vector<std::string> queries = prompts;
      if (queries.empty()) {
        for (const auto& f : facts) queries.push_back(f.prompt);
      }
      for (const auto& q : queries) {
        const auto outcome = answer_query(loaded.encoder, q, memory.readout(q), answers);
        char score[32];
        std::snprintf(score, sizeof score, "%.6f", outcome.score);
        std::cout << q << '\t' << (outcome.answer.empty() ? "<none>" : outcome.answer) << '\t' << score << '\n';
      }
    } else if (*forget_cmd) {
      const auto loaded = open_snapshot(snapshot, config, shape_given);
      FactMemory memory(loaded.encoder, loaded.state, loaded.mode, config.tolerances);
      const std::string normalized = normalize_answer(answer);
      memory.forget(prompts.front(), normalized);
      if (!keep_deleted) memory.write(prompts.front(), kUnknownAnswer);
      store(snapshot, memory, loaded.encoder, config);
      std::cout << "forgot '" << prompts.front() << "'\n";
    }
  } catch (const Error& e) {
    return report_error(std::string(to_string(e.code())), e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return report_error("io", e.what());
  } catch (const std::exception& e) {
    return report_error("internal", e.what());
  }
  return 0;
}
