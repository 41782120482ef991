#include "epimem/config.hpp"
#include "epimem/error.hpp"
#include "epimem/experiments.hpp"
#include "epimem/facts.hpp"
#include "epimem/metrics.hpp"
#include "epimem/random.hpp"
#include "epimem/snapshot.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <set>
#include <sstream>

using namespace epimem;

namespace {

ExperimentConfig desk_config() {
  ExperimentConfig c;
  c.slots = 64;
  c.latent_dim = 64;
  return c;
}

ExperimentConfig with_addressing(ExperimentConfig c, AddressingMode::Variant v) {
  c.addressing = v;
  return c;
}

MemorySnapshot sample_snapshot(Eigen::Index k, Eigen::Index c, std::uint64_t seed) {
  EncoderConfig enc;
  enc.latent_dim = static_cast<std::size_t>(c);
  auto ref = std::make_shared<const ReferenceMemory>(gaussian_matrix(k, c, seed));
  const Matrix z = gaussian_matrix(2 * k, c, seed + 1);
  const auto state = init_sequential(EpisodeEncoding(z), AddressWeights(z * ref->pseudo_inverse()), ref);
  return MemorySnapshot::from_sequential(state, gaussian_matrix(k, c, seed + 2), enc, "unit test");
}

std::string serialize(const MemorySnapshot& s) {
  std::ostringstream out;
  write_snapshot(out, s);
  return out.str();
}

MemorySnapshot parse(const std::string& text, std::optional<SnapshotShape> shape = {}) {
  std::istringstream in(text);
  return read_snapshot(in, shape);
}

}  // namespace

// ---- config ----

TEST(Config, JsonRoundTrip) {
  ExperimentConfig c;
  c.slots = 32;
  c.latent_dim = 48;
  c.addressing = AddressingMode::Variant::kGaussianReference;
  c.gaussian_alpha = 0.01;
  c.noise = {0.1, 0.2, 9};
  c.scope_threshold = 0.75;
  c.seed = 1234567890123ULL;
  c.tolerances.ridge_epsilon = 1e-9;
  const auto back = config_from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
  EXPECT_EQ(back.slots, 32u);
  EXPECT_EQ(*back.addressing, AddressingMode::Variant::kGaussianReference);
  EXPECT_EQ(*back.scope_threshold, 0.75);
  EXPECT_EQ(back.seed, 1234567890123ULL);
}

TEST(Config, DefaultsFillMissingKeys) {
  const auto c = config_from_json(R"({"K": 16})");
  EXPECT_EQ(c.slots, 16u);
  EXPECT_EQ(c.latent_dim, ExperimentConfig{}.latent_dim);
  EXPECT_FALSE(c.addressing.has_value());
  EXPECT_FALSE(c.scope_threshold.has_value());
}

TEST(Config, InvalidConfigsAreRejected) {
  EXPECT_THROW(config_from_json(R"({"K": 0})"), Error);
  EXPECT_THROW(config_from_json(R"({"addressing": "nearest"})"), Error);
  EXPECT_THROW(config_from_json(R"({"K": "many"})"), Error);
  EXPECT_THROW(config_from_json("[1, 2]"), Error);
  EXPECT_THROW(config_from_json("{"), Error);
  EXPECT_THROW(config_from_json(R"({"noise": {"sigma_w": -1}})"), Error);
  EXPECT_THROW(load_config("/nonexistent/config.json"), Error);
}

// ---- facts ----

TEST(Facts, JsonLinesRoundTrip) {
  const auto facts = synthetic_facts(20, 3, 1);
  std::stringstream buf;
  write_facts(buf, facts);
  const auto back = parse_facts(buf);
  ASSERT_EQ(back.size(), facts.size());
  for (std::size_t i = 0; i < facts.size(); ++i) {
    EXPECT_EQ(back[i].prompt, facts[i].prompt);
    EXPECT_EQ(back[i].answer, facts[i].answer);
    EXPECT_EQ(back[i].rephrasings, facts[i].rephrasings);
  }
}

TEST(Facts, ParsingNormalisesAndSkipsBlankLines) {
  std::istringstream in(
      "{\"prompt\": \"The capital of France is\", \"answer\": \"Paris\"}\n\n"
      "{\"prompt\": \"Z\\u00fcrich lies in\", \"answer\": \"Switzerland.\", \"rephrasings\": [\"Zurich is in\"]}\n");
  const auto facts = parse_facts(in);
  ASSERT_EQ(facts.size(), 2u);
  EXPECT_EQ(facts[0].answer, "Paris.");
  EXPECT_TRUE(facts[0].rephrasings.empty());
  EXPECT_EQ(facts[1].prompt, "Z\xc3\xbcrich lies in");
  EXPECT_EQ(facts[1].rephrasings.size(), 1u);
}

TEST(Facts, ErrorsNameTheLine) {
  std::istringstream in("{\"prompt\": \"a\", \"answer\": \"b\"}\n{\"prompt\": \"\", \"answer\": \"b\"}\n");
  try {
    parse_facts(in);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kFormat);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
  std::istringstream broken("not json\n");
  EXPECT_THROW(parse_facts(broken), Error);
  std::istringstream missing("{\"prompt\": \"a\"}\n");
  EXPECT_THROW(parse_facts(missing), Error);
}

TEST(Facts, SyntheticCorpusIsDeterministicWithDistinctPrompts) {
  const auto a = synthetic_facts(500, 4, 42);
  const auto b = synthetic_facts(500, 4, 42);
  std::set<std::string> prompts;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].prompt, b[i].prompt);
    EXPECT_EQ(a[i].rephrasings, b[i].rephrasings);
    EXPECT_EQ(a[i].rephrasings.size(), 4u);
    EXPECT_EQ(a[i].answer.back(), '.');
    prompts.insert(a[i].prompt);
  }
  EXPECT_EQ(prompts.size(), a.size());
  EXPECT_NE(synthetic_facts(5, 0, 43)[0].prompt, a[0].prompt);
  // A prefix of a larger corpus is the smaller corpus.
  EXPECT_EQ(synthetic_facts(50, 4, 42)[49].prompt, a[49].prompt);
}

TEST(Facts, UniqueAnswersAreSorted) {
  std::vector<FactRecord> facts{{"a", "z.", {}}, {"b", "y.", {}}, {"c", "z.", {}}};
  EXPECT_EQ(unique_answers(facts), (std::vector<std::string>{"y.", "z."}));
}

// ---- metrics ----

TEST(Metrics, CsvHasStableColumnsAndRateCheck) {
  MetricsReport r;
  r.experiment = "demo";
  r.add("pinv-ref", "n_facts", 64, "recall", 0.984375, true);
  r.add("pinv-ref", "n_facts", 64, "depth", 3, false);
  EXPECT_EQ(to_csv(r),
            "experiment,variant,parameter,parameter_value,metric,value\n"
            "demo,pinv-ref,n_facts,64,recall,0.984375\n"
            "demo,pinv-ref,n_facts,64,depth,3\n");
  EXPECT_NO_THROW(r.validate());
  EXPECT_EQ(r.value("recall"), 0.984375);
  EXPECT_EQ(r.value_at("depth", 64), 3);
  EXPECT_THROW(r.value("missing"), Error);
  r.add("x", "p", 0, "bad_rate", 1.5, true);
  EXPECT_THROW(r.validate(), Error);
}

// ---- snapshots ----

TEST(Snapshot, SaveLoadSaveIsByteIdentical) {
  const auto s = sample_snapshot(8, 6, 1);
  const auto text = serialize(s);
  const auto loaded = parse(text);
  EXPECT_EQ(serialize(loaded), text);
  EXPECT_EQ(loaded.memory, s.memory);
  EXPECT_EQ(loaded.prior, s.prior);
  EXPECT_EQ(loaded.reference, s.reference);
  EXPECT_EQ(loaded.covariance, s.covariance);
  EXPECT_EQ(loaded.created, "unit test");
  EXPECT_EQ(loaded.encoder.fingerprint(), s.encoder.fingerprint());
}

TEST(Snapshot, FileRoundTripRestoresTheSequentialState) {
  const auto dir = std::filesystem::temp_directory_path() / "epimem_snapshot_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "state.snap";
  const auto s = sample_snapshot(12, 10, 2);
  save_snapshot(path, s);
  const auto state = load_snapshot(path).to_sequential();
  EXPECT_EQ(state.memory(), s.memory);
  EXPECT_EQ(state.covariance(), s.covariance);
  EXPECT_EQ(state.reference().matrix(), s.reference);
  EXPECT_FALSE(std::filesystem::exists(path.string() + ".tmp"));
  std::filesystem::remove_all(dir);
}

TEST(Snapshot, TruncatedFileFailsWithoutPartialState) {
  const auto text = serialize(sample_snapshot(8, 6, 3));
  for (std::size_t cut : {std::size_t{0}, text.size() / 4, text.size() / 2, text.size() - 5}) {
    try {
      parse(text.substr(0, cut));
      FAIL() << "cut at " << cut;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kFormat) << e.what();
    }
  }
}

TEST(Snapshot, ShapeMismatchAgainstTheRunIsExplicit) {
  const auto text = serialize(sample_snapshot(32, 16, 4));
  try {
    parse(text, SnapshotShape{64, 16});
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kShapeMismatch);
  }
  EXPECT_NO_THROW(parse(text, SnapshotShape{32, 16}));
}

TEST(Snapshot, UnsupportedVersionIsNamed) {
  auto text = serialize(sample_snapshot(4, 3, 5));
  text.replace(text.find("format_version 1"), 16, "format_version 7");
  try {
    parse(text);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("unsupported snapshot version"), std::string::npos);
  }
}

TEST(Snapshot, CorruptionIsDetected) {
  const auto text = serialize(sample_snapshot(4, 3, 6));
  auto bad_number = text;
  bad_number.replace(bad_number.find("matrix M 4 3\n") + 13, 1, "x");
  EXPECT_THROW(parse(bad_number), Error);
  auto bad_shape = text;
  bad_shape.replace(bad_shape.find("matrix Ckk 4 4"), 14, "matrix Ckk 4 5");
  EXPECT_THROW(parse(bad_shape), Error);
  auto bad_fp = text;
  bad_fp.replace(bad_fp.find("fingerprint=") + 12, 1, bad_fp[bad_fp.find("fingerprint=") + 12] == '0' ? "1" : "0");
  EXPECT_THROW(parse(bad_fp), Error);
  EXPECT_THROW(parse("hello\n"), Error);
}

TEST(Snapshot, InconsistentMatricesAreRejectedOnSave) {
  auto s = sample_snapshot(4, 3, 7);
  s.covariance = Matrix::Zero(3, 3);
  std::ostringstream out;
  EXPECT_THROW(write_snapshot(out, s), Error);
}

// ---- fact memory ----

TEST(FactMemory, PromptKeysRetrieveTheirAnswers) {
  const auto cfg = desk_config();
  const Encoder enc(cfg.encoder());
  const auto facts = synthetic_facts(20, 0, 3);
  auto ref = std::make_shared<const ReferenceMemory>(build_reference(ReferenceRecipe::kRandomGaussian, enc, facts, 64, 1));
  FactMemory m(enc, ref, AddressingMode::pinv_reference());
  for (const auto& f : facts) m.write(f.prompt, f.answer);
  const auto answers = unique_answers(facts);
  for (const auto& f : facts) EXPECT_EQ(answer_query(enc, f.prompt, m.readout(f.prompt), answers).answer, f.answer);
}

TEST(FactMemory, PromptReferencePadsMissingRows) {
  const Encoder enc(desk_config().encoder());
  const auto facts = synthetic_facts(3, 0, 4);
  const Matrix ref = build_reference(ReferenceRecipe::kEncodedPrompts, enc, facts, 8, 5);
  EXPECT_LT((ref.row(1).transpose() - enc.encode(facts[1].prompt)).norm(), 1e-12);
  for (Eigen::Index i = 0; i < 8; ++i) EXPECT_NEAR(ref.row(i).norm(), 1.0, 1e-12);
}

// ---- experiment protocols ----

TEST(BatchSim, SingleFactIsRecalled) {
  const auto facts = synthetic_facts(4, 0, 1);
  const std::vector<std::size_t> sizes{1};
  EXPECT_EQ(cmd_batch_sim(desk_config(), facts, sizes).value_at("recall", 1), 1.0);
}

TEST(BatchSim, ZeroSizeProducesAnEmptyReport) {
  const auto facts = synthetic_facts(4, 0, 1);
  const std::vector<std::size_t> sizes{0};
  EXPECT_TRUE(cmd_batch_sim(desk_config(), facts, sizes).rows.empty());
}

TEST(BatchSim, TooFewFactsIsAnError) {
  const auto facts = synthetic_facts(4, 0, 1);
  const std::vector<std::size_t> sizes{5};
  EXPECT_THROW(cmd_batch_sim(desk_config(), facts, sizes), Error);
}

TEST(BatchSim, RecallDropsOnceMemoryIsFull) {
  const auto facts = synthetic_facts(128, 0, 0);
  const std::vector<std::size_t> sizes{16, 64, 128};
  const auto r = cmd_batch_sim(desk_config(), facts, sizes);
  EXPECT_GE(r.value_at("recall", 64), 0.95);
  EXPECT_LT(r.value_at("recall", 128), r.value_at("recall", 64));
  EXPECT_EQ(r.value("monotone_beyond_k"), 1.0);
}

TEST(ForgetSim, TwoFactsKeepTheOther) {
  const auto facts = synthetic_facts(2, 0, 2);
  const auto r = cmd_forget_sim(desk_config(), facts, 2);
  EXPECT_EQ(r.value("retained_recall"), 1.0);
  EXPECT_EQ(r.value("forgotten_recall"), 0.0);
  EXPECT_EQ(r.value("forgotten_decodes_unknown"), 1.0);
}

TEST(ForgetSim, DeskScaleForgetsOneAndRetainsTheRest) {
  const auto facts = synthetic_facts(64, 0, 0);
  const auto r = cmd_forget_sim(desk_config(), facts, 64);
  EXPECT_EQ(r.value("recall_before_forget"), 1.0);
  EXPECT_LE(r.value("forgotten_recall"), 0.02);
  EXPECT_GE(r.value("retained_recall"), 0.95);
}

TEST(ForgetSim, ContractViolations) {
  const auto facts = synthetic_facts(8, 0, 3);
  EXPECT_THROW(cmd_forget_sim(desk_config(), facts, 1), Error);
  EXPECT_THROW(cmd_forget_sim(desk_config(), facts, 9), Error);
  EXPECT_THROW(cmd_forget_sim(with_addressing(desk_config(), AddressingMode::Variant::kPseudoinverseCurrent), facts, 4),
               Error);
  EXPECT_NO_THROW(cmd_forget_sim(with_addressing(desk_config(), AddressingMode::Variant::kGaussianReference), facts, 4));
}

TEST(SeqSim, OneFactQueriedWithItsPrompt) {
  const auto facts = synthetic_facts(1, 2, 4);
  SeqSimParams p;
  p.n_reph = 1;
  EXPECT_EQ(cmd_seq_sim(desk_config(), facts, p).value("prompt_recall"), 1.0);
}

TEST(SeqSim, MoreRephrasingsPerFactGeneraliseBetter) {
  SeqSimParams many{20, 10, 0, 0};
  SeqSimParams one{200, 1, 0, 0};
  const auto cfg = with_addressing(desk_config(), AddressingMode::Variant::kGaussianReference);
  const double r_many = cmd_seq_sim(cfg, synthetic_facts(20, 20, 0), many).value("final_heldout_recall");
  const double r_one = cmd_seq_sim(cfg, synthetic_facts(200, 20, 0), one).value("final_heldout_recall");
  EXPECT_GT(r_many, r_one);
}

TEST(SeqSim, GaussianAddressingBeatsPseudoinverseOnUnseenRephrasings) {
  const auto facts = synthetic_facts(200, 2, 0);
  SeqSimParams p{200, 1, 0, 0};
  const double g = cmd_seq_sim(with_addressing(desk_config(), AddressingMode::Variant::kGaussianReference), facts, p)
                       .value("final_heldout_recall");
  const double pi = cmd_seq_sim(with_addressing(desk_config(), AddressingMode::Variant::kPseudoinverseReference), facts, p)
                        .value("final_heldout_recall");
  EXPECT_GE(g, pi);
}

TEST(SeqSim, CurveHasTheRequestedSpacing) {
  const auto facts = synthetic_facts(10, 4, 1);
  SeqSimParams p{10, 2, 15, 5};
  const auto r = cmd_seq_sim(desk_config(), facts, p);
  std::vector<double> points;
  for (const auto& row : r.rows) {
    if (row.metric == "heldout_recall") points.push_back(row.parameter_value);
  }
  EXPECT_EQ(points, (std::vector<double>{5, 10, 15}));
  p.n_edits = 21;
  EXPECT_THROW(cmd_seq_sim(desk_config(), facts, p), Error);
}

TEST(SeqSim, ScopeRoutingFlagsUnconditionedQueries) {
  const auto facts = synthetic_facts(20, 4, 2);
  SeqSimParams p{20, 2, 0, 0};
  auto cfg = desk_config();
  cfg.scope_threshold = -1.0;
  EXPECT_EQ(cmd_seq_sim(cfg, facts, p).value("unconditioned_fraction"), 0.0);
  cfg.scope_threshold = 1.0 + 1e-9;
  EXPECT_EQ(cmd_seq_sim(cfg, facts, p).value("unconditioned_fraction"), 1.0);
}

TEST(LeakSim, ExactPromptDecodesUnknown) {
  const auto facts = synthetic_facts(30, 0, 5);
  LeakSimParams p{30, 1, false};
  EXPECT_EQ(cmd_leak_sim(desk_config(), facts, p).value("exact_prompt_unknown"), 1.0);
}

TEST(LeakSim, ZeroBudgetNeverSucceeds) {
  const auto facts = synthetic_facts(10, 0, 5);
  LeakSimParams p{10, 0, false};
  const auto r = cmd_leak_sim(desk_config(), facts, p);
  EXPECT_EQ(r.value("attack_success", "protected-sequential"), 0.0);
  EXPECT_EQ(r.value("attack_success", "baseline-sequential"), 0.0);
}

TEST(LeakSim, ProtectionBeatsTheUnprotectedBaseline) {
  const auto facts = synthetic_facts(50, 0, 6);
  for (bool batch : {false, true}) {
    LeakSimParams p{50, 20, batch};
    const auto r = cmd_leak_sim(desk_config(), facts, p);
    const std::string arm = batch ? "batch" : "sequential";
    EXPECT_LT(r.value("attack_success", "protected-" + arm), r.value("attack_success", "baseline-" + arm));
  }
}

TEST(LongctxSim, SingleChunkEqualsFlatRecall) {
  const auto facts = synthetic_facts(16, 0, 7);
  const std::vector<std::size_t> t{1};
  const auto r = cmd_longctx_sim(desk_config(), facts, t);
  EXPECT_EQ(r.value("recall"), r.value("flat_recall"));
  EXPECT_EQ(r.value("depth"), 0.0);
}

TEST(LongctxSim, FourChunksKeepMostOfTheRecall) {
  auto cfg = desk_config();
  cfg.latent_dim = 128;
  const auto facts = synthetic_facts(64, 0, 0);
  const std::vector<std::size_t> t{1, 4};
  const auto r = cmd_longctx_sim(cfg, facts, t);
  EXPECT_GE(r.value_at("recall", 64), 0.8 * r.value_at("recall", 16));
}

TEST(LongctxSim, EmptyChunkListIsAnError) {
  const auto facts = synthetic_facts(16, 0, 7);
  EXPECT_THROW(cmd_longctx_sim(desk_config(), facts, std::vector<std::size_t>{}), Error);
  EXPECT_THROW(cmd_longctx_sim(desk_config(), facts, std::vector<std::size_t>{2}), Error);
}

TEST(Reproducibility, EveryCommandIsAPureFunctionOfConfigAndFacts) {
  auto cfg = desk_config();
  cfg.seed = 77;
  const auto facts = synthetic_facts(64, 4, 77);
  const std::vector<std::size_t> sizes{8, 64};
  const std::vector<std::size_t> chunks{1, 2};
  const SeqSimParams seq{20, 2, 0, 0};
  const LeakSimParams leak{20, 5, false};
  EXPECT_EQ(to_csv(cmd_batch_sim(cfg, facts, sizes)), to_csv(cmd_batch_sim(cfg, facts, sizes)));
  EXPECT_EQ(to_csv(cmd_forget_sim(cfg, facts, 32)), to_csv(cmd_forget_sim(cfg, facts, 32)));
  EXPECT_EQ(to_csv(cmd_seq_sim(cfg, facts, seq)), to_csv(cmd_seq_sim(cfg, facts, seq)));
  EXPECT_EQ(to_csv(cmd_leak_sim(cfg, facts, leak)), to_csv(cmd_leak_sim(cfg, facts, leak)));
  EXPECT_EQ(to_csv(cmd_longctx_sim(cfg, facts, chunks)), to_csv(cmd_longctx_sim(cfg, facts, chunks)));
}

TEST(Reproducibility, AllReportedRatesAreRates) {
  const auto facts = synthetic_facts(64, 4, 8);
  auto cfg = desk_config();
  cfg.scope_threshold = 0.9;
  const std::vector<std::size_t> sizes{1, 32, 64};
  for (const auto& report : {cmd_batch_sim(cfg, facts, sizes), cmd_forget_sim(cfg, facts, 16),
                             cmd_seq_sim(cfg, facts, SeqSimParams{30, 2, 0, 0}),
                             cmd_leak_sim(cfg, facts, LeakSimParams{20, 3, true})}) {
    for (const auto& row : report.rows) {
      if (!row.is_rate) continue;
      EXPECT_GE(row.value, 0.0) << row.metric;
      EXPECT_LE(row.value, 1.0) << row.metric;
    }
  }
}
