#include "epimem/codec.hpp"
#include "epimem/error.hpp"
#include "epimem/experiments.hpp"
#include "epimem/facts.hpp"
#include "epimem/hierarchy.hpp"
#include "epimem/random.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cstring>

using namespace epimem;

namespace {

std::vector<EpisodeEncoding> chunk_rows(const Matrix& z, std::size_t window) {
  std::vector<EpisodeEncoding> chunks;
  for (Eigen::Index start = 0; start < z.rows(); start += static_cast<Eigen::Index>(window)) {
    const Eigen::Index n = std::min<Eigen::Index>(static_cast<Eigen::Index>(window), z.rows() - start);
    chunks.emplace_back(Matrix(z.middleRows(start, n)));
  }
  return chunks;
}

HierarchyConfig config_with(std::size_t window, std::size_t slots, std::uint64_t seed = 0) {
  HierarchyConfig c;
  c.episode_window = window;
  c.leaf_slots = slots;
  c.seed = seed;
  return c;
}

}  // namespace

TEST(BuildForest, OneChunkIsAFlatWrite) {
  const Matrix z = gaussian_matrix(10, 24, 1);
  const auto cfg = config_with(16, 32, 5);
  const auto forest = build_forest(chunk_rows(z, 16), cfg);
  ASSERT_EQ(forest.size(), 1u);
  EXPECT_EQ(forest.level(), 0u);
  const auto flat = write_episode(MemoryState::random_prior(32, 24, leaf_prior_seed(5, 0)), EpisodeEncoding(z)).state;
  EXPECT_EQ(forest.leaves()[0].memory(), flat.memory());
}

TEST(BuildForest, FourChunksGiveFourLeaves) {
  const auto forest = build_forest(chunk_rows(gaussian_matrix(64, 32, 2), 16), config_with(16, 32));
  EXPECT_EQ(forest.size(), 4u);
  // Leaves draw independent priors.
  EXPECT_NE(forest.leaves()[0].prior(), forest.leaves()[1].prior());
}

TEST(BuildForest, OversizedChunkIsRejected) {
  const std::vector<EpisodeEncoding> chunks{EpisodeEncoding(gaussian_matrix(17, 8, 3))};
  try {
    build_forest(chunks, config_with(16, 32));
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("chunk exceeds episode window"), std::string::npos);
  }
  EXPECT_THROW(build_forest(std::vector<EpisodeEncoding>{}, config_with(16, 32)), Error);
}

TEST(HierarchyConfigType, Validation) {
  EXPECT_THROW(config_with(0, 32).validate(), Error);
  EXPECT_THROW(config_with(16, 0).validate(), Error);
  EXPECT_TRUE(config_with(16, 32).well_provisioned());
  EXPECT_FALSE(config_with(16, 8).well_provisioned());
}

TEST(RecursiveRead, SingleLeafIsBitwiseTheFlatRead) {
  const Matrix z = gaussian_matrix(16, 32, 4);
  const auto forest = build_forest(chunk_rows(z, 16), config_with(16, 32, 9));
  Rng rng(5);
  for (int i = 0; i < 20; ++i) {
    const Vector q = gaussian_matrix(32, 1, rng).col(0);
    const auto r = recursive_read(forest, q);
    const Vector flat = read(forest.leaves()[0], EpisodeEncoding::from_vector(q)).z.row(0).transpose();
    EXPECT_EQ(r.depth, 0u);
    ASSERT_EQ(r.z.size(), flat.size());
    EXPECT_EQ(std::memcmp(r.z.data(), flat.data(), sizeof(double) * static_cast<std::size_t>(flat.size())), 0);
  }
}

TEST(RecursiveRead, DepthFollowsTheGrouping) {
  EXPECT_EQ(recursion_depth(1, 16), 0u);
  EXPECT_EQ(recursion_depth(4, 16), 1u);
  EXPECT_EQ(recursion_depth(16, 16), 1u);
  EXPECT_EQ(recursion_depth(17, 16), 2u);
  EXPECT_EQ(recursion_depth(300, 16), 3u);
  EXPECT_EQ(recursion_depth(5, 1), 3u);  // window 1 still halves
  const auto forest = build_forest(chunk_rows(gaussian_matrix(40, 16, 6), 2), config_with(2, 4));
  const auto r = recursive_read(forest, gaussian_matrix(16, 1, 7).col(0));
  EXPECT_EQ(r.depth, recursion_depth(20, 2));
}

TEST(RecursiveRead, DepthStaysLogarithmic) {
  for (std::size_t t = 1; t <= 512; t *= 2) {
    const std::size_t bound = static_cast<std::size_t>(std::ceil(std::log(static_cast<double>(t)))) + 1;
    EXPECT_LE(recursion_depth(t, 16), bound) << t;
  }
}

TEST(RecursiveRead, FactInTheThirdChunkAgreesWithAFlatMemory) {
  // C = 128: see the notes on leaf capacity in the README.
  EncoderConfig ec;
  ec.latent_dim = 128;
  const Encoder enc(ec);
  const auto cfg = config_with(16, 32, 0);
  std::size_t agree = 0;
  constexpr int kTrials = 100;
  for (int trial = 0; trial < kTrials; ++trial) {
    const auto facts = synthetic_facts(64, 0, static_cast<std::uint64_t>(trial));
    const auto answers = unique_answers(facts);
    Matrix z(64, 128);
    for (Eigen::Index i = 0; i < 64; ++i) z.row(i) = enc.encode_fact(facts[static_cast<std::size_t>(i)]).transpose();
    auto hc = cfg;
    hc.seed = static_cast<std::uint64_t>(trial);
    const auto forest = build_forest(chunk_rows(z, 16), hc);

    // Flat memory with one slot per fact, keyed on prompts.
    auto ref = std::make_shared<const ReferenceMemory>(gaussian_matrix(64, 128, derive_seed(7, trial)));
    FactMemory flat(enc, ref, AddressingMode::pinv_reference());
    flat.write_batch(facts);

    const auto& fact = facts[32 + static_cast<std::size_t>(trial % 16)];
    const Vector q = enc.encode(fact.prompt);
    const auto hier = answer_query(enc, fact.prompt, recursive_read(forest, q).z, answers);
    const auto base = answer_query(enc, fact.prompt, flat.readout(fact.prompt), answers);
    agree += hier.answer == base.answer;
  }
  EXPECT_GE(agree, 90u);
}

TEST(RecursiveRead, OrthogonalQueryReadsNearlyNothing) {
  const Matrix z = gaussian_matrix(64, 128, 8);
  const auto forest = build_forest(chunk_rows(z, 16), config_with(16, 32));
  // Projector onto the orthogonal complement of every written encoding.
  const Matrix basis = oracle::min_norm_lstsq(z, Matrix::Identity(64, 64)) * z;
  const Matrix complement = Matrix::Identity(128, 128) - basis;
  Rng rng(9);
  for (int i = 0; i < 20; ++i) {
    const Vector q = complement * gaussian_matrix(128, 1, rng).col(0);
    const Vector out = recursive_read(forest, q).z;
    for (Eigen::Index f = 0; f < z.rows(); ++f) {
      const double c = out.norm() == 0.0 ? 0.0 : std::abs(oracle::cosine(out, z.row(f).transpose()));
      EXPECT_LT(c, 0.3);
    }
  }
}

TEST(RecursiveRead, ScopeFilterDropsUnrelatedLeaves) {
  const Matrix z = gaussian_matrix(48, 64, 10);
  auto cfg = config_with(16, 32);
  cfg.leaf_scope_threshold = 0.99;
  const auto filtered = build_forest(chunk_rows(z, 16), cfg);
  ASSERT_EQ(filtered.leaf_scopes().size(), 3u);
  // Querying with a stored row keeps exactly its own leaf, so the result is
  // that leaf's flat read.
  const Vector q = z.row(20).transpose();
  const auto r = recursive_read(filtered, q);
  const Vector own = read(filtered.leaves()[1], EpisodeEncoding::from_vector(q)).z.row(0).transpose();
  EXPECT_EQ(r.depth, 0u);
  EXPECT_LT((r.z - own).norm(), 1e-12);
  EXPECT_TRUE(recursive_read(filtered, gaussian_matrix(64, 1, 11).col(0)).z.isZero(0.0));
}

TEST(RecursiveRead, AllAddressingModesTerminate) {
  const Matrix z = gaussian_matrix(80, 32, 12);
  for (const auto& mode : {AddressingMode::pinv_current(), AddressingMode::pinv_reference(), AddressingMode::gaussian()}) {
    auto cfg = config_with(4, 8);
    cfg.addressing = mode;
    const auto forest = build_forest(chunk_rows(z, 4), cfg);
    const auto r = recursive_read(forest, z.row(3).transpose());
    EXPECT_EQ(r.depth, recursion_depth(20, 4));
    EXPECT_TRUE(r.z.allFinite());
  }
}

TEST(RecursiveRead, QueryWidthMustMatch) {
  const auto forest = build_forest(chunk_rows(gaussian_matrix(8, 16, 1), 8), config_with(8, 16));
  EXPECT_THROW(recursive_read(forest, Vector::Ones(15)), Error);
}
