#include "epimem/scope.hpp"

#include "epimem/error.hpp"

#include <algorithm>
#include <cmath>

namespace epimem {

ScopeStore::ScopeStore(std::size_t dimension) : dimension_(dimension) {
  if (dimension_ == 0) throw Error(ErrorCode::kInvalidArgument, "scope dimension must be >= 1");
}

Vector ScopeStore::embedding(std::size_t i) const {
  if (i >= size()) throw Error(ErrorCode::kInvalidArgument, "scope entry index out of range");
  return Eigen::Map<const Vector>(data_.data() + i * dimension_,
                                  static_cast<Eigen::Index>(dimension_));
}

void ScopeStore::add(std::span<const Vector> embeddings, std::span<const std::string> ids) {
  if (embeddings.size() != ids.size()) {
    throw Error(ErrorCode::kShapeMismatch, "embeddings and ids differ in length");
  }
  std::vector<double> staged;
  staged.reserve(embeddings.size() * dimension_);
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    const Vector& e = embeddings[i];
    if (static_cast<std::size_t>(e.size()) != dimension_) {
      throw Error(ErrorCode::kShapeMismatch, "embedding dimension mismatch");
    }
    if (!e.allFinite()) throw Error(ErrorCode::kNumerical, "embedding contains non-finite values");
    const double norm = e.norm();
    if (norm == 0.0) throw Error(ErrorCode::kInvalidArgument, "cannot normalize zero embedding");
    if (id_set_.contains(ids[i]) || !seen.insert(ids[i]).second) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate fact id '" + ids[i] + "'");
    }
    for (Eigen::Index j = 0; j < e.size(); ++j) staged.push_back(e(j) / norm);
  }
  data_.insert(data_.end(), staged.begin(), staged.end());
  for (const auto& id : ids) {
    ids_.push_back(id);
    id_set_.insert(id);
  }
}

ScopeStore add_facts(ScopeStore store, std::span<const Vector> embeddings,
                     std::span<const std::string> ids) {
  store.add(embeddings, ids);
  return store;
}

namespace {
constexpr double kCosineRoundoff = 1e-12;
}  // namespace

ScopeDecision detect(const ScopeStore& store, const Vector& query, double threshold) {
  if (store.empty()) throw Error(ErrorCode::kInvalidArgument, "scope store is empty");
  if (static_cast<std::size_t>(query.size()) != store.dimension_) {
    throw Error(ErrorCode::kShapeMismatch, "query dimension mismatch");
  }
  const double norm = query.norm();
  if (norm == 0.0) throw Error(ErrorCode::kInvalidArgument, "cannot score zero query");

  const Vector unit = query / norm;
  const auto n = static_cast<Eigen::Index>(store.size());
  const auto d = static_cast<Eigen::Index>(store.dimension_);
  const Eigen::Map<const Matrix> entries(store.data_.data(), n, d);
  const Vector scores = entries * unit;

  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < n; ++i) {
    if (scores(i) > scores(best)) best = i;
  }
  ScopeDecision decision;
  // Unit-vector cosines carry a few ulps of rounding; an identical query must
  // still score exactly 1 so that threshold 1 keeps it in scope.
  double score = std::clamp(scores(best), -1.0, 1.0);
  if (1.0 - std::abs(score) <= kCosineRoundoff) score = std::copysign(1.0, score);
  decision.score = score;
  decision.nearest_index = static_cast<std::size_t>(best);
  decision.nearest_fact = store.ids_[decision.nearest_index];
  decision.in_scope = decision.score >= threshold;
  return decision;
}

ScopeDecision detect_multi(const ScopeStore& store, std::span<const Vector> query_parts,
                           double threshold) {
  if (query_parts.empty()) throw Error(ErrorCode::kInvalidArgument, "query has no parts");
  ScopeDecision best = detect(store, query_parts[0], threshold);
  for (std::size_t i = 1; i < query_parts.size(); ++i) {
    ScopeDecision d = detect(store, query_parts[i], threshold);
    if (d.score > best.score) best = std::move(d);
  }
  return best;
}

EqualErrorRate equal_error_rate(std::vector<double> positive_scores,
                                std::vector<double> negative_scores) {
  if (positive_scores.empty() || negative_scores.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "EER needs positive and negative scores");
  }
  std::sort(positive_scores.begin(), positive_scores.end());
  std::sort(negative_scores.begin(), negative_scores.end());

  std::vector<double> candidates = positive_scores;
  candidates.insert(candidates.end(), negative_scores.begin(), negative_scores.end());
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  const auto np = static_cast<double>(positive_scores.size());
  const auto nn = static_cast<double>(negative_scores.size());
  EqualErrorRate best{1.0, candidates.front()};
  double best_gap = 2.0;
  for (double t : candidates) {
    const auto rejected = std::lower_bound(positive_scores.begin(), positive_scores.end(), t) -
                          positive_scores.begin();
    const auto accepted = negative_scores.end() -
                          std::lower_bound(negative_scores.begin(), negative_scores.end(), t);
    const double frr = static_cast<double>(rejected) / np;
    const double far = static_cast<double>(accepted) / nn;
    const double gap = std::abs(frr - far);
    if (gap < best_gap) {
      best_gap = gap;
      best = {0.5 * (frr + far), t};
    }
  }
  return best;
}

}  // namespace epimem
