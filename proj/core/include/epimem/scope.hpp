#pragma once

#include "epimem/numerics.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

namespace epimem {

struct ScopeDecision {
  double score = -1.0;  // best cosine similarity
  std::string nearest_fact;
  std::size_t nearest_index = 0;
  bool in_scope = false;
};

/// 1-nearest-neighbour cosine scope store over unit-normalised fact embeddings.
class ScopeStore {
 public:
  explicit ScopeStore(std::size_t dimension);

  std::size_t dimension() const { return dimension_; }
  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }

  const std::string& id(std::size_t i) const { return ids_.at(i); }
  /// Unit-norm stored embedding.
  Vector embedding(std::size_t i) const;

  /// Normalises and appends. Strong guarantee: on error the store is unchanged.
  void add(std::span<const Vector> embeddings, std::span<const std::string> ids);

 private:
  friend ScopeDecision detect(const ScopeStore&, const Vector&, double);

  std::size_t dimension_;
  std::vector<double> data_;  // row-major, size() x dimension_
  std::vector<std::string> ids_;
  std::unordered_set<std::string> id_set_;
};

/// Value-returning form of ScopeStore::add.
ScopeStore add_facts(ScopeStore store, std::span<const Vector> embeddings,
                     std::span<const std::string> ids);

ScopeDecision detect(const ScopeStore& store, const Vector& query, double threshold);

/// Max-score decision over independently scored query parts (e.g. sentences).
ScopeDecision detect_multi(const ScopeStore& store, std::span<const Vector> query_parts,
                           double threshold);

struct EqualErrorRate {
  double rate = 0.0;
  double threshold = 0.0;
};

/// Threshold where false-reject rate (positives below it) and false-accept
/// rate (negatives at or above it) are closest; `rate` is their mean there.
EqualErrorRate equal_error_rate(std::vector<double> positive_scores,
                                std::vector<double> negative_scores);

}  // namespace epimem
