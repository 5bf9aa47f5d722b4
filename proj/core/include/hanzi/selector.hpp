#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hanzi/corpus.hpp"
#include "hanzi/embedding.hpp"

namespace hanzi {

enum class SelectionStrategy { similarity_ordered, random };

const char* to_string(SelectionStrategy strategy);
SelectionStrategy selection_strategy_from_string(std::string_view name);

struct Demonstration {
  std::string sample_id;
  std::string image;  // relative image path from the pool corpus
  std::optional<Grade> grade;
  std::optional<std::string> feedback;
  std::optional<double> similarity;  // set for similarity_ordered
};

// Ordered in-context demonstrations. For similarity_ordered, similarity is
// non-decreasing front to back: the most similar demonstration sits last,
// adjacent to the test query.
struct DemonstrationList {
  std::vector<Demonstration> demos;
  SelectionStrategy strategy = SelectionStrategy::similarity_ordered;
  size_t k = 0;
  std::optional<uint64_t> seed;  // random strategy only

  size_t size() const { return demos.size(); }
};

// Picks the k most similar pool samples to the test sample and orders them by
// ascending similarity. The test sample's own id is excluded from the pool.
// Throws MissingEmbedding (naming the sample) when a vector is absent.
DemonstrationList select_similar(const HandwritingSample& test, const Corpus& pool,
                                 const EmbeddingIndex& index, const EmbeddingVector& test_vector,
                                 size_t k);

// Draws k pool samples uniformly without replacement; order is draw order.
// Deterministic given seed. k > pool size returns the whole pool, shuffled.
DemonstrationList select_random(const HandwritingSample& test, const Corpus& pool, size_t k,
                                uint64_t seed);

}  // namespace hanzi
