#include "hanzi/selector.hpp"

#include <algorithm>
#include <unordered_map>

#include "hanzi/error.hpp"
#include "hanzi/util.hpp"

namespace hanzi {

const char* to_string(SelectionStrategy strategy) {
  return strategy == SelectionStrategy::similarity_ordered ? "similarity" : "random";
}

SelectionStrategy selection_strategy_from_string(std::string_view name) {
  if (name == "similarity" || name == "similarity_ordered") {
    return SelectionStrategy::similarity_ordered;
  }
  if (name == "random") return SelectionStrategy::random;
  raise(ErrorCode::config_error, "unknown selection strategy \"" + std::string(name) + "\"");
}

namespace {

Demonstration demo_from_sample(const HandwritingSample& sample) {
  Demonstration demo;
  demo.sample_id = sample.id;
  demo.image = sample.image;
  demo.grade = sample.grade;
  demo.feedback = sample.feedback;
  return demo;
}

}  // namespace

DemonstrationList select_similar(const HandwritingSample& test, const Corpus& pool,
                                 const EmbeddingIndex& index, const EmbeddingVector& test_vector,
                                 size_t k) {
  std::unordered_map<std::string, const HandwritingSample*> by_id;
  for (const auto& sample : pool.samples) {
    if (sample.id == test.id) continue;  // leakage guard
    by_id.emplace(sample.id, &sample);
    if (index.find(sample.id) == nullptr) {
      raise(ErrorCode::missing_embedding, "pool sample \"" + sample.id + "\"");
    }
  }
  if (by_id.empty()) raise(ErrorCode::empty_pool, "no eligible demonstrations");

  // Rank the full pool, then keep the k best eligible hits. The index may
  // hold vectors beyond the pool (merged corpora), so filter before cutting.
  std::vector<SimilarityHit> hits = index.top_k(test_vector, index.size());
  std::erase_if(hits, [&](const SimilarityHit& hit) { return by_id.count(hit.sample_id) == 0; });
  if (hits.size() > k) hits.resize(k);

  DemonstrationList list;
  list.strategy = SelectionStrategy::similarity_ordered;
  list.k = k;
  // top_k is descending; the prompt wants ascending similarity so the most
  // similar demonstration ends up adjacent to the test query.
  for (auto it = hits.rbegin(); it != hits.rend(); ++it) {
    Demonstration demo = demo_from_sample(*by_id.at(it->sample_id));
    demo.similarity = it->similarity;
    list.demos.push_back(std::move(demo));
  }
  return list;
}

DemonstrationList select_random(const HandwritingSample& test, const Corpus& pool, size_t k,
                                uint64_t seed) {
  std::vector<const HandwritingSample*> eligible;
  for (const auto& sample : pool.samples) {
    if (sample.id != test.id) eligible.push_back(&sample);
  }
  if (eligible.empty()) raise(ErrorCode::empty_pool, "no eligible demonstrations");

  Rng rng = Rng::from_key(seed, "select_random/" + test.id);
  std::vector<size_t> picks = rng.sample_indices(eligible.size(), k);

  DemonstrationList list;
  list.strategy = SelectionStrategy::random;
  list.k = k;
  list.seed = seed;
  for (size_t pick : picks) {
    list.demos.push_back(demo_from_sample(*eligible[pick]));
  }
  return list;
}

}  // namespace hanzi
