#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace cvre {

// Fixed-dimension vector, 32-bit storage. All reductions accumulate in
// 64-bit.
using Embedding = std::vector<float>;

struct ScoredId {
  std::string id;
  double score = 0.0;
};

// Descending score, ties broken by ascending id, no duplicate ids.
using RankedList = std::vector<ScoredId>;

class GalleryIndex;

// Strict ranking order: higher score first, equal scores by ascending id.
inline bool ranked_before(const ScoredId& a, const ScoredId& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.id < b.id;
}

double dot_f64(const float* a, const float* b, size_t n);
double l2_norm_f64(const float* v, size_t n);
inline double l2_norm(const Embedding& e) { return l2_norm_f64(e.data(), e.size()); }

// Unit-norm copy; throws std::domain_error on a zero vector.
Embedding l2_normalize(const Embedding& e);

double cosine_sim(const Embedding& a, const Embedding& b);

// Exact brute-force top-k over the gallery by cosine similarity.
// threads > 1 partitions the scan; the merged result is identical to the
// sequential one.
RankedList top_k(const Embedding& query, const GalleryIndex& index, size_t k,
                 unsigned threads = 1);

}  // namespace cvre
