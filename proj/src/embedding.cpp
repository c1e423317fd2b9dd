#include "cvre/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <queue>
#include <stdexcept>
#include <thread>

#include "cvre/gallery.hpp"

namespace cvre {

double dot_f64(const float* a, const float* b, size_t n) {
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return acc;
}

double l2_norm_f64(const float* v, size_t n) {
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) acc += static_cast<double>(v[i]) * static_cast<double>(v[i]);
  return std::sqrt(acc);
}

Embedding l2_normalize(const Embedding& e) {
  double norm = l2_norm(e);
  if (!std::isfinite(norm)) throw std::invalid_argument("l2_normalize: non-finite input");
  if (norm == 0.0) throw std::domain_error("l2_normalize: zero vector");
  Embedding out(e.size());
  for (size_t i = 0; i < e.size(); ++i)
    out[i] = static_cast<float>(static_cast<double>(e[i]) / norm);
  return out;
}

double cosine_sim(const Embedding& a, const Embedding& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("cosine_sim: dimension mismatch");
  double na = l2_norm(a);
  double nb = l2_norm(b);
  if (!std::isfinite(na) || !std::isfinite(nb))
    throw std::invalid_argument("cosine_sim: non-finite input");
  if (na == 0.0 || nb == 0.0) throw std::domain_error("cosine_sim: zero vector");
  return dot_f64(a.data(), b.data(), a.size()) / (na * nb);
}

namespace {

struct RowScore {
  double score;
  uint32_t row;
};

// Scan [lo, hi) keeping the k best rows by (score desc, id asc).
std::vector<RowScore> scan_range(const Embedding& query, double query_norm,
                                 const GalleryIndex& index, size_t k,
                                 size_t lo, size_t hi) {
  const auto& ids = index.ids();
  auto worse = [&](const RowScore& a, const RowScore& b) {
    if (a.score != b.score) return a.score > b.score;
    return ids[a.row] < ids[b.row];
  };
  // Heap top = worst kept entry.
  std::priority_queue<RowScore, std::vector<RowScore>, decltype(worse)> heap(worse);
  const size_t d = index.dim();
  for (size_t i = lo; i < hi; ++i) {
    const float* r = index.row(i).data();
    double rnorm = l2_norm_f64(r, d);
    if (rnorm == 0.0) throw std::domain_error("top_k: zero gallery row " + ids[i]);
    double score = dot_f64(query.data(), r, d) / (query_norm * rnorm);
    if (heap.size() < k) {
      heap.push({score, static_cast<uint32_t>(i)});
    } else if (worse(heap.top(), {score, static_cast<uint32_t>(i)})) {
      heap.pop();
      heap.push({score, static_cast<uint32_t>(i)});
    }
  }
  std::vector<RowScore> kept;
  kept.reserve(heap.size());
  while (!heap.empty()) {
    kept.push_back(heap.top());
    heap.pop();
  }
  return kept;
}

}  // namespace

RankedList top_k(const Embedding& query, const GalleryIndex& index, size_t k,
                 unsigned threads) {
  if (k == 0) throw std::invalid_argument("top_k: k must be >= 1");
  if (index.size() == 0) throw std::invalid_argument("top_k: empty index");
  if (query.size() != index.dim())
    throw std::invalid_argument("top_k: query dimension mismatch");
  double qnorm = l2_norm(query);
  if (qnorm == 0.0) throw std::domain_error("top_k: zero query");

  const size_t n = index.size();
  k = std::min(k, n);

  std::vector<RowScore> kept;
  if (threads <= 1 || n < 2 * threads) {
    kept = scan_range(query, qnorm, index, k, 0, n);
  } else {
    std::vector<std::vector<RowScore>> parts(threads);
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> workers;
    size_t chunk = (n + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      size_t lo = t * chunk;
      size_t hi = std::min(n, lo + chunk);
      if (lo >= hi) break;
      workers.emplace_back([&, t, lo, hi] {
        try {
          parts[t] = scan_range(query, qnorm, index, k, lo, hi);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (auto& w : workers) w.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
    for (auto& p : parts) kept.insert(kept.end(), p.begin(), p.end());
  }

  const auto& ids = index.ids();
  std::sort(kept.begin(), kept.end(), [&](const RowScore& a, const RowScore& b) {
    if (a.score != b.score) return a.score > b.score;
    return ids[a.row] < ids[b.row];
  });
  if (kept.size() > k) kept.resize(k);

  RankedList out;
  out.reserve(kept.size());
  for (const auto& rs : kept) out.push_back({ids[rs.row], rs.score});
  return out;
}

}  // namespace cvre
