#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "cvre/embedding.hpp"

namespace cvre {

struct EmbeddingRecord {
  std::string id;
  Embedding vec;
};

// Immutable id table + row-major embedding matrix. Rows keep ingestion
// order; lookups go through an id -> row map.
class GalleryIndex {
 public:
  GalleryIndex() = default;

  static GalleryIndex build(const std::vector<EmbeddingRecord>& records,
                            bool normalize = true);

  size_t size() const { return ids_.size(); }
  size_t dim() const { return dim_; }
  bool normalized() const { return normalized_; }

  const std::vector<std::string>& ids() const { return ids_; }
  const std::string& id_at(size_t row) const { return ids_[row]; }
  std::span<const float> row(size_t i) const {
    return {data_.data() + i * dim_, dim_};
  }
  std::span<const float> data() const { return {data_.data(), data_.size()}; }

  bool contains(const std::string& id) const { return row_of_.count(id) != 0; }
  size_t row_of(const std::string& id) const;  // throws on unknown id
  Embedding lookup(const std::string& id) const;

  void save_binary(const std::filesystem::path& path) const;
  static GalleryIndex load_binary(const std::filesystem::path& path);
  void save_text(const std::filesystem::path& path) const;
  static GalleryIndex load_text(const std::filesystem::path& path, bool normalize = true);
  // Dispatches on the file's leading magic bytes.
  static GalleryIndex load_auto(const std::filesystem::path& path, bool normalize = true);

 private:
  std::vector<std::string> ids_;
  std::vector<float> data_;  // size() * dim_, row-major
  size_t dim_ = 0;
  bool normalized_ = false;
  std::unordered_map<std::string, size_t> row_of_;

  void rebuild_map();
};

// Text format, one record per line: {"id": "...", "vec": [ ... ]}
std::vector<EmbeddingRecord> read_embedding_records(const std::filesystem::path& path);
void write_embedding_records(const std::filesystem::path& path,
                             const std::vector<EmbeddingRecord>& records);

}  // namespace cvre
