#include "cvre/gallery.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace cvre {

namespace {

constexpr char kMagic[4] = {'C', 'V', 'R', 'E'};
constexpr uint16_t kVersion = 1;

template <typename T>
void write_le(std::ostream& os, T value) {
  unsigned char buf[sizeof(T)];
  for (size_t i = 0; i < sizeof(T); ++i)
    buf[i] = static_cast<unsigned char>((static_cast<uint64_t>(value) >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T read_le(std::istream& is) {
  unsigned char buf[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(buf), sizeof(T)))
    throw std::runtime_error("gallery: truncated file");
  uint64_t v = 0;
  for (size_t i = 0; i < sizeof(T); ++i) v |= static_cast<uint64_t>(buf[i]) << (8 * i);
  return static_cast<T>(v);
}

void write_f32_le(std::ostream& os, float f) {
  uint32_t bits;
  std::memcpy(&bits, &f, sizeof(bits));
  write_le<uint32_t>(os, bits);
}

float read_f32_le(std::istream& is) {
  uint32_t bits = read_le<uint32_t>(is);
  float f;
  std::memcpy(&f, &bits, sizeof(f));
  return f;
}

bool row_is_unit(const float* v, size_t d) {
  double n = l2_norm_f64(v, d);
  return std::fabs(n - 1.0) <= 1e-5;
}

}  // namespace

GalleryIndex GalleryIndex::build(const std::vector<EmbeddingRecord>& records,
                                 bool normalize) {
  if (records.empty()) throw std::invalid_argument("gallery: empty source");
  GalleryIndex index;
  index.dim_ = records.front().vec.size();
  if (index.dim_ == 0)
    throw std::invalid_argument("gallery: zero-dimensional record " + records.front().id);
  index.ids_.reserve(records.size());
  index.data_.reserve(records.size() * index.dim_);
  for (const auto& rec : records) {
    if (rec.vec.size() != index.dim_)
      throw std::invalid_argument("gallery: dimension mismatch for id " + rec.id);
    for (float v : rec.vec)
      if (!std::isfinite(v))
        throw std::invalid_argument("gallery: non-finite value for id " + rec.id);
    if (index.row_of_.count(rec.id))
      throw std::invalid_argument("gallery: duplicate id " + rec.id);
    index.row_of_.emplace(rec.id, index.ids_.size());
    index.ids_.push_back(rec.id);
    if (normalize) {
      double norm = l2_norm(rec.vec);
      if (norm == 0.0)
        throw std::invalid_argument("gallery: cannot normalize zero row " + rec.id);
      for (float v : rec.vec)
        index.data_.push_back(static_cast<float>(static_cast<double>(v) / norm));
    } else {
      index.data_.insert(index.data_.end(), rec.vec.begin(), rec.vec.end());
    }
  }
  index.normalized_ = normalize;
  return index;
}

size_t GalleryIndex::row_of(const std::string& id) const {
  auto it = row_of_.find(id);
  if (it == row_of_.end()) throw std::invalid_argument("gallery: unknown id " + id);
  return it->second;
}

Embedding GalleryIndex::lookup(const std::string& id) const {
  auto r = row(row_of(id));
  return Embedding(r.begin(), r.end());
}

void GalleryIndex::rebuild_map() {
  row_of_.clear();
  for (size_t i = 0; i < ids_.size(); ++i) {
    if (!row_of_.emplace(ids_[i], i).second)
      throw std::runtime_error("gallery: duplicate id " + ids_[i]);
  }
}

void GalleryIndex::save_binary(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("gallery: cannot open " + path.string());
  os.write(kMagic, 4);
  write_le<uint16_t>(os, kVersion);
  write_le<uint32_t>(os, static_cast<uint32_t>(dim_));
  write_le<uint64_t>(os, static_cast<uint64_t>(size()));
  for (float f : data_) write_f32_le(os, f);
  for (const auto& id : ids_) {
    write_le<uint32_t>(os, static_cast<uint32_t>(id.size()));
    os.write(id.data(), static_cast<std::streamsize>(id.size()));
  }
  if (!os) throw std::runtime_error("gallery: write failed for " + path.string());
}

GalleryIndex GalleryIndex::load_binary(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("gallery: cannot open " + path.string());
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("gallery: bad magic in " + path.string());
  uint16_t version = read_le<uint16_t>(is);
  if (version > kVersion)
    throw std::runtime_error("gallery: unsupported version " + std::to_string(version));
  GalleryIndex index;
  index.dim_ = read_le<uint32_t>(is);
  uint64_t count = read_le<uint64_t>(is);
  index.data_.resize(count * index.dim_);
  for (auto& f : index.data_) f = read_f32_le(is);
  index.ids_.reserve(count);
  for (uint64_t i = 0; i < count; ++i) {
    uint32_t len = read_le<uint32_t>(is);
    std::string id(len, '\0');
    if (!is.read(id.data(), len)) throw std::runtime_error("gallery: truncated file");
    index.ids_.push_back(std::move(id));
  }
  index.rebuild_map();
  // The format carries no normalized flag; detect from the rows.
  index.normalized_ = true;
  for (size_t i = 0; i < index.size(); ++i) {
    if (!row_is_unit(index.row(i).data(), index.dim_)) {
      index.normalized_ = false;
      break;
    }
  }
  return index;
}

void GalleryIndex::save_text(const std::filesystem::path& path) const {
  std::vector<EmbeddingRecord> records;
  records.reserve(size());
  for (size_t i = 0; i < size(); ++i) {
    auto r = row(i);
    records.push_back({ids_[i], Embedding(r.begin(), r.end())});
  }
  write_embedding_records(path, records);
}

GalleryIndex GalleryIndex::load_text(const std::filesystem::path& path, bool normalize) {
  return build(read_embedding_records(path), normalize);
}

GalleryIndex GalleryIndex::load_auto(const std::filesystem::path& path, bool normalize) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("gallery: cannot open " + path.string());
  char magic[4] = {0, 0, 0, 0};
  is.read(magic, 4);
  is.close();
  if (std::memcmp(magic, kMagic, 4) == 0) return load_binary(path);
  return load_text(path, normalize);
}

std::vector<EmbeddingRecord> read_embedding_records(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("records: cannot open " + path.string());
  std::vector<EmbeddingRecord> records;
  std::string line;
  size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error("records: malformed line " + std::to_string(lineno) +
                               " in " + path.string() + ": " + e.what());
    }
    if (!j.contains("id") || !j.contains("vec"))
      throw std::runtime_error("records: missing id/vec at line " + std::to_string(lineno) +
                               " in " + path.string());
    EmbeddingRecord rec;
    rec.id = j.at("id").get<std::string>();
    for (const auto& v : j.at("vec")) rec.vec.push_back(v.get<float>());
    records.push_back(std::move(rec));
  }
  return records;
}

void write_embedding_records(const std::filesystem::path& path,
                             const std::vector<EmbeddingRecord>& records) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("records: cannot open " + path.string());
  for (const auto& rec : records) {
    nlohmann::json j;
    j["id"] = rec.id;
    j["vec"] = rec.vec;
    os << j.dump() << "\n";
  }
  if (!os) throw std::runtime_error("records: write failed for " + path.string());
}

}  // namespace cvre
