#include "conceptrank/embedding.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <set>

#include "conceptrank/errors.hpp"
#include "conceptrank/io.hpp"
#include "http_client.hpp"
#include "json.hpp"

namespace conceptrank {

using nlohmann::json;

static_assert(sizeof(float) == 4);

EmbeddingMatrix::EmbeddingMatrix(std::size_t dim, std::vector<std::string> ids,
                                 std::vector<float> data)
    : dim_(dim), ids_(std::move(ids)), data_(std::move(data)) {
  if (dim_ == 0) throw ConfigError("embedding dim must be positive");
  if (data_.size() != ids_.size() * dim_) {
    throw SizeMismatch(ids_.size() * dim_ * sizeof(float), data_.size() * sizeof(float));
  }
  for (std::size_t r = 0; r < ids_.size(); ++r) {
    for (float x : row(r)) {
      if (!std::isfinite(x)) throw NonFiniteValue(r);
    }
  }
  by_id_.reserve(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (!by_id_.emplace(ids_[i], i).second) throw DuplicateId(ids_[i]);
  }
}

std::span<const float> EmbeddingMatrix::find(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  if (it == by_id_.end()) return {};
  return row(it->second);
}

std::size_t EmbeddingMatrix::index_of(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  if (it == by_id_.end()) throw UnknownId(std::string(id));
  return it->second;
}

namespace {

std::uint32_t to_little(std::uint32_t x) {
  if constexpr (std::endian::native == std::endian::big) {
    return ((x & 0xffu) << 24) | ((x & 0xff00u) << 8) | ((x >> 8) & 0xff00u) | (x >> 24);
  }
  return x;
}

}  // namespace

void save_matrix(const EmbeddingMatrix& m, const std::filesystem::path& manifest_path,
                 std::string data_file) {
  if (data_file.empty()) data_file = manifest_path.stem().string() + ".bin";
  json manifest{{"dim", m.dim()}, {"count", m.rows()}, {"data_file", data_file}, {"ids", m.ids()}};
  io::open_out(manifest_path) << manifest.dump(1) << '\n';

  auto out = io::open_out(manifest_path.parent_path() / data_file,
                          std::ios::out | std::ios::trunc | std::ios::binary);
  std::vector<std::uint32_t> words(m.data().size());
  std::memcpy(words.data(), m.data().data(), words.size() * sizeof(float));
  for (auto& w : words) w = to_little(w);
  out.write(reinterpret_cast<const char*>(words.data()),
            static_cast<std::streamsize>(words.size() * sizeof(std::uint32_t)));
  if (!out) throw Error("failed writing " + data_file);
}

EmbeddingMatrix load_matrix(const std::filesystem::path& manifest_path) {
  json manifest;
  try {
    manifest = json::parse(io::read_file(manifest_path));
  } catch (const json::exception& e) {
    throw FormatError(manifest_path.string(), 0, e.what());
  }
  std::size_t dim = 0;
  std::size_t count = 0;
  std::string data_file;
  std::vector<std::string> ids;
  try {
    dim = manifest.at("dim").get<std::size_t>();
    count = manifest.at("count").get<std::size_t>();
    data_file = manifest.at("data_file").get<std::string>();
    ids = manifest.at("ids").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw FormatError(manifest_path.string(), 0, e.what());
  }
  if (ids.size() != count) {
    throw FormatError(manifest_path.string(), 0,
                      "count " + std::to_string(count) + " but " + std::to_string(ids.size()) +
                          " ids");
  }
  const auto data_path = manifest_path.parent_path() / data_file;
  const std::string bytes = io::read_file(data_path);
  const std::size_t expected = dim * count * sizeof(float);
  if (bytes.size() != expected) throw SizeMismatch(expected, bytes.size());

  std::vector<std::uint32_t> words(dim * count);
  std::memcpy(words.data(), bytes.data(), bytes.size());
  for (auto& w : words) w = to_little(w);
  std::vector<float> data(words.size());
  std::memcpy(data.data(), words.data(), bytes.size());
  return EmbeddingMatrix(dim, std::move(ids), std::move(data));
}

double dot(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw DimensionMismatch(a.size(), b.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += double(a[i]) * double(b[i]);
  return s;
}

double cosine(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw DimensionMismatch(a.size(), b.size());
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += double(a[i]) * double(b[i]);
    aa += double(a[i]) * double(a[i]);
    bb += double(b[i]) * double(b[i]);
  }
  if (aa == 0.0 || bb == 0.0) return 0.0;
  return std::clamp(ab / (std::sqrt(aa) * std::sqrt(bb)), -1.0, 1.0);
}

std::vector<float> normalized(std::span<const float> v) {
  double norm = 0.0;
  for (float x : v) norm += double(x) * double(x);
  norm = std::sqrt(norm);
  std::vector<float> out(v.begin(), v.end());
  if (norm == 0.0) return out;
  for (auto& x : out) x = static_cast<float>(double(x) / norm);
  return out;
}

std::vector<std::vector<float>> FileEmbeddingProvider::embed(std::span<const std::string> texts) {
  count(texts.size());
  std::vector<std::string> missing;
  std::vector<std::vector<float>> out;
  out.reserve(texts.size());
  for (const auto& t : texts) {
    auto row = matrix_.find(t);
    if (row.empty()) {
      missing.push_back(t);
      continue;
    }
    out.emplace_back(row.begin(), row.end());
  }
  if (!missing.empty()) throw MissingConcepts(std::move(missing));
  return out;
}

std::vector<std::vector<float>> HttpEmbeddingProvider::embed(std::span<const std::string> texts) {
  count(texts.size());
  if (texts.empty()) return {};
  json body{{"model", options_.model}, {"input", std::vector<std::string>(texts.begin(), texts.end())}};
  detail::HttpRequest req;
  req.base_url = options_.base_url;
  req.path = "/embeddings";
  req.body = body.dump();
  req.bearer_token = options_.api_key;
  req.timeout_seconds = options_.timeout_seconds;
  req.max_retries = options_.max_retries;
  const auto response = json::parse(detail::post_json(req), nullptr, false);
  if (response.is_discarded() || !response.contains("data")) {
    throw TransportError("embedding endpoint returned an unexpected payload");
  }
  std::vector<std::vector<float>> out(texts.size());
  std::size_t seen = 0;
  for (const auto& item : response["data"]) {
    auto index = item.value("index", seen);
    if (index >= out.size()) throw TransportError("embedding index out of range");
    out[index] = item.at("embedding").get<std::vector<float>>();
    if (options_.dim != 0 && out[index].size() != options_.dim) {
      throw DimensionMismatch(options_.dim, out[index].size());
    }
    ++seen;
  }
  if (seen != texts.size()) throw TransportError("embedding endpoint returned too few rows");
  return out;
}

bool ConceptEmbeddingCache::contains(std::string_view name) const {
  return vectors_.find(name) != vectors_.end();
}

std::span<const float> ConceptEmbeddingCache::at(std::string_view name) const {
  auto it = vectors_.find(name);
  if (it == vectors_.end()) throw MissingConcepts({std::string(name)});
  return it->second;
}

void ConceptEmbeddingCache::insert(const std::string& name, std::span<const float> v) {
  if (dim_ == 0) dim_ = v.size();
  if (v.size() != dim_) throw DimensionMismatch(dim_, v.size());
  vectors_[name] = normalized(v);
}

EmbeddingMatrix ConceptEmbeddingCache::to_matrix() const {
  std::vector<std::string> ids;
  std::vector<float> data;
  ids.reserve(vectors_.size());
  data.reserve(vectors_.size() * dim_);
  for (const auto& [name, v] : vectors_) {
    ids.push_back(name);
    data.insert(data.end(), v.begin(), v.end());
  }
  return EmbeddingMatrix(dim_ == 0 ? 1 : dim_, std::move(ids), std::move(data));
}

ConceptEmbeddingCache ConceptEmbeddingCache::from_matrix(const EmbeddingMatrix& m) {
  ConceptEmbeddingCache cache(m.dim());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    cache.vectors_[m.ids()[r]] = std::vector<float>(row.begin(), row.end());
  }
  return cache;
}

void embed_concepts(std::span<const std::string> concepts, EmbeddingProvider& provider,
                    ConceptEmbeddingCache& cache) {
  std::vector<std::string> misses;
  std::set<std::string_view> queued;
  for (const auto& c : concepts) {
    if (cache.contains(c) || !queued.insert(c).second) continue;
    misses.push_back(c);
  }
  if (misses.empty()) return;
  auto vectors = provider.embed(misses);
  for (std::size_t i = 0; i < misses.size(); ++i) cache.insert(misses[i], vectors[i]);
}

ConceptEmbeddingCache embed_concepts(std::span<const std::string> concepts,
                                     EmbeddingProvider& provider) {
  ConceptEmbeddingCache cache(provider.dim());
  embed_concepts(concepts, provider, cache);
  return cache;
}

void save_cache(const ConceptEmbeddingCache& cache, const std::filesystem::path& manifest_path) {
  save_matrix(cache.to_matrix(), manifest_path);
}

ConceptEmbeddingCache load_cache(const std::filesystem::path& manifest_path) {
  return ConceptEmbeddingCache::from_matrix(load_matrix(manifest_path));
}

}  // namespace conceptrank
