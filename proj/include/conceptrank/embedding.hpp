#pragma once

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace conceptrank {

/// Row-major float32 matrix with one row per id.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  /// Throws on count/dim mismatch, non-finite entries, or duplicate ids.
  EmbeddingMatrix(std::size_t dim, std::vector<std::string> ids, std::vector<float> data);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t rows() const noexcept { return ids_.size(); }
  const std::vector<std::string>& ids() const noexcept { return ids_; }
  const std::vector<float>& data() const noexcept { return data_; }

  std::span<const float> row(std::size_t i) const {
    return {data_.data() + i * dim_, dim_};
  }
  /// Returns nullptr-backed empty span when absent.
  std::span<const float> find(std::string_view id) const;
  std::size_t index_of(std::string_view id) const;  // throws UnknownId
  bool contains(std::string_view id) const { return by_id_.count(std::string(id)) > 0; }

 private:
  std::size_t dim_ = 0;
  std::vector<std::string> ids_;
  std::vector<float> data_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

/// Writes `<manifest>` (JSON: dim, count, data_file, ids) and the raw
/// little-endian float32 data file next to it. `data_file` defaults to the
/// manifest stem with a `.bin` extension.
void save_matrix(const EmbeddingMatrix& m, const std::filesystem::path& manifest_path,
                 std::string data_file = {});
EmbeddingMatrix load_matrix(const std::filesystem::path& manifest_path);

/// Cosine similarity accumulated in double. A zero vector yields 0.0.
double cosine(std::span<const float> a, std::span<const float> b);
double dot(std::span<const float> a, std::span<const float> b);
std::vector<float> normalized(std::span<const float> v);

/// Source of vectors for arbitrary strings.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::size_t dim() const = 0;
  /// One row per input, in order.
  virtual std::vector<std::vector<float>> embed(std::span<const std::string> texts) = 0;
  /// Total strings passed to embed() so far.
  std::size_t strings_embedded() const noexcept { return strings_embedded_.load(); }

 protected:
  void count(std::size_t n) { strings_embedded_ += n; }

 private:
  std::atomic<std::size_t> strings_embedded_{0};
};

/// Looks strings up in a precomputed matrix keyed by the string itself.
class FileEmbeddingProvider : public EmbeddingProvider {
 public:
  explicit FileEmbeddingProvider(EmbeddingMatrix matrix) : matrix_(std::move(matrix)) {}
  std::size_t dim() const override { return matrix_.dim(); }
  /// Throws MissingConcepts listing every absent string.
  std::vector<std::vector<float>> embed(std::span<const std::string> texts) override;
  const EmbeddingMatrix& matrix() const noexcept { return matrix_; }

 private:
  EmbeddingMatrix matrix_;
};

/// OpenAI-compatible embeddings endpoint (`<base_url>/embeddings`).
class HttpEmbeddingProvider : public EmbeddingProvider {
 public:
  struct Options {
    std::string base_url;  // e.g. http://localhost:8080/v1
    std::string model;
    std::string api_key;
    std::size_t dim = 0;
    int timeout_seconds = 60;
    int max_retries = 3;
  };
  explicit HttpEmbeddingProvider(Options options) : options_(std::move(options)) {}
  std::size_t dim() const override { return options_.dim; }
  std::vector<std::vector<float>> embed(std::span<const std::string> texts) override;

 private:
  Options options_;
};

/// Canonical concept string -> unit-norm vector.
class ConceptEmbeddingCache {
 public:
  ConceptEmbeddingCache() = default;
  explicit ConceptEmbeddingCache(std::size_t dim) : dim_(dim) {}

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return vectors_.size(); }
  bool contains(std::string_view name) const;
  /// Throws MissingConcepts when absent.
  std::span<const float> at(std::string_view name) const;
  /// Normalizes `v` before storing.
  void insert(const std::string& name, std::span<const float> v);
  const std::map<std::string, std::vector<float>, std::less<>>& entries() const noexcept {
    return vectors_;
  }

  EmbeddingMatrix to_matrix() const;
  static ConceptEmbeddingCache from_matrix(const EmbeddingMatrix& m);

 private:
  std::size_t dim_ = 0;
  std::map<std::string, std::vector<float>, std::less<>> vectors_;
};

/// Embeds every string of `concepts` not yet in `cache` with one batched
/// provider call over the distinct misses.
void embed_concepts(std::span<const std::string> concepts, EmbeddingProvider& provider,
                    ConceptEmbeddingCache& cache);
ConceptEmbeddingCache embed_concepts(std::span<const std::string> concepts,
                                     EmbeddingProvider& provider);

void save_cache(const ConceptEmbeddingCache& cache, const std::filesystem::path& manifest_path);
ConceptEmbeddingCache load_cache(const std::filesystem::path& manifest_path);

}  // namespace conceptrank
