#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "conceptrank/corpus.hpp"
#include "conceptrank/embedding.hpp"

namespace conceptrank {

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

/// Inverted index over "title. abstract" tokens.
class Bm25Index {
 public:
  struct Posting {
    std::uint32_t doc;  // index into doc_ids(), which is sorted by paper id
    std::uint32_t tf;
  };

  Bm25Index(const Corpus& corpus, Bm25Params params = {});

  const Bm25Params& params() const noexcept { return params_; }
  std::size_t doc_count() const noexcept { return doc_ids_.size(); }
  double avg_doc_length() const noexcept { return avg_length_; }
  const std::vector<std::string>& doc_ids() const noexcept { return doc_ids_; }
  const std::vector<std::uint32_t>& doc_lengths() const noexcept { return lengths_; }
  /// Empty when the term is absent.
  std::span<const Posting> postings(const std::string& term) const;
  /// Non-negative Robertson/Sparck-Jones weight: ln(1 + (N - df + 0.5) / (df + 0.5)).
  double idf(std::size_t df) const;

 private:
  Bm25Params params_;
  std::vector<std::string> doc_ids_;
  std::vector<std::uint32_t> lengths_;
  double avg_length_ = 0.0;
  std::unordered_map<std::string, std::vector<Posting>> postings_;
};

/// Every query token contributes, duplicates included. Zero-score documents
/// are excluded.
ScoredList bm25_search(const Bm25Index& index, const Query& query, std::size_t top_n);

/// Exact cosine scan over every row of `docs`.
ScoredList dense_search(const EmbeddingMatrix& docs, std::span<const float> query_vector,
                        const std::string& query_id, std::size_t top_n);

/// Per-document z(bm25) + z(dense) over the union of both lists. A document
/// missing from one list takes that list's minimum score before
/// standardization.
ScoredList hybrid_search(const ScoredList& bm25, const ScoredList& dense, std::size_t top_n);

/// Population z-scores; a zero-variance input maps to all zeros.
std::vector<double> z_scores(std::span<const double> values);

/// Snaps a fused z-score sum to a 1e-9 grid. Rounding noise from rescaled
/// inputs otherwise splits exact ties (a two-document pool sums to 0 +- 1e-16)
/// and lets the id tie-break flip.
double quantize_fused(double score);

/// Maps a query to its dense vector.
class QueryEncoder {
 public:
  virtual ~QueryEncoder() = default;
  virtual std::vector<float> encode(const Query& query) = 0;
};

/// Precomputed query vectors keyed by query id.
class MatrixQueryEncoder : public QueryEncoder {
 public:
  explicit MatrixQueryEncoder(EmbeddingMatrix queries) : queries_(std::move(queries)) {}
  std::vector<float> encode(const Query& query) override;

 private:
  EmbeddingMatrix queries_;
};

/// Embeds `prefix + text` through a provider (instruction-style retrievers
/// use the prefix).
class ProviderQueryEncoder : public QueryEncoder {
 public:
  ProviderQueryEncoder(std::shared_ptr<EmbeddingProvider> provider, std::string prefix = {})
      : provider_(std::move(provider)), prefix_(std::move(prefix)) {}
  std::vector<float> encode(const Query& query) override;

 private:
  std::shared_ptr<EmbeddingProvider> provider_;
  std::string prefix_;
};

enum class RetrieverKind { bm25, dense, hybrid };
RetrieverKind parse_retriever_kind(const std::string& name);
std::string to_string(RetrieverKind kind);

/// A first-stage ranker producing s_base.
class Retriever {
 public:
  virtual ~Retriever() = default;
  virtual ScoredList search(const Query& query, std::size_t top_n) = 0;
};

class Bm25Retriever : public Retriever {
 public:
  explicit Bm25Retriever(std::shared_ptr<const Bm25Index> index) : index_(std::move(index)) {}
  ScoredList search(const Query& query, std::size_t top_n) override {
    return bm25_search(*index_, query, top_n);
  }

 private:
  std::shared_ptr<const Bm25Index> index_;
};

class DenseRetriever : public Retriever {
 public:
  /// Throws UnknownId if a corpus paper has no row in `docs`.
  DenseRetriever(const Corpus& corpus, std::shared_ptr<const EmbeddingMatrix> docs,
                 std::shared_ptr<QueryEncoder> encoder);
  ScoredList search(const Query& query, std::size_t top_n) override;

 private:
  std::shared_ptr<const EmbeddingMatrix> docs_;
  std::shared_ptr<QueryEncoder> encoder_;
};

class HybridRetriever : public Retriever {
 public:
  HybridRetriever(std::shared_ptr<Bm25Retriever> bm25, std::shared_ptr<DenseRetriever> dense)
      : bm25_(std::move(bm25)), dense_(std::move(dense)) {}
  ScoredList search(const Query& query, std::size_t top_n) override;

 private:
  std::shared_ptr<Bm25Retriever> bm25_;
  std::shared_ptr<DenseRetriever> dense_;
};

}  // namespace conceptrank
