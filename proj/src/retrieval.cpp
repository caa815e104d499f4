#include "conceptrank/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "conceptrank/errors.hpp"
#include "conceptrank/text.hpp"

namespace conceptrank {

namespace {

/// Keeps the best `top_n` entries under the standard ranking order.
ScoredList top_entries(std::string query_id, std::vector<ScoredEntry> entries,
                       std::size_t top_n) {
  auto before = [](const ScoredEntry& a, const ScoredEntry& b) {
    return ranks_before(a.s_final, a.paper_id, b.s_final, b.paper_id);
  };
  if (entries.size() > top_n) {
    std::nth_element(entries.begin(), entries.begin() + static_cast<std::ptrdiff_t>(top_n),
                     entries.end(), before);
    entries.resize(top_n);
  }
  return ScoredList(std::move(query_id), std::move(entries));
}

}  // namespace

Bm25Index::Bm25Index(const Corpus& corpus, Bm25Params params) : params_(params) {
  std::vector<const Paper*> papers;
  papers.reserve(corpus.size());
  for (const auto& p : corpus.papers()) papers.push_back(&p);
  std::sort(papers.begin(), papers.end(),
            [](const Paper* a, const Paper* b) { return a->id < b->id; });

  doc_ids_.reserve(papers.size());
  lengths_.reserve(papers.size());
  double total = 0.0;
  for (std::uint32_t doc = 0; doc < papers.size(); ++doc) {
    doc_ids_.push_back(papers[doc]->id);
    auto terms = tokenize(papers[doc]->text());
    lengths_.push_back(static_cast<std::uint32_t>(terms.size()));
    total += static_cast<double>(terms.size());
    std::sort(terms.begin(), terms.end());
    for (std::size_t i = 0; i < terms.size();) {
      std::size_t j = i;
      while (j < terms.size() && terms[j] == terms[i]) ++j;
      postings_[terms[i]].push_back({doc, static_cast<std::uint32_t>(j - i)});
      i = j;
    }
  }
  avg_length_ = papers.empty() ? 0.0 : total / static_cast<double>(papers.size());
}

std::span<const Bm25Index::Posting> Bm25Index::postings(const std::string& term) const {
  auto it = postings_.find(term);
  if (it == postings_.end()) return {};
  return it->second;
}

double Bm25Index::idf(std::size_t df) const {
  const double n = static_cast<double>(doc_count());
  const double d = static_cast<double>(df);
  return std::log(1.0 + (n - d + 0.5) / (d + 0.5));
}

ScoredList bm25_search(const Bm25Index& index, const Query& query, std::size_t top_n) {
  const auto& [k1, b] = index.params();
  std::vector<double> scores(index.doc_count(), 0.0);
  const double avg = index.avg_doc_length();
  for (const auto& term : tokenize(query.text)) {
    auto postings = index.postings(term);
    if (postings.empty()) continue;
    const double idf = index.idf(postings.size());
    for (const auto& [doc, tf] : postings) {
      const double len_norm =
          avg > 0.0 ? 1.0 - b + b * static_cast<double>(index.doc_lengths()[doc]) / avg : 1.0;
      const double t = static_cast<double>(tf);
      scores[doc] += idf * t * (k1 + 1.0) / (t + k1 * len_norm);
    }
  }
  std::vector<ScoredEntry> entries;
  for (std::size_t doc = 0; doc < scores.size(); ++doc) {
    if (scores[doc] > 0.0) {
      entries.push_back({index.doc_ids()[doc], scores[doc], std::nullopt, scores[doc]});
    }
  }
  return top_entries(query.id, std::move(entries), top_n);
}

ScoredList dense_search(const EmbeddingMatrix& docs, std::span<const float> query_vector,
                        const std::string& query_id, std::size_t top_n) {
  if (query_vector.size() != docs.dim()) throw DimensionMismatch(docs.dim(), query_vector.size());
  std::vector<ScoredEntry> entries;
  entries.reserve(docs.rows());
  for (std::size_t r = 0; r < docs.rows(); ++r) {
    const double s = cosine(query_vector, docs.row(r));
    entries.push_back({docs.ids()[r], s, std::nullopt, s});
  }
  return top_entries(query_id, std::move(entries), top_n);
}

std::vector<double> z_scores(std::span<const double> values) {
  std::vector<double> z(values.size(), 0.0);
  if (values.empty()) return z;
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / n);
  if (!(sd > 0.0)) return z;
  for (std::size_t i = 0; i < values.size(); ++i) z[i] = (values[i] - mean) / sd;
  return z;
}

double quantize_fused(double score) { return std::round(score * 1e9) / 1e9; }

ScoredList hybrid_search(const ScoredList& bm25, const ScoredList& dense, std::size_t top_n) {
  const std::string& qid = bm25.empty() ? dense.query_id() : bm25.query_id();
  if (bm25.empty() && dense.empty()) return ScoredList(qid, {});

  std::vector<std::string> pool;
  std::unordered_map<std::string, std::size_t> slot;
  auto add = [&](const ScoredList& list) {
    for (const auto& e : list.entries()) {
      if (slot.emplace(e.paper_id, pool.size()).second) pool.push_back(e.paper_id);
    }
  };
  add(bm25);
  add(dense);

  auto column = [&](const ScoredList& list) {
    double floor = 0.0;
    if (!list.empty()) {
      floor = list.entries().front().s_final;
      for (const auto& e : list.entries()) floor = std::min(floor, e.s_final);
    }
    std::vector<double> col(pool.size(), floor);
    for (const auto& e : list.entries()) col[slot[e.paper_id]] = e.s_final;
    return z_scores(col);
  };
  const auto z_bm25 = column(bm25);
  const auto z_dense = column(dense);

  std::vector<ScoredEntry> entries;
  entries.reserve(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const double s = quantize_fused(z_bm25[i] + z_dense[i]);
    entries.push_back({pool[i], s, std::nullopt, s});
  }
  return top_entries(qid, std::move(entries), top_n);
}

std::vector<float> MatrixQueryEncoder::encode(const Query& query) {
  auto row = queries_.find(query.id);
  if (row.empty()) throw UnknownId(query.id);
  return {row.begin(), row.end()};
}

std::vector<float> ProviderQueryEncoder::encode(const Query& query) {
  std::vector<std::string> text{prefix_ + query.text};
  return provider_->embed(text).at(0);
}

RetrieverKind parse_retriever_kind(const std::string& name) {
  if (name == "bm25") return RetrieverKind::bm25;
  if (name == "dense") return RetrieverKind::dense;
  if (name == "hybrid") return RetrieverKind::hybrid;
  throw ConfigError("unknown retriever kind: " + name);
}

std::string to_string(RetrieverKind kind) {
  switch (kind) {
    case RetrieverKind::bm25: return "bm25";
    case RetrieverKind::dense: return "dense";
    case RetrieverKind::hybrid: return "hybrid";
  }
  return "?";
}

DenseRetriever::DenseRetriever(const Corpus& corpus, std::shared_ptr<const EmbeddingMatrix> docs,
                               std::shared_ptr<QueryEncoder> encoder)
    : docs_(std::move(docs)), encoder_(std::move(encoder)) {
  for (const auto& p : corpus.papers()) {
    if (!docs_->contains(p.id)) throw UnknownId(p.id);
  }
}

ScoredList DenseRetriever::search(const Query& query, std::size_t top_n) {
  return dense_search(*docs_, encoder_->encode(query), query.id, top_n);
}

ScoredList HybridRetriever::search(const Query& query, std::size_t top_n) {
  return hybrid_search(bm25_->search(query, top_n), dense_->search(query, top_n), top_n);
}

}  // namespace conceptrank
