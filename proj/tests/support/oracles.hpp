#pragma once

// Independent reference implementations. Nothing here calls into the library
// except for plain data types, so a shared bug cannot hide behind itself.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;

inline std::vector<std::string> tokens(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text + " ") {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      cur += static_cast<char>(std::tolower(c));
    } else {
      if (cur.size() >= 2) out.push_back(cur);
      cur.clear();
    }
  }
  return out;
}

/// Textbook BM25 with the non-negative idf, one score per document.
inline std::vector<double> bm25(const std::vector<std::string>& docs, const std::string& query,
                                double k1 = 1.2, double b = 0.75) {
  std::vector<std::vector<std::string>> toks;
  double total = 0;
  for (const auto& d : docs) {
    toks.push_back(tokens(d));
    total += static_cast<double>(toks.back().size());
  }
  const double N = static_cast<double>(docs.size());
  const double avgdl = total / N;
  std::vector<double> scores(docs.size(), 0.0);
  for (const auto& term : tokens(query)) {
    double df = 0;
    for (const auto& t : toks) df += std::count(t.begin(), t.end(), term) > 0 ? 1 : 0;
    const double idf = std::log(1.0 + (N - df + 0.5) / (df + 0.5));
    for (std::size_t i = 0; i < docs.size(); ++i) {
      const double tf = static_cast<double>(std::count(toks[i].begin(), toks[i].end(), term));
      const double len = static_cast<double>(toks[i].size());
      scores[i] += idf * tf * (k1 + 1) / (tf + k1 * (1 - b + b * len / avgdl));
    }
  }
  return scores;
}

inline double cos(const Vec& a, const Vec& b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0 || bb == 0) return 0;
  return ab / std::sqrt(aa * bb);
}

/// Mean over query vectors of the best cosine against the document vectors.
inline double maxsim(const std::vector<Vec>& q, const std::vector<Vec>& d) {
  if (d.empty()) return 0;
  double sum = 0;
  for (const auto& qv : q) {
    double best = -2;
    for (const auto& dv : d) best = std::max(best, cos(qv, dv));
    sum += best;
  }
  return sum / static_cast<double>(q.size());
}

inline std::vector<double> z(const std::vector<double>& x) {
  double mean = 0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double var = 0;
  for (double v : x) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(x.size()));
  std::vector<double> out;
  for (double v : x) out.push_back(sd == 0 ? 0 : (v - mean) / sd);
  return out;
}

/// Union of two score maps fused by z-sum, missing entries at the list minimum.
/// Returns ids in final order (score desc, id asc).
inline std::vector<std::string> zsum_order(const std::map<std::string, double>& a,
                                           const std::map<std::string, double>& b) {
  std::set<std::string> ids;
  for (const auto& [k, v] : a) ids.insert(k);
  for (const auto& [k, v] : b) ids.insert(k);
  auto min_of = [](const std::map<std::string, double>& m) {
    double lo = INFINITY;
    for (const auto& [k, v] : m) lo = std::min(lo, v);
    return lo;
  };
  const double amin = min_of(a), bmin = min_of(b);
  std::vector<std::string> order(ids.begin(), ids.end());
  std::vector<double> av, bv;
  for (const auto& id : order) {
    av.push_back(a.count(id) ? a.at(id) : amin);
    bv.push_back(b.count(id) ? b.at(id) : bmin);
  }
  const auto za = z(av), zb = z(bv);
  std::map<std::string, double> fused;
  for (std::size_t i = 0; i < order.size(); ++i) fused[order[i]] = za[i] + zb[i];
  std::stable_sort(order.begin(), order.end(), [&](const std::string& x, const std::string& y) {
    if (fused[x] != fused[y]) return fused[x] > fused[y];
    return x < y;
  });
  return order;
}

/// Unweighted binary cross-entropy of p = sigma(exp(t^T W d)) over every
/// (doc, topic) pair, written with naive loops.
inline double plain_bce(const std::vector<std::vector<double>>& W,
                        const std::vector<Vec>& topics, const std::vector<Vec>& docs,
                        const std::vector<std::set<std::size_t>>& positives) {
  const std::size_t dim = W.size();
  double loss = 0;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    for (std::size_t t = 0; t < topics.size(); ++t) {
      double zval = 0;
      for (std::size_t r = 0; r < dim; ++r)
        for (std::size_t c = 0; c < dim; ++c) zval += topics[t][r] * W[r][c] * docs[i][c];
      // log sigma(a) = -log(1 + e^-a) and log(1 - sigma(a)) = -log(1 + e^a),
      // written out so that 1 - p never cancels.
      const double a = std::exp(zval);
      loss += positives[i].count(t) ? std::log1p(std::exp(-a)) : std::log1p(std::exp(a));
    }
  }
  return loss;
}

inline double recall(const std::vector<std::string>& ranking, const std::set<std::string>& rel,
                     std::size_t K) {
  std::size_t hit = 0;
  for (std::size_t i = 0; i < std::min(K, ranking.size()); ++i) hit += rel.count(ranking[i]);
  return static_cast<double>(hit) / static_cast<double>(rel.size());
}

}  // namespace oracle

namespace testing_support {

/// A fresh directory removed on scope exit.
class TempDir {
 public:
  TempDir() {
    static std::mt19937_64 gen{std::random_device{}()};
    path_ = std::filesystem::temp_directory_path() /
            ("conceptrank_test_" + std::to_string(gen()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace testing_support
