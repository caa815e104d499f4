#include "conceptrank/semantic_index.hpp"

#include <algorithm>
#include <exception>
#include <set>
#include <thread>

#include "conceptrank/errors.hpp"
#include "conceptrank/io.hpp"
#include "conceptrank/text.hpp"
#include "json.hpp"

namespace conceptrank {

using nlohmann::json;

std::vector<std::string> IndexEntry::concepts() const {
  std::vector<std::string> out;
  std::set<std::string_view> seen;
  for (const auto* list : {&topics, &phrases}) {
    for (const auto& c : *list) {
      if (seen.insert(c).second) out.push_back(c);
    }
  }
  return out;
}

void SemanticIndex::add(IndexEntry entry) {
  if (auto it = entries_.find(entry.paper_id); it != entries_.end()) {
    for (const auto& c : it->second.concepts()) {
      auto df = df_.find(c);
      if (--df->second == 0) df_.erase(df);
    }
    entries_.erase(it);
  }
  for (const auto& c : entry.concepts()) ++df_[c];
  auto id = entry.paper_id;
  entries_.emplace(std::move(id), std::move(entry));
}

const IndexEntry* SemanticIndex::find(std::string_view paper_id) const {
  auto it = entries_.find(paper_id);
  return it == entries_.end() ? nullptr : &it->second;
}

std::vector<std::string> SemanticIndex::vocabulary() const {
  std::vector<std::string> out;
  out.reserve(df_.size());
  for (const auto& [c, n] : df_) out.push_back(c);
  return out;
}

void SemanticIndex::validate(const LabelSpace& labels) const {
  for (const auto& [id, entry] : entries_) {
    for (const auto& t : entry.topics) {
      if (!labels.contains(t)) throw UnknownId(t);
    }
  }
}

void append_index_entry(std::ostream& out, const IndexEntry& entry) {
  out << json{{"paper_id", entry.paper_id}, {"topics", entry.topics}, {"phrases", entry.phrases}}
             .dump()
      << '\n';
}

void save_index(const SemanticIndex& index, const std::filesystem::path& path) {
  auto out = io::open_out(path);
  for (const auto& [id, entry] : index.entries()) append_index_entry(out, entry);
}

SemanticIndex load_index(const std::filesystem::path& path, bool tolerate_torn_tail) {
  std::vector<std::pair<std::size_t, std::string>> lines;
  io::for_each_line(path, [&](std::string_view line, std::size_t n) {
    lines.emplace_back(n, std::string(line));
  });
  SemanticIndex index;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto& [n, line] = lines[i];
    try {
      auto j = json::parse(line);
      IndexEntry e;
      e.paper_id = j.at("paper_id").get<std::string>();
      for (const auto& t : j.at("topics")) e.topics.push_back(canonicalize(t.get<std::string>()));
      for (const auto& p : j.at("phrases")) e.phrases.push_back(canonicalize(p.get<std::string>()));
      index.add(std::move(e));
    } catch (const json::exception& e) {
      if (tolerate_torn_tail && i + 1 == lines.size()) break;
      throw FormatError(path.string(), n, e.what());
    }
  }
  return index;
}

namespace {

std::size_t common_prefix(std::string_view a, std::string_view b) {
  std::size_t n = 0;
  while (n < a.size() && n < b.size() && a[n] == b[n]) ++n;
  return n;
}

/// Exact match, or a shared stem of at least 5 characters that covers all but
/// the last 3 characters of the shorter word ("hallucinated"/"hallucination").
bool tokens_match(std::string_view a, std::string_view b) {
  if (a == b) return true;
  const auto prefix = common_prefix(a, b);
  const auto shorter = std::min(a.size(), b.size());
  return prefix >= 5 && prefix + 3 >= shorter;
}

}  // namespace

bool phrase_supported(std::string_view phrase, std::string_view paper_text, PhraseCheck check) {
  if (check == PhraseCheck::strict) {
    const auto canon = canonicalize(phrase);
    return !canon.empty() && canonicalize(paper_text).find(canon) != std::string::npos;
  }
  const auto phrase_tokens = tokenize(phrase);
  if (phrase_tokens.empty()) return false;
  const auto text_tokens = tokenize(paper_text);
  const std::set<std::string> vocab(text_tokens.begin(), text_tokens.end());
  return std::all_of(phrase_tokens.begin(), phrase_tokens.end(), [&](const std::string& t) {
    if (vocab.count(t)) return true;
    return std::any_of(vocab.begin(), vocab.end(),
                       [&](const std::string& v) { return tokens_match(t, v); });
  });
}

std::string index_prompt_paper(const Paper& paper, const std::vector<TopicScore>& candidates) {
  std::string out = paper.text();
  out += "\n\nCandidate topics: ";
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (i) out += ", ";
    out += candidates[i].topic;
  }
  return out;
}

EntryBuild build_entry(const Paper& paper, const std::vector<TopicScore>& candidates,
                       LlmProvider& provider, CallLedger& ledger, const EntryOptions& options) {
  if (candidates.empty()) throw ConfigError("no candidate topics for paper " + paper.id);
  EntryBuild result;
  result.entry.paper_id = paper.id;

  auto fallback_topics = [&] {
    std::vector<std::string> topics;
    for (std::size_t i = 0; i < candidates.size() && i < options.fallback_topics; ++i) {
      topics.push_back(candidates[i].topic);
    }
    return topics;
  };

  const auto prompt =
      render_prompt(index_build_template(), {{"d", index_prompt_paper(paper, candidates)}});
  const auto response = complete(provider, prompt, ledger);

  std::vector<std::string> topics;
  std::vector<std::string> phrases;
  try {
    topics = parse_tagged_list(response.text, "top");
    phrases = parse_tagged_list(response.text, "kp");
  } catch (const ParseFailure&) {
    result.parse_failure = true;
    result.fallback = true;
    result.entry.topics = fallback_topics();
    return result;
  }

  std::set<std::string_view> allowed;
  for (const auto& c : candidates) allowed.insert(c.topic);
  for (auto& t : topics) {
    if (!allowed.count(t)) {
      ++result.topic_violations;
      continue;
    }
    if (result.entry.topics.size() < options.max_topics) result.entry.topics.push_back(t);
  }
  if (result.entry.topics.empty()) {
    result.fallback = true;
    result.entry.topics = fallback_topics();
  }

  const auto text = paper.text();
  for (auto& p : phrases) {
    if (!phrase_supported(p, text, options.phrase_check)) {
      ++result.phrases_dropped;
      continue;
    }
    if (result.entry.phrases.size() < options.max_phrases) result.entry.phrases.push_back(p);
  }
  return result;
}

void save_build_report(const BuildReport& r, const std::filesystem::path& path) {
  json j{{"papers", r.papers},
         {"built", r.built},
         {"resumed", r.resumed},
         {"llm_calls", r.llm_calls},
         {"topic_violations", r.topic_violations},
         {"phrases_dropped", r.phrases_dropped},
         {"fallbacks", r.fallbacks},
         {"parse_failures", r.parse_failures}};
  io::open_out(path) << j.dump(1) << '\n';
}

CandidateSource classifier_candidates(const TopicClassifier& classifier,
                                      const EmbeddingMatrix& paper_embeddings) {
  return [&classifier, &paper_embeddings](const Paper& paper, std::size_t m) {
    auto row = paper_embeddings.find(paper.id);
    if (row.empty()) throw UnknownId(paper.id);
    return classifier.candidates(row, m);
  };
}

BuildResult build_index(const Corpus& corpus, const CandidateSource& candidates,
                        LlmProvider& provider, const BuildOptions& options) {
  if (corpus.empty()) throw ConfigError("cannot build an index over an empty corpus");
  BuildResult result;
  result.report.papers = corpus.size();

  std::optional<std::ofstream> sink;
  if (options.index_path) {
    if (std::filesystem::exists(*options.index_path)) {
      result.index = load_index(*options.index_path, /*tolerate_torn_tail=*/true);
      // Rewrite without a torn tail before appending.
      save_index(result.index, *options.index_path);
      result.report.resumed = result.index.size();
    }
    sink = io::open_out(*options.index_path, std::ios::out | std::ios::app);
  }

  std::vector<const Paper*> todo;
  for (const auto& p : corpus.papers()) {
    if (!result.index.find(p.id)) todo.push_back(&p);
  }

  CallLedger ledger;
  const std::size_t width = std::max<std::size_t>(1, options.max_in_flight);
  for (std::size_t start = 0; start < todo.size(); start += width) {
    const auto count = std::min(width, todo.size() - start);
    std::vector<std::optional<EntryBuild>> built(count);
    std::vector<std::exception_ptr> failures(count);
    auto work = [&](std::size_t i) {
      try {
        const Paper& paper = *todo[start + i];
        built[i] = build_entry(paper, candidates(paper, options.m), provider, ledger,
                               options.entry);
      } catch (...) {
        failures[i] = std::current_exception();
      }
    };
    if (count == 1) {
      work(0);
    } else {
      std::vector<std::jthread> workers;
      for (std::size_t i = 0; i < count; ++i) workers.emplace_back(work, i);
    }
    for (std::size_t i = 0; i < count; ++i) {
      if (!built[i]) continue;
      auto& b = *built[i];
      result.report.topic_violations += b.topic_violations;
      result.report.phrases_dropped += b.phrases_dropped;
      result.report.fallbacks += b.fallback ? 1 : 0;
      result.report.parse_failures += b.parse_failure ? 1 : 0;
      ++result.report.built;
      if (sink) {
        append_index_entry(*sink, b.entry);
        sink->flush();
      }
      result.index.add(std::move(b.entry));
    }
    for (auto& f : failures) {
      if (f) std::rethrow_exception(f);
    }
  }
  result.report.llm_calls = ledger.snapshot().llm_calls;
  return result;
}

ConceptEmbeddingCache concept_vectors(const SemanticIndex& index, EmbeddingProvider& provider) {
  const auto vocab = index.vocabulary();
  ConceptEmbeddingCache cache(provider.dim());
  embed_concepts(vocab, provider, cache);
  return cache;
}

}  // namespace conceptrank
