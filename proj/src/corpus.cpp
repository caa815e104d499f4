#include "conceptrank/corpus.hpp"

#include <algorithm>
#include <charconv>

#include "conceptrank/errors.hpp"
#include "conceptrank/io.hpp"
#include "conceptrank/text.hpp"
#include "json.hpp"

namespace conceptrank {

using nlohmann::json;

std::string Paper::text() const {
  if (abstract.empty()) return title;
  if (title.empty()) return abstract;
  return title + ". " + abstract;
}

Corpus::Corpus(std::vector<Paper> papers) : papers_(std::move(papers)) {
  by_id_.reserve(papers_.size());
  for (std::size_t i = 0; i < papers_.size(); ++i) {
    const auto& p = papers_[i];
    if (p.id.empty()) throw ConfigError("paper at position " + std::to_string(i) + " has empty id");
    if (p.title.empty() && p.abstract.empty()) {
      throw ConfigError("paper " + p.id + " has empty title and abstract");
    }
    if (!by_id_.emplace(p.id, i).second) throw DuplicateId(p.id);
  }
}

const Paper* Corpus::find(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  return it == by_id_.end() ? nullptr : &papers_[it->second];
}

LabelSpace::LabelSpace(std::vector<Topic> topics) : topics_(std::move(topics)) {
  by_name_.reserve(topics_.size());
  for (std::size_t i = 0; i < topics_.size(); ++i) {
    auto& t = topics_[i];
    t.name = canonicalize(t.name);
    if (t.name.empty()) throw ConfigError("topic " + t.id + " has empty name");
    if (!by_name_.emplace(t.name, i).second) throw DuplicateTopic(t.name);
  }
}

std::optional<std::size_t> LabelSpace::index_of(std::string_view name) const {
  auto it = by_name_.find(std::string(name));
  if (it == by_name_.end()) return std::nullopt;
  return it->second;
}

const std::set<std::string>* Qrels::find(std::string_view query_id) const {
  auto it = relevant.find(std::string(query_id));
  return it == relevant.end() ? nullptr : &it->second;
}

ScoredList::ScoredList(std::string query_id, std::vector<ScoredEntry> entries)
    : query_id_(std::move(query_id)), entries_(std::move(entries)) {
  std::sort(entries_.begin(), entries_.end(), [](const ScoredEntry& a, const ScoredEntry& b) {
    return ranks_before(a.s_final, a.paper_id, b.s_final, b.paper_id);
  });
  std::vector<std::string_view> ids;
  ids.reserve(entries_.size());
  for (const auto& e : entries_) ids.push_back(e.paper_id);
  std::sort(ids.begin(), ids.end());
  auto dup = std::adjacent_find(ids.begin(), ids.end());
  if (dup != ids.end()) throw DuplicateId(std::string(*dup));
}

std::vector<std::string> ScoredList::ids() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.paper_id);
  return out;
}

void ScoredList::truncate(std::size_t n) {
  if (entries_.size() > n) entries_.resize(n);
}

namespace {

json parse_json_line(const std::filesystem::path& path, std::string_view line, std::size_t n) {
  try {
    auto j = json::parse(line);
    if (!j.is_object()) throw FormatError(path.string(), n, "record is not an object");
    return j;
  } catch (const json::exception& e) {
    throw FormatError(path.string(), n, e.what());
  }
}

std::string required_string(const json& j, const char* key, const std::filesystem::path& path,
                            std::size_t n) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) {
    throw FormatError(path.string(), n, std::string("missing string field \"") + key + "\"");
  }
  return it->get<std::string>();
}

}  // namespace

Corpus load_corpus(const std::filesystem::path& path) {
  std::vector<Paper> papers;
  io::for_each_line(path, [&](std::string_view line, std::size_t n) {
    auto j = parse_json_line(path, line, n);
    Paper p{required_string(j, "id", path, n), required_string(j, "title", path, n),
            required_string(j, "abstract", path, n)};
    if (p.id.empty()) throw FormatError(path.string(), n, "empty id");
    papers.push_back(std::move(p));
  });
  return Corpus(std::move(papers));
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  auto out = io::open_out(path);
  for (const auto& p : corpus.papers()) {
    out << json{{"id", p.id}, {"title", p.title}, {"abstract", p.abstract}}.dump() << '\n';
  }
}

LabelSpace load_label_space(const std::filesystem::path& path) {
  std::vector<Topic> topics;
  io::for_each_line(path, [&](std::string_view line, std::size_t n) {
    auto tab = line.find('\t');
    if (tab == std::string_view::npos) throw FormatError(path.string(), n, "expected id<TAB>name");
    topics.push_back({std::string(trim(line.substr(0, tab))), std::string(line.substr(tab + 1))});
    if (canonicalize(topics.back().name).empty()) {
      throw FormatError(path.string(), n, "empty topic name");
    }
  });
  if (topics.empty()) throw FormatError(path.string(), 0, "label space is empty");
  return LabelSpace(std::move(topics));
}

void save_label_space(const LabelSpace& labels, const std::filesystem::path& path) {
  auto out = io::open_out(path);
  for (const auto& t : labels.topics()) out << t.id << '\t' << t.name << '\n';
}

std::vector<Query> load_queries(const std::filesystem::path& path) {
  std::vector<Query> queries;
  std::set<std::string> seen;
  io::for_each_line(path, [&](std::string_view line, std::size_t n) {
    auto j = parse_json_line(path, line, n);
    Query q{required_string(j, "id", path, n), required_string(j, "text", path, n)};
    if (trim(q.text).empty()) throw FormatError(path.string(), n, "empty query text");
    if (!seen.insert(q.id).second) throw DuplicateId(q.id);
    queries.push_back(std::move(q));
  });
  return queries;
}

void save_queries(const std::vector<Query>& queries, const std::filesystem::path& path) {
  auto out = io::open_out(path);
  for (const auto& q : queries) out << json{{"id", q.id}, {"text", q.text}}.dump() << '\n';
}

Qrels load_qrels(const std::filesystem::path& path, const Corpus* corpus, bool lenient) {
  Qrels qrels;
  io::for_each_line(path, [&](std::string_view line, std::size_t n) {
    auto fields = split(line, '\t');
    if (fields.size() != 3) throw FormatError(path.string(), n, "expected qid<TAB>docid<TAB>rel");
    auto rel_text = trim(fields[2]);
    long rel = -1;
    auto [ptr, ec] = std::from_chars(rel_text.data(), rel_text.data() + rel_text.size(), rel);
    if (ec != std::errc() || ptr != rel_text.data() + rel_text.size() || rel < 0) {
      throw FormatError(path.string(), n, "relevance must be an integer >= 0");
    }
    std::string qid(trim(fields[0]));
    std::string doc(trim(fields[1]));
    if (corpus && !corpus->contains(doc)) {
      if (!lenient) throw UnknownId(doc);
      ++qrels.dropped_unknown;
      return;
    }
    if (rel > 0) qrels.relevant[qid].insert(doc);
  });
  return qrels;
}

void save_qrels(const Qrels& qrels, const std::filesystem::path& path) {
  auto out = io::open_out(path);
  for (const auto& [qid, docs] : qrels.relevant) {
    for (const auto& d : docs) out << qid << '\t' << d << "\t1\n";
  }
}

void save_scored_lists(const std::vector<ScoredList>& lists, const std::filesystem::path& path) {
  auto out = io::open_out(path);
  for (const auto& list : lists) {
    json entries = json::array();
    for (const auto& e : list.entries()) {
      json je{{"id", e.paper_id}, {"s_base", e.s_base}, {"s_final", e.s_final}};
      je["s_sem"] = e.s_sem ? json(*e.s_sem) : json(nullptr);
      entries.push_back(std::move(je));
    }
    out << json{{"query_id", list.query_id()}, {"entries", std::move(entries)}}.dump() << '\n';
  }
}

std::vector<ScoredList> load_scored_lists(const std::filesystem::path& path) {
  std::vector<ScoredList> lists;
  io::for_each_line(path, [&](std::string_view line, std::size_t n) {
    auto j = parse_json_line(path, line, n);
    std::vector<ScoredEntry> entries;
    try {
      for (const auto& je : j.at("entries")) {
        ScoredEntry e;
        e.paper_id = je.at("id").get<std::string>();
        e.s_base = je.at("s_base").get<double>();
        e.s_final = je.at("s_final").get<double>();
        if (je.contains("s_sem") && !je["s_sem"].is_null()) e.s_sem = je["s_sem"].get<double>();
        entries.push_back(std::move(e));
      }
      lists.emplace_back(j.at("query_id").get<std::string>(), std::move(entries));
    } catch (const json::exception& e) {
      throw FormatError(path.string(), n, e.what());
    }
  });
  return lists;
}

}  // namespace conceptrank
