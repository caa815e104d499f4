#include "conceptrank/llm.hpp"

#include <cctype>
#include <set>

#include "conceptrank/errors.hpp"
#include "conceptrank/io.hpp"
#include "conceptrank/text.hpp"
#include "http_client.hpp"
#include "json.hpp"

namespace conceptrank {

using nlohmann::json;

namespace {

bool is_name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
}

/// Calls on_text for literal runs and on_name for each `{name}`.
template <typename OnText, typename OnName>
void scan_template(std::string_view text, OnText on_text, OnName on_name) {
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto open = text.find('{', pos);
    if (open == std::string_view::npos) break;
    auto close = open + 1;
    while (close < text.size() && is_name_char(text[close])) ++close;
    if (close < text.size() && text[close] == '}' && close > open + 1) {
      on_text(text.substr(pos, open - pos));
      on_name(text.substr(open + 1, close - open - 1));
      pos = close + 1;
    } else {
      on_text(text.substr(pos, open + 1 - pos));
      pos = open + 1;
    }
  }
  on_text(text.substr(pos));
}

}  // namespace

std::vector<std::string> PromptTemplate::placeholders() const {
  std::vector<std::string> names;
  scan_template(
      text, [](std::string_view) {},
      [&](std::string_view name) {
        for (const auto& n : names) {
          if (n == name) return;
        }
        names.emplace_back(name);
      });
  return names;
}

const PromptTemplate& index_build_template() {
  static const PromptTemplate t{
      TemplateId::index_build,
      "You will receive a paper abstract along with a set of candidate topics for the paper. \n"
      "\n"
      "Your first task is to select the topics that best align with the core theme of the paper.\n"
      "Exclude topics that are too broad or less relevant. \n"
      "\n"
      "Only use the topic names in the candidate set. \n"
      "\n"
      "Your second task is to generate a complete list of key phrases extracted from the paper.\n"
      "\n"
      "Do some rationalization before outputting the list of relevant topics and key phrases.\n"
      "\n"
      "Output format: `<top> topic 1, topic 2, ... </top>\n"
      "<kp>key phrase 1, key phrase 2, ... </kp>'.\n"
      "\n"
      "Paper: {d}\n"};
  return t;
}

const PromptTemplate& core_concepts_template() {
  static const PromptTemplate t{
      TemplateId::core_concepts,
      "You will receive a query for research papers and a ranked list of papers returned by a "
      "retriever.\n"
      "\n"
      "You will also be provided a list of research topics and key terms with their frequencies "
      "that are frequently mentioned by the top-ranked papers returned by the retriever.\n"
      "\n"
      "Your task is to improve the provided retrieval results by selecting a list of topics and "
      "terms that can accurately identify the relevant papers of the query.\n"
      "\n"
      "Make sure your selection is strictly based on the original query and does not contain "
      "repeated concepts.\n"
      "\n"
      "Output format: `<ans>selection 1, selection 2, ...</ans>'.\n"
      "\n"
      "Retriever result: {D0}\n"
      "\n"
      "Candidate topics: {T0}\n"
      "\n"
      "Candidate key terms: {P0}\n"
      "\n"
      "Original Query: {q}\n"};
  return t;
}

const PromptTemplate& core_concepts_no_corpus_template() {
  static const PromptTemplate t{
      TemplateId::core_concepts_no_corpus,
      "You will receive a query for research papers.\n"
      "\n"
      "Your task is to generate a list of research topics and key terms that can accurately "
      "identify the relevant papers of the query.\n"
      "\n"
      "Make sure your selection is strictly based on the original query and does not contain "
      "repeated concepts.\n"
      "\n"
      "Output format: `<ans>selection 1, selection 2, ...</ans>'.\n"
      "\n"
      "Original Query: {q}\n"};
  return t;
}

std::string render_prompt(const PromptTemplate& tmpl,
                          const std::map<std::string, std::string>& bindings) {
  std::string out;
  out.reserve(tmpl.text.size());
  scan_template(
      tmpl.text, [&](std::string_view text) { out.append(text); },
      [&](std::string_view name) {
        auto it = bindings.find(std::string(name));
        if (it == bindings.end()) throw UnboundPlaceholder(std::string(name));
        out.append(it->second);
      });
  return out;
}

std::vector<std::string> parse_tagged_list(std::string_view text, std::string_view tag) {
  const std::string open = "<" + std::string(tag) + ">";
  const std::string close = "</" + std::string(tag) + ">";
  const auto start = text.find(open);
  if (start == std::string_view::npos) throw ParseFailure(std::string(tag), std::string(text));
  const auto body_start = start + open.size();
  const auto end = text.find(close, body_start);
  if (end == std::string_view::npos) throw ParseFailure(std::string(tag), std::string(text));

  std::vector<std::string> items;
  std::set<std::string> seen;
  for (const auto& raw : split(text.substr(body_start, end - body_start), ',')) {
    auto item = canonicalize(raw);
    if (item.empty() || !seen.insert(item).second) continue;
    items.push_back(std::move(item));
  }
  return items;
}

std::uint64_t approximate_token_count(std::string_view text) {
  std::uint64_t n = 0;
  bool in_word = false;
  for (char c : text) {
    const bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

LedgerSnapshot CallLedger::snapshot() const {
  return {llm_calls_.load(), retriever_calls_.load(), completion_tokens_.load(),
          prompt_tokens_.load(), std::chrono::nanoseconds(wall_ns_.load())};
}

void CallLedger::reset() {
  llm_calls_ = 0;
  retriever_calls_ = 0;
  completion_tokens_ = 0;
  prompt_tokens_ = 0;
  wall_ns_ = 0;
}

LlmResponse complete(LlmProvider& provider, const std::string& prompt, CallLedger& ledger) {
  ledger.add_llm_call();
  const auto start = std::chrono::steady_clock::now();
  auto response = provider.complete(prompt);
  response.latency = std::chrono::steady_clock::now() - start;
  ledger.add_tokens(response.prompt_tokens, response.completion_tokens);
  return response;
}

std::string prompt_hash(std::string_view prompt) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : prompt) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = kHex[h & 0xf];
  return out;
}

namespace {

LlmResponse with_estimated_tokens(std::string prompt, std::string text) {
  LlmResponse r;
  r.prompt_tokens = approximate_token_count(prompt);
  r.completion_tokens = approximate_token_count(text);
  r.approximate_tokens = true;
  r.text = std::move(text);
  return r;
}

}  // namespace

LlmResponse HttpLlmProvider::complete(const std::string& prompt) {
  json body{{"model", options_.model},
            {"temperature", 0},
            {"messages", json::array({json{{"role", "user"}, {"content", prompt}}})}};
  if (options_.max_tokens > 0) body["max_tokens"] = options_.max_tokens;
  detail::HttpRequest req;
  req.base_url = options_.base_url;
  req.path = "/chat/completions";
  req.body = body.dump();
  req.bearer_token = options_.api_key;
  req.timeout_seconds = options_.timeout_seconds;
  req.max_retries = options_.max_retries;
  const auto payload = json::parse(detail::post_json(req), nullptr, false);
  if (payload.is_discarded()) throw TransportError("chat endpoint returned invalid JSON");
  std::string text;
  try {
    text = payload.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw TransportError(std::string("unexpected chat payload: ") + e.what());
  }
  if (payload.contains("usage") && payload["usage"].is_object()) {
    LlmResponse r;
    r.text = std::move(text);
    r.prompt_tokens = payload["usage"].value("prompt_tokens", std::uint64_t{0});
    r.completion_tokens = payload["usage"].value("completion_tokens", std::uint64_t{0});
    return r;
  }
  return with_estimated_tokens(prompt, std::move(text));
}

ReplayLlmProvider::ReplayLlmProvider(const std::filesystem::path& store) {
  io::for_each_line(store, [&](std::string_view line, std::size_t n) {
    auto j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("hash") || !j.contains("response")) {
      throw FormatError(store.string(), n, "expected {\"hash\", \"response\"}");
    }
    LlmResponse r;
    r.text = j["response"].get<std::string>();
    r.prompt_tokens = j.value("prompt_tokens", std::uint64_t{0});
    r.completion_tokens = j.value("completion_tokens", approximate_token_count(r.text));
    r.approximate_tokens = j.value("approximate_tokens", false);
    records_[j["hash"].get<std::string>()] = std::move(r);
  });
}

LlmResponse ReplayLlmProvider::complete(const std::string& prompt) {
  const auto hash = prompt_hash(prompt);
  auto it = records_.find(hash);
  if (it == records_.end()) throw ReplayMiss(hash);
  return it->second;
}

void append_replay_record(const std::filesystem::path& store, const std::string& prompt,
                          const LlmResponse& response) {
  auto out = io::open_out(store, std::ios::out | std::ios::app);
  out << json{{"hash", prompt_hash(prompt)},
              {"response", response.text},
              {"prompt_tokens", response.prompt_tokens},
              {"completion_tokens", response.completion_tokens},
              {"approximate_tokens", response.approximate_tokens}}
             .dump()
      << '\n';
}

LlmResponse RecordingLlmProvider::complete(const std::string& prompt) {
  auto response = inner_->complete(prompt);
  std::lock_guard lock(mutex_);
  append_replay_record(store_, prompt, response);
  return response;
}

LlmResponse MockLlmProvider::complete(const std::string& prompt) {
  ++calls_;
  return with_estimated_tokens(prompt, rule_(prompt));
}

}  // namespace conceptrank
