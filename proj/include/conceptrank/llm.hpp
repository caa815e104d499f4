#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace conceptrank {

enum class TemplateId { index_build, core_concepts, core_concepts_no_corpus };

/// A prompt with `{name}` placeholders.
struct PromptTemplate {
  TemplateId id;
  std::string text;

  /// Placeholder names in order of first appearance.
  std::vector<std::string> placeholders() const;
};

/// Paper indexing prompt; one placeholder `{d}`.
const PromptTemplate& index_build_template();
/// Query core-concept prompt; placeholders `{D0}`, `{T0}`, `{P0}`, `{q}`.
const PromptTemplate& core_concepts_template();
/// Candidate-free variant used by the no-corpus ablation; placeholder `{q}`.
const PromptTemplate& core_concepts_no_corpus_template();

/// Substitutes every placeholder; bound text is inserted verbatim and never
/// rescanned. Throws UnboundPlaceholder.
std::string render_prompt(const PromptTemplate& tmpl,
                          const std::map<std::string, std::string>& bindings);

/// Contents of the first `<tag>...</tag>` span, split on commas, canonicalized,
/// with empties dropped and duplicates removed (first occurrence wins).
/// Throws ParseFailure when the tag is absent or unclosed.
std::vector<std::string> parse_tagged_list(std::string_view text, std::string_view tag);

struct LlmResponse {
  std::string text;
  std::uint64_t prompt_tokens = 0;
  std::uint64_t completion_tokens = 0;
  bool approximate_tokens = false;
  std::chrono::nanoseconds latency{0};
};

/// Whitespace-delimited word count; the fallback token estimate.
std::uint64_t approximate_token_count(std::string_view text);

struct LedgerSnapshot {
  std::uint64_t llm_calls = 0;
  std::uint64_t retriever_calls = 0;
  std::uint64_t completion_tokens = 0;
  std::uint64_t prompt_tokens = 0;
  std::chrono::nanoseconds wall_time{0};

  bool operator==(const LedgerSnapshot&) const = default;
};

/// Per-query call accounting. Counters only grow until reset().
class CallLedger {
 public:
  void add_llm_call() { llm_calls_.fetch_add(1, std::memory_order_relaxed); }
  void add_retriever_call() { retriever_calls_.fetch_add(1, std::memory_order_relaxed); }
  void add_tokens(std::uint64_t prompt, std::uint64_t completion) {
    prompt_tokens_.fetch_add(prompt, std::memory_order_relaxed);
    completion_tokens_.fetch_add(completion, std::memory_order_relaxed);
  }
  void add_wall_time(std::chrono::nanoseconds d) {
    wall_ns_.fetch_add(static_cast<std::uint64_t>(d.count()), std::memory_order_relaxed);
  }
  LedgerSnapshot snapshot() const;
  void reset();

 private:
  std::atomic<std::uint64_t> llm_calls_{0};
  std::atomic<std::uint64_t> retriever_calls_{0};
  std::atomic<std::uint64_t> completion_tokens_{0};
  std::atomic<std::uint64_t> prompt_tokens_{0};
  std::atomic<std::uint64_t> wall_ns_{0};
};

class LlmProvider {
 public:
  virtual ~LlmProvider() = default;
  virtual LlmResponse complete(const std::string& prompt) = 0;
};

/// Counts the call on `ledger` (even if it fails), then asks the provider.
LlmResponse complete(LlmProvider& provider, const std::string& prompt, CallLedger& ledger);

/// Stable 64-bit FNV-1a hash of the prompt, as 16 lowercase hex digits.
std::string prompt_hash(std::string_view prompt);

/// OpenAI-compatible chat completions at `<base_url>/chat/completions`,
/// temperature 0.
class HttpLlmProvider : public LlmProvider {
 public:
  struct Options {
    std::string base_url = "https://api.openai.com/v1";
    std::string model = "gpt-4.1-mini";
    std::string api_key;  // usually from LLM_API_KEY
    int timeout_seconds = 120;
    int max_retries = 3;
    int max_tokens = 0;  // 0: provider default
  };
  explicit HttpLlmProvider(Options options) : options_(std::move(options)) {}
  LlmResponse complete(const std::string& prompt) override;

 private:
  Options options_;
};

/// Answers from a recorded (prompt hash -> response) store. Store file is JSON
/// lines: {"hash", "response", "prompt_tokens", "completion_tokens"}.
class ReplayLlmProvider : public LlmProvider {
 public:
  explicit ReplayLlmProvider(const std::filesystem::path& store);
  LlmResponse complete(const std::string& prompt) override;
  std::size_t size() const noexcept { return records_.size(); }

 private:
  std::unordered_map<std::string, LlmResponse> records_;
};

/// Forwards to another provider and appends each exchange to a replay store.
class RecordingLlmProvider : public LlmProvider {
 public:
  RecordingLlmProvider(std::shared_ptr<LlmProvider> inner, std::filesystem::path store)
      : inner_(std::move(inner)), store_(std::move(store)) {}
  LlmResponse complete(const std::string& prompt) override;

 private:
  std::shared_ptr<LlmProvider> inner_;
  std::filesystem::path store_;
  std::mutex mutex_;
};

/// Runs a deterministic user rule. The rule must be safe to call
/// concurrently.
class MockLlmProvider : public LlmProvider {
 public:
  using Rule = std::function<std::string(const std::string& prompt)>;
  explicit MockLlmProvider(Rule rule) : rule_(std::move(rule)) {}
  LlmResponse complete(const std::string& prompt) override;
  std::uint64_t calls() const noexcept { return calls_.load(); }

 private:
  Rule rule_;
  std::atomic<std::uint64_t> calls_{0};
};

void append_replay_record(const std::filesystem::path& store, const std::string& prompt,
                          const LlmResponse& response);

}  // namespace conceptrank
