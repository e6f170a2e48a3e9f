#pragma once

// Completion-endpoint client: OpenAI-compatible text completions with a
// persistent cache, retries and bounded concurrency.

#include <chrono>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "boxtrack/jsonl.hpp"
#include "boxtrack/prompt.hpp"

namespace boxtrack {

/// Greedy decoding, 150 new tokens, newline stop.
struct DecodeParams {
  std::string model;
  double temperature = 0.0;
  int max_tokens = 150;
  std::vector<std::string> stop{"\n"};

  json to_json() const;
};

struct Endpoint {
  std::string base_url;  // e.g. http://127.0.0.1:8080/v1
  std::string api_key;   // never written to records
  int max_attempts = 5;
  std::chrono::milliseconds initial_backoff{500};
  std::chrono::seconds timeout{120};

  /// Reads the key from `api_key_env` when that variable is set.
  static Endpoint from_url(std::string base_url, const char* api_key_env = "OPENAI_API_KEY");
};

/// Append-only on-disk cache keyed by hash(model, params, prompt).
/// Safe for concurrent use within one process.
class CompletionCache {
 public:
  explicit CompletionCache(std::filesystem::path dir);

  static std::string key_for(const DecodeParams& params, const std::string& prompt);

  std::optional<std::string> get(const std::string& key) const;
  void put(const std::string& key, const std::string& text);
  std::size_t size() const;

 private:
  std::filesystem::path file_;
  mutable std::mutex mutex_;
  std::unordered_map<std::string, std::string> entries_;
};

/// Cuts `text` at the first occurrence of any stop string.
std::string truncate_at_stop(std::string text, const std::vector<std::string>& stop);

/// Request body {model, prompt, temperature, max_tokens, stop}.
json completion_request(const std::string& prompt, const DecodeParams& params);

/// POST {base}/completions and return choices[0].text, truncated at the stop
/// strings. Transport failures, 408, 429 and 5xx are retried with exponential
/// backoff; then TransportError. A malformed body raises ProtocolError.
/// With a cache, hits never touch the network.
std::string complete(const std::string& prompt, const DecodeParams& params, const Endpoint& endpoint,
                     CompletionCache* cache = nullptr, bool* cache_hit = nullptr);

struct CompletionRecord {
  std::string key;
  std::string mode;
  std::string prompt_hash;
  std::string completion;
  std::string timestamp;
  std::string endpoint;
  json params;
  std::string status = "ok";
  std::string error;
  bool cached = false;

  json to_json() const;
};

struct BatchSummary {
  std::size_t total = 0;
  std::size_t ok = 0;
  std::size_t failed = 0;
  std::size_t cached = 0;
};

/// One record per prompt, in input order. Per-item failures are recorded
/// with status "error" and the batch continues. At most `parallelism`
/// requests are in flight.
std::vector<CompletionRecord> run_batch(const std::vector<PromptRecord>& prompts, const DecodeParams& params,
                                        const Endpoint& endpoint, int parallelism, CompletionCache* cache,
                                        BatchSummary* summary = nullptr);

void write_completion_records(const std::filesystem::path& path, const std::vector<CompletionRecord>& records);

}  // namespace boxtrack
