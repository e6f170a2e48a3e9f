#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "boxtrack/jsonl.hpp"

namespace boxtrack {

/// In-process HTTP server speaking the completions wire format, with request
/// instrumentation for tests and scripted model runs.
class MockCompletionServer {
 public:
  /// Maps a request body to the completion text.
  using Responder = std::function<std::string(const json& request)>;

  struct Options {
    std::chrono::milliseconds latency{0};
    /// Apply the request's stop strings before replying.
    bool honor_stop = true;
    int worker_threads = 64;
  };

  explicit MockCompletionServer(Responder responder);
  MockCompletionServer(Responder responder, Options options);
  ~MockCompletionServer();

  MockCompletionServer(const MockCompletionServer&) = delete;
  MockCompletionServer& operator=(const MockCompletionServer&) = delete;

  /// "http://127.0.0.1:<port>/v1"
  std::string base_url() const;
  int port() const;

  std::size_t request_count() const;
  std::size_t max_in_flight() const;
  std::vector<json> requests() const;
  void reset_counters();

  /// The next `count` requests fail with `status` before reaching the responder.
  void fail_next(int count, int status = 500);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Replies with the scripted text for a known prompt, `fallback` otherwise.
MockCompletionServer::Responder scripted_responder(std::unordered_map<std::string, std::string> script,
                                                   std::string fallback = "");

}  // namespace boxtrack
