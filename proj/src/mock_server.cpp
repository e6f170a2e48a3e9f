#include "boxtrack/mock_server.hpp"

#include <atomic>
#include <mutex>
#include <thread>

#include "boxtrack/errors.hpp"
#include "boxtrack/runner.hpp"
#include "httplib.h"

namespace boxtrack {

struct MockCompletionServer::Impl {
  Responder responder;
  Options options;
  httplib::Server server;
  std::thread thread;
  int port = 0;

  std::atomic<std::size_t> count{0};
  std::atomic<std::size_t> in_flight{0};
  std::atomic<std::size_t> peak{0};
  std::atomic<int> failures_left{0};
  std::atomic<int> failure_status{500};
  mutable std::mutex mutex;
  std::vector<json> log;

  void handle(const httplib::Request& req, httplib::Response& res) {
    const std::size_t now = ++in_flight;
    for (std::size_t seen = peak.load(); now > seen && !peak.compare_exchange_weak(seen, now);) {
    }
    ++count;
    if (options.latency.count() > 0) std::this_thread::sleep_for(options.latency);

    json body = json::parse(req.body, nullptr, /*allow_exceptions=*/false);
    {
      std::lock_guard lock(mutex);
      log.push_back(body);
    }
    int left = failures_left.load();
    while (left > 0 && !failures_left.compare_exchange_weak(left, left - 1)) {
    }
    if (left > 0) {
      res.status = failure_status.load();
      res.set_content(R"({"error":"injected failure"})", "application/json");
    } else if (body.is_discarded()) {
      res.status = 400;
      res.set_content(R"({"error":"request body is not JSON"})", "application/json");
    } else {
      std::string text = responder(body);
      if (options.honor_stop && body.contains("stop")) {
        text = truncate_at_stop(std::move(text), body["stop"].get<std::vector<std::string>>());
      }
      json reply{{"id", "cmpl-mock-" + std::to_string(count.load())},
                 {"object", "text_completion"},
                 {"model", body.value("model", std::string())},
                 {"choices", json::array({{{"text", text}, {"index", 0}, {"finish_reason", "stop"}}})}};
      res.set_content(reply.dump(), "application/json");
    }
    --in_flight;
  }
};

MockCompletionServer::MockCompletionServer(Responder responder) : MockCompletionServer(std::move(responder), Options{}) {}

MockCompletionServer::MockCompletionServer(Responder responder, Options options) : impl_(std::make_unique<Impl>()) {
  impl_->responder = std::move(responder);
  impl_->options = options;
  const int threads = options.worker_threads;
  impl_->server.new_task_queue = [threads] { return new httplib::ThreadPool(static_cast<std::size_t>(threads)); };
  impl_->server.Post(R"(.*/completions)",
                     [impl = impl_.get()](const httplib::Request& req, httplib::Response& res) { impl->handle(req, res); });
  impl_->port = impl_->server.bind_to_any_port("127.0.0.1");
  if (impl_->port <= 0) throw TransportError("mock server could not bind a local port");
  impl_->thread = std::thread([impl = impl_.get()] { impl->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

MockCompletionServer::~MockCompletionServer() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

std::string MockCompletionServer::base_url() const { return "http://127.0.0.1:" + std::to_string(impl_->port) + "/v1"; }

int MockCompletionServer::port() const { return impl_->port; }

std::size_t MockCompletionServer::request_count() const { return impl_->count.load(); }

std::size_t MockCompletionServer::max_in_flight() const { return impl_->peak.load(); }

std::vector<json> MockCompletionServer::requests() const {
  std::lock_guard lock(impl_->mutex);
  return impl_->log;
}

void MockCompletionServer::reset_counters() {
  impl_->count = 0;
  impl_->peak = 0;
  std::lock_guard lock(impl_->mutex);
  impl_->log.clear();
}

void MockCompletionServer::fail_next(int count, int status) {
  impl_->failure_status = status;
  impl_->failures_left = count;
}

MockCompletionServer::Responder scripted_responder(std::unordered_map<std::string, std::string> script,
                                                   std::string fallback) {
  return [script = std::move(script), fallback = std::move(fallback)](const json& request) {
    auto it = script.find(request.value("prompt", std::string()));
    return it == script.end() ? fallback : it->second;
  };
}

}  // namespace boxtrack
