#include "boxtrack/runner.hpp"

#include <atomic>
#include <cstdlib>
#include <ctime>
#include <thread>

#include "boxtrack/errors.hpp"
#include "httplib.h"

namespace boxtrack {

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path without trailing slash
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("endpoint URL '" + url + "' lacks a scheme");
  const auto path_start = url.find('/', scheme_end + 3);
  SplitUrl out;
  out.origin = url.substr(0, path_start);
  out.prefix = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
  return out;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

bool retryable_status(int status) { return status == 408 || status == 429 || status >= 500; }

std::string excerpt(const std::string& body) { return body.size() > 200 ? body.substr(0, 200) + "..." : body; }

}  // namespace

json DecodeParams::to_json() const {
  return json{{"model", model}, {"temperature", temperature}, {"max_tokens", max_tokens}, {"stop", stop}};
}

Endpoint Endpoint::from_url(std::string base_url, const char* api_key_env) {
  Endpoint ep;
  ep.base_url = std::move(base_url);
  if (api_key_env) {
    if (const char* key = std::getenv(api_key_env)) ep.api_key = key;
  }
  return ep;
}

CompletionCache::CompletionCache(std::filesystem::path dir) : file_(dir / "completions.jsonl") {
  std::filesystem::create_directories(dir);
  if (std::filesystem::exists(file_)) {
    for_each_jsonl(file_, [&](const json& j, std::size_t) {
      entries_[j.at("key").get<std::string>()] = j.at("text").get<std::string>();
    });
  }
}

std::string CompletionCache::key_for(const DecodeParams& params, const std::string& prompt) {
  return sha256_hex(params.to_json().dump() + '\x1f' + prompt);
}

std::optional<std::string> CompletionCache::get(const std::string& key) const {
  std::lock_guard lock(mutex_);
  if (auto it = entries_.find(key); it != entries_.end()) return it->second;
  return std::nullopt;
}

void CompletionCache::put(const std::string& key, const std::string& text) {
  std::lock_guard lock(mutex_);
  if (entries_.contains(key)) return;
  JsonlWriter w(file_, /*append=*/true);
  w.write({{"key", key}, {"text", text}});
  w.flush();
  entries_.emplace(key, text);
}

std::size_t CompletionCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

std::string truncate_at_stop(std::string text, const std::vector<std::string>& stop) {
  std::size_t cut = text.size();
  for (const auto& s : stop) {
    if (s.empty()) continue;
    if (auto pos = text.find(s); pos != std::string::npos) cut = std::min(cut, pos);
  }
  text.resize(cut);
  return text;
}

json completion_request(const std::string& prompt, const DecodeParams& params) {
  return json{{"model", params.model},
              {"prompt", prompt},
              {"temperature", params.temperature},
              {"max_tokens", params.max_tokens},
              {"stop", params.stop}};
}

std::string complete(const std::string& prompt, const DecodeParams& params, const Endpoint& endpoint,
                     CompletionCache* cache, bool* cache_hit) {
  std::string key;
  if (cache) {
    key = CompletionCache::key_for(params, prompt);
    if (auto hit = cache->get(key)) {
      if (cache_hit) *cache_hit = true;
      return *hit;
    }
  }
  if (cache_hit) *cache_hit = false;

  const auto url = split_url(endpoint.base_url);
  const std::string body = completion_request(prompt, params).dump();
  httplib::Headers headers;
  if (!endpoint.api_key.empty()) headers.emplace("Authorization", "Bearer " + endpoint.api_key);

  std::string last_error;
  auto backoff = endpoint.initial_backoff;
  for (int attempt = 1; attempt <= std::max(1, endpoint.max_attempts); ++attempt) {
    httplib::Client client(url.origin);
    client.set_connection_timeout(endpoint.timeout);
    client.set_read_timeout(endpoint.timeout);
    client.set_write_timeout(endpoint.timeout);
    auto res = client.Post(url.prefix + "/completions", headers, body, "application/json");
    if (!res) {
      last_error = "transport failure: " + httplib::to_string(res.error());
    } else if (res->status != 200) {
      last_error = "HTTP " + std::to_string(res->status) + ": " + excerpt(res->body);
      if (!retryable_status(res->status)) break;
    } else {
      std::string text;
      try {
        text = json::parse(res->body).at("choices").at(0).at("text").get<std::string>();
      } catch (const json::exception&) {
        throw ProtocolError("malformed completion response: " + excerpt(res->body));
      }
      text = truncate_at_stop(std::move(text), params.stop);
      if (cache) cache->put(key, text);
      return text;
    }
    if (attempt < endpoint.max_attempts) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }
  throw TransportError("completion request to " + endpoint.base_url + " failed: " + last_error);
}

json CompletionRecord::to_json() const {
  json j{{"key", key},       {"mode", mode},         {"prompt_hash", prompt_hash}, {"completion", completion},
         {"timestamp", timestamp}, {"endpoint", endpoint}, {"params", params},       {"status", status},
         {"cached", cached}};
  if (!error.empty()) j["error"] = error;
  return j;
}

std::vector<CompletionRecord> run_batch(const std::vector<PromptRecord>& prompts, const DecodeParams& params,
                                        const Endpoint& endpoint, int parallelism, CompletionCache* cache,
                                        BatchSummary* summary) {
  std::vector<CompletionRecord> records(prompts.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < prompts.size(); i = next++) {
      const auto& p = prompts[i];
      CompletionRecord r;
      r.key = p.key;
      r.mode = p.mode;
      r.prompt_hash = sha256_hex(p.prompt);
      r.endpoint = endpoint.base_url;
      r.params = params.to_json();
      try {
        r.completion = complete(p.prompt, params, endpoint, cache, &r.cached);
      } catch (const Error& err) {
        r.status = "error";
        r.error = err.what();
      }
      r.timestamp = utc_timestamp();
      records[i] = std::move(r);
    }
  };
  const auto threads = static_cast<std::size_t>(std::max(1, parallelism));
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < std::min(threads, prompts.size()); ++t) pool.emplace_back(worker);
  }
  if (summary) {
    *summary = {};
    summary->total = records.size();
    for (const auto& r : records) {
      if (r.status == "ok") ++summary->ok;
      else ++summary->failed;
      if (r.cached) ++summary->cached;
    }
  }
  return records;
}

void write_completion_records(const std::filesystem::path& path, const std::vector<CompletionRecord>& records) {
  JsonlWriter w(path);
  for (const auto& r : records) w.write(r.to_json());
  w.flush();
}

}  // namespace boxtrack
