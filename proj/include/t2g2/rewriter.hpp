// Copyright 2026 The T2G2 Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Rewriters turn encoded inputs into responses. The copy rewriter returns its
// input; the remote rewriter speaks the /rewrite wire protocol:
//
//   POST /rewrite  {"inputs": [...], "decode": {"beam_width": 4,
//                   "length_penalty_alpha": 0.6, "max_output_tokens": 128},
//                   "model_tag": "..."}
//             ->   {"outputs": [...], "model_tag": "...", "latency_ms": 12.5}
//   GET  /healthz  -> {"status": "ok", "model_tag": "..."}
//
// A batch either succeeds as a whole or fails; outputs are never truncated.

#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <functional>
#include <future>
#include <memory>
#include <semaphore>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "t2g2/error.hpp"
#include "t2g2/json_io.hpp"

namespace t2g2 {

struct DecodeConfig {
  int beam_width = 4;
  double length_penalty_alpha = 0.6;
  int max_output_tokens = 128;

  void validate() const {
    if (beam_width < 1) throw UsageError("beam_width must be >= 1");
    if (max_output_tokens < 1) throw UsageError("max_output_tokens must be >= 1");
  }

  friend bool operator==(const DecodeConfig&, const DecodeConfig&) = default;
};

inline json to_json(const DecodeConfig& d) {
  return {{"beam_width", d.beam_width},
          {"length_penalty_alpha", d.length_penalty_alpha},
          {"max_output_tokens", d.max_output_tokens}};
}

inline DecodeConfig decode_config_from_json(const json& j) {
  DecodeConfig d;
  d.beam_width = j.value("beam_width", d.beam_width);
  d.length_penalty_alpha = j.value("length_penalty_alpha", d.length_penalty_alpha);
  d.max_output_tokens = j.value("max_output_tokens", d.max_output_tokens);
  return d;
}

struct RewriteRequest {
  std::vector<std::string> inputs;
  DecodeConfig decode;
  std::string model_tag;
};

struct RewriteResponse {
  std::vector<std::string> outputs;
  std::string model_tag;
  double latency_ms = 0.0;
};

inline json to_json(const RewriteRequest& r) {
  return {{"inputs", r.inputs}, {"decode", to_json(r.decode)}, {"model_tag", r.model_tag}};
}

inline json to_json(const RewriteResponse& r) {
  return {{"outputs", r.outputs}, {"model_tag", r.model_tag}, {"latency_ms", r.latency_ms}};
}

inline RewriteRequest rewrite_request_from_json(const json& j) {
  if (!j.is_object()) throw ProtocolError("request body is not an object");
  const auto inputs = j.find("inputs");
  if (inputs == j.end() || !inputs->is_array()) throw ProtocolError("request lacks an 'inputs' array");
  RewriteRequest r;
  for (const auto& s : *inputs) {
    if (!s.is_string()) throw ProtocolError("'inputs' must contain strings");
    r.inputs.push_back(s.get<std::string>());
  }
  if (auto d = j.find("decode"); d != j.end()) {
    if (!d->is_object()) throw ProtocolError("'decode' must be an object");
    try {
      r.decode = decode_config_from_json(*d);
    } catch (const json::exception& e) {
      throw ProtocolError(std::string("bad 'decode': ") + e.what());
    }
  }
  if (auto t = j.find("model_tag"); t != j.end() && t->is_string()) r.model_tag = t->get<std::string>();
  return r;
}

/// Strict parse of a /rewrite response for a batch of expected_size inputs.
inline RewriteResponse rewrite_response_from_json(std::string_view body, std::size_t expected_size) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error& e) {
    throw ProtocolError(std::string("malformed response body: ") + e.what());
  }
  if (!j.is_object()) throw ProtocolError("response body is not an object");
  const auto outputs = j.find("outputs");
  if (outputs == j.end() || !outputs->is_array()) throw ProtocolError("response lacks an 'outputs' array");
  RewriteResponse r;
  for (const auto& s : *outputs) {
    if (!s.is_string()) throw ProtocolError("'outputs' must contain strings");
    r.outputs.push_back(s.get<std::string>());
  }
  if (r.outputs.size() != expected_size) {
    throw ProtocolError("response has " + std::to_string(r.outputs.size()) + " outputs for " +
                        std::to_string(expected_size) + " inputs");
  }
  const auto tag = j.find("model_tag");
  if (tag == j.end() || !tag->is_string()) throw ProtocolError("response lacks a 'model_tag' string");
  r.model_tag = tag->get<std::string>();
  if (auto lat = j.find("latency_ms"); lat != j.end()) {
    if (!lat->is_number()) throw ProtocolError("'latency_ms' must be a number");
    r.latency_ms = lat->get<double>();
  }
  return r;
}

struct RewriterHealth {
  bool ok = false;
  std::string model_tag;
  std::string detail;
};

/// Implementations must be safe to call concurrently.
class Rewriter {
 public:
  virtual ~Rewriter() = default;
  virtual RewriteResponse rewrite(const RewriteRequest& request) = 0;
  virtual RewriterHealth health() = 0;
};

/// Returns each input unchanged.
class CopyRewriter final : public Rewriter {
 public:
  RewriteResponse rewrite(const RewriteRequest& request) override {
    return RewriteResponse{request.inputs, "copy", 0.0};
  }
  RewriterHealth health() override { return {true, "copy", ""}; }
};

inline std::vector<std::string> copy_rewrite(const std::vector<std::string>& inputs) { return inputs; }

struct RemoteOptions {
  std::string endpoint;  // scheme://host:port
  std::chrono::milliseconds timeout{30000};
  int retries = 2;
  std::chrono::milliseconds backoff{200};  // doubled after each failed attempt
  int max_in_flight = 4;
};

class RemoteRewriter final : public Rewriter {
 public:
  explicit RemoteRewriter(RemoteOptions opts) : opts_(std::move(opts)), slots_(std::max(1, opts_.max_in_flight)) {
    if (opts_.endpoint.empty()) throw UsageError("remote rewriter needs an endpoint");
    if (opts_.retries < 0) throw UsageError("retries must be >= 0");
    if (opts_.max_in_flight < 1 || opts_.max_in_flight > kMaxInFlight) {
      throw UsageError("max_in_flight must be in [1, " + std::to_string(kMaxInFlight) + "]");
    }
  }

  RewriteResponse rewrite(const RewriteRequest& request) override {
    request.decode.validate();
    const auto body = to_json(request).dump();
    Slot slot(slots_);
    auto res = with_retries([&](httplib::Client& cli) { return cli.Post("/rewrite", body, "application/json"); });
    if (res->status != 200) {
      throw ProtocolError("rewriter returned HTTP " + std::to_string(res->status) + ": " + res->body);
    }
    return rewrite_response_from_json(res->body, request.inputs.size());
  }

  RewriterHealth health() override {
    httplib::Client cli(opts_.endpoint);
    configure(cli);
    auto res = cli.Get("/healthz");
    if (!res) return {false, "", "unreachable: " + httplib::to_string(res.error())};
    if (res->status != 200) return {false, "", "HTTP " + std::to_string(res->status)};
    try {
      const auto j = json::parse(res->body);
      return {j.value("status", std::string("ok")) == "ok", j.value("model_tag", std::string{}), ""};
    } catch (const json::exception&) {
      return {false, "", "malformed health body"};
    }
  }

  /// Total HTTP attempts made so far, including retries.
  int attempts() const { return attempts_.load(); }

 private:
  static constexpr int kMaxInFlight = 64;

  class Slot {
   public:
    explicit Slot(std::counting_semaphore<kMaxInFlight>& s) : s_(s) { s_.acquire(); }
    ~Slot() { s_.release(); }
    Slot(const Slot&) = delete;
    Slot& operator=(const Slot&) = delete;

   private:
    std::counting_semaphore<kMaxInFlight>& s_;
  };

  void configure(httplib::Client& cli) const {
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(opts_.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(opts_.timeout - secs);
    cli.set_connection_timeout(secs.count(), usecs.count());
    cli.set_read_timeout(secs.count(), usecs.count());
    cli.set_write_timeout(secs.count(), usecs.count());
  }

  template <typename Call>
  httplib::Result with_retries(Call&& call) {
    auto delay = opts_.backoff;
    std::string last_error;
    for (int attempt = 0; attempt <= opts_.retries; ++attempt) {
      if (attempt > 0) {
        std::this_thread::sleep_for(delay);
        delay *= 2;
      }
      ++attempts_;
      httplib::Client cli(opts_.endpoint);
      configure(cli);
      auto res = call(cli);
      if (res) return res;
      last_error = httplib::to_string(res.error());
    }
    throw TransportError("rewriter at " + opts_.endpoint + " failed after " + std::to_string(opts_.retries + 1) +
                             " attempts: " + last_error,
                         opts_.retries + 1);
  }

  RemoteOptions opts_;
  std::counting_semaphore<kMaxInFlight> slots_;
  std::atomic<int> attempts_{0};
};

/// Rewrites inputs in batches of batch_size, keeping up to `parallel` batches
/// in flight. Order is preserved; any failed batch fails the whole call.
inline RewriteResponse rewrite_all(Rewriter& rewriter, const std::vector<std::string>& inputs, std::size_t batch_size,
                                   const DecodeConfig& decode, const std::string& model_tag, std::size_t parallel = 4) {
  if (batch_size == 0) throw UsageError("batch size must be positive");
  std::vector<RewriteRequest> batches;
  for (std::size_t begin = 0; begin < inputs.size(); begin += batch_size) {
    const auto end = std::min(inputs.size(), begin + batch_size);
    batches.push_back(RewriteRequest{{inputs.begin() + static_cast<std::ptrdiff_t>(begin),
                                      inputs.begin() + static_cast<std::ptrdiff_t>(end)},
                                     decode, model_tag});
  }
  RewriteResponse out;
  out.model_tag = model_tag;
  const auto started = std::chrono::steady_clock::now();
  for (std::size_t wave = 0; wave < batches.size(); wave += std::max<std::size_t>(1, parallel)) {
    std::vector<std::future<RewriteResponse>> pending;
    const auto wave_end = std::min(batches.size(), wave + std::max<std::size_t>(1, parallel));
    for (std::size_t b = wave; b < wave_end; ++b) {
      pending.push_back(std::async(std::launch::async, [&rewriter, &batches, b] {
        auto r = rewriter.rewrite(batches[b]);
        if (r.outputs.size() != batches[b].inputs.size()) {
          throw ProtocolError("rewriter returned " + std::to_string(r.outputs.size()) + " outputs for " +
                              std::to_string(batches[b].inputs.size()) + " inputs");
        }
        return r;
      }));
    }
    for (auto& f : pending) {
      auto r = f.get();
      if (!r.model_tag.empty()) out.model_tag = r.model_tag;
      out.outputs.insert(out.outputs.end(), std::make_move_iterator(r.outputs.begin()),
                         std::make_move_iterator(r.outputs.end()));
    }
  }
  out.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
  return out;
}

/// Exposes any Rewriter over the wire protocol on `server`.
inline void mount_rewriter(httplib::Server& server, Rewriter& rewriter) {
  server.Post("/rewrite", [&rewriter](const httplib::Request& req, httplib::Response& res) {
    RewriteRequest request;
    try {
      request = rewrite_request_from_json(json::parse(req.body));
      request.decode.validate();
    } catch (const std::exception& e) {
      res.status = 400;
      res.set_content(json{{"error", e.what()}}.dump(), "application/json");
      return;
    }
    const auto started = std::chrono::steady_clock::now();
    try {
      auto response = rewriter.rewrite(request);
      response.latency_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
      res.set_content(to_json(response).dump(), "application/json");
    } catch (const std::exception& e) {
      res.status = 500;
      res.set_content(json{{"error", e.what()}}.dump(), "application/json");
    }
  });
  server.Get("/healthz", [&rewriter](const httplib::Request&, httplib::Response& res) {
    const auto h = rewriter.health();
    res.status = h.ok ? 200 : 503;
    res.set_content(json{{"status", h.ok ? "ok" : "degraded"}, {"model_tag", h.model_tag}}.dump(),
                    "application/json");
  });
}

struct ConformanceResult {
  bool passed = false;
  std::vector<std::string> failures;
};

/// Protocol checks any /rewrite implementation must pass: healthz reports a
/// model tag, a 3-item batch returns 3 outputs, an empty batch returns none,
/// and a malformed body is rejected with 400.
inline ConformanceResult check_conformance(const std::string& endpoint,
                                           std::chrono::milliseconds timeout = std::chrono::milliseconds(30000)) {
  ConformanceResult out;
  RemoteRewriter client(RemoteOptions{endpoint, timeout, 0, std::chrono::milliseconds(0), 1});
  const auto h = client.health();
  if (!h.ok) out.failures.push_back("healthz not ok: " + h.detail);
  if (h.ok && h.model_tag.empty()) out.failures.push_back("healthz lacks model_tag");
  try {
    const RewriteRequest three{{"Have a safe ride!", "Where are you riding to?", "Your ride costs $23 dollars."}, {}, ""};
    const auto r = client.rewrite(three);
    if (r.outputs.size() != 3) out.failures.push_back("3 inputs did not produce 3 outputs");
  } catch (const std::exception& e) {
    out.failures.push_back(std::string("3-item batch: ") + e.what());
  }
  try {
    const auto r = client.rewrite(RewriteRequest{{}, {}, ""});
    if (!r.outputs.empty()) out.failures.push_back("empty batch produced outputs");
  } catch (const std::exception& e) {
    out.failures.push_back(std::string("empty batch: ") + e.what());
  }
  {
    httplib::Client cli(endpoint);
    auto res = cli.Post("/rewrite", "{not json", "application/json");
    if (!res || res->status != 400) out.failures.push_back("malformed body was not rejected with 400");
  }
  out.passed = out.failures.empty();
  return out;
}

}  // namespace t2g2
