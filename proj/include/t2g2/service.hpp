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

// Live NLG endpoint.
//
//   POST /respond {"service": "RideSharing_1",
//                  "actions": [{"act": "inform", "slot": "fare", "value": "$23"}],
//                  "context": ["I need a cab", {"speaker": "system", "text": "..."}],
//                  "session_id": "optional"}
//            ->   {"response", "template_utterance", "encoded_input", "latency_ms"}
//   GET  /healthz
//
// With a session_id the service keeps the conversation itself, including its
// own earlier responses, and prepends it to the request context.

#pragma once

#include <chrono>
#include <list>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "httplib.h"
#include "t2g2/encoders.hpp"
#include "t2g2/rewriter.hpp"
#include "t2g2/schema.hpp"
#include "t2g2/template_engine.hpp"

namespace t2g2 {

struct ServiceOptions {
  EncodingMode mode = EncodingMode::kTemplate;
  EncoderOptions encoder;
  DecodeConfig decode;
  std::string model_tag;
  std::size_t max_sessions = 1024;
  std::size_t max_history = 32;
};

struct HttpReply {
  int status = 200;
  json body;
};

class NlgService {
 public:
  NlgService(const SchemaCatalog& schemas, const TemplateRegistry& templates, Rewriter& rewriter,
             ServiceOptions opts = {})
      : schemas_(schemas), templates_(templates), rewriter_(rewriter), opts_(std::move(opts)) {}

  HttpReply respond(std::string_view body) {
    const auto started = std::chrono::steady_clock::now();
    json req;
    try {
      req = json::parse(body);
    } catch (const json::parse_error& e) {
      return error(400, "malformed_request", "", e.what());
    }
    if (!req.is_object() || !req.contains("service") || !req["service"].is_string() || !req.contains("actions") ||
        !req["actions"].is_array()) {
      return error(400, "malformed_request", "", "expected 'service' string and 'actions' array");
    }

    NlgExample ex;
    ex.service = req["service"].get<std::string>();
    const auto* schema = schemas_.find(ex.service);
    if (!schema) return error(400, "unknown_service", ex.service, "unknown service");
    ex.domain = schema->domain;
    ex.frame.service = ex.service;

    std::vector<ContextUtterance> request_context;
    try {
      for (const auto& aj : req["actions"]) {
        RawAction raw;
        raw.act = detail::lower(aj.at("act").get<std::string>());
        if (aj.contains("slot")) raw.slot = aj["slot"].get<std::string>();
        if (aj.contains("value")) raw.values.push_back(aj["value"].get<std::string>());
        if (aj.contains("values")) {
          for (const auto& v : aj["values"]) raw.values.push_back(v.get<std::string>());
        }
        if (raw.slot && !schema->find_slot(*raw.slot)) return error(400, "unknown_slot", *raw.slot, "unknown slot");
        for (auto& a : decompose(raw)) {
          validate_action(a);
          ex.frame.actions.push_back(std::move(a));
        }
      }
      if (auto ctx = req.find("context"); ctx != req.end()) {
        for (const auto& c : *ctx) {
          if (c.is_string()) {
            request_context.push_back({Speaker::kUser, c.get<std::string>()});
          } else {
            const auto speaker = detail::lower(c.at("speaker").get<std::string>());
            request_context.push_back({speaker == "system" ? Speaker::kSystem : Speaker::kUser,
                                       c.at("text").get<std::string>()});
          }
        }
      }
    } catch (const json::exception& e) {
      return error(400, "malformed_request", "", e.what());
    } catch (const DataError& e) {
      return error(400, "malformed_request", "", e.what());
    }
    if (ex.frame.actions.empty()) return error(400, "malformed_request", "", "no actions");

    const std::string session = req.value("session_id", std::string{});
    ex.context = session.empty() ? std::vector<ContextUtterance>{} : history(session);
    ex.context.insert(ex.context.end(), request_context.begin(), request_context.end());

    std::string template_utterance;
    std::string encoded;
    try {
      template_utterance = render_frame(ex.frame, templates_, opts_.encoder.render);
      encoded = encode(ex, opts_.mode, templates_, schemas_, opts_.encoder);
    } catch (const MissingTemplate& e) {
      return error(400, "missing_template", e.key(), e.what());
    } catch (const MissingDescription& e) {
      return error(400, "missing_description", e.slot(), e.what());
    } catch (const DataError& e) {
      return error(400, "bad_actions", "", e.what());
    }

    RewriteResponse rewritten;
    try {
      rewritten = rewriter_.rewrite(RewriteRequest{{encoded}, opts_.decode, opts_.model_tag});
      if (rewritten.outputs.size() != 1) throw ProtocolError("rewriter returned a wrong number of outputs");
    } catch (const TransportError& e) {
      return error(502, "rewriter_unavailable", "", e.what());
    } catch (const ProtocolError& e) {
      return error(502, "rewriter_protocol_error", "", e.what());
    }

    if (!session.empty()) {
      auto updated = ex.context;
      updated.push_back({Speaker::kSystem, rewritten.outputs.front()});
      remember(session, std::move(updated));
    }
    const double latency =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
    return HttpReply{200,
                     {{"response", rewritten.outputs.front()},
                      {"template_utterance", template_utterance},
                      {"encoded_input", encoded},
                      {"latency_ms", latency}}};
  }

  HttpReply healthz() {
    const auto h = rewriter_.health();
    json body = {{"status", h.ok ? "ok" : "degraded"},
                 {"rewriter", {{"ok", h.ok}, {"model_tag", h.model_tag}, {"detail", h.detail}}},
                 {"services", schemas_.size()}};
    return HttpReply{h.ok ? 200 : 503, body};
  }

 private:
  static HttpReply error(int status, const std::string& code, const std::string& key, const std::string& message) {
    json body = {{"error", code}, {"message", message}};
    if (!key.empty()) body["key"] = key;
    return HttpReply{status, body};
  }

  std::vector<ContextUtterance> history(const std::string& session) {
    std::lock_guard lock(mu_);
    auto it = sessions_.find(session);
    return it == sessions_.end() ? std::vector<ContextUtterance>{} : it->second->second;
  }

  void remember(const std::string& session, std::vector<ContextUtterance> turns) {
    if (turns.size() > opts_.max_history) {
      turns.erase(turns.begin(), turns.end() - static_cast<std::ptrdiff_t>(opts_.max_history));
    }
    std::lock_guard lock(mu_);
    if (auto it = sessions_.find(session); it != sessions_.end()) {
      lru_.erase(it->second);
      sessions_.erase(it);
    }
    lru_.emplace_front(session, std::move(turns));
    sessions_[session] = lru_.begin();
    while (sessions_.size() > opts_.max_sessions) {
      sessions_.erase(lru_.back().first);
      lru_.pop_back();
    }
  }

  const SchemaCatalog& schemas_;
  const TemplateRegistry& templates_;
  Rewriter& rewriter_;
  ServiceOptions opts_;

  using Entry = std::pair<std::string, std::vector<ContextUtterance>>;
  std::mutex mu_;
  std::list<Entry> lru_;
  std::unordered_map<std::string, std::list<Entry>::iterator> sessions_;
};

inline void mount_service(httplib::Server& server, NlgService& service) {
  server.Post("/respond", [&service](const httplib::Request& req, httplib::Response& res) {
    const auto reply = service.respond(req.body);
    res.status = reply.status;
    res.set_content(reply.body.dump(), "application/json");
  });
  server.Get("/healthz", [&service](const httplib::Request&, httplib::Response& res) {
    const auto reply = service.healthz();
    res.status = reply.status;
    res.set_content(reply.body.dump(), "application/json");
  });
}

}  // namespace t2g2
