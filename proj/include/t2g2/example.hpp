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

#pragma once

#include <set>
#include <string>
#include <vector>

#include "t2g2/action.hpp"
#include "t2g2/dialogue.hpp"
#include "t2g2/json_io.hpp"
#include "t2g2/schema.hpp"

namespace t2g2 {

struct ContextUtterance {
  Speaker speaker = Speaker::kUser;
  std::string text;

  friend bool operator==(const ContextUtterance&, const ContextUtterance&) = default;
};

struct SlotValue {
  std::string slot;
  std::string value;
  bool is_boolean = false;

  friend bool operator==(const SlotValue&, const SlotValue&) = default;
};

/// One system turn packaged for generation: what to say, what was said, and
/// the history leading up to it.
struct NlgExample {
  std::string id;
  std::string dialogue_id;
  int turn_index = 0;
  std::string service;
  std::string domain;
  ActionFrame frame;
  std::string reference;
  std::vector<ContextUtterance> context;
  bool seen = false;
  std::vector<SlotValue> slot_values;

  friend bool operator==(const NlgExample&, const NlgExample&) = default;
};

/// (slot, value, is_boolean) for each value-bearing action, in frame order.
inline std::vector<SlotValue> slot_values_of(const ActionFrame& frame, const ServiceSchema& schema) {
  std::vector<SlotValue> out;
  for (const auto& a : frame.actions) {
    if (!a.value) continue;
    const auto* spec = schema.find_slot(*a.slot);
    if (!spec) throw UnknownSlot(schema.service_name, *a.slot);
    out.push_back(SlotValue{*a.slot, *a.value, spec->is_boolean});
  }
  return out;
}

/// One example per SYSTEM turn, carrying up to context_k preceding utterances.
inline std::vector<NlgExample> extract_examples(const std::vector<Dialogue>& dialogues, const SchemaCatalog& catalog,
                                                std::size_t context_k) {
  std::vector<NlgExample> out;
  for (const auto& d : dialogues) {
    for (std::size_t ti = 0; ti < d.turns.size(); ++ti) {
      const auto& turn = d.turns[ti];
      if (turn.speaker != Speaker::kSystem) continue;
      const auto& frame = turn.frames.front();
      const auto& schema = catalog.at(frame.service);
      NlgExample ex;
      ex.dialogue_id = d.dialogue_id;
      ex.turn_index = static_cast<int>(ti);
      ex.id = d.dialogue_id + ":" + std::to_string(ti);
      ex.service = frame.service;
      ex.domain = schema.domain;
      ex.frame = frame;
      ex.reference = turn.utterance;
      const std::size_t begin = ti > context_k ? ti - context_k : 0;
      for (std::size_t ci = begin; ci < ti; ++ci) {
        ex.context.push_back(ContextUtterance{d.turns[ci].speaker, d.turns[ci].utterance});
      }
      ex.slot_values = slot_values_of(frame, schema);
      out.push_back(std::move(ex));
    }
  }
  return out;
}

inline void mark_seen(std::vector<NlgExample>& examples, const std::set<std::string>& seen_domains) {
  for (auto& ex : examples) ex.seen = seen_domains.contains(ex.domain);
}

inline json to_json(const Action& a) {
  json j = {{"act", a.act}};
  if (a.slot) j["slot"] = *a.slot;
  if (a.value) j["value"] = *a.value;
  return j;
}

inline Action action_from_json(const json& j) {
  Action a;
  a.act = j.at("act").get<std::string>();
  if (j.contains("slot")) a.slot = j["slot"].get<std::string>();
  if (j.contains("value")) a.value = j["value"].get<std::string>();
  validate_action(a);
  return a;
}

inline json to_json(const NlgExample& ex) {
  json actions = json::array();
  for (const auto& a : ex.frame.actions) actions.push_back(to_json(a));
  json context = json::array();
  for (const auto& c : ex.context) context.push_back({{"speaker", to_string(c.speaker)}, {"text", c.text}});
  json slots = json::array();
  for (const auto& sv : ex.slot_values) {
    slots.push_back({{"slot", sv.slot}, {"value", sv.value}, {"is_boolean", sv.is_boolean}});
  }
  return {{"id", ex.id},           {"dialogue_id", ex.dialogue_id}, {"turn_index", ex.turn_index},
          {"service", ex.service}, {"domain", ex.domain},           {"actions", actions},
          {"reference", ex.reference}, {"context", context},        {"seen", ex.seen},
          {"slot_values", slots}};
}

inline NlgExample example_from_json(const json& j) {
  NlgExample ex;
  ex.id = j.at("id").get<std::string>();
  ex.dialogue_id = j.at("dialogue_id").get<std::string>();
  ex.turn_index = j.at("turn_index").get<int>();
  ex.service = j.at("service").get<std::string>();
  ex.domain = j.at("domain").get<std::string>();
  ex.frame.service = ex.service;
  for (const auto& a : j.at("actions")) ex.frame.actions.push_back(action_from_json(a));
  ex.reference = j.at("reference").get<std::string>();
  for (const auto& c : j.at("context")) {
    ex.context.push_back(ContextUtterance{c.at("speaker").get<std::string>() == "USER" ? Speaker::kUser : Speaker::kSystem,
                                          c.at("text").get<std::string>()});
  }
  ex.seen = j.at("seen").get<bool>();
  for (const auto& s : j.at("slot_values")) {
    ex.slot_values.push_back(
        SlotValue{s.at("slot").get<std::string>(), s.at("value").get<std::string>(), s.at("is_boolean").get<bool>()});
  }
  return ex;
}

/// Newline-delimited JSON, one example per line.
inline std::string examples_to_jsonl(const std::vector<NlgExample>& examples) {
  std::string out;
  for (const auto& ex : examples) {
    out += to_json(ex).dump();
    out += '\n';
  }
  return out;
}

inline std::vector<NlgExample> examples_from_jsonl(std::string_view text, const std::string& origin) {
  std::vector<NlgExample> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    const auto line = text.substr(pos, end - pos);
    pos = end + 1;
    if (line.empty()) continue;
    try {
      out.push_back(example_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw ParseError(origin, line_no, e.what());
    } catch (const DataError& e) {
      throw ParseError(origin, line_no, e.what());
    }
  }
  return out;
}

}  // namespace t2g2
