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

#include <future>
#include <string>
#include <vector>

#include "t2g2/action.hpp"
#include "t2g2/json_io.hpp"
#include "t2g2/schema.hpp"

namespace t2g2 {

enum class Speaker { kUser, kSystem };

inline const char* to_string(Speaker s) { return s == Speaker::kUser ? "USER" : "SYSTEM"; }

struct Turn {
  Speaker speaker = Speaker::kUser;
  std::string utterance;
  // Only populated for SYSTEM turns; holds exactly one frame after loading.
  std::vector<ActionFrame> frames;
};

struct Dialogue {
  std::string dialogue_id;
  std::vector<std::string> services;
  std::vector<Turn> turns;

  bool single_service() const { return services.size() == 1; }
};

namespace detail {

inline Speaker parse_speaker(const json& t, const std::string& origin, const std::string& where) {
  const auto s = required_string(t, "speaker", origin, where);
  if (s == "USER") return Speaker::kUser;
  if (s == "SYSTEM") return Speaker::kSystem;
  throw ParseError(origin, 0, where + ": unknown speaker '" + s + "'");
}

inline std::vector<Action> parse_system_actions(const json& frame, const ServiceSchema& schema,
                                                const std::string& origin, const std::string& where) {
  std::vector<Action> out;
  const auto actions = frame.find("actions");
  if (actions == frame.end()) return out;
  if (!actions->is_array()) throw ParseError(origin, 0, where + ": 'actions' is not an array");
  for (std::size_t i = 0; i < actions->size(); ++i) {
    const auto& aj = (*actions)[i];
    const auto awhere = where + ".actions[" + std::to_string(i) + "]";
    if (!aj.is_object()) throw ParseError(origin, 0, awhere + ": action is not an object");
    RawAction raw;
    raw.act = lower(required_string(aj, "act", origin, awhere));
    if (auto slot = aj.find("slot"); slot != aj.end() && slot->is_string() && !slot->get<std::string>().empty()) {
      raw.slot = slot->get<std::string>();
    }
    if (auto values = aj.find("values"); values != aj.end()) {
      if (!values->is_array()) throw ParseError(origin, 0, awhere + ": 'values' is not an array");
      for (const auto& v : *values) {
        if (!v.is_string()) throw ParseError(origin, 0, awhere + ": non-string value");
        raw.values.push_back(v.get<std::string>());
      }
    }
    if (raw.slot && !schema.find_slot(*raw.slot)) throw UnknownSlot(schema.service_name, *raw.slot);
    for (auto& a : decompose(raw)) {
      try {
        validate_action(a);
      } catch (const DataError& e) {
        throw ParseError(origin, 0, awhere + ": " + e.what());
      }
      if (a.value && a.value->find("$x") != std::string::npos) {
        throw ParseError(origin, 0, awhere + ": value contains the template placeholder '$x'");
      }
      out.push_back(std::move(a));
    }
  }
  return out;
}

inline Dialogue dialogue_from_json(const json& d, const SchemaCatalog& catalog, const std::string& origin,
                                   const std::string& where) {
  if (!d.is_object()) throw ParseError(origin, 0, where + ": dialogue is not an object");
  Dialogue out;
  out.dialogue_id = required_string(d, "dialogue_id", origin, where);
  const auto dwhere = where + "(" + out.dialogue_id + ")";
  if (auto services = d.find("services"); services != d.end() && services->is_array()) {
    for (const auto& s : *services) {
      const auto name = s.get<std::string>();
      catalog.at(name);
      out.services.push_back(name);
    }
  }
  const auto turns = d.find("turns");
  if (turns == d.end() || !turns->is_array()) throw ParseError(origin, 0, dwhere + ": missing 'turns' array");
  std::size_t system_actions = 0;
  for (std::size_t ti = 0; ti < turns->size(); ++ti) {
    const auto& tj = (*turns)[ti];
    const auto twhere = dwhere + ".turns[" + std::to_string(ti) + "]";
    if (!tj.is_object()) throw ParseError(origin, 0, twhere + ": turn is not an object");
    Turn turn;
    turn.speaker = parse_speaker(tj, origin, twhere);
    turn.utterance = required_string(tj, "utterance", origin, twhere);
    if (!out.turns.empty() && out.turns.back().speaker == turn.speaker) {
      throw ParseError(origin, 0, twhere + ": speakers do not alternate");
    }
    if (turn.speaker == Speaker::kSystem) {
      const auto frames = tj.find("frames");
      if (frames != tj.end() && frames->is_array()) {
        for (std::size_t fi = 0; fi < frames->size(); ++fi) {
          const auto& fj = (*frames)[fi];
          const auto fwhere = twhere + ".frames[" + std::to_string(fi) + "]";
          const auto& schema = catalog.at(required_string(fj, "service", origin, fwhere));
          auto actions = parse_system_actions(fj, schema, origin, fwhere);
          if (actions.empty()) continue;
          turn.frames.push_back(ActionFrame{schema.service_name, std::move(actions)});
        }
      }
      if (turn.frames.empty()) throw ParseError(origin, 0, twhere + ": SYSTEM turn has no actions");
      if (turn.frames.size() > 1) throw ParseError(origin, 0, twhere + ": SYSTEM turn acts on more than one service");
      system_actions += turn.frames.front().actions.size();
    }
    out.turns.push_back(std::move(turn));
  }
  if (system_actions == 0) throw ParseError(origin, 0, dwhere + ": dialogue has no SYSTEM actions");
  return out;
}

}  // namespace detail

inline std::vector<Dialogue> parse_dialogue_text(std::string_view text, const SchemaCatalog& catalog,
                                                 const std::string& origin) {
  const json doc = parse_json(text, origin);
  std::vector<Dialogue> out;
  if (doc.is_array()) {
    out.reserve(doc.size());
    for (std::size_t i = 0; i < doc.size(); ++i) {
      out.push_back(detail::dialogue_from_json(doc[i], catalog, origin, "[" + std::to_string(i) + "]"));
    }
  } else {
    out.push_back(detail::dialogue_from_json(doc, catalog, origin, "$"));
  }
  return out;
}

/// Loads every `dialogues*.json` under path. Multi-valued actions are
/// decomposed; services and slots are checked against the catalog.
inline std::vector<Dialogue> load_dialogues(const fs::path& path, const SchemaCatalog& catalog) {
  const auto files = list_files(path, "dialogues", ".json");
  std::vector<std::future<std::vector<Dialogue>>> parsed;
  parsed.reserve(files.size());
  for (const auto& f : files) {
    parsed.push_back(std::async(std::launch::async,
                                [f, &catalog] { return parse_dialogue_text(read_file(f), catalog, f.string()); }));
  }
  std::vector<Dialogue> out;
  for (auto& fut : parsed) {
    for (auto& d : fut.get()) out.push_back(std::move(d));
  }
  return out;
}

}  // namespace t2g2
