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

#include <algorithm>
#include <cctype>
#include <future>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "t2g2/action.hpp"
#include "t2g2/json_io.hpp"

namespace t2g2 {

struct SlotSpec {
  std::string name;
  std::string description;
  bool is_boolean = false;

  friend bool operator==(const SlotSpec&, const SlotSpec&) = default;
};

struct ServiceSchema {
  std::string service_name;
  std::string domain;
  std::string description;
  std::vector<SlotSpec> slots;

  const SlotSpec* find_slot(std::string_view name) const {
    for (const auto& s : slots) {
      if (s.name == name) return &s;
    }
    return nullptr;
  }

  friend bool operator==(const ServiceSchema&, const ServiceSchema&) = default;
};

/// Service schemas keyed by service name.
class SchemaCatalog {
 public:
  void add(ServiceSchema schema) {
    const auto name = schema.service_name;
    if (!services_.emplace(name, std::move(schema)).second) throw DuplicateService(name);
  }

  const ServiceSchema* find(std::string_view service) const {
    auto it = services_.find(std::string(service));
    return it == services_.end() ? nullptr : &it->second;
  }

  const ServiceSchema& at(std::string_view service) const {
    const auto* s = find(service);
    if (!s) throw UnknownService(std::string(service));
    return *s;
  }

  const std::map<std::string, ServiceSchema>& services() const { return services_; }
  std::size_t size() const { return services_.size(); }
  bool empty() const { return services_.empty(); }

 private:
  std::map<std::string, ServiceSchema> services_;
};

/// Slots referenced by system acts in schema-guided dialogue data that are not
/// part of any service's slot list (inform_count carries `count`, offer_intent
/// carries `intent`). They are added to every loaded service.
inline const std::vector<SlotSpec>& builtin_slots() {
  static const std::vector<SlotSpec> kSlots = {
      {"count", "number of matching results", false},
      {"intent", "name of the intent offered to the user", false},
  };
  return kSlots;
}

/// "Restaurants_1" -> "Restaurants".
inline std::string domain_of_service(const std::string& service_name) {
  return service_name.substr(0, service_name.find('_'));
}

namespace detail {

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

inline bool boolean_values(const json& values) {
  if (!values.is_array() || values.size() != 2) return false;
  bool has_true = false;
  bool has_false = false;
  for (const auto& v : values) {
    if (!v.is_string()) return false;
    const auto s = lower(v.get<std::string>());
    has_true |= s == "true";
    has_false |= s == "false";
  }
  return has_true && has_false;
}

inline std::string required_string(const json& obj, const char* key, const std::string& origin, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    throw ParseError(origin, 0, where + ": missing string field '" + key + "'");
  }
  return it->get<std::string>();
}

inline ServiceSchema service_from_json(const json& j, const std::string& origin, const std::string& where) {
  if (!j.is_object()) throw ParseError(origin, 0, where + ": service entry is not an object");
  ServiceSchema s;
  s.service_name = required_string(j, "service_name", origin, where);
  s.domain = j.contains("domain") && j["domain"].is_string() ? j["domain"].get<std::string>()
                                                               : domain_of_service(s.service_name);
  s.description = j.value("description", std::string{});
  const auto slots = j.find("slots");
  if (slots == j.end() || !slots->is_array()) throw ParseError(origin, 0, where + ": missing 'slots' array");
  for (std::size_t i = 0; i < slots->size(); ++i) {
    const auto& sj = (*slots)[i];
    const auto swhere = where + ".slots[" + std::to_string(i) + "]";
    if (!sj.is_object()) throw ParseError(origin, 0, swhere + ": slot is not an object");
    SlotSpec slot;
    slot.name = required_string(sj, "name", origin, swhere);
    slot.description = sj.value("description", std::string{});
    if (auto flag = sj.find("is_boolean"); flag != sj.end() && flag->is_boolean()) {
      slot.is_boolean = flag->get<bool>();
    } else if (auto pv = sj.find("possible_values"); pv != sj.end()) {
      slot.is_boolean = boolean_values(*pv);
    }
    if (s.find_slot(slot.name)) throw ParseError(origin, 0, swhere + ": duplicate slot '" + slot.name + "'");
    s.slots.push_back(std::move(slot));
  }
  for (const auto& b : builtin_slots()) {
    if (!s.find_slot(b.name)) s.slots.push_back(b);
  }
  return s;
}

}  // namespace detail

/// Parses one schema file: a JSON array of services or a single service object.
inline std::vector<ServiceSchema> parse_schema_text(std::string_view text, const std::string& origin) {
  const json doc = parse_json(text, origin);
  std::vector<ServiceSchema> out;
  if (doc.is_array()) {
    for (std::size_t i = 0; i < doc.size(); ++i) {
      out.push_back(detail::service_from_json(doc[i], origin, "[" + std::to_string(i) + "]"));
    }
  } else {
    out.push_back(detail::service_from_json(doc, origin, "$"));
  }
  return out;
}

/// Loads every `schema*.json` file under path (or the single file at path).
/// Files are parsed in parallel and merged in sorted filename order.
inline SchemaCatalog load_schemas(const fs::path& path) {
  const auto files = list_files(path, "schema", ".json");
  std::vector<std::future<std::vector<ServiceSchema>>> parsed;
  parsed.reserve(files.size());
  for (const auto& f : files) {
    parsed.push_back(std::async(std::launch::async, [f] { return parse_schema_text(read_file(f), f.string()); }));
  }
  SchemaCatalog catalog;
  for (auto& fut : parsed) {
    for (auto& s : fut.get()) catalog.add(std::move(s));
  }
  return catalog;
}

inline json to_json(const ServiceSchema& s) {
  json slots = json::array();
  for (const auto& slot : s.slots) {
    slots.push_back({{"name", slot.name}, {"description", slot.description}, {"is_boolean", slot.is_boolean}});
  }
  return {{"service_name", s.service_name}, {"domain", s.domain}, {"description", s.description}, {"slots", slots}};
}

inline json to_json(const SchemaCatalog& catalog) {
  json out = json::array();
  for (const auto& [name, s] : catalog.services()) out.push_back(to_json(s));
  return out;
}

inline std::string canonical_slotdesc(const Action& a, const ServiceSchema& schema) {
  if (!a.slot) return a.act;
  const auto* spec = schema.find_slot(*a.slot);
  if (!spec || spec->description.empty()) throw MissingDescription(*a.slot);
  return detail::canonical_form(a, &spec->description);
}

inline std::string canonical_slotdesc(const ActionFrame& frame, const ServiceSchema& schema) {
  std::vector<std::string> parts;
  parts.reserve(frame.actions.size());
  for (const auto& a : frame.actions) parts.push_back(canonical_slotdesc(a, schema));
  return join(parts, " ");
}

}  // namespace t2g2
