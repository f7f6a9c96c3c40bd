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

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "t2g2/error.hpp"

namespace t2g2 {

/// One system dialogue act, optionally parameterized by a slot and a
/// verbatim value. Act names are an open vocabulary taken from the data.
struct Action {
  std::string act;
  std::optional<std::string> slot;
  std::optional<std::string> value;

  friend bool operator==(const Action&, const Action&) = default;
  friend auto operator<=>(const Action&, const Action&) = default;
};

/// All actions a system turn emits for one service, in source order.
struct ActionFrame {
  std::string service;
  std::vector<Action> actions;

  friend bool operator==(const ActionFrame&, const ActionFrame&) = default;
};

/// An action as it appears in source data: one slot, any number of values.
struct RawAction {
  std::string act;
  std::optional<std::string> slot;
  std::vector<std::string> values;
};

namespace detail {

inline bool is_identifier_char_forbidden(char c) {
  return c == '(' || c == ')' || c == '=' || c == ' ' || c == '\t' || c == '\n' || c == '\r';
}

inline bool has_record_breaking_char(std::string_view s) {
  return s.find_first_of("\t\n\r") != std::string_view::npos;
}

}  // namespace detail

/// Throws DataError when the action cannot be serialized unambiguously.
inline void validate_action(const Action& a) {
  if (a.act.empty()) throw DataError("action has an empty act name");
  for (char c : a.act) {
    if (detail::is_identifier_char_forbidden(c)) throw DataError("act name contains a delimiter: " + a.act);
  }
  if (a.value && !a.slot) throw DataError("action '" + a.act + "' carries a value but no slot");
  if (a.slot) {
    if (a.slot->empty()) throw DataError("action '" + a.act + "' has an empty slot name");
    for (char c : *a.slot) {
      if (detail::is_identifier_char_forbidden(c)) throw DataError("slot name contains a delimiter: " + *a.slot);
    }
  }
  if (a.value && detail::has_record_breaking_char(*a.value)) {
    throw DataError("slot value contains a tab or newline: " + *a.slot);
  }
}

/// Splits a multi-valued action into single-valued ones, preserving order.
inline std::vector<Action> decompose(const RawAction& raw) {
  std::vector<Action> out;
  if (raw.values.empty() || !raw.slot) {
    out.push_back(Action{raw.act, raw.slot, std::nullopt});
    return out;
  }
  out.reserve(raw.values.size());
  for (const auto& v : raw.values) out.push_back(Action{raw.act, raw.slot, v});
  return out;
}

namespace detail {

inline std::string canonical_form(const Action& a, const std::string* slot_text) {
  if (!a.slot) return a.act;
  std::string out = a.act + " ( " + *slot_text;
  if (a.value) out += " = " + *a.value;
  out += " )";
  return out;
}

}  // namespace detail

/// `act`, `act ( slot )` or `act ( slot = value )`.
inline std::string canonical_naive(const Action& a) {
  return detail::canonical_form(a, a.slot ? &*a.slot : nullptr);
}

/// Parses a single canonical naive string back into an Action.
inline Action parse_canonical_naive(std::string_view text) {
  Action a;
  const auto open = text.find(" ( ");
  if (open == std::string_view::npos) {
    a.act = std::string(text);
    validate_action(a);
    return a;
  }
  a.act = std::string(text.substr(0, open));
  if (text.size() < open + 5 || text.substr(text.size() - 2) != " )") {
    throw DataError("malformed canonical action: " + std::string(text));
  }
  std::string_view inner = text.substr(open + 3, text.size() - open - 5);
  const auto eq = inner.find(" = ");
  if (eq == std::string_view::npos) {
    a.slot = std::string(inner);
  } else {
    a.slot = std::string(inner.substr(0, eq));
    a.value = std::string(inner.substr(eq + 3));
  }
  validate_action(a);
  return a;
}

inline std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

inline std::string canonical_naive(const ActionFrame& frame) {
  std::vector<std::string> parts;
  parts.reserve(frame.actions.size());
  for (const auto& a : frame.actions) parts.push_back(canonical_naive(a));
  return join(parts, " ");
}

}  // namespace t2g2
