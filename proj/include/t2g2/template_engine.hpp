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

// Per-service action templates.
//
// A template file holds one service:
//
//   service: RideSharing_1
//   # comment
//   confirm_prefix: Please confirm the following details:
//   goodbye: Have a safe ride!
//   request(dest): Where are you riding to?
//   inform(fare=$x): Your ride costs $x dollars.
//
// Rendering an action frame renders each action with its template and joins
// the sentences with single spaces. Runs of consecutive `confirm` actions share
// one confirm_prefix when coalescing is on.

#pragma once

#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "t2g2/action.hpp"
#include "t2g2/json_io.hpp"

namespace t2g2 {

inline constexpr std::string_view kPlaceholder = "$x";

struct TemplateKey {
  std::string act;
  std::optional<std::string> slot;

  friend bool operator==(const TemplateKey&, const TemplateKey&) = default;
  friend auto operator<=>(const TemplateKey&, const TemplateKey&) = default;
};

inline TemplateKey key_of(const Action& a) { return TemplateKey{a.act, a.slot}; }

inline std::string to_string(const TemplateKey& k) { return k.slot ? k.act + "(" + *k.slot + ")" : k.act; }

struct Template {
  TemplateKey key;
  std::string text;
  bool parameterized = false;  // key was written as act(slot=$x)

  friend bool operator==(const Template&, const Template&) = default;
};

struct ServiceTemplates {
  std::string service;
  std::optional<std::string> confirm_prefix;
  std::map<TemplateKey, Template> templates;

  const Template* find(const TemplateKey& key) const {
    auto it = templates.find(key);
    return it == templates.end() ? nullptr : &it->second;
  }

  friend bool operator==(const ServiceTemplates&, const ServiceTemplates&) = default;
};

class TemplateRegistry {
 public:
  void add(ServiceTemplates fragment) {
    const auto name = fragment.service;
    if (!services_.emplace(name, std::move(fragment)).second) throw DuplicateService(name);
  }

  const ServiceTemplates* find(std::string_view service) const {
    auto it = services_.find(std::string(service));
    return it == services_.end() ? nullptr : &it->second;
  }

  const std::map<std::string, ServiceTemplates>& services() const { return services_; }

  friend bool operator==(const TemplateRegistry&, const TemplateRegistry&) = default;

 private:
  std::map<std::string, ServiceTemplates> services_;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline bool is_name(std::string_view s) {
  if (s.empty()) return false;
  for (unsigned char c : s) {
    if (!(std::isalnum(c) || c == '_' || c == '-')) return false;
  }
  return true;
}

inline bool ends_sentence(std::string_view text) {
  return !text.empty() && (text.back() == '.' || text.back() == '!' || text.back() == '?');
}

}  // namespace detail

inline ServiceTemplates parse_template_text(std::string_view text, const std::string& origin) {
  ServiceTemplates out;
  bool have_header = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    auto line = detail::trim(text.substr(pos, end - pos));
    pos = end + 1;
    if (line.empty() || line.front() == '#') continue;

    const auto colon = line.find(':');
    if (colon == std::string_view::npos) throw ParseError(origin, line_no, "expected 'key: text'");
    const auto head = detail::trim(line.substr(0, colon));
    const auto body = std::string(detail::trim(line.substr(colon + 1)));

    if (!have_header) {
      if (head != "service" || !detail::is_name(body)) {
        throw ParseError(origin, line_no, "file must start with 'service: <name>'");
      }
      out.service = body;
      have_header = true;
      continue;
    }
    if (head == "service") throw ParseError(origin, line_no, "only one service per template file");
    if (body.empty()) throw ParseError(origin, line_no, "empty template text");
    if (head == "confirm_prefix") {
      if (body.find(kPlaceholder) != std::string::npos) {
        throw PlaceholderMismatch(origin + ":" + std::to_string(line_no) + ": confirm_prefix cannot contain $x");
      }
      if (out.confirm_prefix) throw ParseError(origin, line_no, "duplicate confirm_prefix");
      out.confirm_prefix = body;
      continue;
    }

    Template t;
    t.text = body;
    const auto open = head.find('(');
    if (open == std::string_view::npos) {
      t.key.act = std::string(head);
    } else {
      if (head.back() != ')') throw ParseError(origin, line_no, "unterminated '(' in key");
      t.key.act = std::string(detail::trim(head.substr(0, open)));
      auto args = detail::trim(head.substr(open + 1, head.size() - open - 2));
      const auto eq = args.find('=');
      if (eq != std::string_view::npos) {
        if (detail::trim(args.substr(eq + 1)) != kPlaceholder) {
          throw ParseError(origin, line_no, "slot value in a key must be $x");
        }
        args = detail::trim(args.substr(0, eq));
        t.parameterized = true;
      }
      if (!detail::is_name(args)) throw ParseError(origin, line_no, "bad slot name in key");
      t.key.slot = std::string(args);
    }
    if (!detail::is_name(t.key.act)) throw ParseError(origin, line_no, "bad act name in key");

    const bool has_placeholder = t.text.find(kPlaceholder) != std::string::npos;
    if (has_placeholder != t.parameterized) {
      throw PlaceholderMismatch(origin + ":" + std::to_string(line_no) + ": " + to_string(t.key) +
                                (t.parameterized ? " takes a value but the text has no $x"
                                                 : " takes no value but the text contains $x"));
    }
    if (!detail::ends_sentence(t.text)) {
      throw ParseError(origin, line_no, "template text must end with '.', '!' or '?'");
    }
    const auto key = t.key;
    if (!out.templates.emplace(key, std::move(t)).second) {
      throw ParseError(origin, line_no, "duplicate template for " + to_string(key));
    }
  }
  if (!have_header) throw ParseError(origin, 0, "missing 'service: <name>' header");
  return out;
}

inline ServiceTemplates parse_template_file(const fs::path& path) {
  return parse_template_text(read_file(path), path.string());
}

/// Loads every `*.tmpl` file under path (or the single file at path).
inline TemplateRegistry load_templates(const fs::path& path) {
  TemplateRegistry reg;
  for (const auto& f : list_files(path, "", ".tmpl")) reg.add(parse_template_file(f));
  return reg;
}

inline std::string serialize(const ServiceTemplates& st) {
  std::string out = "service: " + st.service + "\n";
  if (st.confirm_prefix) out += "confirm_prefix: " + *st.confirm_prefix + "\n";
  for (const auto& [key, t] : st.templates) {
    out += key.act;
    if (key.slot) out += "(" + *key.slot + (t.parameterized ? "=$x" : "") + ")";
    out += ": " + t.text + "\n";
  }
  return out;
}

struct RenderOptions {
  bool coalesce_confirm = true;
  bool fallback_naive = false;
};

/// Renders one action, splicing its value verbatim for every $x.
inline std::string render_action(const Action& a, const ServiceTemplates& st, const RenderOptions& opts = {}) {
  const auto* t = st.find(key_of(a));
  if (!t) {
    if (opts.fallback_naive) return canonical_naive(a);
    throw MissingTemplate(st.service, to_string(key_of(a)));
  }
  if (t->parameterized != a.value.has_value()) {
    throw PlaceholderMismatch(st.service + " " + to_string(t->key) +
                              (a.value ? ": action has a value but the template takes none"
                                       : ": template needs a value but the action has none"));
  }
  if (!t->parameterized) return t->text;
  std::string out;
  std::size_t pos = 0;
  for (;;) {
    const auto hit = t->text.find(kPlaceholder, pos);
    if (hit == std::string::npos) break;
    out.append(t->text, pos, hit - pos);
    out += *a.value;
    pos = hit + kPlaceholder.size();
  }
  out.append(t->text, pos, std::string::npos);
  return out;
}

inline std::string render_frame(const ActionFrame& frame, const ServiceTemplates& st, const RenderOptions& opts = {}) {
  std::vector<std::string> parts;
  bool in_confirm_run = false;
  for (const auto& a : frame.actions) {
    const bool is_confirm = a.act == "confirm";
    if (is_confirm && !in_confirm_run && opts.coalesce_confirm && st.confirm_prefix) parts.push_back(*st.confirm_prefix);
    in_confirm_run = is_confirm;
    parts.push_back(render_action(a, st, opts));
  }
  return join(parts, " ");
}

inline std::string render_frame(const ActionFrame& frame, const TemplateRegistry& reg, const RenderOptions& opts = {}) {
  if (const auto* st = reg.find(frame.service)) return render_frame(frame, *st, opts);
  const ServiceTemplates empty{frame.service, std::nullopt, {}};
  return render_frame(frame, empty, opts);
}

struct ServiceKey {
  std::string service;
  TemplateKey key;

  friend bool operator==(const ServiceKey&, const ServiceKey&) = default;
  friend auto operator<=>(const ServiceKey&, const ServiceKey&) = default;
};

inline std::string to_string(const ServiceKey& k) { return k.service + " " + to_string(k.key); }

/// Keys required by corpus_keys that the registry cannot render, sorted.
inline std::vector<ServiceKey> validate_coverage(const TemplateRegistry& reg, const std::set<ServiceKey>& corpus_keys) {
  std::vector<ServiceKey> missing;
  for (const auto& k : corpus_keys) {
    const auto* st = reg.find(k.service);
    if (!st || !st->find(k.key)) missing.push_back(k);
  }
  return missing;
}

template <typename Frames>
std::set<ServiceKey> keys_of(const Frames& frames) {
  std::set<ServiceKey> out;
  for (const ActionFrame& f : frames) {
    for (const auto& a : f.actions) out.insert(ServiceKey{f.service, key_of(a)});
  }
  return out;
}

}  // namespace t2g2
