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

#include <string>
#include <string_view>
#include <vector>

#include "t2g2/example.hpp"
#include "t2g2/schema.hpp"
#include "t2g2/template_engine.hpp"

namespace t2g2 {

enum class EncodingMode { kNaive, kSlotDesc, kTemplate };

inline std::string_view to_string(EncodingMode m) {
  switch (m) {
    case EncodingMode::kNaive: return "naive";
    case EncodingMode::kSlotDesc: return "slotdesc";
    case EncodingMode::kTemplate: return "template";
  }
  return "naive";
}

inline EncodingMode parse_encoding_mode(std::string_view s) {
  if (s == "naive") return EncodingMode::kNaive;
  if (s == "slotdesc") return EncodingMode::kSlotDesc;
  if (s == "template") return EncodingMode::kTemplate;
  throw UsageError("unknown encoding mode '" + std::string(s) + "' (expected naive, slotdesc or template)");
}

struct EncoderOptions {
  std::size_t context_k = 0;
  bool include_service_prefix = false;
  std::string context_separator = " ";
  RenderOptions render;
};

/// Encodes the action frame alone, without context or prefix.
inline std::string encode_actions(const ActionFrame& frame, EncodingMode mode, const TemplateRegistry& reg,
                                  const SchemaCatalog& schemas, const RenderOptions& render = {}) {
  switch (mode) {
    case EncodingMode::kNaive: return canonical_naive(frame);
    case EncodingMode::kSlotDesc: return canonical_slotdesc(frame, schemas.at(frame.service));
    case EncodingMode::kTemplate: return render_frame(frame, reg, render);
  }
  return {};
}

inline std::string speaker_tag(Speaker s) { return s == Speaker::kUser ? "user:" : "system:"; }

/// Model input: `[service ]` + last context_k utterances, each tagged with its
/// speaker and joined by context_separator, + separator + action encoding.
inline std::string encode(const NlgExample& ex, EncodingMode mode, const TemplateRegistry& reg,
                          const SchemaCatalog& schemas, const EncoderOptions& opts = {}) {
  std::string out;
  if (opts.include_service_prefix) out += ex.service + " ";
  const std::size_t take = std::min(opts.context_k, ex.context.size());
  for (std::size_t i = ex.context.size() - take; i < ex.context.size(); ++i) {
    out += speaker_tag(ex.context[i].speaker) + " " + ex.context[i].text;
    out += opts.context_separator;
  }
  out += encode_actions(ex.frame, mode, reg, schemas, opts.render);
  return out;
}

/// Escapes backslash, tab, and newline so a field fits in one TSV column.
inline std::string escape_field(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string unescape_field(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '\\' || i + 1 == s.size()) {
      out += s[i];
      continue;
    }
    switch (s[++i]) {
      case 't': out += '\t'; break;
      case 'n': out += '\n'; break;
      case 'r': out += '\r'; break;
      default: out += s[i];
    }
  }
  return out;
}

struct EncodedRecord {
  std::string input;
  std::string target;
};

inline std::string records_to_tsv(const std::vector<EncodedRecord>& records) {
  std::string out;
  for (const auto& r : records) out += escape_field(r.input) + "\t" + escape_field(r.target) + "\n";
  return out;
}

inline std::vector<EncodedRecord> records_from_tsv(std::string_view text, const std::string& origin) {
  std::vector<EncodedRecord> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    const auto line = text.substr(pos, end - pos);
    pos = end + 1;
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos || line.find('\t', tab + 1) != std::string_view::npos) {
      throw ParseError(origin, line_no, "expected exactly two tab-separated columns");
    }
    out.push_back(EncodedRecord{unescape_field(line.substr(0, tab)), unescape_field(line.substr(tab + 1))});
  }
  return out;
}

}  // namespace t2g2
