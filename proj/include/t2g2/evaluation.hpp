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

// Corpus BLEU-4 and slot error rate.
//
// BLEU tokenization: ASCII-lowercase, split on whitespace, then split ASCII
// punctuation into separate tokens, except '$' directly before a digit,
// '.', ',' or ':' between two digits, and an apostrophe between two letters.
//
// SER: an example is an error if any non-boolean slot value is not a
// substring of the prediction, comparing case-insensitively after collapsing
// whitespace runs. Examples without non-boolean values are not counted.

#pragma once

#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "t2g2/example.hpp"
#include "t2g2/json_io.hpp"

namespace t2g2 {

namespace detail {

inline bool ascii_punct(unsigned char c) { return c < 128 && std::ispunct(c); }
inline bool ascii_digit(char c) { return c >= '0' && c <= '9'; }
inline bool ascii_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }

inline bool keeps_attached(std::string_view chunk, std::size_t i) {
  const char c = chunk[i];
  const char prev = i > 0 ? chunk[i - 1] : '\0';
  const char next = i + 1 < chunk.size() ? chunk[i + 1] : '\0';
  if (c == '$') return ascii_digit(next);
  if (c == '.' || c == ',' || c == ':') return ascii_digit(prev) && ascii_digit(next);
  if (c == '\'') return ascii_alpha(prev) && ascii_alpha(next);
  return false;
}

}  // namespace detail

inline std::vector<std::string> tokenize_for_bleu(std::string_view text) {
  std::vector<std::string> tokens;
  std::string word;
  auto flush = [&] {
    if (!word.empty()) tokens.push_back(std::move(word));
    word.clear();
  };
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t end = i;
    while (end < text.size() && !std::isspace(static_cast<unsigned char>(text[end]))) ++end;
    const auto chunk = text.substr(i, end - i);
    for (std::size_t j = 0; j < chunk.size(); ++j) {
      const auto c = static_cast<unsigned char>(chunk[j]);
      if (detail::ascii_punct(c) && !detail::keeps_attached(chunk, j)) {
        flush();
        tokens.emplace_back(1, static_cast<char>(c));
      } else {
        word += static_cast<char>(std::tolower(c));
      }
    }
    flush();
    i = end;
  }
  return tokens;
}

struct BleuOptions {
  bool smooth = false;  // add-one on orders 2..4
};

/// Clipped n-gram match and total counts for n = 1..4 plus lengths.
struct BleuStats {
  std::array<std::size_t, 4> matches{};
  std::array<std::size_t, 4> totals{};
  std::size_t hyp_len = 0;
  std::size_t ref_len = 0;

  BleuStats& operator+=(const BleuStats& o) {
    for (int n = 0; n < 4; ++n) {
      matches[n] += o.matches[n];
      totals[n] += o.totals[n];
    }
    hyp_len += o.hyp_len;
    ref_len += o.ref_len;
    return *this;
  }
};

inline BleuStats sentence_stats(const std::vector<std::string>& hyp, const std::vector<std::string>& ref) {
  BleuStats s;
  s.hyp_len = hyp.size();
  s.ref_len = ref.size();
  for (std::size_t n = 1; n <= 4; ++n) {
    std::unordered_map<std::string, std::size_t> ref_counts;
    for (std::size_t i = 0; i + n <= ref.size(); ++i) {
      std::string gram;
      for (std::size_t j = i; j < i + n; ++j) gram += ref[j] + '\x1f';
      ++ref_counts[gram];
    }
    std::unordered_map<std::string, std::size_t> hyp_counts;
    for (std::size_t i = 0; i + n <= hyp.size(); ++i) {
      std::string gram;
      for (std::size_t j = i; j < i + n; ++j) gram += hyp[j] + '\x1f';
      ++hyp_counts[gram];
      ++s.totals[n - 1];
    }
    for (const auto& [gram, count] : hyp_counts) {
      auto it = ref_counts.find(gram);
      if (it != ref_counts.end()) s.matches[n - 1] += std::min(count, it->second);
    }
  }
  return s;
}

inline double bleu_from_stats(const BleuStats& s, const BleuOptions& opts = {}) {
  if (s.hyp_len == 0) return 0.0;
  double log_sum = 0.0;
  for (int n = 0; n < 4; ++n) {
    double m = static_cast<double>(s.matches[n]);
    double t = static_cast<double>(s.totals[n]);
    if (opts.smooth && n > 0) {
      m += 1.0;
      t += 1.0;
    }
    if (t == 0.0 || m == 0.0) return 0.0;
    log_sum += std::log(m / t);
  }
  const double c = static_cast<double>(s.hyp_len);
  const double r = static_cast<double>(s.ref_len);
  const double bp = c < r ? std::exp(1.0 - r / c) : 1.0;
  return 100.0 * bp * std::exp(log_sum / 4.0);
}

inline double corpus_bleu(const std::vector<std::string>& predictions, const std::vector<std::string>& references,
                          const BleuOptions& opts = {}) {
  if (predictions.size() != references.size()) throw LengthMismatch(predictions.size(), references.size());
  BleuStats total;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    total += sentence_stats(tokenize_for_bleu(predictions[i]), tokenize_for_bleu(references[i]));
  }
  return bleu_from_stats(total, opts);
}

/// ASCII-lowercase with whitespace runs collapsed to one space and trimmed.
inline std::string normalize_for_ser(std::string_view s) {
  std::string out;
  bool pending_space = false;
  for (unsigned char c : s) {
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += static_cast<char>(std::tolower(c));
  }
  return out;
}

/// True when every non-boolean slot value is copied into the prediction.
inline bool slots_copied(const NlgExample& ex, std::string_view prediction) {
  const auto pred = normalize_for_ser(prediction);
  for (const auto& sv : ex.slot_values) {
    if (sv.is_boolean) continue;
    if (pred.find(normalize_for_ser(sv.value)) == std::string::npos) return false;
  }
  return true;
}

inline bool ser_eligible(const NlgExample& ex) {
  for (const auto& sv : ex.slot_values) {
    if (!sv.is_boolean) return true;
  }
  return false;
}

struct SerResult {
  double ser = 0.0;
  std::size_t eligible = 0;
  std::vector<std::string> flagged;  // example ids, input order
  std::size_t excluded_boolean_slots = 0;
};

inline SerResult slot_error_rate(const std::vector<NlgExample>& examples, const std::vector<std::string>& predictions) {
  if (examples.size() != predictions.size()) throw LengthMismatch(examples.size(), predictions.size());
  SerResult out;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    for (const auto& sv : examples[i].slot_values) out.excluded_boolean_slots += sv.is_boolean;
    if (!ser_eligible(examples[i])) continue;
    ++out.eligible;
    if (!slots_copied(examples[i], predictions[i])) out.flagged.push_back(examples[i].id);
  }
  out.ser = out.eligible == 0 ? 0.0 : static_cast<double>(out.flagged.size()) / static_cast<double>(out.eligible);
  return out;
}

struct Metrics {
  double bleu = 0.0;
  double ser = 0.0;
  std::size_t n = 0;
};

struct Provenance {
  std::string mode;
  int context_k = 0;
  std::string model_tag;
  std::string split_manifest_hash;
  std::string config_hash;
  std::optional<int> k_shot;
};

struct EvalReport {
  double bleu = 0.0;
  double ser = 0.0;
  std::size_t n_examples = 0;
  std::size_t ser_eligible = 0;
  std::map<std::string, Metrics> per_domain;
  std::optional<Metrics> seen;
  std::optional<Metrics> unseen;
  std::vector<std::string> shared_domains;  // present in train, dev and test
  std::size_t excluded_boolean_slots = 0;
  std::vector<std::string> flagged;
  Provenance provenance;
};

struct EvalContext {
  std::set<std::string> seen_domains;
  std::vector<std::string> shared_domains;
  Provenance provenance;
};

namespace detail {

inline Metrics metrics_for(const std::vector<NlgExample>& examples, const std::vector<std::string>& predictions,
                           const std::vector<std::size_t>& subset) {
  std::vector<NlgExample> ex;
  std::vector<std::string> preds;
  std::vector<std::string> refs;
  for (auto i : subset) {
    ex.push_back(examples[i]);
    preds.push_back(predictions[i]);
    refs.push_back(examples[i].reference);
  }
  return Metrics{corpus_bleu(preds, refs), slot_error_rate(ex, preds).ser, subset.size()};
}

}  // namespace detail

inline EvalReport evaluate_run(const std::vector<NlgExample>& examples, const std::vector<std::string>& predictions,
                               const EvalContext& ctx) {
  if (examples.size() != predictions.size()) throw LengthMismatch(examples.size(), predictions.size());
  EvalReport report;
  report.n_examples = examples.size();
  report.provenance = ctx.provenance;
  report.shared_domains = ctx.shared_domains;

  std::vector<std::string> refs;
  refs.reserve(examples.size());
  for (const auto& ex : examples) refs.push_back(ex.reference);
  report.bleu = corpus_bleu(predictions, refs);
  const auto ser = slot_error_rate(examples, predictions);
  report.ser = ser.ser;
  report.ser_eligible = ser.eligible;
  report.flagged = ser.flagged;
  report.excluded_boolean_slots = ser.excluded_boolean_slots;

  std::map<std::string, std::vector<std::size_t>> by_domain;
  std::vector<std::size_t> seen;
  std::vector<std::size_t> unseen;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    by_domain[examples[i].domain].push_back(i);
    (ctx.seen_domains.contains(examples[i].domain) ? seen : unseen).push_back(i);
  }
  for (const auto& [domain, idx] : by_domain) report.per_domain[domain] = detail::metrics_for(examples, predictions, idx);
  if (!seen.empty()) report.seen = detail::metrics_for(examples, predictions, seen);
  if (!unseen.empty()) report.unseen = detail::metrics_for(examples, predictions, unseen);
  return report;
}

inline json to_json(const Metrics& m) { return {{"bleu", m.bleu}, {"ser", m.ser}, {"n", m.n}}; }

inline Metrics metrics_from_json(const json& j) {
  return Metrics{j.at("bleu").get<double>(), j.at("ser").get<double>(), j.at("n").get<std::size_t>()};
}

inline json to_json(const EvalReport& r) {
  json per_domain = json::object();
  for (const auto& [d, m] : r.per_domain) per_domain[d] = to_json(m);
  json prov = {{"mode", r.provenance.mode},
               {"context_k", r.provenance.context_k},
               {"model_tag", r.provenance.model_tag},
               {"split_manifest_hash", r.provenance.split_manifest_hash},
               {"config_hash", r.provenance.config_hash}};
  if (r.provenance.k_shot) prov["k_shot"] = *r.provenance.k_shot;
  json j = {{"bleu", r.bleu},
            {"ser", r.ser},
            {"n_examples", r.n_examples},
            {"ser_eligible", r.ser_eligible},
            {"per_domain", per_domain},
            {"shared_domains", r.shared_domains},
            {"excluded_boolean_slots", r.excluded_boolean_slots},
            {"flagged", r.flagged},
            {"provenance", prov}};
  if (r.seen) j["seen"] = to_json(*r.seen);
  if (r.unseen) j["unseen"] = to_json(*r.unseen);
  return j;
}

inline EvalReport eval_report_from_json(const json& j) {
  EvalReport r;
  r.bleu = j.at("bleu").get<double>();
  r.ser = j.at("ser").get<double>();
  r.n_examples = j.at("n_examples").get<std::size_t>();
  r.ser_eligible = j.value("ser_eligible", std::size_t{0});
  for (const auto& [d, m] : j.at("per_domain").items()) r.per_domain[d] = metrics_from_json(m);
  if (j.contains("seen")) r.seen = metrics_from_json(j["seen"]);
  if (j.contains("unseen")) r.unseen = metrics_from_json(j["unseen"]);
  r.shared_domains = j.value("shared_domains", std::vector<std::string>{});
  r.excluded_boolean_slots = j.value("excluded_boolean_slots", std::size_t{0});
  r.flagged = j.value("flagged", std::vector<std::string>{});
  const auto& p = j.at("provenance");
  r.provenance.mode = p.value("mode", std::string{});
  r.provenance.context_k = p.value("context_k", 0);
  r.provenance.model_tag = p.value("model_tag", std::string{});
  r.provenance.split_manifest_hash = p.value("split_manifest_hash", std::string{});
  r.provenance.config_hash = p.value("config_hash", std::string{});
  if (p.contains("k_shot")) r.provenance.k_shot = p["k_shot"].get<int>();
  return r;
}

namespace detail {

inline std::string fmt_fixed(double v, int width, int precision = 2) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%*.*f", width, precision, v);
  return buf;
}

inline std::string pad(std::string_view s, std::size_t width, bool right = false) {
  std::string out(s);
  if (out.size() >= width) return out;
  const std::string fill(width - out.size(), ' ');
  return right ? fill + out : out + fill;
}

inline std::string metric_cells(const std::optional<Metrics>& m) {
  if (!m) return pad("-", 8, true) + pad("-", 8, true);
  return fmt_fixed(m->bleu, 8) + fmt_fixed(100.0 * m->ser, 8);
}

}  // namespace detail

/// Aligned text report: seen / unseen / overall BLEU and SER (%), then one row
/// per domain. Shared domains are marked with '*'.
inline std::string to_table(const EvalReport& r, std::string_view label = {}) {
  const std::string name = label.empty() ? r.provenance.mode : std::string(label);
  std::string out;
  out += "mode=" + r.provenance.mode + " context_k=" + std::to_string(r.provenance.context_k) +
         " model_tag=" + r.provenance.model_tag + " n=" + std::to_string(r.n_examples) + "\n";
  out += detail::pad("", 16) + detail::pad("Seen", 16, true) + detail::pad("Unseen", 16, true) +
         detail::pad("Overall", 16, true) + "\n";
  out += detail::pad("Approach", 16);
  for (int i = 0; i < 3; ++i) out += detail::pad("BLEU", 8, true) + detail::pad("SER", 8, true);
  out += "\n";
  out += detail::pad(name, 16) + detail::metric_cells(r.seen) + detail::metric_cells(r.unseen) +
         detail::metric_cells(Metrics{r.bleu, r.ser, r.n_examples}) + "\n\n";
  out += detail::pad("Domain", 16) + detail::pad("n", 8, true) + detail::pad("BLEU", 8, true) +
         detail::pad("SER", 8, true) + "\n";
  const std::set<std::string> shared(r.shared_domains.begin(), r.shared_domains.end());
  for (const auto& [d, m] : r.per_domain) {
    out += detail::pad((shared.contains(d) ? "*" : " ") + d, 16) + detail::pad(std::to_string(m.n), 8, true) +
           detail::fmt_fixed(m.bleu, 8) + detail::fmt_fixed(100.0 * m.ser, 8) + "\n";
  }
  return out;
}

}  // namespace t2g2
