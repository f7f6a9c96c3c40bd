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

// Command-line driver: derive-splits, encode, rewrite, evaluate, report, serve.
//
// Exit codes: 0 ok, 1 usage error, 2 data error, 3 rewriter error.

#pragma once

#include <csignal>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "t2g2/dialogue.hpp"
#include "t2g2/encoders.hpp"
#include "t2g2/evaluation.hpp"
#include "t2g2/example.hpp"
#include "t2g2/json_io.hpp"
#include "t2g2/rewriter.hpp"
#include "t2g2/schema.hpp"
#include "t2g2/service.hpp"
#include "t2g2/splits.hpp"
#include "t2g2/template_engine.hpp"

namespace t2g2::cli {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitRewriter = 3 };

inline const std::vector<std::string>& partitions() {
  static const std::vector<std::string> kPartitions = {"train", "dev", "test"};
  return kPartitions;
}

inline std::string config_hash(const json& run_config) { return sha256_hex(run_config.dump()); }

// ---------------------------------------------------------------------------
// derive-splits

struct SplitJob {
  fs::path corpus;
  std::optional<int> k;
  std::uint64_t seed = 0;
  std::size_t max_context = 7;
  std::vector<std::string> domains;  // empty: all
};

inline json to_json(const SplitJob& job) {
  return {{"corpus", job.corpus.string()},
          {"k", job.k ? json(*job.k) : json(nullptr)},
          {"seed", job.seed},
          {"max_context", job.max_context},
          {"domains", job.domains}};
}

struct SplitArtifacts {
  json manifest;
  std::map<std::string, std::vector<NlgExample>> examples;
  std::map<std::string, SchemaCatalog> schemas;
  std::vector<std::string> warnings;
};

inline SplitArtifacts build_splits(const SplitJob& job) {
  SplitArtifacts out;
  const std::set<std::string> domain_filter(job.domains.begin(), job.domains.end());
  auto wanted = [&](const std::string& domain) { return domain_filter.empty() || domain_filter.contains(domain); };

  json partition_info = json::object();
  std::map<std::string, std::set<std::string>> domains_by_partition;
  json kshot = nullptr;
  for (const auto& part : partitions()) {
    const auto dir = job.corpus / part;
    if (!fs::exists(dir)) {
      if (part == "train") throw DataError("corpus has no train partition: " + dir.string());
      continue;
    }
    auto catalog = load_schemas(dir);
    auto dialogues = load_dialogues(dir, catalog);
    std::erase_if(dialogues, [&](const Dialogue& d) {
      return std::none_of(d.services.begin(), d.services.end(),
                          [&](const std::string& s) { return wanted(catalog.at(s).domain); });
    });
    std::size_t raw_count = dialogues.size();
    if (part == "train") {
      auto filtered = derive_sgd_nlg(TrainPartition{std::move(dialogues)});
      out.warnings.insert(out.warnings.end(), filtered.warnings.begin(), filtered.warnings.end());
      if (job.k) {
        auto split = derive_kshot(filtered, catalog, *job.k, job.seed);
        out.warnings.insert(out.warnings.end(), split.warnings.begin(), split.warnings.end());
        kshot = json::object();
        for (const auto& sel : split.domains) {
          std::vector<std::string> acts;
          std::vector<std::string> slots;
          for (const auto& item : sel.covered) {
            (item.starts_with("act:") ? acts : slots).push_back(item.substr(item.find(':') + 1));
          }
          kshot[sel.domain] = {{"available", sel.available},
                               {"selected", sel.dialogue_ids.size()},
                               {"dialogue_ids", sel.dialogue_ids},
                               {"covered_acts", acts},
                               {"covered_slots", slots}};
        }
        dialogues = std::move(split.dialogues);
      } else {
        dialogues = std::move(filtered.dialogues);
      }
    }
    auto examples = extract_examples(dialogues, catalog, job.max_context);
    std::erase_if(examples, [&](const NlgExample& ex) { return !wanted(ex.domain); });
    for (const auto& ex : examples) domains_by_partition[part].insert(ex.domain);
    partition_info[part] = {{"raw_dialogues", raw_count},
                            {"dialogues", dialogues.size()},
                            {"examples", examples.size()},
                            {"domains", domains_by_partition[part]}};
    out.examples[part] = std::move(examples);
    out.schemas[part] = std::move(catalog);
  }

  const auto& seen = domains_by_partition["train"];
  for (auto& [part, examples] : out.examples) mark_seen(examples, seen);
  std::vector<std::string> shared;
  for (const auto& d : seen) {
    if (domains_by_partition["dev"].contains(d) && domains_by_partition["test"].contains(d)) shared.push_back(d);
  }
  std::size_t kshot_total = 0;
  if (kshot.is_object()) {
    for (const auto& [d, info] : kshot.items()) kshot_total += info["selected"].get<std::size_t>();
  }
  out.manifest = {{"k", job.k ? json(*job.k) : json(nullptr)},
                  {"seed", job.seed},
                  {"max_context", job.max_context},
                  {"partitions", partition_info},
                  {"seen_domains", seen},
                  {"shared_domains", shared},
                  {"kshot", kshot},
                  {"kshot_total_dialogues", kshot_total},
                  {"warnings", out.warnings},
                  {"run_config", to_json(job)},
                  {"config_hash", config_hash(to_json(job))}};
  return out;
}

inline void write_splits(const SplitArtifacts& art, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  for (const auto& [part, examples] : art.examples) {
    write_file(out_dir / (part + ".jsonl"), examples_to_jsonl(examples));
    write_file(out_dir / (part + ".schema.json"), dump_canonical(to_json(art.schemas.at(part))));
  }
  write_file(out_dir / "manifest.json", dump_canonical(art.manifest));
}

struct LoadedSplit {
  json manifest;
  std::string manifest_hash;
  std::vector<NlgExample> examples;
  SchemaCatalog schemas;
};

inline LoadedSplit load_split(const fs::path& split_dir, const std::string& partition) {
  LoadedSplit out;
  const auto manifest_text = read_file(split_dir / "manifest.json");
  out.manifest = parse_json(manifest_text, (split_dir / "manifest.json").string());
  out.manifest_hash = sha256_hex(manifest_text);
  const auto examples_path = split_dir / (partition + ".jsonl");
  out.examples = examples_from_jsonl(read_file(examples_path), examples_path.string());
  const auto schema_path = split_dir / (partition + ".schema.json");
  for (auto& s : parse_schema_text(read_file(schema_path), schema_path.string())) out.schemas.add(std::move(s));
  return out;
}

// ---------------------------------------------------------------------------
// encode

struct EncodeJob {
  fs::path split_dir;
  std::string partition = "test";
  EncodingMode mode = EncodingMode::kTemplate;
  EncoderOptions encoder;
  fs::path templates;
};

inline json to_json(const EncodeJob& job) {
  return {{"split", job.split_dir.string()},
          {"partition", job.partition},
          {"mode", std::string(to_string(job.mode))},
          {"context_k", job.encoder.context_k},
          {"service_prefix", job.encoder.include_service_prefix},
          {"context_separator", job.encoder.context_separator},
          {"coalesce_confirm", job.encoder.render.coalesce_confirm},
          {"fallback_naive", job.encoder.render.fallback_naive},
          {"templates", job.templates.string()}};
}

struct EncodedSet {
  std::vector<EncodedRecord> records;
  std::vector<std::string> ids;
};

/// Encodes examples; in template mode every required template must exist
/// unless the naive fallback is on.
inline EncodedSet encode_examples(const std::vector<NlgExample>& examples, EncodingMode mode,
                                  const TemplateRegistry& reg, const SchemaCatalog& schemas,
                                  const EncoderOptions& opts) {
  if (mode == EncodingMode::kTemplate && !opts.render.fallback_naive) {
    std::vector<ActionFrame> frames;
    frames.reserve(examples.size());
    for (const auto& ex : examples) frames.push_back(ex.frame);
    const auto missing = validate_coverage(reg, keys_of(frames));
    if (!missing.empty()) {
      std::vector<std::string> names;
      for (const auto& k : missing) names.push_back(to_string(k));
      throw MissingTemplate(missing.front().service, to_string(missing.front().key), names);
    }
  }
  EncodedSet out;
  out.records.reserve(examples.size());
  for (const auto& ex : examples) {
    out.records.push_back(EncodedRecord{encode(ex, mode, reg, schemas, opts), ex.reference});
    out.ids.push_back(ex.id);
  }
  return out;
}

// ---------------------------------------------------------------------------
// rewrite

struct RewriterFlags {
  std::string kind = "copy";
  std::string endpoint;
  int timeout_ms = 30000;
  int retries = 2;
  int backoff_ms = 200;
  int max_in_flight = 4;
  std::size_t batch_size = 32;
  DecodeConfig decode;
  std::string model_tag;
};

inline json to_json(const RewriterFlags& f) {
  json j = {{"kind", f.kind}, {"decode", to_json(f.decode)}, {"model_tag", f.model_tag}, {"batch_size", f.batch_size}};
  if (f.kind == "remote") j["endpoint"] = f.endpoint;
  return j;
}

inline std::unique_ptr<Rewriter> make_rewriter(const RewriterFlags& f) {
  f.decode.validate();
  if (f.kind == "copy") return std::make_unique<CopyRewriter>();
  if (f.kind == "remote") {
    return std::make_unique<RemoteRewriter>(RemoteOptions{f.endpoint, std::chrono::milliseconds(f.timeout_ms), f.retries,
                                                          std::chrono::milliseconds(f.backoff_ms), f.max_in_flight});
  }
  throw UsageError("unknown rewriter '" + f.kind + "' (expected copy or remote)");
}

inline std::string lines_to_text(const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& l : lines) out += escape_field(l) + "\n";
  return out;
}

inline std::vector<std::string> lines_from_text(std::string_view text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    out.push_back(unescape_field(text.substr(pos, end - pos)));
    pos = end + 1;
  }
  return out;
}

inline void add_rewriter_flags(CLI::App* cmd, RewriterFlags& f) {
  cmd->add_option("--rewriter", f.kind, "copy or remote")->check(CLI::IsMember({"copy", "remote"}));
  cmd->add_option("--endpoint", f.endpoint, "remote rewriter base URL")->envname("T2G2_REWRITER_ENDPOINT");
  cmd->add_option("--timeout-ms", f.timeout_ms)->check(CLI::PositiveNumber);
  cmd->add_option("--retries", f.retries)->check(CLI::NonNegativeNumber);
  cmd->add_option("--backoff-ms", f.backoff_ms)->check(CLI::NonNegativeNumber);
  cmd->add_option("--max-in-flight", f.max_in_flight)->check(CLI::Range(1, 64));
  cmd->add_option("--batch-size", f.batch_size)->check(CLI::PositiveNumber);
  cmd->add_option("--beam-width", f.decode.beam_width)->check(CLI::PositiveNumber);
  cmd->add_option("--length-penalty", f.decode.length_penalty_alpha);
  cmd->add_option("--max-output-tokens", f.decode.max_output_tokens)->check(CLI::PositiveNumber);
  cmd->add_option("--model-tag", f.model_tag);
}

// ---------------------------------------------------------------------------
// evaluate / report

inline EvalContext eval_context_from_manifest(const json& manifest, const std::string& manifest_hash) {
  EvalContext ctx;
  for (const auto& d : manifest.value("seen_domains", json::array())) ctx.seen_domains.insert(d.get<std::string>());
  ctx.shared_domains = manifest.value("shared_domains", std::vector<std::string>{});
  ctx.provenance.split_manifest_hash = manifest_hash;
  if (manifest.contains("k") && manifest["k"].is_number_integer()) ctx.provenance.k_shot = manifest["k"].get<int>();
  return ctx;
}

inline std::string shot_label(const std::optional<int>& k) { return k ? std::to_string(*k) + "-shot" : "All Data"; }

/// One row per report, columns mirroring the seen/unseen table.
inline std::string summary_table(const std::vector<std::pair<std::string, EvalReport>>& rows) {
  std::string out = detail::pad("", 16) + detail::pad("Seen", 16, true) + detail::pad("Unseen", 16, true) +
                    detail::pad("Overall", 16, true) + "\n" + detail::pad("Run", 16);
  for (int i = 0; i < 3; ++i) out += detail::pad("BLEU", 8, true) + detail::pad("SER", 8, true);
  out += "\n";
  for (const auto& [label, r] : rows) {
    out += detail::pad(label, 16) + detail::metric_cells(r.seen) + detail::metric_cells(r.unseen) +
           detail::metric_cells(Metrics{r.bleu, r.ser, r.n_examples}) + "\n";
  }
  return out;
}

/// k-shot grid: model x {BLEU, SER} rows, one column per shot count.
inline std::string grid_table(const std::string& model, const std::vector<std::pair<std::string, EvalReport>>& cells) {
  std::string out = detail::pad("Model", 12) + detail::pad("Metric", 8);
  for (const auto& [label, r] : cells) out += detail::pad(label, 10, true);
  out += "\n" + detail::pad(model, 12) + detail::pad("BLEU", 8);
  for (const auto& [label, r] : cells) out += detail::fmt_fixed(r.bleu, 10);
  out += "\n" + detail::pad("", 12) + detail::pad("SER", 8);
  for (const auto& [label, r] : cells) out += detail::fmt_fixed(100.0 * r.ser, 10);
  return out + "\n";
}

inline json report_document(const EvalReport& report, const json& run_config) {
  json doc = to_json(report);
  doc["run_config"] = run_config;
  return doc;
}

// ---------------------------------------------------------------------------

inline int exit_code_for(const Error& e) {
  switch (e.error_class()) {
    case ErrorClass::kUsage: return kExitUsage;
    case ErrorClass::kData: return kExitData;
    case ErrorClass::kRewriter: return kExitRewriter;
  }
  return kExitData;
}

namespace detail {

inline httplib::Server*& active_server() {
  static httplib::Server* server = nullptr;
  return server;
}

}  // namespace detail

/// Runs the CLI. argv[0] is the program name.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Template guided text generation toolkit for task-oriented dialogue NLG", "t2g2"};
  app.set_config("--config", "", "TOML config file; flags override its values");
  app.require_subcommand(1);

  SplitJob split_job;
  fs::path split_out;
  int k_flag = 0;
  auto* derive = app.add_subcommand("derive-splits", "Derive SGD-NLG / k-shot splits and example files");
  derive->add_option("--corpus", split_job.corpus, "corpus root with train/, dev/, test/")->required();
  derive->add_option("--out", split_out, "output directory")->required();
  derive->add_option("--k", k_flag, "dialogues per domain (omit for all)")->check(CLI::PositiveNumber);
  derive->add_option("--seed", split_job.seed);
  derive->add_option("--max-context", split_job.max_context, "utterances of history stored per example");
  derive->add_option("--domain", split_job.domains, "restrict to these domains (repeatable)");

  EncodeJob enc;
  fs::path enc_out;
  std::string enc_mode = "template";
  bool no_coalesce = false;
  auto* encode_cmd = app.add_subcommand("encode", "Encode a split partition into (input, target) records");
  encode_cmd->add_option("--split", enc.split_dir, "directory written by derive-splits")->required();
  encode_cmd->add_option("--partition", enc.partition)->check(CLI::IsMember(partitions()));
  encode_cmd->add_option("--mode", enc_mode)->check(CLI::IsMember({"naive", "slotdesc", "template"}));
  encode_cmd->add_option("--context", enc.encoder.context_k, "previous utterances to prepend");
  encode_cmd->add_option("--templates", enc.templates, "template directory");
  encode_cmd->add_flag("--fallback-naive", enc.encoder.render.fallback_naive, "render missing templates naively");
  encode_cmd->add_flag("--no-coalesce", no_coalesce, "do not share the confirm prefix");
  encode_cmd->add_flag("--service-prefix", enc.encoder.include_service_prefix, "prefix inputs with the service name");
  encode_cmd->add_option("--out", enc_out, "output .tsv")->required();

  RewriterFlags rw;
  fs::path rw_input;
  fs::path rw_out;
  bool conformance = false;
  auto* rewrite_cmd = app.add_subcommand("rewrite", "Rewrite encoded inputs into responses");
  rewrite_cmd->add_option("--input", rw_input, "encoded .tsv");
  rewrite_cmd->add_option("--out", rw_out, "predictions file, one per line");
  rewrite_cmd->add_flag("--conformance", conformance, "check the endpoint against the wire protocol and exit");
  add_rewriter_flags(rewrite_cmd, rw);

  fs::path ev_split;
  std::string ev_partition = "test";
  fs::path ev_predictions;
  fs::path ev_out;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score predictions with BLEU and SER");
  evaluate_cmd->add_option("--split", ev_split)->required();
  evaluate_cmd->add_option("--partition", ev_partition)->check(CLI::IsMember(partitions()));
  evaluate_cmd->add_option("--predictions", ev_predictions)->required();
  evaluate_cmd->add_option("--out", ev_out, "report path prefix (.json and .txt are written)")->required();

  std::vector<fs::path> report_inputs;
  bool grid = false;
  SplitJob grid_job;
  fs::path grid_templates;
  fs::path report_out;
  std::string grid_mode = "template";
  std::size_t grid_context = 0;
  RewriterFlags grid_rw;
  auto* report_cmd = app.add_subcommand("report", "Tabulate reports or run the k-shot grid");
  report_cmd->add_option("--reports", report_inputs, "report .json files");
  report_cmd->add_flag("--kshot-grid", grid, "derive, encode, rewrite and evaluate for k = 5..80 and all data");
  report_cmd->add_option("--corpus", grid_job.corpus);
  report_cmd->add_option("--seed", grid_job.seed);
  report_cmd->add_option("--templates", grid_templates);
  report_cmd->add_option("--mode", grid_mode)->check(CLI::IsMember({"naive", "slotdesc", "template"}));
  report_cmd->add_option("--context", grid_context);
  report_cmd->add_option("--out", report_out, "output file (tables) or directory (grid)");
  add_rewriter_flags(report_cmd, grid_rw);

  fs::path sv_schemas;
  fs::path sv_templates;
  std::string sv_host = "0.0.0.0";
  int sv_port = 8080;
  std::string sv_mode = "template";
  std::size_t sv_context = 0;
  RewriterFlags sv_rw;
  auto* serve_cmd = app.add_subcommand("serve", "Serve POST /respond and GET /healthz");
  serve_cmd->add_option("--schemas", sv_schemas, "schema file or directory")->required();
  serve_cmd->add_option("--templates", sv_templates, "template directory")->required();
  serve_cmd->add_option("--host", sv_host);
  serve_cmd->add_option("--port", sv_port)->check(CLI::Range(1, 65535));
  serve_cmd->add_option("--mode", sv_mode)->check(CLI::IsMember({"naive", "slotdesc", "template"}));
  serve_cmd->add_option("--context", sv_context);
  add_rewriter_flags(serve_cmd, sv_rw);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  auto warn = [&err](const std::vector<std::string>& ws) {
    for (const auto& w : ws) err << "warning: " << w << "\n";
  };

  try {
    if (derive->parsed()) {
      if (derive->count("--k")) split_job.k = k_flag;
      const auto art = build_splits(split_job);
      warn(art.warnings);
      write_splits(art, split_out);
      out << "wrote splits to " << split_out.string();
      if (split_job.k) out << " (" << art.manifest["kshot_total_dialogues"].get<std::size_t>() << " train dialogues)";
      out << "\n";
      return kExitOk;
    }

    if (encode_cmd->parsed()) {
      enc.mode = parse_encoding_mode(enc_mode);
      enc.encoder.render.coalesce_confirm = !no_coalesce;
      if (enc.mode == EncodingMode::kTemplate && enc.templates.empty()) throw UsageError("--templates is required for template mode");
      const auto split = load_split(enc.split_dir, enc.partition);
      const auto reg = enc.templates.empty() ? TemplateRegistry{} : load_templates(enc.templates);
      const auto encoded = encode_examples(split.examples, enc.mode, reg, split.schemas, enc.encoder);
      const json run_config = to_json(enc);
      write_file(enc_out, records_to_tsv(encoded.records));
      json meta = {{"mode", std::string(to_string(enc.mode))},
                   {"context_k", enc.encoder.context_k},
                   {"partition", enc.partition},
                   {"n", encoded.records.size()},
                   {"ids", encoded.ids},
                   {"split_manifest_hash", split.manifest_hash},
                   {"run_config", run_config},
                   {"config_hash", config_hash(run_config)}};
      write_file(enc_out.string() + ".meta.json", dump_canonical(meta));
      out << "encoded " << encoded.records.size() << " examples to " << enc_out.string() << "\n";
      return kExitOk;
    }

    if (rewrite_cmd->parsed()) {
      if (conformance) {
        if (rw.endpoint.empty()) throw UsageError("--conformance needs --endpoint");
        const auto result = check_conformance(rw.endpoint, std::chrono::milliseconds(rw.timeout_ms));
        for (const auto& f : result.failures) err << "FAIL " << f << "\n";
        out << (result.passed ? "conformance: PASS" : "conformance: FAIL") << "\n";
        return result.passed ? kExitOk : kExitRewriter;
      }
      if (rw_input.empty() || rw_out.empty()) throw UsageError("rewrite needs --input and --out");
      const auto records = records_from_tsv(read_file(rw_input), rw_input.string());
      std::vector<std::string> inputs;
      inputs.reserve(records.size());
      for (const auto& r : records) inputs.push_back(r.input);
      auto rewriter = make_rewriter(rw);
      const auto response = rewrite_all(*rewriter, inputs, rw.batch_size, rw.decode, rw.model_tag,
                                        static_cast<std::size_t>(rw.max_in_flight));
      write_file(rw_out, lines_to_text(response.outputs));
      json meta = {{"model_tag", response.model_tag}, {"n", response.outputs.size()}, {"rewriter", to_json(rw)},
                   {"input_sha256", sha256_hex(read_file(rw_input))}};
      const auto enc_meta_path = fs::path(rw_input.string() + ".meta.json");
      if (fs::exists(enc_meta_path)) {
        const auto enc_meta = load_json_file(enc_meta_path);
        meta["encoding"] = {{"mode", enc_meta.value("mode", "")},
                            {"context_k", enc_meta.value("context_k", 0)},
                            {"partition", enc_meta.value("partition", "")},
                            {"ids", enc_meta.value("ids", json::array())}};
      }
      write_file(rw_out.string() + ".meta.json", dump_canonical(meta));
      err << "rewrote " << response.outputs.size() << " inputs in " << response.latency_ms << " ms\n";
      return kExitOk;
    }

    if (evaluate_cmd->parsed()) {
      const auto split = load_split(ev_split, ev_partition);
      const auto predictions = lines_from_text(read_file(ev_predictions));
      if (predictions.size() != split.examples.size()) throw LengthMismatch(split.examples.size(), predictions.size());
      auto ctx = eval_context_from_manifest(split.manifest, split.manifest_hash);
      const auto meta_path = fs::path(ev_predictions.string() + ".meta.json");
      if (fs::exists(meta_path)) {
        const auto meta = load_json_file(meta_path);
        ctx.provenance.model_tag = meta.value("model_tag", "");
        if (meta.contains("encoding")) {
          const auto& e = meta["encoding"];
          ctx.provenance.mode = e.value("mode", "");
          ctx.provenance.context_k = e.value("context_k", 0);
          const auto ids = e.value("ids", std::vector<std::string>{});
          for (std::size_t i = 0; i < ids.size() && i < split.examples.size(); ++i) {
            if (ids[i] != split.examples[i].id) throw DataError("predictions are not aligned with " + ev_partition);
          }
        }
      }
      const json run_config = {{"split", ev_split.string()},
                               {"partition", ev_partition},
                               {"predictions", ev_predictions.string()},
                               {"predictions_sha256", sha256_hex(read_file(ev_predictions))},
                               {"mode", ctx.provenance.mode},
                               {"context_k", ctx.provenance.context_k},
                               {"model_tag", ctx.provenance.model_tag}};
      ctx.provenance.config_hash = config_hash(run_config);
      const auto report = evaluate_run(split.examples, predictions, ctx);
      write_file(ev_out.string() + ".json", dump_canonical(report_document(report, run_config)));
      write_file(ev_out.string() + ".txt", to_table(report));
      out << to_table(report);
      return kExitOk;
    }

    if (report_cmd->parsed()) {
      if (!grid) {
        if (report_inputs.empty()) throw UsageError("report needs --reports or --kshot-grid");
        std::vector<std::pair<std::string, EvalReport>> rows;
        for (const auto& p : report_inputs) {
          const auto r = eval_report_from_json(load_json_file(p));
          std::string label = r.provenance.mode.empty() ? p.stem().string() : r.provenance.mode;
          label += " " + shot_label(r.provenance.k_shot);
          rows.emplace_back(label, r);
        }
        const auto table = summary_table(rows);
        if (!report_out.empty()) write_file(report_out, table);
        out << table;
        return kExitOk;
      }
      if (grid_job.corpus.empty() || report_out.empty()) throw UsageError("--kshot-grid needs --corpus and --out");
      const auto mode = parse_encoding_mode(grid_mode);
      if (mode == EncodingMode::kTemplate && grid_templates.empty()) throw UsageError("--templates is required for template mode");
      const auto reg = grid_templates.empty() ? TemplateRegistry{} : load_templates(grid_templates);
      auto rewriter = make_rewriter(grid_rw);
      EncoderOptions eopts;
      eopts.context_k = grid_context;
      std::vector<std::optional<int>> shots;
      for (int k : kCanonicalShots) shots.emplace_back(k);
      shots.emplace_back(std::nullopt);
      std::vector<std::pair<std::string, EvalReport>> cells;
      json grid_json = json::array();
      for (const auto& k : shots) {
        SplitJob job = grid_job;
        job.k = k;
        job.max_context = std::max<std::size_t>(job.max_context, grid_context);
        const auto art = build_splits(job);
        warn(art.warnings);
        const auto label = shot_label(k);
        const auto dir = report_out / (k ? "k" + std::to_string(*k) : std::string("all"));
        write_splits(art, dir);
        const auto manifest_text = read_file(dir / "manifest.json");
        const auto& test = art.examples.at("test");
        const auto train_enc = encode_examples(art.examples.at("train"), mode, reg, art.schemas.at("train"), eopts);
        write_file(dir / "train.tsv", records_to_tsv(train_enc.records));
        const auto test_enc = encode_examples(test, mode, reg, art.schemas.at("test"), eopts);
        std::vector<std::string> inputs;
        for (const auto& r : test_enc.records) inputs.push_back(r.input);
        const auto tag = grid_rw.model_tag.empty() ? std::string{} : grid_rw.model_tag + "-" + label;
        const auto response = rewrite_all(*rewriter, inputs, grid_rw.batch_size, grid_rw.decode, tag,
                                          static_cast<std::size_t>(grid_rw.max_in_flight));
        auto ctx = eval_context_from_manifest(art.manifest, sha256_hex(manifest_text));
        ctx.provenance.mode = grid_mode;
        ctx.provenance.context_k = static_cast<int>(grid_context);
        ctx.provenance.model_tag = response.model_tag;
        const json run_config = {{"split", to_json(job)}, {"mode", grid_mode}, {"context_k", grid_context},
                                 {"rewriter", to_json(grid_rw)}, {"templates", grid_templates.string()}};
        ctx.provenance.config_hash = config_hash(run_config);
        const auto report = evaluate_run(test, response.outputs, ctx);
        write_file(dir / "report.json", dump_canonical(report_document(report, run_config)));
        grid_json.push_back({{"label", label}, {"bleu", report.bleu}, {"ser", report.ser},
                             {"train_dialogues", art.manifest["partitions"]["train"]["dialogues"]}});
        cells.emplace_back(label, report);
      }
      const auto table = grid_table(grid_mode, cells);
      write_file(report_out / "grid.txt", table);
      write_file(report_out / "grid.json", dump_canonical(grid_json));
      out << table;
      return kExitOk;
    }

    if (serve_cmd->parsed()) {
      SchemaCatalog schemas = load_schemas(sv_schemas);
      if (schemas.empty()) {
        // A split directory stores catalogs as <partition>.schema.json.
        for (const auto& f : list_files(sv_schemas, "", ".schema.json")) {
          for (auto& s : parse_schema_text(read_file(f), f.string())) {
            if (!schemas.find(s.service_name)) schemas.add(std::move(s));
          }
        }
      }
      const auto reg = load_templates(sv_templates);
      auto rewriter = make_rewriter(sv_rw);
      ServiceOptions opts;
      opts.mode = parse_encoding_mode(sv_mode);
      opts.encoder.context_k = sv_context;
      opts.decode = sv_rw.decode;
      opts.model_tag = sv_rw.model_tag;
      NlgService service(schemas, reg, *rewriter, opts);
      httplib::Server server;
      mount_service(server, service);
      detail::active_server() = &server;
      std::signal(SIGINT, [](int) {
        if (auto* s = detail::active_server()) s->stop();
      });
      std::signal(SIGTERM, [](int) {
        if (auto* s = detail::active_server()) s->stop();
      });
      err << "serving " << schemas.size() << " services on " << sv_host << ":" << sv_port << "\n";
      const bool ok = server.listen(sv_host, sv_port);
      detail::active_server() = nullptr;
      if (!ok) throw UsageError("cannot listen on " + sv_host + ":" + std::to_string(sv_port));
      return kExitOk;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  std::vector<const char*> argv;
  argv.push_back("t2g2");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace t2g2::cli
