#include "cardcorr/corpus_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "cardcorr/errors.hpp"
#include "cardcorr/explain_parser.hpp"

namespace cardcorr {

using nlohmann::json;

namespace {

const json& require(const json& j, const char* key, const std::string& execution_id) {
  const auto it = j.find(key);
  if (it == j.end()) throw SchemaViolation(execution_id, key, "missing required key");
  return *it;
}

std::string require_string(const json& j, const char* key, const std::string& execution_id) {
  const auto& value = require(j, key, execution_id);
  if (!value.is_string()) throw SchemaViolation(execution_id, key, "expected a string");
  return value.get<std::string>();
}

std::optional<std::string> optional_string(const json& j, const char* key, const std::string& execution_id) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw SchemaViolation(execution_id, key, "expected a string");
  return it->get<std::string>();
}

double non_negative_number(const json& value, const char* key, const std::string& execution_id) {
  if (!value.is_number()) throw SchemaViolation(execution_id, key, "expected a number");
  const auto x = value.get<double>();
  if (!std::isfinite(x) || x < 0.0) throw SchemaViolation(execution_id, key, "expected a non-negative number");
  return x;
}

std::uint64_t non_negative_integer(const json& value, const char* key, const std::string& execution_id) {
  if (value.is_number_unsigned()) return value.get<std::uint64_t>();
  if (value.is_number_integer()) {
    const auto x = value.get<std::int64_t>();
    if (x < 0) throw SchemaViolation(execution_id, key, "expected a non-negative integer");
    return static_cast<std::uint64_t>(x);
  }
  const auto x = non_negative_number(value, key, execution_id);
  if (x != std::floor(x)) throw SchemaViolation(execution_id, key, "expected an integer");
  return static_cast<std::uint64_t>(x);
}

}  // namespace

json node_to_json(const PlanNode& node) {
  json j;
  j["id"] = node.node_id;
  j["op"] = node.operator_type;
  j["est_rows"] = node.est_rows;
  if (node.act_rows) j["act_rows"] = *node.act_rows;
  j["task"] = node.task_type;
  if (node.table_name) j["table"] = *node.table_name;
  if (node.join_type) j["join_type"] = *node.join_type;
  if (node.extra_info) j["info"] = *node.extra_info;
  if (node.outer_child_index) j["outer_child"] = *node.outer_child_index;
  j["children"] = json::array();
  for (const auto& child : node.children) j["children"].push_back(node_to_json(child));
  return j;
}

PlanNode node_from_json(const json& j, const std::string& execution_id) {
  if (!j.is_object()) throw SchemaViolation(execution_id, "root", "node must be an object");
  PlanNode node;
  node.node_id = require_string(j, "id", execution_id);
  node.operator_type = require_string(j, "op", execution_id);
  node.est_rows = non_negative_number(require(j, "est_rows", execution_id), "est_rows", execution_id);
  if (const auto it = j.find("act_rows"); it != j.end() && !it->is_null()) {
    node.act_rows = non_negative_integer(*it, "act_rows", execution_id);
  }
  node.task_type = require_string(j, "task", execution_id);
  node.table_name = optional_string(j, "table", execution_id);
  node.join_type = optional_string(j, "join_type", execution_id);
  node.extra_info = optional_string(j, "info", execution_id);
  if (const auto it = j.find("outer_child"); it != j.end() && !it->is_null()) {
    node.outer_child_index = non_negative_integer(*it, "outer_child", execution_id);
  }
  if (const auto it = j.find("children"); it != j.end()) {
    if (!it->is_array()) throw SchemaViolation(execution_id, "children", "expected an array");
    for (const auto& child : *it) node.children.push_back(node_from_json(child, execution_id));
  }
  return node;
}

json trace_to_json(const PlanTrace& trace) {
  json j;
  j["execution_id"] = trace.execution_id;
  if (trace.query_tag) j["query_tag"] = *trace.query_tag;
  j["source"] = std::string(to_string(trace.source));
  j["root"] = node_to_json(trace.root);
  return j;
}

PlanTrace trace_from_json(const json& j) {
  if (!j.is_object()) throw SchemaViolation("", "traces", "trace must be an object");
  PlanTrace trace;
  trace.execution_id = require_string(j, "execution_id", "");
  trace.query_tag = optional_string(j, "query_tag", trace.execution_id);
  const auto source = require_string(j, "source", trace.execution_id);
  if (source != "explain_only" && source != "explain_analyze") {
    throw SchemaViolation(trace.execution_id, "source", "unknown source '" + source + "'");
  }
  trace.source = trace_source_from_string(source);
  trace.root = node_from_json(require(j, "root", trace.execution_id), trace.execution_id);
  return trace;
}

json corpus_to_json(const TraceCorpus& corpus) {
  json j;
  j["version"] = kCorpusFormatVersion;
  j["provenance"] = corpus.provenance.is_null() ? json::object() : corpus.provenance;
  j["traces"] = json::array();
  for (const auto& trace : corpus.traces) j["traces"].push_back(trace_to_json(trace));
  return j;
}

TraceCorpus corpus_from_json(const json& j) {
  if (!j.is_object()) throw SchemaViolation("", "document", "corpus must be a JSON object");
  const auto version = j.find("version");
  if (version == j.end() || !version->is_number_integer()) {
    throw SchemaViolation("", "version", "missing integer format version");
  }
  if (version->get<int>() != kCorpusFormatVersion) {
    throw VersionMismatch("unsupported corpus version " + std::to_string(version->get<int>()));
  }
  TraceCorpus corpus;
  if (const auto it = j.find("provenance"); it != j.end()) corpus.provenance = *it;
  const auto traces = j.find("traces");
  if (traces == j.end() || !traces->is_array()) throw SchemaViolation("", "traces", "expected an array");
  for (const auto& t : *traces) corpus.traces.push_back(trace_from_json(t));
  validate(corpus);
  return corpus;
}

std::string serialize_corpus(const TraceCorpus& corpus) { return corpus_to_json(corpus).dump(2) + "\n"; }

TraceCorpus parse_corpus(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw SchemaViolation("", "document", e.what());
  }
  return corpus_from_json(j);
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

TraceCorpus import_explain_directory(const std::filesystem::path& directory) {
  const auto manifest_path = directory / "manifest.json";
  json manifest;
  try {
    manifest = json::parse(read_text_file(manifest_path));
  } catch (const json::parse_error& e) {
    throw SchemaViolation("", "manifest", e.what());
  }
  TraceCorpus corpus;
  if (const auto it = manifest.find("provenance"); it != manifest.end()) corpus.provenance = *it;
  const auto plans = manifest.find("plans");
  if (plans == manifest.end() || !plans->is_array()) throw SchemaViolation("", "plans", "expected an array");
  for (const auto& entry : *plans) {
    const auto file = require_string(entry, "file", "");
    const auto execution_id = entry.contains("execution_id") ? require_string(entry, "execution_id", "")
                                                             : std::filesystem::path(file).stem().string();
    const auto source = trace_source_from_string(
        entry.contains("source") ? require_string(entry, "source", execution_id) : "explain_analyze");
    auto tag = optional_string(entry, "query_tag", execution_id);
    try {
      corpus.traces.push_back(parse_explain_text(read_text_file(directory / file), source, execution_id, tag));
    } catch (const MalformedPlan& e) {
      throw MalformedPlan(e.message(), e.line(), file);
    } catch (const NumberParse& e) {
      throw NumberParse(e.message(), e.line(), file);
    }
  }
  validate(corpus);
  return corpus;
}

TraceCorpus load_corpus(const std::filesystem::path& path) {
  if (std::filesystem::is_directory(path)) return import_explain_directory(path);
  return parse_corpus(read_text_file(path));
}

}  // namespace cardcorr
