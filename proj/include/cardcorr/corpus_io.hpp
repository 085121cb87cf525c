#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "json.hpp"

#include "cardcorr/trace.hpp"

namespace cardcorr {

inline constexpr int kCorpusFormatVersion = 1;

nlohmann::json node_to_json(const PlanNode& node);
PlanNode node_from_json(const nlohmann::json& j, const std::string& execution_id);

nlohmann::json trace_to_json(const PlanTrace& trace);
PlanTrace trace_from_json(const nlohmann::json& j);

nlohmann::json corpus_to_json(const TraceCorpus& corpus);

// Validates the document and every trace invariant. Unknown keys are ignored,
// so annotated outputs (e.g. corrected traces) stay loadable.
TraceCorpus corpus_from_json(const nlohmann::json& j);

// Canonical bytes: sorted keys, pre-order children, two-space indent, trailing
// newline. Two calls on equal corpora produce identical output.
std::string serialize_corpus(const TraceCorpus& corpus);

TraceCorpus parse_corpus(std::string_view json_text);

// Loads either a canonical corpus JSON file, or a directory holding a
// `manifest.json` that lists EXPLAIN text files:
//   { "provenance": {...},
//     "plans": [ { "file": "q1.txt", "execution_id": "q1",
//                  "query_tag": "tpch-01", "source": "explain_analyze" } ] }
TraceCorpus load_corpus(const std::filesystem::path& path);

TraceCorpus import_explain_directory(const std::filesystem::path& directory);

void write_text_file(const std::filesystem::path& path, std::string_view content);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace cardcorr
