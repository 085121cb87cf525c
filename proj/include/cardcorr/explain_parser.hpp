#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "cardcorr/trace.hpp"

namespace cardcorr {

// Parses TiDB-style tabular EXPLAIN / EXPLAIN ANALYZE output.
//
// Accepts either the mysql-client box format (`| id | estRows | ... |` with
// `+---+` borders) or tab-separated output. Parentage comes from the tree
// prefix of the `id` column (`├─`, `└─`, `│ `, two spaces per level). Required
// headers are `id`, `estRows` and `task`, plus `actRows` for explain_analyze.
// Role suffixes such as `(Build)` / `(Probe)` are dropped from node ids.
//
// Throws MalformedPlan or NumberParse, both carrying the 1-based line number.
PlanTrace parse_explain_text(std::string_view text, TraceSource source, std::string execution_id = "plan",
                             std::optional<std::string> query_tag = std::nullopt);

// Maps the leading join-type phrase of an operator-info string to its
// normalized token ("inner", "left outer", "semi", ...).
std::optional<std::string> extract_join_type(std::string_view operator_info);

// First `table:` entry of an access-object string; multi-table objects keep the
// first one.
std::optional<std::string> extract_table_name(std::string_view access_object);

}  // namespace cardcorr
