#include "cardcorr/explain_parser.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <utility>
#include <vector>

#include "cardcorr/errors.hpp"

namespace cardcorr {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string_view rtrim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

bool is_border(std::string_view line) {
  line = trim(line);
  if (line.empty()) return true;
  return std::all_of(line.begin(), line.end(), [](char c) { return c == '+' || c == '-' || c == '='; });
}

std::vector<std::string_view> split_cells(std::string_view line, bool pipe) {
  std::vector<std::string_view> cells;
  if (pipe) {
    line = rtrim(line);
    const auto first = line.find('|');
    if (first != std::string_view::npos) line.remove_prefix(first + 1);
    if (!line.empty() && line.back() == '|') line.remove_suffix(1);
  }
  const char delim = pipe ? '|' : '\t';
  std::size_t start = 0;
  while (true) {
    const auto end = line.find(delim, start);
    cells.push_back(line.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start));
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return cells;
}

// Counts leading tree-drawing code points (space, │, ├, └, ─) and returns the
// count together with the remaining text.
std::pair<std::size_t, std::string_view> split_prefix(std::string_view cell) {
  static constexpr std::array<std::string_view, 4> kGlyphs = {"│", "├", "└", "─"};
  std::size_t count = 0;
  while (!cell.empty()) {
    if (cell.front() == ' ') {
      cell.remove_prefix(1);
      ++count;
      continue;
    }
    bool matched = false;
    for (const auto glyph : kGlyphs) {
      if (cell.starts_with(glyph)) {
        cell.remove_prefix(glyph.size());
        ++count;
        matched = true;
        break;
      }
    }
    if (!matched) break;
  }
  return {count, cell};
}

std::size_t leading_spaces(std::string_view cell) {
  std::size_t n = 0;
  while (n < cell.size() && cell[n] == ' ') ++n;
  return n;
}

double parse_number(std::string_view text, std::string_view column, std::size_t line) {
  text = trim(text);
  double value = 0.0;
  const auto* begin = text.data();
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (text.empty() || ec != std::errc{} || ptr != end || !std::isfinite(value)) {
    throw NumberParse("non-numeric " + std::string(column) + " '" + std::string(text) + "'", line);
  }
  if (value < 0.0) throw NumberParse("negative " + std::string(column) + " '" + std::string(text) + "'", line);
  return value;
}

std::string strip_role_suffix(std::string_view name) {
  name = trim(name);
  if (!name.empty() && name.back() == ')') {
    const auto open = name.rfind('(');
    if (open != std::string_view::npos && open > 0) name = trim(name.substr(0, open));
  }
  return std::string(name);
}

struct FlatNode {
  PlanNode node;
  std::size_t depth = 0;
  std::optional<std::size_t> parent;
  std::vector<std::size_t> children;
};

PlanNode assemble(std::vector<FlatNode>& flat, std::size_t index) {
  auto node = std::move(flat[index].node);
  for (const auto child : flat[index].children) node.children.push_back(assemble(flat, child));
  return node;
}

void assign_outer_children(PlanNode& node) {
  if (node.join_type && node.children.size() == 2) {
    if (*node.join_type == "left outer") node.outer_child_index = 0;
    if (*node.join_type == "right outer") node.outer_child_index = 1;
  }
  for (auto& child : node.children) assign_outer_children(child);
}

}  // namespace

std::optional<std::string> extract_join_type(std::string_view operator_info) {
  // Longest phrases first so "left outer semi join" is not read as "left outer join".
  static constexpr std::array<std::pair<std::string_view, std::string_view>, 8> kPhrases = {{
      {"anti left outer semi join", "anti left outer semi"},
      {"left outer semi join", "left outer semi"},
      {"anti semi join", "anti semi"},
      {"left outer join", "left outer"},
      {"right outer join", "right outer"},
      {"semi join", "semi"},
      {"cartesian inner join", "inner"},
      {"inner join", "inner"},
  }};
  const auto text = lower(trim(operator_info));
  for (const auto& [phrase, token] : kPhrases) {
    if (text.starts_with(phrase)) return std::string(token);
  }
  return std::nullopt;
}

std::optional<std::string> extract_table_name(std::string_view access_object) {
  const auto pos = access_object.find("table:");
  if (pos == std::string_view::npos) return std::nullopt;
  auto rest = access_object.substr(pos + 6);
  const auto end = rest.find_first_of(", )");
  auto name = trim(rest.substr(0, end));
  if (name.empty()) return std::nullopt;
  return std::string(name);
}

PlanTrace parse_explain_text(std::string_view text, TraceSource source, std::string execution_id,
                             std::optional<std::string> query_tag) {
  std::vector<std::pair<std::size_t, std::string_view>> lines;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    auto line = text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;
    if (!is_border(line)) lines.emplace_back(line_no, line);
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  if (lines.empty()) throw MalformedPlan("empty plan text", line_no);

  const auto [header_line, header_text] = lines.front();
  const bool pipe = header_text.find('|') != std::string_view::npos;
  const auto header_cells = split_cells(header_text, pipe);

  std::optional<std::size_t> col_id, col_est, col_act, col_task, col_access, col_info;
  for (std::size_t i = 0; i < header_cells.size(); ++i) {
    const auto name = lower(trim(header_cells[i]));
    if (name == "id") col_id = i;
    if (name == "estrows") col_est = i;
    if (name == "actrows") col_act = i;
    if (name == "task") col_task = i;
    if (name == "access object") col_access = i;
    if (name == "operator info") col_info = i;
  }
  if (!col_id || !col_est || !col_task) {
    throw MalformedPlan("header must contain id, estRows and task columns", header_line);
  }
  if (source == TraceSource::explain_analyze && !col_act) {
    throw MalformedPlan("explain_analyze plan lacks an actRows column", header_line);
  }
  const auto pad = leading_spaces(header_cells[*col_id]);

  std::vector<FlatNode> flat;
  std::vector<std::size_t> open_path;  // open_path[d] = flat index of latest node at depth d
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto [ln, line] = lines[r];
    const auto cells = split_cells(line, pipe);
    if (cells.size() < header_cells.size()) {
      throw MalformedPlan("row has " + std::to_string(cells.size()) + " columns, header has " +
                              std::to_string(header_cells.size()),
                          ln);
    }
    const auto [prefix, rest] = split_prefix(cells[*col_id]);
    if (prefix < pad || (prefix - pad) % 2 != 0) throw MalformedPlan("inconsistent tree indentation", ln);
    const auto depth = (prefix - pad) / 2;

    FlatNode entry;
    entry.depth = depth;
    entry.node.node_id = strip_role_suffix(rest);
    if (entry.node.node_id.empty()) throw MalformedPlan("empty operator id", ln);
    entry.node.operator_type = normalize_operator_type(entry.node.node_id);
    entry.node.est_rows = parse_number(cells[*col_est], "estRows", ln);
    if (source == TraceSource::explain_analyze) {
      const auto act = parse_number(cells[*col_act], "actRows", ln);
      if (act != std::floor(act)) throw NumberParse("fractional actRows", ln);
      entry.node.act_rows = static_cast<std::uint64_t>(act);
    }
    entry.node.task_type = std::string(trim(cells[*col_task]));
    if (col_access) entry.node.table_name = extract_table_name(cells[*col_access]);
    if (col_info) {
      const auto info = trim(cells[*col_info]);
      if (!info.empty()) entry.node.extra_info = std::string(info);
      const auto& op = entry.node.operator_type;
      if (op.find("Join") != std::string::npos || op.find("Apply") != std::string::npos) {
        entry.node.join_type = extract_join_type(info);
      }
    }

    if (depth == 0) {
      if (!flat.empty()) throw MalformedPlan("multiple root operators", ln);
    } else {
      if (flat.empty() || depth > open_path.size()) throw MalformedPlan("operator has no parent", ln);
      entry.parent = open_path[depth - 1];
    }
    const auto index = flat.size();
    if (entry.parent) flat[*entry.parent].children.push_back(index);
    flat.push_back(std::move(entry));
    open_path.resize(depth);
    open_path.push_back(index);
  }
  if (flat.empty()) throw MalformedPlan("plan has a header but no operators", header_line);

  PlanTrace trace;
  trace.execution_id = std::move(execution_id);
  trace.query_tag = std::move(query_tag);
  trace.source = source;
  trace.root = assemble(flat, 0);
  assign_outer_children(trace.root);
  validate(trace);
  return trace;
}

}  // namespace cardcorr
