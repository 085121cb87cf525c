#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cardcorr/corpus_io.hpp"
#include "cardcorr/trace.hpp"

namespace testsupport {

inline std::filesystem::path fixture(const std::string& name) { return std::filesystem::path(CARDCORR_FIXTURES) / name; }

inline cardcorr::PlanNode node(std::string id, double est, std::optional<std::uint64_t> act,
                               std::vector<cardcorr::PlanNode> children = {}) {
  cardcorr::PlanNode n;
  n.operator_type = cardcorr::normalize_operator_type(id);
  n.node_id = std::move(id);
  n.est_rows = est;
  n.act_rows = act;
  n.task_type = "root";
  n.children = std::move(children);
  return n;
}

inline cardcorr::PlanTrace trace(std::string id, cardcorr::PlanNode root, std::optional<std::string> tag = {}) {
  cardcorr::PlanTrace t;
  t.execution_id = std::move(id);
  t.query_tag = std::move(tag);
  t.root = std::move(root);
  return t;
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("cardcorr_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testsupport
