#pragma once

// Loading and validation of the canonical dataset files.
//
// catalog.jsonl, one item per line:
//   {"item_id": "m1", "title": "Heat", "category": "Crime", "description": "..."}
//
// users.jsonl, one user per line:
//   {"user_id": "u1",
//    "history": [{"item_id": "m3", "rating": 4}, ...],
//    "reference": ["m1", "m2", ...],                  // ordering tasks
//    "slates": [{"slate_id": "s1", "items": ["m1", "m2"],
//                "ratings": {"m1": 4, "m2": 5}}, ...]}   // selection tasks
//
// "slate_id" is optional (a content digest is used); "ratings" may also be an
// array aligned with "items"; items without a slate-level rating fall back to
// the user's history rating for that item.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "slatejudge/core.h"
#include "slatejudge/prompting.h"
#include "slatejudge/utility.h"

namespace slatejudge {

enum class TaskKind { kSetSelection, kReorder, kJoint };

std::string_view to_string(TaskKind kind);
// Accepts set_selection/reorder/joint and T1/T2/T3. Throws InvalidArgument.
TaskKind task_kind_from_string(std::string_view name);

struct DatasetBundle {
  Catalog catalog;
  std::vector<UserRecord> users;
  TaskKind task_kind = TaskKind::kSetSelection;
  std::optional<RatingScale> scale;
  Placeholders placeholders;
};

// Throws ParseError (with line) or DuplicateItem naming the line.
Catalog load_catalog(const std::filesystem::path& path);

struct UserLoad {
  std::vector<UserRecord> users;
  std::vector<std::string> dropped;  // user ids with fewer than two slates
};

// Validates every slate against the catalog and computes utilities for the
// task: mean rescaled rating for set selection, nDCG against the user's
// reference order otherwise. Users with fewer than two distinct evaluated
// slates are dropped with a warning. Errors carry the file, line, user and
// slate location.
UserLoad load_users(const std::filesystem::path& path, const Catalog& catalog,
                    TaskKind task_kind, const std::optional<RatingScale>& scale);

enum class Severity { kWarning, kError };

struct Finding {
  Severity severity;
  std::string message;
};

struct ValidationReport {
  std::size_t users = 0;
  std::size_t slates = 0;
  std::size_t ordered_pairs = 0;  // sum over users of n * (n - 1)
  std::vector<Finding> findings;

  bool ok() const;
};

ValidationReport validate_bundle(const DatasetBundle& bundle);

}  // namespace slatejudge
