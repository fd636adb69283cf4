#include "slatejudge/ingestion.h"

#include <spdlog/spdlog.h>

#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <set>

#include "slatejudge/errors.h"

namespace slatejudge {
namespace {

using nlohmann::json;

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

// Calls fn(line_number, object) for each non-blank line.
template <typename Fn>
void for_each_record(const std::filesystem::path& path, Fn&& fn) {
  auto in = open_input(path);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(path.string(), line_no, e.what());
    }
    if (!record.is_object()) {
      throw ParseError(path.string(), line_no, "expected a JSON object");
    }
    fn(line_no, record);
  }
}

std::string required_string(const json& obj, const char* key,
                            const std::filesystem::path& path, int line) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    throw ParseError(path.string(), line,
                     std::string("missing string field '") + key + "'");
  }
  return it->get<std::string>();
}

std::vector<std::string> string_array(const json& value, const char* key,
                                      const std::filesystem::path& path,
                                      int line) {
  if (!value.is_array()) {
    throw ParseError(path.string(), line,
                     std::string("field '") + key + "' must be an array");
  }
  std::vector<std::string> out;
  for (const auto& v : value) {
    if (!v.is_string()) {
      throw ParseError(path.string(), line,
                       std::string("field '") + key + "' must hold strings");
    }
    out.push_back(v.get<std::string>());
  }
  return out;
}

// Re-raises a library error with a location prefix, keeping its type.
[[noreturn]] void rethrow_located(const std::string& where) {
  try {
    throw;
  } catch (const UnknownItem& e) {
    throw UnknownItem(where + ": " + e.what());
  } catch (const DuplicateItem& e) {
    throw DuplicateItem(where + ": " + e.what());
  } catch (const MissingRating& e) {
    throw MissingRating(where + ": " + e.what());
  } catch (const RatingOutOfScale& e) {
    throw RatingOutOfScale(where + ": " + e.what());
  } catch (const EmptyReference& e) {
    throw EmptyReference(where + ": " + e.what());
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(where + ": " + e.what());
  }
}

std::map<std::string, double> slate_ratings(const json& slate_obj,
                                            const std::vector<std::string>& items,
                                            const UserRecord& user,
                                            const std::filesystem::path& path,
                                            int line) {
  std::map<std::string, double> ratings;
  for (const auto& h : user.history) {
    if (h.rating) ratings[h.item_id] = *h.rating;
  }
  auto it = slate_obj.find("ratings");
  if (it == slate_obj.end() || it->is_null()) return ratings;
  if (it->is_object()) {
    for (const auto& [id, r] : it->items()) {
      if (!r.is_number()) {
        throw ParseError(path.string(), line, "rating of '" + id + "' is not a number");
      }
      ratings[id] = r.get<double>();
    }
  } else if (it->is_array()) {
    if (it->size() != items.size()) {
      throw ParseError(path.string(), line,
                       "'ratings' array must align with 'items'");
    }
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (!(*it)[i].is_number()) {
        throw ParseError(path.string(), line, "ratings must be numbers");
      }
      ratings[items[i]] = (*it)[i].get<double>();
    }
  } else {
    throw ParseError(path.string(), line, "'ratings' must be an object or array");
  }
  return ratings;
}

}  // namespace

std::string_view to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::kSetSelection: return "set_selection";
    case TaskKind::kReorder: return "reorder";
    case TaskKind::kJoint: return "joint";
  }
  return "set_selection";
}

TaskKind task_kind_from_string(std::string_view name) {
  if (name == "set_selection" || name == "T1") return TaskKind::kSetSelection;
  if (name == "reorder" || name == "T2") return TaskKind::kReorder;
  if (name == "joint" || name == "T3") return TaskKind::kJoint;
  throw InvalidArgument("unknown task kind '" + std::string(name) + "'");
}

Catalog load_catalog(const std::filesystem::path& path) {
  Catalog catalog;
  for_each_record(path, [&](int line, const json& obj) {
    Item item;
    item.item_id = required_string(obj, "item_id", path, line);
    item.title = required_string(obj, "title", path, line);
    if (auto it = obj.find("category"); it != obj.end() && it->is_string()) {
      item.category = it->get<std::string>();
    }
    if (auto it = obj.find("description"); it != obj.end() && it->is_string()) {
      item.description = it->get<std::string>();
    }
    try {
      catalog.add(std::move(item));
    } catch (const DuplicateItem& e) {
      throw DuplicateItem(path.string() + ":" + std::to_string(line) + ": " +
                          e.what());
    } catch (const InvalidArgument& e) {
      throw ParseError(path.string(), line, e.what());
    }
  });
  return catalog;
}

UserLoad load_users(const std::filesystem::path& path, const Catalog& catalog,
                    TaskKind task_kind, const std::optional<RatingScale>& scale) {
  if (task_kind == TaskKind::kSetSelection && !scale) {
    throw InvalidArgument("set-selection tasks need a rating scale");
  }
  UserLoad result;
  std::set<std::string> seen_users;
  for_each_record(path, [&](int line, const json& obj) {
    UserRecord user;
    user.user_id = required_string(obj, "user_id", path, line);
    const std::string where =
        path.string() + ":" + std::to_string(line) + ": user '" + user.user_id + "'";
    if (!seen_users.insert(user.user_id).second) {
      throw ParseError(path.string(), line,
                       "duplicate user_id '" + user.user_id + "'");
    }

    if (auto it = obj.find("history"); it != obj.end() && !it->is_null()) {
      if (!it->is_array()) throw ParseError(path.string(), line, "'history' must be an array");
      for (const auto& h : *it) {
        if (!h.is_object()) throw ParseError(path.string(), line, "history entries must be objects");
        HistoryEntry entry;
        entry.item_id = required_string(h, "item_id", path, line);
        if (auto r = h.find("rating"); r != h.end() && r->is_number()) {
          entry.rating = r->get<double>();
        }
        if (!catalog.contains(entry.item_id)) {
          throw UnknownItem(where + " history: unknown item_id '" + entry.item_id + "'");
        }
        user.history.push_back(std::move(entry));
      }
    }

    std::vector<std::string> reference;
    if (auto it = obj.find("reference"); it != obj.end() && !it->is_null()) {
      reference = string_array(*it, "reference", path, line);
      std::set<std::string> distinct(reference.begin(), reference.end());
      if (distinct.size() != reference.size()) {
        throw ParseError(path.string(), line, "reference order repeats an item");
      }
    }

    auto slates_it = obj.find("slates");
    if (slates_it == obj.end() || !slates_it->is_array()) {
      throw ParseError(path.string(), line, "missing array field 'slates'");
    }
    for (std::size_t s = 0; s < slates_it->size(); ++s) {
      const json& slate_obj = (*slates_it)[s];
      if (!slate_obj.is_object()) throw ParseError(path.string(), line, "slates must be objects");
      auto items_it = slate_obj.find("items");
      if (items_it == slate_obj.end()) {
        throw ParseError(path.string(), line, "slate without 'items'");
      }
      auto items = string_array(*items_it, "items", path, line);
      std::optional<std::string> id;
      if (auto i = slate_obj.find("slate_id"); i != slate_obj.end() && i->is_string()) {
        id = i->get<std::string>();
      }
      const std::string slate_where =
          where + " slate #" + std::to_string(s + 1) + (id ? " ('" + *id + "')" : "");
      try {
        Slate slate = make_slate(items, catalog, id);
        if (const Slate* prior = user.find_slate(slate.slate_id)) {
          if (prior->item_ids != slate.item_ids) {
            throw ParseError(path.string(), line,
                             "slate_id '" + slate.slate_id + "' reused for different items");
          }
          spdlog::warn("{}: duplicate of slate '{}' ignored", slate_where, slate.slate_id);
          continue;
        }
        double u = 0.0;
        if (task_kind == TaskKind::kSetSelection) {
          u = rating_sum_utility(slate, slate_ratings(slate_obj, items, user, path, line),
                                 *scale);
        } else {
          u = ndcg_utility(slate, reference);
        }
        user.utilities[slate.slate_id] = u;
        user.slates.push_back(std::move(slate));
      } catch (const ParseError&) {
        throw;
      } catch (const Error&) {
        rethrow_located(slate_where);
      }
    }

    if (user.slates.size() < 2) {
      spdlog::warn("{}: dropped, {} evaluated slate(s) but pairwise evaluation needs 2",
                   where, user.slates.size());
      result.dropped.push_back(user.user_id);
      return;
    }
    result.users.push_back(std::move(user));
  });
  return result;
}

bool ValidationReport::ok() const {
  for (const auto& f : findings) {
    if (f.severity == Severity::kError) return false;
  }
  return true;
}

ValidationReport validate_bundle(const DatasetBundle& bundle) {
  ValidationReport report;
  report.users = bundle.users.size();
  for (const auto& u : bundle.users) {
    const std::size_t n = u.slates.size();
    report.slates += n;
    report.ordered_pairs += n * (n - 1);
    try {
      check_user_record(u);
    } catch (const Error& e) {
      report.findings.push_back({Severity::kError, e.what()});
    }
    if (n < 2) {
      report.findings.push_back(
          {Severity::kError, "user '" + u.user_id + "' has fewer than 2 slates"});
    }
  }
  if (bundle.users.empty()) {
    report.findings.push_back({Severity::kError, "bundle has zero users"});
  }
  if (bundle.catalog.size() == 0) {
    report.findings.push_back({Severity::kError, "catalog is empty"});
  }
  for (const auto& name : missing_placeholders(bundle.placeholders)) {
    report.findings.push_back(
        {Severity::kError, "missing placeholder " + name});
  }
  if (bundle.task_kind == TaskKind::kSetSelection && !bundle.scale) {
    report.findings.push_back(
        {Severity::kError, "set-selection task without a rating scale"});
  }
  return report;
}

}  // namespace slatejudge
