#include "slatejudge/simulate.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "slatejudge/errors.h"
#include "slatejudge/random.h"
#include "slatejudge/utility.h"

namespace slatejudge {
namespace {

using nlohmann::json;

constexpr const char* kAdjectives[] = {
    "Silent", "Golden", "Broken", "Hidden", "Electric", "Distant", "Crimson", "Paper",
    "Midnight", "Wandering", "Hollow", "Velvet", "Northern", "Burning", "Quiet", "Glass",
    "Restless", "Iron", "Lucky", "Frozen"};
constexpr const char* kNouns[] = {
    "Harbor", "Garden", "Signal", "Empire", "River", "Lantern", "Orchard", "Circuit",
    "Mirror", "Station", "Canyon", "Letter", "Engine", "Island", "Parade", "Compass",
    "Kingdom", "Meadow", "Archive", "Voyage"};
constexpr const char* kCategories[] = {"drama",   "comedy",    "documentary", "thriller",
                                       "romance", "animation", "science fiction", "mystery"};

constexpr std::size_t kAdjectiveCount = std::size(kAdjectives);
constexpr std::size_t kNounCount = std::size(kNouns);

std::string padded(std::string_view prefix, std::size_t n, std::size_t width) {
  std::string digits = std::to_string(n);
  if (digits.size() < width) digits.insert(0, width - digits.size(), '0');
  return std::string(prefix) + digits;
}

std::size_t factorial_capped(std::size_t k, std::size_t cap) {
  std::size_t f = 1;
  for (std::size_t i = 2; i <= k && f < cap; ++i) f *= i;
  return f;
}

std::size_t effective_catalog_size(const SimulationParams& p) {
  if (p.catalog_size != 0) return p.catalog_size;
  return std::max({std::size_t{40}, 4 * p.slate_size, p.history_length + p.slate_size});
}

}  // namespace

void SimulationParams::validate() const {
  if (users == 0) throw InvalidParams("users must be at least 1");
  if (slates_per_user < 2) throw InvalidParams("slates per user must be at least 2");
  if (slate_size == 0) throw InvalidParams("slate size must be at least 1");
  const std::size_t catalog = effective_catalog_size(*this);
  const std::size_t needed = task == TaskKind::kJoint ? 3 * slate_size : slate_size;
  if (catalog < needed || catalog < history_length) {
    throw InvalidParams("catalog of " + std::to_string(catalog) + " items is too small");
  }
  if (task == TaskKind::kReorder &&
      factorial_capped(slate_size, slates_per_user) < slates_per_user) {
    throw InvalidParams("K = " + std::to_string(slate_size) + " admits fewer than " +
                        std::to_string(slates_per_user) + " distinct orderings");
  }
}

Placeholders simulation_placeholders() {
  return with_placeholder_defaults({
      {"PLATFORM_NAME", "a film streaming service"},
      {"DOMAIN_NOUN", "films"},
      {"RATING_MIN", "1"},
      {"RATING_MAX", "5"},
      {"CRITERIA_POPULARITY", "Well-known titles are a plus, but only if they fit the user."},
      {"CRITERIA_DIVERSITY", "Some variety across genres is welcome."},
  });
}

SimulatedDataset simulate_dataset(const SimulationParams& params) {
  params.validate();
  Rng rng(params.seed);
  SimulatedDataset out;
  const std::size_t catalog_size = effective_catalog_size(params);
  const std::size_t K = params.slate_size;

  for (std::size_t i = 0; i < catalog_size; ++i) {
    Item item;
    item.item_id = padded("item-", i + 1, 4);
    item.title = std::string(kAdjectives[i % kAdjectiveCount]) + " " +
                 kNouns[(i / kAdjectiveCount) % kNounCount];
    if (i >= kAdjectiveCount * kNounCount) {
      item.title += " " + std::to_string(i / (kAdjectiveCount * kNounCount) + 1);
    }
    item.category = kCategories[rng.below(std::size(kCategories))];
    out.items.push_back(item);
    out.bundle.catalog.add(std::move(item));
  }
  out.bundle.task_kind = params.task;
  out.bundle.scale = RatingScale{1.0, 5.0};
  out.bundle.placeholders = simulation_placeholders();

  auto item_id = [&](std::size_t idx) -> const std::string& { return out.items[idx].item_id; };
  const std::size_t max_attempts = 1000 * params.slates_per_user;

  for (std::size_t u = 0; u < params.users; ++u) {
    UserRecord user;
    user.user_id = padded("user-", u + 1, 3);
    json record = {{"user_id", user.user_id}};

    json history = json::array();
    for (std::size_t idx : rng.sample_indices(catalog_size, params.history_length)) {
      const double rating = static_cast<double>(1 + rng.below(5));
      user.history.push_back({item_id(idx), rating});
      history.push_back({{"item_id", item_id(idx)}, {"rating", static_cast<int>(rating)}});
    }
    record["history"] = std::move(history);

    std::vector<std::string> reference;
    std::vector<std::size_t> pool;
    if (params.task != TaskKind::kSetSelection) {
      const std::size_t ref_size = params.task == TaskKind::kJoint ? 2 * K : K;
      const std::size_t pool_size = params.task == TaskKind::kJoint ? 3 * K : K;
      pool = rng.sample_indices(catalog_size, pool_size);
      for (std::size_t i = 0; i < ref_size; ++i) reference.push_back(item_id(pool[i]));
      record["reference"] = reference;
    }

    std::map<std::string, double> ratings;  // set selection only
    std::set<std::vector<std::string>> seen;
    json slates = json::array();
    std::size_t attempts = 0;
    while (user.slates.size() < params.slates_per_user) {
      if (++attempts > max_attempts) {
        throw InvalidParams("could not draw " + std::to_string(params.slates_per_user) +
                            " distinct slates for " + user.user_id);
      }
      std::vector<std::string> ids;
      if (params.task == TaskKind::kSetSelection) {
        for (std::size_t idx : rng.sample_indices(catalog_size, K)) ids.push_back(item_id(idx));
      } else {
        std::vector<std::size_t> order = pool;
        rng.shuffle(order);
        for (std::size_t i = 0; i < K; ++i) ids.push_back(item_id(order[i]));
      }
      std::vector<std::string> key = ids;
      if (params.task == TaskKind::kSetSelection) std::sort(key.begin(), key.end());
      if (!seen.insert(key).second) continue;

      Slate slate = make_slate(ids, out.bundle.catalog);
      json slate_json = {{"items", ids}};
      double utility = 0.0;
      if (params.task == TaskKind::kSetSelection) {
        json slate_ratings = json::object();
        std::map<std::string, double> own;
        for (const auto& id : ids) {
          auto it = ratings.find(id);
          if (it == ratings.end()) {
            const double r = static_cast<double>(100 + rng.below(401)) / 100.0;
            it = ratings.emplace(id, r).first;
          }
          own[id] = it->second;
          slate_ratings[id] = it->second;
        }
        slate_json["ratings"] = std::move(slate_ratings);
        utility = rating_sum_utility(slate, own, *out.bundle.scale);
      } else {
        utility = ndcg_utility(slate, reference);
      }
      user.utilities[slate.slate_id] = utility;
      user.slates.push_back(std::move(slate));
      slates.push_back(std::move(slate_json));
    }
    record["slates"] = std::move(slates);
    out.user_records.push_back(std::move(record));
    out.bundle.users.push_back(std::move(user));
  }
  return out;
}

void write_dataset(const SimulatedDataset& data, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  auto write_lines = [&](const std::filesystem::path& path, const std::vector<json>& lines) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    for (const auto& line : lines) out << line.dump() << '\n';
    if (!out.flush()) throw IoError("write failed for " + path.string());
  };
  std::vector<json> catalog;
  for (const auto& item : data.items) {
    catalog.push_back({{"item_id", item.item_id}, {"title", item.title},
                       {"category", item.category}});
  }
  write_lines(dir / "catalog.jsonl", catalog);
  write_lines(dir / "users.jsonl", data.user_records);
}

}  // namespace slatejudge
