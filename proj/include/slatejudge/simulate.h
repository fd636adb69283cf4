#pragma once

// Seeded synthetic datasets: a catalog plus users with histories, evaluated
// slates and ground truth, in the same shape the loaders read from disk.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <vector>

#include "slatejudge/ingestion.h"

namespace slatejudge {

struct SimulationParams {
  std::size_t users = 20;
  std::size_t slates_per_user = 6;
  std::size_t slate_size = 5;  // K
  TaskKind task = TaskKind::kSetSelection;
  std::size_t history_length = 5;
  std::size_t catalog_size = 0;  // 0 picks a size large enough for the task
  uint64_t seed = 0;

  // Throws InvalidParams.
  void validate() const;
};

struct SimulatedDataset {
  std::vector<Item> items;
  std::vector<nlohmann::json> user_records;  // one users.jsonl line each
  DatasetBundle bundle;                      // the same data, already loaded
};

// SET_SELECTION draws one real rating per (user, item) uniformly on [1, 5] and
// picks slates with distinct item sets. REORDER samples a K-item reference
// order per user and uses distinct permutations of it as slates. JOINT uses a
// 2K-item reference and slates drawn from it plus K items outside it. Equal
// seeds give identical datasets. Throws InvalidParams.
SimulatedDataset simulate_dataset(const SimulationParams& params);

// Writes catalog.jsonl and users.jsonl into `dir`. Throws IoError.
void write_dataset(const SimulatedDataset& data, const std::filesystem::path& dir);

// Placeholder values used for simulated bundles.
Placeholders simulation_placeholders();

}  // namespace slatejudge
