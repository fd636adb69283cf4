#pragma once

// Content-addressed response cache and the per-run ledger.
//
// Cache layout: <dir>/<key[0..2]>/<key>.json, one JSON object per entry:
//   {"checksum": "<sha256 of the canonical payload>",
//    "raw_response": "...", "verdict": {...}, "timestamp": "..."}
// Entries become visible by atomic rename, so readers never see partial files.

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <string_view>

namespace slatejudge {

struct CacheEntry {
  std::string raw_response;
  nlohmann::json verdict;  // parsed answer as stored by the duel engine
  std::string timestamp;   // ISO-8601 UTC, informational

  friend bool operator==(const CacheEntry&, const CacheEntry&) = default;
};

class ResponseCache {
 public:
  // Creates the directory if needed. Throws IoError.
  explicit ResponseCache(std::filesystem::path dir);

  const std::filesystem::path& dir() const { return dir_; }

  // nullopt for unknown keys and for corrupt entries (logged, counted).
  // Throws InvalidArgument for malformed keys.
  std::optional<CacheEntry> get(std::string_view key) const;

  // Write-then-rename; concurrent puts of one key leave one valid entry.
  // Throws IoError or InvalidArgument.
  void put(std::string_view key, const CacheEntry& entry) const;

  std::filesystem::path path_for(std::string_view key) const;
  std::size_t corrupt_entries_seen() const { return corrupt_.load(); }

 private:
  std::filesystem::path dir_;
  mutable std::atomic<std::size_t> corrupt_{0};
};

std::string utc_timestamp();

struct RunLedgerEntry {
  std::string run_id;
  std::string config_digest;
  std::size_t planned = 0;
  std::size_t cached = 0;
  std::size_t queried = 0;
  std::size_t abstained = 0;
  std::string started_at;
  std::string finished_at;
};

// Appends one JSON line with a single write on an O_APPEND descriptor.
// Throws IoError, or InvalidArgument when planned != cached + queried.
void append_ledger(const std::filesystem::path& ledger_path,
                   const RunLedgerEntry& entry);

}  // namespace slatejudge
