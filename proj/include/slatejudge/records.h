#pragma once

// Line-delimited JSON files written by a run and read back by analysis:
// verdicts.jsonl, self_duels.jsonl, ratings.jsonl and outcomes.jsonl.

#include <filesystem>
#include <nlohmann/json.hpp>
#include <span>
#include <vector>

#include "slatejudge/duel_engine.h"

namespace slatejudge {

nlohmann::json to_json(const DuelRecord& r);
nlohmann::json to_json(const SelfDuelRecord& r);
nlohmann::json to_json(const RatingRecord& r);
nlohmann::json to_json(const AggregatedOutcome& o);

DuelRecord duel_record_from_json(const nlohmann::json& j);
SelfDuelRecord self_duel_record_from_json(const nlohmann::json& j);
RatingRecord rating_record_from_json(const nlohmann::json& j);
AggregatedOutcome outcome_from_json(const nlohmann::json& j);

// Writes one compact JSON document per line, replacing the file through a
// temporary. Throws IoError.
void write_jsonl(const std::filesystem::path& path, std::span<const nlohmann::json> lines);
// Throws IoError, or ParseError naming the line.
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);

// Writes the four run files into `dir`.
void write_run_records(const std::filesystem::path& dir, const ExecutionResult& result,
                       std::span<const AggregatedOutcome> outcomes);
// Reads verdicts, self-duels and ratings back; missing optional files read as
// empty. Counts are left zero.
ExecutionResult read_run_records(const std::filesystem::path& dir);
std::vector<AggregatedOutcome> read_outcomes(const std::filesystem::path& dir);

}  // namespace slatejudge
