#pragma once

// Run configuration: one JSON file naming the dataset, placeholder values,
// the judge ensemble and the evaluation policies. Relative paths resolve
// against the directory holding the config file.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "slatejudge/duel_engine.h"
#include "slatejudge/ingestion.h"
#include "slatejudge/judge.h"
#include "slatejudge/prompting.h"
#include "slatejudge/regret.h"

namespace slatejudge {

struct JudgeConfig {
  std::string id;
  std::optional<SyntheticJudgeSpec> synthetic;  // exactly one of synthetic/endpoint
  std::optional<JudgeEndpoint> endpoint;
  std::optional<TemplateFamily> family;  // overrides the model-name patterns
  bool explicit_seed = false;            // otherwise the run seed applies
};

struct EmbedderConfig {
  enum class Kind { kHashing, kRemote };
  Kind kind = Kind::kHashing;
  std::size_t dimension = 256;
  EmbeddingEndpoint endpoint;  // kRemote only
};

struct RunConfig {
  std::filesystem::path catalog_path;
  std::filesystem::path users_path;
  TaskKind task = TaskKind::kSetSelection;
  Placeholders placeholders;  // with defaults applied
  std::size_t history_limit = 20;
  std::vector<JudgeConfig> ensemble;
  int samples_per_order = 1;
  TieScoring tie_scoring = TieScoring::kDeterministic;
  IrreflexivityStrategy irreflexivity = IrreflexivityStrategy::kPositionFlip;
  bool ratings = true;
  EmbedderConfig embedder;
  std::size_t concurrency = 1;
  std::optional<std::filesystem::path> cache_dir;
  uint64_t seed = 0;
  std::filesystem::path output_dir = "out";
  std::vector<FamilyPattern> family_patterns = default_family_patterns();
  PromptSet prompts = PromptSet::defaults();
  nlohmann::json source;  // the parsed file, for digests

  std::vector<std::string> judge_ids() const;
  // Scale from the RATING_MIN / RATING_MAX placeholders, when both parse.
  std::optional<RatingScale> rating_scale() const;
  // SHA-256 of the canonical JSON of the effective settings.
  std::string digest() const;
};

// Throws ConfigError naming the offending key.
RunConfig parse_run_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

// Parses "oracle", "random", "noisy_oracle:<beta>" or "positional:<bias>".
// Throws ConfigError.
SyntheticJudgeSpec parse_synthetic_shorthand(std::string_view text, uint64_t seed);

// Loads catalog and users. Throws ParseError, ConfigError or the loader's
// errors.
DatasetBundle load_bundle(const RunConfig& config);

std::vector<std::unique_ptr<Judge>> make_judges(const RunConfig& config);
std::unique_ptr<Embedder> make_embedder(const EmbedderConfig& config);

}  // namespace slatejudge
