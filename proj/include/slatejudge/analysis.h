#pragma once

// Turns executed duels into the metrics table (one row per judge plus an
// ensemble row when several judges vote) and into the figure data comparing
// regret with each coherence metric.

#include <cstddef>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "slatejudge/coherence.h"
#include "slatejudge/duel_engine.h"
#include "slatejudge/ingestion.h"
#include "slatejudge/regret.h"

namespace slatejudge {

struct JudgeLabel {
  std::string id;
  std::string description;
};

struct MetricsRow {
  std::string model;
  std::string description;
  bool ensemble = false;
  RegretReport regret;
  CoherenceReport coherence;
  std::optional<double> mean_similarity;
};

struct PairSimilarity {
  std::string user_id;
  std::string slate_a;
  std::string slate_b;
  double similarity = 0.0;
};

struct MetricsTable {
  std::vector<MetricsRow> rows;
  TieScoring tie_scoring = TieScoring::kDeterministic;
  IrreflexivityStrategy irreflexivity = IrreflexivityStrategy::kPositionFlip;
  std::string embedder;  // empty when similarity was not computed
  std::vector<PairSimilarity> similarities;
};

struct AnalysisOptions {
  TieScoring tie_scoring = TieScoring::kDeterministic;
  IrreflexivityStrategy irreflexivity = IrreflexivityStrategy::kPositionFlip;
  const Embedder* embedder = nullptr;  // null skips the similarity proxy
  // Stored majority outcomes of the full ensemble; recomputed when absent.
  std::optional<std::vector<AggregatedOutcome>> ensemble_outcomes;
};

// Throws MissingOutcome when outcomes do not cover every evaluated pair.
MetricsTable analyze(const DatasetBundle& bundle, const ExecutionResult& result,
                     std::span<const JudgeLabel> judges, const AnalysisOptions& options);

// Column order of metrics.csv.
const std::vector<std::string>& metrics_columns();

// Values rounded to 3 decimals; absent metrics are empty cells.
std::string metrics_csv(const MetricsTable& table);
// Full precision, no timestamps.
nlohmann::json metrics_json(const MetricsTable& table);

struct AxiomSeries {
  std::string axiom;
  std::vector<std::string> models;
  std::vector<std::pair<double, double>> points;  // (metric, regret)
  std::optional<Correlation> correlation;
  std::string note;  // why the correlation is missing
};

// One series per coherence metric over the per-judge rows of metrics.json
// (the ensemble row is left out). Rows lacking the metric are skipped.
std::vector<AxiomSeries> axiom_series(const nlohmann::json& metrics);

struct Histogram {
  double lo = -1.0;
  double hi = 1.0;
  std::vector<std::size_t> counts;
};

// Equal-width bins over [lo, hi]; the top edge belongs to the last bin.
Histogram histogram(std::span<const double> values, std::size_t bins, double lo = -1.0,
                    double hi = 1.0);

// Scatter plot of one series, one circle per point.
std::string scatter_svg(const AxiomSeries& series);

}  // namespace slatejudge
