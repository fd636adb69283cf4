#include "slatejudge/analysis.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "slatejudge/errors.h"

namespace slatejudge {
namespace {

using nlohmann::json;

const std::vector<std::string> kAxioms = {"transitivity", "asymmetry", "rating_transitivity",
                                          "irreflexivity"};

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(); }

std::string fixed3(const std::optional<double>& v) {
  if (!v) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", *v + 0.0);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

json counts_json(const MetricValue& m) {
  return {{"satisfied", m.satisfied}, {"denominator", m.denominator}, {"excluded", m.excluded}};
}

MetricsRow make_row(const DatasetBundle& bundle, const ExecutionResult& result,
                    std::string model, std::string description, bool ensemble,
                    const std::set<std::string>& judges, const AnalysisOptions& options,
                    const std::vector<AggregatedOutcome>* stored) {
  std::vector<AggregatedOutcome> outcomes;
  if (stored != nullptr) {
    outcomes = *stored;
  } else {
    std::vector<DuelRecord> own;
    for (const auto& d : result.duels) {
      if (judges.contains(d.duel.judge_id)) own.push_back(d);
    }
    outcomes = aggregate_all(own);
  }
  MetricsRow row;
  row.model = std::move(model);
  row.description = std::move(description);
  row.ensemble = ensemble;
  row.regret = empirical_regret(bundle.users, outcomes, options.tie_scoring);
  row.coherence = evaluate_coherence(result, judges, options.irreflexivity, &outcomes);
  return row;
}

}  // namespace

MetricsTable analyze(const DatasetBundle& bundle, const ExecutionResult& result,
                     std::span<const JudgeLabel> judges, const AnalysisOptions& options) {
  if (judges.empty()) throw EmptyEnsemble("no judges to analyze");
  MetricsTable table;
  table.tie_scoring = options.tie_scoring;
  table.irreflexivity = options.irreflexivity;

  std::set<std::string> all;
  for (const auto& j : judges) all.insert(j.id);
  const auto* stored = options.ensemble_outcomes ? &*options.ensemble_outcomes : nullptr;

  if (judges.size() == 1) {
    table.rows.push_back(make_row(bundle, result, judges[0].id, judges[0].description, false,
                                  all, options, stored));
  } else {
    for (const auto& j : judges) {
      table.rows.push_back(
          make_row(bundle, result, j.id, j.description, false, {j.id}, options, nullptr));
    }
    std::string description = "majority vote of";
    for (const auto& j : judges) description += " " + j.id;
    table.rows.push_back(
        make_row(bundle, result, "ensemble", description, true, all, options, stored));
  }

  if (options.embedder != nullptr) {
    table.embedder = options.embedder->describe();
    for (const auto& u : bundle.users) {
      for (std::size_t i = 0; i < u.slates.size(); ++i) {
        for (std::size_t k = i + 1; k < u.slates.size(); ++k) {
          const auto [a, b] = unordered_pair(u.slates[i].slate_id, u.slates[k].slate_id);
          const double s = slate_similarity(*u.find_slate(a), *u.find_slate(b), bundle.catalog,
                                            *options.embedder);
          table.similarities.push_back({u.user_id, a, b, s});
        }
      }
    }
    if (!table.similarities.empty()) {
      double sum = 0.0;
      for (const auto& p : table.similarities) sum += p.similarity;
      const double mean = sum / static_cast<double>(table.similarities.size());
      for (auto& row : table.rows) row.mean_similarity = mean;
    }
  }
  return table;
}

const std::vector<std::string>& metrics_columns() {
  static const std::vector<std::string> kColumns = {
      "model",         "regret",          "transitivity",   "asymmetry", "rating_transitivity",
      "irreflexivity", "random_baseline", "mean_similarity"};
  return kColumns;
}

std::string metrics_csv(const MetricsTable& table) {
  std::string out;
  for (std::size_t i = 0; i < metrics_columns().size(); ++i) {
    out += (i ? "," : "") + metrics_columns()[i];
  }
  out += '\n';
  for (const auto& row : table.rows) {
    out += csv_field(row.model);
    out += ',' + fixed3(row.regret.aggregate);
    out += ',' + fixed3(row.coherence.transitivity.value());
    out += ',' + fixed3(row.coherence.asymmetry.value());
    out += ',' + fixed3(row.coherence.rating_transitivity.value());
    out += ',' + fixed3(row.coherence.irreflexivity.value());
    out += ',' + fixed3(row.regret.random_baseline);
    out += ',' + fixed3(row.mean_similarity);
    out += '\n';
  }
  return out;
}

json metrics_json(const MetricsTable& table) {
  json rows = json::array();
  for (const auto& row : table.rows) {
    const CoherenceReport& c = row.coherence;
    rows.push_back({
        {"model", row.model},
        {"description", row.description},
        {"ensemble", row.ensemble},
        {"regret", row.regret.aggregate},
        {"transitivity", optional_number(c.transitivity.value())},
        {"asymmetry", optional_number(c.asymmetry.value())},
        {"rating_transitivity", optional_number(c.rating_transitivity.value())},
        {"irreflexivity", optional_number(c.irreflexivity.value())},
        {"random_baseline", row.regret.random_baseline},
        {"mean_similarity", optional_number(row.mean_similarity)},
        {"counts",
         {{"transitivity", counts_json(c.transitivity)},
          {"asymmetry", counts_json(c.asymmetry)},
          {"rating_transitivity", counts_json(c.rating_transitivity)},
          {"irreflexivity", counts_json(c.irreflexivity)}}},
        {"per_user_regret", row.regret.per_user},
    });
  }
  return {{"columns", metrics_columns()},
          {"tie_scoring", to_string(table.tie_scoring)},
          {"irreflexivity_strategy", to_string(table.irreflexivity)},
          {"embedder", table.embedder.empty() ? json() : json(table.embedder)},
          {"similarity_pairs", table.similarities.size()},
          {"rows", std::move(rows)}};
}

std::vector<AxiomSeries> axiom_series(const json& metrics) {
  std::vector<AxiomSeries> out;
  for (const auto& axiom : kAxioms) {
    AxiomSeries s;
    s.axiom = axiom;
    for (const auto& row : metrics.at("rows")) {
      if (row.value("ensemble", false)) continue;
      const json& v = row.at(axiom);
      if (!v.is_number()) continue;
      s.models.push_back(row.at("model").get<std::string>());
      s.points.emplace_back(v.get<double>(), row.at("regret").get<double>());
    }
    if (s.points.size() < 3) {
      s.note = "fewer than 3 judges report " + axiom;
    } else {
      try {
        s.correlation = correlate(s.points);
      } catch (const DegenerateVariance&) {
        s.note = "constant series; correlation undefined";
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

Histogram histogram(std::span<const double> values, std::size_t bins, double lo, double hi) {
  if (bins == 0 || !(hi > lo)) throw InvalidArgument("histogram needs bins > 0 and hi > lo");
  Histogram h{lo, hi, std::vector<std::size_t>(bins, 0)};
  const double width = (hi - lo) / static_cast<double>(bins);
  for (double v : values) {
    if (v < lo || v > hi) continue;
    auto b = static_cast<std::size_t>((v - lo) / width);
    ++h.counts[std::min(b, bins - 1)];
  }
  return h;
}

std::string scatter_svg(const AxiomSeries& series) {
  constexpr double kW = 480, kH = 360, kLeft = 60, kRight = 20, kTop = 30, kBottom = 50;
  double y_max = 0.0;
  for (const auto& p : series.points) y_max = std::max(y_max, p.second);
  y_max = y_max > 0.0 ? y_max * 1.1 : 1.0;
  auto px = [&](double x) { return kLeft + std::clamp(x, 0.0, 1.0) * (kW - kLeft - kRight); };
  auto py = [&](double y) { return kH - kBottom - (y / y_max) * (kH - kTop - kBottom); };

  std::string svg;
  svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"480\" height=\"360\" "
         "viewBox=\"0 0 480 360\">\n";
  svg += "  <rect x=\"0\" y=\"0\" width=\"480\" height=\"360\" fill=\"white\"/>\n";
  svg += "  <line x1=\"" + num(kLeft) + "\" y1=\"" + num(kH - kBottom) + "\" x2=\"" +
         num(kW - kRight) + "\" y2=\"" + num(kH - kBottom) + "\" stroke=\"black\"/>\n";
  svg += "  <line x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop) + "\" x2=\"" + num(kLeft) +
         "\" y2=\"" + num(kH - kBottom) + "\" stroke=\"black\"/>\n";
  svg += "  <text x=\"" + num(kW / 2) + "\" y=\"" + num(kH - 12) +
         "\" text-anchor=\"middle\" font-size=\"13\">" + xml_escape(series.axiom) + "</text>\n";
  svg += "  <text x=\"16\" y=\"" + num(kH / 2) + "\" text-anchor=\"middle\" font-size=\"13\" "
         "transform=\"rotate(-90 16 " + num(kH / 2) + ")\">regret</text>\n";
  for (int t = 0; t <= 4; ++t) {
    const double x = t / 4.0;
    svg += "  <text x=\"" + num(px(x)) + "\" y=\"" + num(kH - kBottom + 16) +
           "\" text-anchor=\"middle\" font-size=\"10\">" + num(x) + "</text>\n";
    const double y = y_max * t / 4.0;
    svg += "  <text x=\"" + num(kLeft - 6) + "\" y=\"" + num(py(y) + 3) +
           "\" text-anchor=\"end\" font-size=\"10\">" + num(y) + "</text>\n";
  }
  for (std::size_t i = 0; i < series.points.size(); ++i) {
    const auto& [x, y] = series.points[i];
    svg += "  <circle cx=\"" + num(px(x)) + "\" cy=\"" + num(py(y)) +
           "\" r=\"5\" fill=\"steelblue\"><title>" + xml_escape(series.models[i]) +
           "</title></circle>\n";
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace slatejudge
