#include "slatejudge/cli.h"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>

#include "slatejudge/analysis.h"
#include "slatejudge/config.h"
#include "slatejudge/errors.h"
#include "slatejudge/hashing.h"
#include "slatejudge/persistence.h"
#include "slatejudge/records.h"
#include "slatejudge/simulate.h"

namespace slatejudge::cli {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kRuntime = 2;

// Raised for problems the user must fix in their inputs (exit 1).
struct InputProblem : Error {
  using Error::Error;
};

struct GlobalOptions {
  std::string config;
  std::string out;
  std::optional<uint64_t> seed;
  std::optional<std::size_t> concurrency;
  std::string cache_dir;
  bool verbose = false;
  bool quiet = false;
};

struct SimulateOptions {
  std::size_t users = 20;
  std::size_t slates = 6;
  std::size_t k = 5;
  std::string task = "set_selection";
  std::size_t history = 5;
  std::size_t catalog_size = 0;
  std::vector<std::string> judges;
};

void setup_logging(const GlobalOptions& g) {
  static std::once_flag once;
  std::call_once(once, [] {
    auto logger = spdlog::stderr_color_mt("slatejudge");
    logger->set_pattern("[%l] %v");
    spdlog::set_default_logger(logger);
  });
  spdlog::set_level(g.quiet     ? spdlog::level::err
                    : g.verbose ? spdlog::level::debug
                                : spdlog::level::info);
}

RunConfig load_config(const GlobalOptions& g) {
  if (g.config.empty()) throw InputProblem("--config is required");
  RunConfig c = load_run_config(g.config);
  if (g.seed) c.seed = *g.seed;
  if (g.concurrency) c.concurrency = std::max<std::size_t>(1, *g.concurrency);
  if (!g.cache_dir.empty()) c.cache_dir = g.cache_dir;
  if (!g.out.empty()) c.output_dir = g.out;
  return c;
}

struct Validated {
  DatasetBundle bundle;
  ValidationReport report;
};

// Collects every finding instead of stopping at the first one where possible.
Validated validate_inputs(const RunConfig& config) {
  Validated v;
  std::vector<Finding> early;
  for (const auto& name : missing_placeholders(config.placeholders)) {
    early.push_back({Severity::kError, "missing placeholder " + name});
  }
  const bool needs_scale = config.task == TaskKind::kSetSelection || config.ratings;
  if (needs_scale && !config.rating_scale()) {
    const bool present = config.placeholders.contains("RATING_MIN") &&
                         config.placeholders.contains("RATING_MAX");
    if (present) {
      early.push_back({Severity::kError,
                       "placeholders RATING_MIN/RATING_MAX must be numbers with min < max"});
    }
  }
  for (const auto& p : {config.catalog_path, config.users_path}) {
    if (!fs::exists(p)) early.push_back({Severity::kError, "file not found: " + p.string()});
  }
  const bool can_load =
      std::none_of(early.begin(), early.end(),
                   [](const Finding& f) { return f.message.rfind("file not found", 0) == 0; }) &&
      (config.task != TaskKind::kSetSelection || config.rating_scale());
  if (can_load) {
    try {
      v.bundle = load_bundle(config);
      v.report = validate_bundle(v.bundle);
    } catch (const Error& e) {
      early.push_back({Severity::kError, e.what()});
    }
  }
  // validate_bundle repeats placeholder findings already collected.
  for (auto& f : v.report.findings) {
    if (std::none_of(early.begin(), early.end(),
                     [&](const Finding& e) { return e.message == f.message; })) {
      early.push_back(std::move(f));
    }
  }
  v.report.findings = std::move(early);
  return v;
}

void print_findings(const ValidationReport& report) {
  for (const auto& f : report.findings) {
    std::cout << (f.severity == Severity::kError ? "error: " : "warning: ") << f.message << '\n';
  }
}

Validated require_valid(const RunConfig& config) {
  Validated v = validate_inputs(config);
  if (!v.report.ok()) {
    print_findings(v.report);
    throw InputProblem("validation failed");
  }
  return v;
}

void write_text(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << text;
    if (!out.flush()) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move " + tmp.string() + " into place: " + ec.message());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

std::vector<const Judge*> raw_pointers(const std::vector<std::unique_ptr<Judge>>& judges) {
  std::vector<const Judge*> out;
  for (const auto& j : judges) out.push_back(j.get());
  return out;
}

int cmd_validate(const GlobalOptions& g) {
  const RunConfig config = load_config(g);
  const Validated v = validate_inputs(config);
  std::cout << "users: " << v.report.users << "\nslates: " << v.report.slates
            << "\nordered pairs: " << v.report.ordered_pairs << '\n';
  print_findings(v.report);
  std::cout << (v.report.ok() ? "ok" : "invalid") << '\n';
  return v.report.ok() ? kOk : kInvalid;
}

int cmd_plan(const GlobalOptions& g) {
  const RunConfig config = load_config(g);
  const Validated v = require_valid(config);
  const auto ids = config.judge_ids();
  const DuelPlan plan = build_plan(v.bundle.users, ids, config.samples_per_order);
  const std::size_t self_samples =
      config.irreflexivity == IrreflexivityStrategy::kPositionFlip ? 2 : 1;
  std::cout << "users: " << v.report.users << "\nslates: " << v.report.slates
            << "\nordered pairs: " << v.report.ordered_pairs << "\njudges: " << ids.size()
            << "\nsamples per order: " << config.samples_per_order
            << "\nplanned duels: " << plan.duels.size() << " = " << v.report.ordered_pairs
            << " ordered pairs x " << ids.size() << " judges x " << config.samples_per_order
            << " samples\nself-duel queries: " << plan.self_duels.size() * self_samples
            << "\nrating queries: " << (config.ratings ? plan.rating_queries.size() : 0) << '\n';
  return kOk;
}

int cmd_run(const GlobalOptions& g) {
  const RunConfig config = load_config(g);
  Validated v = require_valid(config);
  const std::string started = utc_timestamp();
  const auto judges = make_judges(config);
  const auto ids = config.judge_ids();
  const DuelPlan plan = build_plan(v.bundle.users, ids, config.samples_per_order);

  std::optional<ResponseCache> cache;
  if (config.cache_dir) cache.emplace(*config.cache_dir);

  ExecutionOptions options;
  options.concurrency_limit = config.concurrency;
  options.irreflexivity = config.irreflexivity;
  options.include_ratings = config.ratings;
  options.cache = cache ? &*cache : nullptr;
  options.prompts = config.prompts;
  options.render.history_limit = config.history_limit;
  options.rating_scale = config.rating_scale();

  const auto pointers = raw_pointers(judges);
  const ExecutionResult result = execute(plan, pointers, v.bundle, options);
  const auto outcomes = aggregate_all(result.duels);

  ensure_dir(config.output_dir);
  write_run_records(config.output_dir, result, outcomes);

  RunLedgerEntry entry;
  entry.config_digest = config.digest();
  entry.started_at = started;
  entry.finished_at = utc_timestamp();
  entry.run_id = sha256_hex(entry.config_digest + entry.started_at).substr(0, 16);
  entry.planned = result.counts.planned;
  entry.cached = result.counts.cached;
  entry.queried = result.counts.queried;
  entry.abstained = result.counts.abstained;
  append_ledger(config.output_dir / "ledger.jsonl", entry);

  std::size_t ties = 0;
  for (const auto& o : outcomes) ties += o.is_tie();
  std::cout << "planned: " << entry.planned << "\ncached: " << entry.cached
            << "\nqueried: " << entry.queried << "\nabstained: " << entry.abstained
            << "\npairs: " << outcomes.size() << " (" << ties << " ties)\nwrote "
            << config.output_dir.string() << '\n';
  return kOk;
}

int cmd_analyze(const GlobalOptions& g) {
  const RunConfig config = load_config(g);
  Validated v = require_valid(config);
  const auto judges = make_judges(config);
  std::vector<JudgeLabel> labels;
  for (const auto& j : judges) labels.push_back({j->id(), j->describe()});

  const ExecutionResult result = read_run_records(config.output_dir);
  const auto embedder = make_embedder(config.embedder);
  const CachingEmbedder cached(*embedder);

  AnalysisOptions options;
  options.tie_scoring = config.tie_scoring;
  options.irreflexivity = config.irreflexivity;
  options.embedder = &cached;
  options.ensemble_outcomes = read_outcomes(config.output_dir);
  const MetricsTable table = analyze(v.bundle, result, labels, options);

  const std::string csv = metrics_csv(table);
  write_text(config.output_dir / "metrics.csv", csv);
  write_text(config.output_dir / "metrics.json", metrics_json(table).dump(2) + "\n");
  std::vector<json> sims;
  for (const auto& s : table.similarities) {
    sims.push_back({{"user_id", s.user_id},
                    {"slate_a", s.slate_a},
                    {"slate_b", s.slate_b},
                    {"similarity", s.similarity}});
  }
  write_jsonl(config.output_dir / "similarities.jsonl", sims);
  std::cout << csv;
  return kOk;
}

int cmd_report(const GlobalOptions& g, bool svg, std::size_t bins) {
  const RunConfig config = load_config(g);
  const fs::path metrics_path = config.output_dir / "metrics.json";
  std::ifstream in(metrics_path);
  if (!in) throw InputProblem("no metrics at " + metrics_path.string() + "; run analyze first");
  const json metrics = json::parse(in);

  const fs::path dir = config.output_dir / "report";
  ensure_dir(dir);
  json axioms = json::object();
  for (const auto& s : axiom_series(metrics)) {
    std::string points = "model," + s.axiom + ",regret\n";
    for (std::size_t i = 0; i < s.points.size(); ++i) {
      points += s.models[i] + "," + json(s.points[i].first).dump() + "," +
                json(s.points[i].second).dump() + "\n";
    }
    write_text(dir / ("points_" + s.axiom + ".csv"), points);
    json entry = {{"points", s.points.size()}};
    if (s.correlation) {
      entry["pearson"] = s.correlation->pearson;
      entry["spearman"] = s.correlation->spearman;
      std::cout << s.axiom << ": pearson " << s.correlation->pearson << ", spearman "
                << s.correlation->spearman << " over " << s.points.size() << " judges\n";
    } else {
      entry["note"] = s.note;
      std::cout << s.axiom << ": " << s.note << '\n';
    }
    axioms[s.axiom] = std::move(entry);
    if (svg) write_text(dir / (s.axiom + ".svg"), scatter_svg(s));
  }

  std::vector<double> sims;
  const fs::path sim_path = config.output_dir / "similarities.jsonl";
  if (fs::exists(sim_path)) {
    for (const auto& j : read_jsonl(sim_path)) sims.push_back(j.at("similarity").get<double>());
  }
  const Histogram h = histogram(sims, bins);
  std::string hist = "bin_lo,bin_hi,count\n";
  const double width = (h.hi - h.lo) / static_cast<double>(h.counts.size());
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    hist += json(h.lo + width * i).dump() + "," + json(h.lo + width * (i + 1)).dump() + "," +
            std::to_string(h.counts[i]) + "\n";
  }
  write_text(dir / "similarity_histogram.csv", hist);

  const json report = {{"correlations", std::move(axioms)},
                       {"similarity_histogram",
                        {{"lo", h.lo}, {"hi", h.hi}, {"counts", h.counts}, {"pairs", sims.size()}}}};
  write_text(dir / "report.json", report.dump(2) + "\n");
  std::cout << "wrote " << dir.string() << '\n';
  return kOk;
}

std::string judge_id_for(const std::string& spec, std::map<std::string, int>& used) {
  std::string id;
  for (char c : spec) id += (std::isalnum(static_cast<unsigned char>(c)) || c == '.') ? c : '_';
  const int n = ++used[id];
  return n == 1 ? id : id + "-" + std::to_string(n);
}

int cmd_simulate(const GlobalOptions& g, const SimulateOptions& s) {
  if (g.out.empty()) throw InputProblem("simulate needs --out");
  SimulationParams params;
  params.users = s.users;
  params.slates_per_user = s.slates;
  params.slate_size = s.k;
  params.history_length = s.history;
  params.catalog_size = s.catalog_size;
  params.seed = g.seed.value_or(0);
  try {
    params.task = task_kind_from_string(s.task);
  } catch (const InvalidArgument& e) {
    throw InvalidParams(e.what());
  }
  const SimulatedDataset data = simulate_dataset(params);
  const fs::path dir = g.out;
  write_dataset(data, dir);

  json ensemble = json::array();
  std::map<std::string, int> used;
  const std::vector<std::string> specs =
      s.judges.empty() ? std::vector<std::string>{"oracle"} : s.judges;
  for (const auto& spec : specs) {
    parse_synthetic_shorthand(spec, params.seed);  // validates
    ensemble.push_back({{"id", judge_id_for(spec, used)}, {"synthetic", spec}});
  }
  json placeholders = json::object();
  for (const auto& [k, val] : data.bundle.placeholders) placeholders[k] = val;
  const json config = {
      {"dataset", {{"catalog", "catalog.jsonl"}, {"users", "users.jsonl"}, {"task", s.task}}},
      {"placeholders", placeholders},
      {"ensemble", ensemble},
      {"samples_per_order", 1},
      {"tie_scoring", "deterministic"},
      {"irreflexivity", "position_flip"},
      {"embedder", {{"kind", "hashing"}, {"dimension", 256}}},
      {"concurrency", 1},
      {"cache_dir", "cache"},
      {"seed", params.seed},
      {"output_dir", "out"},
  };
  write_text(dir / "config.json", config.dump(2) + "\n");
  std::cout << "wrote " << data.bundle.users.size() << " users and " << data.items.size()
            << " items to " << dir.string() << '\n';
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Pairwise slate preference evaluation with LLM judges"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  app.add_option("--config", g.config, "run configuration (JSON)");
  app.add_option("--out", g.out, "output directory (overrides the config)");
  app.add_option("--seed", g.seed, "seed for synthetic judges and simulation");
  app.add_option("--concurrency", g.concurrency, "maximum concurrent judge calls");
  app.add_option("--cache-dir", g.cache_dir, "response cache directory");
  app.add_flag("-v,--verbose", g.verbose, "debug logging");
  app.add_flag("-q,--quiet", g.quiet, "errors only");

  auto* validate = app.add_subcommand("validate", "check the config and dataset");
  auto* plan = app.add_subcommand("plan", "count the queries a run would make");
  auto* run_cmd = app.add_subcommand("run", "query the judges and write outcomes");
  auto* analyze_cmd = app.add_subcommand("analyze", "compute metrics.csv and metrics.json");
  auto* report = app.add_subcommand("report", "regret-vs-coherence figure data");
  bool svg = false;
  std::size_t bins = 20;
  report->add_flag("--svg", svg, "also write SVG scatter plots");
  report->add_option("--bins", bins, "similarity histogram bins")->check(CLI::PositiveNumber);
  auto* simulate = app.add_subcommand("simulate", "write a synthetic dataset and config");
  SimulateOptions sim;
  simulate->add_option("--users", sim.users, "number of users");
  simulate->add_option("--slates", sim.slates, "slates per user");
  simulate->add_option("--k", sim.k, "items per slate");
  simulate->add_option("--task", sim.task, "set_selection, reorder or joint");
  simulate->add_option("--history", sim.history, "history length per user");
  simulate->add_option("--catalog-size", sim.catalog_size, "catalog size (0: automatic)");
  simulate->add_option("--judge", sim.judges,
                       "synthetic judge: oracle, random, noisy_oracle:<beta>, positional:<bias>");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalid;
  }
  setup_logging(g);

  try {
    if (*validate) return cmd_validate(g);
    if (*plan) return cmd_plan(g);
    if (*run_cmd) return cmd_run(g);
    if (*analyze_cmd) return cmd_analyze(g);
    if (*report) return cmd_report(g, svg, bins);
    if (*simulate) return cmd_simulate(g, sim);
  } catch (const InputProblem& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalid;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kInvalid;
  } catch (const InvalidParams& e) {
    std::cerr << "invalid parameters: " << e.what() << '\n';
    return kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return kInvalid;
}

int main(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

}  // namespace slatejudge::cli
