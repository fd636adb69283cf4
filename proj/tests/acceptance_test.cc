// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails.

#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <nlohmann/json.hpp>
#include <random>
#include <sstream>

#include "slatejudge/analysis.h"
#include "slatejudge/cli.h"
#include "slatejudge/coherence.h"
#include "slatejudge/errors.h"
#include "slatejudge/judge.h"
#include "slatejudge/regret.h"
#include "slatejudge/simulate.h"
#include "slatejudge/utility.h"
#include "stub_server.h"
#include "test_support.h"

namespace slatejudge {
namespace {

using nlohmann::json;
namespace t = slatejudge::testing;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

SimulatedDataset acceptance_bundle() {
  SimulationParams p;
  p.users = 20;
  p.slates_per_user = 6;
  p.slate_size = 5;
  p.seed = 7;
  return simulate_dataset(p);
}

struct SingleRun {
  ExecutionResult result;
  MetricsTable table;
};

SingleRun run_judges(const DatasetBundle& bundle,
                     const std::vector<std::pair<std::string, SyntheticJudgeSpec>>& specs,
                     const Embedder* embedder = nullptr, bool ratings = true) {
  std::vector<std::unique_ptr<SyntheticJudge>> owned;
  std::vector<const Judge*> judges;
  std::vector<std::string> ids;
  std::vector<JudgeLabel> labels;
  for (const auto& [id, spec] : specs) {
    owned.push_back(std::make_unique<SyntheticJudge>(id, spec));
    judges.push_back(owned.back().get());
    ids.push_back(id);
    labels.push_back({id, owned.back()->describe()});
  }
  ExecutionOptions opts;
  opts.concurrency_limit = 1;
  opts.include_ratings = ratings;
  opts.rating_scale = bundle.scale;
  SingleRun run;
  run.result = execute(build_plan(bundle.users, ids), judges, bundle, opts);
  AnalysisOptions aopts;
  aopts.embedder = embedder;
  run.table = analyze(bundle, run.result, labels, aopts);
  return run;
}

SyntheticJudgeSpec oracle() { return {SyntheticKind::kOracle, std::nullopt, std::nullopt, 0}; }

// 1
Outcome oracle_perfection() {
  const auto start = std::chrono::steady_clock::now();
  const SimulatedDataset data = acceptance_bundle();
  const HashingEmbedder embedder;
  const SingleRun run = run_judges(data.bundle, {{"oracle", oracle()}}, &embedder);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const MetricsRow& row = run.table.rows.at(0);
  const auto& c = row.coherence;
  const bool pass = row.regret.aggregate == 0.0 && c.transitivity.value() == 1.0 &&
                    c.asymmetry.value() == 1.0 && c.rating_transitivity.value() == 1.0 &&
                    seconds < 5.0;
  return {pass, "regret=" + fmt(row.regret.aggregate) +
                    " transitivity=" + fmt(c.transitivity.value().value_or(-1)) +
                    " asymmetry=" + fmt(c.asymmetry.value().value_or(-1)) +
                    " rating_transitivity=" + fmt(c.rating_transitivity.value().value_or(-1)) +
                    " time=" + fmt(seconds, 2) + "s"};
}

// 2
Outcome random_baseline_match() {
  const SimulatedDataset data = acceptance_bundle();
  const int kSeeds = 200;
  double regret = 0, asym = 0, trans = 0, irr = 0;
  int trans_runs = 0;
  for (int s = 1; s <= kSeeds; ++s) {
    const SingleRun run = run_judges(
        data.bundle, {{"random", {SyntheticKind::kRandom, std::nullopt, std::nullopt,
                                  static_cast<uint64_t>(s)}}},
        nullptr, false);
    const MetricsRow& row = run.table.rows.at(0);
    regret += row.regret.aggregate;
    asym += *row.coherence.asymmetry.value();
    irr += *row.coherence.irreflexivity.value();
    if (auto v = row.coherence.transitivity.value()) {
      trans += *v;
      ++trans_runs;
    }
  }
  regret /= kSeeds;
  asym /= kSeeds;
  irr /= kSeeds;
  trans /= trans_runs;
  const double baseline = random_baseline_regret(data.bundle.users);
  const bool pass = std::abs(regret - baseline) <= 0.01 && std::abs(asym - 0.5) <= 0.03 &&
                    std::abs(trans - 0.75) <= 0.03 && std::abs(irr - 0.5) <= 0.03;
  return {pass, "regret=" + fmt(regret) + " baseline=" + fmt(baseline) + " asymmetry=" +
                    fmt(asym) + " transitivity=" + fmt(trans) + " irreflexivity=" + fmt(irr)};
}

// 3
Outcome ndcg_equivalence() {
  std::size_t checked = 0;
  double worst = 0.0;
  auto check_all = [&](std::vector<std::string> items, const std::vector<std::string>& ref) {
    const double ideal = t::ideal_dcg_by_search(ref, items.size());
    std::sort(items.begin(), items.end());
    do {
      const double expected = t::dcg_by_definition(items, ref) / ideal;
      worst = std::max(worst, std::abs(ndcg_utility(Slate{"s", items}, ref) - expected));
      ++checked;
    } while (std::next_permutation(items.begin(), items.end()));
  };
  for (std::size_t k = 1; k <= 5; ++k) {
    std::vector<std::string> items;
    for (std::size_t i = 0; i < k; ++i) items.push_back(std::string(1, char('a' + i)));
    check_all(items, items);  // full reference
    for (std::size_t m = 1; m < k; ++m) {
      check_all(items, std::vector<std::string>(items.begin(), items.begin() + m));  // prefix
    }
    std::vector<std::string> mixed = {"z", items.back(), "y"};  // mostly zero relevance
    check_all(items, mixed);
  }
  return {worst <= 1e-12, std::to_string(checked) + " permutations, max error " +
                              std::to_string(worst)};
}

// 4
Outcome regret_equivalence() {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> n_users(1, 5), n_slates(2, 5), coin(0, 3);
  std::uniform_real_distribution<double> util(0.0, 1.0);
  const Catalog catalog = t::numbered_catalog(25);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<UserRecord> users;
    std::vector<AggregatedOutcome> outcomes;
    std::map<std::tuple<std::string, std::string, std::string>, std::string> pick;
    const int nu = n_users(rng);
    for (int u = 0; u < nu; ++u) {
      std::vector<double> us;
      const int ns = n_slates(rng);
      for (int s = 0; s < ns; ++s) us.push_back(coin(rng) == 0 ? 0.25 : util(rng));
      users.push_back(t::user_with_utilities(catalog, "u" + std::to_string(u), us, 1, u * 5));
      const auto& sl = users.back().slates;
      for (std::size_t i = 0; i < sl.size(); ++i) {
        for (std::size_t k = i + 1; k < sl.size(); ++k) {
          const auto [a, b] = unordered_pair(sl[i].slate_id, sl[k].slate_id);
          const int c = coin(rng);
          AggregatedOutcome o = c == 0   ? t::tied(users.back().user_id, a, b)
                                : c % 2 ? t::decided(users.back().user_id, a, b)
                                         : t::decided(users.back().user_id, b, a);
          pick[{users.back().user_id, a, b}] = o.preferred();
          outcomes.push_back(std::move(o));
        }
      }
    }
    const double oracle = t::regret_by_enumeration(
        users, [&](const std::string& u, const std::string& x, const std::string& y) {
          const auto [a, b] = unordered_pair(x, y);
          return pick.at({u, a, b});
        });
    worst = std::max(worst, std::abs(empirical_regret(users, outcomes).aggregate - oracle));
  }
  const Catalog small = t::numbered_catalog(4);
  const std::vector<UserRecord> two = {t::user_with_utilities(small, "u", {0.2, 0.8})};
  const std::vector<AggregatedOutcome> wrong = {
      t::decided("u", two[0].slates[0].slate_id, two[0].slates[1].slate_id)};
  const RegretReport r = empirical_regret(two, wrong);
  const bool worked = std::abs(r.aggregate - 0.3) <= 1e-12 &&
                      std::abs(r.random_baseline - 0.15) <= 1e-12;
  return {worst <= 1e-12 && worked, "100 instances, max error " + std::to_string(worst) +
                                        "; worked example " + fmt(r.aggregate, 6) + " / " +
                                        fmt(r.random_baseline, 6)};
}

// 5
Outcome bias_cancellation() {
  const SimulatedDataset data = acceptance_bundle();
  const SyntheticJudgeSpec pos{SyntheticKind::kPositional, std::nullopt, 1.0, 0};
  const SingleRun alone = run_judges(data.bundle, {{"positional", pos}});
  std::size_t ties = 0;
  const auto outcomes = aggregate_all(alone.result.duels);
  for (const auto& o : outcomes) ties += o.is_tie();
  const double asym = alone.table.rows[0].coherence.asymmetry.value().value_or(-1);
  const SingleRun mixed =
      run_judges(data.bundle, {{"positional", pos}, {"oracle_a", oracle()}, {"oracle_b", oracle()}});
  const double regret = mixed.table.rows.back().regret.aggregate;
  const bool pass = asym == 0.0 && ties == outcomes.size() && regret == 0.0 &&
                    mixed.table.rows.back().ensemble;
  return {pass, "asymmetry=" + fmt(asym) + " ties=" + std::to_string(ties) + "/" +
                    std::to_string(outcomes.size()) + " ensemble regret=" + fmt(regret)};
}

// 6
Outcome noise_monotonicity() {
  const SimulatedDataset data = acceptance_bundle();
  const std::vector<double> betas = {0.5, 2, 8, 32};
  std::vector<double> means;
  for (double beta : betas) {
    double sum = 0;
    for (int s = 1; s <= 50; ++s) {
      const SingleRun run = run_judges(
          data.bundle,
          {{"noisy", {SyntheticKind::kNoisyOracle, beta, std::nullopt, static_cast<uint64_t>(s)}}},
          nullptr, false);
      sum += run.table.rows[0].regret.aggregate;
    }
    means.push_back(sum / 50);
  }
  bool pass = means.front() > means.back();
  std::string detail;
  for (std::size_t i = 0; i < means.size(); ++i) {
    if (i > 0 && means[i] > means[i - 1]) pass = false;
    detail += (i ? " " : "") + std::string("beta=") + fmt(betas[i], 1) + ":" + fmt(means[i]);
  }
  return {pass, detail};
}

// 7
Outcome parser_robustness() {
  std::ifstream in(std::string(SLATEJUDGE_FIXTURES) + "/verdict_corpus.jsonl");
  std::string line;
  std::size_t total = 0, correct = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json c = json::parse(line);
    ++total;
    const Verdict v = parse_verdict(c["response"].get<std::string>(), c["tag"].get<std::string>(),
                                    c["allow_tie"].get<bool>());
    bool ok = to_string(v.choice) == c["expected"].get<std::string>();
    if (c["reason"].is_null()) {
      ok = ok && !v.abstain_reason;
    } else {
      ok = ok && v.abstain_reason == c["reason"].get<std::string>();
    }
    correct += ok;
  }
  return {total >= 40 && correct == total,
          std::to_string(correct) + "/" + std::to_string(total) + " classified as expected"};
}

int quiet_cli(const std::vector<std::string>& args) {
  std::ostringstream sink;
  std::streambuf* old = std::cout.rdbuf(sink.rdbuf());
  const int code = cli::run(args);
  std::cout.rdbuf(old);
  return code;
}

struct CliRuns {
  t::TempDir tmp;
  bool ok = false;
  std::filesystem::path a, b;
};

CliRuns& cli_runs() {
  static CliRuns r;
  static bool prepared = false;
  if (!prepared) {
    prepared = true;
    const std::string data = (r.tmp / "data").string();
    const std::string config = data + "/config.json";
    r.a = r.tmp / "a";
    r.b = r.tmp / "b";
    bool ok = quiet_cli({"--out", data, "--seed", "7", "simulate", "--users", "20", "--slates",
                         "6", "--k", "5", "--judge", "oracle", "--judge", "random", "--judge",
                         "noisy_oracle:2", "--judge", "positional:0.8"}) == 0;
    for (const auto& [dir, conc] : {std::pair{r.a, "1"}, std::pair{r.b, "16"}}) {
      const std::vector<std::string> common = {"--config", config, "--out", dir.string(),
                                               "--cache-dir", (dir / "cache").string(),
                                               "--concurrency", conc};
      for (const char* cmd : {"run", "analyze", "report"}) {
        std::vector<std::string> args = common;
        args.push_back(cmd);
        if (std::string(cmd) == "report") args.push_back("--svg");
        ok = ok && quiet_cli(args) == 0;
      }
    }
    r.ok = ok;
  }
  return r;
}

// 8
Outcome determinism() {
  CliRuns& r = cli_runs();
  if (!r.ok) return {false, "CLI pipeline failed"};
  const bool metrics = t::read_file(r.a / "metrics.json") == t::read_file(r.b / "metrics.json");
  const std::string oa = t::read_file(r.a / "outcomes.jsonl");
  const bool outcomes = !oa.empty() && oa == t::read_file(r.b / "outcomes.jsonl");
  const bool report = t::read_file(r.a / "report/report.json") ==
                      t::read_file(r.b / "report/report.json");
  return {metrics && outcomes && report,
          std::string("metrics.json ") + (metrics ? "identical" : "differs") +
              ", outcomes.jsonl (concurrency 1 vs 16) " + (outcomes ? "identical" : "differs") +
              ", report.json " + (report ? "identical" : "differs")};
}

// 9
Outcome report_schema() {
  CliRuns& r = cli_runs();
  if (!r.ok) return {false, "CLI pipeline failed"};
  const std::string csv = t::read_file(r.a / "metrics.csv");
  const std::string header = csv.substr(0, csv.find('\n'));
  const std::string expected =
      "model,regret,transitivity,asymmetry,rating_transitivity,irreflexivity,random_baseline,"
      "mean_similarity";
  const std::size_t lines = std::count(csv.begin(), csv.end(), '\n');
  return {header == expected && lines == 6, "header: " + header + " (" +
                                                 std::to_string(lines - 1) + " rows)"};
}

// 10
Outcome wire_conformance() {
  std::vector<std::string> problems;
  auto expect = [&](bool cond, const std::string& what) {
    if (!cond) problems.push_back(what);
  };

  t::StubServer good([](const t::ReceivedRequest&, int) {
    return t::StubReply{200, t::chat_completion("<VERDICT>1</VERDICT>")};
  });
  JudgeEndpoint e;
  e.judge_id = "stub";
  e.base_url = good.base_url();
  e.model_name = "stub-model";
  e.max_tokens = 32;
  e.retry_limit = 2;
  e.retry_backoff = std::chrono::milliseconds(1);
  e.timeout = std::chrono::milliseconds(2000);
  const RenderedPrompt prompt{"Which list?", "VERDICT", ""};
  expect(query_remote(e, prompt).verdict.choice == Choice::kFirst, "valid reply not parsed");
  const auto reqs = good.requests();
  if (reqs.size() == 1) {
    const json body = json::parse(reqs[0].body);
    expect(reqs[0].path == "/v1/chat/completions", "wrong path");
    expect(body.value("model", "") == "stub-model", "model missing");
    expect(body["messages"][0]["role"] == "user" && body["messages"][0]["content"] == "Which list?",
           "messages malformed");
    expect(body["max_tokens"] == 32 && body["temperature"] == 0.0, "sampling settings missing");
  } else {
    problems.push_back("expected exactly one request");
  }

  t::StubServer garbage([](const t::ReceivedRequest&, int) {
    return t::StubReply{200, t::chat_completion("no tag here")};
  });
  e.base_url = garbage.base_url();
  expect(query_remote(e, prompt).verdict.abstained(), "garbage not abstained");
  expect(garbage.requests().size() == 3, "retry_limit=2 should make 3 attempts, made " +
                                             std::to_string(garbage.requests().size()));

  t::StubServer slow([](const t::ReceivedRequest&, int) {
    std::this_thread::sleep_for(std::chrono::milliseconds(1000));
    return t::StubReply{200, t::chat_completion("<VERDICT>1</VERDICT>")};
  });
  e.base_url = slow.base_url();
  e.timeout = std::chrono::milliseconds(150);
  e.retry_limit = 0;
  const auto start = std::chrono::steady_clock::now();
  bool timed_out = false;
  try {
    query_remote(e, prompt);
  } catch (const TransportError&) {
    timed_out = true;
  }
  expect(timed_out && std::chrono::steady_clock::now() - start < std::chrono::milliseconds(800),
         "timeout not honored");

  // Outage: every remote duel abstains, the batch completes.
  const SimulatedDataset data = acceptance_bundle();
  e.base_url = t::dead_base_url();
  const RemoteJudge down(e, TemplateFamily::kStandardChat);
  const SyntheticJudge orc("oracle", oracle());
  const std::vector<const Judge*> judges = {&down, &orc};
  const std::vector<std::string> ids = {"stub", "oracle"};
  const DuelPlan plan = build_plan(data.bundle.users, ids);
  ExecutionOptions opts;
  opts.include_ratings = false;
  opts.include_self_duels = false;
  opts.concurrency_limit = 8;
  std::size_t abstained = 0, remote = 0;
  try {
    const ExecutionResult result = execute(plan, judges, data.bundle, opts);
    for (const auto& d : result.duels) {
      if (d.duel.judge_id != "stub") continue;
      ++remote;
      abstained += d.verdict.abstained() && d.verdict.abstain_reason->rfind("transport", 0) == 0;
    }
    expect(result.duels.size() == plan.duels.size(), "batch incomplete");
  } catch (const std::exception& ex) {
    problems.push_back(std::string("batch failed: ") + ex.what());
  }
  expect(remote > 0 && abstained == remote, "outage duels not all ABSTAIN");

  std::string detail = "request shape, retries, timeout and outage (" + std::to_string(abstained) +
                       "/" + std::to_string(remote) + " duels abstained)";
  for (const auto& p : problems) detail += "; " + p;
  return {problems.empty(), detail};
}

}  // namespace
}  // namespace slatejudge

int main() {
  spdlog::set_level(spdlog::level::err);
  using slatejudge::Outcome;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"oracle perfection", slatejudge::oracle_perfection},
      {"random baseline match", slatejudge::random_baseline_match},
      {"nDCG oracle equivalence", slatejudge::ndcg_equivalence},
      {"regret oracle equivalence", slatejudge::regret_equivalence},
      {"bias cancellation", slatejudge::bias_cancellation},
      {"noise monotonicity", slatejudge::noise_monotonicity},
      {"parser robustness", slatejudge::parser_robustness},
      {"determinism", slatejudge::determinism},
      {"report schema", slatejudge::report_schema},
      {"wire conformance", slatejudge::wire_conformance},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << (i + 1) << "] " << criteria[i].first
              << ": " << o.detail << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failed == 0 ? 0 : 1;
}
