#include "slatejudge/duel_engine.h"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <mutex>
#include <thread>
#include <unordered_map>

#include "slatejudge/errors.h"

namespace slatejudge {
namespace {

using nlohmann::json;

json verdict_to_json(const Verdict& v) {
  return json{{"choice", to_string(v.choice)},
              {"abstain_reason", v.abstain_reason ? json(*v.abstain_reason) : json()},
              {"raw_response_digest", v.raw_response_digest}};
}

Verdict verdict_from_json(const json& j) {
  Verdict v;
  v.choice = choice_from_string(j.at("choice").get<std::string>());
  if (j.contains("abstain_reason") && j["abstain_reason"].is_string()) {
    v.abstain_reason = j["abstain_reason"].get<std::string>();
  }
  v.raw_response_digest = j.at("raw_response_digest").get<std::string>();
  return v;
}

json rating_to_json(const RatingVerdict& r) {
  return json{{"rating", r.rating ? json(*r.rating) : json()},
              {"abstain_reason", r.abstain_reason ? json(*r.abstain_reason) : json()},
              {"raw_response_digest", r.raw_response_digest}};
}

RatingVerdict rating_from_json(const json& j) {
  RatingVerdict r;
  if (j.at("rating").is_number_integer()) r.rating = j["rating"].get<int>();
  if (j.contains("abstain_reason") && j["abstain_reason"].is_string()) {
    r.abstain_reason = j["abstain_reason"].get<std::string>();
  }
  r.raw_response_digest = j.at("raw_response_digest").get<std::string>();
  if (r.rating.has_value() == r.abstain_reason.has_value()) {
    throw std::runtime_error("rating entry needs exactly one of rating/abstain_reason");
  }
  return r;
}

struct UserIndex {
  const UserRecord* user = nullptr;
  std::unordered_map<std::string, const Slate*> slates;
};

// Runs fn(i) for i in [0, n) on up to `limit` threads.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t limit, Fn&& fn) {
  const std::size_t workers = std::max<std::size_t>(1, std::min(limit, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

class Executor {
 public:
  Executor(std::span<const Judge* const> judges, const DatasetBundle& bundle,
           const ExecutionOptions& options)
      : bundle_(bundle), options_(options) {
    for (const Judge* j : judges) judges_.emplace(j->id(), j);
    for (const auto& u : bundle.users) {
      UserIndex& idx = users_[u.user_id];
      idx.user = &u;
      for (const auto& s : u.slates) idx.slates.emplace(s.slate_id, &s);
    }
  }

  const Judge& judge(const std::string& id) const {
    auto it = judges_.find(id);
    if (it == judges_.end()) throw InvalidArgument("plan references unknown judge '" + id + "'");
    return *it->second;
  }

  const UserIndex& user(const std::string& id) const {
    auto it = users_.find(id);
    if (it == users_.end()) throw InvalidArgument("plan references unknown user '" + id + "'");
    return it->second;
  }

  const Slate& slate(const UserIndex& u, const std::string& id) const {
    auto it = u.slates.find(id);
    if (it == u.slates.end()) {
      throw InvalidArgument("slate '" + id + "' is not evaluated for user '" +
                            u.user->user_id + "'");
    }
    return *it->second;
  }

  const PromptTemplate& duel_template(const Judge& j, bool allow_tie) const {
    const TemplateFamily family = j.template_family().value_or(TemplateFamily::kStandardChat);
    std::lock_guard<std::mutex> lock(tie_mu_);
    if (allow_tie) {
      auto it = tie_templates_.find(family);
      if (it == tie_templates_.end()) {
        it = tie_templates_.emplace(family, with_tie_option(options_.prompts.duel.at(family))).first;
      }
      return it->second;
    }
    return options_.prompts.duel.at(family);
  }

  Verdict run_duel(const DuelSpec& spec, bool allow_tie) {
    const Judge& j = judge(spec.judge_id);
    const UserIndex& u = user(spec.user_id);
    const Slate& first = slate(u, spec.first);
    const Slate& second = slate(u, spec.second);

    std::optional<RenderedPrompt> prompt;
    if (j.needs_prompts()) {
      prompt = render_duel_prompt(duel_template(j, allow_tie), bundle_.placeholders, *u.user,
                                  first, second, bundle_.catalog, options_.render);
    }
    DuelRequest request{&spec,
                        {u.user->utility(spec.first), u.user->utility(spec.second)},
                        prompt ? &*prompt : nullptr, allow_tie};
    const std::string key = j.duel_cache_key(request);
    if (auto hit = lookup(key)) {
      try {
        return verdict_from_json(hit->verdict);
      } catch (const std::exception& e) {
        spdlog::warn("cache entry {} has an unreadable verdict ({}); re-querying", key, e.what());
        --counts_cached_;
      }
    }
    ++counts_queried_;
    JudgeAnswer answer;
    try {
      answer = j.duel(request);
    } catch (const AuthError& e) {
      return Verdict::abstain(std::string("auth: ") + e.what());
    } catch (const TransportError& e) {
      return Verdict::abstain(std::string("transport: ") + e.what());
    } catch (const Error& e) {
      return Verdict::abstain(std::string("error: ") + e.what());
    }
    if (auto failure = store(key, answer.raw_response, verdict_to_json(answer.verdict))) {
      return Verdict::abstain(*failure, answer.verdict.raw_response_digest);
    }
    return answer.verdict;
  }

  RatingVerdict run_rating(const RatingQuery& q) {
    const Judge& j = judge(q.judge_id);
    const UserIndex& u = user(q.user_id);
    const Slate& s = slate(u, q.slate_id);
    std::optional<RenderedPrompt> prompt;
    if (j.needs_prompts()) {
      const TemplateFamily family = j.template_family().value_or(TemplateFamily::kStandardChat);
      prompt = render_rating_prompt(options_.prompts.rating.at(family), bundle_.placeholders,
                                    *u.user, s, bundle_.catalog, options_.render);
    }
    RatingRequest request{q.user_id, q.slate_id, u.user->utility(q.slate_id),
                          *options_.rating_scale, prompt ? &*prompt : nullptr};
    const std::string key = j.rating_cache_key(request);
    if (auto hit = lookup(key)) {
      try {
        return rating_from_json(hit->verdict);
      } catch (const std::exception& e) {
        spdlog::warn("cache entry {} has an unreadable rating ({}); re-querying", key, e.what());
        --counts_cached_;
      }
    }
    ++counts_queried_;
    auto abstain = [](std::string reason) {
      RatingVerdict r;
      r.abstain_reason = std::move(reason);
      return r;
    };
    RatingAnswer answer;
    try {
      answer = j.rate(request);
    } catch (const AuthError& e) {
      return abstain(std::string("auth: ") + e.what());
    } catch (const TransportError& e) {
      return abstain(std::string("transport: ") + e.what());
    } catch (const Error& e) {
      return abstain(std::string("error: ") + e.what());
    }
    if (auto failure = store(key, answer.raw_response, rating_to_json(answer.rating))) {
      return abstain(*failure);
    }
    return answer.rating;
  }

  std::size_t cached() const { return counts_cached_; }
  std::size_t queried() const { return counts_queried_; }

 private:
  std::optional<CacheEntry> lookup(const std::string& key) {
    if (options_.cache == nullptr) return std::nullopt;
    auto hit = options_.cache->get(key);
    if (hit) ++counts_cached_;
    return hit;
  }

  // Error text when the answer could not be cached.
  std::optional<std::string> store(const std::string& key, const std::string& raw,
                                   json verdict) {
    if (options_.cache == nullptr) return std::nullopt;
    try {
      options_.cache->put(key, CacheEntry{raw, std::move(verdict), utc_timestamp()});
    } catch (const Error& e) {
      return std::string("cache-io: ") + e.what();
    }
    return std::nullopt;
  }

  const DatasetBundle& bundle_;
  const ExecutionOptions& options_;
  std::unordered_map<std::string, const Judge*> judges_;
  std::unordered_map<std::string, UserIndex> users_;
  mutable std::mutex tie_mu_;
  mutable std::map<TemplateFamily, PromptTemplate> tie_templates_;
  std::atomic<std::size_t> counts_cached_{0};
  std::atomic<std::size_t> counts_queried_{0};
};

}  // namespace

std::string_view to_string(TieScoring t) {
  return t == TieScoring::kExpected ? "expected" : "deterministic";
}

TieScoring tie_scoring_from_string(std::string_view name) {
  if (name == "deterministic") return TieScoring::kDeterministic;
  if (name == "expected") return TieScoring::kExpected;
  throw InvalidArgument("unknown tie_scoring '" + std::string(name) + "'");
}

std::string_view to_string(IrreflexivityStrategy s) {
  return s == IrreflexivityStrategy::kTieAllowed ? "tie_allowed" : "position_flip";
}

IrreflexivityStrategy irreflexivity_from_string(std::string_view name) {
  if (name == "position_flip") return IrreflexivityStrategy::kPositionFlip;
  if (name == "tie_allowed") return IrreflexivityStrategy::kTieAllowed;
  throw InvalidArgument("unknown irreflexivity strategy '" + std::string(name) + "'");
}

PromptSet PromptSet::defaults() {
  PromptSet set;
  for (auto f : {TemplateFamily::kStandardChat, TemplateFamily::kChatMl, TemplateFamily::kInst}) {
    set.duel.emplace(f, default_duel_template(f));
    set.rating.emplace(f, default_rating_template(f));
  }
  return set;
}

DuelPlan build_plan(std::span<const UserRecord> users,
                    std::span<const std::string> judge_ids, int samples_per_order) {
  if (judge_ids.empty()) throw EmptyEnsemble("the judge ensemble is empty");
  if (samples_per_order < 1) throw InvalidArgument("samples_per_order must be >= 1");
  std::set<std::string> distinct(judge_ids.begin(), judge_ids.end());
  if (distinct.size() != judge_ids.size()) throw InvalidArgument("judge ids must be distinct");

  DuelPlan plan;
  plan.samples_per_order = samples_per_order;
  plan.ensemble_size = judge_ids.size();
  for (const auto& user : users) {
    if (user.slates.size() < 2) {
      throw InvalidArgument("user '" + user.user_id + "' has fewer than 2 slates");
    }
    const auto& slates = user.slates;
    for (std::size_t i = 0; i < slates.size(); ++i) {
      for (std::size_t k = i + 1; k < slates.size(); ++k) {
        for (const auto& judge : judge_ids) {
          for (const auto& [a, b] : {std::pair{i, k}, std::pair{k, i}}) {
            for (int s = 0; s < samples_per_order; ++s) {
              plan.duels.push_back(
                  {user.user_id, slates[a].slate_id, slates[b].slate_id, judge, s});
            }
          }
        }
      }
    }
    for (const auto& slate : slates) {
      for (const auto& judge : judge_ids) {
        plan.self_duels.push_back({user.user_id, slate.slate_id, judge});
        plan.rating_queries.push_back({user.user_id, slate.slate_id, judge});
      }
    }
  }
  return plan;
}

ExecutionResult execute(const DuelPlan& plan, std::span<const Judge* const> judges,
                        const DatasetBundle& bundle, const ExecutionOptions& options) {
  if (options.include_ratings && !options.rating_scale) {
    throw InvalidArgument("rating queries need a rating scale");
  }
  Executor exec(judges, bundle, options);
  const bool tie_allowed = options.irreflexivity == IrreflexivityStrategy::kTieAllowed;
  const int self_samples = tie_allowed ? 1 : 2;

  ExecutionResult result;
  result.duels.resize(plan.duels.size());
  if (options.include_self_duels) {
    result.self_duels.resize(plan.self_duels.size());
    for (std::size_t i = 0; i < plan.self_duels.size(); ++i) {
      const auto& s = plan.self_duels[i];
      result.self_duels[i] = {s.user_id, s.slate_id, s.judge_id,
                              std::vector<Verdict>(self_samples)};
    }
  }
  if (options.include_ratings) result.ratings.resize(plan.rating_queries.size());

  const std::size_t n_duels = plan.duels.size();
  const std::size_t n_self = options.include_self_duels ? plan.self_duels.size() * self_samples : 0;
  const std::size_t n_ratings = options.include_ratings ? plan.rating_queries.size() : 0;
  const std::size_t total = n_duels + n_self + n_ratings;

  parallel_for(total, options.concurrency_limit, [&](std::size_t i) {
    if (i < n_duels) {
      result.duels[i] = {plan.duels[i], exec.run_duel(plan.duels[i], false)};
    } else if (i < n_duels + n_self) {
      const std::size_t j = (i - n_duels) / self_samples;
      const int sample = static_cast<int>((i - n_duels) % self_samples);
      const auto& s = plan.self_duels[j];
      const DuelSpec spec{s.user_id, s.slate_id, s.slate_id, s.judge_id, sample};
      result.self_duels[j].samples[sample] = exec.run_duel(spec, tie_allowed);
    } else {
      const std::size_t j = i - n_duels - n_self;
      const auto& q = plan.rating_queries[j];
      result.ratings[j] = {q.user_id, q.slate_id, q.judge_id, exec.run_rating(q)};
    }
  });

  result.counts.planned = total;
  result.counts.cached = exec.cached();
  result.counts.queried = exec.queried();
  for (const auto& d : result.duels) result.counts.abstained += d.verdict.abstained();
  for (const auto& s : result.self_duels) {
    for (const auto& v : s.samples) result.counts.abstained += v.abstained();
  }
  for (const auto& r : result.ratings) result.counts.abstained += r.rating.abstained();
  return result;
}

AggregatedOutcome aggregate(std::span<const DuelRecord> pair_verdicts) {
  if (pair_verdicts.empty()) throw InvalidArgument("no verdicts to aggregate");
  const DuelSpec& head = pair_verdicts.front().duel;
  if (head.is_self_duel()) throw InvalidArgument("self-duels are not aggregated");
  AggregatedOutcome out;
  out.user_id = head.user_id;
  std::tie(out.slate_a, out.slate_b) = unordered_pair(head.first, head.second);
  out.votes[out.slate_a] = 0;
  out.votes[out.slate_b] = 0;

  bool saw_ab = false;
  bool saw_ba = false;
  for (const auto& r : pair_verdicts) {
    if (r.duel.user_id != out.user_id ||
        unordered_pair(r.duel.first, r.duel.second) != SlatePair{out.slate_a, out.slate_b}) {
      throw InvalidArgument("verdicts of different pairs passed to aggregate");
    }
    (r.duel.first == out.slate_a ? saw_ab : saw_ba) = true;
    if (auto chosen = chosen_slate(r.duel, r.verdict)) {
      ++out.votes[*chosen];
    } else {
      ++out.abstentions;
    }
  }
  if (!saw_ab || !saw_ba) {
    throw InvalidArgument("verdicts for pair {" + out.slate_a + ", " + out.slate_b +
                          "} do not cover both presentation orders");
  }
  const int va = out.votes[out.slate_a];
  const int vb = out.votes[out.slate_b];
  if (va > vb) {
    out.winner = out.slate_a;
  } else if (vb > va) {
    out.winner = out.slate_b;
  } else {
    out.tie_resolved_to = out.slate_a;
  }
  return out;
}

std::vector<AggregatedOutcome> aggregate_all(
    std::span<const DuelRecord> records,
    const std::optional<std::set<std::string>>& judge_ids) {
  std::vector<std::pair<std::string, SlatePair>> order;
  std::map<std::pair<std::string, SlatePair>, std::vector<DuelRecord>> groups;
  for (const auto& r : records) {
    if (judge_ids && !judge_ids->contains(r.duel.judge_id)) continue;
    if (r.duel.is_self_duel()) continue;
    auto key = std::pair{r.duel.user_id, unordered_pair(r.duel.first, r.duel.second)};
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second.push_back(r);
  }
  std::vector<AggregatedOutcome> out;
  out.reserve(order.size());
  for (const auto& key : order) out.push_back(aggregate(groups.at(key)));
  return out;
}

}  // namespace slatejudge
