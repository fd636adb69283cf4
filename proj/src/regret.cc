#include "slatejudge/regret.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <nlohmann/json.hpp>
#include <numeric>

#include "http_client.h"
#include "slatejudge/errors.h"
#include "slatejudge/hashing.h"

namespace slatejudge {
namespace {

double norm(const std::vector<double>& v) {
  return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
}

std::vector<double> average_ranks(std::span<const double> xs) {
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(xs.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && xs[order[j + 1]] == xs[order[i]]) ++j;
    const double r = (static_cast<double>(i + j) / 2.0) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = r;
    i = j + 1;
  }
  return ranks;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace

RegretReport empirical_regret(std::span<const UserRecord> users,
                              std::span<const AggregatedOutcome> outcomes,
                              TieScoring tie_scoring) {
  if (users.empty()) throw InvalidArgument("regret needs at least one user");
  std::map<std::pair<std::string, SlatePair>, const AggregatedOutcome*> lookup;
  for (const auto& o : outcomes) lookup[{o.user_id, {o.slate_a, o.slate_b}}] = &o;

  RegretReport report;
  double total = 0.0;
  for (const auto& user : users) {
    const auto& slates = user.slates;
    double sum = 0.0;
    for (std::size_t i = 0; i < slates.size(); ++i) {
      for (std::size_t j = i + 1; j < slates.size(); ++j) {
        const SlatePair pair = unordered_pair(slates[i].slate_id, slates[j].slate_id);
        auto it = lookup.find({user.user_id, pair});
        if (it == lookup.end()) {
          throw MissingOutcome("no outcome for user '" + user.user_id + "', pair {" +
                               pair.first + ", " + pair.second + "}");
        }
        const AggregatedOutcome& o = *it->second;
        const double ua = user.utility(pair.first);
        const double ub = user.utility(pair.second);
        double f = 0.0;
        if (o.is_tie() && tie_scoring == TieScoring::kExpected) {
          f = (ua + ub) / 2.0;
        } else {
          f = o.preferred() == pair.first ? ua : ub;
        }
        PairTerm term{user.user_id, pair.first, pair.second, u_star(ua, ub), f};
        // Both orders (L1, L2) and (L2, L1) share this outcome.
        sum += 2.0 * term.loss();
        report.pair_terms.push_back(std::move(term));
      }
    }
    const double n = static_cast<double>(slates.size());
    const double r = slates.empty() ? 0.0 : sum / (n * n);
    report.per_user[user.user_id] = r;
    total += r;
  }
  report.aggregate = total / static_cast<double>(users.size());
  report.random_baseline = random_baseline_regret(users);
  return report;
}

double random_baseline_regret(const UserRecord& user) {
  const auto& slates = user.slates;
  if (slates.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < slates.size(); ++i) {
    for (std::size_t j = 0; j < slates.size(); ++j) {
      sum += std::abs(user.utility(slates[i].slate_id) - user.utility(slates[j].slate_id)) / 2.0;
    }
  }
  const double n = static_cast<double>(slates.size());
  return sum / (n * n);
}

double random_baseline_regret(std::span<const UserRecord> users) {
  if (users.empty()) return 0.0;
  double total = 0.0;
  for (const auto& u : users) total += random_baseline_regret(u);
  return total / static_cast<double>(users.size());
}

HashingEmbedder::HashingEmbedder(std::size_t dimension) : dimension_(dimension) {
  if (dimension == 0) throw InvalidArgument("embedding dimension must be positive");
}

std::string HashingEmbedder::describe() const {
  return "hashing(d=" + std::to_string(dimension_) + ")";
}

EmbeddingVector HashingEmbedder::embed(const Item& item) const {
  if (item.title.empty()) throw EmptyText("item '" + item.item_id + "' has no title");
  EmbeddingVector v{std::vector<double>(dimension_, 0.0)};
  const std::string text = item.title + " " + item.category;
  std::string token;
  std::size_t tokens = 0;
  auto flush = [&] {
    if (token.empty()) return;
    ++tokens;
    const uint64_t h = fnv1a64(token);
    v.values[h % dimension_] += (h >> 63) != 0 ? -1.0 : 1.0;
    token.clear();
  };
  for (char c : text) {
    const auto uc = static_cast<unsigned char>(c);
    if (std::isalnum(uc) || uc >= 0x80) {
      token.push_back(static_cast<char>(std::tolower(uc)));
    } else {
      flush();
    }
  }
  flush();
  if (tokens == 0) throw EmptyText("item '" + item.item_id + "' has no word tokens");
  const double n = norm(v.values);
  if (n == 0.0) {
    // Every token cancelled out; fall back to the bucket of the whole text.
    v.values[fnv1a64(text) % dimension_] = 1.0;
    return v;
  }
  for (double& x : v.values) x /= n;
  return v;
}

RemoteEmbedder::RemoteEmbedder(EmbeddingEndpoint endpoint) : endpoint_(std::move(endpoint)) {
  if (endpoint_.base_url.empty() || endpoint_.model_name.empty()) {
    throw InvalidArgument("embedding endpoint needs base_url and model");
  }
}

EmbeddingVector RemoteEmbedder::embed(const Item& item) const {
  if (item.title.empty()) throw EmptyText("item '" + item.item_id + "' has no title");
  internal::PostOptions options;
  options.timeout = endpoint_.timeout;
  options.bearer_token = internal::bearer_from_env(endpoint_.api_key_env_name);
  const nlohmann::json body = {{"model", endpoint_.model_name},
                               {"input", item.title + " (" + item.category + ")"}};
  std::string error;
  auto reply = internal::post_json(endpoint_.base_url, "/v1/embeddings", body, options, &error);
  if (!reply) throw TransportError("embeddings: " + error);
  if (reply->status == 401 || reply->status == 403) {
    throw AuthError("embeddings: server rejected credentials");
  }
  if (reply->status != 200) {
    throw TransportError("embeddings: HTTP " + std::to_string(reply->status));
  }
  EmbeddingVector v;
  try {
    v.values = nlohmann::json::parse(reply->body)
                   .at("data")
                   .at(0)
                   .at("embedding")
                   .get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw DegenerateEmbedding(std::string("embeddings: malformed reply: ") + e.what());
  }
  if (v.values.empty() ||
      !std::all_of(v.values.begin(), v.values.end(), [](double x) { return std::isfinite(x); })) {
    throw DegenerateEmbedding("embeddings: empty or non-finite vector for '" + item.item_id + "'");
  }
  return v;
}

EmbeddingVector CachingEmbedder::embed(const Item& item) const {
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = memo_.find(item.item_id);
    if (it != memo_.end()) return it->second;
  }
  EmbeddingVector v = inner_.embed(item);
  std::lock_guard<std::mutex> lock(mu_);
  return memo_.emplace(item.item_id, std::move(v)).first->second;
}

double slate_similarity(const Slate& a, const Slate& b, const Catalog& catalog,
                        const Embedder& embedder) {
  auto mean = [&](const Slate& s) {
    if (s.item_ids.empty()) throw InvalidArgument("slate '" + s.slate_id + "' is empty");
    std::vector<double> m;
    for (const auto& id : s.item_ids) {
      const EmbeddingVector e = embedder.embed(catalog.at(id));
      if (m.empty()) m.assign(e.values.size(), 0.0);
      if (e.values.size() != m.size()) {
        throw DegenerateEmbedding("embedding dimensions differ within a run");
      }
      for (std::size_t i = 0; i < m.size(); ++i) m[i] += e.values[i];
    }
    for (double& x : m) x /= static_cast<double>(s.item_ids.size());
    return m;
  };
  const auto ma = mean(a);
  const auto mb = mean(b);
  if (ma.size() != mb.size()) throw DegenerateEmbedding("embedding dimensions differ within a run");
  const double na = norm(ma);
  const double nb = norm(mb);
  if (na == 0.0 || nb == 0.0) {
    throw DegenerateEmbedding("zero mean embedding for slate '" +
                              (na == 0.0 ? a.slate_id : b.slate_id) + "'");
  }
  const double dot = std::inner_product(ma.begin(), ma.end(), mb.begin(), 0.0);
  return std::clamp(dot / (na * nb), -1.0, 1.0);
}

std::vector<double> pair_similarities(std::span<const UserRecord> users,
                                      const Catalog& catalog, const Embedder& embedder) {
  std::vector<double> out;
  for (const auto& u : users) {
    for (std::size_t i = 0; i < u.slates.size(); ++i) {
      for (std::size_t j = i + 1; j < u.slates.size(); ++j) {
        out.push_back(slate_similarity(u.slates[i], u.slates[j], catalog, embedder));
      }
    }
  }
  return out;
}

Correlation correlate(std::span<const std::pair<double, double>> points) {
  if (points.size() < 3) throw InvalidArgument("correlation needs at least 3 points");
  std::vector<double> x, y;
  for (const auto& [a, b] : points) {
    x.push_back(a);
    y.push_back(b);
  }
  auto constant = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [&](double t) { return t == v.front(); });
  };
  if (constant(x) || constant(y)) throw DegenerateVariance("a series is constant");
  return {pearson(x, y), pearson(average_ranks(x), average_ranks(y))};
}

}  // namespace slatejudge
