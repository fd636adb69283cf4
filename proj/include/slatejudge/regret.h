#pragma once

// Empirical regret of an articulated preference relation against the
// ground-truth utilities, its random-judge expectation, the slate-similarity
// difficulty proxy and regret-vs-coherence correlations.

#include <chrono>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "slatejudge/core.h"
#include "slatejudge/duel_engine.h"

namespace slatejudge {

struct PairTerm {
  std::string user_id;
  std::string slate_a;
  std::string slate_b;
  double u_star = 0.0;
  double f_star = 0.0;
  double loss() const { return u_star - f_star; }
};

struct RegretReport {
  std::map<std::string, double> per_user;
  double aggregate = 0.0;
  double random_baseline = 0.0;
  std::vector<PairTerm> pair_terms;  // one per unordered pair
};

// Per user: sum of u* - f* over all ordered pairs of evaluated slates, the
// diagonal included (its terms are zero), divided by the squared slate count.
// Each unordered pair's outcome serves both of its orders. The aggregate is
// the mean over users. Throws MissingOutcome, or InvalidArgument for an empty
// user list.
RegretReport empirical_regret(std::span<const UserRecord> users,
                              std::span<const AggregatedOutcome> outcomes,
                              TieScoring tie_scoring = TieScoring::kDeterministic);

// Expected regret of a judge choosing uniformly at random, in closed form.
double random_baseline_regret(const UserRecord& user);
double random_baseline_regret(std::span<const UserRecord> users);

struct EmbeddingVector {
  std::vector<double> values;
};

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::string describe() const = 0;
  // Throws EmptyText for an item without a title.
  virtual EmbeddingVector embed(const Item& item) const = 0;
};

// Feature hashing: lowercase alphanumeric tokens of title and category, each
// hashed into one of `dimension` buckets with a hash-derived sign, then L2
// normalized.
class HashingEmbedder final : public Embedder {
 public:
  explicit HashingEmbedder(std::size_t dimension = 256);
  std::string describe() const override;
  EmbeddingVector embed(const Item& item) const override;

 private:
  std::size_t dimension_;
};

struct EmbeddingEndpoint {
  std::string base_url;  // /v1/embeddings is appended
  std::string model_name;
  std::string api_key_env_name;
  std::chrono::milliseconds timeout{30000};
};

// OpenAI-compatible embeddings endpoint over "title (category)". Throws
// TransportError, AuthError or DegenerateEmbedding for a malformed reply.
class RemoteEmbedder final : public Embedder {
 public:
  explicit RemoteEmbedder(EmbeddingEndpoint endpoint);
  std::string describe() const override { return endpoint_.model_name; }
  EmbeddingVector embed(const Item& item) const override;

 private:
  EmbeddingEndpoint endpoint_;
};

// Memoizes another embedder by item_id. Thread-safe.
class CachingEmbedder final : public Embedder {
 public:
  explicit CachingEmbedder(const Embedder& inner) : inner_(inner) {}
  std::string describe() const override { return inner_.describe(); }
  EmbeddingVector embed(const Item& item) const override;

 private:
  const Embedder& inner_;
  mutable std::mutex mu_;
  mutable std::unordered_map<std::string, EmbeddingVector> memo_;
};

// Cosine of the mean item embeddings of two slates. Throws
// DegenerateEmbedding when a mean vector is zero.
double slate_similarity(const Slate& a, const Slate& b, const Catalog& catalog,
                        const Embedder& embedder);

// Similarity of every unordered pair of evaluated slates, user by user.
std::vector<double> pair_similarities(std::span<const UserRecord> users,
                                      const Catalog& catalog, const Embedder& embedder);

struct Correlation {
  double pearson = 0.0;
  double spearman = 0.0;  // ties get average ranks
};

// Throws InvalidArgument below 3 points and DegenerateVariance when either
// coordinate is constant.
Correlation correlate(std::span<const std::pair<double, double>> points);

}  // namespace slatejudge
