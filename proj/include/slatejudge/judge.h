#pragma once

// Judges answer duels ("which of these two slates would this user prefer?")
// and rating queries ("how would this user rate this slate?"). Remote judges
// call an OpenAI-compatible chat-completions endpoint; synthetic judges answer
// from the ground-truth utilities so every downstream metric has a known
// expected value.

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "slatejudge/core.h"
#include "slatejudge/prompting.h"
#include "slatejudge/utility.h"

namespace slatejudge {

struct JudgeEndpoint {
  std::string judge_id;
  std::string base_url;  // e.g. http://localhost:8000; /v1/chat/completions is appended
  std::string model_name;
  std::string api_key_env_name;  // empty: send no Authorization header
  double temperature = 0.0;
  int max_tokens = 256;
  std::chrono::milliseconds timeout{30000};
  int retry_limit = 1;
  std::chrono::milliseconds retry_backoff{250};  // doubled after each retry

  // Throws InvalidArgument.
  void validate() const;
};

enum class SyntheticKind { kOracle, kNoisyOracle, kRandom, kPositional };

std::string_view to_string(SyntheticKind kind);
// Accepts oracle, noisy_oracle, random, positional. Throws InvalidArgument.
SyntheticKind synthetic_kind_from_string(std::string_view name);

struct SyntheticJudgeSpec {
  SyntheticKind kind = SyntheticKind::kOracle;
  std::optional<double> beta;           // NOISY_ORACLE only, > 0
  std::optional<double> position_bias;  // POSITIONAL only, in [0, 1]
  uint64_t seed = 0;

  // Throws InvalidArgument when the optional parameters do not match `kind`.
  void validate() const;
};

// Reads the verdict tag, which must be the first non-whitespace content of the
// reply: <TAG>1</TAG> is FIRST, <TAG>2</TAG> is SECOND, and with `allow_tie`
// <TAG>0</TAG> is TIE. Tag names match case-insensitively. Anything else is
// ABSTAIN with one of the reasons empty-response, tag-not-first,
// invalid-value, truncated or tag-mismatch. Never throws.
Verdict parse_verdict(std::string_view response, std::string_view verdict_tag,
                      bool allow_tie = false);

struct RatingVerdict {
  std::optional<int> rating;
  std::optional<std::string> abstain_reason;  // set iff !rating
  std::string raw_response_digest;

  bool abstained() const { return !rating.has_value(); }
  friend bool operator==(const RatingVerdict&, const RatingVerdict&) = default;
};

// Integer rating inside the leading verdict tag. Values outside the integer
// range of `scale` abstain with reason out-of-range. Never throws.
RatingVerdict parse_rating(std::string_view response,
                           std::string_view verdict_tag,
                           const RatingScale& scale);

struct JudgeAnswer {
  Verdict verdict;
  std::string raw_response;
};

struct RatingAnswer {
  RatingVerdict rating;
  std::string raw_response;
};

// One chat-completion duel query with retries on transport failures and
// unparseable replies. Throws AuthError when the key variable is unset or the
// server rejects the key, and TransportError when the last attempt failed in
// transport.
JudgeAnswer query_remote(const JudgeEndpoint& endpoint,
                         const RenderedPrompt& prompt, bool allow_tie = false);

RatingAnswer query_remote_rating(const JudgeEndpoint& endpoint,
                                 const RenderedPrompt& prompt,
                                 const RatingScale& scale);

// ORACLE picks the higher-utility position (FIRST on exact ties, or TIE when
// offered); NOISY_ORACLE picks it with probability 1 / (1 + exp(-beta * du));
// RANDOM picks uniformly; POSITIONAL picks FIRST with probability
// position_bias. Randomness is keyed by (seed, judge, user, presentation
// order, sample index), so results are reproducible on any platform.
Verdict synthetic_verdict(const SyntheticJudgeSpec& spec,
                          std::pair<double, double> pair_utilities,
                          const DuelSpec& duel, bool allow_tie = false);

// Synthetic rating of a slate with utility `utility`. ORACLE returns
// round(min + u * (max - min)); NOISY_ORACLE perturbs u with logistic noise
// of scale 1 / beta before rounding; RANDOM and POSITIONAL draw uniformly.
int synthetic_rating(const SyntheticJudgeSpec& spec, double utility,
                     const RatingScale& scale, std::string_view user_id,
                     std::string_view slate_id, std::string_view judge_id);

// Reply text a synthetic judge "sends" for a choice or rating.
std::string synthetic_reply(Choice choice, std::string_view verdict_tag);
std::string synthetic_reply(int rating, std::string_view verdict_tag);

struct DuelRequest {
  const DuelSpec* duel = nullptr;
  std::pair<double, double> utilities;  // (first, second)
  const RenderedPrompt* prompt = nullptr;  // set when needs_prompts()
  bool allow_tie = false;
};

struct RatingRequest {
  std::string user_id;
  std::string slate_id;
  double utility = 0.0;
  RatingScale scale;
  const RenderedPrompt* prompt = nullptr;
};

// Uniform interface over remote and synthetic judges. Implementations are
// immutable and safe to call from several threads.
class Judge {
 public:
  virtual ~Judge() = default;

  virtual const std::string& id() const = 0;
  // Human-readable configuration, e.g. the model name.
  virtual std::string describe() const = 0;
  virtual bool needs_prompts() const = 0;
  virtual std::optional<TemplateFamily> template_family() const { return std::nullopt; }

  // Key for the response cache, 64 hex characters.
  virtual std::string duel_cache_key(const DuelRequest& request) const = 0;
  virtual std::string rating_cache_key(const RatingRequest& request) const = 0;

  virtual JudgeAnswer duel(const DuelRequest& request) const = 0;
  virtual RatingAnswer rate(const RatingRequest& request) const = 0;
};

class SyntheticJudge final : public Judge {
 public:
  SyntheticJudge(std::string judge_id, SyntheticJudgeSpec spec);

  const std::string& id() const override { return id_; }
  std::string describe() const override;
  bool needs_prompts() const override { return false; }
  std::string duel_cache_key(const DuelRequest& request) const override;
  std::string rating_cache_key(const RatingRequest& request) const override;
  JudgeAnswer duel(const DuelRequest& request) const override;
  RatingAnswer rate(const RatingRequest& request) const override;

  const SyntheticJudgeSpec& spec() const { return spec_; }

 private:
  std::string id_;
  SyntheticJudgeSpec spec_;
};

class RemoteJudge final : public Judge {
 public:
  RemoteJudge(JudgeEndpoint endpoint, TemplateFamily family);

  const std::string& id() const override { return endpoint_.judge_id; }
  std::string describe() const override { return endpoint_.model_name; }
  bool needs_prompts() const override { return true; }
  std::optional<TemplateFamily> template_family() const override { return family_; }
  std::string duel_cache_key(const DuelRequest& request) const override;
  std::string rating_cache_key(const RatingRequest& request) const override;
  JudgeAnswer duel(const DuelRequest& request) const override;
  RatingAnswer rate(const RatingRequest& request) const override;

  const JudgeEndpoint& endpoint() const { return endpoint_; }

 private:
  JudgeEndpoint endpoint_;
  TemplateFamily family_;
};

}  // namespace slatejudge
