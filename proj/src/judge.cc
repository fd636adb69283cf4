#include "slatejudge/judge.h"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <nlohmann/json.hpp>
#include <thread>

#include "http_client.h"
#include "slatejudge/errors.h"
#include "slatejudge/hashing.h"
#include "slatejudge/random.h"

namespace slatejudge {
namespace {

using nlohmann::json;

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

bool istarts_with(std::string_view s, std::string_view prefix) {
  return s.size() >= prefix.size() && iequals(s.substr(0, prefix.size()), prefix);
}

std::string_view trim_left(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
  return s.substr(i);
}

// Content of a leading <tag>...</tag>, or the abstain reason.
struct TagContent {
  std::string_view value;
  std::string_view failure;  // empty on success
};

TagContent leading_tag(std::string_view response, std::string_view tag) {
  std::string_view rest = trim_left(response);
  if (rest.empty()) return {{}, "empty-response"};
  const std::string open = "<" + std::string(tag) + ">";
  if (!istarts_with(rest, open)) {
    // "<VERD" at the very end of the reply is a truncated opening tag.
    if (rest.size() < open.size() && istarts_with(open, rest)) {
      return {{}, "truncated"};
    }
    return {{}, "tag-not-first"};
  }
  rest.remove_prefix(open.size());
  const auto lt = rest.find('<');
  if (lt == std::string_view::npos) return {{}, "truncated"};
  const std::string_view value = rest.substr(0, lt);
  rest.remove_prefix(lt);
  const std::string close = "</" + std::string(tag) + ">";
  if (!istarts_with(rest, close)) {
    if (rest.size() < close.size() && istarts_with(close, rest)) {
      return {{}, "truncated"};
    }
    return {{}, "tag-mismatch"};
  }
  return {value, {}};
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::string stream_key(const SyntheticJudgeSpec& spec, std::string_view judge_id,
                       std::initializer_list<std::string_view> parts) {
  std::string key = "synthetic/" + std::to_string(spec.seed) + "/";
  key += judge_id;
  for (auto p : parts) {
    key.push_back('\x1f');
    key += p;
  }
  return key;
}

int integer_floor_of_scale(const RatingScale& s) {
  return static_cast<int>(std::ceil(s.rating_min));
}
int integer_ceil_of_scale(const RatingScale& s) {
  return static_cast<int>(std::floor(s.rating_max));
}

json spec_json(const SyntheticJudgeSpec& spec) {
  json j = {{"kind", to_string(spec.kind)}, {"seed", spec.seed}};
  if (spec.beta) j["beta"] = *spec.beta;
  if (spec.position_bias) j["position_bias"] = *spec.position_bias;
  return j;
}

// Sends the prompt until `accept` likes the reply content or retries run out.
// Returns the content of the last reply.
std::string complete_with_retry(const JudgeEndpoint& endpoint,
                                const std::string& prompt_text,
                                const std::function<bool(const std::string&)>& accept) {
  internal::PostOptions options;
  options.timeout = endpoint.timeout;
  options.bearer_token = internal::bearer_from_env(endpoint.api_key_env_name);

  const json body = {
      {"model", endpoint.model_name},
      {"messages", json::array({{{"role", "user"}, {"content", prompt_text}}})},
      {"temperature", endpoint.temperature},
      {"max_tokens", endpoint.max_tokens},
  };

  std::string last_content;
  std::string transport_failure;
  auto backoff = endpoint.retry_backoff;
  for (int attempt = 0; attempt <= endpoint.retry_limit; ++attempt) {
    if (attempt > 0) {
      if (backoff.count() > 0) std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    std::string error;
    auto reply = internal::post_json(endpoint.base_url, "/v1/chat/completions",
                                     body, options, &error);
    if (!reply) {
      transport_failure = "transport: " + error;
      continue;
    }
    if (reply->status == 401 || reply->status == 403) {
      throw AuthError(endpoint.judge_id + ": server rejected credentials (HTTP " +
                      std::to_string(reply->status) + ")");
    }
    if (reply->status == 429 || reply->status >= 500) {
      transport_failure = "transport: HTTP " + std::to_string(reply->status);
      continue;
    }
    if (reply->status != 200) {
      throw TransportError(endpoint.judge_id + ": HTTP " +
                           std::to_string(reply->status) + ": " + reply->body);
    }
    transport_failure.clear();
    // A body that is not a chat completion counts as an unparseable reply.
    last_content = reply->body;
    try {
      const json parsed = json::parse(reply->body);
      last_content = parsed.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception&) {
    }
    if (accept(last_content)) return last_content;
    spdlog::debug("{}: unparseable reply on attempt {}", endpoint.judge_id, attempt + 1);
  }
  if (!transport_failure.empty()) {
    throw TransportError(endpoint.judge_id + ": " + transport_failure + " after " +
                         std::to_string(endpoint.retry_limit + 1) + " attempt(s)");
  }
  return last_content;
}

}  // namespace

void JudgeEndpoint::validate() const {
  if (judge_id.empty()) throw InvalidArgument("endpoint needs a judge_id");
  if (base_url.empty()) throw InvalidArgument(judge_id + ": endpoint needs a base_url");
  if (model_name.empty()) throw InvalidArgument(judge_id + ": endpoint needs a model name");
  if (!(temperature >= 0.0)) throw InvalidArgument(judge_id + ": temperature must be >= 0");
  if (max_tokens <= 0) throw InvalidArgument(judge_id + ": max_tokens must be positive");
  if (retry_limit < 0) throw InvalidArgument(judge_id + ": retry_limit must be >= 0");
  if (timeout.count() <= 0) throw InvalidArgument(judge_id + ": timeout must be positive");
}

std::string_view to_string(SyntheticKind kind) {
  switch (kind) {
    case SyntheticKind::kOracle: return "oracle";
    case SyntheticKind::kNoisyOracle: return "noisy_oracle";
    case SyntheticKind::kRandom: return "random";
    case SyntheticKind::kPositional: return "positional";
  }
  return "oracle";
}

SyntheticKind synthetic_kind_from_string(std::string_view name) {
  if (iequals(name, "oracle")) return SyntheticKind::kOracle;
  if (iequals(name, "noisy_oracle") || iequals(name, "noisy")) return SyntheticKind::kNoisyOracle;
  if (iequals(name, "random")) return SyntheticKind::kRandom;
  if (iequals(name, "positional")) return SyntheticKind::kPositional;
  throw InvalidArgument("unknown synthetic judge kind '" + std::string(name) + "'");
}

void SyntheticJudgeSpec::validate() const {
  const bool noisy = kind == SyntheticKind::kNoisyOracle;
  const bool positional = kind == SyntheticKind::kPositional;
  if (noisy != beta.has_value()) {
    throw InvalidArgument("beta is required for, and only for, noisy_oracle judges");
  }
  if (positional != position_bias.has_value()) {
    throw InvalidArgument(
        "position_bias is required for, and only for, positional judges");
  }
  if (beta && !(*beta > 0.0 && std::isfinite(*beta))) {
    throw InvalidArgument("beta must be a positive finite number");
  }
  if (position_bias && !(*position_bias >= 0.0 && *position_bias <= 1.0)) {
    throw InvalidArgument("position_bias must lie in [0, 1]");
  }
}

Verdict parse_verdict(std::string_view response, std::string_view verdict_tag,
                      bool allow_tie) {
  const std::string digest = sha256_hex(response);
  const TagContent tag = leading_tag(response, verdict_tag);
  if (!tag.failure.empty()) return Verdict::abstain(std::string(tag.failure), digest);
  if (tag.value == "1") return Verdict::pick(Choice::kFirst, digest);
  if (tag.value == "2") return Verdict::pick(Choice::kSecond, digest);
  if (allow_tie && tag.value == "0") return Verdict::pick(Choice::kTie, digest);
  return Verdict::abstain("invalid-value", digest);
}

RatingVerdict parse_rating(std::string_view response, std::string_view verdict_tag,
                           const RatingScale& scale) {
  RatingVerdict out;
  out.raw_response_digest = sha256_hex(response);
  const TagContent tag = leading_tag(response, verdict_tag);
  if (!tag.failure.empty()) {
    out.abstain_reason = std::string(tag.failure);
    return out;
  }
  std::string_view v = tag.value;
  const bool negative = !v.empty() && v.front() == '-';
  if (negative) v.remove_prefix(1);
  if (v.empty() || v.size() > 9 ||
      !std::all_of(v.begin(), v.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    out.abstain_reason = "not-an-integer";
    return out;
  }
  int value = std::stoi(std::string(v));
  if (negative) value = -value;
  if (value < integer_floor_of_scale(scale) || value > integer_ceil_of_scale(scale)) {
    out.abstain_reason = "out-of-range";
    return out;
  }
  out.rating = value;
  return out;
}

JudgeAnswer query_remote(const JudgeEndpoint& endpoint, const RenderedPrompt& prompt,
                         bool allow_tie) {
  std::string raw = complete_with_retry(endpoint, prompt.text, [&](const std::string& c) {
    return !parse_verdict(c, prompt.verdict_tag, allow_tie).abstained();
  });
  Verdict v = parse_verdict(raw, prompt.verdict_tag, allow_tie);
  return {std::move(v), std::move(raw)};
}

RatingAnswer query_remote_rating(const JudgeEndpoint& endpoint,
                                 const RenderedPrompt& prompt,
                                 const RatingScale& scale) {
  std::string raw = complete_with_retry(endpoint, prompt.text, [&](const std::string& c) {
    return !parse_rating(c, prompt.verdict_tag, scale).abstained();
  });
  RatingVerdict r = parse_rating(raw, prompt.verdict_tag, scale);
  return {std::move(r), std::move(raw)};
}

Verdict synthetic_verdict(const SyntheticJudgeSpec& spec,
                          std::pair<double, double> pair_utilities,
                          const DuelSpec& duel, bool allow_tie) {
  const auto [u1, u2] = pair_utilities;
  const KeyedStream stream(stream_key(
      spec, duel.judge_id,
      {duel.user_id, duel.first, duel.second, std::to_string(duel.sample_index)}));
  const double draw = stream.uniform(0);
  const Choice better = u2 > u1 ? Choice::kSecond : Choice::kFirst;
  const Choice worse = better == Choice::kFirst ? Choice::kSecond : Choice::kFirst;

  Choice choice = Choice::kFirst;
  switch (spec.kind) {
    case SyntheticKind::kOracle:
      choice = (allow_tie && u1 == u2) ? Choice::kTie : better;
      break;
    case SyntheticKind::kNoisyOracle:
      choice = draw < sigmoid(spec.beta.value() * std::fabs(u1 - u2)) ? better : worse;
      break;
    case SyntheticKind::kRandom:
      if (allow_tie) {
        choice = draw < 1.0 / 3 ? Choice::kFirst
                 : draw < 2.0 / 3 ? Choice::kSecond
                                  : Choice::kTie;
      } else {
        choice = draw < 0.5 ? Choice::kFirst : Choice::kSecond;
      }
      break;
    case SyntheticKind::kPositional:
      choice = draw < spec.position_bias.value() ? Choice::kFirst : Choice::kSecond;
      break;
  }
  return Verdict::pick(choice, sha256_hex(synthetic_reply(choice, "VERDICT")));
}

int synthetic_rating(const SyntheticJudgeSpec& spec, double utility,
                     const RatingScale& scale, std::string_view user_id,
                     std::string_view slate_id, std::string_view judge_id) {
  const int lo = integer_floor_of_scale(scale);
  const int hi = integer_ceil_of_scale(scale);
  if (hi < lo) throw InvalidArgument("rating scale holds no integer");
  const KeyedStream stream(stream_key(spec, judge_id, {"rating", user_id, slate_id}));
  const double span = scale.rating_max - scale.rating_min;
  auto from_utility = [&](double u) {
    const double r = std::round(scale.rating_min + std::clamp(u, 0.0, 1.0) * span);
    return std::clamp(static_cast<int>(r), lo, hi);
  };
  switch (spec.kind) {
    case SyntheticKind::kOracle:
      return from_utility(utility);
    case SyntheticKind::kNoisyOracle: {
      const double p = std::clamp(stream.uniform(0), 1e-12, 1.0 - 1e-12);
      return from_utility(utility + std::log(p / (1.0 - p)) / spec.beta.value());
    }
    case SyntheticKind::kRandom:
    case SyntheticKind::kPositional: {
      const int n = hi - lo + 1;
      return lo + std::min(n - 1, static_cast<int>(stream.uniform(0) * n));
    }
  }
  return lo;
}

std::string synthetic_reply(Choice choice, std::string_view verdict_tag) {
  const std::string tag(verdict_tag);
  const char* digit = choice == Choice::kFirst    ? "1"
                      : choice == Choice::kSecond ? "2"
                      : choice == Choice::kTie    ? "0"
                                                  : "?";
  return "<" + tag + ">" + digit + "</" + tag + ">";
}

std::string synthetic_reply(int rating, std::string_view verdict_tag) {
  const std::string tag(verdict_tag);
  return "<" + tag + ">" + std::to_string(rating) + "</" + tag + ">";
}

SyntheticJudge::SyntheticJudge(std::string judge_id, SyntheticJudgeSpec spec)
    : id_(std::move(judge_id)), spec_(spec) {
  if (id_.empty()) throw InvalidArgument("synthetic judge needs an id");
  spec_.validate();
}

std::string SyntheticJudge::describe() const {
  std::string out(to_string(spec_.kind));
  if (spec_.beta) out += "(beta=" + json(*spec_.beta).dump() + ")";
  if (spec_.position_bias) out += "(bias=" + json(*spec_.position_bias).dump() + ")";
  return out;
}

std::string SyntheticJudge::duel_cache_key(const DuelRequest& r) const {
  const json key = {"duel",       id_,           spec_json(spec_),
                    r.duel->user_id, r.duel->first, r.duel->second,
                    r.duel->sample_index, r.utilities.first, r.utilities.second,
                    r.allow_tie};
  return sha256_hex(key.dump());
}

std::string SyntheticJudge::rating_cache_key(const RatingRequest& r) const {
  const json key = {"rating", id_, spec_json(spec_), r.user_id, r.slate_id,
                    r.utility, r.scale.rating_min, r.scale.rating_max};
  return sha256_hex(key.dump());
}

JudgeAnswer SyntheticJudge::duel(const DuelRequest& r) const {
  Verdict v = synthetic_verdict(spec_, r.utilities, *r.duel, r.allow_tie);
  return {v, synthetic_reply(v.choice, "VERDICT")};
}

RatingAnswer SyntheticJudge::rate(const RatingRequest& r) const {
  const int rating = synthetic_rating(spec_, r.utility, r.scale, r.user_id, r.slate_id, id_);
  std::string raw = synthetic_reply(rating, "VERDICT");
  return {RatingVerdict{rating, std::nullopt, sha256_hex(raw)}, std::move(raw)};
}

RemoteJudge::RemoteJudge(JudgeEndpoint endpoint, TemplateFamily family)
    : endpoint_(std::move(endpoint)), family_(family) {
  endpoint_.validate();
}

std::string RemoteJudge::duel_cache_key(const DuelRequest& r) const {
  const json key = {endpoint_.base_url, endpoint_.model_name, r.prompt->digest,
                    endpoint_.temperature, endpoint_.max_tokens, r.duel->sample_index};
  return sha256_hex(key.dump());
}

std::string RemoteJudge::rating_cache_key(const RatingRequest& r) const {
  const json key = {endpoint_.base_url, endpoint_.model_name, r.prompt->digest,
                    endpoint_.temperature, endpoint_.max_tokens, 0};
  return sha256_hex(key.dump());
}

JudgeAnswer RemoteJudge::duel(const DuelRequest& r) const {
  if (r.prompt == nullptr) throw InvalidArgument("remote judges need a rendered prompt");
  return query_remote(endpoint_, *r.prompt, r.allow_tie);
}

RatingAnswer RemoteJudge::rate(const RatingRequest& r) const {
  if (r.prompt == nullptr) throw InvalidArgument("remote judges need a rendered prompt");
  return query_remote_rating(endpoint_, *r.prompt, r.scale);
}

}  // namespace slatejudge
