#include "slatejudge/records.h"

#include <fstream>

#include "slatejudge/errors.h"

namespace slatejudge {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

json optional_string(const std::optional<std::string>& s) { return s ? json(*s) : json(); }

std::optional<std::string> read_optional_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<std::string>();
}

json verdict_json(const Verdict& v) {
  return {{"choice", to_string(v.choice)},
          {"abstain_reason", optional_string(v.abstain_reason)},
          {"raw_response_digest", v.raw_response_digest}};
}

Verdict verdict_from(const json& j) {
  Verdict v;
  v.choice = choice_from_string(j.at("choice").get<std::string>());
  v.abstain_reason = read_optional_string(j, "abstain_reason");
  v.raw_response_digest = j.value("raw_response_digest", "");
  return v;
}

template <typename T, typename Fn>
std::vector<T> read_file(const fs::path& path, bool required, Fn&& parse) {
  std::vector<T> out;
  if (!required && !fs::exists(path)) return out;
  int line = 0;
  for (const auto& j : read_jsonl(path)) {
    ++line;
    try {
      out.push_back(parse(j));
    } catch (const std::exception& e) {
      throw ParseError(path.string(), line, e.what());
    }
  }
  return out;
}

}  // namespace

json to_json(const DuelRecord& r) {
  json j = {{"user_id", r.duel.user_id},
            {"first", r.duel.first},
            {"second", r.duel.second},
            {"judge_id", r.duel.judge_id},
            {"sample_index", r.duel.sample_index}};
  j.update(verdict_json(r.verdict));
  return j;
}

json to_json(const SelfDuelRecord& r) {
  json samples = json::array();
  for (const auto& v : r.samples) samples.push_back(verdict_json(v));
  return {{"user_id", r.user_id},
          {"slate_id", r.slate_id},
          {"judge_id", r.judge_id},
          {"samples", std::move(samples)}};
}

json to_json(const RatingRecord& r) {
  return {{"user_id", r.user_id},
          {"slate_id", r.slate_id},
          {"judge_id", r.judge_id},
          {"rating", r.rating.rating ? json(*r.rating.rating) : json()},
          {"abstain_reason", optional_string(r.rating.abstain_reason)},
          {"raw_response_digest", r.rating.raw_response_digest}};
}

json to_json(const AggregatedOutcome& o) {
  return {{"user_id", o.user_id},
          {"slate_a", o.slate_a},
          {"slate_b", o.slate_b},
          {"winner", optional_string(o.winner)},
          {"votes", o.votes},
          {"abstentions", o.abstentions},
          {"tie_resolved_to", optional_string(o.tie_resolved_to)}};
}

DuelRecord duel_record_from_json(const json& j) {
  DuelRecord r;
  r.duel = {j.at("user_id").get<std::string>(), j.at("first").get<std::string>(),
            j.at("second").get<std::string>(), j.at("judge_id").get<std::string>(),
            j.at("sample_index").get<int>()};
  r.verdict = verdict_from(j);
  return r;
}

SelfDuelRecord self_duel_record_from_json(const json& j) {
  SelfDuelRecord r{j.at("user_id").get<std::string>(), j.at("slate_id").get<std::string>(),
                   j.at("judge_id").get<std::string>(), {}};
  for (const auto& s : j.at("samples")) r.samples.push_back(verdict_from(s));
  return r;
}

RatingRecord rating_record_from_json(const json& j) {
  RatingRecord r{j.at("user_id").get<std::string>(), j.at("slate_id").get<std::string>(),
                 j.at("judge_id").get<std::string>(), {}};
  if (j.at("rating").is_number_integer()) r.rating.rating = j["rating"].get<int>();
  r.rating.abstain_reason = read_optional_string(j, "abstain_reason");
  r.rating.raw_response_digest = j.value("raw_response_digest", "");
  return r;
}

AggregatedOutcome outcome_from_json(const json& j) {
  AggregatedOutcome o;
  o.user_id = j.at("user_id").get<std::string>();
  o.slate_a = j.at("slate_a").get<std::string>();
  o.slate_b = j.at("slate_b").get<std::string>();
  o.winner = read_optional_string(j, "winner");
  o.votes = j.at("votes").get<std::map<std::string, int>>();
  o.abstentions = j.at("abstentions").get<int>();
  o.tie_resolved_to = read_optional_string(j, "tie_resolved_to");
  if (!(o.slate_a < o.slate_b)) throw InvalidArgument("slate_a must sort before slate_b");
  if (o.winner.has_value() == o.tie_resolved_to.has_value()) {
    throw InvalidArgument("exactly one of winner and tie_resolved_to must be set");
  }
  return o;
}

void write_jsonl(const fs::path& path, std::span<const json> lines) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    for (const auto& j : lines) out << j.dump() << '\n';
    if (!out.flush()) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move " + tmp.string() + " into place: " + ec.message());
}

std::vector<json> read_jsonl(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::vector<json> out;
  std::string text;
  int line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(json::parse(text));
    } catch (const json::parse_error& e) {
      throw ParseError(path.string(), line, e.what());
    }
  }
  return out;
}

void write_run_records(const fs::path& dir, const ExecutionResult& result,
                       std::span<const AggregatedOutcome> outcomes) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  auto dump = [&](const char* name, const auto& records) {
    std::vector<json> lines;
    lines.reserve(records.size());
    for (const auto& r : records) lines.push_back(to_json(r));
    write_jsonl(dir / name, lines);
  };
  dump("verdicts.jsonl", result.duels);
  dump("self_duels.jsonl", result.self_duels);
  dump("ratings.jsonl", result.ratings);
  dump("outcomes.jsonl", outcomes);
}

ExecutionResult read_run_records(const fs::path& dir) {
  ExecutionResult r;
  r.duels = read_file<DuelRecord>(dir / "verdicts.jsonl", true, duel_record_from_json);
  r.self_duels =
      read_file<SelfDuelRecord>(dir / "self_duels.jsonl", false, self_duel_record_from_json);
  r.ratings = read_file<RatingRecord>(dir / "ratings.jsonl", false, rating_record_from_json);
  return r;
}

std::vector<AggregatedOutcome> read_outcomes(const fs::path& dir) {
  const fs::path path = dir / "outcomes.jsonl";
  if (!fs::exists(path)) throw MissingOutcome("no outcomes at " + path.string());
  return read_file<AggregatedOutcome>(path, true, outcome_from_json);
}

}  // namespace slatejudge
