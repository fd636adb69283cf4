#include "slatejudge/config.h"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "slatejudge/errors.h"
#include "slatejudge/hashing.h"

namespace slatejudge {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

const json* find_key(const json& obj, std::string_view key) {
  auto it = obj.find(std::string(key));
  return it == obj.end() || it->is_null() ? nullptr : &*it;
}

template <typename T>
T get_or(const json& obj, std::string_view key, T fallback, std::string_view where) {
  const json* v = find_key(obj, key);
  if (v == nullptr) return fallback;
  try {
    return v->get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string(where) + ": '" + std::string(key) + "' has the wrong type");
  }
}

std::string required(const json& obj, std::string_view key, std::string_view where) {
  const json* v = find_key(obj, key);
  if (v == nullptr || !v->is_string() || v->get<std::string>().empty()) {
    throw ConfigError(std::string(where) + ": missing string '" + std::string(key) + "'");
  }
  return v->get<std::string>();
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

std::string placeholder_text(const json& v, const std::string& name) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number()) {
    std::ostringstream out;
    out << v.get<double>();
    return out.str();
  }
  throw ConfigError("placeholders: '" + name + "' must be a string or number");
}

std::optional<double> parse_number(const std::string& text) {
  double value = 0.0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return value;
}

SyntheticJudgeSpec parse_synthetic(const json& obj, uint64_t seed, const std::string& where) {
  SyntheticJudgeSpec spec;
  try {
    spec.kind = synthetic_kind_from_string(required(obj, "kind", where));
  } catch (const InvalidArgument& e) {
    throw ConfigError(where + ": " + e.what());
  }
  if (find_key(obj, "beta")) spec.beta = get_or<double>(obj, "beta", 0, where);
  if (find_key(obj, "position_bias")) {
    spec.position_bias = get_or<double>(obj, "position_bias", 0, where);
  }
  spec.seed = get_or<uint64_t>(obj, "seed", seed, where);
  try {
    spec.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return spec;
}

JudgeEndpoint parse_endpoint(const json& obj, const std::string& id, const std::string& where) {
  JudgeEndpoint e;
  e.judge_id = id;
  e.base_url = required(obj, "base_url", where);
  e.model_name = required(obj, "model", where);
  e.api_key_env_name = get_or<std::string>(obj, "api_key_env", "", where);
  e.temperature = get_or<double>(obj, "temperature", e.temperature, where);
  e.max_tokens = get_or<int>(obj, "max_tokens", e.max_tokens, where);
  e.timeout = std::chrono::milliseconds(
      static_cast<long long>(get_or<double>(obj, "timeout_s", 30.0, where) * 1000.0));
  e.retry_limit = get_or<int>(obj, "retry_limit", e.retry_limit, where);
  e.retry_backoff = std::chrono::milliseconds(
      get_or<long long>(obj, "retry_backoff_ms", e.retry_backoff.count(), where));
  try {
    e.validate();
  } catch (const InvalidArgument& ex) {
    throw ConfigError(where + ": " + ex.what());
  }
  return e;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

}  // namespace

std::vector<std::string> RunConfig::judge_ids() const {
  std::vector<std::string> ids;
  for (const auto& j : ensemble) ids.push_back(j.id);
  return ids;
}

std::optional<RatingScale> RunConfig::rating_scale() const {
  auto lo = placeholders.find("RATING_MIN");
  auto hi = placeholders.find("RATING_MAX");
  if (lo == placeholders.end() || hi == placeholders.end()) return std::nullopt;
  auto a = parse_number(lo->second);
  auto b = parse_number(hi->second);
  if (!a || !b || !(*b > *a)) return std::nullopt;
  return RatingScale{*a, *b};
}

std::string RunConfig::digest() const {
  json effective = source;
  effective["seed"] = seed;
  effective["concurrency"] = nullptr;  // does not affect results
  return sha256_hex(effective.dump());
}

SyntheticJudgeSpec parse_synthetic_shorthand(std::string_view text, uint64_t seed) {
  const auto colon = text.find(':');
  const std::string kind(text.substr(0, colon));
  json obj = {{"kind", kind}, {"seed", seed}};
  if (colon != std::string_view::npos) {
    auto value = parse_number(std::string(text.substr(colon + 1)));
    if (!value) throw ConfigError("judge '" + std::string(text) + "': bad parameter");
    if (kind == "noisy_oracle") {
      obj["beta"] = *value;
    } else if (kind == "positional") {
      obj["position_bias"] = *value;
    } else {
      throw ConfigError("judge '" + std::string(text) + "' takes no parameter");
    }
  }
  return parse_synthetic(obj, seed, "judge '" + std::string(text) + "'");
}

RunConfig parse_run_config(const json& doc, const fs::path& base_dir) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig c;
  c.source = doc;

  const json* dataset = find_key(doc, "dataset");
  if (dataset == nullptr || !dataset->is_object()) throw ConfigError("missing object 'dataset'");
  c.catalog_path = resolve(base_dir, required(*dataset, "catalog", "dataset"));
  c.users_path = resolve(base_dir, required(*dataset, "users", "dataset"));
  try {
    c.task = task_kind_from_string(get_or<std::string>(*dataset, "task", "set_selection", "dataset"));
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("dataset: ") + e.what());
  }

  Placeholders values;
  if (const json* p = find_key(doc, "placeholders")) {
    if (!p->is_object()) throw ConfigError("'placeholders' must be an object");
    for (const auto& [name, v] : p->items()) values[name] = placeholder_text(v, name);
  }
  c.placeholders = with_placeholder_defaults(std::move(values));

  c.seed = get_or<uint64_t>(doc, "seed", 0, "config");
  c.history_limit = get_or<std::size_t>(doc, "history_limit", c.history_limit, "config");
  c.samples_per_order = get_or<int>(doc, "samples_per_order", 1, "config");
  if (c.samples_per_order < 1) throw ConfigError("'samples_per_order' must be >= 1");
  c.ratings = get_or<bool>(doc, "ratings", true, "config");
  c.concurrency = get_or<std::size_t>(doc, "concurrency", 1, "config");
  if (c.concurrency == 0) throw ConfigError("'concurrency' must be >= 1");
  try {
    c.tie_scoring =
        tie_scoring_from_string(get_or<std::string>(doc, "tie_scoring", "deterministic", "config"));
    c.irreflexivity = irreflexivity_from_string(
        get_or<std::string>(doc, "irreflexivity", "position_flip", "config"));
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  if (find_key(doc, "cache_dir")) {
    c.cache_dir = resolve(base_dir, get_or<std::string>(doc, "cache_dir", "", "config"));
  }
  c.output_dir = resolve(base_dir, get_or<std::string>(doc, "output_dir", "out", "config"));

  if (const json* patterns = find_key(doc, "family_patterns")) {
    if (!patterns->is_array()) throw ConfigError("'family_patterns' must be an array");
    c.family_patterns.clear();
    for (const auto& p : *patterns) {
      try {
        c.family_patterns.push_back({required(p, "pattern", "family_patterns"),
                                     family_from_string(required(p, "family", "family_patterns"))});
      } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("family_patterns: ") + e.what());
      }
    }
  }

  if (const json* templates = find_key(doc, "templates")) {
    for (const auto& [kind_name, kind] :
         {std::pair{"duel", PromptKind::kDuel}, std::pair{"rating", PromptKind::kRating}}) {
      const json* by_family = find_key(*templates, kind_name);
      if (by_family == nullptr) continue;
      for (const auto& [family_name, file] : by_family->items()) {
        const std::string where = std::string("templates.") + kind_name + "." + family_name;
        try {
          const TemplateFamily family = family_from_string(family_name);
          auto t = PromptTemplate::make(family, kind,
                                        read_text(resolve(base_dir, file.get<std::string>())));
          auto& target = kind == PromptKind::kDuel ? c.prompts.duel : c.prompts.rating;
          target.insert_or_assign(family, std::move(t));
        } catch (const Error& e) {
          throw ConfigError(where + ": " + e.what());
        } catch (const json::exception&) {
          throw ConfigError(where + ": expected a file path");
        }
      }
    }
  }

  if (const json* e = find_key(doc, "embedder")) {
    const std::string kind = get_or<std::string>(*e, "kind", "hashing", "embedder");
    if (kind == "hashing") {
      c.embedder.dimension = get_or<std::size_t>(*e, "dimension", 256, "embedder");
      if (c.embedder.dimension == 0) throw ConfigError("embedder: 'dimension' must be positive");
    } else if (kind == "remote") {
      c.embedder.kind = EmbedderConfig::Kind::kRemote;
      c.embedder.endpoint.base_url = required(*e, "base_url", "embedder");
      c.embedder.endpoint.model_name = required(*e, "model", "embedder");
      c.embedder.endpoint.api_key_env_name = get_or<std::string>(*e, "api_key_env", "", "embedder");
      c.embedder.endpoint.timeout = std::chrono::milliseconds(
          static_cast<long long>(get_or<double>(*e, "timeout_s", 30.0, "embedder") * 1000.0));
    } else {
      throw ConfigError("embedder: unknown kind '" + kind + "'");
    }
  }

  const json* ensemble = find_key(doc, "ensemble");
  if (ensemble == nullptr || !ensemble->is_array()) throw ConfigError("missing array 'ensemble'");
  std::set<std::string> ids;
  for (std::size_t i = 0; i < ensemble->size(); ++i) {
    const json& entry = (*ensemble)[i];
    const std::string where = "ensemble[" + std::to_string(i) + "]";
    if (!entry.is_object()) throw ConfigError(where + " must be an object");
    JudgeConfig j;
    j.id = required(entry, "id", where);
    if (j.id == "ensemble") throw ConfigError(where + ": the id 'ensemble' is reserved");
    if (!ids.insert(j.id).second) throw ConfigError(where + ": duplicate id '" + j.id + "'");
    const json* syn = find_key(entry, "synthetic");
    const json* ep = find_key(entry, "endpoint");
    if ((syn == nullptr) == (ep == nullptr)) {
      throw ConfigError(where + ": needs exactly one of 'synthetic' or 'endpoint'");
    }
    if (syn != nullptr) {
      j.explicit_seed = syn->is_object() && find_key(*syn, "seed") != nullptr;
      j.synthetic = syn->is_string() ? parse_synthetic_shorthand(syn->get<std::string>(), c.seed)
                                     : parse_synthetic(*syn, c.seed, where + ".synthetic");
    } else {
      j.endpoint = parse_endpoint(*ep, j.id, where + ".endpoint");
    }
    if (const json* f = find_key(entry, "family")) {
      try {
        j.family = family_from_string(f->get<std::string>());
      } catch (const std::exception& e) {
        throw ConfigError(where + ": " + e.what());
      }
    }
    c.ensemble.push_back(std::move(j));
  }
  if (c.ensemble.empty()) throw ConfigError("'ensemble' is empty");
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_run_config(doc, path.parent_path());
}

DatasetBundle load_bundle(const RunConfig& config) {
  DatasetBundle bundle;
  bundle.task_kind = config.task;
  bundle.placeholders = config.placeholders;
  bundle.scale = config.rating_scale();
  bundle.catalog = load_catalog(config.catalog_path);
  bundle.users = load_users(config.users_path, bundle.catalog, config.task, bundle.scale).users;
  return bundle;
}

std::vector<std::unique_ptr<Judge>> make_judges(const RunConfig& config) {
  std::vector<std::unique_ptr<Judge>> judges;
  for (const auto& j : config.ensemble) {
    if (j.synthetic) {
      SyntheticJudgeSpec spec = *j.synthetic;
      if (!j.explicit_seed) spec.seed = config.seed;
      judges.push_back(std::make_unique<SyntheticJudge>(j.id, spec));
    } else {
      const TemplateFamily family =
          j.family ? *j.family
                   : family_for_model(j.endpoint->model_name, config.family_patterns).family;
      judges.push_back(std::make_unique<RemoteJudge>(*j.endpoint, family));
    }
  }
  return judges;
}

std::unique_ptr<Embedder> make_embedder(const EmbedderConfig& config) {
  if (config.kind == EmbedderConfig::Kind::kRemote) {
    return std::make_unique<RemoteEmbedder>(config.endpoint);
  }
  return std::make_unique<HashingEmbedder>(config.dimension);
}

}  // namespace slatejudge
