#include "slatejudge/prompting.h"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include "slatejudge/errors.h"
#include "slatejudge/hashing.h"

namespace slatejudge {
namespace {

bool is_name_char(char c) {
  return (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

// Length of the {NAME} token starting at body[pos], or 0.
std::size_t token_length(std::string_view body, std::size_t pos) {
  if (body[pos] != '{' || pos + 1 >= body.size()) return 0;
  if (!(body[pos + 1] >= 'A' && body[pos + 1] <= 'Z')) return 0;
  std::size_t end = pos + 1;
  while (end < body.size() && is_name_char(body[end])) ++end;
  if (end >= body.size() || body[end] != '}') return 0;
  return end - pos + 1;
}

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::string format_rating(double r) {
  if (std::nearbyint(r) == r && std::fabs(r) < 1e15) {
    return std::to_string(static_cast<long long>(r));
  }
  std::ostringstream os;
  os << r;
  return os.str();
}

std::string placeholder_or(const Placeholders& values, const std::string& key,
                           const std::string& fallback) {
  auto it = values.find(key);
  return it == values.end() ? fallback : it->second;
}

void check_required(const PromptTemplate& tmpl, const Placeholders& values) {
  for (const auto& name : tmpl.required_placeholders) {
    if (!values.contains(name)) {
      throw MissingPlaceholder("missing placeholder " + name);
    }
  }
}

RenderedPrompt finish(std::string text, const Placeholders& values) {
  RenderedPrompt out;
  out.verdict_tag = placeholder_or(values, "VERDICT_TAG", "VERDICT");
  out.digest = sha256_hex(text);
  out.text = std::move(text);
  return out;
}

}  // namespace

std::string_view to_string(TemplateFamily family) {
  switch (family) {
    case TemplateFamily::kStandardChat: return "standard_chat";
    case TemplateFamily::kChatMl: return "chatml";
    case TemplateFamily::kInst: return "inst";
  }
  return "standard_chat";
}

TemplateFamily family_from_string(std::string_view name) {
  const std::string n = lowercase(name);
  if (n == "standard_chat" || n == "standard") return TemplateFamily::kStandardChat;
  if (n == "chatml") return TemplateFamily::kChatMl;
  if (n == "inst") return TemplateFamily::kInst;
  throw InvalidArgument("unknown template family '" + std::string(name) + "'");
}

const std::vector<std::string>& schema_placeholders() {
  static const std::vector<std::string> kNames = {
      "PLATFORM_NAME", "DOMAIN_NOUN",   "RATING_MIN",          "RATING_MAX",
      "HISTORY",       "LIST_1",        "LIST_2",              "LIST_1_TAG",
      "LIST_2_TAG",    "VERDICT_TAG",   "EXPLAIN_LIMIT",       "CRITERIA_POPULARITY",
      "CRITERIA_DIVERSITY"};
  return kNames;
}

const std::vector<std::string>& configured_placeholders() {
  static const std::vector<std::string> kNames = [] {
    std::vector<std::string> names;
    for (const auto& n : schema_placeholders()) {
      if (n != "HISTORY" && n != "LIST_1" && n != "LIST_2") names.push_back(n);
    }
    return names;
  }();
  return kNames;
}

Placeholders with_placeholder_defaults(Placeholders values) {
  values.try_emplace("LIST_1_TAG", "LIST_A");
  values.try_emplace("LIST_2_TAG", "LIST_B");
  values.try_emplace("VERDICT_TAG", "VERDICT");
  values.try_emplace("EXPLAIN_LIMIT", "50");
  return values;
}

std::vector<std::string> missing_placeholders(const Placeholders& values) {
  std::vector<std::string> missing;
  for (const auto& n : configured_placeholders()) {
    if (!values.contains(n)) missing.push_back(n);
  }
  return missing;
}

PromptTemplate PromptTemplate::make(TemplateFamily family, PromptKind kind,
                                    std::string body) {
  PromptTemplate t;
  t.family = family;
  t.kind = kind;
  for (auto& name : find_placeholders(body)) {
    t.required_placeholders.insert(std::move(name));
  }
  std::vector<std::string> needed = {"VERDICT_TAG", "LIST_1_TAG", "LIST_1"};
  if (kind == PromptKind::kDuel) {
    needed.push_back("LIST_2_TAG");
    needed.push_back("LIST_2");
  }
  for (const auto& n : needed) {
    if (!t.required_placeholders.contains(n)) {
      throw InvalidTemplate("template lacks the {" + n + "} placeholder");
    }
  }
  t.body = std::move(body);
  return t;
}

PromptTemplate with_tie_option(const PromptTemplate& duel_template) {
  if (duel_template.kind != PromptKind::kDuel) {
    throw InvalidTemplate("tie option applies to duel templates only");
  }
  const std::string marker = ">2</{VERDICT_TAG}>";
  const auto at = duel_template.body.find(marker);
  if (at == std::string::npos) {
    throw InvalidTemplate("duel template has no verdict-2 option line");
  }
  auto eol = duel_template.body.find('\n', at);
  if (eol == std::string::npos) eol = duel_template.body.size();
  std::string body = duel_template.body;
  body.insert(eol,
              "\n<{VERDICT_TAG}>0</{VERDICT_TAG}>  ← if both lists are equally "
              "good");
  return PromptTemplate::make(duel_template.family, duel_template.kind,
                              std::move(body));
}

std::vector<std::string> find_placeholders(std::string_view body) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < body.size(); ++i) {
    if (std::size_t len = token_length(body, i)) {
      std::string name(body.substr(i + 1, len - 2));
      if (std::find(names.begin(), names.end(), name) == names.end()) {
        names.push_back(std::move(name));
      }
      i += len - 1;
    }
  }
  return names;
}

std::string substitute(std::string_view body, const Placeholders& values) {
  std::string out;
  out.reserve(body.size() * 2);
  for (std::size_t i = 0; i < body.size();) {
    if (std::size_t len = token_length(body, i)) {
      const std::string name(body.substr(i + 1, len - 2));
      auto it = values.find(name);
      if (it == values.end()) {
        throw MissingPlaceholder("missing placeholder " + name);
      }
      out += it->second;
      i += len;
    } else {
      out.push_back(body[i++]);
    }
  }
  return out;
}

bool has_unsubstituted_placeholder(std::string_view text) {
  for (const auto& name : schema_placeholders()) {
    if (text.find("{" + name) != std::string_view::npos) return true;
  }
  return false;
}

std::string format_history(const UserRecord& user, const Catalog& catalog,
                           const Placeholders& placeholders,
                           std::size_t limit) {
  const std::size_t n = std::min(limit, user.history.size());
  if (n == 0) return "(no history)";
  const std::string lo = placeholder_or(placeholders, "RATING_MIN", "?");
  const std::string hi = placeholder_or(placeholders, "RATING_MAX", "?");
  std::string out;
  for (std::size_t i = user.history.size() - n; i < user.history.size(); ++i) {
    const auto& entry = user.history[i];
    if (!out.empty()) out.push_back('\n');
    out += "- " + catalog.at(entry.item_id).title + " | score: ";
    out += entry.rating ? format_rating(*entry.rating) + " (" + lo + "-" + hi + ")"
                        : std::string("not rated");
  }
  return out;
}

std::string format_slate(const Slate& slate, const Catalog& catalog) {
  std::string out;
  for (std::size_t i = 0; i < slate.item_ids.size(); ++i) {
    const Item& item = catalog.at(slate.item_ids[i]);
    if (i > 0) out.push_back('\n');
    out += std::to_string(i + 1) + ". " + item.title;
    if (!item.category.empty()) out += " (" + item.category + ")";
    if (item.description && !item.description->empty()) {
      out += " - " + *item.description;
    }
  }
  return out;
}

RenderedPrompt render_duel_prompt(const PromptTemplate& tmpl,
                                  const Placeholders& placeholders,
                                  const UserRecord& user, const Slate& first,
                                  const Slate& second, const Catalog& catalog,
                                  const RenderOptions& options) {
  if (tmpl.kind != PromptKind::kDuel) {
    throw InvalidTemplate("render_duel_prompt needs a duel template");
  }
  Placeholders values = placeholders;
  values["HISTORY"] =
      format_history(user, catalog, placeholders, options.history_limit);
  values["LIST_1"] = format_slate(first, catalog);
  values["LIST_2"] = format_slate(second, catalog);
  check_required(tmpl, values);
  return finish(substitute(tmpl.body, values), values);
}

RenderedPrompt render_rating_prompt(const PromptTemplate& tmpl,
                                    const Placeholders& placeholders,
                                    const UserRecord& user, const Slate& slate,
                                    const Catalog& catalog,
                                    const RenderOptions& options) {
  if (tmpl.kind != PromptKind::kRating) {
    throw InvalidTemplate("render_rating_prompt needs a rating template");
  }
  Placeholders values = placeholders;
  values["HISTORY"] =
      format_history(user, catalog, placeholders, options.history_limit);
  values["LIST_1"] = format_slate(slate, catalog);
  check_required(tmpl, values);
  return finish(substitute(tmpl.body, values), values);
}

std::vector<FamilyPattern> default_family_patterns() {
  return {
      {"llama", TemplateFamily::kChatMl},
      {"ministral", TemplateFamily::kInst},
      {"mistral", TemplateFamily::kInst},
      {"qwen", TemplateFamily::kStandardChat},
      {"gemma", TemplateFamily::kStandardChat},
  };
}

FamilyChoice family_for_model(std::string_view model_id,
                              std::span<const FamilyPattern> patterns) {
  const std::string id = lowercase(model_id);
  for (const auto& p : patterns) {
    if (!p.pattern.empty() && id.find(lowercase(p.pattern)) != std::string::npos) {
      return {p.family, false};
    }
  }
  spdlog::warn("no template family pattern matches model '{}'; using {}",
               model_id, to_string(TemplateFamily::kStandardChat));
  return {TemplateFamily::kStandardChat, true};
}

}  // namespace slatejudge
