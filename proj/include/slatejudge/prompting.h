#pragma once

// Dataset-agnostic prompt rendering. Templates are plain text with {NAME}
// placeholders; the same variables switch the domain (movies, news, music)
// without touching the instruction text.
//
// Placeholder names:
//   PLATFORM_NAME, DOMAIN_NOUN, RATING_MIN, RATING_MAX, EXPLAIN_LIMIT,
//   CRITERIA_POPULARITY, CRITERIA_DIVERSITY, LIST_1_TAG, LIST_2_TAG,
//   VERDICT_TAG                       -- supplied by the run configuration
//   HISTORY, LIST_1, LIST_2           -- computed per duel

#include <cstddef>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "slatejudge/core.h"

namespace slatejudge {

enum class TemplateFamily { kStandardChat, kChatMl, kInst };

std::string_view to_string(TemplateFamily family);
// Accepts "standard_chat", "chatml", "inst". Throws InvalidArgument.
TemplateFamily family_from_string(std::string_view name);

enum class PromptKind { kDuel, kRating };

using Placeholders = std::map<std::string, std::string>;

// Every name of the placeholder schema.
const std::vector<std::string>& schema_placeholders();
// The subset that must come from configuration.
const std::vector<std::string>& configured_placeholders();
// Fills LIST_1_TAG, LIST_2_TAG, VERDICT_TAG and EXPLAIN_LIMIT when absent.
Placeholders with_placeholder_defaults(Placeholders values);
// Configured placeholders missing from `values`, in schema order.
std::vector<std::string> missing_placeholders(const Placeholders& values);

struct PromptTemplate {
  TemplateFamily family = TemplateFamily::kStandardChat;
  PromptKind kind = PromptKind::kDuel;
  std::string body;
  std::set<std::string> required_placeholders;

  // Extracts the placeholder set from `body`. Duel templates must reference
  // VERDICT_TAG, LIST_1_TAG and LIST_2_TAG; rating templates VERDICT_TAG and
  // LIST_1_TAG. Throws InvalidTemplate otherwise.
  static PromptTemplate make(TemplateFamily family, PromptKind kind,
                             std::string body);
};

PromptTemplate default_duel_template(TemplateFamily family);
PromptTemplate default_rating_template(TemplateFamily family);

// Variant of a duel template that also offers verdict 0 ("equally good").
// Used for self-duels under the tie-allowed irreflexivity strategy.
PromptTemplate with_tie_option(const PromptTemplate& duel_template);

struct RenderedPrompt {
  std::string text;
  std::string verdict_tag;
  std::string digest;  // SHA-256 of text
};

struct RenderOptions {
  std::size_t history_limit = 20;
};

// Names of {NAME} tokens in order of first appearance.
std::vector<std::string> find_placeholders(std::string_view body);

// Single pass over `body`; substituted values are not rescanned. Throws
// MissingPlaceholder naming the first absent key.
std::string substitute(std::string_view body, const Placeholders& values);

// True if any schema placeholder token survives in `text`.
bool has_unsubstituted_placeholder(std::string_view text);

// Most recent `limit` history entries, oldest first, one per line.
std::string format_history(const UserRecord& user, const Catalog& catalog,
                           const Placeholders& placeholders, std::size_t limit);

// Numbered item lines in slate order.
std::string format_slate(const Slate& slate, const Catalog& catalog);

// Slates are rendered exactly in the given positions. Throws
// MissingPlaceholder or UnknownItem.
RenderedPrompt render_duel_prompt(const PromptTemplate& tmpl,
                                  const Placeholders& placeholders,
                                  const UserRecord& user, const Slate& first,
                                  const Slate& second, const Catalog& catalog,
                                  const RenderOptions& options = {});

RenderedPrompt render_rating_prompt(const PromptTemplate& tmpl,
                                    const Placeholders& placeholders,
                                    const UserRecord& user, const Slate& slate,
                                    const Catalog& catalog,
                                    const RenderOptions& options = {});

struct FamilyPattern {
  std::string pattern;  // case-insensitive substring of the model id
  TemplateFamily family;
};

std::vector<FamilyPattern> default_family_patterns();

struct FamilyChoice {
  TemplateFamily family;
  bool fallback = false;  // no pattern matched
};

// First matching pattern wins; unmatched ids fall back to the standard chat
// family and log a warning.
FamilyChoice family_for_model(std::string_view model_id,
                              std::span<const FamilyPattern> patterns);

}  // namespace slatejudge
