// Built-in template bodies, one duel and one rating template per family.
#include "slatejudge/prompting.h"

#include "slatejudge/errors.h"

namespace slatejudge {
namespace {

constexpr std::string_view kStandardDuel =
    R"(You are an **impartial evaluator of two {DOMAIN_NOUN}-recommendation lists**.

Each entry in the customer history shows the **{DOMAIN_NOUN} title** and the
**satisfaction score** the customer gave ({RATING_MIN} = bad, {RATING_MAX} = excellent).

<USER_HISTORY>
{HISTORY}
</USER_HISTORY>

Two candidate lists are shown **in random order**.

<{LIST_1_TAG}> {LIST_1}
<{LIST_2_TAG}> {LIST_2}

Before comparing the two lists, ask yourself:
“Do I recognise each {DOMAIN_NOUN} as something that plausibly exists in {PLATFORM_NAME},
or does it *sound* like a plausible {DOMAIN_NOUN}?”

If a title looks fabricated or nonsensical, treat it as a low-quality recommendation.
**Do not imagine what a made-up {DOMAIN_NOUN} might be.**

**Evaluation criteria (titles only):**
1. Recognition / authenticity — favour real or plausible items.
2. Popularity & quality — {CRITERIA_POPULARITY}.
3. Variety & balance — avoid near-duplicates or trivial patterns.
4. {CRITERIA_DIVERSITY} — healthy spread when relevant.
5. Contextual alignment — match the user’s history.
6. Expected satisfaction — infer liking from {RATING_MIN}–{RATING_MAX} history.

Do not reward fake or unrecognisable titles. Use only your internal knowledge.

Output **exactly** one of the following tags and nothing else:

<{VERDICT_TAG}>1</{VERDICT_TAG}>  ← if {LIST_1_TAG} is better
<{VERDICT_TAG}>2</{VERDICT_TAG}>  ← if {LIST_2_TAG} is better

Then add **one short paragraph (≤ {EXPLAIN_LIMIT} words)** explaining why.
The <{VERDICT_TAG}> tag must be the **first** element in your reply.
)";

constexpr std::string_view kChatMlDuel =
    R"(<|begin_of_text|><|start_header_id|>system<|end_header_id|>
You are an impartial evaluator of two {DOMAIN_NOUN}-recommendation lists.
Follow the instructions strictly. Do not browse the web or invent facts.
<|eot_id|>
<|start_header_id|>user<|end_header_id|>

Each entry in the customer history shows the {DOMAIN_NOUN} title and
the satisfaction score ({RATING_MIN} = bad, {RATING_MAX} = excellent).

<USER_HISTORY>
{HISTORY}
</USER_HISTORY>

Two candidate lists are shown in random order.

<{LIST_1_TAG}>
{LIST_1}
</{LIST_1_TAG}>

<{LIST_2_TAG}>
{LIST_2}
</{LIST_2_TAG}>

Evaluation criteria (titles only):
1) Recognition / authenticity — favour real or plausible items.
2) Popularity & quality — {CRITERIA_POPULARITY}.
3) Variety & balance — avoid trivial repetition.
4) {CRITERIA_DIVERSITY} — healthy spread when relevant.
5) Contextual alignment — match the user's history.
6) Expected satisfaction — infer likely liking given {RATING_MIN}–{RATING_MAX} history.

Do not reward fake or unrecognisable titles. Use only your internal knowledge.

Output exactly one of the following and nothing else as the first element:
<{VERDICT_TAG}>1</{VERDICT_TAG}>  ← if {LIST_1_TAG} is better
<{VERDICT_TAG}>2</{VERDICT_TAG}>  ← if {LIST_2_TAG} is better

Then, on the next line, add ONE short paragraph (≤ {EXPLAIN_LIMIT} words) explaining why.
The <{VERDICT_TAG}> tag must be the first element in your reply.
<|eot_id|><|start_header_id|>assistant<|end_header_id|>
)";

constexpr std::string_view kInstDuel =
    R"(<s>[INST]<<SYS>>
You are an impartial evaluator of two {DOMAIN_NOUN}-recommendation lists.
Follow the instructions strictly. Do not browse the web or invent facts.
Only return the requested output format.
<</SYS>>

Each entry in the customer history shows the {DOMAIN_NOUN} title and
the satisfaction score given ({RATING_MIN} = bad, {RATING_MAX} = excellent).

<USER_HISTORY>
{HISTORY}
</USER_HISTORY>

Two candidate lists are shown in random order.

<{LIST_1_TAG}>
{LIST_1}
</{LIST_1_TAG}>

<{LIST_2_TAG}>
{LIST_2}
</{LIST_2_TAG}>

Evaluation criteria (titles only):
1) Recognition / authenticity — favour real or plausible items.
2) Popularity & quality — {CRITERIA_POPULARITY}.
3) Variety & balance — avoid near-duplicates.
4) {CRITERIA_DIVERSITY} — healthy spread when relevant.
5) Contextual alignment — match the user's history.
6) Expected satisfaction — infer liking from history.

Do not reward fake or unrecognisable titles. Use only your internal knowledge.

OUTPUT FORMAT (MANDATORY):
First line: <{VERDICT_TAG}>1</{VERDICT_TAG}> or <{VERDICT_TAG}>2</{VERDICT_TAG}>
Second line: ONE short paragraph (≤ {EXPLAIN_LIMIT} words) explaining why.
The <{VERDICT_TAG}> tag must be the first element in your reply.
[/INST]
)";

constexpr std::string_view kRatingCore =
    R"(Each entry in the customer history shows the {DOMAIN_NOUN} title and
the satisfaction score the customer gave ({RATING_MIN} = bad, {RATING_MAX} = excellent).

<USER_HISTORY>
{HISTORY}
</USER_HISTORY>

<{LIST_1_TAG}>
{LIST_1}
</{LIST_1_TAG}>

Rate how satisfied this customer would be with the whole {LIST_1_TAG} list,
taken in the order shown, as a recommendation from {PLATFORM_NAME}.
Consider popularity & quality ({CRITERIA_POPULARITY}), {CRITERIA_DIVERSITY},
and how well the list matches the history.

Output exactly one tag holding a single integer from {RATING_MIN} to {RATING_MAX}, for example:
<{VERDICT_TAG}>{RATING_MAX}</{VERDICT_TAG}>

Then add one short paragraph (≤ {EXPLAIN_LIMIT} words) explaining why.
The <{VERDICT_TAG}> tag must be the first element in your reply.
)";

std::string rating_body(TemplateFamily family) {
  const std::string core(kRatingCore);
  switch (family) {
    case TemplateFamily::kStandardChat:
      return "You are an impartial evaluator of a {DOMAIN_NOUN}-recommendation "
             "list.\n\n" +
             core;
    case TemplateFamily::kChatMl:
      return "<|begin_of_text|><|start_header_id|>system<|end_header_id|>\n"
             "You are an impartial evaluator of a {DOMAIN_NOUN}-recommendation "
             "list.\nFollow the instructions strictly. Do not browse the web "
             "or invent facts.\n<|eot_id|>\n"
             "<|start_header_id|>user<|end_header_id|>\n\n" +
             core + "<|eot_id|><|start_header_id|>assistant<|end_header_id|>\n";
    case TemplateFamily::kInst:
      return "<s>[INST]<<SYS>>\nYou are an impartial evaluator of a "
             "{DOMAIN_NOUN}-recommendation list.\nFollow the instructions "
             "strictly. Do not browse the web or invent facts.\nOnly return "
             "the requested output format.\n<</SYS>>\n\n" +
             core + "[/INST]\n";
  }
  throw InvalidArgument("unknown template family");
}

}  // namespace

PromptTemplate default_duel_template(TemplateFamily family) {
  switch (family) {
    case TemplateFamily::kStandardChat:
      return PromptTemplate::make(family, PromptKind::kDuel,
                                  std::string(kStandardDuel));
    case TemplateFamily::kChatMl:
      return PromptTemplate::make(family, PromptKind::kDuel,
                                  std::string(kChatMlDuel));
    case TemplateFamily::kInst:
      return PromptTemplate::make(family, PromptKind::kDuel,
                                  std::string(kInstDuel));
  }
  throw InvalidArgument("unknown template family");
}

PromptTemplate default_rating_template(TemplateFamily family) {
  return PromptTemplate::make(family, PromptKind::kRating, rating_body(family));
}

}  // namespace slatejudge
