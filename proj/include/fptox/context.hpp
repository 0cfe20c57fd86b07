#pragma once

#include <algorithm>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "fptox/context_kind.hpp"
#include "fptox/corpus.hpp"
#include "fptox/error.hpp"
#include "fptox/lexicon.hpp"

namespace fptox::context {

enum class Direction { forward, backward, bidirectional };

inline const char* to_string(Direction d) {
    switch (d) {
        case Direction::forward: return "forward";
        case Direction::backward: return "backward";
        case Direction::bidirectional: return "bidirectional";
    }
    return "?";
}

inline Direction direction_from_string(const std::string& s) {
    if (s == "forward") return Direction::forward;
    if (s == "backward") return Direction::backward;
    if (s == "bidirectional") return Direction::bidirectional;
    throw Error("unknown context rule direction: '" + s + "'");
}

// A trigger phrase that marks mentions within `window` tokens on the rule's
// side(s) unless a terminator token (or a semicolon) lies between them.
struct ContextRule {
    std::string surface;                // trigger as written
    std::vector<std::string> trigger;   // normalized trigger tokens
    ContextKind kind = ContextKind::negated;
    Direction direction = Direction::forward;
    std::size_t window = 6;
    std::set<std::string> terminators;
    bool semicolon_breaks = true;
};

struct TriggerEvidence {
    std::string trigger;  // surface form of the rule trigger
    std::size_t begin = 0;
    std::size_t end = 0;
    ContextKind kind = ContextKind::negated;
};

struct ContextAssignment {
    lexicon::Mention mention;  // modifiers filled in
    std::set<ContextKind> applied;
    std::vector<TriggerEvidence> evidence;
};

inline const std::set<std::string>& default_terminators() {
    static const std::set<std::string> terms = {"but", "however", "although", "though", "except"};
    return terms;
}

inline ContextRule make_rule(const std::string& trigger, ContextKind kind, Direction direction,
                             std::size_t window) {
    if (window < 1) throw Error("context rule '" + trigger + "': window must be >= 1");
    ContextRule r;
    r.surface = trigger;
    r.trigger = corpus::tokenize(trigger);
    if (r.trigger.empty()) throw Error("context rule has an empty trigger: '" + trigger + "'");
    r.kind = kind;
    r.direction = direction;
    r.window = window;
    r.terminators = default_terminators();
    return r;
}

// Default rule table, ConText-style: forward scope of six tokens, backward
// scope of three, closed by contrast conjunctions or a semicolon.
inline std::vector<ContextRule> default_context_rules() {
    constexpr std::size_t kFwd = 6;
    constexpr std::size_t kBack = 3;
    using K = ContextKind;
    using D = Direction;
    std::vector<ContextRule> rules;

    auto add = [&](const char* t, K k, D d, std::size_t w) {
        rules.push_back(make_rule(t, k, d, w));
    };

    // negation
    for (const char* t : {"no", "not", "without", "denies", "denied", "denying",
                          "no evidence of", "no sign of", "no signs of", "negative for",
                          "neg for", "absence of", "free of", "rules out"}) {
        add(t, K::negated, D::forward, kFwd);
    }
    add("ruled out", K::negated, D::bidirectional, kFwd);
    add("absent", K::negated, D::backward, kBack);
    add("not present", K::negated, D::backward, kBack);

    // uncertainty
    for (const char* t : {"possible", "possibly", "probable", "likely", "suspect",
                          "suspicious for", "concern for", "may have", "cannot exclude",
                          "cannot rule out", "rule out", "r/o"}) {
        add(t, K::uncertain, D::forward, kFwd);
    }
    add("suspected", K::uncertain, D::bidirectional, kFwd);
    add("questionable", K::uncertain, D::bidirectional, kFwd);
    add("unlikely", K::uncertain, D::backward, kBack);

    // history
    for (const char* t : {"history of", "h/o", "hx of", "past medical history of", "prior",
                          "previous", "past", "status post", "s/p"}) {
        add(t, K::historical, D::forward, kFwd);
    }
    add("resolved", K::historical, D::backward, kBack);
    add("in the past", K::historical, D::backward, kBack);
    add("years ago", K::historical, D::backward, kBack);

    // family experiencer
    for (const char* t : {"mother", "father", "brother", "sister", "sibling", "grandmother",
                          "grandfather", "aunt", "uncle", "maternal", "paternal",
                          "family history of", "family history", "fh of"}) {
        add(t, K::family_experiencer, D::forward, kFwd);
    }
    return rules;
}

inline std::vector<ContextRule> load_context_rules(
    const std::optional<std::string>& path = std::nullopt) {
    if (!path) return default_context_rules();
    std::ifstream in(*path);
    if (!in) throw Error("cannot open context rule file: " + *path);
    nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.is_array()) {
        throw Error("context rule file must be a JSON list: " + *path);
    }
    std::vector<ContextRule> rules;
    for (auto& item : doc) {
        if (!item.is_object() || !item.contains("trigger") || !item["trigger"].is_string()) {
            throw Error(*path + ": every rule needs a string 'trigger'");
        }
        std::string trigger = item["trigger"].get<std::string>();
        ContextKind kind = item.contains("kind")
                               ? context_kind_from_string(item["kind"].get<std::string>())
                               : ContextKind::negated;
        Direction dir = item.contains("direction")
                            ? direction_from_string(item["direction"].get<std::string>())
                            : Direction::forward;
        if (item.contains("window") && item["window"].is_number_integer() &&
            item["window"].get<std::int64_t>() < 1) {
            throw Error(*path + ": rule '" + trigger + "': window must be >= 1");
        }
        std::size_t window = item.contains("window") ? item["window"].get<std::size_t>()
                                                     : (dir == Direction::backward ? 3 : 6);
        ContextRule r = make_rule(trigger, kind, dir, window);
        if (item.contains("terminators")) {
            if (!item["terminators"].is_array()) {
                throw Error(*path + ": rule '" + trigger + "': terminators must be a list");
            }
            r.terminators.clear();
            r.semicolon_breaks = false;
            for (auto& t : item["terminators"]) {
                std::string term = t.get<std::string>();
                if (term == ";") {
                    r.semicolon_breaks = true;
                    continue;
                }
                for (auto& tok : corpus::tokenize(term)) r.terminators.insert(tok);
            }
        }
        rules.push_back(std::move(r));
    }
    return rules;
}

namespace detail {

// All occurrences of the trigger token sequence, as [begin, end) token spans.
inline std::vector<std::pair<std::size_t, std::size_t>> trigger_spans(
    const std::vector<corpus::Token>& tokens, const std::vector<std::string>& trigger) {
    std::vector<std::pair<std::size_t, std::size_t>> spans;
    if (trigger.empty() || trigger.size() > tokens.size()) return spans;
    for (std::size_t i = 0; i + trigger.size() <= tokens.size(); ++i) {
        bool ok = true;
        for (std::size_t k = 0; k < trigger.size(); ++k) {
            if (tokens[i + k].norm != trigger[k]) {
                ok = false;
                break;
            }
        }
        if (ok) spans.push_back({i, i + trigger.size()});
    }
    return spans;
}

// True when a terminator token, or (if enabled) a semicolon character, lies
// strictly between token index ranges [gap_begin, gap_end).
inline bool scope_broken(const ContextRule& rule, const std::vector<corpus::Token>& tokens,
                         const std::string& text, std::size_t gap_begin, std::size_t gap_end) {
    for (std::size_t i = gap_begin; i < gap_end; ++i) {
        if (rule.terminators.count(tokens[i].norm)) return true;
    }
    if (rule.semicolon_breaks && !text.empty()) {
        // the tokenizer drops punctuation, so semicolons are found by a
        // character scan between the two spans
        std::size_t from = gap_begin > 0 ? tokens[gap_begin - 1].end : 0;
        std::size_t to = gap_end < tokens.size() ? tokens[gap_end].begin : text.size();
        for (std::size_t c = from; c < to && c < text.size(); ++c) {
            if (text[c] == ';') return true;
        }
    }
    return false;
}

}  // namespace detail

// Applies every rule to every mention; modifiers accumulate as a set union,
// so the outcome does not depend on rule order.
inline std::vector<ContextAssignment> apply_context(const std::vector<lexicon::Mention>& mentions,
                                                    const std::vector<corpus::Token>& tokens,
                                                    const std::string& sentence_text,
                                                    const std::vector<ContextRule>& rules) {
    std::vector<ContextAssignment> out;
    out.reserve(mentions.size());

    struct Hit {
        const ContextRule* rule;
        std::size_t begin, end;
    };
    std::vector<Hit> hits;
    for (auto& rule : rules) {
        for (auto& [b, e] : detail::trigger_spans(tokens, rule.trigger)) {
            hits.push_back({&rule, b, e});
        }
    }

    for (auto& mention : mentions) {
        ContextAssignment a;
        a.mention = mention;
        for (auto& hit : hits) {
            const ContextRule& rule = *hit.rule;
            bool applies = false;
            if ((rule.direction == Direction::forward ||
                 rule.direction == Direction::bidirectional) &&
                hit.end <= mention.begin) {
                std::size_t gap = mention.begin - hit.end;
                if (gap < rule.window &&
                    !detail::scope_broken(rule, tokens, sentence_text, hit.end, mention.begin)) {
                    applies = true;
                }
            }
            if (!applies &&
                (rule.direction == Direction::backward ||
                 rule.direction == Direction::bidirectional) &&
                mention.end <= hit.begin) {
                std::size_t gap = hit.begin - mention.end;
                if (gap < rule.window &&
                    !detail::scope_broken(rule, tokens, sentence_text, mention.end, hit.begin)) {
                    applies = true;
                }
            }
            if (applies) {
                a.applied.insert(rule.kind);
                a.evidence.push_back({rule.surface, hit.begin, hit.end, rule.kind});
            }
        }
        a.mention.modifiers = a.applied;
        out.push_back(std::move(a));
    }
    return out;
}

inline std::vector<ContextAssignment> apply_context(const std::vector<lexicon::Mention>& mentions,
                                                    const corpus::TokenizedSentence& sentence,
                                                    const std::vector<ContextRule>& rules) {
    return apply_context(mentions, sentence.tokens, sentence.text, rules);
}

// Plain-token form: no character data, so the semicolon scan is skipped.
inline std::vector<ContextAssignment> apply_context(const std::vector<lexicon::Mention>& mentions,
                                                    const std::vector<std::string>& tokens,
                                                    const std::vector<ContextRule>& rules) {
    std::vector<corpus::Token> full;
    full.reserve(tokens.size());
    for (auto& t : tokens) full.push_back({t, t, 0, 0});
    return apply_context(mentions, full, std::string(), rules);
}

}  // namespace fptox::context
