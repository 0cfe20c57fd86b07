#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "fptox/context.hpp"
#include "fptox/corpus.hpp"
#include "fptox/error.hpp"
#include "fptox/lexicon.hpp"

namespace fptox::rules {

// Which modifiers disqualify a mention from producing a positive label.
// Historical/uncertain mentions count as positive unless configured otherwise.
struct SuppressionPolicy {
    std::set<context::ContextKind> suppressed = {
        context::ContextKind::negated,
        context::ContextKind::family_experiencer,
    };
    std::map<std::string, std::set<context::ContextKind>> per_category;

    const std::set<context::ContextKind>& for_category(const std::string& category) const {
        auto it = per_category.find(category);
        return it == per_category.end() ? suppressed : it->second;
    }
};

struct RuleDecision {
    std::string note_id;
    std::optional<std::size_t> sentence_index;
    std::string category;
    bool label = false;
    std::vector<context::ContextAssignment> evidence;  // all mentions of the category
};

namespace detail {

inline bool counts_as_positive(const context::ContextAssignment& a,
                               const std::set<context::ContextKind>& suppressed) {
    for (auto k : a.applied) {
        if (suppressed.count(k)) return false;
    }
    return true;
}

}  // namespace detail

inline RuleDecision classify_sentence_rule(const lexicon::CompiledMatcher& matcher,
                                           const std::vector<context::ContextRule>& context_rules,
                                           const std::string& category,
                                           const corpus::TokenizedSentence& sentence,
                                           const SuppressionPolicy& policy = {}) {
    RuleDecision d;
    d.note_id = sentence.note_id;
    d.sentence_index = sentence.index;
    d.category = category;

    std::vector<lexicon::Mention> of_category;
    for (auto& m : matcher.find_mentions(sentence.tokens)) {
        if (m.category == category) of_category.push_back(std::move(m));
    }
    d.evidence = context::apply_context(of_category, sentence, context_rules);

    const auto& suppressed = policy.for_category(category);
    for (auto& a : d.evidence) {
        if (detail::counts_as_positive(a, suppressed)) {
            d.label = true;
            break;
        }
    }
    return d;
}

// Note-level decision per category: OR over the note's sentence decisions,
// with all sentence evidence concatenated.
inline std::vector<RuleDecision> extract_note(const lexicon::CompiledMatcher& matcher,
                                              const std::vector<context::ContextRule>& context_rules,
                                              const corpus::ClinicalNote& note,
                                              const std::vector<std::string>& categories,
                                              const SuppressionPolicy& policy = {}) {
    auto sentences = corpus::analyze_note(note);
    std::vector<RuleDecision> out;
    for (auto& category : categories) {
        RuleDecision d;
        d.note_id = note.note_id;
        d.category = category;
        for (auto& sentence : sentences) {
            RuleDecision sd = classify_sentence_rule(matcher, context_rules, category, sentence,
                                                     policy);
            d.label = d.label || sd.label;
            d.evidence.insert(d.evidence.end(), sd.evidence.begin(), sd.evidence.end());
        }
        out.push_back(std::move(d));
    }
    return out;
}

inline std::vector<RuleDecision> extract_note_sentences(
    const lexicon::CompiledMatcher& matcher,
    const std::vector<context::ContextRule>& context_rules, const corpus::ClinicalNote& note,
    const std::vector<std::string>& categories, const SuppressionPolicy& policy = {}) {
    auto sentences = corpus::analyze_note(note);
    std::vector<RuleDecision> out;
    for (auto& sentence : sentences) {
        for (auto& category : categories) {
            out.push_back(classify_sentence_rule(matcher, context_rules, category, sentence,
                                                 policy));
        }
    }
    return out;
}

inline nlohmann::json evidence_to_json(const std::vector<context::ContextAssignment>& evidence) {
    nlohmann::json arr = nlohmann::json::array();
    for (auto& a : evidence) {
        nlohmann::json triggers = nlohmann::json::array();
        for (auto& t : a.evidence) {
            triggers.push_back({{"trigger", t.trigger},
                                {"span", {t.begin, t.end}},
                                {"kind", context::to_string(t.kind)}});
        }
        nlohmann::json modifiers = nlohmann::json::array();
        for (auto k : a.applied) modifiers.push_back(context::to_string(k));
        arr.push_back({{"keyword", a.mention.keyword},
                       {"span", {a.mention.begin, a.mention.end}},
                       {"modifiers", modifiers},
                       {"triggers", triggers}});
    }
    return arr;
}

inline corpus::Prediction to_prediction(const RuleDecision& d) {
    corpus::Prediction p;
    p.note_id = d.note_id;
    p.sentence_index = d.sentence_index;
    p.category = d.category;
    p.label = d.label;
    p.evidence = evidence_to_json(d.evidence);
    return p;
}

}  // namespace fptox::rules
