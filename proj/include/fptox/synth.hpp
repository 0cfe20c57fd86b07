#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "fptox/corpus.hpp"
#include "fptox/error.hpp"
#include "fptox/lexicon.hpp"
#include "fptox/rng.hpp"

namespace fptox::corpus {

struct SynthResult {
    std::vector<ClinicalNote> notes;
    std::vector<GoldAnnotation> gold;  // note-level and sentence-level rows
};

inline std::map<std::string, double> default_synth_prevalence() {
    return {{"drug_of_interest", 0.35},
            {"arrhythmia", 0.25},
            {"heart_failure", 0.30},
            {"valvular_complications", 0.20},
            {"hfs_therapies", 0.25}};
}

namespace detail {

// Sentence skeletons. Positive variants assert, hedge, or date the finding —
// all of which count as a genuine mention; suppressed variants attribute it
// to negation or a family member and are labeled negative. Static text must
// stay free of lexicon keywords and (for positive variants) scope triggers.
struct SynthTemplates {
    std::vector<std::string> affirmed = {
        "The patient reports {K} since yesterday.",
        "Exam today shows {K} requiring close monitoring.",
    };
    std::string uncertain = "Possible {K} in this setting.";
    std::string historical = "History of {K} in 2015.";
    std::string negated = "No evidence of {K} on exam.";
    std::string family = "Mother has {K} as well.";
    std::vector<std::string> filler = {
        "Vitals stable and unremarkable this visit.",
        "Plan reviewed with the care team.",
        "Medication list reconciled at intake.",
        "Follow-up scheduled in two weeks.",
        "Labs drawn and pending at this time.",
    };
};

inline std::string fill_template(const std::string& tpl, const std::string& keyword) {
    const std::size_t pos = tpl.find("{K}");
    if (pos == std::string::npos) return tpl;
    return tpl.substr(0, pos) + keyword + tpl.substr(pos + 3);
}

// A keyword is usable for generation only when a rendered sentence containing
// it yields mentions of exactly its own category (checked against all
// requested categories), so embedded sentences never leak labels sideways.
inline std::map<std::string, std::vector<std::string>> usable_keywords(
    const lexicon::Lexicon& lex, const std::vector<std::string>& categories) {
    lexicon::Lexicon sub;
    sub.version = lex.version;
    for (auto& c : categories) sub.entries[c] = lex.at(c);
    lexicon::CompiledMatcher matcher(sub);

    std::map<std::string, std::vector<std::string>> out;
    for (auto& c : categories) {
        for (auto& entry : lex.at(c)) {
            const std::string render = fill_template(
                "The patient reports {K} since yesterday.", entry.surface);
            auto mentions = matcher.find_mentions(tokenize_full(render));
            if (mentions.empty()) continue;
            bool clean = true;
            for (auto& m : mentions) {
                if (m.category != c) {
                    clean = false;
                    break;
                }
            }
            if (clean) out[c].push_back(entry.surface);
        }
        if (out[c].empty()) {
            throw Error("synthetic corpus: no usable keywords for category '" + c + "'");
        }
    }
    return out;
}

struct DraftSentence {
    std::string text;
    std::string category;  // empty for filler
    bool label = false;
};

}  // namespace detail

// Deterministic synthetic corpus: per category, round(prevalence * n_notes)
// notes carry one genuinely positive sentence; other notes may carry hard
// negatives (negated or family-attributed keywords). Gold rows are emitted at
// both note and sentence level for every requested category.
inline SynthResult generate_synthetic_corpus(const std::map<std::string, double>& prevalence,
                                             std::size_t n_notes, std::uint64_t seed,
                                             const lexicon::Lexicon& lex =
                                                 lexicon::default_lexicon()) {
    std::vector<std::string> categories;
    for (auto& [cat, p] : prevalence) {
        if (p < 0.0 || p > 1.0) {
            throw Error("synthetic corpus: prevalence for '" + cat + "' must be in [0,1]");
        }
        lex.at(cat);  // throws on unknown category
        categories.push_back(cat);
    }
    SynthResult result;
    if (n_notes == 0 || categories.empty()) return result;

    const auto keywords = detail::usable_keywords(lex, categories);
    const detail::SynthTemplates tpl;

    // Which notes are positive for each category.
    std::map<std::string, std::set<std::size_t>> positive_notes;
    for (auto& cat : categories) {
        std::vector<std::size_t> order(n_notes);
        for (std::size_t i = 0; i < n_notes; ++i) order[i] = i;
        DeterministicRng rng(mix_seed(seed, "category-" + cat));
        rng.shuffle(order);
        const auto n_pos = static_cast<std::size_t>(
            std::llround(prevalence.at(cat) * static_cast<double>(n_notes)));
        positive_notes[cat] = std::set<std::size_t>(order.begin(),
                                                    order.begin() +
                                                        std::min(n_pos, order.size()));
    }

    int width = 1;
    for (std::size_t v = n_notes; v >= 10; v /= 10) ++width;

    for (std::size_t i = 0; i < n_notes; ++i) {
        std::string note_id = std::to_string(i + 1);
        while (static_cast<int>(note_id.size()) < width) note_id.insert(note_id.begin(), '0');
        note_id = "synth-" + note_id;

        DeterministicRng rng(mix_seed(seed, "note-" + std::to_string(i)));
        std::vector<detail::DraftSentence> drafts;

        for (auto& cat : categories) {
            const auto& pool = keywords.at(cat);
            if (positive_notes.at(cat).count(i)) {
                const std::string& kw = pool[rng.bounded(pool.size())];
                const std::uint64_t variant = rng.bounded(4);
                std::string text;
                if (variant <= 1) {
                    text = detail::fill_template(tpl.affirmed[variant], kw);
                } else if (variant == 2) {
                    text = detail::fill_template(tpl.uncertain, kw);
                } else {
                    text = detail::fill_template(tpl.historical, kw);
                }
                drafts.push_back({text, cat, true});
            } else if (rng.bounded(4) == 0) {
                const std::string& kw = pool[rng.bounded(pool.size())];
                const std::string& form = rng.bounded(2) == 0 ? tpl.negated : tpl.family;
                drafts.push_back({detail::fill_template(form, kw), cat, false});
            }
        }
        const std::size_t n_filler = 1 + rng.bounded(2);
        for (std::size_t f = 0; f < n_filler; ++f) {
            drafts.push_back({tpl.filler[rng.bounded(tpl.filler.size())], "", false});
        }
        rng.shuffle(drafts);

        ClinicalNote note;
        note.note_id = note_id;
        for (auto& d : drafts) {
            if (!note.text.empty()) note.text += ' ';
            note.text += d.text;
        }
        note.metadata["source"] = "synthetic";

        // The gold sentence indices must agree with the segmenter's view.
        const auto segmented = segment_sentences(note.text);
        if (segmented.size() != drafts.size()) {
            throw Error("synthetic corpus: template text did not segment one-to-one (note " +
                        note_id + ")");
        }

        for (auto& cat : categories) {
            GoldAnnotation note_row;
            note_row.note_id = note_id;
            note_row.category = cat;
            note_row.label = positive_notes.at(cat).count(i) > 0;
            result.gold.push_back(note_row);
        }
        for (std::size_t s = 0; s < drafts.size(); ++s) {
            for (auto& cat : categories) {
                GoldAnnotation row;
                row.note_id = note_id;
                row.sentence_index = s;
                row.category = cat;
                row.label = drafts[s].category == cat && drafts[s].label;
                result.gold.push_back(row);
            }
        }
        result.notes.push_back(std::move(note));
    }
    return result;
}

}  // namespace fptox::corpus
