#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fptox/error.hpp"
#include "fptox/rng.hpp"

namespace fptox::corpus {

struct ClinicalNote {
    std::string note_id;
    std::string text;
    std::map<std::string, std::string> metadata;
};

// One token of a sentence. `surface` keeps the original casing (needed for
// exact-case matching of flagged abbreviations), `norm` is the lowercased
// form, and [begin, end) are character offsets into the sentence text.
struct Token {
    std::string surface;
    std::string norm;
    std::size_t begin = 0;
    std::size_t end = 0;
};

struct Sentence {
    std::string note_id;
    std::size_t index = 0;
    std::string text;
    std::size_t begin = 0;  // char offsets into the note text
    std::size_t end = 0;
};

struct TokenizedSentence {
    std::string note_id;
    std::size_t index = 0;
    std::string text;
    std::vector<Token> tokens;
};

struct GoldAnnotation {
    std::string note_id;
    std::optional<std::size_t> sentence_index;  // absent = note-level label
    std::string category;
    bool label = false;
};

// Prediction records mirror the gold file format plus optional evidence.
struct Prediction {
    std::string note_id;
    std::optional<std::size_t> sentence_index;
    std::string category;
    bool label = false;
    std::optional<double> score;
    std::optional<std::string> explanation;
    nlohmann::json evidence;  // null unless the method attaches any
};

// A sentence carrying the binary label of one category; the unit that gets
// split, featurized, classified and evaluated.
struct LabeledSentence {
    std::string note_id;
    std::size_t sentence_index = 0;
    std::string text;
    bool label = false;
};

template <typename Unit>
struct DatasetSplit {
    std::vector<Unit> train;
    std::vector<Unit> test;
    std::uint64_t seed = 0;
    double ratio = 0.8;
    std::optional<std::string> warning;
};

// ---------------------------------------------------------------------------
// Tokenization

// Dotted clinical abbreviations: kept as single tokens and never treated as
// sentence boundaries.
inline const std::set<std::string>& dotted_abbreviations() {
    static const std::set<std::string> abbrevs = {
        "b.i.d.", "t.i.d.", "q.i.d.", "q.d.", "q.h.s.", "p.r.n.", "p.o.",
        "a.m.", "p.m.", "s.o.b.", "dr.", "mr.", "mrs.", "ms.", "st.",
        "mg.", "mcg.", "ml.", "vs.", "e.g.", "i.e.", "etc.",
    };
    return abbrevs;
}

namespace detail {

inline bool is_alnum(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

inline bool is_space(char c) {
    return std::isspace(static_cast<unsigned char>(c)) != 0;
}

inline std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

inline bool is_abbreviation(std::string_view chunk) {
    return dotted_abbreviations().count(lower(chunk)) > 0;
}

// Emits the tokens of one whitespace-delimited chunk [b, e) of `text`.
inline void tokenize_chunk(std::string_view text, std::size_t b, std::size_t e,
                           std::vector<Token>& out) {
    while (b < e && !is_alnum(text[b])) ++b;
    while (e > b && !is_alnum(text[e - 1])) {
        if (text[e - 1] == '.' && is_abbreviation(text.substr(b, e - b))) break;
        --e;
    }
    if (b >= e) return;

    std::string_view core = text.substr(b, e - b);
    if (is_abbreviation(core)) {
        out.push_back({std::string(core), lower(core), b, e});
        return;
    }

    std::size_t k = b;
    while (k < e) {
        if (!is_alnum(text[k])) {
            ++k;
            continue;
        }
        std::size_t s = k;
        while (k < e) {
            if (is_alnum(text[k])) {
                ++k;
            } else if (text[k] == '-' && k + 1 < e && is_alnum(text[k + 1])) {
                // hyphen joins only when flanked by alphanumerics
                ++k;
            } else {
                break;
            }
        }
        std::string_view surf = text.substr(s, k - s);
        out.push_back({std::string(surf), lower(surf), s, k});
    }
}

}  // namespace detail

// Full tokenization: lowercased norms, original surfaces, char spans.
// Intra-token hyphens between alphanumerics survive ("5-FU" -> "5-fu");
// pure punctuation is dropped; dotted abbreviations stay whole.
inline std::vector<Token> tokenize_full(std::string_view text) {
    std::vector<Token> out;
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        if (detail::is_space(text[i])) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < n && !detail::is_space(text[j])) ++j;
        detail::tokenize_chunk(text, i, j, out);
        i = j;
    }
    return out;
}

// Lowercased token strings only.
inline std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    for (auto& t : tokenize_full(text)) out.push_back(std::move(t.norm));
    return out;
}

// ---------------------------------------------------------------------------
// Sentence segmentation
//
// Rule-based: a run of [.?!] (plus closing quotes/brackets) followed by
// whitespace or end-of-text closes a sentence, unless the single '.' ends a
// known dotted abbreviation. A blank line always closes a sentence. Sentence
// spans are trimmed so note.text[begin, end) == sentence.text exactly.

inline std::vector<Sentence> segment_sentences(std::string_view text) {
    std::vector<Sentence> sentences;
    const std::size_t n = text.size();

    auto emit = [&](std::size_t raw_begin, std::size_t raw_end) {
        std::size_t b = raw_begin, e = raw_end;
        while (b < e && detail::is_space(text[b])) ++b;
        while (e > b && detail::is_space(text[e - 1])) --e;
        if (b >= e) return;
        Sentence s;
        s.index = sentences.size();
        s.text = std::string(text.substr(b, e - b));
        s.begin = b;
        s.end = e;
        sentences.push_back(std::move(s));
    };

    std::size_t start = 0;
    std::size_t i = 0;
    while (i < n) {
        char c = text[i];
        if (c == '\n') {
            // blank line (newline, optional spaces/tabs, newline) forces a break
            std::size_t j = i + 1;
            while (j < n && (text[j] == ' ' || text[j] == '\t' || text[j] == '\r')) ++j;
            if (j < n && text[j] == '\n') {
                emit(start, i);
                i = j + 1;
                start = i;
                continue;
            }
            ++i;
            continue;
        }
        if (c == '.' || c == '?' || c == '!') {
            std::size_t run_begin = i;
            std::size_t j = i;
            while (j < n && (text[j] == '.' || text[j] == '?' || text[j] == '!')) ++j;
            bool single_dot = (j == run_begin + 1 && text[run_begin] == '.');
            std::size_t k = j;
            while (k < n && (text[k] == ')' || text[k] == ']' || text[k] == '"' || text[k] == '\'')) ++k;
            bool at_break = (k >= n) || detail::is_space(text[k]);
            if (at_break && single_dot) {
                // abbreviation suppression: look back to the chunk start
                std::size_t cs = run_begin;
                while (cs > start && !detail::is_space(text[cs - 1])) --cs;
                if (detail::is_abbreviation(text.substr(cs, run_begin + 1 - cs))) {
                    i = j;
                    continue;
                }
            }
            if (at_break) {
                emit(start, k);
                start = k;
                i = k;
                continue;
            }
            i = j;
            continue;
        }
        ++i;
    }
    emit(start, n);
    return sentences;
}

inline std::vector<TokenizedSentence> analyze_note(const ClinicalNote& note) {
    std::vector<TokenizedSentence> out;
    for (auto& s : segment_sentences(note.text)) {
        TokenizedSentence ts;
        ts.note_id = note.note_id;
        ts.index = s.index;
        ts.text = s.text;
        ts.tokens = tokenize_full(ts.text);
        out.push_back(std::move(ts));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Line-delimited JSON I/O

namespace detail {

inline nlohmann::json parse_line(const std::string& line, const std::string& path,
                                 std::size_t line_no) {
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw Error(path + ": line " + std::to_string(line_no) + ": malformed record");
    }
    return j;
}

inline std::string require_string(const nlohmann::json& j, const char* field,
                                  const std::string& path, std::size_t line_no) {
    if (!j.contains(field) || !j[field].is_string()) {
        throw Error(path + ": line " + std::to_string(line_no) + ": missing field '" +
                    field + "'");
    }
    return j[field].get<std::string>();
}

}  // namespace detail

inline std::vector<ClinicalNote> load_corpus(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open corpus file: " + path);
    std::vector<ClinicalNote> notes;
    std::set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j = detail::parse_line(line, path, line_no);
        ClinicalNote note;
        note.note_id = detail::require_string(j, "note_id", path, line_no);
        note.text = detail::require_string(j, "text", path, line_no);
        std::string trimmed = note.text;
        trimmed.erase(0, trimmed.find_first_not_of(" \t\r\n"));
        if (trimmed.empty()) {
            throw Error(path + ": line " + std::to_string(line_no) + ": empty text");
        }
        if (!seen.insert(note.note_id).second) {
            throw Error(path + ": line " + std::to_string(line_no) +
                        ": duplicate note_id '" + note.note_id + "'");
        }
        if (j.contains("metadata")) {
            if (!j["metadata"].is_object()) {
                throw Error(path + ": line " + std::to_string(line_no) +
                            ": metadata must be an object");
            }
            for (auto& [k, v] : j["metadata"].items()) {
                note.metadata[k] = v.is_string() ? v.get<std::string>() : v.dump();
            }
        }
        notes.push_back(std::move(note));
    }
    return notes;
}

inline void save_corpus(const std::vector<ClinicalNote>& notes, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write corpus file: " + path);
    for (auto& note : notes) {
        nlohmann::json j{{"note_id", note.note_id}, {"text", note.text}};
        if (!note.metadata.empty()) j["metadata"] = note.metadata;
        out << j.dump() << "\n";
    }
}

inline std::vector<GoldAnnotation> load_gold(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open gold file: " + path);
    std::vector<GoldAnnotation> gold;
    std::set<std::tuple<std::string, std::int64_t, std::string>> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j = detail::parse_line(line, path, line_no);
        GoldAnnotation g;
        g.note_id = detail::require_string(j, "note_id", path, line_no);
        g.category = detail::require_string(j, "category", path, line_no);
        if (!j.contains("label") || !j["label"].is_boolean()) {
            throw Error(path + ": line " + std::to_string(line_no) + ": missing field 'label'");
        }
        g.label = j["label"].get<bool>();
        std::int64_t sidx = -1;
        if (j.contains("sentence_index") && !j["sentence_index"].is_null()) {
            g.sentence_index = j["sentence_index"].get<std::size_t>();
            sidx = static_cast<std::int64_t>(*g.sentence_index);
        }
        if (!seen.insert({g.note_id, sidx, g.category}).second) {
            throw Error(path + ": line " + std::to_string(line_no) +
                        ": duplicate annotation for (" + g.note_id + ", " +
                        std::to_string(sidx) + ", " + g.category + ")");
        }
        gold.push_back(std::move(g));
    }
    return gold;
}

inline void save_gold(const std::vector<GoldAnnotation>& gold, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write gold file: " + path);
    for (auto& g : gold) {
        nlohmann::json j{{"note_id", g.note_id}, {"category", g.category}, {"label", g.label}};
        if (g.sentence_index) j["sentence_index"] = *g.sentence_index;
        out << j.dump() << "\n";
    }
}

inline void save_predictions(const std::vector<Prediction>& preds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write prediction file: " + path);
    for (auto& p : preds) {
        nlohmann::json j{{"note_id", p.note_id}, {"category", p.category}, {"label", p.label}};
        if (p.sentence_index) j["sentence_index"] = *p.sentence_index;
        if (p.score) j["score"] = *p.score;
        if (p.explanation) j["explanation"] = *p.explanation;
        if (!p.evidence.is_null()) j["evidence"] = p.evidence;
        out << j.dump() << "\n";
    }
}

inline std::vector<Prediction> load_predictions(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open prediction file: " + path);
    std::vector<Prediction> preds;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j = detail::parse_line(line, path, line_no);
        Prediction p;
        p.note_id = detail::require_string(j, "note_id", path, line_no);
        p.category = detail::require_string(j, "category", path, line_no);
        if (!j.contains("label") || !j["label"].is_boolean()) {
            throw Error(path + ": line " + std::to_string(line_no) + ": missing field 'label'");
        }
        p.label = j["label"].get<bool>();
        if (j.contains("sentence_index") && !j["sentence_index"].is_null()) {
            p.sentence_index = j["sentence_index"].get<std::size_t>();
        }
        if (j.contains("score")) p.score = j["score"].get<double>();
        if (j.contains("explanation")) p.explanation = j["explanation"].get<std::string>();
        if (j.contains("evidence")) p.evidence = j["evidence"];
        preds.push_back(std::move(p));
    }
    return preds;
}

// ---------------------------------------------------------------------------
// Stratified split

// Splits units into train/test preserving per-label proportions. Each label
// group contributes round(ratio * group_size) train units; group order is
// shuffled with a label-salted sub-seed, so the result depends only on
// (units, ratio, seed). If some label would leave the test side empty the
// split proceeds with a warning (rare categories tolerate it).
template <typename Unit, typename LabelFn>
DatasetSplit<Unit> stratified_split(const std::vector<Unit>& units, LabelFn label_of,
                                    double ratio, std::uint64_t seed) {
    if (units.empty()) throw Error("stratified_split: empty unit list");
    if (!(ratio > 0.0 && ratio < 1.0)) throw Error("stratified_split: ratio must be in (0,1)");

    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < units.size(); ++i) {
        (label_of(units[i]) ? pos : neg).push_back(i);
    }

    DatasetSplit<Unit> split;
    split.seed = seed;
    split.ratio = ratio;

    auto take = [&](std::vector<std::size_t>& group, const std::string& salt) {
        DeterministicRng rng(mix_seed(seed, salt));
        rng.shuffle(group);
        return static_cast<std::size_t>(std::llround(ratio * static_cast<double>(group.size())));
    };

    std::size_t n_train_pos = take(pos, "pos");
    std::size_t n_train_neg = take(neg, "neg");

    std::vector<std::size_t> train_idx, test_idx;
    for (std::size_t i = 0; i < pos.size(); ++i) {
        (i < n_train_pos ? train_idx : test_idx).push_back(pos[i]);
    }
    for (std::size_t i = 0; i < neg.size(); ++i) {
        (i < n_train_neg ? train_idx : test_idx).push_back(neg[i]);
    }
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(test_idx.begin(), test_idx.end());

    for (auto i : train_idx) split.train.push_back(units[i]);
    for (auto i : test_idx) split.test.push_back(units[i]);

    if (split.test.empty()) {
        split.warning = "test side is empty (single-label input or extreme ratio)";
    } else if (pos.empty() || neg.empty()) {
        split.warning = "all units share one label";
    }
    return split;
}

inline DatasetSplit<LabeledSentence> stratified_split(const std::vector<LabeledSentence>& units,
                                                      double ratio, std::uint64_t seed) {
    return stratified_split(units, [](const LabeledSentence& u) { return u.label; }, ratio, seed);
}

// Note-level label: positive iff any sentence is positive.
inline bool note_label_from_sentences(const std::vector<bool>& sentence_labels) {
    return std::any_of(sentence_labels.begin(), sentence_labels.end(), [](bool b) { return b; });
}

}  // namespace fptox::corpus
