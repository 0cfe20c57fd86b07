#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fptox/context_kind.hpp"
#include "fptox/corpus.hpp"
#include "fptox/error.hpp"

namespace fptox::lexicon {

struct KeywordEntry {
    std::string surface;                  // original keyword form
    std::vector<std::string> normalized;  // lowercased token sequence
    bool abbrev = false;                  // require exact-case surface match
};

struct Lexicon {
    std::string version;
    std::map<std::string, std::vector<KeywordEntry>> entries;

    bool has(const std::string& category) const { return entries.count(category) > 0; }

    const std::vector<KeywordEntry>& at(const std::string& category) const {
        auto it = entries.find(category);
        if (it == entries.end()) throw Error("unknown category: '" + category + "'");
        return it->second;
    }

    std::vector<std::string> categories() const {
        std::vector<std::string> out;
        for (auto& [id, _] : entries) out.push_back(id);
        return out;
    }
};

// A keyword occurrence in a sentence. token_span is [begin, end) over the
// sentence's token list; modifiers stay empty until context rules run.
struct Mention {
    std::string category;
    std::string keyword;  // surface form from the lexicon
    std::size_t begin = 0;
    std::size_t end = 0;
    std::set<context::ContextKind> modifiers;
};

// The five categories every bundled lexicon carries.
inline const std::vector<std::string>& core_categories() {
    static const std::vector<std::string> ids = {
        "drug_of_interest", "arrhythmia", "heart_failure",
        "valvular_complications", "hfs_therapies",
    };
    return ids;
}

// Lowercase, collapse runs of non-alphanumerics to single underscores.
inline std::string canonical_category_id(std::string_view raw) {
    std::string out;
    bool pending_sep = false;
    for (char c : raw) {
        if (corpus::detail::is_alnum(c)) {
            if (pending_sep && !out.empty()) out.push_back('_');
            pending_sep = false;
            out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else {
            pending_sep = true;
        }
    }
    if (out.empty()) throw Error("category id is empty after canonicalization: '" +
                                 std::string(raw) + "'");
    return out;
}

// Shared tokenizer, lowercased; a keyword must survive normalization.
inline std::vector<std::string> normalize_term(std::string_view s) {
    auto tokens = corpus::tokenize(s);
    if (tokens.empty()) {
        throw Error("keyword normalizes to nothing: '" + std::string(s) + "'");
    }
    return tokens;
}

namespace detail {

inline std::string join(const std::vector<std::string>& parts, char sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out.push_back(sep);
        out += parts[i];
    }
    return out;
}

}  // namespace detail

inline Lexicon lexicon_from_json(const nlohmann::json& doc, std::string version) {
    if (!doc.is_object()) throw Error("lexicon: top-level JSON value must be an object");
    Lexicon lex;
    lex.version = std::move(version);
    for (auto& [raw_id, value] : doc.items()) {
        if (raw_id == "_version") {
            if (value.is_string()) lex.version = value.get<std::string>();
            continue;
        }
        std::string id = canonical_category_id(raw_id);
        if (!value.is_array()) throw Error("lexicon: category '" + id + "' must map to a list");
        if (value.empty()) throw Error("lexicon: category '" + id + "' has no keywords");
        auto& list = lex.entries[id];
        std::set<std::string> seen;  // normalized-form dedupe within the category
        for (auto& item : value) {
            KeywordEntry e;
            if (item.is_string()) {
                e.surface = item.get<std::string>();
            } else if (item.is_object() && item.contains("term") && item["term"].is_string()) {
                e.surface = item["term"].get<std::string>();
                if (item.contains("abbrev")) e.abbrev = item["abbrev"].get<bool>();
            } else {
                throw Error("lexicon: category '" + id +
                            "': entries must be strings or {term, abbrev} objects");
            }
            e.normalized = normalize_term(e.surface);
            if (seen.insert(detail::join(e.normalized, ' ')).second) {
                list.push_back(std::move(e));
            }
        }
        if (list.empty()) throw Error("lexicon: category '" + id + "' has no keywords");
    }
    if (lex.entries.empty()) throw Error("lexicon: no categories defined");
    return lex;
}

// ---------------------------------------------------------------------------
// Bundled default: fluoropyrimidine treatment plus treatment-related toxicity
// vocabularies (35 categories). Two-to-three-letter uppercase abbreviations
// carry abbrev:true so matching requires the exact-case surface.

inline const char* default_lexicon_json() {
    return R"LEX(
{
  "_version": "builtin-1",
  "drug_of_interest": ["Capecitabine", "Xeloda", "Xitabin", "5-FU", "5-Fluorouracil",
    "Fluoro Uracil", "Adrucil", "Carac", "Flurablastin", "CAPOX", "CAPIRI", "CAPEOX",
    "CAPEMONO", "FOLFOX", "FOLFIRI", "FOLFOXIRI", "MFOLFOX", {"term": "AIO", "abbrev": true},
    "De Gramont Regimen", "XELOX", "XELIRI", "FOLFIRINOX"],
  "arrhythmia": ["Cardiac Arrhythmia", "Heart Arrhythmia", "Dysrhythmia", "Irregular Heartbeat",
    "Heart Rhythm Disturbance", "Cardiac Rhythm Disorder", "Afib", "A Fib", "Atrial Fibrillation",
    "Auricular Fibrillation", "Atrial Flutter", "Auricular Flutter", "A-flutter",
    {"term": "AF", "abbrev": true}, {"term": "VF", "abbrev": true}, "Ventricular Fibrillation",
    "Cardiac Arrest Due to VF", "Ventricular Tachycardia", "V TACH"],
  "heart_failure": [{"term": "HF", "abbrev": true}, "Heart Failure", "Cardiac Failure",
    "Heart Insufficiency", "Myocardial Failure", "Cardiac Insufficiency",
    "Congestive Heart Failure", {"term": "CHF", "abbrev": true}, "Bilateral Leg Edema",
    "Swelling", "Leg Swelling", "Edema", "Dropsy", "Hydrops", "Oedema", "Fluid Overload",
    "Reduced Ejection Fraction", "Reduced EF", "Reduced LVEF", "Reduction in EF",
    "Reduced Left Ventricular Ejection Fraction", "Reduced LV Function", "Cardiogenic Shock",
    "Heart Shock", "Cardiovascular Shock", "Cardiovascular Collapse", "Cardiocirculatory Collapse",
    "Cardiac Shock Syndrome", "Power Failure Syndrome", "HF Exacerbation", "CHF Exacerbation",
    "Exacerbation of Congestive Heart Failure", "Congestive Heart Failure Exacerbation",
    "Weak Heart", "Cardiac Function Fail", "BLE Edema", "Interstitial Edema", "Edematous",
    "Waterlogged", "Swelling Due to Excess Fluid", "Excess Fluid",
    "Bilateral Lower Extremity Edema", "Heart Failure and Other Functional Disorders"],
  "valvular_complications": [{"term": "TR", "abbrev": true}, {"term": "TI", "abbrev": true},
    {"term": "AR", "abbrev": true}, {"term": "AI", "abbrev": true}, "Tricuspid Insufficiency",
    "Tricuspid Incompetence", "Tricuspid Regurgitation", "Tricuspid Valve Insufficiency",
    "Tricuspid Valve Regurgitation", "Tricuspid Valve Incompetence", "Right AV Valve Regurgitation",
    "Regurgitation of Right Atrioventricular Valve", "Aortic Regurgitation", "Aortic Incompetence",
    "Aortic Insufficiency", "Aortic Valve Insufficiency", "Aortic Valve Incompetence",
    "Aortic Valve Regurgitation", "Valve Disorder", "AV Valve Abnormality", "Valvular Dysfunction",
    "Bicuspid Aortic Valve", "Heart Valve Disorder Atrioventricular Right Leaflet"],
  "hfs_therapies": ["Cream", "Urea Cream", "Aqua Care", "Nutraplus", "Vanamide", "Carbamide",
    "Elaqua XX", "Lanaphilic", "Ureaphil", "Carbamide", "Utterly Smooth", "Udderly Smooth Cream",
    "Lotion", "Gel", "Ointment", "Salve", "Solution", "Suspension", "Uridine Triacetate",
    "Vistogard"],
  "treatment_modifiers": ["Capecitabine Induced", "Fluoropyrimidine Induced", "FP Induced",
    "Xeloda Induced", "5-FU Induced", "Chemo Induced", "Chemotherapy Induced"],
  "treatment_doses": ["14 ON", "7 ON", "14 OFF", "7 OFF", "1-14 DAYS ON", "1-14 ON",
    "1-14 DAYS OFF", "1-14 OFF", {"term": "BID", "abbrev": true}, "Twice Daily", "Once Daily",
    "1-2 time(s) a day"],
  "radiation": ["Chemoradiation", "Chest Radiation"],
  "treatment_outcomes": ["Dose Decrease", "Decrease Dose", "Discontinue", "Discontinuation",
    "Delay", "Hold", "Dose Reduction", "Reduce Dose", "Reduce Frequency", "Frequency Reduction",
    "Stop", "Start", "Initiate", "Initiation", "Begin", "Began", "Started", "Day 1", "Cycle 1"],
  "hfs": ["Hand Foot Syndrome", "Hand-Foot Syndrome", "Hand-Foot Syndromes",
    "Hand and Foot Syndrome", "Hand and Foot", "Hand-Foot",
    "Hand and Foot Syndrome Secondary to Chemotherapy", {"term": "HFS", "abbrev": true}, "CiHFS",
    {"term": "PPE", "abbrev": true}, "Acral Erythema", "Acral Erythemas",
    "Chemotherapy-Induced Acral Erythema", "Chemotherapy-Induced Acral Erythemas",
    "Chemotherapy Induced Acral Erythema", "Palmar-Plantar Erythrodysesthesia",
    "Palmar Plantar Erythrodysesthesia", "Palmar-Plantar Erythrodysesthesia Syndrome",
    "Palmoplantar Erythrodysesthesia", "Palmoplantar Erythrodysesthesias",
    "Chemotherapy-Induced Palmoplantar Erythrodysesthesia",
    "Chemotherapy-Induced Palmoplantar Erythrodysesthesias",
    "Chemotherapy Induced Palmoplantar Erythrodysesthesia", "Palmar-Plantar",
    "Capecitabine-Induced Hand-Foot Syndrome", "L27.1"],
  "skin_integrity": ["Peeling", "Peeling Skin", "Peeling Skins", "Peeling of Skin",
    "Skin Peeling", "Skin Peel", "Peel", "Skin Appearance Peeling", "Desquamation",
    "Desquamation of Skin", "Skin Desquamation", "Desquamative State", "Scaling",
    "Scaling of Skin", "Scaling of the Skin", "Skin Scaling", "Scaly Skin", "Scales",
    "Skin Scales", "Dropping of Scales", "Shedding of Scales", "Exfoliating", "Exfoliate",
    "Exfoliation", "Exfoliation of Skin", "Skin Exfoliation", "Flaking of Skin", "Flaking Skin",
    "Skin Flaking", "Blisters", "Skin Blister", "Skin Blisters", "Skin Blistering",
    "Blistering Skin", "Blister Skin", "Blister of Skin", "Cutaneous Blister", "Dermal Blister",
    "Skin Vesicle", "Have Blistering", "Has Blistering", "Bleeding Skin", "Bleeding of Skin",
    "Skin Bleeding", "Bleed Skin", "Bleeds Skin", "Fissures", "Skin Fissure", "Skin Fissuring",
    "Fissure in Skin", "Fissuring of Skin", "Cracks in Skin", "Cracked Skin", "Cracking of Skin",
    "Skin Crack", "Splits in Skin"],
  "edema": ["Edema of Palm of Hand", "Edema of Left Palm of Hand", "Edema of Right Palm of Hand",
    "Edema of Bilateral Palm of Hand", "Edema of Sole of Foot"],
  "hyperkeratosis": ["Hyperkeratosis", "Hyperkeratoses", "Grade 1 Hyperkeratosis",
    "Grade 3 Hyperkeratosis", "Increased Keratinization", "Excessive Cornification", "Keratosis",
    "Tylosis", "Hyperkeratosis of Skin", "Skin Hyperkeratosis", "Skin Texture"],
  "pain": ["Hand Pain", "Hands Pain", "Painful Hand", "Pain in Hand", "Pain in the Hands",
    "Pain of Left Hand", "Pain in Left Hand Only", "Pain in Right Hand", "Pain in Right Hand Only",
    "Right Hand Pain", "Limb Pain Right Hand", "Limb Pain Left Hand", "Limb Pain Hand",
    "Pain in Limb", "Foot Pain", "Soft Tissue Pain in Foot", "Burning Pain in Hand",
    "Burning Pain in Foot", "Skin Symptom Change", "Skin Change"],
  "dermatitis": ["Dermatitides", "Skin Inflamed", "Skin Inflammation", "Inflammation of Skin"],
  "erythema_redness": ["Erythema of Skin", "Skin Erythema", "Cutaneous Redness", "Dermal Erythema",
    "Skin Reddened", "Skin Red", "Red Skin", "Redness of Skin", "Skin Redness",
    "Erythematous Condition", "Erythematous Conditions", "Erythematous Disorder",
    "Erythema Findings", "Unusual Change in Color of Skin to Red"],
  "cardiotoxicity": ["Cardiac Toxicity", "Cardiac Toxicities", "Cardiotoxicities"],
  "myocardial_infarction": ["Heart Attack", "Heart Attacks", "Myocardial Infarction",
    "Myocardial Infarctions", "Myocardial Infarct", "Myocardial Infarcts",
    {"term": "MI", "abbrev": true}, "Cardiac Infarction", "Infarction of Heart",
    "Heart Infarction", "Coronary Attack", "Coronary Attacks", "Right Ventricular Infarction",
    "Myocardial Necrosis", "Myocardial Infarction Syndrome"],
  "cardiovascular_strokes": ["Cardiovascular Stroke", "Cardiovascular Strokes"],
  "angina": ["Angina Pectoris", "Angor Pectoris", "Stenocardia", "Ischemic Chest Pain",
    "Ischaemic Chest Pain", "Anginal Syndrome", "Anginal Syndromes", "Cardiac Angina",
    "Cardiac Angina Syndrome", {"term": "AP", "abbrev": true}, "Anginal Pain",
    "Anginal Discomfort", "Chest Pain", "Chest Pains", "Pain in Chest", "Thorax Painful",
    "Thoracic Pain", "Thorax Pain", "Thoracalgia", "Stethalgia", "Chest Pain or Discomfort",
    "Chest Discomfort", "Discomfort in Chest", "Heart Throbbing", "Heart Throb",
    "Heart Irregularities", "Ischemic Heart Disease with Angina", "Angina of Effort"],
  "coronary_artery_vasospasms": ["Coronary Vasospasm", "Coronary Vasospasms",
    "Coronary Artery Vasospasm", "Coronary Artery Spasm", "Coronary Artery Spasms",
    "Coronary Spasm", "Coronary Arteriospasm", "Coronary Vascular Spasm"],
  "dyspnea": ["Shortness of Breath", "Breath Shortness", "Difficulty Breathing",
    "Difficulty in Breathing", "Respiration Difficult", "Breathing Difficult",
    "Difficult to Breathe", "Trouble Breathing", "Abnormal Breathing", "Breathless", "Dyspnoea",
    "Tightness of Breath", {"term": "SOB", "abbrev": true}, {"term": "DIB", "abbrev": true},
    "s.o.b."],
  "syncope": ["Fainting", "Syncope and Collapse", "Blackout", "Passed Out", "Syncopal Attack",
    "Syncopal Episode", "Swoon", "Loss of Consciousness"],
  "cardiomyopathies": ["Cardiomyopathy", "Mycardiopathy", "Mycardiopathies", "Mycardiodystrophy",
    "Myocardial Disease", "Myocardial Diseases", "Myocardium Diseases", "Disorder of Heart Muscle",
    "Disorder of Myocardium", "Heart Muscle Disease"],
  "myocardial_ischemia": ["Myocardial Ischemia", "Ischemic Heart Disease",
    "Ischaemic Heart Disease", "Cardiac Ischemia", "Heart Ischemia",
    {"term": "IHD", "abbrev": true}, "Myocarditis", "Myocarditides", "Myocardial Inflammation",
    "Inflammation of Heart Muscle"],
  "pericarditis": ["Swelling or Irritation of Membrane Around Heart",
    "Inflammation of the Membrane Surrounding the Heart", "Pericardium Inflammation"],
  "endocarditis": ["Endocarditides", "Inflammation of the Heart Valve"],
  "cardiac_arrest": ["Cardiac Arrest", "Heart Arrest", "Cardiopulmonary Arrest",
    "Cardiorespiratory Arrest", "Cardio-Respiratory Arrest", "Ventricular Arrest", "Asystole",
    "Asystoles", "Asystolia", "Asystolic", "Ventricular Asystole", "Ventricular Asystolia",
    "Cardiac Asystole", "Cardiac Standstill", "Heart Stops Beating", "Heart Stoppage",
    {"term": "CA", "abbrev": true}],
  "ventricular_dysfunction": ["Ventricular Dysfunction"],
  "pericardial_effusion": ["Pericardial Effusion", "Pericardial Fluid", "Fluid in Pericardium",
    "Fluid Around Heart"],
  "heart_block": ["Heart Block", "Conduction Block", "Blocked Heart", "Heart Blockage",
    "Cardiac Block", "Myocardial Block"],
  "hypotension": ["Low Blood Pressure", "Hypopiesis", "Hypotensive", "Blood Pressure Decreased",
    "Decreased Blood Pressure", "Arterial Blood Pressure Decreased", "Blood Pressure Drop",
    "Drop of Blood Pressure", "Drop in Blood Pressure", "Fall in Blood Pressure",
    "Blood Pressure Dropped", "Blood Pressure Low", "Lowered Blood Pressure", "BP Fell", "Low BP",
    "BP Lowered", "BP Lower"],
  "cardiac_tamponade": ["Cardiac Tamponade", "Pericardial Tamponade", "Heart Tamponade",
    "Tamponade", "Rose's Tamponade"],
  "heart_valve_regurgitation": ["Valvular Insufficiency", "Cardiac Valve Insufficiency",
    "Mitral Valve Insufficiency", "Mitral Valve Incompetence", "Mitral Valve Regurgitation",
    "Mitral Regurgitation", "Mitral Insufficiency", "Mitral Incompetence",
    {"term": "MI", "abbrev": true}, {"term": "MR", "abbrev": true},
    "Regurgitation of Left Atrioventricular Valve", "Ventriculo-Atrial Regurgitation"],
  "cyanosis": ["Cyanoses", "Unusual Change in Color of Skin to Blue", "Skin Cyanosis"]
}
)LEX";
}

inline const Lexicon& default_lexicon() {
    static const Lexicon lex =
        lexicon_from_json(nlohmann::json::parse(default_lexicon_json()), "builtin-1");
    return lex;
}

inline Lexicon load_lexicon(const std::optional<std::string>& path = std::nullopt) {
    if (!path) return default_lexicon();
    std::ifstream in(*path);
    if (!in) throw Error("cannot open lexicon file: " + *path);
    nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw Error("lexicon file is not valid JSON: " + *path);
    return lexicon_from_json(doc, *path);
}

// ---------------------------------------------------------------------------
// Matcher
//
// Keywords and sentence tokens are both expanded to sub-tokens by splitting
// normalized forms on '-', so "A-flutter" / "a flutter" / token "a-flutter"
// all coincide while "5-FU" still matches the single token "5-fu". An
// Aho-Corasick automaton runs over interned sub-token ids; a hit is kept only
// when it starts and ends on original token boundaries, which keeps keywords
// from firing inside larger tokens ("AF" never matches inside "AFTER").

class CompiledMatcher {
public:
    explicit CompiledMatcher(const Lexicon& lexicon) {
        nodes_.push_back(Node{});
        for (auto& [category, list] : lexicon.entries) {
            for (auto& entry : list) {
                Pattern p;
                p.category = category;
                p.surface = entry.surface;
                p.abbrev = entry.abbrev;
                if (entry.abbrev) {
                    std::vector<std::string> surf;
                    for (auto& t : corpus::tokenize_full(entry.surface)) surf.push_back(t.surface);
                    p.expected_surface = detail::join(surf, ' ');
                }
                for (auto& tok : entry.normalized) {
                    for (auto& sub : split_subtokens(tok)) p.subtokens.push_back(intern(sub));
                }
                add_pattern(std::move(p));
            }
        }
        build_failure_links();
    }

    std::vector<Mention> find_mentions(const std::vector<corpus::Token>& tokens) const {
        return match_impl(tokens);
    }

    // Plain-token convenience: surfaces equal the lowercased tokens, so
    // abbrev-flagged keywords (exact uppercase surfaces) cannot fire here.
    std::vector<Mention> find_mentions(const std::vector<std::string>& tokens) const {
        std::vector<corpus::Token> full;
        full.reserve(tokens.size());
        for (auto& t : tokens) full.push_back({t, t, 0, 0});
        return match_impl(full);
    }

    std::size_t pattern_count() const { return patterns_.size(); }

    static std::vector<std::string> split_subtokens(const std::string& norm) {
        std::vector<std::string> out;
        std::size_t start = 0;
        for (std::size_t i = 0; i <= norm.size(); ++i) {
            if (i == norm.size() || norm[i] == '-') {
                if (i > start) out.push_back(norm.substr(start, i - start));
                start = i + 1;
            }
        }
        if (out.empty()) out.push_back(norm);
        return out;
    }

private:
    static constexpr std::uint32_t kUnknown = 0xffffffffu;

    struct Pattern {
        std::string category;
        std::string surface;
        std::string expected_surface;  // abbrev only
        bool abbrev = false;
        std::vector<std::uint32_t> subtokens;
    };

    struct Node {
        std::map<std::uint32_t, int> next;
        int fail = 0;
        std::vector<int> outputs;  // pattern indices ending here
    };

    struct SubTok {
        std::uint32_t id;
        std::size_t orig;  // index of the source token
        bool is_start;     // first sub-token of the source token
        bool is_end;       // last sub-token of the source token
    };

    std::uint32_t intern(const std::string& s) {
        auto [it, inserted] = ids_.try_emplace(s, static_cast<std::uint32_t>(ids_.size()));
        return it->second;
    }

    std::uint32_t lookup(const std::string& s) const {
        auto it = ids_.find(s);
        return it == ids_.end() ? kUnknown : it->second;
    }

    void add_pattern(Pattern p) {
        int node = 0;
        for (auto id : p.subtokens) {
            auto it = nodes_[node].next.find(id);
            if (it == nodes_[node].next.end()) {
                nodes_.push_back(Node{});
                it = nodes_[node].next.emplace(id, static_cast<int>(nodes_.size() - 1)).first;
            }
            node = it->second;
        }
        nodes_[node].outputs.push_back(static_cast<int>(patterns_.size()));
        patterns_.push_back(std::move(p));
    }

    void build_failure_links() {
        std::queue<int> bfs;
        for (auto& [id, child] : nodes_[0].next) {
            nodes_[child].fail = 0;
            bfs.push(child);
        }
        while (!bfs.empty()) {
            int node = bfs.front();
            bfs.pop();
            for (auto& [id, child] : nodes_[node].next) {
                int f = nodes_[node].fail;
                while (f != 0 && !nodes_[f].next.count(id)) f = nodes_[f].fail;
                auto it = nodes_[f].next.find(id);
                nodes_[child].fail = (it != nodes_[f].next.end() && it->second != child)
                                         ? it->second
                                         : 0;
                auto& inherited = nodes_[nodes_[child].fail].outputs;
                nodes_[child].outputs.insert(nodes_[child].outputs.end(), inherited.begin(),
                                             inherited.end());
                bfs.push(child);
            }
        }
    }

    std::vector<Mention> match_impl(const std::vector<corpus::Token>& tokens) const {
        std::vector<SubTok> subs;
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            auto parts = split_subtokens(tokens[i].norm);
            for (std::size_t k = 0; k < parts.size(); ++k) {
                subs.push_back({lookup(parts[k]), i, k == 0, k + 1 == parts.size()});
            }
        }

        struct Candidate {
            std::size_t begin, end;
            int pattern;
        };
        std::vector<Candidate> candidates;

        int state = 0;
        for (std::size_t k = 0; k < subs.size(); ++k) {
            std::uint32_t id = subs[k].id;
            if (id == kUnknown) {
                state = 0;
                continue;
            }
            while (state != 0 && !nodes_[state].next.count(id)) state = nodes_[state].fail;
            auto it = nodes_[state].next.find(id);
            state = (it != nodes_[state].next.end()) ? it->second : 0;
            for (int pi : nodes_[state].outputs) {
                std::size_t len = patterns_[pi].subtokens.size();
                std::size_t sb = k + 1 - len;
                if (!subs[sb].is_start || !subs[k].is_end) continue;
                candidates.push_back({subs[sb].orig, subs[k].orig + 1, pi});
            }
        }

        // exact-case gate for abbreviation keywords
        std::vector<Candidate> kept;
        for (auto& c : candidates) {
            const Pattern& p = patterns_[static_cast<std::size_t>(c.pattern)];
            if (p.abbrev) {
                std::vector<std::string> surf;
                for (std::size_t i = c.begin; i < c.end; ++i) surf.push_back(tokens[i].surface);
                if (detail::join(surf, ' ') != p.expected_surface) continue;
            }
            kept.push_back(c);
        }

        // one mention per (category, span): lowest pattern id wins
        std::map<std::tuple<std::string, std::size_t, std::size_t>, int> by_span;
        for (auto& c : kept) {
            auto key = std::make_tuple(patterns_[static_cast<std::size_t>(c.pattern)].category,
                                       c.begin, c.end);
            auto it = by_span.find(key);
            if (it == by_span.end() || c.pattern < it->second) by_span[key] = c.pattern;
        }

        // longest-match per category: drop strict sub-spans
        std::vector<Mention> mentions;
        for (auto& [key, pi] : by_span) {
            auto& [category, begin, end] = key;
            bool dominated = false;
            for (auto& [okey, _] : by_span) {
                auto& [ocat, ob, oe] = okey;
                if (ocat != category) continue;
                if (ob <= begin && end <= oe && !(ob == begin && oe == end)) {
                    dominated = true;
                    break;
                }
            }
            if (dominated) continue;
            Mention m;
            m.category = category;
            m.keyword = patterns_[static_cast<std::size_t>(pi)].surface;
            m.begin = begin;
            m.end = end;
            mentions.push_back(std::move(m));
        }

        std::sort(mentions.begin(), mentions.end(), [](const Mention& a, const Mention& b) {
            return std::tie(a.begin, a.end, a.category, a.keyword) <
                   std::tie(b.begin, b.end, b.category, b.keyword);
        });
        return mentions;
    }

    std::map<std::string, std::uint32_t> ids_;
    std::vector<Node> nodes_;
    std::vector<Pattern> patterns_;
};

inline CompiledMatcher compile_matcher(const Lexicon& lexicon) {
    return CompiledMatcher(lexicon);
}

}  // namespace fptox::lexicon
