#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "fptox/corpus.hpp"
#include "fptox/error.hpp"
#include "fptox/lexicon.hpp"

namespace fptox::llm {

struct LlmEndpointConfig {
    std::string base_url = "http://localhost:8000";
    std::string path = "/v1/chat/completions";
    std::string model = "llama-3.1-8b";
    double temperature = 0.0;
    std::size_t max_tokens = 256;
    std::size_t timeout_sec = 60;
    std::size_t max_retries = 2;
    std::size_t parallelism = 4;
    std::string content_path = "choices/0/message/content";
    std::string auth_env = "FPTOX_LLM_TOKEN";
};

inline LlmEndpointConfig endpoint_config_from_json(const nlohmann::json& j) {
    LlmEndpointConfig c;
    c.base_url = j.value("base_url", c.base_url);
    c.path = j.value("path", c.path);
    c.model = j.value("model", c.model);
    c.temperature = j.value("temperature", c.temperature);
    c.max_tokens = j.value("max_tokens", c.max_tokens);
    c.timeout_sec = j.value("timeout_sec", c.timeout_sec);
    c.max_retries = j.value("max_retries", c.max_retries);
    c.parallelism = j.value("parallelism", c.parallelism);
    c.content_path = j.value("content_path", c.content_path);
    c.auth_env = j.value("auth_env", c.auth_env);
    if (c.temperature < 0.0) throw Error("endpoint config: temperature must be >= 0");
    if (c.parallelism < 1) throw Error("endpoint config: parallelism must be >= 1");
    return c;
}

struct LlmResponse {
    std::string raw;
    std::optional<bool> parsed_label;  // set iff parsing succeeded
    std::string explanation;
};

// First standalone yes/no token on the first line decides the label;
// the rest of the text is the explanation.
inline LlmResponse parse_response(const std::string& raw) {
    LlmResponse r;
    r.raw = raw;
    const std::size_t eol = raw.find('\n');
    const std::string first_line = raw.substr(0, eol);
    std::size_t i = 0;
    while (i < first_line.size()) {
        while (i < first_line.size() &&
               !std::isalnum(static_cast<unsigned char>(first_line[i]))) {
            ++i;
        }
        std::size_t start = i;
        while (i < first_line.size() && std::isalnum(static_cast<unsigned char>(first_line[i]))) {
            ++i;
        }
        if (start == i) break;
        std::string token = first_line.substr(start, i - start);
        for (auto& c : token) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        if (token == "yes" || token == "no") {
            r.parsed_label = (token == "yes");
            std::string rest = raw.substr(i);
            std::size_t b = 0;
            while (b < rest.size() && (rest[b] == '.' || rest[b] == ',' || rest[b] == ':' ||
                                       rest[b] == '-' || rest[b] == ' ' || rest[b] == '\n')) {
                ++b;
            }
            r.explanation = rest.substr(b);
            return r;
        }
    }
    r.explanation = raw;
    return r;
}

// ---------------------------------------------------------------------------
// Prompt construction

inline std::string category_display_name(const std::string& category) {
    static const std::map<std::string, std::string> names = {
        {"drug_of_interest", "the drug of interest (capecitabine or 5-FU)"},
        {"arrhythmia", "arrhythmia"},
        {"heart_failure", "HF"},
        {"valvular_complications", "valvular complications"},
        {"hfs_therapies", "HFS treatment/prevention therapies"},
    };
    auto it = names.find(category);
    if (it != names.end()) return it->second;
    std::string out = category;
    for (auto& c : out) {
        if (c == '_') c = ' ';
    }
    return out;
}

inline const char* keyword_list_marker() { return "These words being the signs and evidence: "; }

inline std::string build_zero_shot_prompt(const std::string& category,
                                          const lexicon::Lexicon& lex) {
    const auto& entries = lex.at(category);
    if (entries.empty()) throw Error("zero-shot prompt: category '" + category +
                                     "' has no keywords");
    std::string keywords;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (i) keywords += ", ";
        keywords += entries[i].surface;
    }
    const std::string display = category_display_name(category);
    std::string prompt;
    prompt += "You are given a sentence from a clinical text, if that sentence contains any "
              "information related to instances of " + display +
              ", respond with yes and explain why. If not, respond with no and explain why. ";
    prompt += keyword_list_marker() + keywords + ". ";
    prompt += "If these words are mentioned in the sentence, respond with yes and explain why. "
              "If these words are not mentioned in the sentence, respond with no and explain why.";
    return prompt;
}

// Final request text: the prompt followed by the sentence under test.
inline std::string render_request(const std::string& prompt, const std::string& sentence) {
    return prompt + "\n\nHere is a sentence: " + sentence + "\nAnswer:";
}

// ---------------------------------------------------------------------------
// Chain-of-thought examples

struct CotExample {
    std::string sentence;
    std::array<std::string, 4> steps;
    bool answer = false;
    std::string answer_rationale;
};

enum class ErrorKind { false_positive, false_negative };

inline const char* to_string(ErrorKind k) {
    return k == ErrorKind::false_positive ? "false_positive" : "false_negative";
}

struct ErrorCase {
    std::string unit_id;
    std::string sentence;
    std::string category;
    bool gold = false;
    bool predicted = false;
    ErrorKind kind = ErrorKind::false_positive;
    std::string zero_shot_explanation;
};

inline std::string render_cot_example(const CotExample& ex) {
    std::string out;
    out += "Here is a sentence: " + ex.sentence + "\n";
    out += "Reasoning:\n";
    for (std::size_t i = 0; i < ex.steps.size(); ++i) {
        out += "Step " + std::to_string(i + 1) + ": " + ex.steps[i] + "\n";
    }
    out += std::string("Answer: ") + (ex.answer ? "Yes" : "No") + ". " + ex.answer_rationale;
    return out;
}

namespace detail {

inline const std::set<std::string>& cot_stopwords() {
    static const std::set<std::string> words = {
        "the", "a", "an", "of", "in", "on", "at", "to", "is", "are", "was", "were", "with",
        "and", "or", "for", "no", "not", "has", "had", "have", "patient", "pt", "today",
        "this", "that",
    };
    return words;
}

// Keyword of the category sharing the most tokens with the sentence;
// ties prefer longer keywords, then lexicographic surface order.
inline std::optional<std::string> best_matching_keyword(const std::string& category,
                                                        const lexicon::Lexicon& lex,
                                                        const std::vector<std::string>& tokens) {
    std::set<std::string> sentence_tokens(tokens.begin(), tokens.end());
    std::optional<std::string> best;
    std::size_t best_overlap = 0;
    std::size_t best_len = 0;
    for (auto& entry : lex.at(category)) {
        std::set<std::string> kw(entry.normalized.begin(), entry.normalized.end());
        std::size_t overlap = 0;
        for (auto& t : kw) overlap += sentence_tokens.count(t);
        if (overlap == 0) continue;
        if (overlap > best_overlap ||
            (overlap == best_overlap &&
             (kw.size() > best_len ||
              (kw.size() == best_len && (!best || entry.surface < *best))))) {
            best = entry.surface;
            best_overlap = overlap;
            best_len = kw.size();
        }
    }
    return best;
}

}  // namespace detail

// Auto-filled four-step skeleton; meant to be reviewed and possibly edited
// before inclusion in an enhanced prompt.
inline CotExample draft_cot_example(const ErrorCase& error, const lexicon::Lexicon& lex,
                                    const lexicon::CompiledMatcher& matcher) {
    CotExample ex;
    ex.sentence = error.sentence;
    ex.answer = error.gold;

    const std::string display = category_display_name(error.category);
    const auto tokens_full = corpus::tokenize_full(error.sentence);
    std::vector<std::string> tokens;
    for (auto& t : tokens_full) tokens.push_back(t.norm);

    ex.steps[0] = "Read the sentence \"" + error.sentence +
                  "\" and identify key terms that may indicate signs or evidence of " + display +
                  ".";

    std::vector<std::string> phrases;
    std::set<std::string> seen;
    for (auto& m : matcher.find_mentions(tokens_full)) {
        std::string phrase;
        for (std::size_t i = m.begin; i < m.end; ++i) {
            if (!phrase.empty()) phrase += ' ';
            phrase += tokens_full[i].surface;
        }
        if (seen.insert(phrase).second) phrases.push_back(phrase);
    }
    if (phrases.empty()) {
        for (auto& t : tokens_full) {
            if (!detail::cot_stopwords().count(t.norm) && seen.insert(t.surface).second) {
                phrases.push_back(t.surface);
                if (phrases.size() == 4) break;
            }
        }
    }
    if (phrases.empty()) {
        ex.steps[1] = "The sentence contains no candidate clinical phrases.";
    } else {
        std::string joined;
        for (std::size_t i = 0; i < phrases.size(); ++i) {
            if (i) joined += ", ";
            joined += "\"" + phrases[i] + "\"";
        }
        ex.steps[1] = "Candidate phrases: " + joined + ".";
    }

    auto best = detail::best_matching_keyword(error.category, lex, tokens);
    if (best) {
        ex.steps[2] = "The sentence relates to the listed indicator \"" + *best + "\".";
    } else {
        ex.steps[2] = "None of the listed indicators matches the sentence directly.";
    }

    if (error.gold) {
        ex.steps[3] = "The sentence provides evidence relevant to " + display +
                      ", so the correct answer is yes.";
        ex.answer_rationale = "The sentence contains evidence relevant to " + display + ".";
    } else {
        ex.steps[3] = "Despite any superficial matches, the sentence does not describe " +
                      display + ", so the correct answer is no.";
        ex.answer_rationale = "The sentence does not describe " + display + ".";
    }
    return ex;
}

inline CotExample draft_cot_example(const ErrorCase& error, const lexicon::Lexicon& lex) {
    lexicon::CompiledMatcher matcher(lex);
    return draft_cot_example(error, lex, matcher);
}

// Enhanced prompt: zero-shot text plus up to `cap` rendered examples,
// interleaved false-negative first (yes-answer examples carry the signal the
// zero-shot prompt missed). Zero examples → the zero-shot text unchanged.
inline std::string build_error_analysis_prompt(const std::string& zero_shot_text,
                                               const std::vector<CotExample>& examples,
                                               std::size_t cap = 4) {
    std::vector<const CotExample*> yes_side, no_side;
    for (auto& ex : examples) (ex.answer ? yes_side : no_side).push_back(&ex);
    std::vector<const CotExample*> chosen;
    std::size_t yi = 0, ni = 0;
    while (chosen.size() < cap && (yi < yes_side.size() || ni < no_side.size())) {
        if (yi < yes_side.size()) chosen.push_back(yes_side[yi++]);
        if (chosen.size() < cap && ni < no_side.size()) chosen.push_back(no_side[ni++]);
    }
    std::string out = zero_shot_text;
    for (auto* ex : chosen) {
        out += "\n\n" + render_cot_example(*ex);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Transport

class ChatClient {
public:
    virtual ~ChatClient() = default;
    // Sends one user message; returns the completion text.
    virtual std::string complete(const std::string& user_content) = 0;
};

inline nlohmann::json build_request_body(const LlmEndpointConfig& cfg,
                                         const std::string& user_content) {
    return {{"model", cfg.model},
            {"messages", nlohmann::json::array({{{"role", "user"}, {"content", user_content}}})},
            {"temperature", cfg.temperature},
            {"max_tokens", cfg.max_tokens}};
}

// Walks the response JSON by a /-separated path; numeric segments index arrays.
inline std::string extract_content(const nlohmann::json& body, const std::string& content_path) {
    const nlohmann::json* cur = &body;
    std::size_t start = 0;
    while (start <= content_path.size()) {
        std::size_t end = content_path.find('/', start);
        if (end == std::string::npos) end = content_path.size();
        const std::string seg = content_path.substr(start, end - start);
        if (!seg.empty()) {
            bool numeric = std::all_of(seg.begin(), seg.end(), [](unsigned char c) {
                return std::isdigit(c) != 0;
            });
            if (numeric && cur->is_array()) {
                const std::size_t idx = std::stoull(seg);
                if (idx >= cur->size()) throw Error("endpoint response: missing '" + seg + "'");
                cur = &(*cur)[idx];
            } else if (cur->is_object() && cur->contains(seg)) {
                cur = &(*cur)[seg];
            } else {
                throw Error("endpoint response: missing '" + seg + "'");
            }
        }
        start = end + 1;
    }
    if (!cur->is_string()) throw Error("endpoint response: content is not a string");
    return cur->get<std::string>();
}

// Deterministic in-process endpoint used by automated tests. Behavior:
// sentences registered as hard cases are answered correctly only when the
// incoming prompt already contains the sentence as a reasoning example;
// everything else is answered by whole-word scan of the prompt's keyword list.
class MockChatClient : public ChatClient {
public:
    struct HardCase {
        bool gold = false;
        std::string right_explanation;
        std::string wrong_explanation;
        std::optional<std::string> raw_override;  // returned verbatim when set
    };

    MockChatClient() = default;
    explicit MockChatClient(std::map<std::string, HardCase> cases) : cases_(std::move(cases)) {}

    std::size_t call_count() const { return calls_.load(); }

    std::string complete(const std::string& user_content) override {
        calls_.fetch_add(1);
        const std::string marker = "Here is a sentence: ";
        const std::size_t spos = user_content.rfind(marker);
        if (spos == std::string::npos) return "No. The request carries no sentence.";
        const std::size_t sbegin = spos + marker.size();
        std::size_t send = user_content.find('\n', sbegin);
        if (send == std::string::npos) send = user_content.size();
        const std::string sentence = user_content.substr(sbegin, send - sbegin);

        auto it = cases_.find(sentence);
        if (it != cases_.end()) {
            if (it->second.raw_override) return *it->second.raw_override;
            const bool demonstrated = user_content.find(sentence) < spos;
            const bool answer = demonstrated ? it->second.gold : !it->second.gold;
            const std::string& expl = demonstrated ? it->second.right_explanation
                                                   : it->second.wrong_explanation;
            return (answer ? "Yes. " : "No. ") + expl;
        }

        for (auto& kw : prompt_keywords(user_content)) {
            if (contains_phrase(sentence, kw)) {
                return "Yes. The sentence mentions \"" + kw + "\", a listed indicator.";
            }
        }
        return "No. None of the listed indicators appears in the sentence.";
    }

private:
    static std::vector<std::string> prompt_keywords(const std::string& user_content) {
        std::vector<std::string> out;
        const std::size_t mpos = user_content.find(keyword_list_marker());
        if (mpos == std::string::npos) return out;
        const std::size_t kbegin = mpos + std::string(keyword_list_marker()).size();
        const std::size_t kend = user_content.find(". If these words", kbegin);
        if (kend == std::string::npos) return out;
        std::string list = user_content.substr(kbegin, kend - kbegin);
        std::size_t start = 0;
        while (start < list.size()) {
            std::size_t comma = list.find(", ", start);
            if (comma == std::string::npos) comma = list.size();
            if (comma > start) out.push_back(list.substr(start, comma - start));
            start = comma + 2;
        }
        return out;
    }

    static bool contains_phrase(const std::string& sentence, const std::string& phrase) {
        const auto hay = corpus::tokenize(sentence);
        const auto needle = corpus::tokenize(phrase);
        if (needle.empty() || needle.size() > hay.size()) return false;
        for (std::size_t i = 0; i + needle.size() <= hay.size(); ++i) {
            bool ok = true;
            for (std::size_t k = 0; k < needle.size(); ++k) {
                if (hay[i + k] != needle[k]) {
                    ok = false;
                    break;
                }
            }
            if (ok) return true;
        }
        return false;
    }

    std::map<std::string, HardCase> cases_;
    std::atomic<std::size_t> calls_{0};
};

// ---------------------------------------------------------------------------
// Classification runs

struct LlmUnit {
    std::string unit_id;
    std::string sentence;
    bool gold = false;
};

struct LlmPrediction {
    std::string unit_id;
    std::string sentence;
    bool gold = false;
    bool label = false;  // parsed label, or the fallback when unparseable
    bool parsed = true;
    std::string explanation;
};

inline LlmResponse classify_sentence(ChatClient& client, const std::string& prompt,
                                     const std::string& sentence) {
    return parse_response(client.complete(render_request(prompt, sentence)));
}

// Runs the prompt over every unit, up to `parallelism` requests in flight;
// result order matches input order.
inline std::vector<LlmPrediction> classify_batch(ChatClient& client, const std::string& prompt,
                                                 const std::vector<LlmUnit>& units,
                                                 std::size_t parallelism = 4,
                                                 bool fallback_label = false) {
    std::vector<LlmPrediction> results(units.size());
    if (units.empty()) return results;
    parallelism = std::max<std::size_t>(1, std::min(parallelism, units.size()));

    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;

    auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= units.size()) return;
            try {
                LlmResponse r = classify_sentence(client, prompt, units[i].sentence);
                LlmPrediction p;
                p.unit_id = units[i].unit_id;
                p.sentence = units[i].sentence;
                p.gold = units[i].gold;
                p.parsed = r.parsed_label.has_value();
                p.label = r.parsed_label.value_or(fallback_label);
                p.explanation = r.explanation;
                results[i] = std::move(p);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };

    if (parallelism == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        for (std::size_t t = 0; t < parallelism; ++t) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);
    return results;
}

// One ErrorCase per false positive / false negative: false positives first,
// each group sorted by unit id. Prediction ids must biject with unit ids.
inline std::vector<ErrorCase> collect_errors(const std::vector<LlmUnit>& units,
                                             const std::vector<LlmPrediction>& preds,
                                             const std::string& category) {
    if (units.size() != preds.size()) {
        throw Error("collect_errors: prediction/unit count mismatch");
    }
    std::map<std::string, const LlmPrediction*> by_id;
    for (auto& p : preds) {
        if (!by_id.emplace(p.unit_id, &p).second) {
            throw Error("collect_errors: duplicate prediction for unit '" + p.unit_id + "'");
        }
    }
    std::vector<ErrorCase> fps, fns;
    for (auto& u : units) {
        auto it = by_id.find(u.unit_id);
        if (it == by_id.end()) {
            throw Error("collect_errors: no prediction for unit '" + u.unit_id + "'");
        }
        const LlmPrediction& p = *it->second;
        if (p.label == u.gold) continue;
        ErrorCase e;
        e.unit_id = u.unit_id;
        e.sentence = u.sentence;
        e.category = category;
        e.gold = u.gold;
        e.predicted = p.label;
        e.kind = u.gold ? ErrorKind::false_negative : ErrorKind::false_positive;
        e.zero_shot_explanation = p.explanation;
        (u.gold ? fns : fps).push_back(std::move(e));
    }
    auto by_unit = [](const ErrorCase& a, const ErrorCase& b) { return a.unit_id < b.unit_id; };
    std::sort(fps.begin(), fps.end(), by_unit);
    std::sort(fns.begin(), fns.end(), by_unit);
    fps.insert(fps.end(), fns.begin(), fns.end());
    return fps;
}

// ---------------------------------------------------------------------------
// Persistence for workflow artifacts

inline void save_llm_predictions(const std::vector<LlmPrediction>& preds,
                                 const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write prediction file: " + path);
    for (auto& p : preds) {
        nlohmann::json j{{"unit_id", p.unit_id}, {"sentence", p.sentence},   {"gold", p.gold},
                         {"label", p.label},     {"parsed", p.parsed},       {"explanation", p.explanation}};
        out << j.dump() << "\n";
    }
}

inline std::vector<LlmPrediction> load_llm_predictions(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open prediction file: " + path);
    std::vector<LlmPrediction> preds;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            throw Error(path + ": line " + std::to_string(line_no) + ": malformed record");
        }
        LlmPrediction p;
        p.unit_id = j.at("unit_id").get<std::string>();
        p.sentence = j.value("sentence", std::string());
        p.gold = j.value("gold", false);
        p.label = j.at("label").get<bool>();
        p.parsed = j.value("parsed", true);
        p.explanation = j.value("explanation", std::string());
        preds.push_back(std::move(p));
    }
    return preds;
}

inline void save_llm_units(const std::vector<LlmUnit>& units, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write unit file: " + path);
    for (auto& u : units) {
        nlohmann::json j{{"unit_id", u.unit_id}, {"sentence", u.sentence}, {"gold", u.gold}};
        out << j.dump() << "\n";
    }
}

inline std::vector<LlmUnit> load_llm_units(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open unit file: " + path);
    std::vector<LlmUnit> units;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            throw Error(path + ": line " + std::to_string(line_no) + ": malformed record");
        }
        LlmUnit u;
        u.unit_id = j.at("unit_id").get<std::string>();
        u.sentence = j.at("sentence").get<std::string>();
        u.gold = j.value("gold", false);
        units.push_back(std::move(u));
    }
    return units;
}

inline nlohmann::json error_case_to_json(const ErrorCase& e) {
    return {{"unit_id", e.unit_id},   {"sentence", e.sentence},
            {"category", e.category}, {"gold", e.gold},
            {"predicted", e.predicted}, {"kind", to_string(e.kind)},
            {"zero_shot_explanation", e.zero_shot_explanation}};
}

inline ErrorCase error_case_from_json(const nlohmann::json& j) {
    ErrorCase e;
    e.unit_id = j.value("unit_id", std::string());
    e.sentence = j.at("sentence").get<std::string>();
    e.category = j.at("category").get<std::string>();
    e.gold = j.at("gold").get<bool>();
    e.predicted = j.value("predicted", !e.gold);
    const std::string kind = j.value("kind", e.gold ? "false_negative" : "false_positive");
    if (kind != "false_negative" && kind != "false_positive") {
        throw Error("error case: unknown kind '" + kind + "'");
    }
    e.kind = kind == "false_negative" ? ErrorKind::false_negative : ErrorKind::false_positive;
    e.zero_shot_explanation = j.value("zero_shot_explanation", std::string());
    return e;
}

inline nlohmann::json cot_example_to_json(const CotExample& ex) {
    return {{"sentence", ex.sentence},
            {"steps", std::vector<std::string>(ex.steps.begin(), ex.steps.end())},
            {"answer", ex.answer},
            {"answer_rationale", ex.answer_rationale},
            {"rendered", render_cot_example(ex)}};
}

inline CotExample cot_example_from_json(const nlohmann::json& j) {
    CotExample ex;
    ex.sentence = j.at("sentence").get<std::string>();
    const auto steps = j.at("steps").get<std::vector<std::string>>();
    if (steps.size() != ex.steps.size()) {
        throw Error("reasoning example: expected exactly 4 steps");
    }
    std::copy(steps.begin(), steps.end(), ex.steps.begin());
    ex.answer = j.at("answer").get<bool>();
    ex.answer_rationale = j.value("answer_rationale", std::string());
    return ex;
}

inline void save_text(const std::string& text, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write file: " + path);
    out << text;
}

inline std::string load_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---------------------------------------------------------------------------
// Error-analysis workflow: zero-shot on train → catalog errors → enhance the
// prompt with corrective reasoning examples → classify the test set. Each
// step's artifact persists under store_dir (when given) and a rerun loads it
// instead of repeating the calls.

struct WorkflowOptions {
    std::size_t example_cap = 4;
    bool fallback_label = false;
    std::size_t parallelism = 4;
    std::optional<std::string> store_dir;
    std::string artifact_prefix;  // usually the category id
};

struct WorkflowResult {
    std::string zero_shot_prompt;
    std::string enhanced_prompt;
    std::vector<LlmPrediction> train_predictions;
    std::vector<LlmPrediction> test_predictions;
    std::vector<ErrorCase> errors;
    std::optional<std::string> warning;
};

inline WorkflowResult run_error_analysis_workflow(const std::vector<LlmUnit>& train,
                                                  const std::vector<LlmUnit>& test,
                                                  const std::string& category,
                                                  const lexicon::Lexicon& lex,
                                                  ChatClient& client,
                                                  const WorkflowOptions& options = {}) {
    WorkflowResult result;
    result.zero_shot_prompt = build_zero_shot_prompt(category, lex);

    namespace fs = std::filesystem;
    std::string prefix;
    if (options.store_dir) {
        fs::create_directories(*options.store_dir);
        prefix = *options.store_dir + "/" +
                 (options.artifact_prefix.empty() ? category : options.artifact_prefix);
    }
    auto artifact = [&](const char* name) {
        return prefix.empty() ? std::string() : prefix + "_" + name;
    };
    auto have = [&](const std::string& path) { return !path.empty() && fs::exists(path); };

    // step 1: zero-shot over the training split
    const std::string train_path = artifact("zero_shot_train.jsonl");
    if (have(train_path)) {
        result.train_predictions = load_llm_predictions(train_path);
    } else {
        result.train_predictions = classify_batch(client, result.zero_shot_prompt, train,
                                                  options.parallelism, options.fallback_label);
        if (!train_path.empty()) save_llm_predictions(result.train_predictions, train_path);
    }

    // step 2: catalog misclassifications and enhance the prompt
    const std::string prompt_path = artifact("enhanced_prompt.txt");
    result.errors = collect_errors(train, result.train_predictions, category);
    if (train.empty()) result.warning = "training split is empty; prompt stays zero-shot";
    if (have(prompt_path)) {
        result.enhanced_prompt = load_text(prompt_path);
    } else {
        lexicon::CompiledMatcher matcher(lex);
        std::vector<CotExample> examples;
        examples.reserve(result.errors.size());
        for (auto& e : result.errors) examples.push_back(draft_cot_example(e, lex, matcher));
        result.enhanced_prompt = build_error_analysis_prompt(result.zero_shot_prompt, examples,
                                                             options.example_cap);
        if (!prompt_path.empty()) save_text(result.enhanced_prompt, prompt_path);
    }

    // step 3: enhanced prompt over the held-out test split
    const std::string test_path = artifact("error_analysis_test.jsonl");
    if (have(test_path)) {
        result.test_predictions = load_llm_predictions(test_path);
    } else {
        result.test_predictions = classify_batch(client, result.enhanced_prompt, test,
                                                 options.parallelism, options.fallback_label);
        if (!test_path.empty()) save_llm_predictions(result.test_predictions, test_path);
    }
    // step 4 (scoring) belongs to the caller, who owns the metric tables
    return result;
}

}  // namespace fptox::llm
