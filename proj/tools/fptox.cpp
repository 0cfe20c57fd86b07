// fptox — command-line front end for the clinical-text extraction toolkit.
//
// Exit codes: 0 success, 1 user error (bad input, missing file, bad config),
// 2 internal error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <CLI11.hpp>

#include "fptox/fptox.hpp"
#include "fptox/llm_http.hpp"

namespace {

using namespace fptox;

nlohmann::json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open file: " + path);
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw Error("not valid JSON: " + path);
    return j;
}

std::optional<std::string> opt_path(const std::string& s) {
    return s.empty() ? std::nullopt : std::optional<std::string>(s);
}

// --- corpus synth -----------------------------------------------------------

struct SynthArgs {
    std::size_t n = 100;
    std::uint64_t seed = 42;
    std::string spec_path;
    std::string lexicon_path;
    std::string out = "corpus.jsonl";
    std::string gold = "gold.jsonl";
};

void cmd_corpus_synth(const SynthArgs& a) {
    std::map<std::string, double> prevalence = corpus::default_synth_prevalence();
    if (!a.spec_path.empty()) {
        prevalence.clear();
        for (auto& [cat, p] : load_json_file(a.spec_path).items()) {
            prevalence[cat] = p.get<double>();
        }
    }
    const auto lex = lexicon::load_lexicon(opt_path(a.lexicon_path));
    const auto synth = corpus::generate_synthetic_corpus(prevalence, a.n, a.seed, lex);
    corpus::save_corpus(synth.notes, a.out);
    corpus::save_gold(synth.gold, a.gold);
    std::cout << "wrote " << synth.notes.size() << " notes to " << a.out << " and "
              << synth.gold.size() << " gold rows to " << a.gold << "\n";
}

// --- lexicon ----------------------------------------------------------------

struct LexiconArgs {
    std::string lexicon_path;
    std::string category;
};

void cmd_lexicon_validate(const LexiconArgs& a) {
    const auto lex = lexicon::load_lexicon(opt_path(a.lexicon_path));
    lexicon::CompiledMatcher matcher(lex);
    std::size_t keywords = 0, failures = 0;
    for (auto& category : lex.categories()) {
        for (auto& entry : lex.at(category)) {
            ++keywords;
            const auto tokens = corpus::tokenize_full(entry.surface);
            std::size_t hits = 0;
            for (auto& m : matcher.find_mentions(tokens)) {
                if (m.category == category && m.begin == 0 && m.end == tokens.size()) ++hits;
            }
            if (hits != 1) {
                ++failures;
                std::cout << "FAIL " << category << ": \"" << entry.surface
                          << "\" matched in isolation " << hits << " times (want 1)\n";
            }
        }
    }
    std::cout << lex.categories().size() << " categories, " << keywords << " keywords, "
              << matcher.pattern_count() << " patterns, " << failures << " failures\n";
    if (failures > 0) throw Error("lexicon validation failed");
}

void cmd_lexicon_show(const LexiconArgs& a) {
    const auto lex = lexicon::load_lexicon(opt_path(a.lexicon_path));
    for (auto& category : lex.categories()) {
        if (!a.category.empty() && category != a.category) continue;
        std::cout << category << " (" << lex.at(category).size() << ")\n";
        for (auto& entry : lex.at(category)) {
            std::cout << "  " << entry.surface;
            if (entry.abbrev) std::cout << "  [exact-case]";
            std::cout << "\n";
        }
    }
    if (!a.category.empty()) lex.at(a.category);  // unknown category → error
}

// --- context test ------------------------------------------------------------

struct ContextArgs {
    std::string sentence;
    std::string category;
    std::string lexicon_path;
    std::string rules_path;
};

void cmd_context_test(const ContextArgs& a) {
    const auto lex = lexicon::load_lexicon(opt_path(a.lexicon_path));
    const auto rules = context::load_context_rules(opt_path(a.rules_path));
    lexicon::CompiledMatcher matcher(lex);
    corpus::TokenizedSentence ts;
    ts.text = a.sentence;
    ts.tokens = corpus::tokenize_full(a.sentence);
    auto mentions = matcher.find_mentions(ts.tokens);
    if (!a.category.empty()) {
        lex.at(a.category);  // unknown category → error
        std::erase_if(mentions,
                      [&](const lexicon::Mention& m) { return m.category != a.category; });
    }
    const auto assignments = context::apply_context(mentions, ts, rules);
    if (assignments.empty()) {
        std::cout << "no mentions\n";
        return;
    }
    for (auto& a2 : assignments) {
        std::cout << a2.mention.category << " \"" << a2.mention.keyword << "\" tokens["
                  << a2.mention.begin << "," << a2.mention.end << ")";
        if (a2.applied.empty()) {
            std::cout << "  (no modifiers)";
        } else {
            for (auto kind : a2.applied) std::cout << "  " << context::to_string(kind);
        }
        std::cout << "\n";
        for (auto& ev : a2.evidence) {
            std::cout << "    trigger \"" << ev.trigger << "\" [" << ev.begin << "," << ev.end
                      << ") -> " << context::to_string(ev.kind) << "\n";
        }
    }
}

// --- extract ------------------------------------------------------------------

struct ExtractArgs {
    std::string method = "rule";
    std::string corpus_path;
    std::string lexicon_path;
    std::string rules_path;
    std::string out = "predictions.jsonl";
    std::vector<std::string> categories;
    std::string level = "sentence";
};

void cmd_extract(const ExtractArgs& a) {
    if (a.method != "rule") throw Error("extract supports --method rule");
    if (a.level != "sentence" && a.level != "note") {
        throw Error("--level must be 'sentence' or 'note'");
    }
    const auto lex = lexicon::load_lexicon(opt_path(a.lexicon_path));
    const auto ctx_rules = context::load_context_rules(opt_path(a.rules_path));
    std::vector<std::string> categories = a.categories;
    if (categories.empty()) categories = lexicon::core_categories();
    for (auto& c : categories) lex.at(c);
    lexicon::CompiledMatcher matcher(lex);

    const auto notes = corpus::load_corpus(a.corpus_path);
    std::vector<corpus::Prediction> preds;
    for (auto& note : notes) {
        const auto decisions =
            a.level == "note"
                ? rules::extract_note(matcher, ctx_rules, note, categories)
                : rules::extract_note_sentences(matcher, ctx_rules, note, categories);
        for (auto& d : decisions) preds.push_back(rules::to_prediction(d));
    }
    corpus::save_predictions(preds, a.out);
    std::cout << "wrote " << preds.size() << " predictions to " << a.out << "\n";
}

// --- train / predict ------------------------------------------------------------

struct TrainArgs {
    std::string corpus_path;
    std::string gold_path;
    std::vector<std::string> categories;
    std::vector<std::string> algorithms = {"lr", "svm", "rf"};
    std::string out_dir = "models";
    std::uint64_t seed = 0;
    double learning_rate = 0.1;
    std::size_t epochs = 500;
    double l2_lambda = 1e-3;
    bool no_balance = false;
};

void cmd_train(const TrainArgs& a) {
    const auto notes = corpus::load_corpus(a.corpus_path);
    const auto gold = corpus::load_gold(a.gold_path);
    std::vector<std::string> categories = a.categories;
    if (categories.empty()) categories = lexicon::core_categories();

    std::map<std::string, std::map<std::pair<std::string, std::size_t>, bool>> labels;
    for (auto& g : gold) {
        if (!g.sentence_index) continue;
        labels[g.category][{g.note_id, *g.sentence_index}] = g.label;
    }
    std::map<std::string,
             std::pair<std::vector<std::vector<std::string>>, std::vector<bool>>>
        per_category;
    for (auto& note : notes) {
        for (auto& ts : corpus::analyze_note(note)) {
            for (auto& category : categories) {
                auto cat_it = labels.find(category);
                if (cat_it == labels.end()) continue;
                auto it = cat_it->second.find({ts.note_id, ts.index});
                if (it == cat_it->second.end()) continue;
                auto& [docs, y] = per_category[category];
                docs.push_back(corpus::tokenize(ts.text));
                y.push_back(it->second);
            }
        }
    }
    for (auto& category : categories) {
        if (!per_category.count(category)) {
            throw Error("no sentence-level gold rows for category '" + category + "'");
        }
    }
    std::vector<classify::Algorithm> algorithms;
    for (auto& s : a.algorithms) algorithms.push_back(classify::algorithm_from_string(s));
    classify::TrainConfig cfg;
    cfg.seed = a.seed;
    cfg.learning_rate = a.learning_rate;
    cfg.epochs = a.epochs;
    cfg.l2_lambda = a.l2_lambda;
    cfg.balanced = !a.no_balance;
    const auto grid = pipeline::train_all(per_category, algorithms, cfg, a.out_dir);
    for (auto& f : grid.model_files) std::cout << "wrote " << f << "\n";
    for (auto& s : grid.skipped) std::cout << "skipped " << s << "\n";
    std::cout << grid.model_files.size() << " model files, " << grid.skipped.size()
              << " skipped\n";
}

struct PredictArgs {
    std::string model_path;
    std::string corpus_path;
    std::string sentence;
    std::string out = "predictions.jsonl";
};

void cmd_predict(const PredictArgs& a) {
    const auto bundle = pipeline::load_bundle(a.model_path);
    if (!a.sentence.empty()) {
        auto [label, score] = pipeline::predict_one(bundle, corpus::tokenize(a.sentence));
        std::cout << bundle.category << ": " << (label ? "positive" : "negative")
                  << " (score " << score << ")\n";
        return;
    }
    if (a.corpus_path.empty()) throw Error("predict needs --corpus or --sentence");
    const auto notes = corpus::load_corpus(a.corpus_path);
    std::vector<corpus::Prediction> preds;
    for (auto& note : notes) {
        for (auto& ts : corpus::analyze_note(note)) {
            auto [label, score] = pipeline::predict_one(bundle, corpus::tokenize(ts.text));
            corpus::Prediction p;
            p.note_id = ts.note_id;
            p.sentence_index = ts.index;
            p.category = bundle.category;
            p.label = label;
            p.score = score;
            preds.push_back(std::move(p));
        }
    }
    corpus::save_predictions(preds, a.out);
    std::cout << "wrote " << preds.size() << " predictions to " << a.out << "\n";
}

// --- prompt build / run -----------------------------------------------------

struct PromptArgs {
    std::string category = "heart_failure";
    std::string lexicon_path;
    std::string prompt_file;
    std::string examples_path;
    std::string sentence;
    std::string units_path;
    std::string endpoint_path;
    std::string out;
    bool mock = false;
    std::size_t parallelism = 4;
};

std::unique_ptr<llm::ChatClient> make_client(const PromptArgs& a) {
    if (!a.endpoint_path.empty()) {
        return std::make_unique<llm::HttpChatClient>(
            llm::endpoint_config_from_json(load_json_file(a.endpoint_path)));
    }
    if (!a.mock) {
        throw Error("prompt run needs --endpoint <config.json> or --mock");
    }
    return std::make_unique<llm::MockChatClient>();
}

void cmd_prompt_build(const PromptArgs& a) {
    const auto lex = lexicon::load_lexicon(opt_path(a.lexicon_path));
    std::string prompt = llm::build_zero_shot_prompt(a.category, lex);
    if (!a.examples_path.empty()) {
        std::vector<llm::CotExample> examples;
        for (auto& j : load_json_file(a.examples_path)) {
            examples.push_back(llm::cot_example_from_json(j));
        }
        prompt = llm::build_error_analysis_prompt(prompt, examples);
    }
    if (a.out.empty()) {
        std::cout << prompt << "\n";
    } else {
        llm::save_text(prompt, a.out);
        std::cout << "wrote prompt to " << a.out << "\n";
    }
}

void cmd_prompt_run(const PromptArgs& a) {
    std::string prompt;
    if (!a.prompt_file.empty()) {
        prompt = llm::load_text(a.prompt_file);
    } else {
        prompt = llm::build_zero_shot_prompt(a.category,
                                             lexicon::load_lexicon(opt_path(a.lexicon_path)));
    }
    auto client = make_client(a);
    if (!a.sentence.empty()) {
        const auto r = llm::classify_sentence(*client, prompt, a.sentence);
        if (r.parsed_label) {
            std::cout << (*r.parsed_label ? "yes" : "no") << ": " << r.explanation << "\n";
        } else {
            std::cout << "unparseable: " << r.raw << "\n";
        }
        return;
    }
    if (a.units_path.empty()) throw Error("prompt run needs --sentence or --units");
    const auto units = llm::load_llm_units(a.units_path);
    const auto preds = llm::classify_batch(*client, prompt, units, a.parallelism);
    const std::string out = a.out.empty() ? "llm_predictions.jsonl" : a.out;
    llm::save_llm_predictions(preds, out);
    std::cout << "wrote " << preds.size() << " predictions to " << out << "\n";
}

// --- errors collect / cot draft ----------------------------------------------

struct ErrorsArgs {
    std::string pred_path;
    std::string category;
    std::string out = "errors.json";
};

void cmd_errors_collect(const ErrorsArgs& a) {
    const auto preds = llm::load_llm_predictions(a.pred_path);
    std::vector<llm::LlmUnit> units;
    for (auto& p : preds) units.push_back({p.unit_id, p.sentence, p.gold});
    const auto errors = llm::collect_errors(units, preds, a.category);
    nlohmann::json arr = nlohmann::json::array();
    for (auto& e : errors) arr.push_back(llm::error_case_to_json(e));
    llm::save_text(arr.dump(2) + "\n", a.out);
    std::cout << "wrote " << errors.size() << " error cases to " << a.out << "\n";
}

struct CotArgs {
    std::string errors_path;
    std::string lexicon_path;
    std::string out = "cot_examples.json";
};

void cmd_cot_draft(const CotArgs& a) {
    const auto lex = lexicon::load_lexicon(opt_path(a.lexicon_path));
    lexicon::CompiledMatcher matcher(lex);
    nlohmann::json arr = nlohmann::json::array();
    for (auto& j : load_json_file(a.errors_path)) {
        const auto error = llm::error_case_from_json(j);
        arr.push_back(llm::cot_example_to_json(llm::draft_cot_example(error, lex, matcher)));
    }
    llm::save_text(arr.dump(2) + "\n", a.out);
    std::cout << "wrote " << arr.size() << " reasoning examples to " << a.out << "\n";
}

// --- eval / report merge -----------------------------------------------------

struct EvalArgs {
    std::string pred_path;
    std::string gold_path;
    std::string out = "report.csv";
    std::string method = "pred";
};

void cmd_eval(const EvalArgs& a) {
    const auto preds = corpus::load_predictions(a.pred_path);
    const auto gold = corpus::load_gold(a.gold_path);
    std::map<std::tuple<std::string, long long, std::string>, bool> gold_by_key;
    for (auto& g : gold) {
        const long long sidx = g.sentence_index ? static_cast<long long>(*g.sentence_index) : -1;
        gold_by_key[{g.note_id, sidx, g.category}] = g.label;
    }
    std::map<std::string, std::pair<std::vector<bool>, std::vector<bool>>> per_category;
    std::size_t unmatched = 0;
    for (auto& p : preds) {
        const long long sidx = p.sentence_index ? static_cast<long long>(*p.sentence_index) : -1;
        auto it = gold_by_key.find({p.note_id, sidx, p.category});
        if (it == gold_by_key.end()) {
            ++unmatched;
            continue;
        }
        per_category[p.category].first.push_back(p.label);
        per_category[p.category].second.push_back(it->second);
    }
    if (per_category.empty()) throw Error("no predictions matched a gold row");
    eval::MetricsReport report;
    for (auto& [category, pg] : per_category) {
        report.per_category[category] =
            eval::category_metrics(eval::confusion(pg.first, pg.second));
    }
    eval::ComparisonTable table;
    table[a.method] = report;
    llm::save_text(eval::comparison_to_csv(table), a.out);
    std::cout << eval::comparison_to_text(table);
    if (unmatched > 0) {
        std::cout << "note: " << unmatched << " predictions had no gold row and were ignored\n";
    }
    std::cout << "wrote " << a.out << "\n";
}

struct MergeArgs {
    std::string base_path;
    std::vector<std::string> external;
    std::string out = "merged.csv";
};

void cmd_report_merge(const MergeArgs& a) {
    std::ifstream base_in(a.base_path);
    if (!base_in) throw Error("cannot open report: " + a.base_path);
    eval::ComparisonTable table = eval::parse_comparison_csv(base_in, a.base_path);
    for (auto& path : a.external) {
        std::ifstream in(path);
        if (!in) throw Error("cannot open report: " + path);
        table = eval::merge_comparison(table, eval::parse_comparison_csv(in, path));
    }
    llm::save_text(eval::comparison_to_csv(table), a.out);
    std::cout << "merged " << (1 + a.external.size()) << " reports into " << a.out << "\n";
}

// --- run -----------------------------------------------------------------------

struct RunArgs {
    std::string config_path;
    std::string corpus_path;
    std::string gold_path;
    std::string lexicon_path;
    std::string rules_path;
    std::string out_dir;
    std::vector<std::string> methods;
    std::vector<std::string> categories;
    double ratio = -1.0;
    long long seed = -1;
};

void cmd_run(const RunArgs& a) {
    pipeline::RunConfig config;
    if (!a.config_path.empty()) {
        config = pipeline::run_config_from_json(load_json_file(a.config_path));
    }
    if (!a.corpus_path.empty()) config.corpus_path = a.corpus_path;
    if (!a.gold_path.empty()) config.gold_path = a.gold_path;
    if (!a.lexicon_path.empty()) config.lexicon_path = a.lexicon_path;
    if (!a.rules_path.empty()) config.context_rules_path = a.rules_path;
    if (!a.out_dir.empty()) config.out_dir = a.out_dir;
    if (!a.methods.empty()) config.methods = a.methods;
    if (!a.categories.empty()) config.categories = a.categories;
    if (a.ratio > 0.0) config.split_ratio = a.ratio;
    if (a.seed >= 0) config.seed = static_cast<std::uint64_t>(a.seed);
    if (config.corpus_path.empty() || config.gold_path.empty()) {
        throw Error("run needs --corpus and --gold (or a config file providing them)");
    }
    const auto result = pipeline::run_pipeline(config);
    std::cout << llm::load_text(result.report_text_path);
    for (auto& w : result.warnings) std::cout << "warning: " << w << "\n";
    for (auto& s : result.skipped) std::cout << "skipped: " << s << "\n";
    std::cout << "report: " << result.report_csv_path << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Clinical-text extraction toolkit for fluoropyrimidine treatment and "
                 "toxicity mentions"};
    app.require_subcommand(1);

    SynthArgs synth_args;
    LexiconArgs lexicon_args;
    ContextArgs context_args;
    ExtractArgs extract_args;
    TrainArgs train_args;
    PredictArgs predict_args;
    PromptArgs prompt_args;
    ErrorsArgs errors_args;
    CotArgs cot_args;
    EvalArgs eval_args;
    MergeArgs merge_args;
    RunArgs run_args;

    auto* corpus_cmd = app.add_subcommand("corpus", "Corpus utilities");
    corpus_cmd->require_subcommand(1);
    auto* synth = corpus_cmd->add_subcommand("synth", "Generate a synthetic corpus");
    synth->add_option("--n", synth_args.n, "Number of notes");
    synth->add_option("--seed", synth_args.seed, "Generator seed");
    synth->add_option("--spec", synth_args.spec_path,
                      "JSON map of category -> prevalence (default: built-in demo mix)");
    synth->add_option("--lexicon", synth_args.lexicon_path, "Lexicon JSON (default: built-in)");
    synth->add_option("--out", synth_args.out, "Corpus output path");
    synth->add_option("--gold", synth_args.gold, "Gold output path");
    synth->callback([&] { cmd_corpus_synth(synth_args); });

    auto* lexicon_cmd = app.add_subcommand("lexicon", "Lexicon utilities");
    lexicon_cmd->require_subcommand(1);
    auto* lex_validate = lexicon_cmd->add_subcommand(
        "validate", "Check that every keyword matches in isolation");
    lex_validate->add_option("--lexicon", lexicon_args.lexicon_path,
                             "Lexicon JSON (default: built-in)");
    lex_validate->callback([&] { cmd_lexicon_validate(lexicon_args); });
    auto* lex_show = lexicon_cmd->add_subcommand("show", "Print categories and keywords");
    lex_show->add_option("--lexicon", lexicon_args.lexicon_path,
                         "Lexicon JSON (default: built-in)");
    lex_show->add_option("--category", lexicon_args.category, "Only this category");
    lex_show->callback([&] { cmd_lexicon_show(lexicon_args); });

    auto* context_cmd = app.add_subcommand("context", "Context-rule utilities");
    context_cmd->require_subcommand(1);
    auto* ctx_test = context_cmd->add_subcommand(
        "test", "Show mentions and context modifiers for one sentence");
    ctx_test->add_option("--sentence", context_args.sentence, "Sentence text")->required();
    ctx_test->add_option("--category", context_args.category,
                         "Only show mentions of this category");
    ctx_test->add_option("--lexicon", context_args.lexicon_path,
                         "Lexicon JSON (default: built-in)");
    ctx_test->add_option("--rules", context_args.rules_path,
                         "Context rules JSON (default: built-in)");
    ctx_test->callback([&] { cmd_context_test(context_args); });

    auto* extract = app.add_subcommand("extract", "Rule-based extraction over a corpus");
    extract->add_option("--method", extract_args.method, "Extraction method (rule)");
    extract->add_option("--corpus", extract_args.corpus_path, "Corpus JSONL")->required();
    extract->add_option("--lexicon", extract_args.lexicon_path,
                        "Lexicon JSON (default: built-in)");
    extract->add_option("--rules", extract_args.rules_path,
                        "Context rules JSON (default: built-in)");
    extract->add_option("--categories", extract_args.categories,
                        "Categories (default: core five)");
    extract->add_option("--level", extract_args.level, "sentence or note");
    extract->add_option("--out", extract_args.out, "Predictions output path");
    extract->callback([&] { cmd_extract(extract_args); });

    auto* train = app.add_subcommand("train", "Train the category x algorithm model grid");
    train->add_option("--corpus", train_args.corpus_path, "Corpus JSONL")->required();
    train->add_option("--gold", train_args.gold_path, "Gold JSONL")->required();
    train->add_option("--categories", train_args.categories,
                      "Categories (default: core five)");
    train->add_option("--algorithms", train_args.algorithms,
                      "Algorithms: lr, svm, rf (default all)");
    train->add_option("--out-dir", train_args.out_dir, "Model output directory");
    train->add_option("--seed", train_args.seed, "Training seed");
    train->add_option("--learning-rate", train_args.learning_rate, "Gradient step size");
    train->add_option("--epochs", train_args.epochs, "Full-batch epochs");
    train->add_option("--l2", train_args.l2_lambda, "L2 regularization strength");
    train->add_flag("--no-balance", train_args.no_balance, "Disable class weighting");
    train->callback([&] { cmd_train(train_args); });

    auto* predict = app.add_subcommand("predict", "Apply a saved model");
    predict->add_option("--model", predict_args.model_path, "Model bundle JSON")->required();
    predict->add_option("--corpus", predict_args.corpus_path, "Corpus JSONL");
    predict->add_option("--sentence", predict_args.sentence, "Classify one sentence");
    predict->add_option("--out", predict_args.out, "Predictions output path");
    predict->callback([&] { cmd_predict(predict_args); });

    auto* prompt_cmd = app.add_subcommand("prompt", "Prompt utilities");
    prompt_cmd->require_subcommand(1);
    auto* prompt_build = prompt_cmd->add_subcommand("build", "Print or save a prompt");
    prompt_build->add_option("--category", prompt_args.category, "Target category");
    prompt_build->add_option("--lexicon", prompt_args.lexicon_path,
                             "Lexicon JSON (default: built-in)");
    prompt_build->add_option("--examples", prompt_args.examples_path,
                             "Reasoning examples JSON (switches to the enhanced prompt)");
    prompt_build->add_option("--out", prompt_args.out, "Write prompt here instead of stdout");
    prompt_build->callback([&] { cmd_prompt_build(prompt_args); });
    auto* prompt_run = prompt_cmd->add_subcommand("run", "Classify sentences with a prompt");
    prompt_run->add_option("--category", prompt_args.category, "Target category");
    prompt_run->add_option("--lexicon", prompt_args.lexicon_path,
                           "Lexicon JSON (default: built-in)");
    prompt_run->add_option("--prompt-file", prompt_args.prompt_file,
                           "Use this prompt text instead of building one");
    prompt_run->add_option("--sentence", prompt_args.sentence, "Classify one sentence");
    prompt_run->add_option("--units", prompt_args.units_path,
                           "JSONL of {unit_id, sentence, gold} records");
    prompt_run->add_option("--endpoint", prompt_args.endpoint_path,
                           "Endpoint config JSON (live HTTP)");
    prompt_run->add_flag("--mock", prompt_args.mock, "Use the deterministic built-in endpoint");
    prompt_run->add_option("--parallelism", prompt_args.parallelism, "Concurrent requests");
    prompt_run->add_option("--out", prompt_args.out, "Predictions output path");
    prompt_run->callback([&] { cmd_prompt_run(prompt_args); });

    auto* errors_cmd = app.add_subcommand("errors", "Error-analysis utilities");
    errors_cmd->require_subcommand(1);
    auto* errors_collect = errors_cmd->add_subcommand(
        "collect", "Catalog misclassifications from an LLM prediction file");
    errors_collect->add_option("--pred", errors_args.pred_path, "LLM predictions JSONL")
        ->required();
    errors_collect->add_option("--category", errors_args.category, "Category label")
        ->required();
    errors_collect->add_option("--out", errors_args.out, "Error cases output path");
    errors_collect->callback([&] { cmd_errors_collect(errors_args); });

    auto* cot_cmd = app.add_subcommand("cot", "Reasoning-example utilities");
    cot_cmd->require_subcommand(1);
    auto* cot_draft = cot_cmd->add_subcommand("draft",
                                              "Draft four-step examples from error cases");
    cot_draft->add_option("--errors", cot_args.errors_path, "Error cases JSON")->required();
    cot_draft->add_option("--lexicon", cot_args.lexicon_path,
                          "Lexicon JSON (default: built-in)");
    cot_draft->add_option("--out", cot_args.out, "Examples output path");
    cot_draft->callback([&] { cmd_cot_draft(cot_args); });

    auto* eval_cmd = app.add_subcommand("eval", "Score predictions against gold labels");
    eval_cmd->add_option("--pred", eval_args.pred_path, "Predictions JSONL")->required();
    eval_cmd->add_option("--gold", eval_args.gold_path, "Gold JSONL")->required();
    eval_cmd->add_option("--out", eval_args.out, "Report CSV output path");
    eval_cmd->add_option("--method", eval_args.method, "Method name for the report row");
    eval_cmd->callback([&] { cmd_eval(eval_args); });

    auto* report_cmd = app.add_subcommand("report", "Report utilities");
    report_cmd->require_subcommand(1);
    auto* merge = report_cmd->add_subcommand("merge", "Merge externally reported results");
    merge->add_option("--base", merge_args.base_path, "Base report CSV")->required();
    merge->add_option("--external", merge_args.external, "External report CSVs")->required();
    merge->add_option("--out", merge_args.out, "Merged report output path");
    merge->callback([&] { cmd_report_merge(merge_args); });

    auto* run = app.add_subcommand("run", "Full pipeline: split, train, extract, prompt, score");
    run->add_option("--config", run_args.config_path, "Run config JSON");
    run->add_option("--corpus", run_args.corpus_path, "Corpus JSONL");
    run->add_option("--gold", run_args.gold_path, "Gold JSONL");
    run->add_option("--lexicon", run_args.lexicon_path, "Lexicon JSON (default: built-in)");
    run->add_option("--rules", run_args.rules_path, "Context rules JSON (default: built-in)");
    run->add_option("--out-dir", run_args.out_dir, "Artifact directory");
    run->add_option("--methods", run_args.methods,
                    "Methods: rule, lr, svm, rf, zero_shot, error_analysis");
    run->add_option("--categories", run_args.categories, "Categories (default: core five)");
    run->add_option("--ratio", run_args.ratio, "Train fraction (0,1)");
    run->add_option("--seed", run_args.seed, "Split/training seed");
    run->callback([&] { cmd_run(run_args); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    } catch (const fptox::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
