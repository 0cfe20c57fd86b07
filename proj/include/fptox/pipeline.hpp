#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "fptox/classifiers.hpp"
#include "fptox/context.hpp"
#include "fptox/corpus.hpp"
#include "fptox/error.hpp"
#include "fptox/eval.hpp"
#include "fptox/features.hpp"
#include "fptox/lexicon.hpp"
#include "fptox/llm.hpp"
#include "fptox/rng.hpp"
#include "fptox/rule_engine.hpp"

namespace fptox::pipeline {

// ---------------------------------------------------------------------------
// Model bundle: featurizer + classifier in one file, so `predict` needs
// nothing but the bundle and raw sentences.

struct ModelBundle {
    std::string category;
    classify::Algorithm algorithm = classify::Algorithm::logistic;
    std::string features_kind;  // "tfidf" (linear models) or "counts" (forest)
    std::optional<features::TfidfModel> tfidf;
    std::optional<features::Vocabulary> counts;
    std::optional<classify::LinearModel> linear;
    std::optional<classify::ForestModel> forest;
};

inline std::string algorithm_label(classify::Algorithm a) {
    switch (a) {
        case classify::Algorithm::logistic: return "lr";
        case classify::Algorithm::svm: return "svm";
        case classify::Algorithm::forest: return "rf";
    }
    return "lr";
}

inline features::SparseVector featurize(const ModelBundle& bundle,
                                        const std::vector<std::string>& tokens) {
    if (bundle.features_kind == "tfidf") {
        if (!bundle.tfidf) throw Error("model bundle: missing tf-idf featurizer");
        return features::transform_tfidf(*bundle.tfidf, tokens);
    }
    if (!bundle.counts) throw Error("model bundle: missing count featurizer");
    return features::transform_counts(*bundle.counts, tokens);
}

inline std::pair<bool, double> predict_one(const ModelBundle& bundle,
                                           const std::vector<std::string>& tokens) {
    const std::vector<features::SparseVector> X{featurize(bundle, tokens)};
    if (bundle.algorithm == classify::Algorithm::forest) {
        if (!bundle.forest) throw Error("model bundle: missing forest model");
        return classify::predict(*bundle.forest, X)[0];
    }
    if (!bundle.linear) throw Error("model bundle: missing linear model");
    return classify::predict(*bundle.linear, X)[0];
}

inline ModelBundle train_bundle(const std::string& category, classify::Algorithm algorithm,
                                const std::vector<std::vector<std::string>>& docs,
                                const std::vector<bool>& labels,
                                const classify::TrainConfig& base_cfg,
                                std::pair<std::size_t, std::size_t> ngram_range = {1, 2}) {
    ModelBundle bundle;
    bundle.category = category;
    bundle.algorithm = algorithm;
    classify::TrainConfig cfg = base_cfg;
    cfg.algorithm = algorithm;

    std::vector<features::SparseVector> X;
    X.reserve(docs.size());
    if (algorithm == classify::Algorithm::forest) {
        bundle.features_kind = "counts";
        bundle.counts = features::fit_counts(docs, ngram_range);
        for (auto& d : docs) X.push_back(features::transform_counts(*bundle.counts, d));
        bundle.forest = classify::train_forest(X, labels, cfg);
        bundle.forest->trained_for = category;
    } else {
        bundle.features_kind = "tfidf";
        bundle.tfidf = features::fit_tfidf(docs, ngram_range);
        for (auto& d : docs) X.push_back(features::transform_tfidf(*bundle.tfidf, d));
        bundle.linear = algorithm == classify::Algorithm::logistic
                            ? classify::train_logistic(X, labels, cfg)
                            : classify::train_svm(X, labels, cfg);
        bundle.linear->trained_for = category;
    }
    return bundle;
}

inline nlohmann::json bundle_to_json(const ModelBundle& bundle) {
    nlohmann::json j;
    j["category"] = bundle.category;
    j["algorithm"] = algorithm_label(bundle.algorithm);
    j["features"] = {{"kind", bundle.features_kind}};
    if (bundle.features_kind == "tfidf") {
        j["features"]["tfidf"] = features::tfidf_to_json(*bundle.tfidf);
    } else {
        j["features"]["counts"] = features::vocabulary_to_json(*bundle.counts);
    }
    j["model"] = bundle.algorithm == classify::Algorithm::forest
                     ? classify::forest_to_json(*bundle.forest)
                     : classify::linear_to_json(*bundle.linear);
    return j;
}

inline ModelBundle bundle_from_json(const nlohmann::json& j) {
    ModelBundle bundle;
    bundle.category = j.at("category").get<std::string>();
    bundle.algorithm = classify::algorithm_from_string(j.at("algorithm").get<std::string>());
    const auto& f = j.at("features");
    bundle.features_kind = f.at("kind").get<std::string>();
    if (bundle.features_kind == "tfidf") {
        bundle.tfidf = features::tfidf_from_json(f.at("tfidf"));
    } else if (bundle.features_kind == "counts") {
        bundle.counts = features::vocabulary_from_json(f.at("counts"));
    } else {
        throw Error("model bundle: unknown featurizer kind '" + bundle.features_kind + "'");
    }
    if (bundle.algorithm == classify::Algorithm::forest) {
        bundle.forest = classify::forest_from_json(j.at("model"));
    } else {
        bundle.linear = classify::linear_from_json(j.at("model"));
    }
    return bundle;
}

inline void save_bundle(const ModelBundle& bundle, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write model file: " + path);
    out << bundle_to_json(bundle).dump(2) << "\n";
}

inline ModelBundle load_bundle(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open model file: " + path);
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw Error("model file is not valid JSON: " + path);
    return bundle_from_json(j);
}

// ---------------------------------------------------------------------------
// Training grid: every requested category × algorithm. Categories whose
// training labels are single-class are skipped with a reason, not fatal.

struct TrainGridResult {
    std::vector<std::string> model_files;
    std::vector<ModelBundle> bundles;
    std::vector<std::string> skipped;  // "category/algorithm: reason"
};

inline TrainGridResult train_all(
    const std::map<std::string, std::pair<std::vector<std::vector<std::string>>,
                                          std::vector<bool>>>& per_category,
    const std::vector<classify::Algorithm>& algorithms,
    const classify::TrainConfig& base_cfg, const std::string& model_dir,
    std::pair<std::size_t, std::size_t> ngram_range = {1, 2}) {
    std::filesystem::create_directories(model_dir);
    TrainGridResult result;
    for (auto& [category, data] : per_category) {
        const auto& [docs, labels] = data;
        for (auto algorithm : algorithms) {
            const std::string name = category + "_" + algorithm_label(algorithm);
            try {
                classify::TrainConfig cfg = base_cfg;
                cfg.seed = mix_seed(base_cfg.seed, "train-" + category);
                ModelBundle bundle = train_bundle(category, algorithm, docs, labels, cfg,
                                                  ngram_range);
                const std::string path = model_dir + "/" + name + ".json";
                save_bundle(bundle, path);
                result.model_files.push_back(path);
                result.bundles.push_back(std::move(bundle));
            } catch (const Error& e) {
                result.skipped.push_back(name + ": " + e.what());
            }
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// Full run configuration

inline const std::vector<std::string>& all_methods() {
    static const std::vector<std::string> methods = {"rule", "lr",        "svm",
                                                     "rf",   "zero_shot", "error_analysis"};
    return methods;
}

struct RunConfig {
    std::string corpus_path;
    std::string gold_path;
    std::optional<std::string> lexicon_path;
    std::optional<std::string> context_rules_path;
    std::string out_dir = "out";
    double split_ratio = 0.8;
    std::uint64_t seed = 42;
    std::string unit = "sentence";  // or "note"
    std::vector<std::string> methods = all_methods();
    std::vector<std::string> categories = lexicon::core_categories();
    classify::TrainConfig train;
    std::pair<std::size_t, std::size_t> ngram_range{1, 2};
    rules::SuppressionPolicy policy;
    bool mock_llm = true;
    std::size_t llm_example_cap = 4;
    bool llm_fallback_label = false;
    std::size_t llm_parallelism = 4;
    llm::LlmEndpointConfig endpoint;
};

inline RunConfig run_config_from_json(const nlohmann::json& j) {
    RunConfig c;
    c.corpus_path = j.value("corpus", std::string());
    c.gold_path = j.value("gold", std::string());
    if (j.contains("lexicon") && !j["lexicon"].is_null()) {
        c.lexicon_path = j["lexicon"].get<std::string>();
    }
    if (j.contains("context_rules") && !j["context_rules"].is_null()) {
        c.context_rules_path = j["context_rules"].get<std::string>();
    }
    c.out_dir = j.value("out_dir", c.out_dir);
    c.split_ratio = j.value("ratio", c.split_ratio);
    c.seed = j.value("seed", c.seed);
    c.unit = j.value("unit", c.unit);
    if (j.contains("methods")) c.methods = j["methods"].get<std::vector<std::string>>();
    if (j.contains("categories")) {
        c.categories = j["categories"].get<std::vector<std::string>>();
    }
    if (j.contains("train")) {
        const auto& t = j["train"];
        c.train.learning_rate = t.value("learning_rate", c.train.learning_rate);
        c.train.epochs = t.value("epochs", c.train.epochs);
        c.train.l2_lambda = t.value("l2_lambda", c.train.l2_lambda);
        c.train.balanced = t.value("balanced", c.train.balanced);
        if (t.contains("forest")) {
            const auto& f = t["forest"];
            c.train.forest.n_trees = f.value("n_trees", c.train.forest.n_trees);
            c.train.forest.max_depth = f.value("max_depth", c.train.forest.max_depth);
            c.train.forest.min_samples_leaf =
                f.value("min_samples_leaf", c.train.forest.min_samples_leaf);
            c.train.forest.max_features = f.value("max_features", c.train.forest.max_features);
            c.train.forest.bootstrap = f.value("bootstrap", c.train.forest.bootstrap);
        }
    }
    if (j.contains("ngram")) {
        auto r = j["ngram"].get<std::vector<std::size_t>>();
        if (r.size() != 2) throw Error("run config: 'ngram' must be [lo, hi]");
        c.ngram_range = {r[0], r[1]};
    }
    if (j.contains("suppress")) {
        c.policy.suppressed.clear();
        for (auto& s : j["suppress"]) {
            c.policy.suppressed.insert(
                context::context_kind_from_string(s.get<std::string>()));
        }
    }
    if (j.contains("llm")) {
        const auto& l = j["llm"];
        c.mock_llm = l.value("mock", c.mock_llm);
        c.llm_example_cap = l.value("example_cap", c.llm_example_cap);
        c.llm_fallback_label = l.value("fallback", c.llm_fallback_label);
        c.llm_parallelism = l.value("parallelism", c.llm_parallelism);
        if (l.contains("endpoint")) c.endpoint = llm::endpoint_config_from_json(l["endpoint"]);
    }
    return c;
}

inline nlohmann::json run_config_to_json(const RunConfig& c) {
    nlohmann::json j;
    j["corpus"] = c.corpus_path;
    j["gold"] = c.gold_path;
    j["lexicon"] = c.lexicon_path ? nlohmann::json(*c.lexicon_path) : nlohmann::json();
    j["context_rules"] =
        c.context_rules_path ? nlohmann::json(*c.context_rules_path) : nlohmann::json();
    j["out_dir"] = c.out_dir;
    j["ratio"] = c.split_ratio;
    j["seed"] = c.seed;
    j["unit"] = c.unit;
    j["methods"] = c.methods;
    j["categories"] = c.categories;
    j["train"] = {{"learning_rate", c.train.learning_rate},
                  {"epochs", c.train.epochs},
                  {"l2_lambda", c.train.l2_lambda},
                  {"balanced", c.train.balanced},
                  {"forest",
                   {{"n_trees", c.train.forest.n_trees},
                    {"max_depth", c.train.forest.max_depth},
                    {"min_samples_leaf", c.train.forest.min_samples_leaf},
                    {"max_features", c.train.forest.max_features},
                    {"bootstrap", c.train.forest.bootstrap}}}};
    j["ngram"] = {c.ngram_range.first, c.ngram_range.second};
    nlohmann::json suppressed = nlohmann::json::array();
    for (auto k : c.policy.suppressed) suppressed.push_back(context::to_string(k));
    j["suppress"] = suppressed;
    j["llm"] = {{"mock", c.mock_llm},
                {"example_cap", c.llm_example_cap},
                {"fallback", c.llm_fallback_label},
                {"parallelism", c.llm_parallelism}};
    return j;
}

struct PipelineResult {
    eval::ComparisonTable table;
    std::string report_csv_path;
    std::string report_text_path;
    std::vector<std::string> model_files;
    std::vector<std::string> skipped;
    std::vector<std::string> warnings;
};

namespace detail {

struct CategoryData {
    corpus::DatasetSplit<corpus::LabeledSentence> split;
};

// gold lookup key: note, sentence index (-1 = note level), category
using GoldKey = std::tuple<std::string, long long, std::string>;

inline std::map<GoldKey, bool> gold_index(const std::vector<corpus::GoldAnnotation>& gold) {
    std::map<GoldKey, bool> index;
    for (auto& g : gold) {
        const long long sidx = g.sentence_index ? static_cast<long long>(*g.sentence_index) : -1;
        index[{g.note_id, sidx, g.category}] = g.label;
    }
    return index;
}

inline eval::ConfusionCounts confusion_of(const std::vector<bool>& pred,
                                          const std::vector<bool>& gold) {
    return eval::confusion(pred, gold);
}

}  // namespace detail

// End-to-end run: split → per-method train/extract/prompt → predict →
// evaluate → comparison report. Every stage failure surfaces as a StageError
// naming the stage. `client` overrides the LLM transport (tests inject a
// seeded mock); when null, a plain mock or an HTTP client is built from the
// config.
inline PipelineResult run_pipeline(const RunConfig& config,
                                   llm::ChatClient* client = nullptr) {
    namespace fs = std::filesystem;
    PipelineResult result;

    for (auto& m : config.methods) {
        if (std::find(all_methods().begin(), all_methods().end(), m) == all_methods().end()) {
            throw StageError("config", "unknown method '" + m + "'");
        }
    }
    if (config.unit != "sentence" && config.unit != "note") {
        throw StageError("config", "unit must be 'sentence' or 'note'");
    }
    try {
        fs::create_directories(config.out_dir);
    } catch (const std::exception& e) {
        throw StageError("config", std::string("cannot create output directory: ") + e.what());
    }

    // --- corpus ---
    std::vector<corpus::ClinicalNote> notes;
    std::vector<corpus::GoldAnnotation> gold;
    try {
        notes = corpus::load_corpus(config.corpus_path);
        gold = corpus::load_gold(config.gold_path);
    } catch (const Error& e) {
        throw StageError("corpus", e.what());
    }

    // --- lexicon ---
    lexicon::Lexicon lex;
    std::optional<lexicon::CompiledMatcher> matcher;
    try {
        lex = lexicon::load_lexicon(config.lexicon_path);
        for (auto& c : config.categories) lex.at(c);
        matcher.emplace(lex);
    } catch (const Error& e) {
        throw StageError("lexicon", e.what());
    }

    // --- context ---
    std::vector<context::ContextRule> context_rules;
    try {
        context_rules = context::load_context_rules(config.context_rules_path);
    } catch (const Error& e) {
        throw StageError("context", e.what());
    }

    // --- split ---
    const auto gold_by_key = detail::gold_index(gold);
    std::map<std::string, detail::CategoryData> per_category;
    std::map<std::string, corpus::TokenizedSentence> sentence_lookup;  // note#idx
    try {
        std::vector<corpus::TokenizedSentence> all_sentences;
        for (auto& note : notes) {
            for (auto& ts : corpus::analyze_note(note)) {
                sentence_lookup[ts.note_id + "#" + std::to_string(ts.index)] = ts;
                all_sentences.push_back(ts);
            }
        }
        for (auto& category : config.categories) {
            std::vector<corpus::LabeledSentence> units;
            if (config.unit == "sentence") {
                for (auto& ts : all_sentences) {
                    auto it = gold_by_key.find({ts.note_id,
                                                static_cast<long long>(ts.index), category});
                    if (it == gold_by_key.end()) continue;
                    units.push_back({ts.note_id, ts.index, ts.text, it->second});
                }
            } else {
                for (auto& note : notes) {
                    auto it = gold_by_key.find({note.note_id, -1, category});
                    if (it == gold_by_key.end()) continue;
                    // whole note as one unit; sentence_index 0 is a placeholder
                    units.push_back({note.note_id, 0, note.text, it->second});
                }
            }
            if (units.empty()) {
                throw Error("no gold-labeled units for category '" + category + "'");
            }
            detail::CategoryData data;
            data.split = corpus::stratified_split(units, config.split_ratio,
                                                  mix_seed(config.seed, "split-" + category));
            if (data.split.warning) {
                result.warnings.push_back(category + ": " + *data.split.warning);
            }
            per_category.emplace(category, std::move(data));
        }
    } catch (const Error& e) {
        throw StageError("split", e.what());
    }

    auto unit_tokens = [&](const corpus::LabeledSentence& u) {
        return corpus::tokenize(u.text);
    };
    auto unit_sentence = [&](const corpus::LabeledSentence& u) -> corpus::TokenizedSentence {
        if (config.unit == "sentence") {
            auto it = sentence_lookup.find(u.note_id + "#" + std::to_string(u.sentence_index));
            if (it != sentence_lookup.end()) return it->second;
        }
        corpus::TokenizedSentence ts;
        ts.note_id = u.note_id;
        ts.index = u.sentence_index;
        ts.text = u.text;
        ts.tokens = corpus::tokenize_full(u.text);
        return ts;
    };

    auto selected = [&](const std::string& m) {
        return std::find(config.methods.begin(), config.methods.end(), m) !=
               config.methods.end();
    };

    // predictions[method][category] aligned with per_category split.test order
    std::map<std::string, std::map<std::string, std::vector<bool>>> predictions;
    std::map<std::string, std::vector<corpus::Prediction>> prediction_records;

    auto record = [&](const std::string& method, const std::string& category,
                      const corpus::LabeledSentence& u, bool label,
                      std::optional<double> score, std::optional<std::string> explanation,
                      nlohmann::json evidence) {
        predictions[method][category].push_back(label);
        corpus::Prediction p;
        p.note_id = u.note_id;
        if (config.unit == "sentence") p.sentence_index = u.sentence_index;
        p.category = category;
        p.label = label;
        p.score = score;
        p.explanation = std::move(explanation);
        p.evidence = std::move(evidence);
        prediction_records[method].push_back(std::move(p));
    };

    // --- train (ML methods) ---
    std::vector<classify::Algorithm> algorithms;
    for (auto& m : std::vector<std::string>{"lr", "svm", "rf"}) {
        if (selected(m)) algorithms.push_back(classify::algorithm_from_string(m));
    }
    if (!algorithms.empty()) {
        try {
            std::map<std::string,
                     std::pair<std::vector<std::vector<std::string>>, std::vector<bool>>>
                train_data;
            for (auto& [category, data] : per_category) {
                auto& [docs, labels] = train_data[category];
                for (auto& u : data.split.train) {
                    docs.push_back(unit_tokens(u));
                    labels.push_back(u.label);
                }
            }
            TrainGridResult grid = train_all(train_data, algorithms, config.train,
                                             config.out_dir + "/models", config.ngram_range);
            result.model_files = grid.model_files;
            result.skipped = grid.skipped;
            for (auto& bundle : grid.bundles) {
                const std::string method = algorithm_label(bundle.algorithm);
                for (auto& u : per_category.at(bundle.category).split.test) {
                    auto [label, score] = predict_one(bundle, unit_tokens(u));
                    record(method, bundle.category, u, label, score, std::nullopt, {});
                }
            }
        } catch (const Error& e) {
            throw StageError("train", e.what());
        }
    }

    // --- extract (rule method) ---
    if (selected("rule")) {
        try {
            for (auto& [category, data] : per_category) {
                for (auto& u : data.split.test) {
                    auto decision = rules::classify_sentence_rule(
                        *matcher, context_rules, category, unit_sentence(u), config.policy);
                    record("rule", category, u, decision.label, std::nullopt, std::nullopt,
                           rules::evidence_to_json(decision.evidence));
                }
            }
        } catch (const Error& e) {
            throw StageError("extract", e.what());
        }
    }

    // --- llm (prompting methods) ---
    if (selected("zero_shot") || selected("error_analysis")) {
        try {
            llm::MockChatClient default_mock;
            llm::ChatClient* chat = client;
            if (!chat) {
                if (config.mock_llm) {
                    chat = &default_mock;
                } else {
                    throw Error("live endpoint requested; construct the client via the CLI "
                                "or pass one in");
                }
            }
            const std::string llm_dir = config.out_dir + "/llm";
            fs::create_directories(llm_dir);
            for (auto& [category, data] : per_category) {
                std::vector<llm::LlmUnit> train_units, test_units;
                for (auto& u : data.split.train) {
                    train_units.push_back(
                        {u.note_id + "#" + std::to_string(u.sentence_index), u.text, u.label});
                }
                for (auto& u : data.split.test) {
                    test_units.push_back(
                        {u.note_id + "#" + std::to_string(u.sentence_index), u.text, u.label});
                }
                const std::string zero_shot_prompt = llm::build_zero_shot_prompt(category, lex);
                llm::save_text(zero_shot_prompt, llm_dir + "/" + category +
                                                     "_zero_shot_prompt.txt");

                if (selected("zero_shot")) {
                    const std::string path = llm_dir + "/" + category + "_zero_shot_test.jsonl";
                    std::vector<llm::LlmPrediction> preds;
                    if (fs::exists(path)) {
                        preds = llm::load_llm_predictions(path);
                    } else {
                        preds = llm::classify_batch(*chat, zero_shot_prompt, test_units,
                                                    config.llm_parallelism,
                                                    config.llm_fallback_label);
                        llm::save_llm_predictions(preds, path);
                    }
                    if (preds.size() != data.split.test.size()) {
                        throw Error("stored zero-shot predictions do not match the test split: " +
                                    path);
                    }
                    for (std::size_t i = 0; i < preds.size(); ++i) {
                        record("zero_shot", category, data.split.test[i], preds[i].label,
                               std::nullopt, preds[i].explanation, {});
                    }
                }
                if (selected("error_analysis")) {
                    llm::WorkflowOptions options;
                    options.example_cap = config.llm_example_cap;
                    options.fallback_label = config.llm_fallback_label;
                    options.parallelism = config.llm_parallelism;
                    options.store_dir = llm_dir;
                    options.artifact_prefix = category;
                    auto workflow = llm::run_error_analysis_workflow(train_units, test_units,
                                                                     category, lex, *chat,
                                                                     options);
                    if (workflow.warning) {
                        result.warnings.push_back(category + ": " + *workflow.warning);
                    }
                    if (workflow.test_predictions.size() != data.split.test.size()) {
                        throw Error(
                            "stored error-analysis predictions do not match the test split");
                    }
                    for (std::size_t i = 0; i < workflow.test_predictions.size(); ++i) {
                        record("error_analysis", category, data.split.test[i],
                               workflow.test_predictions[i].label, std::nullopt,
                               workflow.test_predictions[i].explanation, {});
                    }
                }
            }
        } catch (const Error& e) {
            throw StageError("llm", e.what());
        }
    }

    // --- eval ---
    try {
        for (auto& [method, by_category] : predictions) {
            eval::MetricsReport report;
            for (auto& [category, pred] : by_category) {
                std::vector<bool> gold_labels;
                for (auto& u : per_category.at(category).split.test) {
                    gold_labels.push_back(u.label);
                }
                report.per_category[category] =
                    eval::category_metrics(detail::confusion_of(pred, gold_labels));
            }
            if (!report.per_category.empty()) result.table[method] = std::move(report);
        }

        fs::create_directories(config.out_dir + "/predictions");
        for (auto& [method, records] : prediction_records) {
            corpus::save_predictions(records, config.out_dir + "/predictions/" + method +
                                                  ".jsonl");
        }
        result.report_csv_path = config.out_dir + "/report.csv";
        result.report_text_path = config.out_dir + "/report.txt";
        llm::save_text(eval::comparison_to_csv(result.table), result.report_csv_path);
        llm::save_text(eval::comparison_to_text(result.table), result.report_text_path);

        nlohmann::json manifest;
        manifest["config"] = run_config_to_json(config);
        manifest["model_files"] = result.model_files;
        manifest["skipped"] = result.skipped;
        manifest["warnings"] = result.warnings;
        manifest["report_csv"] = result.report_csv_path;
        manifest["report_text"] = result.report_text_path;
        llm::save_text(manifest.dump(2) + "\n", config.out_dir + "/manifest.json");
    } catch (const Error& e) {
        throw StageError("eval", e.what());
    }
    return result;
}

}  // namespace fptox::pipeline
