#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>

#include "fptox/llm.hpp"
#include "fptox/llm_http.hpp"
#include "util.hpp"

namespace lm = fptox::llm;
namespace fl = fptox::lexicon;
using fptox::test::TempDir;
using fptox::test::read_file;

namespace {

fl::Lexicon rash_lexicon() {
    return fl::lexicon_from_json(
        nlohmann::json::parse(R"({"rash": ["Erythema", "Skin Rash"]})"), "test");
}

fl::Lexicon hf_lexicon() {
    return fl::lexicon_from_json(
        nlohmann::json::parse(R"({"heart_failure": [{"term": "HF", "abbrev": true},
            "Heart Failure", "Bilateral Leg Edema", "Swelling", "Edema"]})"),
        "test");
}

lm::CotExample example_of(const std::string& sentence, bool answer) {
    lm::CotExample ex;
    ex.sentence = sentence;
    ex.steps = {"s1", "s2", "s3", "s4"};
    ex.answer = answer;
    ex.answer_rationale = "Because.";
    return ex;
}

class ThrowingClient : public lm::ChatClient {
public:
    std::string complete(const std::string&) override {
        throw fptox::Error("endpoint exploded");
    }
};

}  // namespace

TEST(ParseResponse, ReadsTheFirstStandaloneYesNoToken) {
    auto r = lm::parse_response("Yes. Because edema.");
    ASSERT_TRUE(r.parsed_label.has_value());
    EXPECT_TRUE(*r.parsed_label);
    EXPECT_EQ(r.explanation, "Because edema.");

    r = lm::parse_response("no - nothing found");
    ASSERT_TRUE(r.parsed_label.has_value());
    EXPECT_FALSE(*r.parsed_label);
    EXPECT_EQ(r.explanation, "nothing found");

    r = lm::parse_response("  Yes, clearly");
    ASSERT_TRUE(r.parsed_label.has_value());
    EXPECT_TRUE(*r.parsed_label);
    EXPECT_EQ(r.explanation, "clearly");

    r = lm::parse_response("YES!");
    ASSERT_TRUE(r.parsed_label.has_value());
    EXPECT_TRUE(*r.parsed_label);
    EXPECT_EQ(r.explanation, "!");

    // "yesterday" is not "yes": tokens are whole alphanumeric runs.
    r = lm::parse_response("yesterday no");
    ASSERT_TRUE(r.parsed_label.has_value());
    EXPECT_FALSE(*r.parsed_label);
    EXPECT_EQ(r.explanation, "");
}

TEST(ParseResponse, RefusesAmbiguousText) {
    auto r = lm::parse_response("I think so");
    EXPECT_FALSE(r.parsed_label.has_value());
    EXPECT_EQ(r.explanation, "I think so");

    // Only the first line may carry the verdict.
    r = lm::parse_response("Maybe\nYes");
    EXPECT_FALSE(r.parsed_label.has_value());
    EXPECT_EQ(r.explanation, "Maybe\nYes");

    r = lm::parse_response("");
    EXPECT_FALSE(r.parsed_label.has_value());
    EXPECT_EQ(r.explanation, "");
}

TEST(Prompts, DisplayNamesCoverCoreAndFallBackToSpaces) {
    EXPECT_EQ(lm::category_display_name("heart_failure"), "HF");
    EXPECT_EQ(lm::category_display_name("drug_of_interest"),
              "the drug of interest (capecitabine or 5-FU)");
    EXPECT_EQ(lm::category_display_name("arrhythmia"), "arrhythmia");
    EXPECT_EQ(lm::category_display_name("valvular_complications"), "valvular complications");
    EXPECT_EQ(lm::category_display_name("hfs_therapies"), "HFS treatment/prevention therapies");
    EXPECT_EQ(lm::category_display_name("skin_rash"), "skin rash");
}

TEST(Prompts, ZeroShotTextIsExact) {
    const auto prompt = lm::build_zero_shot_prompt("rash", rash_lexicon());
    EXPECT_EQ(prompt,
              "You are given a sentence from a clinical text, if that sentence contains any "
              "information related to instances of rash, respond with yes and explain why. "
              "If not, respond with no and explain why. "
              "These words being the signs and evidence: Erythema, Skin Rash. "
              "If these words are mentioned in the sentence, respond with yes and explain why. "
              "If these words are not mentioned in the sentence, respond with no and explain "
              "why.");
}

TEST(Prompts, ZeroShotUsesDisplayNameAndKeywordOrder) {
    const auto prompt = lm::build_zero_shot_prompt("heart_failure", fl::default_lexicon());
    EXPECT_NE(prompt.find("instances of HF,"), std::string::npos);
    EXPECT_NE(prompt.find(std::string(lm::keyword_list_marker()) +
                          "HF, Heart Failure, Cardiac Failure, Heart Insufficiency"),
              std::string::npos);
    EXPECT_THROW(lm::build_zero_shot_prompt("no_such", fl::default_lexicon()), fptox::Error);
}

TEST(Prompts, RequestAppendsTheSentenceBlock) {
    EXPECT_EQ(lm::render_request("PROMPT.", "Edema noted."),
              "PROMPT.\n\nHere is a sentence: Edema noted.\nAnswer:");
}

TEST(Prompts, ReasoningExampleRendersFourStepsAndVerdict) {
    auto ex = example_of("Edema noted.", true);
    ex.steps = {"a", "b", "c", "d"};
    ex.answer_rationale = "R.";
    EXPECT_EQ(lm::render_cot_example(ex),
              "Here is a sentence: Edema noted.\n"
              "Reasoning:\n"
              "Step 1: a\n"
              "Step 2: b\n"
              "Step 3: c\n"
              "Step 4: d\n"
              "Answer: Yes. R.");
    ex.answer = false;
    EXPECT_NE(lm::render_cot_example(ex).find("Answer: No. R."), std::string::npos);
}

TEST(CotDrafts, FillMentionPhrasesAndBestIndicator) {
    const auto lex = hf_lexicon();
    lm::ErrorCase err;
    err.unit_id = "u1";
    err.sentence = "Trace edema bilateral lower extremities.";
    err.category = "heart_failure";
    err.gold = true;
    err.predicted = false;
    err.kind = lm::ErrorKind::false_negative;

    const auto ex = lm::draft_cot_example(err, lex);
    EXPECT_EQ(ex.sentence, err.sentence);
    EXPECT_TRUE(ex.answer);
    EXPECT_EQ(ex.steps[0],
              "Read the sentence \"Trace edema bilateral lower extremities.\" and identify key "
              "terms that may indicate signs or evidence of HF.");
    EXPECT_EQ(ex.steps[1], "Candidate phrases: \"edema\".");
    // Two shared tokens beat Edema's single token.
    EXPECT_EQ(ex.steps[2],
              "The sentence relates to the listed indicator \"Bilateral Leg Edema\".");
    EXPECT_EQ(ex.steps[3],
              "The sentence provides evidence relevant to HF, so the correct answer is yes.");
    EXPECT_EQ(ex.answer_rationale, "The sentence contains evidence relevant to HF.");
}

TEST(CotDrafts, FallBackToContentTokensWhenNothingMatches) {
    const auto lex = hf_lexicon();
    lm::ErrorCase err;
    err.sentence = "Patient appears fluid up today.";
    err.category = "heart_failure";
    err.gold = true;
    err.kind = lm::ErrorKind::false_negative;

    const auto ex = lm::draft_cot_example(err, lex);
    EXPECT_EQ(ex.steps[1], "Candidate phrases: \"appears\", \"fluid\", \"up\".");
    EXPECT_EQ(ex.steps[2], "None of the listed indicators matches the sentence directly.");

    lm::ErrorCase stopword_only;
    stopword_only.sentence = "The patient today.";
    stopword_only.category = "heart_failure";
    stopword_only.gold = false;
    const auto empty_ex = lm::draft_cot_example(stopword_only, lex);
    EXPECT_EQ(empty_ex.steps[1], "The sentence contains no candidate clinical phrases.");
    EXPECT_FALSE(empty_ex.answer);
    EXPECT_NE(empty_ex.steps[3].find("the correct answer is no"), std::string::npos);
}

TEST(EnhancedPrompt, InterleavesYesAndNoExamplesUpToTheCap) {
    const auto y1 = example_of("yes one", true);
    const auto y2 = example_of("yes two", true);
    const auto n1 = example_of("no one", false);
    const auto n2 = example_of("no two", false);
    const auto n3 = example_of("no three", false);

    const auto prompt = lm::build_error_analysis_prompt("ZERO", {y1, n1, n2, y2, n3}, 4);
    const auto expected = std::string("ZERO") + "\n\n" + lm::render_cot_example(y1) + "\n\n" +
                          lm::render_cot_example(n1) + "\n\n" + lm::render_cot_example(y2) +
                          "\n\n" + lm::render_cot_example(n2);
    EXPECT_EQ(prompt, expected);

    const auto all = lm::build_error_analysis_prompt("ZERO", {y1, n1, n2, y2, n3}, 10);
    EXPECT_NE(all.find("no three"), std::string::npos);

    EXPECT_EQ(lm::build_error_analysis_prompt("ZERO", {}, 4), "ZERO");
    EXPECT_EQ(lm::build_error_analysis_prompt("ZERO", {y1}, 0), "ZERO");
}

TEST(CollectErrors, GroupsFalsePositivesFirstSortedByUnit) {
    std::vector<lm::LlmUnit> units = {{"u3", "fine", false},
                                      {"u9", "fp nine", false},
                                      {"u1", "fn one", true},
                                      {"u2", "fp two", false}};
    std::vector<lm::LlmPrediction> preds(4);
    preds[0] = {"u9", "fp nine", false, true, true, "said yes"};
    preds[1] = {"u1", "fn one", true, false, true, "said no"};
    preds[2] = {"u2", "fp two", false, true, true, "also yes"};
    preds[3] = {"u3", "fine", false, false, true, "correct"};

    const auto errors = lm::collect_errors(units, preds, "heart_failure");
    ASSERT_EQ(errors.size(), 3u);
    EXPECT_EQ(errors[0].unit_id, "u2");
    EXPECT_EQ(errors[0].kind, lm::ErrorKind::false_positive);
    EXPECT_EQ(errors[1].unit_id, "u9");
    EXPECT_EQ(errors[1].kind, lm::ErrorKind::false_positive);
    EXPECT_EQ(errors[2].unit_id, "u1");
    EXPECT_EQ(errors[2].kind, lm::ErrorKind::false_negative);
    EXPECT_EQ(errors[2].zero_shot_explanation, "said no");
    EXPECT_EQ(errors[0].category, "heart_failure");
    EXPECT_TRUE(errors[2].gold);
    EXPECT_FALSE(errors[2].predicted);
}

TEST(CollectErrors, RejectsInconsistentInputs) {
    std::vector<lm::LlmUnit> units = {{"u1", "s", true}};
    std::vector<lm::LlmPrediction> preds(2);
    preds[0] = {"u1", "s", true, true, true, ""};
    preds[1] = {"u1", "s", true, true, true, ""};
    EXPECT_THROW(lm::collect_errors(units, preds, "c"), fptox::Error);  // count mismatch

    units.push_back({"u2", "t", false});
    EXPECT_THROW(lm::collect_errors(units, preds, "c"), fptox::Error);  // duplicate u1

    preds[1].unit_id = "u7";
    EXPECT_THROW(lm::collect_errors(units, preds, "c"), fptox::Error);  // u2 missing
}

TEST(MockClient, AnswersByKeywordScan) {
    lm::MockChatClient mock;
    const auto prompt = lm::build_zero_shot_prompt("rash", rash_lexicon());

    EXPECT_EQ(mock.complete(lm::render_request(prompt, "Skin rash on arm.")),
              "Yes. The sentence mentions \"Skin Rash\", a listed indicator.");
    EXPECT_EQ(mock.complete(lm::render_request(prompt, "No lesions noted.")),
              "No. None of the listed indicators appears in the sentence.");
    // Without the keyword list the scan has nothing to find.
    EXPECT_EQ(mock.complete(lm::render_request("bare prompt", "Skin rash on arm.")),
              "No. None of the listed indicators appears in the sentence.");
    EXPECT_EQ(mock.complete("no sentence block here"), "No. The request carries no sentence.");
    EXPECT_EQ(mock.call_count(), 4u);
}

TEST(MockClient, HardCasesFlipOnceDemonstrated) {
    std::map<std::string, lm::MockChatClient::HardCase> cases;
    cases["Trace edema."] = {true, "subtle but real", "looks benign", std::nullopt};
    cases["Odd text."] = {false, "", "", std::string("garbled nonsense")};
    lm::MockChatClient mock(std::move(cases));

    const auto prompt = lm::build_zero_shot_prompt("heart_failure", hf_lexicon());

    // Not demonstrated: answers wrong on purpose.
    EXPECT_EQ(mock.complete(lm::render_request(prompt, "Trace edema.")),
              "No. looks benign");

    // Demonstrated: the sentence appears in an example before the final block.
    auto ex = example_of("Trace edema.", true);
    const auto enhanced = lm::build_error_analysis_prompt(prompt, {ex}, 4);
    EXPECT_EQ(mock.complete(lm::render_request(enhanced, "Trace edema.")),
              "Yes. subtle but real");

    // Raw override is returned verbatim (and is unparseable downstream).
    const auto raw = mock.complete(lm::render_request(prompt, "Odd text."));
    EXPECT_EQ(raw, "garbled nonsense");
    EXPECT_FALSE(lm::parse_response(raw).parsed_label.has_value());
}

TEST(ClassifyBatch, PreservesInputOrderAtAnyParallelism) {
    lm::MockChatClient mock;
    const auto prompt = lm::build_zero_shot_prompt("rash", rash_lexicon());
    std::vector<lm::LlmUnit> units;
    for (int i = 0; i < 12; ++i) {
        const bool pos = i % 3 == 0;
        units.push_back({"u" + std::to_string(i),
                         pos ? "Erythema spreading." : "All clear today.", pos});
    }

    const auto serial = lm::classify_batch(mock, prompt, units, 1);
    const auto parallel = lm::classify_batch(mock, prompt, units, 4);
    ASSERT_EQ(serial.size(), units.size());
    ASSERT_EQ(parallel.size(), units.size());
    for (std::size_t i = 0; i < units.size(); ++i) {
        EXPECT_EQ(serial[i].unit_id, units[i].unit_id);
        EXPECT_EQ(parallel[i].unit_id, units[i].unit_id);
        EXPECT_EQ(serial[i].label, units[i].gold);
        EXPECT_EQ(parallel[i].label, serial[i].label);
        EXPECT_TRUE(serial[i].parsed);
    }

    EXPECT_TRUE(lm::classify_batch(mock, prompt, {}, 4).empty());
}

TEST(ClassifyBatch, AppliesTheFallbackLabelToUnparseableReplies) {
    std::map<std::string, lm::MockChatClient::HardCase> cases;
    cases["Strange."] = {false, "", "", std::string("cannot tell")};
    lm::MockChatClient mock(std::move(cases));
    const auto prompt = lm::build_zero_shot_prompt("rash", rash_lexicon());
    const std::vector<lm::LlmUnit> units = {{"u1", "Strange.", false}};

    const auto defaulted = lm::classify_batch(mock, prompt, units, 1, false);
    ASSERT_EQ(defaulted.size(), 1u);
    EXPECT_FALSE(defaulted[0].parsed);
    EXPECT_FALSE(defaulted[0].label);

    const auto flipped = lm::classify_batch(mock, prompt, units, 1, true);
    EXPECT_TRUE(flipped[0].label);
    EXPECT_FALSE(flipped[0].parsed);
}

TEST(ClassifyBatch, PropagatesWorkerExceptions) {
    ThrowingClient client;
    const std::vector<lm::LlmUnit> units = {{"u1", "a", false}, {"u2", "b", true}};
    EXPECT_THROW(lm::classify_batch(client, "P", units, 2), fptox::Error);
}

TEST(EndpointConfig, AppliesDefaultsAndOverrides) {
    const auto defaults = lm::endpoint_config_from_json(nlohmann::json::object());
    EXPECT_EQ(defaults.base_url, "http://localhost:8000");
    EXPECT_EQ(defaults.path, "/v1/chat/completions");
    EXPECT_EQ(defaults.model, "llama-3.1-8b");
    EXPECT_DOUBLE_EQ(defaults.temperature, 0.0);
    EXPECT_EQ(defaults.max_tokens, 256u);
    EXPECT_EQ(defaults.max_retries, 2u);
    EXPECT_EQ(defaults.parallelism, 4u);
    EXPECT_EQ(defaults.content_path, "choices/0/message/content");
    EXPECT_EQ(defaults.auth_env, "FPTOX_LLM_TOKEN");

    const auto custom = lm::endpoint_config_from_json(nlohmann::json::parse(
        R"({"base_url": "http://10.0.0.5:9000", "model": "m", "temperature": 0.5,
            "parallelism": 2, "content_path": "result/text"})"));
    EXPECT_EQ(custom.base_url, "http://10.0.0.5:9000");
    EXPECT_EQ(custom.model, "m");
    EXPECT_DOUBLE_EQ(custom.temperature, 0.5);
    EXPECT_EQ(custom.parallelism, 2u);
    EXPECT_EQ(custom.content_path, "result/text");

    EXPECT_THROW(lm::endpoint_config_from_json(nlohmann::json::parse(R"({"temperature": -1})")),
                 fptox::Error);
    EXPECT_THROW(lm::endpoint_config_from_json(nlohmann::json::parse(R"({"parallelism": 0})")),
                 fptox::Error);
}

TEST(Endpoint, RequestBodyCarriesTheChatSchema) {
    lm::LlmEndpointConfig cfg;
    cfg.model = "local-model";
    cfg.temperature = 0.25;
    cfg.max_tokens = 64;
    const auto body = lm::build_request_body(cfg, "hello");
    EXPECT_EQ(body.at("model"), "local-model");
    EXPECT_DOUBLE_EQ(body.at("temperature").get<double>(), 0.25);
    EXPECT_EQ(body.at("max_tokens").get<std::size_t>(), 64u);
    ASSERT_EQ(body.at("messages").size(), 1u);
    EXPECT_EQ(body.at("messages")[0].at("role"), "user");
    EXPECT_EQ(body.at("messages")[0].at("content"), "hello");
}

TEST(Endpoint, ContentExtractionWalksThePath) {
    const auto body = nlohmann::json::parse(
        R"({"choices": [{"message": {"content": "Yes. Found."}}]})");
    EXPECT_EQ(lm::extract_content(body, "choices/0/message/content"), "Yes. Found.");

    const auto custom = nlohmann::json::parse(R"({"result": {"text": "No."}})");
    EXPECT_EQ(lm::extract_content(custom, "result/text"), "No.");

    try {
        lm::extract_content(nlohmann::json::object(), "choices/0/message/content");
        FAIL() << "expected an error";
    } catch (const fptox::Error& e) {
        EXPECT_NE(std::string(e.what()).find("missing 'choices'"), std::string::npos);
    }

    const auto empty_choices = nlohmann::json::parse(R"({"choices": []})");
    EXPECT_THROW(lm::extract_content(empty_choices, "choices/0/message/content"), fptox::Error);

    const auto non_string = nlohmann::json::parse(R"({"choices": [{"message": {"content": 5}}]})");
    EXPECT_THROW(lm::extract_content(non_string, "choices/0/message/content"), fptox::Error);
}

TEST(LlmPersistence, PredictionsRoundTripAsJsonLines) {
    TempDir dir;
    std::vector<lm::LlmPrediction> preds(2);
    preds[0] = {"u1", "Edema noted.", true, true, true, "mentions edema"};
    preds[1] = {"u2", "All clear.", false, true, false, ""};
    const auto path = dir.file("preds.jsonl");
    lm::save_llm_predictions(preds, path);
    const auto loaded = lm::load_llm_predictions(path);
    ASSERT_EQ(loaded.size(), 2u);
    EXPECT_EQ(loaded[0].unit_id, "u1");
    EXPECT_EQ(loaded[0].sentence, "Edema noted.");
    EXPECT_TRUE(loaded[0].gold);
    EXPECT_TRUE(loaded[0].label);
    EXPECT_EQ(loaded[0].explanation, "mentions edema");
    EXPECT_FALSE(loaded[1].parsed);

    fptox::test::write_file(dir.file("bad.jsonl"), "{oops\n");
    EXPECT_THROW(lm::load_llm_predictions(dir.file("bad.jsonl")), fptox::Error);
    EXPECT_THROW(lm::load_llm_predictions(dir.file("missing.jsonl")), fptox::Error);
}

TEST(LlmPersistence, UnitsRoundTripAsJsonLines) {
    TempDir dir;
    const std::vector<lm::LlmUnit> units = {{"n1#0", "Edema.", true}, {"n1#1", "Clear.", false}};
    const auto path = dir.file("units.jsonl");
    lm::save_llm_units(units, path);
    const auto loaded = lm::load_llm_units(path);
    ASSERT_EQ(loaded.size(), 2u);
    EXPECT_EQ(loaded[0].unit_id, "n1#0");
    EXPECT_EQ(loaded[0].sentence, "Edema.");
    EXPECT_TRUE(loaded[0].gold);
    EXPECT_FALSE(loaded[1].gold);

    fptox::test::write_file(dir.file("bad.jsonl"), "[1,2]\n");
    EXPECT_THROW(lm::load_llm_units(dir.file("bad.jsonl")), fptox::Error);
}

TEST(LlmPersistence, ErrorCasesRoundTripThroughJson) {
    lm::ErrorCase e;
    e.unit_id = "u1";
    e.sentence = "No swelling.";
    e.category = "heart_failure";
    e.gold = false;
    e.predicted = true;
    e.kind = lm::ErrorKind::false_positive;
    e.zero_shot_explanation = "keyword matched";

    const auto j = lm::error_case_to_json(e);
    EXPECT_EQ(j.at("kind"), "false_positive");
    const auto back = lm::error_case_from_json(j);
    EXPECT_EQ(back.unit_id, e.unit_id);
    EXPECT_EQ(back.sentence, e.sentence);
    EXPECT_EQ(back.category, e.category);
    EXPECT_EQ(back.gold, e.gold);
    EXPECT_EQ(back.predicted, e.predicted);
    EXPECT_EQ(back.kind, e.kind);
    EXPECT_EQ(back.zero_shot_explanation, e.zero_shot_explanation);

    auto bad = j;
    bad["kind"] = "sideways";
    EXPECT_THROW(lm::error_case_from_json(bad), fptox::Error);
}

TEST(LlmPersistence, ReasoningExamplesRoundTripWithRenderedText) {
    const auto ex = example_of("Edema noted.", true);
    const auto j = lm::cot_example_to_json(ex);
    EXPECT_EQ(j.at("rendered").get<std::string>(), lm::render_cot_example(ex));

    const auto back = lm::cot_example_from_json(j);
    EXPECT_EQ(back.sentence, ex.sentence);
    EXPECT_EQ(back.steps, ex.steps);
    EXPECT_EQ(back.answer, ex.answer);
    EXPECT_EQ(back.answer_rationale, ex.answer_rationale);

    auto bad = j;
    bad["steps"] = std::vector<std::string>{"only", "three", "steps"};
    EXPECT_THROW(lm::cot_example_from_json(bad), fptox::Error);
}

TEST(LlmPersistence, TextFilesRoundTripBytes) {
    TempDir dir;
    const std::string text = "line one\nline two\n\ttabbed\n";
    const auto path = dir.file("prompt.txt");
    lm::save_text(text, path);
    EXPECT_EQ(lm::load_text(path), text);
    EXPECT_THROW(lm::load_text(dir.file("missing.txt")), fptox::Error);
}

namespace {

struct WorkflowSetup {
    fl::Lexicon lex = hf_lexicon();
    std::vector<lm::LlmUnit> train;
    std::vector<lm::LlmUnit> test;
    std::map<std::string, lm::MockChatClient::HardCase> cases;

    WorkflowSetup() {
        // Two hard sentences the keyword scan gets wrong until demonstrated.
        cases["Trace edema bilateral lower extremities."] =
            {true, "trace edema is still edema", "trace findings are not significant",
             std::nullopt};
        cases["No swelling or edema."] =
            {false, "the mention is negated", "edema is listed", std::nullopt};

        train = {{"t1", "Trace edema bilateral lower extremities.", true},
                 {"t2", "No swelling or edema.", false},
                 {"t3", "Swelling of the legs.", true},
                 {"t4", "Plan reviewed with the care team.", false}};
        test = {{"e1", "Trace edema bilateral lower extremities.", true},
                {"e2", "No swelling or edema.", false},
                {"e3", "Swelling persists.", true},
                {"e4", "Vitals stable.", false}};
    }
};

}  // namespace

TEST(Workflow, EnhancedPromptFixesDemonstratedErrors) {
    WorkflowSetup s;
    lm::MockChatClient mock(s.cases);

    lm::WorkflowOptions options;
    options.example_cap = 4;
    options.parallelism = 2;
    const auto result =
        lm::run_error_analysis_workflow(s.train, s.test, "heart_failure", s.lex, mock, options);

    EXPECT_FALSE(result.warning.has_value());
    ASSERT_EQ(result.errors.size(), 2u);
    EXPECT_EQ(result.errors[0].kind, lm::ErrorKind::false_positive);
    EXPECT_EQ(result.errors[0].unit_id, "t2");
    EXPECT_EQ(result.errors[1].kind, lm::ErrorKind::false_negative);
    EXPECT_EQ(result.errors[1].unit_id, "t1");

    // Zero-shot training pass got the hard sentences wrong...
    ASSERT_EQ(result.train_predictions.size(), 4u);
    EXPECT_FALSE(result.train_predictions[0].label);  // t1 gold true
    EXPECT_TRUE(result.train_predictions[1].label);   // t2 gold false
    EXPECT_TRUE(result.train_predictions[2].label);
    EXPECT_FALSE(result.train_predictions[3].label);

    // ...the enhanced prompt demonstrates them, so the test pass is clean.
    EXPECT_NE(result.enhanced_prompt.find("Trace edema bilateral lower extremities."),
              std::string::npos);
    EXPECT_NE(result.enhanced_prompt.find("No swelling or edema."), std::string::npos);
    EXPECT_NE(result.enhanced_prompt, result.zero_shot_prompt);
    ASSERT_EQ(result.test_predictions.size(), 4u);
    for (std::size_t i = 0; i < s.test.size(); ++i) {
        EXPECT_EQ(result.test_predictions[i].label, s.test[i].gold) << s.test[i].unit_id;
    }
}

TEST(Workflow, ArtifactsMakeRerunsFreeOfNewCalls) {
    WorkflowSetup s;
    lm::MockChatClient mock(s.cases);
    TempDir dir;

    lm::WorkflowOptions options;
    options.store_dir = dir.path().string();
    options.parallelism = 1;

    const auto first =
        lm::run_error_analysis_workflow(s.train, s.test, "heart_failure", s.lex, mock, options);
    const auto calls_after_first = mock.call_count();
    EXPECT_EQ(calls_after_first, s.train.size() + s.test.size());

    const auto train_artifact = dir.file("heart_failure_zero_shot_train.jsonl");
    const auto prompt_artifact = dir.file("heart_failure_enhanced_prompt.txt");
    const auto test_artifact = dir.file("heart_failure_error_analysis_test.jsonl");
    const auto train_bytes = read_file(train_artifact);
    const auto prompt_bytes = read_file(prompt_artifact);
    const auto test_bytes = read_file(test_artifact);
    EXPECT_FALSE(train_bytes.empty());
    EXPECT_EQ(prompt_bytes, first.enhanced_prompt);
    EXPECT_FALSE(test_bytes.empty());

    const auto second =
        lm::run_error_analysis_workflow(s.train, s.test, "heart_failure", s.lex, mock, options);
    EXPECT_EQ(mock.call_count(), calls_after_first);  // resumed entirely from disk
    EXPECT_EQ(second.enhanced_prompt, first.enhanced_prompt);
    ASSERT_EQ(second.test_predictions.size(), first.test_predictions.size());
    for (std::size_t i = 0; i < first.test_predictions.size(); ++i) {
        EXPECT_EQ(second.test_predictions[i].unit_id, first.test_predictions[i].unit_id);
        EXPECT_EQ(second.test_predictions[i].label, first.test_predictions[i].label);
    }
    EXPECT_EQ(read_file(train_artifact), train_bytes);
    EXPECT_EQ(read_file(prompt_artifact), prompt_bytes);
    EXPECT_EQ(read_file(test_artifact), test_bytes);
}

TEST(Workflow, NoErrorsLeaveThePromptUntouched) {
    WorkflowSetup s;
    lm::MockChatClient mock;  // no hard cases: the keyword scan is always right
    const std::vector<lm::LlmUnit> easy_train = {{"t3", "Swelling of the legs.", true},
                                                 {"t4", "Plan reviewed.", false}};
    const auto result = lm::run_error_analysis_workflow(easy_train, s.test, "heart_failure",
                                                        s.lex, mock, {});
    EXPECT_TRUE(result.errors.empty());
    EXPECT_EQ(result.enhanced_prompt, result.zero_shot_prompt);
    EXPECT_FALSE(result.warning.has_value());
}

TEST(Workflow, EmptyTrainingSplitWarnsAndStaysZeroShot) {
    WorkflowSetup s;
    lm::MockChatClient mock;
    const auto result =
        lm::run_error_analysis_workflow({}, s.test, "heart_failure", s.lex, mock, {});
    ASSERT_TRUE(result.warning.has_value());
    EXPECT_EQ(*result.warning, "training split is empty; prompt stays zero-shot");
    EXPECT_EQ(result.enhanced_prompt, result.zero_shot_prompt);
    EXPECT_TRUE(result.train_predictions.empty());
    EXPECT_EQ(result.test_predictions.size(), s.test.size());
}

// ---------------------------------------------------------------------------
// HTTP transport against a local in-process server

namespace {

struct LocalServer {
    httplib::Server server;
    int port = 0;
    std::thread runner;

    explicit LocalServer(httplib::Server::Handler handler) {
        server.Post("/v1/chat/completions", std::move(handler));
        port = server.bind_to_any_port("127.0.0.1");
        runner = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }

    ~LocalServer() {
        server.stop();
        runner.join();
    }

    lm::LlmEndpointConfig config() const {
        lm::LlmEndpointConfig cfg;
        cfg.base_url = "http://127.0.0.1:" + std::to_string(port);
        cfg.timeout_sec = 5;
        return cfg;
    }
};

}  // namespace

TEST(HttpClient, PostsTheChatRequestWithBearerAuth) {
    nlohmann::json seen_body;
    std::string seen_auth;
    LocalServer local([&](const httplib::Request& req, httplib::Response& res) {
        seen_body = nlohmann::json::parse(req.body);
        seen_auth = req.get_header_value("Authorization");
        res.set_content(R"({"choices":[{"message":{"content":"Yes. Found."}}]})",
                        "application/json");
    });

    ::setenv("FPTOX_LLM_TOKEN", "sekrit", 1);
    lm::HttpChatClient client(local.config());
    ::unsetenv("FPTOX_LLM_TOKEN");

    EXPECT_EQ(client.complete("hello prompt"), "Yes. Found.");
    EXPECT_EQ(seen_auth, "Bearer sekrit");
    EXPECT_EQ(seen_body.at("model"), "llama-3.1-8b");
    ASSERT_EQ(seen_body.at("messages").size(), 1u);
    EXPECT_EQ(seen_body.at("messages")[0].at("role"), "user");
    EXPECT_EQ(seen_body.at("messages")[0].at("content"), "hello prompt");
    EXPECT_DOUBLE_EQ(seen_body.at("temperature").get<double>(), 0.0);
    EXPECT_EQ(seen_body.at("max_tokens").get<std::size_t>(), 256u);
}

TEST(HttpClient, RetriesTransientServerErrors) {
    std::atomic<int> hits{0};
    LocalServer local([&](const httplib::Request&, httplib::Response& res) {
        if (hits.fetch_add(1) == 0) {
            res.status = 500;
            res.set_content("boom", "text/plain");
        } else {
            res.set_content(R"({"choices":[{"message":{"content":"No. Retried."}}]})",
                            "application/json");
        }
    });

    lm::HttpChatClient client(local.config());
    EXPECT_EQ(client.complete("x"), "No. Retried.");
    EXPECT_EQ(hits.load(), 2);
}

TEST(HttpClient, GivesUpAfterExhaustingRetries) {
    std::atomic<int> hits{0};
    LocalServer local([&](const httplib::Request&, httplib::Response& res) {
        hits.fetch_add(1);
        res.status = 503;
        res.set_content("down", "text/plain");
    });

    auto cfg = local.config();
    cfg.max_retries = 1;
    lm::HttpChatClient client(cfg);
    try {
        client.complete("x");
        FAIL() << "expected an error";
    } catch (const fptox::Error& e) {
        EXPECT_NE(std::string(e.what()).find("endpoint unreachable after 2 attempts"),
                  std::string::npos);
    }
    EXPECT_EQ(hits.load(), 2);
}

TEST(HttpClient, DoesNotRetryClientErrors) {
    std::atomic<int> hits{0};
    LocalServer local([&](const httplib::Request&, httplib::Response& res) {
        hits.fetch_add(1);
        res.status = 404;
        res.set_content("nope", "text/plain");
    });

    lm::HttpChatClient client(local.config());
    try {
        client.complete("x");
        FAIL() << "expected an error";
    } catch (const fptox::Error& e) {
        EXPECT_NE(std::string(e.what()).find("endpoint rejected request: HTTP 404"),
                  std::string::npos);
    }
    EXPECT_EQ(hits.load(), 1);
}

TEST(HttpClient, RejectsNonJsonBodies) {
    LocalServer local([&](const httplib::Request&, httplib::Response& res) {
        res.set_content("definitely not json", "text/plain");
    });
    lm::HttpChatClient client(local.config());
    EXPECT_THROW(client.complete("x"), fptox::Error);
}

TEST(HttpClient, HonorsACustomContentPath) {
    LocalServer local([&](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"result":{"text":"No."}})", "application/json");
    });
    auto cfg = local.config();
    cfg.content_path = "result/text";
    lm::HttpChatClient client(cfg);
    EXPECT_EQ(client.complete("x"), "No.");
}
