#include <gtest/gtest.h>

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fptox/corpus.hpp"
#include "fptox/synth.hpp"
#include "util.hpp"

namespace fc = fptox::corpus;
using fptox::test::TempDir;
using fptox::test::write_file;

TEST(Segmentation, SplitsOnSentencePunctuation) {
    const std::string text = "Patient on Xeloda. No edema.";
    const auto sentences = fc::segment_sentences(text);
    ASSERT_EQ(sentences.size(), 2u);
    EXPECT_EQ(sentences[0].text, "Patient on Xeloda.");
    EXPECT_EQ(sentences[1].text, "No edema.");
    EXPECT_EQ(sentences[0].index, 0u);
    EXPECT_EQ(sentences[1].index, 1u);
    for (auto& s : sentences) {
        EXPECT_EQ(text.substr(s.begin, s.end - s.begin), s.text);
    }
}

TEST(Segmentation, DottedAbbreviationIsNotABoundary) {
    const auto sentences = fc::segment_sentences("Take b.i.d. with food.");
    ASSERT_EQ(sentences.size(), 1u);
    EXPECT_EQ(sentences[0].text, "Take b.i.d. with food.");
}

TEST(Segmentation, EmptyAndWhitespaceOnlyTextYieldNothing) {
    EXPECT_TRUE(fc::segment_sentences("").empty());
    EXPECT_TRUE(fc::segment_sentences("   \n\t  ").empty());
}

TEST(Segmentation, BlankLineForcesBreak) {
    const auto sentences = fc::segment_sentences("First fragment\n\nSecond fragment");
    ASSERT_EQ(sentences.size(), 2u);
    EXPECT_EQ(sentences[0].text, "First fragment");
    EXPECT_EQ(sentences[1].text, "Second fragment");
}

TEST(Segmentation, PunctuationRunsAndClosersStayWithTheSentence) {
    const auto sentences = fc::segment_sentences("Really?! Yes. He said (ok.) Then left.");
    ASSERT_EQ(sentences.size(), 4u);
    EXPECT_EQ(sentences[0].text, "Really?!");
    EXPECT_EQ(sentences[1].text, "Yes.");
    EXPECT_EQ(sentences[2].text, "He said (ok.)");
    EXPECT_EQ(sentences[3].text, "Then left.");
}

TEST(Segmentation, SpansReconstructTheNote) {
    const std::string text = "  Trace edema.  Continue Xeloda 500 mg b.i.d. daily.\n\nPlan stable. ";
    const auto sentences = fc::segment_sentences(text);
    ASSERT_EQ(sentences.size(), 3u);
    for (auto& s : sentences) {
        EXPECT_EQ(text.substr(s.begin, s.end - s.begin), s.text);
        EXPECT_EQ(s.index, static_cast<std::size_t>(&s - sentences.data()));
    }
}

TEST(Tokenization, KeepsIntraTokenHyphens) {
    EXPECT_EQ(fc::tokenize("5-FU given"), (std::vector<std::string>{"5-fu", "given"}));
    EXPECT_EQ(fc::tokenize("A-flutter episode"), (std::vector<std::string>{"a-flutter", "episode"}));
}

TEST(Tokenization, DropsPunctuationAndLowercases) {
    EXPECT_EQ(fc::tokenize("Xeloda, 1000mg!"), (std::vector<std::string>{"xeloda", "1000mg"}));
    EXPECT_TRUE(fc::tokenize("").empty());
    EXPECT_TRUE(fc::tokenize("?!,;:").empty());
}

TEST(Tokenization, EdgeHyphensDoNotJoin) {
    EXPECT_EQ(fc::tokenize("pre- op"), (std::vector<std::string>{"pre", "op"}));
    EXPECT_EQ(fc::tokenize("-edema-"), (std::vector<std::string>{"edema"}));
}

TEST(Tokenization, DottedAbbreviationsStayWhole) {
    EXPECT_EQ(fc::tokenize("b.i.d."), (std::vector<std::string>{"b.i.d."}));
    EXPECT_EQ(fc::tokenize("Dosed b.i.d. at home"),
              (std::vector<std::string>{"dosed", "b.i.d.", "at", "home"}));
}

TEST(Tokenization, FullTokensCarryAccurateSpansAndSurfaces) {
    const std::string text = "Trace 5-FU (held) b.i.d.";
    const auto tokens = fc::tokenize_full(text);
    ASSERT_EQ(tokens.size(), 4u);
    for (auto& t : tokens) {
        EXPECT_EQ(text.substr(t.begin, t.end - t.begin), t.surface);
    }
    EXPECT_EQ(tokens[1].surface, "5-FU");
    EXPECT_EQ(tokens[1].norm, "5-fu");
    EXPECT_EQ(tokens[3].norm, "b.i.d.");
}

TEST(Tokenization, NormalizationIsIdempotent) {
    for (const std::string text : {"5-FU given b.i.d. now", "Xeloda, 1000mg!", "A-flutter; edema",
                                   "No evidence of swelling."}) {
        const auto once = fc::tokenize(text);
        std::string joined;
        for (auto& t : once) {
            if (!joined.empty()) joined += ' ';
            joined += t;
        }
        EXPECT_EQ(fc::tokenize(joined), once) << text;
    }
}

TEST(CorpusIO, RoundTripsNotesWithMetadata) {
    TempDir dir;
    std::vector<fc::ClinicalNote> notes;
    notes.push_back({"n1", "Trace edema. No rash.", {{"source", "unit"}}});
    notes.push_back({"n2", "Continue Xeloda.", {}});
    const auto path = dir.file("corpus.jsonl");
    fc::save_corpus(notes, path);
    const auto loaded = fc::load_corpus(path);
    ASSERT_EQ(loaded.size(), 2u);
    EXPECT_EQ(loaded[0].note_id, "n1");
    EXPECT_EQ(loaded[0].text, "Trace edema. No rash.");
    EXPECT_EQ(loaded[0].metadata.at("source"), "unit");
    EXPECT_TRUE(loaded[1].metadata.empty());
}

TEST(CorpusIO, RejectsBadInput) {
    TempDir dir;
    EXPECT_THROW(fc::load_corpus(dir.file("missing.jsonl")), fptox::Error);

    const auto bad_json = dir.file("bad.jsonl");
    write_file(bad_json, "{not json\n");
    EXPECT_THROW(fc::load_corpus(bad_json), fptox::Error);

    const auto no_id = dir.file("noid.jsonl");
    write_file(no_id, "{\"text\": \"hello there\"}\n");
    EXPECT_THROW(fc::load_corpus(no_id), fptox::Error);

    const auto empty_text = dir.file("empty.jsonl");
    write_file(empty_text, "{\"note_id\": \"n1\", \"text\": \"  \"}\n");
    EXPECT_THROW(fc::load_corpus(empty_text), fptox::Error);

    const auto dup = dir.file("dup.jsonl");
    write_file(dup, "{\"note_id\": \"n1\", \"text\": \"a note\"}\n"
                    "{\"note_id\": \"n1\", \"text\": \"again\"}\n");
    EXPECT_THROW(fc::load_corpus(dup), fptox::Error);

    const auto bad_meta = dir.file("meta.jsonl");
    write_file(bad_meta, "{\"note_id\": \"n1\", \"text\": \"a\", \"metadata\": 7}\n");
    EXPECT_THROW(fc::load_corpus(bad_meta), fptox::Error);
}

TEST(CorpusIO, GoldRoundTripAndDuplicateDetection) {
    TempDir dir;
    std::vector<fc::GoldAnnotation> gold;
    gold.push_back({"n1", 0, "heart_failure", true});
    gold.push_back({"n1", std::nullopt, "heart_failure", true});  // note-level row
    const auto path = dir.file("gold.jsonl");
    fc::save_gold(gold, path);
    const auto loaded = fc::load_gold(path);
    ASSERT_EQ(loaded.size(), 2u);
    EXPECT_EQ(loaded[0].sentence_index, std::optional<std::size_t>(0));
    EXPECT_FALSE(loaded[1].sentence_index.has_value());
    EXPECT_TRUE(loaded[1].label);

    const auto dup = dir.file("dup.jsonl");
    write_file(dup,
               "{\"note_id\":\"n1\",\"category\":\"c\",\"label\":true}\n"
               "{\"note_id\":\"n1\",\"category\":\"c\",\"label\":false}\n");
    EXPECT_THROW(fc::load_gold(dup), fptox::Error);
}

TEST(CorpusIO, PredictionsRoundTrip) {
    TempDir dir;
    std::vector<fc::Prediction> preds;
    fc::Prediction p;
    p.note_id = "n1";
    p.sentence_index = 2;
    p.category = "arrhythmia";
    p.label = true;
    p.score = 0.75;
    p.explanation = "matched keyword";
    p.evidence = nlohmann::json::array({{{"keyword", "afib"}}});
    preds.push_back(p);
    const auto path = dir.file("pred.jsonl");
    fc::save_predictions(preds, path);
    const auto loaded = fc::load_predictions(path);
    ASSERT_EQ(loaded.size(), 1u);
    EXPECT_EQ(loaded[0].note_id, "n1");
    EXPECT_EQ(loaded[0].sentence_index, std::optional<std::size_t>(2));
    EXPECT_TRUE(loaded[0].label);
    EXPECT_DOUBLE_EQ(*loaded[0].score, 0.75);
    EXPECT_EQ(*loaded[0].explanation, "matched keyword");
    EXPECT_FALSE(loaded[0].evidence.is_null());
}

TEST(AnalyzeNote, ProducesTokenizedSentences) {
    fc::ClinicalNote note{"n9", "Trace edema. No rash today.", {}};
    const auto sentences = fc::analyze_note(note);
    ASSERT_EQ(sentences.size(), 2u);
    EXPECT_EQ(sentences[0].note_id, "n9");
    EXPECT_EQ(sentences[1].index, 1u);
    EXPECT_EQ(sentences[0].tokens.size(), 2u);
    EXPECT_EQ(sentences[1].tokens[0].norm, "no");
}

namespace {

std::vector<fc::LabeledSentence> make_units(std::size_t n_pos, std::size_t n_neg) {
    std::vector<fc::LabeledSentence> units;
    for (std::size_t i = 0; i < n_pos + n_neg; ++i) {
        fc::LabeledSentence u;
        u.note_id = "n" + std::to_string(i);
        u.sentence_index = 0;
        u.text = "sentence " + std::to_string(i);
        u.label = i < n_pos;
        units.push_back(std::move(u));
    }
    return units;
}

}  // namespace

TEST(Split, EightyTwentyOnBalancedTen) {
    const auto units = make_units(5, 5);
    const auto split = fc::stratified_split(units, 0.8, 42);
    EXPECT_EQ(split.train.size(), 8u);
    EXPECT_EQ(split.test.size(), 2u);
    std::size_t test_pos = 0;
    for (auto& u : split.test) test_pos += u.label ? 1 : 0;
    EXPECT_EQ(test_pos, 1u);  // stratification: exactly one positive held out
    EXPECT_FALSE(split.warning.has_value());
}

TEST(Split, DeterministicForAFixedSeed) {
    const auto units = make_units(7, 9);
    const auto a = fc::stratified_split(units, 0.75, 123);
    const auto b = fc::stratified_split(units, 0.75, 123);
    ASSERT_EQ(a.train.size(), b.train.size());
    for (std::size_t i = 0; i < a.train.size(); ++i) {
        EXPECT_EQ(a.train[i].note_id, b.train[i].note_id);
    }
    ASSERT_EQ(a.test.size(), b.test.size());
    for (std::size_t i = 0; i < a.test.size(); ++i) {
        EXPECT_EQ(a.test[i].note_id, b.test[i].note_id);
    }
}

TEST(Split, WarnsOnDegenerateInputs) {
    const auto single_label = fc::stratified_split(make_units(5, 0), 0.8, 1);
    ASSERT_TRUE(single_label.warning.has_value());
    EXPECT_EQ(*single_label.warning, "all units share one label");

    const auto empty_test = fc::stratified_split(make_units(5, 0), 0.9, 1);
    ASSERT_TRUE(empty_test.warning.has_value());
    EXPECT_EQ(*empty_test.warning, "test side is empty (single-label input or extreme ratio)");
}

TEST(Split, RejectsBadArguments) {
    EXPECT_THROW(fc::stratified_split({}, 0.8, 1), fptox::Error);
    EXPECT_THROW(fc::stratified_split(make_units(2, 2), 0.0, 1), fptox::Error);
    EXPECT_THROW(fc::stratified_split(make_units(2, 2), 1.0, 1), fptox::Error);
}

TEST(NoteLabel, IsTheDisjunctionOfSentenceLabels) {
    EXPECT_FALSE(fc::note_label_from_sentences({}));
    EXPECT_FALSE(fc::note_label_from_sentences({false, false}));
    EXPECT_TRUE(fc::note_label_from_sentences({false, true, false}));
}

TEST(Synthetic, EmptyWhenZeroNotesRequested) {
    const auto result = fc::generate_synthetic_corpus({{"heart_failure", 0.5}}, 0, 1);
    EXPECT_TRUE(result.notes.empty());
    EXPECT_TRUE(result.gold.empty());
}

TEST(Synthetic, HitsRequestedPrevalenceExactly) {
    const auto result = fc::generate_synthetic_corpus({{"heart_failure", 0.2}}, 100, 7);
    ASSERT_EQ(result.notes.size(), 100u);
    std::size_t positive_notes = 0;
    for (auto& g : result.gold) {
        if (!g.sentence_index && g.category == "heart_failure" && g.label) ++positive_notes;
    }
    EXPECT_EQ(positive_notes, 20u);
}

TEST(Synthetic, DeterministicForAFixedSeed) {
    const std::map<std::string, double> spec = {{"heart_failure", 0.3}, {"arrhythmia", 0.25}};
    const auto a = fc::generate_synthetic_corpus(spec, 25, 99);
    const auto b = fc::generate_synthetic_corpus(spec, 25, 99);
    ASSERT_EQ(a.notes.size(), b.notes.size());
    for (std::size_t i = 0; i < a.notes.size(); ++i) {
        EXPECT_EQ(a.notes[i].note_id, b.notes[i].note_id);
        EXPECT_EQ(a.notes[i].text, b.notes[i].text);
    }
    ASSERT_EQ(a.gold.size(), b.gold.size());
    for (std::size_t i = 0; i < a.gold.size(); ++i) {
        EXPECT_EQ(a.gold[i].note_id, b.gold[i].note_id);
        EXPECT_EQ(a.gold[i].category, b.gold[i].category);
        EXPECT_EQ(a.gold[i].sentence_index, b.gold[i].sentence_index);
        EXPECT_EQ(a.gold[i].label, b.gold[i].label);
    }
}

TEST(Synthetic, GoldIsInternallyConsistent) {
    const std::map<std::string, double> spec = {{"heart_failure", 0.4},
                                                {"drug_of_interest", 0.3}};
    const auto result = fc::generate_synthetic_corpus(spec, 30, 5);

    std::map<std::string, std::size_t> sentence_counts;
    for (auto& note : result.notes) {
        sentence_counts[note.note_id] = fc::segment_sentences(note.text).size();
    }

    // note-level label must equal the OR of the note's sentence labels
    std::map<std::pair<std::string, std::string>, bool> note_label, any_sentence;
    for (auto& g : result.gold) {
        const auto key = std::make_pair(g.note_id, g.category);
        if (g.sentence_index) {
            ASSERT_LT(*g.sentence_index, sentence_counts.at(g.note_id));
            any_sentence[key] = any_sentence[key] || g.label;
        } else {
            ASSERT_EQ(note_label.count(key), 0u);  // one note-level row per pair
            note_label[key] = g.label;
        }
    }
    ASSERT_EQ(note_label.size(), result.notes.size() * spec.size());
    for (auto& [key, label] : note_label) {
        EXPECT_EQ(label, any_sentence.count(key) ? any_sentence.at(key) : false)
            << key.first << "/" << key.second;
    }
}

TEST(Synthetic, RejectsBadArguments) {
    EXPECT_THROW(fc::generate_synthetic_corpus({{"heart_failure", 1.5}}, 10, 1), fptox::Error);
    EXPECT_THROW(fc::generate_synthetic_corpus({{"no_such_category", 0.5}}, 10, 1), fptox::Error);
}
