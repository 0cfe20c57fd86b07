#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "fptox/eval.hpp"
#include "fptox/rng.hpp"
#include "oracles.hpp"

namespace ev = fptox::eval;
namespace oracle = fptox::test::oracle;

TEST(Confusion, CountsEveryCell) {
    const std::vector<bool> gold = {true, true, false, false, true};
    const std::vector<bool> pred = {true, false, true, false, true};
    const auto c = ev::confusion(pred, gold);
    EXPECT_EQ(c.tp, 2u);
    EXPECT_EQ(c.fn, 1u);
    EXPECT_EQ(c.fp, 1u);
    EXPECT_EQ(c.tn, 1u);
    EXPECT_EQ(c.support_pos(), 3u);
    EXPECT_EQ(c.support_neg(), 2u);
    EXPECT_EQ(c.total(), 5u);
    EXPECT_THROW(ev::confusion({true}, {true, false}), fptox::Error);
}

TEST(Prf, MatchesHandComputedValues) {
    const auto m = ev::precision_recall_f1(ev::ConfusionCounts{3, 0, 1, 4});
    EXPECT_DOUBLE_EQ(m.precision, 1.0);
    EXPECT_DOUBLE_EQ(m.recall, 0.75);
    EXPECT_NEAR(m.f1, 6.0 / 7.0, 1e-12);
}

TEST(Prf, ZeroDenominatorsYieldZero) {
    const auto empty = ev::precision_recall_f1(ev::ConfusionCounts{});
    EXPECT_DOUBLE_EQ(empty.precision, 0.0);
    EXPECT_DOUBLE_EQ(empty.recall, 0.0);
    EXPECT_DOUBLE_EQ(empty.f1, 0.0);

    const auto no_preds = ev::precision_recall_f1(ev::ConfusionCounts{0, 0, 5, 5});
    EXPECT_DOUBLE_EQ(no_preds.precision, 0.0);
    EXPECT_DOUBLE_EQ(no_preds.recall, 0.0);
    EXPECT_DOUBLE_EQ(no_preds.f1, 0.0);

    const auto no_gold = ev::precision_recall_f1(ev::ConfusionCounts{0, 3, 0, 2});
    EXPECT_DOUBLE_EQ(no_gold.precision, 0.0);
    EXPECT_DOUBLE_EQ(no_gold.f1, 0.0);
}

TEST(WeightedPrf, AveragesBothClassViewsBySupport) {
    // tp=1, fp=0, fn=1, tn=2
    const auto m = ev::weighted_prf(ev::ConfusionCounts{1, 0, 1, 2});
    EXPECT_NEAR(m.precision, 5.0 / 6.0, 1e-12);
    EXPECT_NEAR(m.recall, 0.75, 1e-12);
    EXPECT_NEAR(m.f1, 11.0 / 15.0, 1e-12);
}

TEST(WeightedPrf, AllPositiveSupportReducesToPositiveMetrics) {
    const ev::ConfusionCounts c{3, 0, 1, 0};
    const auto w = ev::weighted_prf(c);
    const auto p = ev::precision_recall_f1(c);
    EXPECT_DOUBLE_EQ(w.precision, p.precision);
    EXPECT_DOUBLE_EQ(w.recall, p.recall);
    EXPECT_DOUBLE_EQ(w.f1, p.f1);

    EXPECT_DOUBLE_EQ(ev::weighted_prf(ev::ConfusionCounts{}).f1, 0.0);
}

TEST(MacroAverage, AveragesMetricsAndSumsSupports) {
    ev::CategoryMetrics a;
    a.n_pos = 10;
    a.precision = 0.6;
    a.recall = 1.0;
    a.f1 = 0.8;
    a.weighted_f1 = 0.7;
    ev::CategoryMetrics b;
    b.n_pos = 4;
    b.precision = 1.0;
    b.recall = 1.0;
    b.f1 = 1.0;
    b.weighted_f1 = 0.9;

    const auto avg = ev::macro_average({a, b});
    EXPECT_EQ(avg.n_pos, 14u);
    EXPECT_NEAR(avg.precision, 0.8, 1e-12);
    EXPECT_NEAR(avg.recall, 1.0, 1e-12);
    EXPECT_NEAR(avg.f1, 0.9, 1e-12);
    EXPECT_NEAR(avg.weighted_f1, 0.8, 1e-12);

    EXPECT_THROW(ev::macro_average({}), fptox::Error);
}

TEST(Kappa, MatchesTextbookCases) {
    EXPECT_DOUBLE_EQ(
        ev::cohens_kappa({true, true, false, false}, {true, false, true, false}), 0.0);

    const std::vector<bool> mixed = {true, false, true, true, false};
    EXPECT_DOUBLE_EQ(ev::cohens_kappa(mixed, mixed), 1.0);

    const std::vector<bool> constant(4, true);
    EXPECT_DOUBLE_EQ(ev::cohens_kappa(constant, constant), 1.0);  // p_e = 1, perfect

    EXPECT_DOUBLE_EQ(ev::cohens_kappa({false, false}, {true, true}), 0.0);

    EXPECT_THROW(ev::cohens_kappa({true}, {true, false}), fptox::Error);
    EXPECT_THROW(ev::cohens_kappa({}, {}), fptox::Error);
}

TEST(Kappa, IsSymmetricAndMatchesTheContingencyOracle) {
    fptox::DeterministicRng rng(111);
    for (int iter = 0; iter < 100; ++iter) {
        const std::size_t n = 1 + rng.bounded(20);
        std::vector<bool> a, b;
        for (std::size_t i = 0; i < n; ++i) {
            a.push_back(rng.bounded(2) == 1);
            b.push_back(rng.bounded(2) == 1);
        }
        const double k = ev::cohens_kappa(a, b);
        EXPECT_NEAR(k, oracle::brute_kappa(a, b), 1e-12);
        EXPECT_NEAR(k, ev::cohens_kappa(b, a), 1e-12);
        EXPECT_GE(k, -1.0 - 1e-12);
        EXPECT_LE(k, 1.0 + 1e-12);
    }
}

TEST(Agreement, EnumeratesAllAnnotatorPairs) {
    const std::vector<bool> r1 = {true, false, true, false};
    const std::vector<bool> r2 = {true, false, false, false};
    const std::vector<bool> r3 = {false, true, true, false};
    const auto report = ev::pairwise_agreement({r1, r2, r3});
    ASSERT_EQ(report.pairwise.size(), 3u);
    EXPECT_EQ(report.pairwise[0].first, (std::pair<std::size_t, std::size_t>{0, 1}));
    EXPECT_EQ(report.pairwise[1].first, (std::pair<std::size_t, std::size_t>{0, 2}));
    EXPECT_EQ(report.pairwise[2].first, (std::pair<std::size_t, std::size_t>{1, 2}));
    double sum = 0.0;
    for (auto& [_, k] : report.pairwise) sum += k;
    EXPECT_NEAR(report.average, sum / 3.0, 1e-12);
    EXPECT_THROW(ev::pairwise_agreement({r1}), fptox::Error);
}

namespace {

ev::ComparisonTable sample_table() {
    ev::ComparisonTable table;
    ev::CategoryMetrics m1;
    m1.n_pos = 7;
    m1.precision = 0.5;
    m1.recall = 0.25;
    m1.f1 = 1.0 / 3.0;
    m1.weighted_precision = 0.75;
    m1.weighted_recall = 0.5;
    m1.weighted_f1 = 0.6;
    ev::CategoryMetrics m2;
    m2.n_pos = 3;
    m2.precision = 1.0;
    m2.recall = 0.8;
    m2.f1 = 2.0 * 0.8 / 1.8;
    m2.weighted_precision = 0.9;
    m2.weighted_recall = 0.85;
    m2.weighted_f1 = 0.875;
    table["rule"].per_category["arrhythmia"] = m1;
    table["rule"].per_category["heart_failure"] = m2;
    table["svm"].per_category["arrhythmia"] = m2;
    return table;
}

}  // namespace

TEST(ComparisonCsv, UsesTheDocumentedSchema) {
    EXPECT_STREQ(ev::comparison_csv_header(),
                 "method,category,n_pos,precision,recall,f1,weighted_precision,weighted_recall,"
                 "weighted_f1");

    const auto csv = ev::comparison_to_csv(sample_table());
    std::istringstream lines(csv);
    std::string line;
    std::vector<std::string> all;
    while (std::getline(lines, line)) all.push_back(line);

    // header + (2 categories + average) for "rule" + (1 category + average) for "svm"
    ASSERT_EQ(all.size(), 6u);
    EXPECT_EQ(all[0], ev::comparison_csv_header());
    EXPECT_EQ(all[1].substr(0, 22), "rule,arrhythmia,7,0.50");
    EXPECT_EQ(all[3].substr(0, 13), "rule,average,");
    EXPECT_EQ(all[4].substr(0, 15), "svm,arrhythmia,");
    EXPECT_EQ(all[5].substr(0, 12), "svm,average,");

    EXPECT_EQ(ev::comparison_to_csv({}), std::string(ev::comparison_csv_header()) + "\n");
}

TEST(ComparisonCsv, FiveCategoriesYieldSixDataRows) {
    ev::ComparisonTable table;
    for (const std::string cat : {"a", "b", "c", "d", "e"}) {
        ev::CategoryMetrics m;
        m.n_pos = 1;
        m.f1 = 0.5;
        table["rule"].per_category[cat] = m;
    }
    const auto csv = ev::comparison_to_csv(table);
    const auto rows = static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n'));
    EXPECT_EQ(rows, 7u);  // header + 5 categories + 1 average
}

TEST(ComparisonCsv, ParseRoundTripsAndSkipsAverageRows) {
    const auto table = sample_table();
    const auto csv = ev::comparison_to_csv(table);
    std::istringstream in(csv);
    const auto parsed = ev::parse_comparison_csv(in, "test");

    ASSERT_EQ(parsed.size(), 2u);
    ASSERT_EQ(parsed.at("rule").per_category.size(), 2u);  // "average" not a category
    ASSERT_EQ(parsed.at("svm").per_category.size(), 1u);

    const auto& m = parsed.at("rule").per_category.at("arrhythmia");
    EXPECT_EQ(m.n_pos, 7u);
    EXPECT_NEAR(m.precision, 0.5, 1e-9);
    EXPECT_NEAR(m.recall, 0.25, 1e-9);
    EXPECT_NEAR(m.f1, 1.0 / 3.0, 1e-4);  // 4-decimal rendering
    EXPECT_NEAR(m.weighted_f1, 0.6, 1e-9);
}

TEST(ComparisonCsv, RejectsMalformedRows) {
    std::istringstream missing_fields("method,category,n_pos\nrule,hf,1\n");
    EXPECT_THROW(ev::parse_comparison_csv(missing_fields, "bad"), fptox::Error);

    std::istringstream bad_number(
        std::string(ev::comparison_csv_header()) +
        "\nrule,hf,xx,0.5,0.5,0.5,0.5,0.5,0.5\n");
    EXPECT_THROW(ev::parse_comparison_csv(bad_number, "bad"), fptox::Error);
}

TEST(ComparisonMerge, OverlaysExternalRows) {
    auto base = sample_table();
    ev::ComparisonTable extra;
    ev::CategoryMetrics external;
    external.n_pos = 9;
    external.f1 = 0.91;
    extra["clinicalbert"].per_category["arrhythmia"] = external;
    ev::CategoryMetrics override_m;
    override_m.n_pos = 42;
    extra["rule"].per_category["arrhythmia"] = override_m;

    const auto merged = ev::merge_comparison(base, extra);
    EXPECT_EQ(merged.size(), 3u);
    EXPECT_EQ(merged.at("clinicalbert").per_category.at("arrhythmia").n_pos, 9u);
    EXPECT_EQ(merged.at("rule").per_category.at("arrhythmia").n_pos, 42u);
    EXPECT_EQ(merged.at("rule").per_category.at("heart_failure").n_pos, 3u);  // untouched
}

TEST(ComparisonText, RendersMethodsByCategoryGrids) {
    const auto text = ev::comparison_to_text(sample_table());

    // Three stacked sections.
    EXPECT_NE(text.find("Positive-class precision/recall/F1 per category"), std::string::npos);
    EXPECT_NE(text.find("Weighted precision/recall/F1 per category"), std::string::npos);
    EXPECT_NE(text.find("Positive support (n_pos) per category"), std::string::npos);

    // Column headers carry sorted categories plus the synthetic average column.
    const auto arr_pos = text.find("arrhythmia");
    const auto hf_pos = text.find("heart_failure");
    const auto avg_pos = text.find("average");
    ASSERT_NE(arr_pos, std::string::npos);
    ASSERT_NE(hf_pos, std::string::npos);
    ASSERT_NE(avg_pos, std::string::npos);
    EXPECT_LT(arr_pos, hf_pos);
    EXPECT_LT(hf_pos, avg_pos);

    // svm has no heart_failure row -> "-" placeholder appears.
    EXPECT_NE(text.find('-'), std::string::npos);
    // P/R/F1 cells use three decimals.
    EXPECT_NE(text.find("0.500/0.250/0.333"), std::string::npos);

    // Single trailing newline, no trailing blank lines.
    ASSERT_FALSE(text.empty());
    EXPECT_EQ(text.back(), '\n');
    EXPECT_NE(text[text.size() - 2], '\n');

    std::istringstream lines(text);
    std::string line;
    std::vector<std::string> all;
    while (std::getline(lines, line)) all.push_back(line);
    // Section 1: title + header + 2 method rows.
    EXPECT_EQ(all[0], "Positive-class precision/recall/F1 per category");
    EXPECT_EQ(all[2].substr(0, 4), "rule");
    EXPECT_EQ(all[3].substr(0, 3), "svm");
}
