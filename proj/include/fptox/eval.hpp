#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "fptox/error.hpp"

namespace fptox::eval {

struct ConfusionCounts {
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;

    std::size_t support_pos() const { return tp + fn; }
    std::size_t support_neg() const { return tn + fp; }
    std::size_t total() const { return tp + fp + fn + tn; }
};

inline ConfusionCounts confusion(const std::vector<bool>& pred, const std::vector<bool>& gold) {
    if (pred.size() != gold.size()) {
        throw Error("confusion: prediction/gold length mismatch (" + std::to_string(pred.size()) +
                    " vs " + std::to_string(gold.size()) + ")");
    }
    ConfusionCounts c;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (gold[i]) {
            (pred[i] ? c.tp : c.fn) += 1;
        } else {
            (pred[i] ? c.fp : c.tn) += 1;
        }
    }
    return c;
}

struct Prf {
    double precision = 0.0, recall = 0.0, f1 = 0.0;
};

// Zero denominators yield 0 by policy.
inline Prf precision_recall_f1(const ConfusionCounts& c) {
    Prf m;
    if (c.tp + c.fp > 0) m.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    if (c.tp + c.fn > 0) m.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    if (m.precision + m.recall > 0.0) {
        m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    }
    return m;
}

// Per-class metrics averaged with class-support weights.
inline Prf weighted_prf(const ConfusionCounts& c) {
    if (c.total() == 0) return {};
    const Prf pos = precision_recall_f1(c);
    // negative class viewed as the positive one
    const Prf neg = precision_recall_f1(ConfusionCounts{c.tn, c.fn, c.fp, c.tp});
    const double sp = static_cast<double>(c.support_pos());
    const double sn = static_cast<double>(c.support_neg());
    const double denom = sp + sn;
    Prf m;
    m.precision = (sp * pos.precision + sn * neg.precision) / denom;
    m.recall = (sp * pos.recall + sn * neg.recall) / denom;
    m.f1 = (sp * pos.f1 + sn * neg.f1) / denom;
    return m;
}

struct CategoryMetrics {
    std::size_t n_pos = 0;  // positive-class support
    double precision = 0.0, recall = 0.0, f1 = 0.0;
    double weighted_precision = 0.0, weighted_recall = 0.0, weighted_f1 = 0.0;
};

inline CategoryMetrics category_metrics(const ConfusionCounts& c) {
    CategoryMetrics m;
    m.n_pos = c.support_pos();
    const Prf p = precision_recall_f1(c);
    m.precision = p.precision;
    m.recall = p.recall;
    m.f1 = p.f1;
    const Prf w = weighted_prf(c);
    m.weighted_precision = w.precision;
    m.weighted_recall = w.recall;
    m.weighted_f1 = w.f1;
    return m;
}

// Unweighted mean per metric; supports summed.
inline CategoryMetrics macro_average(const std::vector<CategoryMetrics>& reports) {
    if (reports.empty()) throw Error("macro_average: no categories");
    CategoryMetrics avg;
    const double n = static_cast<double>(reports.size());
    for (auto& r : reports) {
        avg.n_pos += r.n_pos;
        avg.precision += r.precision / n;
        avg.recall += r.recall / n;
        avg.f1 += r.f1 / n;
        avg.weighted_precision += r.weighted_precision / n;
        avg.weighted_recall += r.weighted_recall / n;
        avg.weighted_f1 += r.weighted_f1 / n;
    }
    return avg;
}

// Cohen's kappa: (p_o - p_e) / (1 - p_e); when p_e = 1 (both raters have
// constant marginals) kappa is 1 for perfect agreement, else 0.
inline double cohens_kappa(const std::vector<bool>& a, const std::vector<bool>& b) {
    if (a.size() != b.size()) throw Error("kappa: label vectors differ in length");
    if (a.empty()) throw Error("kappa: empty label vectors");
    const double n = static_cast<double>(a.size());
    std::size_t agree = 0, a_pos = 0, b_pos = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        agree += (a[i] == b[i]) ? 1 : 0;
        a_pos += a[i] ? 1 : 0;
        b_pos += b[i] ? 1 : 0;
    }
    const double po = static_cast<double>(agree) / n;
    const double pa = static_cast<double>(a_pos) / n;
    const double pb = static_cast<double>(b_pos) / n;
    const double pe = pa * pb + (1.0 - pa) * (1.0 - pb);
    if (1.0 - pe <= 0.0) return po >= 1.0 ? 1.0 : 0.0;
    return (po - pe) / (1.0 - pe);
}

struct AgreementReport {
    std::vector<std::pair<std::pair<std::size_t, std::size_t>, double>> pairwise;
    double average = 0.0;
};

inline AgreementReport pairwise_agreement(const std::vector<std::vector<bool>>& annotators) {
    if (annotators.size() < 2) throw Error("agreement: need at least two annotators");
    AgreementReport report;
    for (std::size_t i = 0; i < annotators.size(); ++i) {
        for (std::size_t j = i + 1; j < annotators.size(); ++j) {
            report.pairwise.push_back({{i, j}, cohens_kappa(annotators[i], annotators[j])});
        }
    }
    for (auto& [_, k] : report.pairwise) report.average += k;
    report.average /= static_cast<double>(report.pairwise.size());
    return report;
}

// ---------------------------------------------------------------------------
// Comparison report: method rows x category columns, machine- and
// human-readable renderings.

struct MetricsReport {
    std::map<std::string, CategoryMetrics> per_category;
};

using ComparisonTable = std::map<std::string, MetricsReport>;  // method → report

namespace detail {

inline std::string fmt(double v, int digits) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

inline CategoryMetrics report_average(const MetricsReport& report) {
    std::vector<CategoryMetrics> rows;
    for (auto& [_, m] : report.per_category) rows.push_back(m);
    return macro_average(rows);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

}  // namespace detail

inline const char* comparison_csv_header() {
    return "method,category,n_pos,precision,recall,f1,weighted_precision,weighted_recall,"
           "weighted_f1";
}

inline std::string comparison_to_csv(const ComparisonTable& table) {
    std::ostringstream out;
    out << comparison_csv_header() << "\n";
    for (auto& [method, report] : table) {
        for (auto& [category, m] : report.per_category) {
            out << method << ',' << category << ',' << m.n_pos << ','
                << detail::fmt(m.precision, 4) << ',' << detail::fmt(m.recall, 4) << ','
                << detail::fmt(m.f1, 4) << ',' << detail::fmt(m.weighted_precision, 4) << ','
                << detail::fmt(m.weighted_recall, 4) << ',' << detail::fmt(m.weighted_f1, 4)
                << "\n";
        }
        if (!report.per_category.empty()) {
            const CategoryMetrics avg = detail::report_average(report);
            out << method << ",average," << avg.n_pos << ',' << detail::fmt(avg.precision, 4)
                << ',' << detail::fmt(avg.recall, 4) << ',' << detail::fmt(avg.f1, 4) << ','
                << detail::fmt(avg.weighted_precision, 4) << ','
                << detail::fmt(avg.weighted_recall, 4) << ',' << detail::fmt(avg.weighted_f1, 4)
                << "\n";
        }
    }
    return out.str();
}

// Renders one aligned table per metric family: methods as rows, categories
// (plus a macro-average column) as columns, cells formatted "P/R/F1".
inline std::string comparison_to_text(const ComparisonTable& table) {
    std::vector<std::string> categories;
    for (auto& [_, report] : table) {
        for (auto& [category, m] : report.per_category) {
            (void)m;
            if (std::find(categories.begin(), categories.end(), category) == categories.end()) {
                categories.push_back(category);
            }
        }
    }
    std::sort(categories.begin(), categories.end());

    std::vector<std::string> columns = categories;
    columns.push_back("average");

    auto cell_prf = [](const CategoryMetrics& m, bool weighted) {
        if (weighted) {
            return detail::fmt(m.weighted_precision, 3) + "/" +
                   detail::fmt(m.weighted_recall, 3) + "/" + detail::fmt(m.weighted_f1, 3);
        }
        return detail::fmt(m.precision, 3) + "/" + detail::fmt(m.recall, 3) + "/" +
               detail::fmt(m.f1, 3);
    };

    // metrics_for returns nullptr when a method has no row for a category.
    std::ostringstream out;
    auto render_section = [&](const std::string& title,
                              const std::function<std::string(const MetricsReport&,
                                                              const std::string&)>& cell) {
        std::size_t method_width = std::string("method").size();
        for (auto& [method, _] : table) method_width = std::max(method_width, method.size());
        std::vector<std::size_t> widths(columns.size());
        for (std::size_t c = 0; c < columns.size(); ++c) widths[c] = columns[c].size();
        std::vector<std::vector<std::string>> rows;
        std::vector<std::string> methods;
        for (auto& [method, report] : table) {
            methods.push_back(method);
            std::vector<std::string> row;
            for (std::size_t c = 0; c < columns.size(); ++c) {
                std::string text = cell(report, columns[c]);
                widths[c] = std::max(widths[c], text.size());
                row.push_back(std::move(text));
            }
            rows.push_back(std::move(row));
        }
        out << title << "\n";
        out << std::string(method_width, ' ');
        for (std::size_t c = 0; c < columns.size(); ++c) {
            out << "  " << columns[c]
                << std::string(widths[c] - columns[c].size(), ' ');
        }
        out << "\n";
        for (std::size_t r = 0; r < rows.size(); ++r) {
            out << methods[r] << std::string(method_width - methods[r].size(), ' ');
            for (std::size_t c = 0; c < columns.size(); ++c) {
                out << "  " << rows[r][c] << std::string(widths[c] - rows[r][c].size(), ' ');
            }
            out << "\n";
        }
        out << "\n";
    };

    auto lookup = [](const MetricsReport& report,
                     const std::string& column) -> const CategoryMetrics* {
        auto it = report.per_category.find(column);
        return it == report.per_category.end() ? nullptr : &it->second;
    };

    render_section("Positive-class precision/recall/F1 per category",
                   [&](const MetricsReport& report, const std::string& column) -> std::string {
                       if (column == "average") {
                           if (report.per_category.empty()) return "-";
                           return cell_prf(detail::report_average(report), false);
                       }
                       const CategoryMetrics* m = lookup(report, column);
                       return m ? cell_prf(*m, false) : "-";
                   });
    render_section("Weighted precision/recall/F1 per category",
                   [&](const MetricsReport& report, const std::string& column) -> std::string {
                       if (column == "average") {
                           if (report.per_category.empty()) return "-";
                           return cell_prf(detail::report_average(report), true);
                       }
                       const CategoryMetrics* m = lookup(report, column);
                       return m ? cell_prf(*m, true) : "-";
                   });
    render_section("Positive support (n_pos) per category",
                   [&](const MetricsReport& report, const std::string& column) -> std::string {
                       if (column == "average") return "-";
                       const CategoryMetrics* m = lookup(report, column);
                       return m ? std::to_string(m->n_pos) : "-";
                   });
    std::string text = out.str();
    while (!text.empty() && text.back() == '\n') text.pop_back();
    text.push_back('\n');
    return text;
}

// Parses rows in the comparison CSV schema; "average" rows are skipped
// because averages are recomputed at render time.
inline ComparisonTable parse_comparison_csv(std::istream& in, const std::string& origin) {
    ComparisonTable table;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto fields = detail::split_csv_line(line);
        if (!header_seen) {
            header_seen = true;
            if (!fields.empty() && fields[0] == "method") continue;  // header row
        }
        if (fields.size() != 9) {
            throw Error(origin + ": line " + std::to_string(line_no) +
                        ": expected 9 CSV fields, got " + std::to_string(fields.size()));
        }
        if (fields[1] == "average") continue;
        try {
            CategoryMetrics m;
            m.n_pos = static_cast<std::size_t>(std::stoull(fields[2]));
            m.precision = std::stod(fields[3]);
            m.recall = std::stod(fields[4]);
            m.f1 = std::stod(fields[5]);
            m.weighted_precision = std::stod(fields[6]);
            m.weighted_recall = std::stod(fields[7]);
            m.weighted_f1 = std::stod(fields[8]);
            table[fields[0]].per_category[fields[1]] = m;
        } catch (const std::exception&) {
            throw Error(origin + ": line " + std::to_string(line_no) + ": malformed numeric field");
        }
    }
    return table;
}

inline ComparisonTable merge_comparison(ComparisonTable base, const ComparisonTable& extra) {
    for (auto& [method, report] : extra) {
        for (auto& [category, m] : report.per_category) {
            base[method].per_category[category] = m;
        }
    }
    return base;
}

}  // namespace fptox::eval
