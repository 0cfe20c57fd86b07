#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fptox/error.hpp"

namespace fptox::features {

// Sparse feature vector: strictly increasing indices, finite values.
struct SparseVector {
    std::vector<std::pair<std::size_t, double>> items;
    std::size_t dim = 0;

    double l2_norm() const {
        double s = 0.0;
        for (auto& [i, v] : items) s += v * v;
        return std::sqrt(s);
    }
};

inline std::vector<std::string> ngrams(const std::vector<std::string>& tokens, std::size_t lo,
                                       std::size_t hi) {
    std::vector<std::string> out;
    for (std::size_t n = lo; n <= hi; ++n) {
        if (n == 0 || n > tokens.size()) continue;
        for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
            std::string g = tokens[i];
            for (std::size_t k = 1; k < n; ++k) {
                g += ' ';
                g += tokens[i + k];
            }
            out.push_back(std::move(g));
        }
    }
    return out;
}

// Term universe observed in training: dense indices in lexicographic term
// order, document frequencies, and the n-gram range used to produce terms.
struct Vocabulary {
    std::vector<std::string> terms;       // index → term, sorted
    std::map<std::string, std::size_t> index;  // term → index
    std::vector<std::size_t> df;          // index → document frequency
    std::size_t n_docs = 0;
    std::pair<std::size_t, std::size_t> ngram_range{1, 2};

    std::size_t size() const { return terms.size(); }
};

inline Vocabulary fit_vocabulary(const std::vector<std::vector<std::string>>& docs,
                                 std::pair<std::size_t, std::size_t> ngram_range = {1, 2}) {
    if (docs.empty()) throw Error("featurizer: empty training set");
    if (ngram_range.first < 1 || ngram_range.second < ngram_range.first) {
        throw Error("featurizer: invalid ngram range");
    }
    std::map<std::string, std::size_t> df_map;
    for (auto& doc : docs) {
        std::map<std::string, bool> seen;
        for (auto& g : ngrams(doc, ngram_range.first, ngram_range.second)) seen[g] = true;
        for (auto& [g, _] : seen) ++df_map[g];
    }
    Vocabulary vocab;
    vocab.n_docs = docs.size();
    vocab.ngram_range = ngram_range;
    for (auto& [term, d] : df_map) {  // std::map iterates sorted → dense sorted indices
        vocab.index.emplace(term, vocab.terms.size());
        vocab.terms.push_back(term);
        vocab.df.push_back(d);
    }
    return vocab;
}

// Raw term counts per document.
inline SparseVector transform_counts(const Vocabulary& vocab,
                                     const std::vector<std::string>& tokens) {
    std::map<std::size_t, double> counts;
    for (auto& g : ngrams(tokens, vocab.ngram_range.first, vocab.ngram_range.second)) {
        auto it = vocab.index.find(g);
        if (it != vocab.index.end()) counts[it->second] += 1.0;
    }
    SparseVector v;
    v.dim = vocab.size();
    v.items.assign(counts.begin(), counts.end());
    return v;
}

inline Vocabulary fit_counts(const std::vector<std::vector<std::string>>& docs,
                             std::pair<std::size_t, std::size_t> ngram_range = {1, 2}) {
    return fit_vocabulary(docs, ngram_range);
}

struct TfidfModel {
    Vocabulary vocab;
    std::vector<double> idf;  // by feature index
};

// Smoothed inverse document frequency: ln((1+N)/(1+df)) + 1.
inline TfidfModel fit_tfidf(const std::vector<std::vector<std::string>>& docs,
                            std::pair<std::size_t, std::size_t> ngram_range = {1, 2}) {
    TfidfModel model;
    model.vocab = fit_vocabulary(docs, ngram_range);
    model.idf.reserve(model.vocab.size());
    const double n = static_cast<double>(model.vocab.n_docs);
    for (std::size_t i = 0; i < model.vocab.size(); ++i) {
        const double df = static_cast<double>(model.vocab.df[i]);
        model.idf.push_back(std::log((1.0 + n) / (1.0 + df)) + 1.0);
    }
    return model;
}

// Sublinear term frequency (1 + ln tf) times idf, L2-normalized.
inline SparseVector transform_tfidf(const TfidfModel& model,
                                    const std::vector<std::string>& tokens) {
    SparseVector v = transform_counts(model.vocab, tokens);
    for (auto& [i, value] : v.items) {
        value = (1.0 + std::log(value)) * model.idf[i];
    }
    double norm = v.l2_norm();
    if (norm > 0.0) {
        for (auto& [i, value] : v.items) value /= norm;
    }
    return v;
}

// ---------------------------------------------------------------------------
// Persistence

inline nlohmann::json vocabulary_to_json(const Vocabulary& vocab) {
    return {{"terms", vocab.terms},
            {"df", vocab.df},
            {"n_docs", vocab.n_docs},
            {"ngram_range", {vocab.ngram_range.first, vocab.ngram_range.second}}};
}

inline Vocabulary vocabulary_from_json(const nlohmann::json& j) {
    Vocabulary vocab;
    vocab.terms = j.at("terms").get<std::vector<std::string>>();
    vocab.df = j.at("df").get<std::vector<std::size_t>>();
    vocab.n_docs = j.at("n_docs").get<std::size_t>();
    vocab.ngram_range = {j.at("ngram_range").at(0).get<std::size_t>(),
                         j.at("ngram_range").at(1).get<std::size_t>()};
    if (vocab.df.size() != vocab.terms.size()) {
        throw Error("featurizer file: df/terms length mismatch");
    }
    for (std::size_t i = 0; i < vocab.terms.size(); ++i) vocab.index.emplace(vocab.terms[i], i);
    return vocab;
}

inline nlohmann::json tfidf_to_json(const TfidfModel& model) {
    nlohmann::json j = vocabulary_to_json(model.vocab);
    j["idf"] = model.idf;
    return j;
}

inline TfidfModel tfidf_from_json(const nlohmann::json& j) {
    TfidfModel model;
    model.vocab = vocabulary_from_json(j);
    model.idf = j.at("idf").get<std::vector<double>>();
    if (model.idf.size() != model.vocab.size()) {
        throw Error("featurizer file: idf length mismatch");
    }
    return model;
}

}  // namespace fptox::features
