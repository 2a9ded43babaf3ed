#include "egomem/bm25.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace egomem {

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (char c : text) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            current += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

Bm25Index Bm25Index::build(std::vector<std::string> docs, Bm25Params params) {
    if (docs.empty()) throw IndexError("cannot build an index over an empty collection");
    if (!(params.k1 > 0.0)) throw IndexError("k1 must be > 0");
    if (params.b < 0.0 || params.b > 1.0) throw IndexError("b must be in [0,1]");

    Bm25Index index;
    index.params_ = params;
    index.docs_ = std::move(docs);
    index.doc_lengths_.reserve(index.docs_.size());

    long total_len = 0;
    for (std::size_t doc_id = 0; doc_id < index.docs_.size(); ++doc_id) {
        auto tokens = tokenize(index.docs_[doc_id]);
        index.doc_lengths_.push_back(static_cast<int>(tokens.size()));
        total_len += static_cast<long>(tokens.size());
        std::sort(tokens.begin(), tokens.end());
        for (std::size_t i = 0; i < tokens.size();) {
            std::size_t j = i;
            while (j < tokens.size() && tokens[j] == tokens[i]) ++j;
            index.postings_[tokens[i]].emplace_back(static_cast<int>(doc_id), static_cast<int>(j - i));
            i = j;
        }
    }
    if (total_len == 0) throw IndexError("collection tokenizes to nothing");
    index.avg_doc_len_ = static_cast<double>(total_len) / static_cast<double>(index.docs_.size());
    return index;
}

int Bm25Index::doc_freq(const std::string& term) const {
    auto it = postings_.find(term);
    return it == postings_.end() ? 0 : static_cast<int>(it->second.size());
}

std::vector<ScoredMemory> Bm25Index::top_n(const std::string& query, int n) const {
    std::vector<ScoredMemory> result;
    if (n < 1 || docs_.empty()) return result;

    const double k1 = params_.k1;
    const double b = params_.b;
    const double num_docs = static_cast<double>(docs_.size());

    // Contributions accumulate per document in query-token order.
    std::unordered_map<int, double> scores;
    for (const auto& term : tokenize(query)) {
        auto it = postings_.find(term);
        if (it == postings_.end()) continue;
        const double df = static_cast<double>(it->second.size());
        const double idf = std::log(1.0 + (num_docs - df + 0.5) / (df + 0.5));
        for (const auto& [doc_id, tf_count] : it->second) {
            const double tf = static_cast<double>(tf_count);
            const double dl = static_cast<double>(doc_lengths_[static_cast<std::size_t>(doc_id)]);
            const double denom = tf + k1 * (1.0 - b + b * (dl / avg_doc_len_));
            scores[doc_id] += idf * (tf * (k1 + 1.0) / denom);
        }
    }

    result.reserve(scores.size());
    for (const auto& [doc_id, score] : scores) {
        if (score > 0.0) result.push_back({doc_id, score, docs_[static_cast<std::size_t>(doc_id)]});
    }
    std::sort(result.begin(), result.end(), [](const ScoredMemory& a, const ScoredMemory& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.doc_id < b.doc_id;
    });
    if (static_cast<int>(result.size()) > n) result.resize(static_cast<std::size_t>(n));
    return result;
}

}  // namespace egomem
