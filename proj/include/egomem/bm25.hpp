#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace egomem {

class IndexError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Lowercases and splits on every non-alphanumeric character; empty
/// tokens are dropped. No stemming, no stopword removal.
std::vector<std::string> tokenize(std::string_view text);

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

struct ScoredMemory {
    int doc_id = 0;
    double score = 0.0;
    std::string text;  // the indexed document text
};

// ─── Bm25Index ─────────────────────────────────────────────────
// Inverted index over a fixed document collection. Build-once and
// immutable; concurrent queries are safe. Scoring uses the
// non-negative idf form ln(1 + (N - df + 0.5)/(df + 0.5)) so that
// downstream score thresholds stay meaningful.

class Bm25Index {
public:
    Bm25Index() = default;

    /// Doc ids are assigned 0..n-1 in input order. Throws IndexError
    /// when the collection contains no tokens at all.
    static Bm25Index build(std::vector<std::string> docs, Bm25Params params = {});

    /// Top-n documents by BM25 score, score-descending with ties
    /// broken by ascending doc id. Documents scoring 0 are excluded,
    /// so the result may be shorter than n.
    std::vector<ScoredMemory> top_n(const std::string& query, int n) const;

    int doc_count() const { return static_cast<int>(docs_.size()); }
    double avg_doc_len() const { return avg_doc_len_; }
    int doc_length(int doc_id) const { return doc_lengths_.at(static_cast<std::size_t>(doc_id)); }
    int doc_freq(const std::string& term) const;
    const std::string& doc_text(int doc_id) const { return docs_.at(static_cast<std::size_t>(doc_id)); }
    const Bm25Params& params() const { return params_; }

private:
    std::vector<std::string> docs_;
    std::vector<int> doc_lengths_;
    double avg_doc_len_ = 0.0;
    // term -> (doc_id, term frequency), doc ids ascending
    std::unordered_map<std::string, std::vector<std::pair<int, int>>> postings_;
    Bm25Params params_;
};

}  // namespace egomem
