#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "egomem/backend.hpp"
#include "egomem/corpus.hpp"
#include "egomem/memory.hpp"
#include "egomem/retrieval.hpp"

namespace egomem {

class FilterError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct EmbeddedSample {
    std::string qa_id;
    std::vector<double> vector;
};

struct SimilarityGraph {
    int node_count = 0;
    std::vector<std::pair<int, int>> edges;  // i < j, deduplicated
    double delta = 0.0;
};

enum class FilterStage { ZeroShot, SingleAgent, CrossModel };
enum class FilterDecision { Keep, Discard };

std::string_view filter_stage_name(FilterStage s);
std::string_view filter_decision_name(FilterDecision d);

struct FilterVerdict {
    std::string qa_id;
    FilterStage stage = FilterStage::ZeroShot;
    FilterDecision decision = FilterDecision::Keep;
    std::string evidence;
};

/// Cosine similarity in [-1, 1]. Throws on dimension mismatch or a
/// zero vector.
double cosine(std::span<const double> a, std::span<const double> b);

/// Edge (i, j) present iff cosine(v_i, v_j) >= delta.
SimilarityGraph build_similarity_graph(std::span<const EmbeddedSample> samples, double delta);

/// Connected components of the delta-thresholded similarity graph,
/// keeping only components with at least two members. Members sorted
/// ascending; groups ordered by smallest member.
std::vector<std::vector<int>> group_multispan(std::span<const EmbeddedSample> samples, double delta);

/// Asks the question `trials` times with no context; the sample is
/// discarded when at least `discard_min_correct` trials hit the
/// correct answer.
FilterVerdict zero_shot_filter(Backend& backend, const PromptLibrary& prompts, const QaItem& item,
                               int trials = 3, int discard_min_correct = 3);

/// Answers the question restricted to each agent named in the
/// question or the correct option (random roster agent when none);
/// discards when any single-agent run succeeds.
FilterVerdict single_agent_filter(Backend& backend, const PromptLibrary& prompts,
                                  const QaItem& item, const MemoryStore& store,
                                  const PipelineConfig& pipeline, std::uint64_t seed);

/// Both judges re-examine the sample against its generation-time
/// context; either flag (or an unparseable judgment) discards.
FilterVerdict cross_model_validate(Backend& judge0, Backend& judge1, const PromptLibrary& prompts,
                                   const QaItem& item, const std::string& context);

struct CascadeConfig {
    int trials = 3;
    int discard_min_correct = 3;
    std::uint64_t seed = 0;
    PipelineConfig pipeline;
};

struct CascadeResult {
    std::vector<QaItem> kept;
    std::vector<FilterVerdict> log;  // ordered by (item input order, stage)
    struct Quarantined {
        std::string qa_id;
        FilterStage stage;
        std::string error;
    };
    std::vector<Quarantined> quarantined;
};

/// ZeroShot -> SingleAgent -> CrossModel, in that order. A discard
/// stops an item; a per-item failure quarantines it without aborting
/// the run.
CascadeResult run_cascade(Backend& primary, Backend& judge0, Backend& judge1,
                          const PromptLibrary& prompts, std::span<const QaItem> items,
                          const MemoryStore& store, const CascadeConfig& config);

}  // namespace egomem
