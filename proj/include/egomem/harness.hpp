#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "egomem/backend.hpp"
#include "egomem/corpus.hpp"
#include "egomem/memory.hpp"
#include "egomem/retrieval.hpp"

namespace egomem {

class HarnessError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class EvalMode { EgoMas, CaptionConcat, FlatBm25, Oracle };

std::string_view eval_mode_name(EvalMode m);
EvalMode parse_eval_mode(std::string_view s);

struct EvalOptions {
    EvalMode mode = EvalMode::EgoMas;
    PipelineConfig pipeline;
    std::uint64_t seed = 0;
    int parallelism = 1;
};

struct CategoryStats {
    int correct = 0;
    int total = 0;
    double accuracy = 0.0;
};

struct EvalReport {
    EvalOptions options;
    std::map<Category, CategoryStats> per_category;  // all five categories present
    int correct = 0;
    int total = 0;
    double overall_accuracy = 0.0;
    double mean_latency_seconds = 0.0;
    double mean_context_tokens = 0.0;
    std::vector<AnswerTrace> traces;  // in item order
};

/// Answers every item once under the configured mode and scores the
/// traces. chosen_index == answer_index counts correct; an absent
/// choice counts incorrect.
EvalReport run_eval(const MemoryStore& store, std::span<const QaItem> items, Backend& backend,
                    const PromptLibrary& prompts, const EvalOptions& options);

struct LatencyStats {
    int sample_size = 0;
    double mean_seconds = 0.0;
    double p50_seconds = 0.0;
    double p95_seconds = 0.0;
    std::vector<std::string> sampled_ids;
};

/// Per-question wall-clock latency over a seeded random sample,
/// excluding memory-build time.
LatencyStats measure_latency(const MemoryStore& store, std::span<const QaItem> items,
                             Backend& backend, const PromptLibrary& prompts,
                             const EvalOptions& options, int sample_size);

struct AblationCell {
    bool shared_memory = true;
    bool dynamic_retrieval = true;
    bool ok = false;
    EvalReport report;   // valid when ok
    std::string error;   // set when the cell is a configuration error
};

struct AblationTable {
    std::vector<AblationCell> cells;  // the 2x2 grid
    std::vector<std::pair<int, EvalReport>> agent_sweep;  // max_agents -> report
};

/// The shared-memory x dynamic-retrieval grid plus an agent-count
/// sweep from 1 to the full roster.
AblationTable compare_ablations(const MemoryStore& store, std::span<const QaItem> items,
                                Backend& backend, const PromptLibrary& prompts,
                                const EvalOptions& base);

// ─── Serialization ─────────────────────────────────────────────
// Reports serialize deterministically; timing fields are emitted
// only when `include_timings` is set so that reruns byte-compare.

nlohmann::json pipeline_to_json(const PipelineConfig& config);
nlohmann::json trace_to_json(const AnswerTrace& trace, bool include_timings = true);
nlohmann::json report_to_json(const EvalReport& report, bool include_timings = true);
nlohmann::json ablation_to_json(const AblationTable& table, bool include_timings = true);

std::string report_table(const EvalReport& report);
std::string ablation_table_text(const AblationTable& table);

}  // namespace egomem
