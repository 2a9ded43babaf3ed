#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "egomem/backend.hpp"
#include "egomem/bm25.hpp"
#include "egomem/corpus.hpp"
#include "egomem/memory.hpp"

namespace egomem {

class PipelineError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct AblationFlags {
    /// System-level retrieval runs over the flat per-agent entry
    /// index instead of the shared event memory.
    bool disable_shared_memory = false;
    /// Skip agent sub-queries; answer from system hits only.
    bool disable_dynamic_retrieval = false;
    /// Consult only this agent's memory for both stages.
    std::optional<std::string> restrict_agent;
    /// Behave as if only the first m roster agents' data exist.
    std::optional<int> max_agents;
};

struct PipelineConfig {
    int n = 20;                       // system-level top-n
    int k = 5;                        // agent-level top-k
    double tau = 10.0;                // agent-level score threshold
    int context_token_budget = 8192;  // whitespace tokens
    int max_agent_queries = 6;
    AblationFlags ablations;
};

struct AgentQuery {
    std::string agent;  // roster id
    std::string sub_query;
};

struct AnswerTrace {
    std::string question_id;
    std::vector<ScoredMemory> system_hits;
    std::vector<AgentQuery> agent_queries;
    /// Hit lists keyed by roster id, in query order.
    std::vector<std::pair<std::string, std::vector<ScoredMemory>>> agent_hits;
    std::string raw_answer;
    std::optional<int> chosen_index;
    std::string context_text;
    int context_tokens = 0;
    double latency_seconds = 0.0;
    std::vector<std::string> flags;
};

/// Top-n events from the shared memory.
std::vector<ScoredMemory> retrieve_system(const MemoryStore& store, const std::string& query, int n);

/// Asks the backend which agents to consult and with what sub-query.
/// `hit_who_names` are display names mentioned by the system hits.
/// Unknown agents are dropped with a warning appended to `warnings`;
/// duplicates collapse; at most `max_queries` survive.
std::vector<AgentQuery> generate_agent_queries(Backend& backend, const PromptLibrary& prompts,
                                               const Roster& roster, const std::string& query,
                                               std::span<const ScoredMemory> system_hits,
                                               std::span<const std::string> hit_who_names,
                                               int max_queries, std::vector<std::string>& warnings);

/// Top-k from one agent's memory, keeping only scores >= tau.
std::vector<ScoredMemory> retrieve_agent(const MemoryStore& store, const AgentQuery& query, int k,
                                         double tau);

/// First standalone letter A-E (followed by ')' '.' ':' or a token
/// boundary); else the option appearing verbatim (case-insensitive)
/// in `raw`; else nothing.
std::optional<int> extract_choice(const std::string& raw, std::span<const std::string> options);

/// The full answer pipeline: system retrieval, agent-wise dynamic
/// retrieval, context assembly under the token budget, synthesis.
AnswerTrace answer_question(const MemoryStore& store, Backend& backend,
                            const PromptLibrary& prompts, const PipelineConfig& config,
                            const QaItem& item);

/// Synthesis only: answers `item` from a prebuilt context string.
/// Used by the baseline and oracle evaluation modes.
AnswerTrace answer_with_context(Backend& backend, const PromptLibrary& prompts,
                                const PipelineConfig& config, const QaItem& item,
                                std::string context);

}  // namespace egomem
