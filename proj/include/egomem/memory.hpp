#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "egomem/backend.hpp"
#include "egomem/bm25.hpp"
#include "egomem/corpus.hpp"

namespace egomem {

class MemoryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One agent's self-summary for one memory interval.
struct AgentMemoryEntry {
    std::string agent;  // roster id
    TimeInterval interval;
    std::string text;
};

/// A shared-memory event with When/What/Where/Who/How fields.
struct EventRecord {
    std::string id;
    TimeInterval source_interval;
    std::string when;
    std::string what;
    std::string where;
    std::vector<std::string> who;  // agent display names
    std::string how;
};

/// Flat single-document rendering used for indexing and context.
std::string event_doc_text(const EventRecord& event);

struct BuildReport {
    struct Rejection {
        std::string bucket;
        std::string reason;
    };
    std::vector<std::string> skipped;    // (bucket, agent) pairs that produced no entry
    std::vector<Rejection> rejected;     // event records refused during integration
    std::vector<std::string> warnings;   // non-fatal oddities (unknown names, ...)
};

// ─── MemoryStore ───────────────────────────────────────────────
// The assembled memory: the shared event list, per-agent entries,
// and BM25 indices over each family. Immutable once built; safe to
// share across threads.

class MemoryStore {
public:
    const Roster& roster() const { return roster_; }
    int interval_minutes() const { return interval_minutes_; }

    const std::vector<EventRecord>& shared() const { return shared_; }
    const std::map<std::string, std::vector<AgentMemoryEntry>>& per_agent() const { return per_agent_; }

    const Bm25Index& shared_index() const;
    /// Index over one agent's entries; null when the agent has none.
    const Bm25Index* find_agent_index(const std::string& agent_id) const;
    const Bm25Index& agent_index(const std::string& agent_id) const;

    /// Index over every agent's entries, chronologically merged.
    const Bm25Index& flat_index() const;
    /// (agent id, entry position) for each flat-index doc id.
    const std::pair<std::string, std::size_t>& flat_ref(int doc_id) const;

    const AgentMemoryEntry& entry(const std::string& agent_id, std::size_t pos) const;
    const BuildReport& report() const { return report_; }
    const Bm25Params& params() const { return params_; }

    std::size_t total_entries() const;

private:
    friend class StoreAssembler;

    Roster roster_;
    int interval_minutes_ = 10;
    Bm25Params params_;
    std::vector<EventRecord> shared_;
    std::map<std::string, std::vector<AgentMemoryEntry>> per_agent_;
    Bm25Index shared_index_;
    std::map<std::string, Bm25Index> agent_indices_;
    Bm25Index flat_index_;
    std::vector<std::pair<std::string, std::size_t>> flat_refs_;
    BuildReport report_;
};

// ─── Operations ────────────────────────────────────────────────

/// Summarizes one agent's records for one bucket. Returns nothing for
/// an empty record list or an empty backend summary.
std::optional<AgentMemoryEntry> summarize_agent_interval(Backend& backend,
                                                         const PromptLibrary& prompts,
                                                         const Agent& agent,
                                                         const TimeInterval& bucket_interval,
                                                         std::span<const CaptionRecord> records);

/// Integrates all agents' entries for one bucket into event records.
/// The backend must answer with a JSON object (or array of objects)
/// carrying when/what/where/who/how; malformed events are rejected
/// into the report rather than aborting the bucket.
std::vector<EventRecord> integrate_interval(Backend& backend, const PromptLibrary& prompts,
                                            const Roster& roster,
                                            const TimeInterval& bucket_interval,
                                            std::span<const AgentMemoryEntry> entries,
                                            BuildReport& report);

/// Builds the full store from a validated caption corpus, processing
/// buckets in chronological order.
MemoryStore build_memory(Backend& backend, const PromptLibrary& prompts, const Roster& roster,
                         std::span<const CaptionRecord> records, int interval_minutes = 10,
                         Bm25Params params = {});

/// Derives the store a smaller team would have had: keeps the given
/// agents' entries and re-integrates the shared memory from them.
MemoryStore rebuild_for_agents(const MemoryStore& store, std::span<const std::string> agent_ids,
                               Backend& backend, const PromptLibrary& prompts);

void save_store(const MemoryStore& store, const std::string& dir);
MemoryStore load_store(const std::string& dir, Bm25Params params = {});

}  // namespace egomem
