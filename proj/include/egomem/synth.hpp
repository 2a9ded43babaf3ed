#pragma once

#include <string>
#include <vector>

#include "egomem/corpus.hpp"

namespace egomem::synth {

// Deterministic synthetic corpus with planted evidence, used by the
// demo CLI and the test suites. Six agents record two days of
// 10-minute buckets of mundane filler captions; each QA item's
// evidence sentences are planted at known (agent, bucket) slots and
// use vocabulary unique to that item, so correct retrieval is
// checkable without any model.

struct PlantedEvidence {
    std::string agent_id;
    Timestamp bucket_start;
    std::string sentence;
};

struct ItemMeta {
    std::string qa_id;
    std::vector<PlantedEvidence> evidence;
    bool single_homed = false;   // evidence lives in exactly one agent's memory
    int min_agents_required = 1; // smallest roster prefix containing all evidence agents
};

struct Fixture {
    Roster roster;
    std::vector<CaptionRecord> captions;
    std::vector<QaItem> qa;
    std::vector<ItemMeta> meta;  // parallel to qa
    int interval_minutes = 10;

    const ItemMeta& meta_for(const std::string& qa_id) const;
};

/// 6 agents x 2 days x 3 hours of 10-minute buckets, 12 single-homed
/// and 8 multi-agent QA items. Fully deterministic.
Fixture make_fixture();

/// Writes roster.json, captions.jsonl, qa.jsonl and manifest.json.
void write_fixture(const Fixture& fixture, const std::string& dir);

}  // namespace egomem::synth
