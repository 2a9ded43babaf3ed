#include "egomem/memory.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "egomem/text.hpp"

namespace fs = std::filesystem;

namespace egomem {

std::string event_doc_text(const EventRecord& event) {
    std::string who;
    for (std::size_t i = 0; i < event.who.size(); ++i) {
        if (i > 0) who += ", ";
        who += event.who[i];
    }
    return event.when + " | " + event.what + " | " + event.where + " | " + who + " | " + event.how;
}

// ─── Store assembly ────────────────────────────────────────────

class StoreAssembler {
public:
    static MemoryStore assemble(Roster roster, int interval_minutes, Bm25Params params,
                                std::vector<EventRecord> shared,
                                std::map<std::string, std::vector<AgentMemoryEntry>> per_agent,
                                BuildReport report) {
        MemoryStore store;
        store.roster_ = std::move(roster);
        store.interval_minutes_ = interval_minutes;
        store.params_ = params;
        store.shared_ = std::move(shared);
        store.per_agent_ = std::move(per_agent);
        store.report_ = std::move(report);

        if (store.shared_.empty()) throw MemoryError("no memory: shared event list is empty");

        std::vector<std::string> shared_docs;
        shared_docs.reserve(store.shared_.size());
        for (const auto& event : store.shared_) shared_docs.push_back(event_doc_text(event));
        store.shared_index_ = Bm25Index::build(std::move(shared_docs), params);

        for (const auto& [agent_id, entries] : store.per_agent_) {
            if (entries.empty()) continue;
            std::vector<std::string> docs;
            docs.reserve(entries.size());
            for (const auto& e : entries) docs.push_back(e.text);
            try {
                store.agent_indices_.emplace(agent_id, Bm25Index::build(std::move(docs), params));
            } catch (const IndexError& e) {
                store.report_.warnings.push_back("agent " + agent_id + " unindexable: " + e.what());
            }
        }

        // Flat view: every agent entry, chronologically merged.
        for (const auto& [agent_id, entries] : store.per_agent_) {
            for (std::size_t i = 0; i < entries.size(); ++i) store.flat_refs_.emplace_back(agent_id, i);
        }
        std::sort(store.flat_refs_.begin(), store.flat_refs_.end(),
                  [&](const auto& a, const auto& b) {
                      const auto& ea = store.per_agent_.at(a.first)[a.second];
                      const auto& eb = store.per_agent_.at(b.first)[b.second];
                      if (ea.interval.start != eb.interval.start) return ea.interval.start < eb.interval.start;
                      return a.first < b.first;
                  });
        std::vector<std::string> flat_docs;
        flat_docs.reserve(store.flat_refs_.size());
        for (const auto& [agent_id, pos] : store.flat_refs_) {
            flat_docs.push_back(store.per_agent_.at(agent_id)[pos].text);
        }
        if (!flat_docs.empty()) store.flat_index_ = Bm25Index::build(std::move(flat_docs), params);
        return store;
    }
};

const Bm25Index& MemoryStore::shared_index() const { return shared_index_; }

const Bm25Index* MemoryStore::find_agent_index(const std::string& agent_id) const {
    auto it = agent_indices_.find(agent_id);
    return it == agent_indices_.end() ? nullptr : &it->second;
}

const Bm25Index& MemoryStore::agent_index(const std::string& agent_id) const {
    const Bm25Index* idx = find_agent_index(agent_id);
    if (idx == nullptr) throw MemoryError("no index for agent " + agent_id);
    return *idx;
}

const Bm25Index& MemoryStore::flat_index() const { return flat_index_; }

const std::pair<std::string, std::size_t>& MemoryStore::flat_ref(int doc_id) const {
    return flat_refs_.at(static_cast<std::size_t>(doc_id));
}

const AgentMemoryEntry& MemoryStore::entry(const std::string& agent_id, std::size_t pos) const {
    return per_agent_.at(agent_id).at(pos);
}

std::size_t MemoryStore::total_entries() const {
    std::size_t n = 0;
    for (const auto& [_, entries] : per_agent_) n += entries.size();
    return n;
}

// ─── Summarize ─────────────────────────────────────────────────

std::optional<AgentMemoryEntry> summarize_agent_interval(Backend& backend,
                                                         const PromptLibrary& prompts,
                                                         const Agent& agent,
                                                         const TimeInterval& bucket_interval,
                                                         std::span<const CaptionRecord> records) {
    if (records.empty()) return std::nullopt;
    nlohmann::json captions = nlohmann::json::array();
    for (const auto& r : records) captions.push_back(r.text);

    GenerationRequest request;
    request.task = Task::SummarizeAgent;
    request.max_tokens = 512;
    request.inputs = {{"agent_name", agent.name},
                      {"start", bucket_interval.start.canonical()},
                      {"end", bucket_interval.end.canonical()},
                      {"captions_json", captions.dump()}};
    std::map<std::string, std::string> prompt_inputs = request.inputs;
    std::string caption_lines;
    for (const auto& r : records) {
        caption_lines += "- [" + r.interval.start.canonical() + "] " + r.text + "\n";
    }
    prompt_inputs["captions"] = caption_lines;
    request.prompt = prompts.render(Task::SummarizeAgent, prompt_inputs);

    std::string text = backend.generate(request).text;
    if (trim(text).empty()) return std::nullopt;
    return AgentMemoryEntry{agent.id, bucket_interval, std::move(text)};
}

// ─── Integrate ─────────────────────────────────────────────────

namespace {

std::optional<EventRecord> parse_event(const nlohmann::json& j, const TimeInterval& bucket_interval,
                                       const Roster& roster, const std::string& bucket_key,
                                       BuildReport& report) {
    for (const char* field : {"when", "what", "where", "who", "how"}) {
        if (!j.contains(field)) {
            report.rejected.push_back({bucket_key, std::string("missing field: ") + field});
            return std::nullopt;
        }
    }
    EventRecord event;
    event.source_interval = bucket_interval;
    try {
        event.when = j.at("when").get<std::string>();
        event.what = j.at("what").get<std::string>();
        event.where = j.at("where").get<std::string>();
        event.how = j.at("how").get<std::string>();
        for (const auto& name : j.at("who")) event.who.push_back(name.get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        report.rejected.push_back({bucket_key, std::string("bad field type: ") + e.what()});
        return std::nullopt;
    }
    if (trim(event.what).empty()) {
        report.rejected.push_back({bucket_key, "empty field: what"});
        return std::nullopt;
    }
    for (const auto& name : event.who) {
        if (roster.find_name(name) == nullptr) {
            report.warnings.push_back(bucket_key + ": unknown who name '" + name + "'");
        }
    }
    return event;
}

}  // namespace

std::vector<EventRecord> integrate_interval(Backend& backend, const PromptLibrary& prompts,
                                            const Roster& roster,
                                            const TimeInterval& bucket_interval,
                                            std::span<const AgentMemoryEntry> entries,
                                            BuildReport& report) {
    if (entries.empty()) throw MemoryError("integrate_interval: empty bucket");
    const std::string bucket_key = bucket_interval.start.canonical();

    nlohmann::json agents = nlohmann::json::array();
    nlohmann::json texts = nlohmann::json::array();
    std::string entry_lines;
    for (const auto& e : entries) {
        const Agent* agent = roster.find_id(e.agent);
        std::string display = agent != nullptr ? agent->name : e.agent;
        agents.push_back(display);
        texts.push_back(e.text);
        entry_lines += display + ": " + e.text + "\n";
    }

    GenerationRequest request;
    request.task = Task::IntegrateEvents;
    request.max_tokens = 1024;
    request.inputs = {{"bucket", bucket_key},
                      {"agents_json", agents.dump()},
                      {"entries_json", texts.dump()}};
    std::map<std::string, std::string> prompt_inputs = request.inputs;
    prompt_inputs["entries"] = entry_lines;
    request.prompt = prompts.render(Task::IntegrateEvents, prompt_inputs);

    std::string raw = backend.generate(request).text;
    nlohmann::json parsed;
    try {
        parsed = nlohmann::json::parse(raw);
    } catch (const nlohmann::json::exception&) {
        report.rejected.push_back({bucket_key, "unparseable integration output"});
        return {};
    }

    std::vector<EventRecord> events;
    auto add = [&](const nlohmann::json& j) {
        if (auto event = parse_event(j, bucket_interval, roster, bucket_key, report)) {
            event->id = bucket_key + "/" + std::to_string(events.size());
            events.push_back(std::move(*event));
        }
    };
    if (parsed.is_array()) {
        for (const auto& j : parsed) add(j);
    } else if (parsed.is_object()) {
        add(parsed);
    } else {
        report.rejected.push_back({bucket_key, "integration output is neither object nor array"});
    }
    return events;
}

// ─── Build ─────────────────────────────────────────────────────

namespace {

/// [bucket start, bucket start + width), clamped to the last instant
/// of the day for buckets touching midnight.
TimeInterval bucket_window(Timestamp start, int interval_minutes) {
    int end_minute = start.minute() + interval_minutes;
    int end_hour = start.hour() + end_minute / 60;
    end_minute %= 60;
    Timestamp end = end_hour > 23 ? Timestamp(start.day(), 23, 59, 59, 99)
                                  : Timestamp(start.day(), end_hour, end_minute, 0, 0);
    return make_interval(start, end);
}

}  // namespace

MemoryStore build_memory(Backend& backend, const PromptLibrary& prompts, const Roster& roster,
                         std::span<const CaptionRecord> records, int interval_minutes,
                         Bm25Params params) {
    BucketMap buckets = bucket_by_interval(records, interval_minutes);
    BuildReport report;
    std::vector<EventRecord> shared;
    std::map<std::string, std::vector<AgentMemoryEntry>> per_agent;
    for (const auto& agent : roster.agents()) per_agent[agent.id];

    for (const auto& [key, by_agent] : buckets) {
        TimeInterval bucket_interval = bucket_window(key.start(), interval_minutes);

        std::vector<AgentMemoryEntry> bucket_entries;
        for (const auto& [agent_id, group] : by_agent) {
            const Agent* agent = roster.find_id(agent_id);
            if (agent == nullptr) throw MemoryError("record for unknown agent " + agent_id);
            std::optional<AgentMemoryEntry> entry;
            try {
                entry = summarize_agent_interval(backend, prompts, *agent, bucket_interval, group);
            } catch (const BackendError& e) {
                throw BackendError(key.canonical() + " " + agent_id + ": " + e.what());
            }
            if (!entry) {
                report.skipped.push_back(key.canonical() + " " + agent_id);
                continue;
            }
            per_agent[agent_id].push_back(*entry);
            bucket_entries.push_back(std::move(*entry));
        }
        if (bucket_entries.empty()) continue;

        std::vector<EventRecord> events;
        try {
            events = integrate_interval(backend, prompts, roster, bucket_interval, bucket_entries, report);
        } catch (const BackendError& e) {
            throw BackendError(key.canonical() + ": " + e.what());
        }
        if (events.empty()) {
            report.warnings.push_back(key.canonical() + ": bucket produced no events");
        }
        for (auto& event : events) shared.push_back(std::move(event));
    }

    return StoreAssembler::assemble(roster, interval_minutes, params, std::move(shared),
                                    std::move(per_agent), std::move(report));
}

MemoryStore rebuild_for_agents(const MemoryStore& store, std::span<const std::string> agent_ids,
                               Backend& backend, const PromptLibrary& prompts) {
    std::vector<Agent> sub_agents;
    for (const auto& agent : store.roster().agents()) {
        if (std::find(agent_ids.begin(), agent_ids.end(), agent.id) != agent_ids.end()) {
            sub_agents.push_back(agent);
        }
    }
    Roster sub_roster(sub_agents);
    if (sub_roster.size() == 0) throw MemoryError("agent subset is empty");

    std::map<std::string, std::vector<AgentMemoryEntry>> per_agent;
    std::map<Timestamp, std::vector<AgentMemoryEntry>> by_bucket;
    for (const auto& agent : sub_agents) {
        auto it = store.per_agent().find(agent.id);
        if (it == store.per_agent().end()) continue;
        per_agent[agent.id] = it->second;
        for (const auto& entry : it->second) by_bucket[entry.interval.start].push_back(entry);
    }

    BuildReport report;
    std::vector<EventRecord> shared;
    for (auto& [start, entries] : by_bucket) {
        std::sort(entries.begin(), entries.end(),
                  [](const AgentMemoryEntry& a, const AgentMemoryEntry& b) { return a.agent < b.agent; });
        auto events = integrate_interval(backend, prompts, sub_roster, entries.front().interval,
                                         entries, report);
        for (auto& event : events) shared.push_back(std::move(event));
    }
    return StoreAssembler::assemble(std::move(sub_roster), store.interval_minutes(), store.params(),
                                    std::move(shared), std::move(per_agent), std::move(report));
}

// ─── Persistence ───────────────────────────────────────────────

void save_store(const MemoryStore& store, const std::string& dir) {
    fs::create_directories(dir);
    store.roster().save_json_file((fs::path(dir) / "roster.json").string());

    {
        std::ofstream out(fs::path(dir) / "meta.json");
        out << nlohmann::json{{"version", 1}, {"interval_minutes", store.interval_minutes()}}.dump(2)
            << '\n';
    }
    {
        std::ofstream out(fs::path(dir) / "shared.jsonl");
        for (const auto& event : store.shared()) {
            out << nlohmann::json{{"id", event.id},
                                  {"bucket", event.source_interval.start.canonical()},
                                  {"when", event.when},
                                  {"what", event.what},
                                  {"where", event.where},
                                  {"who", event.who},
                                  {"how", event.how}}
                       .dump()
                << '\n';
        }
    }
    for (const auto& [agent_id, entries] : store.per_agent()) {
        std::ofstream out(fs::path(dir) / ("agent_" + agent_id + ".jsonl"));
        for (const auto& entry : entries) {
            out << nlohmann::json{{"bucket", entry.interval.start.canonical()}, {"text", entry.text}}
                       .dump()
                << '\n';
        }
    }
    {
        nlohmann::json rejected = nlohmann::json::array();
        for (const auto& r : store.report().rejected) {
            rejected.push_back({{"bucket", r.bucket}, {"reason", r.reason}});
        }
        std::ofstream out(fs::path(dir) / "build_report.json");
        out << nlohmann::json{{"skipped", store.report().skipped},
                              {"rejected", rejected},
                              {"warnings", store.report().warnings}}
                   .dump(2)
            << '\n';
    }
}

namespace {

TimeInterval bucket_interval_from_key(const std::string& canonical, int interval_minutes) {
    return bucket_window(Timestamp::parse_canonical(canonical), interval_minutes);
}

}  // namespace

MemoryStore load_store(const std::string& dir, Bm25Params params) {
    fs::path base(dir);
    if (!fs::exists(base / "roster.json")) throw MemoryError("not a store directory: " + dir);
    Roster roster = Roster::from_json_file((base / "roster.json").string());

    int interval_minutes = 10;
    {
        std::ifstream in(base / "meta.json");
        if (in) {
            nlohmann::json meta;
            in >> meta;
            interval_minutes = meta.value("interval_minutes", 10);
        }
    }

    std::vector<EventRecord> shared;
    {
        std::ifstream in(base / "shared.jsonl");
        if (!in) throw MemoryError("missing shared.jsonl in " + dir);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (trim(line).empty()) continue;
            try {
                auto j = nlohmann::json::parse(line);
                EventRecord event;
                event.id = j.at("id").get<std::string>();
                event.source_interval =
                    bucket_interval_from_key(j.at("bucket").get<std::string>(), interval_minutes);
                event.when = j.at("when").get<std::string>();
                event.what = j.at("what").get<std::string>();
                event.where = j.at("where").get<std::string>();
                event.how = j.at("how").get<std::string>();
                for (const auto& name : j.at("who")) event.who.push_back(name.get<std::string>());
                shared.push_back(std::move(event));
            } catch (const std::exception& e) {
                throw MemoryError("shared.jsonl:" + std::to_string(lineno) + ": " + e.what());
            }
        }
    }

    std::map<std::string, std::vector<AgentMemoryEntry>> per_agent;
    for (const auto& agent : roster.agents()) {
        per_agent[agent.id];
        fs::path p = base / ("agent_" + agent.id + ".jsonl");
        std::ifstream in(p);
        if (!in) continue;
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (trim(line).empty()) continue;
            try {
                auto j = nlohmann::json::parse(line);
                AgentMemoryEntry entry;
                entry.agent = agent.id;
                entry.interval =
                    bucket_interval_from_key(j.at("bucket").get<std::string>(), interval_minutes);
                entry.text = j.at("text").get<std::string>();
                if (trim(entry.text).empty()) throw MemoryError("empty entry text");
                per_agent[agent.id].push_back(std::move(entry));
            } catch (const std::exception& e) {
                throw MemoryError(p.string() + ":" + std::to_string(lineno) + ": " + e.what());
            }
        }
    }

    return StoreAssembler::assemble(std::move(roster), interval_minutes, params, std::move(shared),
                                    std::move(per_agent), BuildReport{});
}

}  // namespace egomem
