#include "egomem/retrieval.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <set>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "egomem/text.hpp"

namespace egomem {

std::vector<ScoredMemory> retrieve_system(const MemoryStore& store, const std::string& query, int n) {
    return store.shared_index().top_n(query, n);
}

std::vector<AgentQuery> generate_agent_queries(Backend& backend, const PromptLibrary& prompts,
                                               const Roster& roster, const std::string& query,
                                               std::span<const ScoredMemory> system_hits,
                                               std::span<const std::string> hit_who_names,
                                               int max_queries, std::vector<std::string>& warnings) {
    nlohmann::json roster_names = nlohmann::json::array();
    std::string agents_line;
    for (const auto& agent : roster.agents()) {
        roster_names.push_back(agent.name);
        if (!agents_line.empty()) agents_line += ", ";
        agents_line += agent.name;
    }
    nlohmann::json who = nlohmann::json::array();
    for (const auto& name : hit_who_names) who.push_back(name);
    std::string system_context;
    for (const auto& hit : system_hits) system_context += "- " + hit.text + "\n";

    GenerationRequest request;
    request.task = Task::AgentQueries;
    request.max_tokens = 512;
    request.inputs = {{"question", query},
                      {"roster_json", roster_names.dump()},
                      {"who_json", who.dump()}};
    std::map<std::string, std::string> prompt_inputs = request.inputs;
    prompt_inputs["agents"] = agents_line;
    prompt_inputs["system_context"] = system_context;
    request.prompt = prompts.render(Task::AgentQueries, prompt_inputs);

    std::string raw = backend.generate(request).text;
    nlohmann::json parsed;
    try {
        parsed = nlohmann::json::parse(raw);
    } catch (const nlohmann::json::exception&) {
        warnings.push_back("agent-query output unparseable, skipping dynamic retrieval");
        return {};
    }
    if (!parsed.is_array()) {
        warnings.push_back("agent-query output is not an array, skipping dynamic retrieval");
        return {};
    }

    std::vector<AgentQuery> queries;
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& j : parsed) {
        if (static_cast<int>(queries.size()) >= max_queries) break;
        std::string name, sub_query;
        try {
            name = j.at("agent").get<std::string>();
            sub_query = j.at("query").get<std::string>();
        } catch (const nlohmann::json::exception&) {
            warnings.push_back("malformed agent-query entry dropped");
            continue;
        }
        if (trim(sub_query).empty()) continue;
        const Agent* agent = roster.find_name(name);
        if (agent == nullptr) agent = roster.find_id(name);
        if (agent == nullptr) {
            warnings.push_back("unknown agent '" + name + "' dropped from agent queries");
            continue;
        }
        if (seen.emplace(agent->id, sub_query).second) queries.push_back({agent->id, sub_query});
    }
    return queries;
}

std::vector<ScoredMemory> retrieve_agent(const MemoryStore& store, const AgentQuery& query, int k,
                                         double tau) {
    const Bm25Index* index = store.find_agent_index(query.agent);
    if (index == nullptr) return {};
    std::vector<ScoredMemory> hits = index->top_n(query.sub_query, k);
    std::erase_if(hits, [tau](const ScoredMemory& h) { return h.score < tau; });
    return hits;
}

std::optional<int> extract_choice(const std::string& raw, std::span<const std::string> options) {
    for (std::size_t i = 0; i < raw.size(); ++i) {
        char c = raw[i];
        if (c < 'A' || c > 'E') continue;
        bool left_ok = i == 0 || !std::isalnum(static_cast<unsigned char>(raw[i - 1]));
        bool right_ok = i + 1 == raw.size();
        if (!right_ok) {
            char next = raw[i + 1];
            right_ok = next == ')' || next == '.' || next == ':' ||
                       std::isspace(static_cast<unsigned char>(next));
        }
        if (left_ok && right_ok) return c - 'A';
    }
    std::string raw_lower = to_lower(raw);
    for (std::size_t i = 0; i < options.size(); ++i) {
        if (options[i].empty()) continue;
        if (raw_lower.find(to_lower(options[i])) != std::string::npos) return static_cast<int>(i);
    }
    return std::nullopt;
}

// ─── Pipeline ──────────────────────────────────────────────────

namespace {

std::string options_block(const std::array<std::string, 5>& options) {
    std::string out;
    for (std::size_t i = 0; i < options.size(); ++i) {
        out += static_cast<char>('A' + i);
        out += ") " + options[i] + "\n";
    }
    return out;
}

nlohmann::json options_json(const std::array<std::string, 5>& options) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& o : options) arr.push_back(o);
    return arr;
}

/// Runs the Answer task over an assembled context and fills the
/// synthesis half of the trace.
void synthesize(Backend& backend, const PromptLibrary& prompts, const PipelineConfig& config,
                const QaItem& item, std::string context, AnswerTrace& trace) {
    context = truncate_to_tokens(context, config.context_token_budget);
    trace.context_tokens = count_whitespace_tokens(context);
    if (trace.context_tokens == 0) trace.flags.push_back("no_context");

    GenerationRequest request;
    request.task = Task::Answer;
    request.max_tokens = 64;
    request.inputs = {{"question", item.question},
                      {"options_json", options_json(item.options).dump()},
                      {"context", context}};
    std::map<std::string, std::string> prompt_inputs = request.inputs;
    prompt_inputs["options"] = options_block(item.options);
    request.prompt = prompts.render(Task::Answer, prompt_inputs);

    trace.raw_answer = backend.generate(request).text;
    trace.chosen_index = extract_choice(trace.raw_answer, item.options);
    trace.context_text = std::move(context);
}

}  // namespace

AnswerTrace answer_question(const MemoryStore& store, Backend& backend,
                            const PromptLibrary& prompts, const PipelineConfig& config,
                            const QaItem& item) {
    const AblationFlags& ab = config.ablations;
    if (ab.disable_shared_memory && ab.disable_dynamic_retrieval) {
        throw PipelineError("both shared memory and dynamic retrieval disabled: nothing to retrieve");
    }
    if (config.n < 1 || config.k < 1) throw PipelineError("n and k must be >= 1");
    if (config.tau < 0) throw PipelineError("tau must be >= 0");

    // Agent-count ablation: derive the store the smaller team would
    // have had. Excluded from latency, like any memory build.
    const MemoryStore* effective = &store;
    std::optional<MemoryStore> derived;
    if (ab.max_agents && static_cast<std::size_t>(*ab.max_agents) < store.roster().size()) {
        if (*ab.max_agents < 1) throw PipelineError("max_agents must be >= 1");
        std::vector<std::string> ids;
        for (std::size_t i = 0; i < static_cast<std::size_t>(*ab.max_agents); ++i) {
            ids.push_back(store.roster().at(i).id);
        }
        derived.emplace(rebuild_for_agents(store, ids, backend, prompts));
        effective = &*derived;
    }

    const Agent* restricted = nullptr;
    if (ab.restrict_agent) {
        restricted = effective->roster().find_id(*ab.restrict_agent);
        if (restricted == nullptr) {
            throw PipelineError("restrict_agent '" + *ab.restrict_agent + "' not in store");
        }
    }

    AnswerTrace trace;
    trace.question_id = item.id;
    auto t0 = std::chrono::steady_clock::now();

    // System-level stage.
    std::vector<std::string> hit_who_names;
    if (restricted != nullptr) {
        const Bm25Index* index = effective->find_agent_index(restricted->id);
        if (index != nullptr) trace.system_hits = index->top_n(item.question, config.n);
        if (!trace.system_hits.empty()) hit_who_names.push_back(restricted->name);
    } else if (ab.disable_shared_memory) {
        trace.system_hits = effective->flat_index().top_n(item.question, config.n);
        std::set<std::string> seen;
        for (const auto& hit : trace.system_hits) {
            const auto& [agent_id, _] = effective->flat_ref(hit.doc_id);
            const Agent* agent = effective->roster().find_id(agent_id);
            if (agent != nullptr && seen.insert(agent->name).second) {
                hit_who_names.push_back(agent->name);
            }
        }
    } else {
        trace.system_hits = retrieve_system(*effective, item.question, config.n);
        std::set<std::string> seen;
        for (const auto& hit : trace.system_hits) {
            for (const auto& name : effective->shared()[static_cast<std::size_t>(hit.doc_id)].who) {
                if (seen.insert(name).second) hit_who_names.push_back(name);
            }
        }
    }

    // Agent-wise dynamic stage.
    if (!ab.disable_dynamic_retrieval) {
        Roster query_roster =
            restricted != nullptr ? Roster(std::vector<Agent>{*restricted}) : effective->roster();
        trace.agent_queries =
            generate_agent_queries(backend, prompts, query_roster, item.question, trace.system_hits,
                                   hit_who_names, config.max_agent_queries, trace.flags);
        if (restricted != nullptr) {
            std::erase_if(trace.agent_queries,
                          [&](const AgentQuery& q) { return q.agent != restricted->id; });
        }
        for (const auto& query : trace.agent_queries) {
            trace.agent_hits.emplace_back(query.agent,
                                          retrieve_agent(*effective, query, config.k, config.tau));
        }
    }

    // Context: system events first, then per-agent details in
    // chronological order within each agent group.
    std::string context;
    if (!trace.system_hits.empty()) {
        context += ab.disable_shared_memory || restricted != nullptr ? "Retrieved memories:\n"
                                                                     : "Shared events:\n";
        for (const auto& hit : trace.system_hits) context += "- " + hit.text + "\n";
    }
    for (const auto& [agent_id, hits] : trace.agent_hits) {
        if (hits.empty()) continue;
        const Agent* agent = effective->roster().find_id(agent_id);
        context += "Agent " + (agent != nullptr ? agent->name : agent_id) + ":\n";
        std::vector<ScoredMemory> ordered = hits;
        std::sort(ordered.begin(), ordered.end(),
                  [](const ScoredMemory& a, const ScoredMemory& b) { return a.doc_id < b.doc_id; });
        for (const auto& hit : ordered) {
            const auto& entry = effective->entry(agent_id, static_cast<std::size_t>(hit.doc_id));
            context += "- [" + entry.interval.start.canonical() + "] " + hit.text + "\n";
        }
    }

    synthesize(backend, prompts, config, item, std::move(context), trace);
    trace.latency_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return trace;
}

AnswerTrace answer_with_context(Backend& backend, const PromptLibrary& prompts,
                                const PipelineConfig& config, const QaItem& item,
                                std::string context) {
    AnswerTrace trace;
    trace.question_id = item.id;
    auto t0 = std::chrono::steady_clock::now();
    synthesize(backend, prompts, config, item, std::move(context), trace);
    trace.latency_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return trace;
}

}  // namespace egomem
