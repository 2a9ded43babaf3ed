#include "egomem/qafilter.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

#include "egomem/text.hpp"
#include "egomem/vecops.hpp"

namespace egomem {

std::string_view filter_stage_name(FilterStage s) {
    switch (s) {
        case FilterStage::ZeroShot: return "zero_shot";
        case FilterStage::SingleAgent: return "single_agent";
        case FilterStage::CrossModel: return "cross_model";
    }
    return "?";
}

std::string_view filter_decision_name(FilterDecision d) {
    return d == FilterDecision::Keep ? "keep" : "discard";
}

double cosine(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw FilterError("cosine: dimension mismatch (" + std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()) + ")");
    }
    double na = vec::norm(a);
    double nb = vec::norm(b);
    if (na == 0.0 || nb == 0.0) throw FilterError("cosine: zero vector");
    return vec::dot(a, b) / (na * nb);
}

// ─── Multi-span grouping ───────────────────────────────────────

SimilarityGraph build_similarity_graph(std::span<const EmbeddedSample> samples, double delta) {
    SimilarityGraph graph;
    graph.node_count = static_cast<int>(samples.size());
    graph.delta = delta;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        for (std::size_t j = i + 1; j < samples.size(); ++j) {
            if (cosine(samples[i].vector, samples[j].vector) >= delta) {
                graph.edges.emplace_back(static_cast<int>(i), static_cast<int>(j));
            }
        }
    }
    return graph;
}

namespace {

struct UnionFind {
    std::vector<int> parent;

    explicit UnionFind(int n) : parent(static_cast<std::size_t>(n)) {
        std::iota(parent.begin(), parent.end(), 0);
    }
    int find(int x) {
        while (parent[static_cast<std::size_t>(x)] != x) {
            parent[static_cast<std::size_t>(x)] =
                parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
            x = parent[static_cast<std::size_t>(x)];
        }
        return x;
    }
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
    }
};

}  // namespace

std::vector<std::vector<int>> group_multispan(std::span<const EmbeddedSample> samples, double delta) {
    if (samples.size() < 2) throw FilterError("group_multispan needs at least 2 samples");
    SimilarityGraph graph = build_similarity_graph(samples, delta);
    UnionFind uf(graph.node_count);
    for (const auto& [i, j] : graph.edges) uf.unite(i, j);

    std::map<int, std::vector<int>> components;
    for (int i = 0; i < graph.node_count; ++i) components[uf.find(i)].push_back(i);

    std::vector<std::vector<int>> groups;
    for (auto& [root, members] : components) {
        if (members.size() < 2) continue;
        std::sort(members.begin(), members.end());
        groups.push_back(std::move(members));
    }
    // components is keyed by root == smallest member, so groups are
    // already ordered by smallest member.
    return groups;
}

// ─── Zero-shot filtering ───────────────────────────────────────

namespace {

nlohmann::json options_json(const std::array<std::string, 5>& options) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& o : options) arr.push_back(o);
    return arr;
}

std::string options_block(const std::array<std::string, 5>& options) {
    std::string out;
    for (std::size_t i = 0; i < options.size(); ++i) {
        out += static_cast<char>('A' + i);
        out += ") " + options[i] + "\n";
    }
    return out;
}

}  // namespace

FilterVerdict zero_shot_filter(Backend& backend, const PromptLibrary& prompts, const QaItem& item,
                               int trials, int discard_min_correct) {
    GenerationRequest request;
    request.task = Task::FilterJudge;
    request.max_tokens = 16;
    request.inputs = {{"question", item.question}, {"options_json", options_json(item.options).dump()}};
    std::map<std::string, std::string> prompt_inputs = request.inputs;
    prompt_inputs["options"] = options_block(item.options);
    request.prompt = prompts.render(Task::FilterJudge, prompt_inputs);

    int correct = 0;
    std::string evidence = "trials:";
    for (int t = 0; t < trials; ++t) {
        std::string raw = backend.generate(request).text;
        auto choice = extract_choice(raw, item.options);
        bool hit = choice.has_value() && *choice == item.answer_index;
        correct += hit ? 1 : 0;
        evidence += ' ';
        evidence += choice ? std::string(1, static_cast<char>('A' + *choice)) : "?";
    }
    evidence += "; correct " + std::to_string(correct) + "/" + std::to_string(trials);

    FilterVerdict verdict;
    verdict.qa_id = item.id;
    verdict.stage = FilterStage::ZeroShot;
    verdict.decision = correct >= discard_min_correct ? FilterDecision::Discard : FilterDecision::Keep;
    verdict.evidence = evidence;
    return verdict;
}

// ─── Single-agent filtering ────────────────────────────────────

FilterVerdict single_agent_filter(Backend& backend, const PromptLibrary& prompts,
                                  const QaItem& item, const MemoryStore& store,
                                  const PipelineConfig& pipeline, std::uint64_t seed) {
    const std::string& correct_option = item.options[static_cast<std::size_t>(item.answer_index)];
    std::vector<const Agent*> named;
    for (const auto& agent : store.roster().agents()) {
        if (contains_word_ci(item.question, agent.name) || contains_word_ci(correct_option, agent.name)) {
            named.push_back(&agent);
        }
    }
    std::string evidence;
    if (named.empty()) {
        std::mt19937_64 rng(seed);
        std::size_t pick = static_cast<std::size_t>(rng() % store.roster().size());
        named.push_back(&store.roster().at(pick));
        evidence = "no names; random agent " + named[0]->id + "; ";
    }

    bool any_correct = false;
    evidence += "runs:";
    for (const Agent* agent : named) {
        PipelineConfig restricted = pipeline;
        restricted.ablations.restrict_agent = agent->id;
        AnswerTrace trace = answer_question(store, backend, prompts, restricted, item);
        bool hit = trace.chosen_index.has_value() && *trace.chosen_index == item.answer_index;
        any_correct = any_correct || hit;
        evidence += ' ' + agent->name + (hit ? "=correct" : "=wrong");
    }

    FilterVerdict verdict;
    verdict.qa_id = item.id;
    verdict.stage = FilterStage::SingleAgent;
    verdict.decision = any_correct ? FilterDecision::Discard : FilterDecision::Keep;
    verdict.evidence = evidence;
    return verdict;
}

// ─── Cross-model validation ────────────────────────────────────

namespace {

/// "keep"/"flag" token parse; anything else is nothing.
std::optional<FilterDecision> parse_judgment(const std::string& raw) {
    bool flag = contains_word_ci(raw, "flag");
    bool keep = contains_word_ci(raw, "keep");
    if (flag) return FilterDecision::Discard;
    if (keep) return FilterDecision::Keep;
    return std::nullopt;
}

}  // namespace

FilterVerdict cross_model_validate(Backend& judge0, Backend& judge1, const PromptLibrary& prompts,
                                   const QaItem& item, const std::string& context) {
    GenerationRequest request;
    request.task = Task::Validate;
    request.max_tokens = 16;
    request.inputs = {{"question", item.question},
                      {"options_json", options_json(item.options).dump()},
                      {"answer_letter", std::string(1, static_cast<char>('A' + item.answer_index))},
                      {"context", context}};
    std::map<std::string, std::string> prompt_inputs = request.inputs;
    prompt_inputs["options"] = options_block(item.options);
    request.prompt = prompts.render(Task::Validate, prompt_inputs);

    FilterVerdict verdict;
    verdict.qa_id = item.id;
    verdict.stage = FilterStage::CrossModel;
    verdict.decision = FilterDecision::Keep;

    Backend* judges[2] = {&judge0, &judge1};
    for (int i = 0; i < 2; ++i) {
        std::string raw = judges[i]->generate(request).text;
        auto judgment = parse_judgment(raw);
        if (!verdict.evidence.empty()) verdict.evidence += ' ';
        if (!judgment) {
            // Benchmark quality favors false discards over false keeps.
            verdict.decision = FilterDecision::Discard;
            verdict.evidence += "unparseable:backend" + std::to_string(i);
        } else {
            verdict.evidence +=
                "judge" + std::to_string(i) + "=" +
                (*judgment == FilterDecision::Keep ? "keep" : "flag");
            if (*judgment == FilterDecision::Discard) verdict.decision = FilterDecision::Discard;
        }
    }
    return verdict;
}

// ─── Cascade ───────────────────────────────────────────────────

CascadeResult run_cascade(Backend& primary, Backend& judge0, Backend& judge1,
                          const PromptLibrary& prompts, std::span<const QaItem> items,
                          const MemoryStore& store, const CascadeConfig& config) {
    CascadeResult result;
    struct Entry {
        std::size_t input_pos;
        const QaItem* item;
    };
    std::vector<Entry> alive;
    for (std::size_t i = 0; i < items.size(); ++i) alive.push_back({i, &items[i]});

    // (input position, stage index) -> verdict, flattened at the end.
    std::map<std::pair<std::size_t, int>, FilterVerdict> ordered_log;

    for (int stage = 0; stage < 3; ++stage) {
        std::vector<Entry> survivors;
        for (const Entry& entry : alive) {
            const QaItem& item = *entry.item;
            FilterVerdict verdict;
            try {
                switch (stage) {
                    case 0:
                        verdict = zero_shot_filter(primary, prompts, item, config.trials,
                                                   config.discard_min_correct);
                        break;
                    case 1:
                        verdict = single_agent_filter(primary, prompts, item, store,
                                                      config.pipeline, config.seed);
                        break;
                    default: {
                        if (!item.gold_context) {
                            throw FilterError("missing gold_context for cross-model validation");
                        }
                        verdict = cross_model_validate(judge0, judge1, prompts, item,
                                                       *item.gold_context);
                        break;
                    }
                }
            } catch (const std::exception& e) {
                result.quarantined.push_back({item.id, static_cast<FilterStage>(stage), e.what()});
                continue;
            }
            ordered_log[{entry.input_pos, stage}] = verdict;
            if (verdict.decision == FilterDecision::Keep) survivors.push_back(entry);
        }
        alive = std::move(survivors);
    }

    for (auto& [_, verdict] : ordered_log) result.log.push_back(std::move(verdict));
    for (const Entry& entry : alive) result.kept.push_back(*entry.item);
    return result;
}

}  // namespace egomem
