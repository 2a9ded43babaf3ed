#include "egomem/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "egomem/text.hpp"

namespace egomem {

std::string_view eval_mode_name(EvalMode m) {
    switch (m) {
        case EvalMode::EgoMas: return "egomas";
        case EvalMode::CaptionConcat: return "concat";
        case EvalMode::FlatBm25: return "flat-bm25";
        case EvalMode::Oracle: return "oracle";
    }
    return "?";
}

EvalMode parse_eval_mode(std::string_view s) {
    for (EvalMode m : {EvalMode::EgoMas, EvalMode::CaptionConcat, EvalMode::FlatBm25, EvalMode::Oracle}) {
        if (eval_mode_name(m) == s) return m;
    }
    throw HarnessError("unknown eval mode '" + std::string(s) + "'");
}

// ─── Per-item runners ──────────────────────────────────────────

namespace {

std::string entry_line(const MemoryStore& store, const std::string& agent_id,
                       const AgentMemoryEntry& entry) {
    const Agent* agent = store.roster().find_id(agent_id);
    return "[" + entry.interval.start.canonical() + "] " +
           (agent != nullptr ? agent->name : agent_id) + ": " + entry.text;
}

/// All agents' bucket captions in chronological order, each caption
/// uniformly truncated until the whole context fits the budget.
std::string caption_concat_context(const MemoryStore& store, int budget) {
    std::vector<std::string> lines;
    for (std::size_t doc = 0; doc < store.total_entries(); ++doc) {
        const auto& [agent_id, pos] = store.flat_ref(static_cast<int>(doc));
        lines.push_back(entry_line(store, agent_id, store.entry(agent_id, pos)));
    }
    std::vector<int> lens;
    lens.reserve(lines.size());
    long total = 0;
    for (const auto& line : lines) {
        lens.push_back(count_whitespace_tokens(line));
        total += lens.back();
    }
    if (total > budget) {
        int lo = 0, hi = *std::max_element(lens.begin(), lens.end());
        while (lo < hi) {  // largest uniform per-caption cap that fits
            int mid = (lo + hi + 1) / 2;
            long capped = 0;
            for (int len : lens) capped += std::min(len, mid);
            if (capped <= budget) {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
        for (auto& line : lines) line = truncate_to_tokens(line, lo);
    }
    std::string context;
    for (const auto& line : lines) {
        if (line.empty()) continue;
        context += line;
        context += '\n';
    }
    return context;
}

AnswerTrace run_item(const MemoryStore& store, Backend& backend, const PromptLibrary& prompts,
                     const EvalOptions& options, const QaItem& item) {
    switch (options.mode) {
        case EvalMode::EgoMas:
            return answer_question(store, backend, prompts, options.pipeline, item);
        case EvalMode::CaptionConcat: {
            auto t0 = std::chrono::steady_clock::now();
            std::string context =
                caption_concat_context(store, options.pipeline.context_token_budget);
            AnswerTrace trace =
                answer_with_context(backend, prompts, options.pipeline, item, std::move(context));
            trace.latency_seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            return trace;
        }
        case EvalMode::FlatBm25: {
            auto t0 = std::chrono::steady_clock::now();
            std::vector<ScoredMemory> hits = store.flat_index().top_n(item.question, options.pipeline.k);
            std::string context;
            for (const auto& hit : hits) {
                const auto& [agent_id, pos] = store.flat_ref(hit.doc_id);
                context += entry_line(store, agent_id, store.entry(agent_id, pos)) + "\n";
            }
            AnswerTrace trace =
                answer_with_context(backend, prompts, options.pipeline, item, std::move(context));
            trace.system_hits = std::move(hits);
            trace.latency_seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            return trace;
        }
        case EvalMode::Oracle:
            return answer_with_context(backend, prompts, options.pipeline, item,
                                       item.gold_context.value_or(""));
    }
    throw HarnessError("unhandled eval mode");
}

void validate_options(std::span<const QaItem> items, const EvalOptions& options) {
    if (options.parallelism < 1) throw HarnessError("parallelism must be >= 1");
    if (options.mode == EvalMode::Oracle) {
        for (const auto& item : items) {
            if (!item.gold_context) {
                throw HarnessError("oracle mode requires gold_context on every item; missing for " +
                                   item.id);
            }
        }
    }
    if (options.mode == EvalMode::EgoMas && options.pipeline.ablations.disable_shared_memory &&
        options.pipeline.ablations.disable_dynamic_retrieval) {
        throw PipelineError("both shared memory and dynamic retrieval disabled: nothing to retrieve");
    }
}

}  // namespace

// ─── run_eval ──────────────────────────────────────────────────

EvalReport run_eval(const MemoryStore& store, std::span<const QaItem> items, Backend& backend,
                    const PromptLibrary& prompts, const EvalOptions& options) {
    validate_options(items, options);

    std::vector<AnswerTrace> traces(items.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;

    auto worker = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= items.size()) return;
            try {
                traces[i] = run_item(store, backend, prompts, options, items[i]);
            } catch (...) {
                std::lock_guard lock(failure_mu);
                if (!failure) failure = std::current_exception();
                return;
            }
        }
    };
    if (options.parallelism == 1 || items.size() <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        int threads = std::min<int>(options.parallelism, static_cast<int>(items.size()));
        pool.reserve(static_cast<std::size_t>(threads));
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);

    EvalReport report;
    report.options = options;
    for (Category c : kAllCategories) report.per_category[c];
    double latency_sum = 0.0;
    double context_sum = 0.0;
    for (std::size_t i = 0; i < items.size(); ++i) {
        const QaItem& item = items[i];
        const AnswerTrace& trace = traces[i];
        bool correct = trace.chosen_index.has_value() && *trace.chosen_index == item.answer_index;
        auto& stats = report.per_category[item.category];
        stats.total += 1;
        stats.correct += correct ? 1 : 0;
        report.total += 1;
        report.correct += correct ? 1 : 0;
        latency_sum += trace.latency_seconds;
        context_sum += trace.context_tokens;
    }
    for (auto& [_, stats] : report.per_category) {
        stats.accuracy = stats.total > 0 ? static_cast<double>(stats.correct) / stats.total : 0.0;
    }
    report.overall_accuracy =
        report.total > 0 ? static_cast<double>(report.correct) / report.total : 0.0;
    report.mean_latency_seconds = report.total > 0 ? latency_sum / report.total : 0.0;
    report.mean_context_tokens = report.total > 0 ? context_sum / report.total : 0.0;
    report.traces = std::move(traces);
    return report;
}

// ─── measure_latency ───────────────────────────────────────────

LatencyStats measure_latency(const MemoryStore& store, std::span<const QaItem> items,
                             Backend& backend, const PromptLibrary& prompts,
                             const EvalOptions& options, int sample_size) {
    if (sample_size < 1 || static_cast<std::size_t>(sample_size) > items.size()) {
        throw HarnessError("sample_size must be in [1, dataset size]");
    }
    validate_options(items, options);
    std::vector<std::size_t> indices(items.size());
    std::iota(indices.begin(), indices.end(), 0);
    std::mt19937_64 rng(options.seed);
    for (int i = 0; i < sample_size; ++i) {  // partial Fisher-Yates
        std::size_t j = static_cast<std::size_t>(i) +
                        static_cast<std::size_t>(rng() % (indices.size() - static_cast<std::size_t>(i)));
        std::swap(indices[static_cast<std::size_t>(i)], indices[j]);
    }

    LatencyStats stats;
    stats.sample_size = sample_size;
    std::vector<double> latencies;
    for (int i = 0; i < sample_size; ++i) {
        const QaItem& item = items[indices[static_cast<std::size_t>(i)]];
        stats.sampled_ids.push_back(item.id);
        auto t0 = std::chrono::steady_clock::now();
        run_item(store, backend, prompts, options, item);
        latencies.push_back(
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    std::sort(latencies.begin(), latencies.end());
    auto percentile = [&](double p) {
        std::size_t rank = static_cast<std::size_t>(
            std::ceil(p * static_cast<double>(latencies.size())));
        return latencies[std::min(latencies.size() - 1, rank == 0 ? 0 : rank - 1)];
    };
    stats.mean_seconds = std::accumulate(latencies.begin(), latencies.end(), 0.0) /
                         static_cast<double>(latencies.size());
    stats.p50_seconds = percentile(0.50);
    stats.p95_seconds = percentile(0.95);
    return stats;
}

// ─── compare_ablations ─────────────────────────────────────────

AblationTable compare_ablations(const MemoryStore& store, std::span<const QaItem> items,
                                Backend& backend, const PromptLibrary& prompts,
                                const EvalOptions& base) {
    AblationTable table;
    for (bool shared : {false, true}) {
        for (bool dynamic : {false, true}) {
            AblationCell cell;
            cell.shared_memory = shared;
            cell.dynamic_retrieval = dynamic;
            EvalOptions options = base;
            options.mode = EvalMode::EgoMas;
            options.pipeline.ablations.disable_shared_memory = !shared;
            options.pipeline.ablations.disable_dynamic_retrieval = !dynamic;
            try {
                cell.report = run_eval(store, items, backend, prompts, options);
                cell.ok = true;
            } catch (const std::exception& e) {
                cell.error = e.what();
            }
            table.cells.push_back(std::move(cell));
        }
    }
    for (int m = 1; m <= static_cast<int>(store.roster().size()); ++m) {
        EvalOptions options = base;
        options.mode = EvalMode::EgoMas;
        options.pipeline.ablations = AblationFlags{};
        options.pipeline.ablations.max_agents = m;
        table.agent_sweep.emplace_back(m, run_eval(store, items, backend, prompts, options));
    }
    return table;
}

// ─── Serialization ─────────────────────────────────────────────

nlohmann::json pipeline_to_json(const PipelineConfig& config) {
    nlohmann::json ablations{{"disable_shared_memory", config.ablations.disable_shared_memory},
                             {"disable_dynamic_retrieval", config.ablations.disable_dynamic_retrieval}};
    if (config.ablations.restrict_agent) ablations["restrict_agent"] = *config.ablations.restrict_agent;
    if (config.ablations.max_agents) ablations["max_agents"] = *config.ablations.max_agents;
    return nlohmann::json{{"n", config.n},
                          {"k", config.k},
                          {"tau", config.tau},
                          {"context_token_budget", config.context_token_budget},
                          {"max_agent_queries", config.max_agent_queries},
                          {"ablations", ablations}};
}

namespace {

nlohmann::json hits_to_json(const std::vector<ScoredMemory>& hits) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& h : hits) {
        arr.push_back({{"doc_id", h.doc_id}, {"score", h.score}, {"text", h.text}});
    }
    return arr;
}

}  // namespace

nlohmann::json trace_to_json(const AnswerTrace& trace, bool include_timings) {
    nlohmann::json agent_hits = nlohmann::json::object();
    for (const auto& [agent_id, hits] : trace.agent_hits) agent_hits[agent_id] = hits_to_json(hits);
    nlohmann::json queries = nlohmann::json::array();
    for (const auto& q : trace.agent_queries) {
        queries.push_back({{"agent", q.agent}, {"sub_query", q.sub_query}});
    }
    nlohmann::json j{{"question_id", trace.question_id},
                     {"system_hits", hits_to_json(trace.system_hits)},
                     {"agent_queries", queries},
                     {"agent_hits", agent_hits},
                     {"raw_answer", trace.raw_answer},
                     {"chosen_index", trace.chosen_index ? nlohmann::json(*trace.chosen_index)
                                                         : nlohmann::json(nullptr)},
                     {"context_text", trace.context_text},
                     {"context_tokens", trace.context_tokens},
                     {"flags", trace.flags}};
    if (include_timings) j["latency_seconds"] = trace.latency_seconds;
    return j;
}

nlohmann::json report_to_json(const EvalReport& report, bool include_timings) {
    nlohmann::json per_category = nlohmann::json::object();
    for (const auto& [category, stats] : report.per_category) {
        per_category[std::string(category_name(category))] = {
            {"correct", stats.correct}, {"total", stats.total}, {"accuracy", stats.accuracy}};
    }
    nlohmann::json traces = nlohmann::json::array();
    for (const auto& trace : report.traces) traces.push_back(trace_to_json(trace, include_timings));
    nlohmann::json j{{"mode", std::string(eval_mode_name(report.options.mode))},
                     {"seed", report.options.seed},
                     {"parallelism", report.options.parallelism},
                     {"pipeline", pipeline_to_json(report.options.pipeline)},
                     {"per_category", per_category},
                     {"overall",
                      {{"correct", report.correct},
                       {"total", report.total},
                       {"accuracy", report.overall_accuracy}}},
                     {"mean_context_tokens", report.mean_context_tokens},
                     {"traces", traces}};
    if (include_timings) j["mean_latency_seconds"] = report.mean_latency_seconds;
    return j;
}

nlohmann::json ablation_to_json(const AblationTable& table, bool include_timings) {
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& cell : table.cells) {
        nlohmann::json c{{"shared_memory", cell.shared_memory},
                         {"dynamic_retrieval", cell.dynamic_retrieval}};
        if (cell.ok) {
            c["report"] = report_to_json(cell.report, include_timings);
        } else {
            c["error"] = cell.error;
        }
        cells.push_back(std::move(c));
    }
    nlohmann::json sweep = nlohmann::json::array();
    for (const auto& [m, report] : table.agent_sweep) {
        sweep.push_back({{"max_agents", m}, {"report", report_to_json(report, include_timings)}});
    }
    return nlohmann::json{{"cells", cells}, {"agent_sweep", sweep}};
}

std::string report_table(const EvalReport& report) {
    std::ostringstream out;
    out << "mode: " << eval_mode_name(report.options.mode) << "\n";
    out << "category  correct  total  accuracy\n";
    for (const auto& [category, stats] : report.per_category) {
        char line[96];
        std::snprintf(line, sizeof line, "%-8s  %7d  %5d  %8.4f\n",
                      std::string(category_name(category)).c_str(), stats.correct, stats.total,
                      stats.accuracy);
        out << line;
    }
    char overall[96];
    std::snprintf(overall, sizeof overall, "%-8s  %7d  %5d  %8.4f\n", "overall", report.correct,
                  report.total, report.overall_accuracy);
    out << overall;
    out << "mean context tokens: " << report.mean_context_tokens << "\n";
    out << "mean latency seconds: " << report.mean_latency_seconds << "\n";
    return out.str();
}

std::string ablation_table_text(const AblationTable& table) {
    std::ostringstream out;
    out << "shared_memory  dynamic_retrieval  accuracy\n";
    for (const auto& cell : table.cells) {
        out << (cell.shared_memory ? "on " : "off") << "            "
            << (cell.dynamic_retrieval ? "on " : "off") << "                ";
        if (cell.ok) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.4f", cell.report.overall_accuracy);
            out << buf;
        } else {
            out << "error: " << cell.error;
        }
        out << "\n";
    }
    out << "\nmax_agents  accuracy\n";
    for (const auto& [m, report] : table.agent_sweep) {
        char buf[48];
        std::snprintf(buf, sizeof buf, "%-10d  %.4f\n", m, report.overall_accuracy);
        out << buf;
    }
    return out.str();
}

}  // namespace egomem
