// Command-line front end: memory construction, question answering,
// evaluation, ablations, benchmark filtering, and multi-span grouping.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "egomem/backend.hpp"
#include "egomem/corpus.hpp"
#include "egomem/harness.hpp"
#include "egomem/memory.hpp"
#include "egomem/qafilter.hpp"
#include "egomem/retrieval.hpp"
#include "egomem/synth.hpp"

namespace fs = std::filesystem;
using namespace egomem;

namespace {

struct BackendOpts {
    std::string kind = "mock";
    std::string config_path;
    std::uint64_t seed = 0;
    std::string prompts_dir;
};

void add_backend_opts(CLI::App* cmd, BackendOpts& opts) {
    cmd->add_option("--backend", opts.kind, "Backend kind: mock or http")->check(CLI::IsMember({"mock", "http"}));
    cmd->add_option("--backend-config", opts.config_path, "Backend config JSON (http)");
    cmd->add_option("--seed", opts.seed, "Seed for the mock backend and sampling");
    cmd->add_option("--prompts", opts.prompts_dir, "Prompt template directory override");
}

std::unique_ptr<Backend> make_backend(const BackendOpts& opts) {
    if (opts.kind == "mock") return std::make_unique<MockBackend>(opts.seed);
    if (opts.config_path.empty()) {
        throw BackendError("http backend requires --backend-config");
    }
    return std::make_unique<HttpBackend>(BackendConfig::from_json_file(opts.config_path));
}

PromptLibrary make_prompts(const BackendOpts& opts) {
    return opts.prompts_dir.empty() ? PromptLibrary::builtin() : PromptLibrary::load_dir(opts.prompts_dir);
}

struct PipelineOpts {
    PipelineConfig config;
    void add_to(CLI::App* cmd) {
        cmd->add_option("--n", config.n, "System-level top-n");
        cmd->add_option("--k", config.k, "Agent-level top-k");
        cmd->add_option("--tau", config.tau, "Agent-level score threshold");
        cmd->add_option("--budget", config.context_token_budget, "Context budget (whitespace tokens)");
        cmd->add_option("--max-queries", config.max_agent_queries, "Cap on agent sub-queries");
    }
};

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-agent egocentric memory and retrieval engine"};
    app.require_subcommand(1);

    // gen-fixture
    std::string fixture_out;
    auto* gen = app.add_subcommand("gen-fixture", "Write the synthetic planted-evidence corpus");
    gen->add_option("--out", fixture_out, "Output directory")->required();

    // build-memory
    std::string bm_captions, bm_roster, bm_store;
    int bm_interval = 10;
    BackendOpts bm_backend;
    auto* build = app.add_subcommand("build-memory", "Build the shared and per-agent memories");
    build->add_option("--captions", bm_captions, "captions.jsonl")->required();
    build->add_option("--roster", bm_roster, "roster.json")->required();
    build->add_option("--store", bm_store, "Output store directory")->required();
    build->add_option("--interval", bm_interval, "Memory interval in minutes");
    add_backend_opts(build, bm_backend);

    // ask
    std::string ask_question, ask_store;
    bool ask_trace = false;
    BackendOpts ask_backend;
    PipelineOpts ask_pipeline;
    auto* ask = app.add_subcommand("ask", "Answer a free-form question from a store");
    ask->add_option("--question", ask_question, "Question text")->required();
    ask->add_option("--store", ask_store, "Store directory")->required();
    ask->add_flag("--trace", ask_trace, "Print the full answer trace as JSON");
    ask_pipeline.add_to(ask);
    add_backend_opts(ask, ask_backend);

    // eval
    std::string ev_qa, ev_store, ev_mode = "egomas", ev_out;
    int ev_parallelism = 1;
    bool ev_table = false;
    BackendOpts ev_backend;
    PipelineOpts ev_pipeline;
    auto* eval = app.add_subcommand("eval", "Evaluate a QA set against a store");
    eval->add_option("--qa", ev_qa, "qa.jsonl")->required();
    eval->add_option("--store", ev_store, "Store directory")->required();
    eval->add_option("--mode", ev_mode, "egomas | concat | flat-bm25 | oracle");
    eval->add_option("--out", ev_out, "Report JSON path")->required();
    eval->add_option("--parallelism", ev_parallelism, "Worker threads");
    eval->add_flag("--table", ev_table, "Also print the plain-text table");
    ev_pipeline.add_to(eval);
    add_backend_opts(eval, ev_backend);

    // ablate
    std::string ab_qa, ab_store, ab_out;
    int ab_parallelism = 1;
    BackendOpts ab_backend;
    PipelineOpts ab_pipeline;
    auto* ablate = app.add_subcommand("ablate", "Run the ablation grid and agent-count sweep");
    ablate->add_option("--qa", ab_qa, "qa.jsonl")->required();
    ablate->add_option("--store", ab_store, "Store directory")->required();
    ablate->add_option("--out", ab_out, "Table JSON path")->required();
    ablate->add_option("--parallelism", ab_parallelism, "Worker threads");
    ab_pipeline.add_to(ablate);
    add_backend_opts(ablate, ab_backend);

    // latency
    std::string lat_qa, lat_store, lat_mode = "egomas";
    int lat_sample = 100;
    BackendOpts lat_backend;
    PipelineOpts lat_pipeline;
    auto* latency = app.add_subcommand("latency", "Measure per-question latency on a seeded sample");
    latency->add_option("--qa", lat_qa, "qa.jsonl")->required();
    latency->add_option("--store", lat_store, "Store directory")->required();
    latency->add_option("--sample", lat_sample, "Sample size");
    latency->add_option("--mode", lat_mode, "egomas | concat | flat-bm25 | oracle");
    lat_pipeline.add_to(latency);
    add_backend_opts(latency, lat_backend);

    // filter
    std::string fl_qa, fl_store, fl_out, fl_log;
    int fl_trials = 3, fl_min_correct = 3;
    std::vector<std::string> fl_judge_configs;
    BackendOpts fl_backend;
    PipelineOpts fl_pipeline;
    auto* filter = app.add_subcommand("filter", "Run the zero-shot / single-agent / cross-model cascade");
    filter->add_option("--qa", fl_qa, "candidates.jsonl")->required();
    filter->add_option("--store", fl_store, "Store directory")->required();
    filter->add_option("--out", fl_out, "kept.jsonl path")->required();
    filter->add_option("--log", fl_log, "verdicts.jsonl path")->required();
    filter->add_option("--trials", fl_trials, "Zero-shot trials per question");
    filter->add_option("--min-correct", fl_min_correct, "Correct trials that trigger a discard");
    filter->add_option("--judge-config", fl_judge_configs, "Backend config for each cross-model judge")
        ->expected(0, 2);
    fl_pipeline.add_to(filter);
    add_backend_opts(filter, fl_backend);

    // group-multispan
    std::string gm_qa, gm_out, gm_roster;
    double gm_delta = 0.85;
    BackendOpts gm_backend;
    auto* group = app.add_subcommand("group-multispan", "Group semantically similar QA items");
    group->add_option("--qa", gm_qa, "items.jsonl")->required();
    group->add_option("--delta", gm_delta, "Cosine similarity threshold");
    group->add_option("--out", gm_out, "groups.json path")->required();
    group->add_option("--roster", gm_roster, "Optional roster.json for agent validation");
    add_backend_opts(group, gm_backend);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            synth::write_fixture(synth::make_fixture(), fixture_out);
            std::cout << "fixture written to " << fixture_out << "\n";
        } else if (*build) {
            auto backend = make_backend(bm_backend);
            PromptLibrary prompts = make_prompts(bm_backend);
            Roster roster = Roster::from_json_file(bm_roster);
            auto records = load_captions(bm_captions, roster);
            MemoryStore store = build_memory(*backend, prompts, roster, records, bm_interval);
            save_store(store, bm_store);
            CorpusStats stats = corpus_stats(roster, records);
            std::cout << "store written to " << bm_store << ": " << store.shared().size()
                      << " events, " << store.total_entries() << " agent entries ("
                      << stats.num_agents << " agents, " << stats.total_hours << "h total)\n";
            if (!store.report().rejected.empty() || !store.report().warnings.empty()) {
                std::cout << "build report: " << store.report().rejected.size() << " rejections, "
                          << store.report().warnings.size() << " warnings (see build_report.json)\n";
            }
        } else if (*ask) {
            auto backend = make_backend(ask_backend);
            PromptLibrary prompts = make_prompts(ask_backend);
            MemoryStore store = load_store(ask_store);
            QaItem item;
            item.id = "cli";
            item.question = ask_question;
            item.options = {"", "", "", "", ""};
            AnswerTrace trace = answer_question(store, *backend, prompts, ask_pipeline.config, item);
            std::cout << trace.raw_answer << "\n";
            if (ask_trace) std::cout << trace_to_json(trace).dump(2) << "\n";
        } else if (*eval) {
            auto backend = make_backend(ev_backend);
            PromptLibrary prompts = make_prompts(ev_backend);
            MemoryStore store = load_store(ev_store);
            auto items = load_qa(ev_qa, store.roster());
            EvalOptions options;
            options.mode = parse_eval_mode(ev_mode);
            options.pipeline = ev_pipeline.config;
            options.seed = ev_backend.seed;
            options.parallelism = ev_parallelism;
            EvalReport report = run_eval(store, items, *backend, prompts, options);
            write_text_file(ev_out, report_to_json(report).dump(2) + "\n");
            std::cout << report_table(report);
        } else if (*ablate) {
            auto backend = make_backend(ab_backend);
            PromptLibrary prompts = make_prompts(ab_backend);
            MemoryStore store = load_store(ab_store);
            auto items = load_qa(ab_qa, store.roster());
            EvalOptions base;
            base.pipeline = ab_pipeline.config;
            base.seed = ab_backend.seed;
            base.parallelism = ab_parallelism;
            AblationTable table = compare_ablations(store, items, *backend, prompts, base);
            write_text_file(ab_out, ablation_to_json(table).dump(2) + "\n");
            std::cout << ablation_table_text(table);
        } else if (*latency) {
            auto backend = make_backend(lat_backend);
            PromptLibrary prompts = make_prompts(lat_backend);
            MemoryStore store = load_store(lat_store);
            auto items = load_qa(lat_qa, store.roster());
            EvalOptions options;
            options.mode = parse_eval_mode(lat_mode);
            options.pipeline = lat_pipeline.config;
            options.seed = lat_backend.seed;
            LatencyStats stats = measure_latency(store, items, *backend, prompts, options,
                                                 std::min<int>(lat_sample, static_cast<int>(items.size())));
            std::cout << "sample " << stats.sample_size << ": mean " << stats.mean_seconds
                      << "s, p50 " << stats.p50_seconds << "s, p95 " << stats.p95_seconds << "s\n";
        } else if (*filter) {
            auto primary = make_backend(fl_backend);
            std::unique_ptr<Backend> judge0, judge1;
            if (fl_judge_configs.size() == 2) {
                judge0 = std::make_unique<HttpBackend>(BackendConfig::from_json_file(fl_judge_configs[0]));
                judge1 = std::make_unique<HttpBackend>(BackendConfig::from_json_file(fl_judge_configs[1]));
            } else {
                judge0 = std::make_unique<MockBackend>(fl_backend.seed + 1);
                judge1 = std::make_unique<MockBackend>(fl_backend.seed + 2);
            }
            PromptLibrary prompts = make_prompts(fl_backend);
            MemoryStore store = load_store(fl_store);
            auto items = load_qa(fl_qa, store.roster());
            CascadeConfig config;
            config.trials = fl_trials;
            config.discard_min_correct = fl_min_correct;
            config.seed = fl_backend.seed;
            config.pipeline = fl_pipeline.config;
            CascadeResult result =
                run_cascade(*primary, *judge0, *judge1, prompts, items, store, config);
            save_qa(fl_out, result.kept);
            {
                std::ofstream log(fl_log);
                if (!log) throw std::runtime_error("cannot write " + fl_log);
                for (const auto& v : result.log) {
                    log << nlohmann::json{{"qa_id", v.qa_id},
                                          {"stage", std::string(filter_stage_name(v.stage))},
                                          {"decision", std::string(filter_decision_name(v.decision))},
                                          {"evidence", v.evidence}}
                               .dump()
                        << '\n';
                }
                for (const auto& q : result.quarantined) {
                    log << nlohmann::json{{"qa_id", q.qa_id},
                                          {"stage", std::string(filter_stage_name(q.stage))},
                                          {"error", q.error}}
                               .dump()
                        << '\n';
                }
            }
            std::cout << result.kept.size() << "/" << items.size() << " kept, "
                      << result.quarantined.size() << " quarantined\n";
        } else if (*group) {
            auto backend = make_backend(gm_backend);
            std::vector<QaItem> items;
            if (gm_roster.empty()) {
                items = load_qa(gm_qa);
            } else {
                Roster roster = Roster::from_json_file(gm_roster);
                items = load_qa(gm_qa, roster);
            }
            std::vector<EmbeddedSample> samples;
            for (const auto& item : items) {
                std::string joined =
                    item.question + " " + item.options[static_cast<std::size_t>(item.answer_index)];
                samples.push_back({item.id, backend->embed(joined)});
            }
            auto groups = group_multispan(samples, gm_delta);
            nlohmann::json out_groups = nlohmann::json::array();
            for (const auto& g : groups) {
                nlohmann::json ids = nlohmann::json::array();
                for (int idx : g) ids.push_back(samples[static_cast<std::size_t>(idx)].qa_id);
                out_groups.push_back(ids);
            }
            write_text_file(gm_out, nlohmann::json{{"delta", gm_delta},
                                                   {"num_samples", samples.size()},
                                                   {"groups", out_groups}}
                                        .dump(2) +
                                        "\n");
            std::cout << groups.size() << " groups over " << samples.size() << " samples\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
