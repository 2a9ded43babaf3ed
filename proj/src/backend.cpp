#include "egomem/backend.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "egomem/bm25.hpp"
#include "egomem/text.hpp"
#include "egomem/vecops.hpp"

namespace egomem {

std::string_view task_name(Task t) {
    switch (t) {
        case Task::SummarizeAgent: return "summarize_agent";
        case Task::IntegrateEvents: return "integrate_events";
        case Task::AgentQueries: return "agent_queries";
        case Task::Answer: return "answer";
        case Task::FilterJudge: return "filter_judge";
        case Task::Validate: return "validate";
    }
    return "?";
}

BackendConfig BackendConfig::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw BackendError("cannot open backend config: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw BackendError("bad backend config " + path + ": " + e.what());
    }
    BackendConfig cfg;
    cfg.endpoint_url = j.value("endpoint_url", cfg.endpoint_url);
    cfg.model_name = j.value("model_name", cfg.model_name);
    cfg.api_key_env = j.value("api_key_env", cfg.api_key_env);
    cfg.embed_model_name = j.value("embed_model_name", cfg.embed_model_name);
    cfg.timeout_seconds = j.value("timeout_seconds", cfg.timeout_seconds);
    cfg.max_retries = j.value("max_retries", cfg.max_retries);
    cfg.max_inflight = j.value("max_inflight", cfg.max_inflight);
    cfg.retry_base_delay_seconds = j.value("retry_base_delay_seconds", cfg.retry_base_delay_seconds);
    if (!(cfg.timeout_seconds > 0)) throw BackendError("timeout_seconds must be > 0");
    if (cfg.max_retries < 0) throw BackendError("max_retries must be >= 0");
    if (cfg.max_inflight < 1) throw BackendError("max_inflight must be >= 1");
    return cfg;
}

// ─── Prompt assets ─────────────────────────────────────────────

namespace {

const std::map<std::string, std::string>& builtin_templates() {
    static const std::map<std::string, std::string> kTemplates = {
        {"summarize_agent",
         "You are {agent_name}, an embodied agent wearing a camera. Summarize your own "
         "observations between {start} and {end} in a few sentences. Keep every concrete "
         "detail: objects, people, places, actions.\n\nYour raw captions and transcripts:\n"
         "{captions}\n\nSummary:"},
        {"integrate_events",
         "You are the central manager of a team of embodied agents. Below are the agents' "
         "individual summaries for the interval starting at {bucket}. Identify the key events "
         "and describe each one as a JSON object with fields \"when\", \"what\", \"where\", "
         "\"who\" (array of agent names), and \"how\". Respond with a JSON array of such "
         "objects and nothing else.\n\nAgent summaries:\n{entries}\n\nJSON:"},
        {"agent_queries",
         "You route a question to the memories of individual agents. Given the question and "
         "the system-level events retrieved so far, decide which agents' memories to search "
         "and with what sub-query. Respond with a JSON array of objects {\"agent\": name, "
         "\"query\": text}. Known agents: {agents}.\n\nQuestion: {question}\n\nRetrieved "
         "events:\n{system_context}\n\nJSON:"},
        {"answer",
         "Answer the multiple-choice question using the context. Reply with the single "
         "letter of the best option.\n\nContext:\n{context}\n\nQuestion: {question}\n"
         "Options:\n{options}\n\nAnswer:"},
        {"filter_judge",
         "Answer the multiple-choice question from your own knowledge, without any context. "
         "Reply with the single letter of the best option.\n\nQuestion: {question}\n"
         "Options:\n{options}\n\nAnswer:"},
        {"validate",
         "You are auditing a benchmark question. Given the context that was used to write "
         "it, check that the marked answer is correct, the question is well-posed, and the "
         "false options are actually false. Reply with the single word \"keep\" if the "
         "sample is valid or \"flag\" if it is not.\n\nContext:\n{context}\n\nQuestion: "
         "{question}\nOptions:\n{options}\nMarked answer: {answer_letter}\n\nVerdict:"},
    };
    return kTemplates;
}

std::string substitute(const std::string& tmpl, const std::map<std::string, std::string>& inputs) {
    std::string out;
    out.reserve(tmpl.size());
    for (std::size_t i = 0; i < tmpl.size();) {
        if (tmpl[i] == '{') {
            auto close = tmpl.find('}', i);
            if (close != std::string::npos) {
                auto it = inputs.find(tmpl.substr(i + 1, close - i - 1));
                if (it != inputs.end()) {
                    out += it->second;
                    i = close + 1;
                    continue;
                }
            }
        }
        out += tmpl[i++];
    }
    return out;
}

}  // namespace

PromptLibrary PromptLibrary::builtin() {
    PromptLibrary lib;
    lib.templates_ = builtin_templates();
    return lib;
}

PromptLibrary PromptLibrary::load_dir(const std::string& dir) {
    PromptLibrary lib = builtin();
    for (auto& [key, tmpl] : lib.templates_) {
        std::filesystem::path p = std::filesystem::path(dir) / (key + ".txt");
        std::ifstream in(p);
        if (!in) continue;
        std::ostringstream buf;
        buf << in.rdbuf();
        tmpl = buf.str();
    }
    return lib;
}

std::string PromptLibrary::render(Task task, const std::map<std::string, std::string>& inputs) const {
    return substitute(raw(task), inputs);
}

const std::string& PromptLibrary::raw(Task task) const {
    auto it = templates_.find(std::string(task_name(task)));
    if (it == templates_.end()) throw BackendError("no prompt template for task " + std::string(task_name(task)));
    return it->second;
}

// ─── Mock backend ──────────────────────────────────────────────

namespace {

std::string input_or(const GenerationRequest& r, const std::string& key, const std::string& fallback) {
    auto it = r.inputs.find(key);
    return it == r.inputs.end() ? fallback : it->second;
}

std::vector<std::string> json_string_array(const std::string& s) {
    std::vector<std::string> out;
    if (s.empty()) return out;
    auto j = nlohmann::json::parse(s);
    for (const auto& v : j) out.push_back(v.get<std::string>());
    return out;
}

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

std::uint64_t fnv1a(std::string_view s, std::uint64_t h) {
    for (unsigned char c : s) {
        h ^= c;
        h *= kFnvPrime;
    }
    return h;
}

}  // namespace

int overlap_choice(std::span<const std::string> options, const std::string& context) {
    std::unordered_set<std::string> context_tokens;
    for (auto& t : tokenize(context)) context_tokens.insert(std::move(t));
    int best = 0;
    std::size_t best_overlap = 0;
    for (std::size_t i = 0; i < options.size(); ++i) {
        std::unordered_set<std::string> seen;
        std::size_t overlap = 0;
        for (const auto& t : tokenize(options[i])) {
            if (context_tokens.count(t) && seen.insert(t).second) ++overlap;
        }
        if (overlap > best_overlap) {
            best_overlap = overlap;
            best = static_cast<int>(i);
        }
    }
    return best;
}

GenerationResult MockBackend::generate(const GenerationRequest& request) {
    if (request.prompt.empty()) throw BackendError("empty prompt");
    std::string text;
    switch (request.task) {
        case Task::SummarizeAgent: {
            auto captions = json_string_array(input_or(request, "captions_json", "[]"));
            std::string joined;
            for (std::size_t i = 0; i < captions.size(); ++i) {
                if (i > 0) joined += "; ";
                joined += captions[i];
            }
            text = truncate_to_tokens(joined, 512);
            break;
        }
        case Task::IntegrateEvents: {
            auto agents = json_string_array(input_or(request, "agents_json", "[]"));
            auto entries = json_string_array(input_or(request, "entries_json", "[]"));
            std::string concat;
            for (std::size_t i = 0; i < entries.size(); ++i) {
                if (i > 0) concat += ' ';
                concat += entries[i];
            }
            nlohmann::json event{{"when", input_or(request, "bucket", "")},
                                 {"what", truncate_to_tokens(concat, 20)},
                                 {"where", "unknown"},
                                 {"who", agents},
                                 {"how", "unknown"}};
            text = event.dump();
            break;
        }
        case Task::AgentQueries: {
            std::string question = input_or(request, "question", "");
            auto roster_names = json_string_array(input_or(request, "roster_json", "[]"));
            auto hit_names = json_string_array(input_or(request, "who_json", "[]"));
            std::unordered_set<std::string> mentioned;
            for (const auto& name : hit_names) mentioned.insert(to_lower(name));
            nlohmann::json queries = nlohmann::json::array();
            for (const auto& name : roster_names) {
                if (contains_word_ci(question, name) || mentioned.count(to_lower(name))) {
                    queries.push_back({{"agent", name}, {"query", question}});
                }
            }
            if (queries.empty()) {
                for (const auto& name : roster_names) {
                    queries.push_back({{"agent", name}, {"query", question}});
                }
            }
            text = queries.dump();
            break;
        }
        case Task::Answer:
        case Task::FilterJudge: {
            auto options = json_string_array(input_or(request, "options_json", "[]"));
            std::string context = input_or(request, "context", "");
            int choice = options.empty() ? 0 : overlap_choice(options, context);
            text = std::string(1, static_cast<char>('A' + choice));
            break;
        }
        case Task::Validate: {
            auto options = json_string_array(input_or(request, "options_json", "[]"));
            std::string context = input_or(request, "context", "");
            std::string answer_letter = input_or(request, "answer_letter", "A");
            int choice = options.empty() ? 0 : overlap_choice(options, context);
            bool agrees = !answer_letter.empty() && choice == answer_letter[0] - 'A';
            text = agrees ? "keep" : "flag";
            break;
        }
    }
    GenerationResult result;
    result.text = std::move(text);
    result.usage.prompt_tokens = count_whitespace_tokens(request.prompt);
    result.usage.completion_tokens = count_whitespace_tokens(result.text);
    return result;
}

std::vector<double> MockBackend::embed(const std::string& text) {
    if (trim(text).empty()) throw BackendError("cannot embed empty text");
    auto tokens = tokenize(text);
    if (tokens.empty()) throw BackendError("cannot embed text with no tokens");
    std::vector<double> v(kEmbedDim, 0.0);
    const std::uint64_t seed_mix = kFnvOffset ^ (seed_ * 0x9E3779B97F4A7C15ULL);
    for (const auto& token : tokens) {
        std::uint64_t h = fnv1a(token, seed_mix);
        auto dim = static_cast<std::size_t>(h % kEmbedDim);
        v[dim] += (h >> 8) & 1 ? 1.0 : -1.0;
    }
    double n = vec::norm(v);
    if (n == 0.0) {
        // Hash cancellation; fall back to a deterministic basis vector.
        v[static_cast<std::size_t>(fnv1a(text, seed_mix) % kEmbedDim)] = 1.0;
        n = 1.0;
    }
    for (double& x : v) x /= n;
    return v;
}

}  // namespace egomem
