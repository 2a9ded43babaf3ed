#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace egomem {

enum class Task { SummarizeAgent, IntegrateEvents, AgentQueries, Answer, FilterJudge, Validate };

std::string_view task_name(Task t);

struct GenerationRequest {
    Task task = Task::Answer;
    std::string prompt;
    int max_tokens = 1024;
    double temperature = 0.0;
    /// Structured task inputs. The caller renders them into `prompt`
    /// for wire backends; deterministic backends consume them directly.
    std::map<std::string, std::string> inputs;
};

struct TokenUsage {
    long prompt_tokens = 0;
    long completion_tokens = 0;
};

struct GenerationResult {
    std::string text;
    TokenUsage usage;
    int retries = 0;
};

struct BackendConfig {
    std::string endpoint_url;   // base URL, e.g. "https://api.example.com/v1"
    std::string model_name;
    std::string api_key_env;    // env var holding the key; empty = no auth header
    std::string embed_model_name;
    double timeout_seconds = 30.0;
    int max_retries = 3;
    int max_inflight = 4;
    double retry_base_delay_seconds = 0.5;

    static BackendConfig from_json_file(const std::string& path);
};

// ─── Errors ────────────────────────────────────────────────────

class BackendError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// 401/403 or a missing API key. Never retried.
class AuthError : public BackendError {
public:
    using BackendError::BackendError;
};

/// Transient failures (timeouts, 429, 5xx) survived max_retries+1 attempts.
class TransientExhausted : public BackendError {
public:
    using BackendError::BackendError;
};

/// Response arrived but could not be interpreted.
class MalformedResponse : public BackendError {
public:
    using BackendError::BackendError;
};

// ─── Backend interface ─────────────────────────────────────────

class Backend {
public:
    virtual ~Backend() = default;
    virtual GenerationResult generate(const GenerationRequest& request) = 0;
    virtual std::vector<double> embed(const std::string& text) = 0;
    virtual std::string name() const = 0;
};

// ─── Prompt assets ─────────────────────────────────────────────
// One template per task, keyed by task name, with {placeholder}
// substitution. Templates are data: the built-in set mirrors
// assets/prompts/ and a directory can override it.

class PromptLibrary {
public:
    static PromptLibrary builtin();
    /// Loads `<dir>/<task_name>.txt` for every task; missing files
    /// fall back to the built-in template.
    static PromptLibrary load_dir(const std::string& dir);

    std::string render(Task task, const std::map<std::string, std::string>& inputs) const;
    const std::string& raw(Task task) const;

private:
    std::map<std::string, std::string> templates_;
};

// ─── Implementations ───────────────────────────────────────────

/// Deterministic offline backend. Same (seed, request) always yields
/// the same response; embeddings are seeded feature hashes of tokens
/// in 256 dimensions, L2-normalized.
class MockBackend : public Backend {
public:
    static constexpr int kEmbedDim = 256;

    explicit MockBackend(std::uint64_t seed = 0) : seed_(seed) {}

    GenerationResult generate(const GenerationRequest& request) override;
    std::vector<double> embed(const std::string& text) override;
    std::string name() const override { return "mock"; }

    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
};

/// OpenAI-compatible chat-completions client over HTTP(S) with
/// exponential-backoff retries and a bounded in-flight request count.
class HttpBackend : public Backend {
public:
    explicit HttpBackend(BackendConfig config);
    ~HttpBackend() override;

    GenerationResult generate(const GenerationRequest& request) override;
    std::vector<double> embed(const std::string& text) override;
    std::string name() const override { return "http:" + config_.model_name; }

    const BackendConfig& config() const { return config_; }

private:
    struct Impl;
    BackendConfig config_;
    std::unique_ptr<Impl> impl_;
};

/// Option index (0-4) whose text has maximal distinct-token overlap
/// with `context`; ties go to the lowest index. The mock answer rule,
/// exposed for reuse by deterministic validators.
int overlap_choice(std::span<const std::string> options, const std::string& context);

}  // namespace egomem
