#if defined(EGOMEM_ENABLE_TLS)
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>

#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <thread>

#include <nlohmann/json.hpp>

#include "egomem/backend.hpp"

namespace egomem {

namespace {

struct SplitUrl {
    std::string base;         // scheme://host[:port]
    std::string path_prefix;  // "" or "/v1"
};

SplitUrl split_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw BackendError("endpoint_url missing scheme: " + url);
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, ""};
    std::string prefix = url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {url.substr(0, path_start), prefix};
}

bool retryable_status(int status) { return status == 429 || (status >= 500 && status < 600); }

}  // namespace

struct HttpBackend::Impl {
    SplitUrl url;
    std::mutex mu;
    std::condition_variable cv;
    int inflight = 0;

    struct InflightGuard {
        Impl& impl;
        int limit;
        InflightGuard(Impl& i, int max_inflight) : impl(i), limit(max_inflight) {
            std::unique_lock lock(impl.mu);
            impl.cv.wait(lock, [&] { return impl.inflight < limit; });
            ++impl.inflight;
        }
        ~InflightGuard() {
            {
                std::lock_guard lock(impl.mu);
                --impl.inflight;
            }
            impl.cv.notify_one();
        }
    };

    std::string api_key(const BackendConfig& cfg) const {
        if (cfg.api_key_env.empty()) return "";
        const char* key = std::getenv(cfg.api_key_env.c_str());
        if (key == nullptr || *key == '\0') {
            throw AuthError("API key environment variable not set: " + cfg.api_key_env);
        }
        return key;
    }

    // POSTs `body` to `path`, retrying transient failures with
    // exponential backoff. Returns the response body text.
    std::string post_json(const BackendConfig& cfg, const std::string& path, const std::string& body,
                          int& retries) {
        const std::string key = api_key(cfg);  // AuthError precedes any network traffic
        InflightGuard guard(*this, cfg.max_inflight);

        std::string last_error;
        for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
            if (attempt > 0) {
                double delay = cfg.retry_base_delay_seconds * std::pow(2.0, attempt - 1);
                std::this_thread::sleep_for(std::chrono::duration<double>(delay));
                ++retries;
            }
            httplib::Client client(url.base);
            auto timeout = std::chrono::duration<double>(cfg.timeout_seconds);
            client.set_connection_timeout(timeout);
            client.set_read_timeout(timeout);
            client.set_write_timeout(timeout);
            httplib::Headers headers;
            if (!key.empty()) headers.emplace("Authorization", "Bearer " + key);

            auto res = client.Post(url.path_prefix + path, headers, body, "application/json");
            if (!res) {
                last_error = "transport error: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status == 401 || res->status == 403) {
                throw AuthError("HTTP " + std::to_string(res->status) + " from " + url.base);
            }
            if (retryable_status(res->status)) {
                last_error = "HTTP " + std::to_string(res->status);
                continue;
            }
            if (res->status != 200) {
                throw MalformedResponse("HTTP " + std::to_string(res->status) + ": " + res->body);
            }
            return res->body;
        }
        throw TransientExhausted("gave up after " + std::to_string(cfg.max_retries + 1) +
                                 " attempts: " + last_error);
    }
};

HttpBackend::HttpBackend(BackendConfig config)
    : config_(std::move(config)), impl_(std::make_unique<Impl>()) {
    impl_->url = split_url(config_.endpoint_url);
}

HttpBackend::~HttpBackend() = default;

GenerationResult HttpBackend::generate(const GenerationRequest& request) {
    if (request.prompt.empty()) throw BackendError("empty prompt");
    nlohmann::json body{{"model", config_.model_name},
                        {"messages", nlohmann::json::array({nlohmann::json{
                                         {"role", "user"}, {"content", request.prompt}}})},
                        {"temperature", request.temperature},
                        {"max_tokens", request.max_tokens}};
    GenerationResult result;
    std::string response = impl_->post_json(config_, "/chat/completions", body.dump(), result.retries);
    try {
        auto j = nlohmann::json::parse(response);
        result.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
        if (j.contains("usage")) {
            result.usage.prompt_tokens = j["usage"].value("prompt_tokens", 0L);
            result.usage.completion_tokens = j["usage"].value("completion_tokens", 0L);
        }
    } catch (const nlohmann::json::exception& e) {
        throw MalformedResponse(std::string("bad chat-completions response: ") + e.what());
    }
    return result;
}

std::vector<double> HttpBackend::embed(const std::string& text) {
    if (text.empty()) throw BackendError("cannot embed empty text");
    nlohmann::json body{
        {"model", config_.embed_model_name.empty() ? config_.model_name : config_.embed_model_name},
        {"input", text}};
    int retries = 0;
    std::string response = impl_->post_json(config_, "/embeddings", body.dump(), retries);
    try {
        auto j = nlohmann::json::parse(response);
        return j.at("data").at(0).at("embedding").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw MalformedResponse(std::string("bad embeddings response: ") + e.what());
    }
}

}  // namespace egomem
