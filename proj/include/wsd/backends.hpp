#pragma once

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include "wsd/digest.hpp"
#include "wsd/errors.hpp"
#include "wsd/prompting.hpp"

namespace wsd {

enum class BackendKind { kHttp, kScripted, kFreqOracle };

inline std::string_view to_string(BackendKind kind) {
    switch (kind) {
        case BackendKind::kHttp: return "http";
        case BackendKind::kScripted: return "scripted";
        case BackendKind::kFreqOracle: return "freq_oracle";
    }
    return "scripted";
}

inline BackendKind parse_backend_kind(std::string_view name) {
    if (name == "http") return BackendKind::kHttp;
    if (name == "scripted") return BackendKind::kScripted;
    if (name == "freq_oracle") return BackendKind::kFreqOracle;
    throw ConfigError("unknown backend kind '" + std::string(name) +
                      "' (expected http, scripted, or freq_oracle)");
}

struct ModelConfig {
    BackendKind backend_kind = BackendKind::kScripted;
    std::string model_name = "mock";
    double temperature = 0.0;
    int max_output_tokens = 500;
    std::string endpoint;            // http only, e.g. http://127.0.0.1:8080/v1
    double request_timeout_s = 30.0;
    int max_concurrency = 4;
    int retry_limit = 3;
    int retry_base_delay_ms = 250;
    std::filesystem::path scripted_fixtures; // scripted only
    std::optional<std::filesystem::path> response_cache_dir;
    std::string api_key_env = "WSD_API_KEY";

    void validate() const {
        if (temperature < 0) throw ConfigError("temperature must be >= 0");
        if (max_output_tokens < 1) throw ConfigError("max_output_tokens must be >= 1");
        if (max_concurrency < 1) throw ConfigError("max_concurrency must be >= 1");
        if (retry_limit < 0) throw ConfigError("retry_limit must be >= 0");
        if (backend_kind == BackendKind::kHttp && endpoint.empty()) {
            throw ConfigError("http backend requires an endpoint");
        }
        if (backend_kind == BackendKind::kScripted && scripted_fixtures.empty()) {
            throw ConfigError("scripted backend requires a fixtures file");
        }
    }

    /// Canonical JSON used for the manifest digest.
    nlohmann::json to_json() const {
        return {{"backend_kind", std::string(to_string(backend_kind))},
                {"model_name", model_name},
                {"temperature", temperature},
                {"max_output_tokens", max_output_tokens},
                {"endpoint", endpoint},
                {"request_timeout_s", request_timeout_s},
                {"max_concurrency", max_concurrency},
                {"retry_limit", retry_limit}};
    }
};

struct CompletionResult {
    std::string instance_id;
    std::string raw_text;
    std::chrono::milliseconds latency{0};
    int attempt_count = 1;
    BackendKind backend_kind = BackendKind::kScripted;
};

class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    virtual CompletionResult complete(const PromptBundle& bundle) = 0;
    virtual BackendKind kind() const = 0;
};

/// Executable model of the high-frequency bias failure mode: answers with the
/// sense whose block carries the most example lines, first-listed sense
/// winning ties. Depends only on the line counts, never on example content.
inline std::string freq_oracle_predict(const PromptBundle& bundle) {
    if (bundle.candidate_senses.empty()) {
        throw ValidationError("bundle has no candidate senses");
    }
    const std::string& user = bundle.user_message;

    // Block boundaries: each sense block starts at its "Sense: <id>" line.
    std::vector<std::size_t> starts;
    starts.reserve(bundle.candidate_senses.size());
    std::size_t search_from = 0;
    for (const SenseId& sense : bundle.candidate_senses) {
        const std::string marker = "Sense: " + sense.str() + "\n";
        const std::size_t pos = user.find(marker, search_from);
        if (pos == std::string::npos) {
            throw ValidationError("user message has no block for candidate sense '" +
                                  sense.str() + "'");
        }
        starts.push_back(pos);
        search_from = pos + marker.size();
    }

    std::size_t best_index = 0;
    std::size_t best_count = 0;
    for (std::size_t i = 0; i < starts.size(); ++i) {
        const std::size_t begin = starts[i];
        std::size_t end = (i + 1 < starts.size()) ? starts[i + 1] : user.size();
        // The instruction paragraph after the last block carries no "- " lines,
        // but cap the final block anyway if the template anchor is present.
        if (i + 1 == starts.size()) {
            const std::size_t anchor = user.find("\nThink step by step", begin);
            if (anchor != std::string::npos) end = anchor;
        }
        std::size_t count = 0;
        std::size_t pos = begin;
        while ((pos = user.find("\n- ", pos)) != std::string::npos && pos < end) {
            ++count;
            pos += 3;
        }
        if (count > best_count) {
            best_count = count;
            best_index = i;
        }
    }
    return std::string(kAnswerPrefix) + bundle.candidate_senses[best_index].str();
}

/// Replays canned responses from a JSONL fixture of {instance_id, raw_text}.
class ScriptedBackend : public ChatBackend {
public:
    explicit ScriptedBackend(const std::filesystem::path& fixtures_path) {
        std::ifstream in(fixtures_path);
        if (!in) {
            throw SchemaError("cannot open scripted fixtures: " + fixtures_path.string());
        }
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            try {
                const nlohmann::json doc = nlohmann::json::parse(line);
                replies_[doc.at("instance_id").get<std::string>()] =
                    doc.at("raw_text").get<std::string>();
            } catch (const nlohmann::json::exception& e) {
                throw SchemaError(fixtures_path.string() + ":" + std::to_string(line_no) +
                                  ": " + e.what());
            }
        }
    }

    CompletionResult complete(const PromptBundle& bundle) override {
        const auto it = replies_.find(bundle.instance_id);
        if (it == replies_.end()) {
            throw NotFoundError("no scripted reply for instance '" + bundle.instance_id +
                                "'");
        }
        return CompletionResult{bundle.instance_id, it->second,
                                std::chrono::milliseconds{0}, 1, kind()};
    }

    BackendKind kind() const override { return BackendKind::kScripted; }

private:
    std::unordered_map<std::string, std::string> replies_;
};

class FreqOracleBackend : public ChatBackend {
public:
    CompletionResult complete(const PromptBundle& bundle) override {
        return CompletionResult{bundle.instance_id, freq_oracle_predict(bundle),
                                std::chrono::milliseconds{0}, 1, kind()};
    }

    BackendKind kind() const override { return BackendKind::kFreqOracle; }
};

namespace detail {

/// Bounds in-flight requests. std-free of surprises; FIFO fairness not needed.
class Semaphore {
public:
    explicit Semaphore(int count) : count_(count) {}

    void acquire() {
        std::unique_lock<std::mutex> lock(mutex_);
        cv_.wait(lock, [&] { return count_ > 0; });
        --count_;
    }

    void release() {
        {
            std::lock_guard<std::mutex> lock(mutex_);
            ++count_;
        }
        cv_.notify_one();
    }

private:
    std::mutex mutex_;
    std::condition_variable cv_;
    int count_;
};

struct SemaphoreGuard {
    explicit SemaphoreGuard(Semaphore& semaphore) : semaphore_(semaphore) {
        semaphore_.acquire();
    }
    ~SemaphoreGuard() { semaphore_.release(); }
    SemaphoreGuard(const SemaphoreGuard&) = delete;
    SemaphoreGuard& operator=(const SemaphoreGuard&) = delete;

private:
    Semaphore& semaphore_;
};

struct ParsedEndpoint {
    std::string base;        // scheme://host[:port] for httplib::Client
    std::string path_prefix; // e.g. /v1
};

inline ParsedEndpoint parse_endpoint(const std::string& endpoint) {
    const std::size_t scheme_end = endpoint.find("://");
    if (scheme_end == std::string::npos) {
        throw ConfigError("endpoint must include a scheme: '" + endpoint + "'");
    }
    const std::size_t path_start = endpoint.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        return {endpoint, ""};
    }
    std::string prefix = endpoint.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {endpoint.substr(0, path_start), prefix};
}

} // namespace detail

/// OpenAI-compatible chat completions client. POSTs
/// {model, messages, temperature, max_tokens} to <endpoint>/chat/completions,
/// retrying 429/5xx and connection failures with exponential backoff. At most
/// max_concurrency requests are in flight per backend instance.
class HttpChatBackend : public ChatBackend {
public:
    explicit HttpChatBackend(ModelConfig config)
        : config_(std::move(config)),
          endpoint_(detail::parse_endpoint(config_.endpoint)),
          semaphore_(config_.max_concurrency) {
        const char* key = std::getenv(config_.api_key_env.c_str());
        if (key == nullptr || *key == '\0') {
            throw ConfigError("http backend requires the " + config_.api_key_env +
                              " environment variable");
        }
        api_key_ = key;
    }

    CompletionResult complete(const PromptBundle& bundle) override {
        detail::SemaphoreGuard guard(semaphore_);
        const auto start = std::chrono::steady_clock::now();

        const nlohmann::json body{
            {"model", config_.model_name},
            {"messages",
             {{{"role", "system"}, {"content", bundle.system_message}},
              {{"role", "user"}, {"content", bundle.user_message}}}},
            {"temperature", config_.temperature},
            {"max_tokens", config_.max_output_tokens}};
        const std::string payload = body.dump();

        int attempts = 0;
        std::string last_failure;
        while (attempts <= config_.retry_limit) {
            ++attempts;
            httplib::Client client(endpoint_.base);
            client.set_connection_timeout(std::chrono::duration<double>(config_.request_timeout_s));
            client.set_read_timeout(std::chrono::duration<double>(config_.request_timeout_s));
            client.set_bearer_token_auth(api_key_);

            httplib::Result res =
                client.Post(endpoint_.path_prefix + "/chat/completions", payload,
                            "application/json");
            if (res && res->status == 200) {
                const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                    std::chrono::steady_clock::now() - start);
                return CompletionResult{bundle.instance_id, extract_content(*res, attempts),
                                        elapsed, attempts, kind()};
            }
            if (res && res->status != 429 && res->status < 500) {
                throw TransportError("chat completion failed with HTTP " +
                                         std::to_string(res->status) + " for instance '" +
                                         bundle.instance_id + "'",
                                     attempts);
            }
            last_failure = res ? "HTTP " + std::to_string(res->status)
                               : "connection error (" + httplib::to_string(res.error()) + ")";
            if (attempts <= config_.retry_limit) {
                std::this_thread::sleep_for(std::chrono::milliseconds(
                    config_.retry_base_delay_ms * (1 << (attempts - 1))));
            }
        }
        throw TransportError("chat completion failed after " + std::to_string(attempts) +
                                 " attempts (" + last_failure + ") for instance '" +
                                 bundle.instance_id + "'",
                             attempts);
    }

    BackendKind kind() const override { return BackendKind::kHttp; }

private:
    static std::string extract_content(const httplib::Response& res, int attempts) {
        try {
            const nlohmann::json doc = nlohmann::json::parse(res.body);
            return doc.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw TransportError(std::string("malformed completion response: ") + e.what(),
                                 attempts);
        }
    }

    ModelConfig config_;
    detail::ParsedEndpoint endpoint_;
    detail::Semaphore semaphore_;
    std::string api_key_;
};

/// On-disk (prompt digest, model) -> raw_text store. Lets interrupted runs
/// resume without re-billing already answered prompts.
class ResponseCache {
public:
    explicit ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
        std::filesystem::create_directories(dir_);
    }

    static std::string key_for(const PromptBundle& bundle, const std::string& model_name) {
        return sha256_hex(model_name + "\x1f" + bundle.system_message + "\x1f" +
                          bundle.user_message);
    }

    std::optional<std::string> find(const std::string& key) const {
        std::lock_guard<std::mutex> lock(mutex_);
        const auto file = dir_ / (key + ".json");
        if (!std::filesystem::exists(file)) return std::nullopt;
        std::ifstream in(file);
        try {
            const nlohmann::json doc = nlohmann::json::parse(in);
            return doc.at("raw_text").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw SchemaError(file.string() + ": " + e.what());
        }
    }

    void store(const std::string& key, const std::string& instance_id,
               const std::string& model_name, const std::string& raw_text) {
        std::lock_guard<std::mutex> lock(mutex_);
        const nlohmann::json doc{{"instance_id", instance_id},
                                 {"model", model_name},
                                 {"raw_text", raw_text}};
        std::ofstream out(dir_ / (key + ".json"));
        out << doc.dump(2) << "\n";
    }

private:
    std::filesystem::path dir_;
    mutable std::mutex mutex_;
};

/// Decorator that consults a ResponseCache before the wrapped backend and
/// stores fresh completions afterwards.
class CachingBackend : public ChatBackend {
public:
    CachingBackend(std::unique_ptr<ChatBackend> inner, std::shared_ptr<ResponseCache> cache,
                   std::string model_name)
        : inner_(std::move(inner)), cache_(std::move(cache)),
          model_name_(std::move(model_name)) {}

    CompletionResult complete(const PromptBundle& bundle) override {
        const std::string key = ResponseCache::key_for(bundle, model_name_);
        if (auto cached = cache_->find(key)) {
            return CompletionResult{bundle.instance_id, *cached,
                                    std::chrono::milliseconds{0}, 1, inner_->kind()};
        }
        CompletionResult result = inner_->complete(bundle);
        cache_->store(key, bundle.instance_id, model_name_, result.raw_text);
        return result;
    }

    BackendKind kind() const override { return inner_->kind(); }

private:
    std::unique_ptr<ChatBackend> inner_;
    std::shared_ptr<ResponseCache> cache_;
    std::string model_name_;
};

/// Builds the backend described by the config, wrapping it in a cache when
/// response_cache_dir is set.
inline std::unique_ptr<ChatBackend> make_backend(const ModelConfig& config) {
    config.validate();
    std::unique_ptr<ChatBackend> backend;
    switch (config.backend_kind) {
        case BackendKind::kHttp:
            backend = std::make_unique<HttpChatBackend>(config);
            break;
        case BackendKind::kScripted:
            backend = std::make_unique<ScriptedBackend>(config.scripted_fixtures);
            break;
        case BackendKind::kFreqOracle:
            backend = std::make_unique<FreqOracleBackend>();
            break;
    }
    if (config.response_cache_dir) {
        backend = std::make_unique<CachingBackend>(
            std::move(backend), std::make_shared<ResponseCache>(*config.response_cache_dir),
            config.model_name);
    }
    return backend;
}

} // namespace wsd
