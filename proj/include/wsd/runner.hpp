#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include "wsd/backends.hpp"
#include "wsd/corpus.hpp"
#include "wsd/digest.hpp"
#include "wsd/errors.hpp"
#include "wsd/evaluation.hpp"
#include "wsd/fewshot_kb.hpp"
#include "wsd/lexstore.hpp"
#include "wsd/prompting.hpp"
#include "wsd/random.hpp"
#include "wsd/reporting.hpp"
#include "wsd/sampling.hpp"

namespace wsd {

/// Fetches inventories from a JSON endpoint:
/// GET <endpoint>/senses?lang=..&lemma=..&pos=.. with bearer auth, returning
/// the same document shape the fixture files use.
class HttpInventoryClient : public InventoryClient {
public:
    explicit HttpInventoryClient(const std::string& endpoint,
                                 const std::string& api_key_env = "LEXSTORE_API_KEY")
        : endpoint_(detail::parse_endpoint(endpoint)) {
        const char* key = std::getenv(api_key_env.c_str());
        if (key == nullptr || *key == '\0') {
            throw ConfigError("remote inventory mode requires the " + api_key_env +
                              " environment variable");
        }
        api_key_ = key;
    }

    SenseInventory fetch(const LanguageCode& language, const std::string& lemma,
                         Pos pos) override {
        httplib::Client client(endpoint_.base);
        client.set_bearer_token_auth(api_key_);
        const httplib::Params params{{"lang", language.str()},
                                     {"lemma", lemma},
                                     {"pos", std::string(to_string(pos))}};
        httplib::Result res =
            client.Get(endpoint_.path_prefix + "/senses", params, httplib::Headers{});
        const std::string what = "(" + language.str() + ", " + lemma + ", " +
                                 std::string(to_string(pos)) + ")";
        if (!res) {
            throw TransportError("inventory fetch for " + what + " failed: " +
                                     httplib::to_string(res.error()),
                                 1);
        }
        if (res->status == 404) {
            throw NotFoundError("no inventory for " + what);
        }
        if (res->status != 200) {
            throw TransportError("inventory fetch for " + what + " failed with HTTP " +
                                     std::to_string(res->status),
                                 1);
        }
        try {
            return detail::inventory_from_json(nlohmann::json::parse(res->body),
                                               "inventory response for " + what);
        } catch (const nlohmann::json::exception& e) {
            throw SchemaError("inventory response for " + what + ": " + e.what());
        }
    }

private:
    detail::ParsedEndpoint endpoint_;
    std::string api_key_;
};

enum class LexstoreMode { kFixtures, kHttp };

/// Everything one experiment needs, read from a single JSON config file.
/// Relative paths resolve against the config file's directory.
struct RunConfig {
    std::filesystem::path corpus_path;
    std::optional<int> sample_count; // absent = every eligible instance

    std::filesystem::path kb_path;

    LexstoreMode lexstore_mode = LexstoreMode::kFixtures;
    std::filesystem::path lexstore_fixtures;
    std::optional<std::filesystem::path> lexstore_cache_dir;
    std::string lexstore_endpoint;
    int lexstore_daily_limit = 1000;

    ModelConfig model;
    std::vector<SamplingStrategy> strategies{SamplingStrategy::kHighest,
                                             SamplingStrategy::kLowest,
                                             SamplingStrategy::kAverage};
    std::uint64_t seed = 0;
    std::filesystem::path output_dir;

    static RunConfig load(const std::filesystem::path& path);
};

namespace detail {

inline void check_keys(const nlohmann::json& object, std::string_view section,
                       std::initializer_list<std::string_view> allowed) {
    for (const auto& item : object.items()) {
        if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
            throw ConfigError("unknown key '" + item.key() + "' in config section '" +
                              std::string(section) + "'");
        }
    }
}

inline const nlohmann::json& require_section(const nlohmann::json& doc,
                                             std::string_view name) {
    const auto it = doc.find(name);
    if (it == doc.end() || !it->is_object()) {
        throw ConfigError("config needs a '" + std::string(name) + "' object section");
    }
    return *it;
}

inline std::filesystem::path resolve_path(const std::filesystem::path& base,
                                          const std::string& value) {
    std::filesystem::path p(value);
    return p.is_absolute() ? p : base / p;
}

} // namespace detail

inline RunConfig RunConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config: " + path.string());
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    const std::filesystem::path base = path.parent_path();

    RunConfig config;
    try {
        detail::check_keys(doc, "(top level)",
                           {"corpus", "kb", "lexstore", "backend", "strategies", "seed",
                            "output"});

        const nlohmann::json& corpus = detail::require_section(doc, "corpus");
        detail::check_keys(corpus, "corpus", {"path", "sample_count"});
        config.corpus_path =
            detail::resolve_path(base, corpus.at("path").get<std::string>());
        if (corpus.contains("sample_count")) {
            config.sample_count = corpus.at("sample_count").get<int>();
            if (*config.sample_count < 1) {
                throw ConfigError("corpus.sample_count must be >= 1");
            }
        }

        const nlohmann::json& kb = detail::require_section(doc, "kb");
        detail::check_keys(kb, "kb", {"path"});
        config.kb_path = detail::resolve_path(base, kb.at("path").get<std::string>());

        const nlohmann::json& lexstore = detail::require_section(doc, "lexstore");
        detail::check_keys(lexstore, "lexstore",
                           {"mode", "fixtures", "cache_dir", "endpoint", "daily_limit"});
        const std::string mode = lexstore.at("mode").get<std::string>();
        if (mode == "fixtures") {
            config.lexstore_mode = LexstoreMode::kFixtures;
            config.lexstore_fixtures =
                detail::resolve_path(base, lexstore.at("fixtures").get<std::string>());
        } else if (mode == "http") {
            config.lexstore_mode = LexstoreMode::kHttp;
            config.lexstore_endpoint = lexstore.at("endpoint").get<std::string>();
        } else {
            throw ConfigError("lexstore.mode must be 'fixtures' or 'http', got '" + mode +
                              "'");
        }
        if (lexstore.contains("cache_dir")) {
            config.lexstore_cache_dir =
                detail::resolve_path(base, lexstore.at("cache_dir").get<std::string>());
        }
        if (lexstore.contains("daily_limit")) {
            config.lexstore_daily_limit = lexstore.at("daily_limit").get<int>();
            if (config.lexstore_daily_limit < 1) {
                throw ConfigError("lexstore.daily_limit must be >= 1");
            }
        }

        const nlohmann::json& backend = detail::require_section(doc, "backend");
        detail::check_keys(backend, "backend",
                           {"kind", "model", "temperature", "max_output_tokens", "endpoint",
                            "request_timeout_s", "max_concurrency", "retry_limit",
                            "retry_base_delay_ms", "fixtures", "response_cache",
                            "api_key_env"});
        config.model.backend_kind =
            parse_backend_kind(backend.at("kind").get<std::string>());
        config.model.model_name = backend.at("model").get<std::string>();
        if (backend.contains("temperature")) {
            config.model.temperature = backend.at("temperature").get<double>();
        }
        if (backend.contains("max_output_tokens")) {
            config.model.max_output_tokens = backend.at("max_output_tokens").get<int>();
        }
        if (backend.contains("endpoint")) {
            config.model.endpoint = backend.at("endpoint").get<std::string>();
        }
        if (backend.contains("request_timeout_s")) {
            config.model.request_timeout_s = backend.at("request_timeout_s").get<double>();
        }
        if (backend.contains("max_concurrency")) {
            config.model.max_concurrency = backend.at("max_concurrency").get<int>();
        }
        if (backend.contains("retry_limit")) {
            config.model.retry_limit = backend.at("retry_limit").get<int>();
        }
        if (backend.contains("retry_base_delay_ms")) {
            config.model.retry_base_delay_ms = backend.at("retry_base_delay_ms").get<int>();
        }
        if (backend.contains("fixtures")) {
            config.model.scripted_fixtures =
                detail::resolve_path(base, backend.at("fixtures").get<std::string>());
        }
        if (backend.contains("response_cache")) {
            config.model.response_cache_dir =
                detail::resolve_path(base, backend.at("response_cache").get<std::string>());
        }
        if (backend.contains("api_key_env")) {
            config.model.api_key_env = backend.at("api_key_env").get<std::string>();
        }

        if (doc.contains("strategies")) {
            if (!doc.at("strategies").is_array() || doc.at("strategies").empty()) {
                throw ConfigError("'strategies' must be a non-empty array");
            }
            config.strategies.clear();
            for (const nlohmann::json& name : doc.at("strategies")) {
                config.strategies.push_back(parse_strategy(name.get<std::string>()));
            }
        }
        if (doc.contains("seed")) {
            config.seed = doc.at("seed").get<std::uint64_t>();
        }

        const nlohmann::json& output = detail::require_section(doc, "output");
        detail::check_keys(output, "output", {"dir"});
        config.output_dir =
            detail::resolve_path(base, output.at("dir").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    config.model.validate();
    return config;
}

struct RunResult {
    std::vector<PredictionRecord> records;
    RunManifest manifest;
    std::filesystem::path predictions_path;
};

namespace detail {

struct RunTask {
    SamplingStrategy strategy;
    const WsdInstance* instance;
};

} // namespace detail

/// Executes the full experiment: corpus load, inventory fetch, per-language
/// evaluation draw, then for every (strategy, instance) pair the
/// profile -> plan -> select -> assemble -> complete -> parse pipeline.
/// Instances run in parallel up to the backend's max_concurrency; every
/// random draw is derived from (seed, instance id), so the artifacts do not
/// depend on scheduling. Writes predictions.jsonl, manifest.json, reports,
/// and polysemy histograms into the output directory.
inline RunResult run_experiment(const RunConfig& config) {
    const std::string started_at = iso8601_utc(std::time(nullptr));
    std::vector<std::string> warnings;

    const std::vector<WsdInstance> corpus = load_corpus(config.corpus_path, &warnings);
    if (corpus.empty()) {
        throw ValidationError("corpus has no instances: " + config.corpus_path.string());
    }

    SenseStore::Options store_options;
    store_options.cache_dir = config.lexstore_cache_dir;
    store_options.daily_limit = config.lexstore_daily_limit;
    std::unique_ptr<InventoryClient> remote;
    if (config.lexstore_mode == LexstoreMode::kHttp) {
        remote = std::make_unique<HttpInventoryClient>(config.lexstore_endpoint);
    }
    SenseStore store(std::move(store_options), std::move(remote));
    if (config.lexstore_mode == LexstoreMode::kFixtures) {
        store.preload_fixtures(config.lexstore_fixtures);
    }

    const FewShotKb kb = FewShotKb::load(config.kb_path);

    // One inventory fetch per distinct target; misses make the target
    // ineligible rather than failing the run.
    std::set<std::tuple<std::string, std::string, Pos>> seen_targets;
    for (const WsdInstance& instance : corpus) {
        const auto key = std::make_tuple(instance.language.str(),
                                         fold_lemma(instance.target_lemma),
                                         instance.target_pos);
        if (!seen_targets.insert(key).second) continue;
        try {
            store.fetch_inventory(instance.language, instance.target_lemma,
                                  instance.target_pos);
        } catch (const NotFoundError& e) {
            warnings.push_back(std::string("inventory miss: ") + e.what());
        }
    }
    const InventoryMap& inventories = store.inventories();

    // Per-language evaluation draw. Languages run in sorted order so task
    // order is a pure function of the corpus.
    std::map<std::string, std::vector<WsdInstance>> by_language;
    for (const WsdInstance& instance : corpus) {
        by_language[instance.language.str()].push_back(instance);
    }
    std::vector<WsdInstance> selected;
    for (const auto& [language, pool] : by_language) {
        std::vector<const WsdInstance*> eligible;
        for (const WsdInstance& instance : pool) {
            const auto it = inventories.find(InventoryKey::of(
                instance.language, instance.target_lemma, instance.target_pos));
            if (it != inventories.end() && it->second.senses.size() >= 2) {
                eligible.push_back(&instance);
            }
        }
        if (eligible.empty()) {
            warnings.push_back("language '" + language +
                               "': no instance with an ambiguous target; skipped");
            continue;
        }
        if (config.sample_count && static_cast<std::size_t>(*config.sample_count) <
                                       eligible.size()) {
            EvalSelection draw =
                select_eval_samples(pool, inventories, *config.sample_count,
                                    derive_seed(config.seed, {"select", language}));
            for (std::string& warning : draw.warnings) {
                warnings.push_back(std::move(warning));
            }
            for (WsdInstance& instance : draw.instances) {
                selected.push_back(std::move(instance));
            }
        } else {
            std::sort(eligible.begin(), eligible.end(),
                      [](const WsdInstance* a, const WsdInstance* b) {
                          return a->id < b->id;
                      });
            for (const WsdInstance* instance : eligible) {
                selected.push_back(*instance);
            }
        }
    }
    if (selected.empty()) {
        throw ValidationError("no eligible evaluation instances in any language");
    }

    std::vector<detail::RunTask> tasks;
    tasks.reserve(config.strategies.size() * selected.size());
    for (const SamplingStrategy strategy : config.strategies) {
        for (const WsdInstance& instance : selected) {
            tasks.push_back(detail::RunTask{strategy, &instance});
        }
    }

    const std::unique_ptr<ChatBackend> backend = make_backend(config.model);

    std::vector<PredictionRecord> records(tasks.size());
    std::atomic<std::size_t> next_task{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    const auto worker = [&] {
        while (!failed.load()) {
            const std::size_t i = next_task.fetch_add(1);
            if (i >= tasks.size()) break;
            const detail::RunTask& task = tasks[i];
            const WsdInstance& instance = *task.instance;
            try {
                const SenseInventory inventory = store.fetch_inventory(
                    instance.language, instance.target_lemma, instance.target_pos);
                const ExampleMap& sense_map = kb.lookup(
                    instance.language, instance.target_lemma, instance.target_pos);
                const FrequencyProfile profile = frequency_profile(sense_map, inventory);
                const SamplingPlan sampling_plan = plan(task.strategy, profile);
                const auto fewshot =
                    select(sampling_plan, sense_map, config.seed, instance.id);
                const PromptBundle bundle = assemble(instance, inventory, fewshot);
                const CompletionResult result = backend->complete(bundle);
                PredictionRecord record;
                record.instance_id = instance.id;
                record.predicted = parse_sense(result.raw_text, bundle.candidate_senses);
                record.gold = instance.gold_sense;
                record.strategy = task.strategy;
                record.model_name = config.model.model_name;
                record.language = instance.language;
                records[i] = std::move(record);
            } catch (...) {
                {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
                failed.store(true);
                break;
            }
        }
    };

    const std::size_t n_threads = std::min<std::size_t>(
        static_cast<std::size_t>(config.model.max_concurrency), tasks.size());
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(n_threads);
        for (std::size_t i = 0; i < n_threads; ++i) threads.emplace_back(worker);
        for (std::thread& thread : threads) thread.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    std::filesystem::create_directories(config.output_dir);
    const std::filesystem::path predictions_path = config.output_dir / "predictions.jsonl";
    save_predictions(records, predictions_path);

    RunManifest manifest;
    manifest.seed = config.seed;
    manifest.template_version = std::string(kTemplateVersion);
    manifest.strategies = config.strategies;
    manifest.model_config_digest = sha256_hex(config.model.to_json().dump());
    manifest.corpus_digest = sha256_file(config.corpus_path);
    manifest.kb_digest = sha256_file(config.kb_path);
    manifest.started_at = started_at;
    for (const PredictionRecord& record : records) {
        if (!record.predicted) ++manifest.parse_failure_count;
    }

    const bool all_gold =
        std::all_of(records.begin(), records.end(),
                    [](const PredictionRecord& r) { return r.gold.has_value(); });
    if (all_gold) {
        const ComparisonMatrix matrix = ComparisonMatrix::build(score_by_group(records));
        write_report_json(matrix, config.output_dir / "report.json");
        write_report_csv(matrix, config.output_dir / "report.csv");
        write_report_md(matrix, config.output_dir / "report.md");
    } else {
        warnings.push_back("some instances lack gold senses; score reports skipped");
    }

    write_histogram_csv(polysemy_histogram(selected, inventories), config.output_dir);

    manifest.warnings = warnings;
    manifest.finished_at = iso8601_utc(std::time(nullptr));
    manifest.write(config.output_dir / "manifest.json");

    return RunResult{std::move(records), std::move(manifest), predictions_path};
}

} // namespace wsd
