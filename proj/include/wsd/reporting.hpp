#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "wsd/corpus.hpp"
#include "wsd/errors.hpp"
#include "wsd/evaluation.hpp"
#include "wsd/lexstore.hpp"
#include "wsd/sampling.hpp"

namespace wsd {

struct MatrixCell {
    Score score;
    bool best = false; // ties share the flag
};

/// Model x strategy x language score grid. "best" marks, within each
/// (model, language) pair, every strategy whose micro-F1 equals the maximum.
class ComparisonMatrix {
public:
    static ComparisonMatrix build(const std::vector<ScoreCell>& cells) {
        ComparisonMatrix matrix;
        std::set<std::string> models;
        std::set<std::string> languages;
        std::set<SamplingStrategy> strategies;
        for (const ScoreCell& cell : cells) {
            const Key key{cell.model, cell.strategy, cell.language.str()};
            if (!matrix.cells_.emplace(key, MatrixCell{cell.score, false}).second) {
                throw ValidationError("duplicate score cell for model '" + cell.model +
                                      "', strategy '" +
                                      std::string(to_string(cell.strategy)) +
                                      "', language '" + cell.language.str() + "'");
            }
            models.insert(cell.model);
            languages.insert(cell.language.str());
            strategies.insert(cell.strategy);
        }
        matrix.models_.assign(models.begin(), models.end());
        for (const SamplingStrategy strategy : kAllStrategies) {
            if (strategies.count(strategy) != 0) matrix.strategies_.push_back(strategy);
        }
        for (const std::string& language : languages) {
            matrix.languages_.emplace_back(language);
        }
        matrix.flag_best();
        return matrix;
    }

    const std::vector<std::string>& models() const { return models_; }
    const std::vector<SamplingStrategy>& strategies() const { return strategies_; }
    const std::vector<LanguageCode>& languages() const { return languages_; }

    const MatrixCell* find(const std::string& model, SamplingStrategy strategy,
                           const LanguageCode& language) const {
        const auto it = cells_.find(Key{model, strategy, language.str()});
        return it == cells_.end() ? nullptr : &it->second;
    }

    nlohmann::json to_json() const {
        nlohmann::json strategies = nlohmann::json::array();
        for (const SamplingStrategy strategy : strategies_) {
            strategies.push_back(std::string(to_string(strategy)));
        }
        nlohmann::json languages = nlohmann::json::array();
        for (const LanguageCode& language : languages_) {
            languages.push_back(language.str());
        }
        nlohmann::json cells = nlohmann::json::array();
        for (const auto& [key, cell] : cells_) {
            cells.push_back({{"model", std::get<0>(key)},
                             {"strategy", std::string(to_string(std::get<1>(key)))},
                             {"language", std::get<2>(key)},
                             {"micro_f1", cell.score.micro_f1},
                             {"n_instances", cell.score.n_instances},
                             {"n_correct", cell.score.n_correct},
                             {"n_parse_failures", cell.score.n_parse_failures},
                             {"best", cell.best}});
        }
        return {{"models", models_},
                {"strategies", strategies},
                {"languages", languages},
                {"cells", cells}};
    }

private:
    using Key = std::tuple<std::string, SamplingStrategy, std::string>;

    void flag_best() {
        for (const std::string& model : models_) {
            for (const LanguageCode& language : languages_) {
                double max_f1 = -1.0;
                for (const SamplingStrategy strategy : strategies_) {
                    const auto it = cells_.find(Key{model, strategy, language.str()});
                    if (it != cells_.end()) {
                        max_f1 = std::max(max_f1, it->second.score.micro_f1);
                    }
                }
                for (const SamplingStrategy strategy : strategies_) {
                    const auto it = cells_.find(Key{model, strategy, language.str()});
                    if (it != cells_.end() && it->second.score.micro_f1 == max_f1) {
                        it->second.best = true;
                    }
                }
            }
        }
    }

    std::vector<std::string> models_;
    std::vector<SamplingStrategy> strategies_;
    std::vector<LanguageCode> languages_;
    std::map<Key, MatrixCell> cells_;
};

namespace detail {

inline std::string format_f1(double value) {
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%.6f", value);
    return buffer;
}

} // namespace detail

inline void write_report_json(const ComparisonMatrix& matrix,
                              const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write report: " + path.string());
    out << matrix.to_json().dump(2) << "\n";
}

inline void write_report_csv(const ComparisonMatrix& matrix,
                             const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write report: " + path.string());
    out << "model,strategy,language,micro_f1,n_instances,n_correct,n_parse_failures,best\n";
    for (const std::string& model : matrix.models()) {
        for (const SamplingStrategy strategy : matrix.strategies()) {
            for (const LanguageCode& language : matrix.languages()) {
                const MatrixCell* cell = matrix.find(model, strategy, language);
                if (cell == nullptr) continue;
                out << model << "," << to_string(strategy) << "," << language.str() << ","
                    << detail::format_f1(cell->score.micro_f1) << ","
                    << cell->score.n_instances << "," << cell->score.n_correct << ","
                    << cell->score.n_parse_failures << ","
                    << (cell->best ? "true" : "false") << "\n";
            }
        }
    }
}

/// One table per model, languages as rows, strategies as columns. The best
/// strategy per row is bold; absent cells render as an em dash.
inline void write_report_md(const ComparisonMatrix& matrix,
                            const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write report: " + path.string());
    out << "# Strategy comparison\n";
    for (const std::string& model : matrix.models()) {
        out << "\n## " << model << "\n\n";
        out << "| Language |";
        for (const SamplingStrategy strategy : matrix.strategies()) {
            out << " " << to_string(strategy) << " |";
        }
        out << "\n| --- |";
        for (std::size_t i = 0; i < matrix.strategies().size(); ++i) out << " --- |";
        out << "\n";
        for (const LanguageCode& language : matrix.languages()) {
            out << "| " << language.str() << " |";
            for (const SamplingStrategy strategy : matrix.strategies()) {
                const MatrixCell* cell = matrix.find(model, strategy, language);
                if (cell == nullptr) {
                    out << " — |";
                } else if (cell->best) {
                    out << " **" << detail::format_f1(cell->score.micro_f1) << "** |";
                } else {
                    out << " " << detail::format_f1(cell->score.micro_f1) << " |";
                }
            }
            out << "\n";
        }
    }
}

/// language -> (sense count -> number of evaluated instances whose target
/// carries that many inventory senses).
using PolysemyHistogram = std::map<std::string, std::map<std::size_t, std::size_t>>;

inline PolysemyHistogram polysemy_histogram(const std::vector<WsdInstance>& instances,
                                            const InventoryMap& inventories) {
    PolysemyHistogram histogram;
    for (const WsdInstance& instance : instances) {
        const auto key = InventoryKey::of(instance.language, instance.target_lemma,
                                          instance.target_pos);
        const auto it = inventories.find(key);
        if (it == inventories.end()) {
            throw ValidationError("no sense inventory for lemma '" + instance.target_lemma +
                                  "' (" + std::string(to_string(instance.target_pos)) +
                                  ", " + instance.language.str() + ")");
        }
        ++histogram[instance.language.str()][it->second.senses.size()];
    }
    return histogram;
}

/// Writes histogram_<lang>.csv per language into dir; returns the paths.
inline std::vector<std::filesystem::path> write_histogram_csv(
    const PolysemyHistogram& histogram, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> written;
    for (const auto& [language, counts] : histogram) {
        const auto path = dir / ("histogram_" + language + ".csv");
        std::ofstream out(path);
        if (!out) throw Error("cannot write histogram: " + path.string());
        out << "sense_count,instance_count\n";
        for (const auto& [sense_count, instance_count] : counts) {
            out << sense_count << "," << instance_count << "\n";
        }
        written.push_back(path);
    }
    return written;
}

inline std::string iso8601_utc(std::time_t when) {
    std::tm tm{};
    gmtime_r(&when, &tm);
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%04d-%02d-%02dT%02d:%02d:%02dZ",
                  tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min,
                  tm.tm_sec);
    return buffer;
}

/// Everything needed to reproduce a run: the seed, the frozen prompt template
/// version, and digests of the exact corpus, knowledge base, and model
/// configuration that produced the predictions.
struct RunManifest {
    std::uint64_t seed = 0;
    std::string template_version;
    std::vector<SamplingStrategy> strategies;
    std::string model_config_digest;
    std::string corpus_digest;
    std::string kb_digest;
    std::string started_at;
    std::string finished_at;
    std::size_t parse_failure_count = 0;
    std::vector<std::string> warnings;

    nlohmann::json to_json() const {
        nlohmann::json strategy_names = nlohmann::json::array();
        for (const SamplingStrategy strategy : strategies) {
            strategy_names.push_back(std::string(to_string(strategy)));
        }
        return {{"seed", seed},
                {"template_version", template_version},
                {"strategies", strategy_names},
                {"model_config_digest", model_config_digest},
                {"corpus_digest", corpus_digest},
                {"kb_digest", kb_digest},
                {"started_at", started_at},
                {"finished_at", finished_at},
                {"parse_failure_count", parse_failure_count},
                {"warnings", warnings}};
    }

    void write(const std::filesystem::path& path) const {
        std::ofstream out(path);
        if (!out) throw Error("cannot write manifest: " + path.string());
        out << to_json().dump(2) << "\n";
    }
};

} // namespace wsd
