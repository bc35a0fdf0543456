#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "wsd/errors.hpp"
#include "wsd/sampling.hpp"
#include "wsd/types.hpp"

namespace wsd {

/// Stored in predictions.jsonl when no candidate sense could be recovered
/// from the model reply. Scoring treats it as an incorrect prediction.
inline constexpr std::string_view kParseFailureSentinel = "__PARSE_FAILURE__";

namespace detail {

inline std::string_view trim_ws(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
        s.remove_prefix(1);
    }
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
        s.remove_suffix(1);
    }
    return s;
}

} // namespace detail

/// Recovers the predicted sense from a raw model reply. The strict path reads
/// an "ANSWER: <sense_id>" final line; if that fails, the reply is accepted
/// anyway when exactly one candidate id appears somewhere in the text.
/// Returns nullopt when no single candidate can be pinned down.
inline std::optional<SenseId> parse_sense(std::string_view raw_text,
                                          const std::vector<SenseId>& candidates) {
    if (candidates.empty()) {
        throw ValidationError("cannot parse a reply against an empty candidate list");
    }

    // Strict: the last non-blank line, "ANSWER:" prefix, exact id match.
    std::string_view rest = raw_text;
    std::string_view last_line;
    while (!rest.empty()) {
        const std::size_t nl = rest.find('\n');
        const std::string_view line = rest.substr(0, nl);
        if (!detail::trim_ws(line).empty()) last_line = line;
        if (nl == std::string_view::npos) break;
        rest.remove_prefix(nl + 1);
    }
    std::string_view trimmed = detail::trim_ws(last_line);
    constexpr std::string_view prefix = "ANSWER:";
    if (trimmed.substr(0, prefix.size()) == prefix) {
        const std::string_view token = detail::trim_ws(trimmed.substr(prefix.size()));
        for (const SenseId& candidate : candidates) {
            if (token == candidate.str()) return candidate;
        }
    }

    // Lenient: accept iff exactly one distinct candidate id occurs anywhere.
    std::optional<SenseId> found;
    for (const SenseId& candidate : candidates) {
        if (raw_text.find(candidate.str()) == std::string_view::npos) continue;
        if (found && found->str() != candidate.str()) return std::nullopt;
        found = candidate;
    }
    return found;
}

struct PredictionRecord {
    std::string instance_id;
    std::optional<SenseId> predicted; // nullopt = parse failure
    std::optional<SenseId> gold;
    SamplingStrategy strategy = SamplingStrategy::kHighest;
    std::string model_name;
    LanguageCode language{"en"};

    nlohmann::json to_json() const {
        nlohmann::json doc{{"instance_id", instance_id},
                           {"predicted", predicted ? nlohmann::json(predicted->str())
                                                   : nlohmann::json(kParseFailureSentinel)},
                           {"strategy", std::string(to_string(strategy))},
                           {"model", model_name},
                           {"language", language.str()}};
        doc["gold"] = gold ? nlohmann::json(gold->str()) : nlohmann::json(nullptr);
        return doc;
    }

    static PredictionRecord from_json(const nlohmann::json& doc) {
        PredictionRecord record;
        record.instance_id = doc.at("instance_id").get<std::string>();
        const std::string predicted = doc.at("predicted").get<std::string>();
        if (predicted != kParseFailureSentinel) {
            record.predicted = SenseId(predicted);
        }
        if (doc.contains("gold") && !doc.at("gold").is_null()) {
            record.gold = SenseId(doc.at("gold").get<std::string>());
        }
        record.strategy = parse_strategy(doc.at("strategy").get<std::string>());
        record.model_name = doc.at("model").get<std::string>();
        record.language = LanguageCode(doc.at("language").get<std::string>());
        return record;
    }
};

inline void save_predictions(const std::vector<PredictionRecord>& records,
                             const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write predictions: " + path.string());
    for (const PredictionRecord& record : records) {
        out << record.to_json().dump() << "\n";
    }
}

inline std::vector<PredictionRecord> load_predictions(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open predictions: " + path.string());
    std::vector<PredictionRecord> records;
    std::set<std::tuple<std::string, SamplingStrategy, std::string, std::string>> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string where = path.string() + ":" + std::to_string(line_no) + ": ";
        PredictionRecord record;
        try {
            record = PredictionRecord::from_json(nlohmann::json::parse(line));
        } catch (const nlohmann::json::exception& e) {
            throw SchemaError(where + e.what());
        } catch (const ValidationError& e) {
            throw SchemaError(where + e.what());
        } catch (const ConfigError& e) {
            throw SchemaError(where + e.what());
        }
        const auto key = std::make_tuple(record.model_name, record.strategy,
                                         record.language.str(), record.instance_id);
        if (!seen.insert(key).second) {
            throw ValidationError(where + "duplicate prediction for instance '" +
                                  record.instance_id + "'");
        }
        records.push_back(std::move(record));
    }
    return records;
}

struct Score {
    double micro_f1 = 0.0;
    std::size_t n_instances = 0;
    std::size_t n_correct = 0;
    std::size_t n_parse_failures = 0;
};

/// Micro-averaged F1 over single-label predictions where every instance gets
/// exactly one predicted sense. Under that regime precision and recall are
/// both n_correct / n, so the F1 equals plain accuracy; parse failures keep
/// their slot in the denominator and count as wrong.
inline Score micro_f1(const std::vector<PredictionRecord>& records) {
    if (records.empty()) {
        throw ValidationError("cannot score an empty prediction set");
    }
    Score score;
    score.n_instances = records.size();
    for (const PredictionRecord& record : records) {
        if (!record.gold) {
            throw ValidationError("instance '" + record.instance_id +
                                  "' has no gold sense; scoring needs labeled data");
        }
        if (!record.predicted) {
            ++score.n_parse_failures;
        } else if (record.predicted->str() == record.gold->str()) {
            ++score.n_correct;
        }
    }
    score.micro_f1 = static_cast<double>(score.n_correct) /
                     static_cast<double>(score.n_instances);
    return score;
}

struct ScoreCell {
    std::string model;
    SamplingStrategy strategy = SamplingStrategy::kHighest;
    LanguageCode language{"en"};
    Score score;
};

/// Scores each (model, strategy, language) slice independently. Cells come
/// back sorted by model, then strategy, then language.
inline std::vector<ScoreCell> score_by_group(const std::vector<PredictionRecord>& records) {
    std::map<std::tuple<std::string, SamplingStrategy, std::string>,
             std::vector<PredictionRecord>>
        groups;
    for (const PredictionRecord& record : records) {
        groups[{record.model_name, record.strategy, record.language.str()}].push_back(record);
    }
    std::vector<ScoreCell> cells;
    cells.reserve(groups.size());
    for (const auto& [key, group] : groups) {
        cells.push_back(ScoreCell{std::get<0>(key), std::get<1>(key),
                                  LanguageCode(std::get<2>(key)), micro_f1(group)});
    }
    return cells;
}

} // namespace wsd
