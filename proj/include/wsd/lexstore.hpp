#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "wsd/digest.hpp"
#include "wsd/errors.hpp"
#include "wsd/random.hpp"
#include "wsd/types.hpp"

namespace wsd {

/// One candidate sense: gloss plus synonyms. At least one of the two must be
/// non-empty for the sense to be usable in a prompt.
struct SenseEntry {
    SenseId sense_id;
    std::string gloss;
    std::vector<std::string> synonyms;
    LanguageCode language;

    friend bool operator==(const SenseEntry&, const SenseEntry&) = default;
};

/// Candidate senses for one (lemma, pos, language). Senses are kept in
/// canonical order (lexicographic by sense id); downstream tie-breaking
/// depends on this order being stable.
struct SenseInventory {
    std::string lemma;
    Pos pos = Pos::kNoun;
    LanguageCode language;
    std::vector<SenseEntry> senses;

    /// Sorts senses into canonical order and checks the entry invariants.
    void canonicalize() {
        std::sort(senses.begin(), senses.end(),
                  [](const SenseEntry& a, const SenseEntry& b) {
                      return a.sense_id < b.sense_id;
                  });
        for (std::size_t i = 0; i < senses.size(); ++i) {
            const SenseEntry& entry = senses[i];
            if (entry.gloss.empty() && entry.synonyms.empty()) {
                throw ValidationError("sense '" + entry.sense_id.str() +
                                      "' of lemma '" + lemma +
                                      "' has neither gloss nor synonyms");
            }
            if (i > 0 && senses[i - 1].sense_id == entry.sense_id) {
                throw ValidationError("duplicate sense id '" + entry.sense_id.str() +
                                      "' in inventory for lemma '" + lemma + "'");
            }
        }
    }

    friend bool operator==(const SenseInventory&, const SenseInventory&) = default;
};

/// Lookup key for inventories: (language, folded lemma, pos).
struct InventoryKey {
    std::string language;
    std::string lemma; // case-folded
    Pos pos = Pos::kNoun;

    static InventoryKey of(const LanguageCode& lang, std::string_view lemma, Pos pos) {
        return InventoryKey{lang.str(), fold_lemma(lemma), pos};
    }

    friend bool operator==(const InventoryKey&, const InventoryKey&) = default;
};

struct InventoryKeyHash {
    std::size_t operator()(const InventoryKey& key) const {
        std::uint64_t h = fnv1a64(key.language);
        h = fnv1a64("\x1f", h);
        h = fnv1a64(key.lemma, h);
        h = fnv1a64("\x1f", h);
        h = fnv1a64(to_string(key.pos), h);
        return static_cast<std::size_t>(h);
    }
};

using InventoryMap = std::unordered_map<InventoryKey, SenseInventory, InventoryKeyHash>;

/// Daily API credit budget. Rolls over at UTC midnight.
struct BudgetState {
    int daily_limit = 1000;
    int used_today = 0;
    std::string day_stamp; // YYYY-MM-DD, UTC
};

namespace detail {

inline std::string utc_day_stamp(std::time_t now) {
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", tm_utc.tm_year + 1900,
                  tm_utc.tm_mon + 1, tm_utc.tm_mday);
    return buf;
}

inline SenseInventory inventory_from_json(const nlohmann::json& doc,
                                          const std::string& origin) {
    if (!doc.is_object()) {
        throw SchemaError(origin + ": inventory document must be a JSON object");
    }
    for (const std::string key : {"lang", "lemma", "pos", "senses"}) {
        if (!doc.contains(key)) {
            throw SchemaError(origin + ": missing key '" + key + "'");
        }
    }
    SenseInventory inv;
    try {
        inv.language = LanguageCode(doc.at("lang").get<std::string>());
        inv.lemma = doc.at("lemma").get<std::string>();
        inv.pos = parse_pos(doc.at("pos").get<std::string>());
        if (!doc.at("senses").is_array()) {
            throw SchemaError(origin + ": 'senses' must be an array");
        }
        for (const auto& sense_doc : doc.at("senses")) {
            SenseEntry entry;
            entry.sense_id = SenseId(sense_doc.at("id").get<std::string>());
            entry.gloss = sense_doc.value("gloss", std::string{});
            if (sense_doc.contains("synonyms")) {
                entry.synonyms = sense_doc.at("synonyms").get<std::vector<std::string>>();
            }
            entry.language = inv.language;
            inv.senses.push_back(std::move(entry));
        }
        inv.canonicalize();
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(origin + ": " + e.what());
    } catch (const ValidationError& e) {
        throw SchemaError(origin + ": " + e.what());
    }
    return inv;
}

inline nlohmann::json inventory_to_json(const SenseInventory& inv) {
    nlohmann::json senses = nlohmann::json::array();
    for (const SenseEntry& entry : inv.senses) {
        senses.push_back({{"id", entry.sense_id.str()},
                          {"gloss", entry.gloss},
                          {"synonyms", entry.synonyms}});
    }
    return {{"lang", inv.language.str()},
            {"lemma", inv.lemma},
            {"pos", std::string(to_string(inv.pos))},
            {"senses", std::move(senses)}};
}

} // namespace detail

/// Remote source of inventories. Implementations: HttpInventoryClient
/// (OpenAPI-style JSON endpoint) and test doubles.
class InventoryClient {
public:
    virtual ~InventoryClient() = default;

    /// Fetches one inventory. Throws NotFoundError when the entry does not
    /// exist and TransportError on network failure.
    virtual SenseInventory fetch(const LanguageCode& language, const std::string& lemma,
                                 Pos pos) = 0;
};

/// Sense-inventory store: in-memory map, optional on-disk cache, optional
/// remote client guarded by a daily credit budget. Cached reads are free;
/// only remote fetches charge the budget.
class SenseStore {
public:
    struct Options {
        std::optional<std::filesystem::path> cache_dir;
        int daily_limit = 1000;
        std::function<std::time_t()> clock; // empty = wall clock; tests inject one
    };

    SenseStore() : SenseStore(Options{}, nullptr) {}

    explicit SenseStore(Options options,
                        std::unique_ptr<InventoryClient> remote = nullptr)
        : options_(std::move(options)), remote_(std::move(remote)) {
        if (!options_.clock) {
            options_.clock = [] { return std::time(nullptr); };
        }
        budget_.daily_limit = options_.daily_limit;
        budget_.day_stamp = detail::utc_day_stamp(options_.clock());
        if (options_.cache_dir) {
            std::filesystem::create_directories(*options_.cache_dir);
            load_budget_file();
        }
    }

    /// Loads every *.json inventory fixture in `dir` into the store.
    /// Returns the number of files loaded. Idempotent.
    std::size_t preload_fixtures(const std::filesystem::path& dir) {
        if (!std::filesystem::is_directory(dir)) {
            throw SchemaError("fixture directory does not exist: " + dir.string());
        }
        std::vector<std::filesystem::path> files;
        for (const auto& entry : std::filesystem::directory_iterator(dir)) {
            if (entry.is_regular_file() && entry.path().extension() == ".json") {
                files.push_back(entry.path());
            }
        }
        std::sort(files.begin(), files.end());
        std::size_t count = 0;
        std::lock_guard<std::mutex> lock(mutex_);
        for (const auto& file : files) {
            std::ifstream in(file);
            nlohmann::json doc;
            try {
                doc = nlohmann::json::parse(in);
            } catch (const nlohmann::json::exception& e) {
                throw SchemaError(file.string() + ": " + e.what());
            }
            SenseInventory inv = detail::inventory_from_json(doc, file.string());
            memory_[InventoryKey::of(inv.language, inv.lemma, inv.pos)] = std::move(inv);
            ++count;
        }
        return count;
    }

    /// Returns the inventory for (lemma, pos, language), consulting the
    /// in-memory map, then the disk cache, then the remote client. Remote
    /// fetches charge one credit and are persisted to the disk cache.
    SenseInventory fetch_inventory(const LanguageCode& language, const std::string& lemma,
                                   Pos pos) {
        const InventoryKey key = InventoryKey::of(language, lemma, pos);
        std::lock_guard<std::mutex> lock(mutex_);

        if (auto it = memory_.find(key); it != memory_.end()) {
            return it->second;
        }
        if (options_.cache_dir) {
            const auto file = cache_file(key);
            if (std::filesystem::exists(file)) {
                std::ifstream in(file);
                nlohmann::json doc;
                try {
                    doc = nlohmann::json::parse(in);
                } catch (const nlohmann::json::exception& e) {
                    throw SchemaError(file.string() + ": " + e.what());
                }
                SenseInventory inv = detail::inventory_from_json(doc, file.string());
                memory_[key] = inv;
                return inv;
            }
        }
        if (!remote_) {
            throw NotFoundError("no inventory for (" + language.str() + ", " + lemma +
                                ", " + std::string(to_string(pos)) +
                                ") and no remote client configured");
        }

        roll_day_if_needed();
        if (budget_.used_today >= budget_.daily_limit) {
            throw BudgetExhaustedError(
                "daily budget exhausted (" + std::to_string(budget_.used_today) + "/" +
                std::to_string(budget_.daily_limit) + "); resume after UTC midnight");
        }

        SenseInventory inv = remote_->fetch(language, lemma, pos);
        inv.canonicalize();
        budget_.used_today += 1;
        persist_budget();
        if (options_.cache_dir) {
            std::ofstream out(cache_file(key));
            out << detail::inventory_to_json(inv).dump(2) << "\n";
        }
        memory_[key] = inv;
        return inv;
    }

    BudgetState budget() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return budget_;
    }

    /// Read-only view of everything currently held in memory.
    const InventoryMap& inventories() const { return memory_; }

private:
    std::filesystem::path cache_file(const InventoryKey& key) const {
        const std::string digest = sha256_hex(key.language + "\x1f" + key.lemma + "\x1f" +
                                              std::string(to_string(key.pos)));
        return *options_.cache_dir / (digest.substr(0, 32) + ".json");
    }

    void roll_day_if_needed() {
        const std::string today = detail::utc_day_stamp(options_.clock());
        if (today != budget_.day_stamp) {
            budget_.day_stamp = today;
            budget_.used_today = 0;
        }
    }

    void persist_budget() {
        if (!options_.cache_dir) return;
        nlohmann::json doc{{"daily_limit", budget_.daily_limit},
                           {"used_today", budget_.used_today},
                           {"day_stamp", budget_.day_stamp}};
        std::ofstream out(*options_.cache_dir / "budget.json");
        out << doc.dump(2) << "\n";
    }

    void load_budget_file() {
        const auto file = *options_.cache_dir / "budget.json";
        if (!std::filesystem::exists(file)) return;
        std::ifstream in(file);
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            throw SchemaError(file.string() + ": " + e.what());
        }
        budget_.used_today = doc.value("used_today", 0);
        budget_.day_stamp = doc.value("day_stamp", budget_.day_stamp);
        roll_day_if_needed();
    }

    Options options_;
    std::unique_ptr<InventoryClient> remote_;
    mutable std::mutex mutex_;
    InventoryMap memory_;
    BudgetState budget_;
};

} // namespace wsd
