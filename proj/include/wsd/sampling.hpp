#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "wsd/errors.hpp"
#include "wsd/fewshot_kb.hpp"
#include "wsd/lexstore.hpp"
#include "wsd/random.hpp"
#include "wsd/types.hpp"

namespace wsd {

/// The three frequency-sharing rules that decide how many few-shot examples
/// each sense contributes to a prompt.
enum class SamplingStrategy { kHighest, kLowest, kAverage };

inline constexpr SamplingStrategy kAllStrategies[] = {
    SamplingStrategy::kHighest, SamplingStrategy::kLowest, SamplingStrategy::kAverage};

inline std::string_view to_string(SamplingStrategy strategy) {
    switch (strategy) {
        case SamplingStrategy::kHighest: return "highest";
        case SamplingStrategy::kLowest: return "lowest";
        case SamplingStrategy::kAverage: return "average";
    }
    return "highest";
}

inline SamplingStrategy parse_strategy(std::string_view name) {
    if (name == "highest") return SamplingStrategy::kHighest;
    if (name == "lowest") return SamplingStrategy::kLowest;
    if (name == "average") return SamplingStrategy::kAverage;
    throw ConfigError("unknown sampling strategy '" + std::string(name) +
                      "' (expected highest, lowest, or average)");
}

/// Example availability per sense, in inventory canonical order. Every
/// inventory sense appears exactly once, zero-frequency senses included.
struct FrequencyProfile {
    std::vector<std::pair<SenseId, std::size_t>> entries;
};

/// Per-sense example allocation, same order as the profile it came from.
struct SamplingPlan {
    std::vector<std::pair<SenseId, std::size_t>> allocations;
};

/// Counts available examples per inventory sense. A sense map key that is not
/// an inventory sense means the KB and the inventory have drifted apart.
inline FrequencyProfile frequency_profile(const ExampleMap& sense_map,
                                          const SenseInventory& inventory) {
    std::unordered_set<std::string> known;
    known.reserve(inventory.senses.size());
    for (const SenseEntry& entry : inventory.senses) {
        known.insert(entry.sense_id.str());
    }
    for (const auto& [sense, examples] : sense_map) {
        if (!known.contains(sense)) {
            throw ValidationError("KB sense '" + sense + "' is not in the inventory of '" +
                                  inventory.lemma + "' (" +
                                  std::string(to_string(inventory.pos)) + ", " +
                                  inventory.language.str() + "): KB/inventory drift");
        }
    }
    FrequencyProfile profile;
    profile.entries.reserve(inventory.senses.size());
    for (const SenseEntry& entry : inventory.senses) {
        const auto it = sense_map.find(entry.sense_id.str());
        profile.entries.emplace_back(entry.sense_id,
                                     it == sense_map.end() ? 0 : it->second.size());
    }
    return profile;
}

/// Applies one frequency-sharing rule to a profile.
///   highest: k_i = min(max F, freq_i)
///   lowest:  k_i = min(min nonzero F, freq_i)
///   average: k = floor((min nonzero F + max F) / 2), k_i = min(k, freq_i)
/// A profile with no examples anywhere allocates zero for every sense.
inline SamplingPlan plan(SamplingStrategy strategy, const FrequencyProfile& profile) {
    if (profile.entries.empty()) {
        throw ValidationError("cannot plan over an empty frequency profile");
    }
    std::size_t max_freq = 0;
    std::optional<std::size_t> min_nonzero;
    for (const auto& [sense, freq] : profile.entries) {
        max_freq = std::max(max_freq, freq);
        if (freq > 0 && (!min_nonzero || freq < *min_nonzero)) {
            min_nonzero = freq;
        }
    }
    std::size_t target = 0;
    if (min_nonzero) {
        switch (strategy) {
            case SamplingStrategy::kHighest: target = max_freq; break;
            case SamplingStrategy::kLowest: target = *min_nonzero; break;
            case SamplingStrategy::kAverage: target = (*min_nonzero + max_freq) / 2; break;
        }
    }
    SamplingPlan result;
    result.allocations.reserve(profile.entries.size());
    for (const auto& [sense, freq] : profile.entries) {
        result.allocations.emplace_back(sense, std::min(target, freq));
    }
    return result;
}

/// Picks the planned number of examples per sense. A full allocation takes
/// the stored order; a partial one is a uniform without-replacement draw
/// seeded by (seed, instance_id, sense_id), so results do not depend on
/// execution order or thread scheduling. Chosen subsets keep stored order.
/// Zero-allocation senses stay in the output with an empty example list;
/// their sense id is still carried into the prompt.
inline std::vector<std::pair<SenseId, std::vector<KbExample>>> select(
    const SamplingPlan& plan, const ExampleMap& sense_map, std::uint64_t seed,
    const std::string& instance_id) {
    std::vector<std::pair<SenseId, std::vector<KbExample>>> picked;
    picked.reserve(plan.allocations.size());
    for (const auto& [sense, want] : plan.allocations) {
        const auto it = sense_map.find(sense.str());
        const std::size_t available = it == sense_map.end() ? 0 : it->second.size();
        if (want > available) {
            throw Error("internal: plan allocates " + std::to_string(want) +
                        " examples for sense '" + sense.str() + "' but only " +
                        std::to_string(available) + " are available");
        }
        std::vector<KbExample> chosen;
        if (want == available && available > 0) {
            chosen = it->second;
        } else if (want > 0) {
            Rng rng(derive_seed(seed, {instance_id, sense.str()}));
            std::vector<std::size_t> indices = rng.sample_indices(want, available);
            std::sort(indices.begin(), indices.end());
            chosen.reserve(want);
            for (std::size_t index : indices) {
                chosen.push_back(it->second[index]);
            }
        }
        picked.emplace_back(sense, std::move(chosen));
    }
    return picked;
}

} // namespace wsd
