#pragma once

#include <algorithm>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "wsd/corpus.hpp"
#include "wsd/errors.hpp"
#include "wsd/fewshot_kb.hpp"
#include "wsd/lexstore.hpp"
#include "wsd/types.hpp"

namespace wsd {

/// Bumped whenever the rendered prompt text changes; recorded in every run
/// manifest so results stay attributable to the exact template.
inline constexpr std::string_view kTemplateVersion = "wsd-cot/1.0.0";

inline constexpr std::string_view kSystemMessage =
    "You are a helpful assistant for identifying word senses.";

/// Sentinel line the model must end with; parsing keys off this prefix.
inline constexpr std::string_view kAnswerPrefix = "ANSWER: ";

/// A fully assembled chat prompt for one instance. candidate_senses lists the
/// sense ids in the order their blocks appear in the user message.
struct PromptBundle {
    std::string system_message;
    std::string user_message;
    std::vector<SenseId> candidate_senses;
    std::string instance_id;

    friend bool operator==(const PromptBundle&, const PromptBundle&) = default;
};

/// Builds the chain-of-thought prompt: per sense (canonical order) its id,
/// gloss, synonyms, and selected example sentences; then the step-by-step
/// instruction, the marked target sentence, and the answer-format directive.
/// Sense listing order never depends on the sampling strategy; strategies
/// only change how many example lines each block carries.
inline PromptBundle assemble(
    const WsdInstance& instance, const SenseInventory& inventory,
    const std::vector<std::pair<SenseId, std::vector<KbExample>>>& fewshot) {
    if (inventory.senses.empty()) {
        throw ValidationError("inventory for '" + inventory.lemma +
                              "' has no senses; cannot build a prompt");
    }
    if (instance.language != inventory.language) {
        throw ValidationError("instance '" + instance.id + "' is " +
                              instance.language.str() + " but the inventory is " +
                              inventory.language.str());
    }
    if (!std::is_sorted(inventory.senses.begin(), inventory.senses.end(),
                        [](const SenseEntry& a, const SenseEntry& b) {
                            return a.sense_id < b.sense_id;
                        })) {
        throw ValidationError("inventory for '" + inventory.lemma +
                              "' is not in canonical order");
    }
    validate_instance(instance);

    std::unordered_set<std::string> inventory_ids;
    for (const SenseEntry& entry : inventory.senses) {
        inventory_ids.insert(entry.sense_id.str());
    }
    std::unordered_map<std::string, const std::vector<KbExample>*> examples_by_sense;
    for (const auto& [sense, examples] : fewshot) {
        if (!inventory_ids.contains(sense.str())) {
            throw ValidationError("few-shot sense '" + sense.str() +
                                  "' is not in the inventory of '" + inventory.lemma + "'");
        }
        examples_by_sense[sense.str()] = &examples;
    }

    std::string user;
    user += "You will disambiguate an ambiguous word in a sentence written in ";
    user += instance.language.str();
    user += ".\nThe target word is marked between <WSD> and </WSD>.\n\n";
    user += "Target lemma: ";
    user += instance.target_lemma;
    user += " (";
    user += to_string(instance.target_pos);
    user += ")\n\nCandidate senses:\n";

    PromptBundle bundle;
    for (const SenseEntry& entry : inventory.senses) {
        user += "\nSense: ";
        user += entry.sense_id.str();
        user += "\nGloss: ";
        user += entry.gloss.empty() ? "(none)" : entry.gloss;
        user += "\nSynonyms: ";
        if (entry.synonyms.empty()) {
            user += "(none)";
        } else {
            for (std::size_t i = 0; i < entry.synonyms.size(); ++i) {
                if (i > 0) user += ", ";
                user += entry.synonyms[i];
            }
        }
        const auto it = examples_by_sense.find(entry.sense_id.str());
        const bool has_examples = it != examples_by_sense.end() && !it->second->empty();
        if (!has_examples) {
            user += "\nExamples: (none)\n";
        } else {
            user += "\nExamples:\n";
            for (const KbExample& example : *it->second) {
                user += "- ";
                user += example.sentence;
                user += "\n";
            }
        }
        bundle.candidate_senses.push_back(entry.sense_id);
    }

    user += "\nThink step by step: compare the context of the marked word with each "
            "candidate sense's gloss, synonyms, and examples, then choose the single "
            "best-fitting sense.\n\nSentence: ";
    user += instance.text;
    user += "\n\nEnd your reply with a final line of exactly:\nANSWER: <sense_id>\n";

    bundle.system_message = std::string(kSystemMessage);
    bundle.user_message = std::move(user);
    bundle.instance_id = instance.id;
    return bundle;
}

/// Pure serialization of a bundle into (system, user) message strings.
/// Golden-file stable within a template major version.
inline std::pair<std::string, std::string> render_template(const PromptBundle& bundle) {
    return {bundle.system_message, bundle.user_message};
}

} // namespace wsd
