#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "wsd/errors.hpp"
#include "wsd/lexstore.hpp"
#include "wsd/random.hpp"
#include "wsd/types.hpp"

namespace wsd {

inline constexpr std::string_view kMarkerOpen = "<WSD>";
inline constexpr std::string_view kMarkerClose = "</WSD>";

/// One evaluation/training sentence with exactly one marked ambiguous word.
struct WsdInstance {
    std::string id;
    LanguageCode language;
    std::string text; // contains exactly one <WSD>...</WSD> span
    std::string target_lemma;
    Pos target_pos = Pos::kNoun;
    std::optional<SenseId> gold_sense; // absent for pure-inference inputs

    friend bool operator==(const WsdInstance&, const WsdInstance&) = default;
};

namespace detail {

/// Returns the byte offsets of the single marked span as (open, close) marker
/// positions, or throws ValidationError describing the defect.
inline std::pair<std::size_t, std::size_t> locate_single_span(std::string_view text) {
    const std::size_t open = text.find(kMarkerOpen);
    if (open == std::string_view::npos) {
        throw ValidationError("text has no <WSD> span");
    }
    if (text.find(kMarkerOpen, open + kMarkerOpen.size()) != std::string_view::npos) {
        throw ValidationError("text has more than one <WSD> opening marker");
    }
    const std::size_t close = text.find(kMarkerClose, open + kMarkerOpen.size());
    if (close == std::string_view::npos) {
        throw ValidationError("text has an unclosed <WSD> span");
    }
    if (text.find(kMarkerClose, close + kMarkerClose.size()) != std::string_view::npos) {
        throw ValidationError("text has more than one </WSD> closing marker");
    }
    if (close == open + kMarkerOpen.size()) {
        throw ValidationError("marked <WSD> span is empty");
    }
    return {open, close};
}

} // namespace detail

/// Surface form inside the instance's single marked span.
inline std::string marked_surface(std::string_view text) {
    const auto [open, close] = detail::locate_single_span(text);
    const std::size_t begin = open + kMarkerOpen.size();
    return std::string(text.substr(begin, close - begin));
}

/// Removes the marker pair, reproducing the raw sentence.
inline std::string strip_markers(std::string_view text) {
    const auto [open, close] = detail::locate_single_span(text);
    std::string raw(text.substr(0, open));
    raw.append(text.substr(open + kMarkerOpen.size(), close - open - kMarkerOpen.size()));
    raw.append(text.substr(close + kMarkerClose.size()));
    return raw;
}

/// Checks every WsdInstance invariant; the message names the instance id.
inline void validate_instance(const WsdInstance& instance) {
    auto fail = [&](const std::string& what) {
        throw ValidationError("instance '" + instance.id + "': " + what);
    };
    if (instance.id.empty()) {
        throw ValidationError("instance id must be non-empty");
    }
    if (instance.target_lemma.empty()) fail("target lemma must be non-empty");
    if (instance.text.find('\n') != std::string::npos) {
        fail("text must be a single line");
    }
    try {
        (void)detail::locate_single_span(instance.text);
    } catch (const ValidationError& e) {
        fail(e.what());
    }
}

/// One disambiguation target inside a raw multi-target sentence.
/// `begin`/`end` are byte offsets, end-exclusive.
struct TargetSpan {
    std::string lemma;
    Pos pos = Pos::kNoun;
    std::size_t begin = 0;
    std::size_t end = 0;
    std::optional<SenseId> gold;
};

/// Splits a sentence containing several ambiguous words into one instance per
/// target, each with exactly that target's span wrapped in <WSD> markers.
/// Instance ids are deterministic: "<source_id>#<target index>".
inline std::vector<WsdInstance> split_multi_target(const std::string& source_id,
                                                   const LanguageCode& language,
                                                   const std::string& raw_sentence,
                                                   const std::vector<TargetSpan>& targets) {
    for (std::size_t i = 0; i < targets.size(); ++i) {
        const TargetSpan& span = targets[i];
        auto span_desc = [&] {
            return "span #" + std::to_string(i) + " [" + std::to_string(span.begin) +
                   ", " + std::to_string(span.end) + ") of '" + source_id + "'";
        };
        if (span.begin >= span.end) {
            throw ValidationError(span_desc() + " is empty or reversed");
        }
        if (span.end > raw_sentence.size()) {
            throw ValidationError(span_desc() + " is out of bounds (sentence has " +
                                  std::to_string(raw_sentence.size()) + " bytes)");
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (span.begin < targets[j].end && targets[j].begin < span.end) {
                throw ValidationError(span_desc() + " overlaps span #" + std::to_string(j));
            }
        }
    }

    std::vector<WsdInstance> instances;
    instances.reserve(targets.size());
    for (std::size_t i = 0; i < targets.size(); ++i) {
        const TargetSpan& span = targets[i];
        WsdInstance instance;
        instance.id = source_id + "#" + std::to_string(i);
        instance.language = language;
        instance.text = raw_sentence.substr(0, span.begin);
        instance.text += kMarkerOpen;
        instance.text += raw_sentence.substr(span.begin, span.end - span.begin);
        instance.text += kMarkerClose;
        instance.text += raw_sentence.substr(span.end);
        instance.target_lemma = span.lemma;
        instance.target_pos = span.pos;
        instance.gold_sense = span.gold;
        validate_instance(instance);
        instances.push_back(std::move(instance));
    }
    return instances;
}

/// Corpus JSONL: one object per line with keys id, lang, text, lemma, pos,
/// gold (nullable). Malformed lines and duplicate ids are errors naming the
/// line; unknown POS tags map to 'other' with a warning.
inline std::vector<WsdInstance> load_corpus(const std::filesystem::path& path,
                                            std::vector<std::string>* warnings = nullptr) {
    std::ifstream in(path);
    if (!in) {
        throw SchemaError("cannot open corpus file: " + path.string());
    }
    std::vector<WsdInstance> instances;
    std::unordered_set<std::string> seen_ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto fail = [&](const std::string& what) {
            throw SchemaError(path.string() + ":" + std::to_string(line_no) + ": " + what);
        };
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            fail(e.what());
        }
        WsdInstance instance;
        try {
            instance.id = doc.at("id").get<std::string>();
            instance.language = LanguageCode(doc.at("lang").get<std::string>());
            instance.text = doc.at("text").get<std::string>();
            instance.target_lemma = doc.at("lemma").get<std::string>();
            std::vector<std::string> pos_warnings;
            instance.target_pos = parse_pos(doc.at("pos").get<std::string>(), &pos_warnings);
            if (warnings != nullptr) {
                for (const std::string& w : pos_warnings) {
                    warnings->push_back(path.string() + ":" + std::to_string(line_no) +
                                        ": " + w);
                }
            }
            if (doc.contains("gold") && !doc.at("gold").is_null()) {
                instance.gold_sense = SenseId(doc.at("gold").get<std::string>());
            }
            validate_instance(instance);
        } catch (const nlohmann::json::exception& e) {
            fail(e.what());
        } catch (const ValidationError& e) {
            fail(e.what());
        }
        if (!seen_ids.insert(instance.id).second) {
            fail("duplicate instance id '" + instance.id + "'");
        }
        instances.push_back(std::move(instance));
    }
    return instances;
}

/// Serializes instances back to the corpus JSONL schema.
inline void save_corpus(const std::vector<WsdInstance>& instances,
                        const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write corpus file: " + path.string());
    }
    for (const WsdInstance& instance : instances) {
        nlohmann::json doc{{"id", instance.id},
                           {"lang", instance.language.str()},
                           {"text", instance.text},
                           {"lemma", instance.target_lemma},
                           {"pos", std::string(to_string(instance.target_pos))},
                           {"gold", instance.gold_sense ? nlohmann::json(instance.gold_sense->str())
                                                        : nlohmann::json(nullptr)}};
        out << doc.dump() << "\n";
    }
}

struct EvalSelection {
    std::vector<WsdInstance> instances;
    std::vector<std::string> warnings;
};

/// Draws `count` evaluation instances uniformly without replacement from the
/// eligible part of the pool (targets whose inventory lists at least two
/// senses). The draw is seeded and independent of pool order: candidates are
/// canonicalized by id before drawing, so the same (pool set, seed, count)
/// always yields the same output sequence.
inline EvalSelection select_eval_samples(const std::vector<WsdInstance>& pool,
                                         const InventoryMap& inventories, int count,
                                         std::uint64_t seed) {
    if (count < 1) {
        throw ValidationError("sample count must be >= 1");
    }
    std::vector<const WsdInstance*> eligible;
    for (const WsdInstance& instance : pool) {
        const auto it = inventories.find(InventoryKey::of(
            instance.language, instance.target_lemma, instance.target_pos));
        if (it != inventories.end() && it->second.senses.size() >= 2) {
            eligible.push_back(&instance);
        }
    }
    if (eligible.empty()) {
        throw ValidationError("no ambiguous instances in pool (every target needs an "
                              "inventory with at least two senses)");
    }
    std::sort(eligible.begin(), eligible.end(),
              [](const WsdInstance* a, const WsdInstance* b) { return a->id < b->id; });

    EvalSelection selection;
    const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(count),
                                                   eligible.size());
    if (take < static_cast<std::size_t>(count)) {
        selection.warnings.push_back(
            "requested " + std::to_string(count) + " samples but only " +
            std::to_string(eligible.size()) + " eligible instances are available");
    }
    Rng rng(seed);
    for (std::size_t idx : rng.sample_indices(take, eligible.size())) {
        selection.instances.push_back(*eligible[idx]);
    }
    return selection;
}

} // namespace wsd
