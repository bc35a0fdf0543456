#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "wsd/corpus.hpp"
#include "wsd/errors.hpp"
#include "wsd/types.hpp"

namespace wsd {

/// One training sentence stored under its gold sense.
struct KbExample {
    std::string sentence; // carries the single <WSD>...</WSD> span
    SenseId sense_id;

    friend bool operator==(const KbExample&, const KbExample&) = default;
};

/// Few-shot knowledge base: language -> lemma -> POS -> sense -> examples.
/// Hash-structured at every level, so a lookup costs three hashed finds no
/// matter how large the tree is. The hasher is a template parameter so tests
/// can instrument it; use the FewShotKb alias everywhere else.
template <class Hash = std::hash<std::string>>
class BasicFewShotKb {
public:
    using ExampleMap = std::unordered_map<std::string, std::vector<KbExample>, Hash>;
    using PosMap = std::unordered_map<std::string, ExampleMap, Hash>;
    using LemmaMap = std::unordered_map<std::string, PosMap, Hash>;
    using LangMap = std::unordered_map<std::string, LemmaMap, Hash>;

    /// Builds the tree from gold-labeled instances. Per-sense example lists
    /// preserve input order. An instance without a gold sense is an error.
    static BasicFewShotKb build(const std::vector<WsdInstance>& training_instances) {
        BasicFewShotKb kb;
        for (const WsdInstance& instance : training_instances) {
            if (!instance.gold_sense) {
                throw ValidationError("instance '" + instance.id +
                                      "' has no gold sense; cannot enter the KB");
            }
            validate_instance(instance);
            kb.root_[instance.language.str()][fold_lemma(instance.target_lemma)]
                    [std::string(to_string(instance.target_pos))]
                    [instance.gold_sense->str()]
                        .push_back(KbExample{instance.text, *instance.gold_sense});
        }
        return kb;
    }

    /// Sense -> examples map for one (language, lemma, pos) path. An absent
    /// path yields the empty map: zero-example lemmas are not an error.
    const ExampleMap& lookup(const LanguageCode& language, std::string_view lemma,
                             Pos pos) const {
        const auto lang_it = root_.find(language.str());
        if (lang_it == root_.end()) return empty_map();
        const auto lemma_it = lang_it->second.find(fold_lemma(lemma));
        if (lemma_it == lang_it->second.end()) return empty_map();
        const auto pos_it = lemma_it->second.find(std::string(to_string(pos)));
        if (pos_it == lemma_it->second.end()) return empty_map();
        return pos_it->second;
    }

    nlohmann::json to_json() const {
        // nlohmann::json objects are std::map-backed: keys come out sorted,
        // which keeps saved files diff-stable.
        nlohmann::json doc = nlohmann::json::object();
        for (const auto& [lang, lemmas] : root_) {
            for (const auto& [lemma, poses] : lemmas) {
                for (const auto& [pos, senses] : poses) {
                    for (const auto& [sense, examples] : senses) {
                        nlohmann::json arr = nlohmann::json::array();
                        for (const KbExample& example : examples) {
                            arr.push_back({{"sentence", example.sentence},
                                           {"sense_id", example.sense_id.str()}});
                        }
                        doc[lang][lemma][pos][sense] = std::move(arr);
                    }
                }
            }
        }
        return doc;
    }

    static BasicFewShotKb from_json(const nlohmann::json& doc) {
        if (!doc.is_object()) {
            throw SchemaError("KB file: top level must be a JSON object");
        }
        BasicFewShotKb kb;
        for (const auto& [lang, lemmas] : doc.items()) {
            const std::string lang_path = "/" + lang;
            require_object(lemmas, lang_path);
            for (const auto& [lemma, poses] : lemmas.items()) {
                const std::string lemma_path = lang_path + "/" + lemma;
                require_object(poses, lemma_path);
                for (const auto& [pos, senses] : poses.items()) {
                    const std::string pos_path = lemma_path + "/" + pos;
                    require_object(senses, pos_path);
                    for (const auto& [sense, examples] : senses.items()) {
                        const std::string sense_path = pos_path + "/" + sense;
                        if (!examples.is_array()) {
                            throw SchemaError("KB file: expected array at " + sense_path);
                        }
                        std::vector<KbExample> list;
                        for (std::size_t i = 0; i < examples.size(); ++i) {
                            const std::string ex_path =
                                sense_path + "/" + std::to_string(i);
                            const auto& ex = examples[i];
                            if (!ex.is_object() || !ex.contains("sentence") ||
                                !ex.contains("sense_id")) {
                                throw SchemaError(
                                    "KB file: expected {sentence, sense_id} object at " +
                                    ex_path);
                            }
                            KbExample example;
                            try {
                                ex.at("sentence").get_to(example.sentence);
                                std::string sense_value;
                                ex.at("sense_id").get_to(sense_value);
                                example.sense_id = SenseId(std::move(sense_value));
                            } catch (const nlohmann::json::exception& e) {
                                throw SchemaError("KB file: " + ex_path + ": " + e.what());
                            } catch (const ValidationError& e) {
                                throw SchemaError("KB file: " + ex_path + ": " + e.what());
                            }
                            if (example.sense_id.str() != sense) {
                                throw SchemaError("KB file: example at " + ex_path +
                                                  " carries sense_id '" +
                                                  example.sense_id.str() +
                                                  "' under sense key '" + sense + "'");
                            }
                            try {
                                (void)detail::locate_single_span(example.sentence);
                            } catch (const ValidationError& e) {
                                throw SchemaError("KB file: " + ex_path + ": " + e.what());
                            }
                            list.push_back(std::move(example));
                        }
                        kb.root_[lang][lemma][pos][sense] = std::move(list);
                    }
                }
            }
        }
        return kb;
    }

    void save(const std::filesystem::path& path) const {
        std::ofstream out(path);
        if (!out) {
            throw Error("cannot write KB file: " + path.string());
        }
        out << to_json().dump(2) << "\n";
    }

    static BasicFewShotKb load(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) {
            throw SchemaError("cannot open KB file: " + path.string());
        }
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            throw SchemaError(path.string() + ": " + e.what());
        }
        return from_json(doc);
    }

    const LangMap& tree() const { return root_; }

    bool empty() const { return root_.empty(); }

    /// Total number of stored examples.
    std::size_t size() const {
        std::size_t total = 0;
        for (const auto& [lang, lemmas] : root_)
            for (const auto& [lemma, poses] : lemmas)
                for (const auto& [pos, senses] : poses)
                    for (const auto& [sense, examples] : senses) total += examples.size();
        return total;
    }

    friend bool operator==(const BasicFewShotKb& a, const BasicFewShotKb& b) {
        return a.root_ == b.root_;
    }

private:
    static const ExampleMap& empty_map() {
        static const ExampleMap kEmpty;
        return kEmpty;
    }

    static void require_object(const nlohmann::json& node, const std::string& path) {
        if (!node.is_object()) {
            throw SchemaError("KB file: expected object at " + path);
        }
    }

    LangMap root_;
};

using FewShotKb = BasicFewShotKb<>;
using ExampleMap = FewShotKb::ExampleMap;

} // namespace wsd
