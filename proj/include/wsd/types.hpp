#pragma once

#include <cctype>
#include <string>
#include <string_view>
#include <vector>

#include "wsd/errors.hpp"

namespace wsd {

/// Part-of-speech tags carried by corpus instances and inventories.
/// Unknown input tags map to kOther (callers may collect a warning).
enum class Pos { kNoun, kVerb, kAdj, kAdv, kOther };

inline std::string_view to_string(Pos pos) {
    switch (pos) {
        case Pos::kNoun: return "noun";
        case Pos::kVerb: return "verb";
        case Pos::kAdj: return "adj";
        case Pos::kAdv: return "adv";
        case Pos::kOther: return "other";
    }
    return "other";
}

/// Parses a POS tag. Accepts the canonical names plus the usual WordNet-style
/// single letters (n, v, a, r). Anything else becomes kOther; when `warnings`
/// is given, a note is appended so run manifests can surface the mapping.
inline Pos parse_pos(std::string_view tag, std::vector<std::string>* warnings = nullptr) {
    if (tag == "noun" || tag == "n") return Pos::kNoun;
    if (tag == "verb" || tag == "v") return Pos::kVerb;
    if (tag == "adj" || tag == "a") return Pos::kAdj;
    if (tag == "adv" || tag == "r") return Pos::kAdv;
    if (tag != "other" && warnings != nullptr) {
        warnings->push_back("unknown POS tag '" + std::string(tag) + "' mapped to 'other'");
    }
    return Pos::kOther;
}

/// Short lowercase language identifier (en, de, es, fr, it, ...). Open set.
class LanguageCode {
public:
    LanguageCode() = default;

    explicit LanguageCode(std::string code) : code_(std::move(code)) {
        if (code_.empty()) {
            throw ValidationError("language code must be non-empty");
        }
        for (char c : code_) {
            if (c < 'a' || c > 'z') {
                throw ValidationError("language code must be lowercase ASCII letters: '" +
                                      code_ + "'");
            }
        }
    }

    const std::string& str() const { return code_; }

    friend bool operator==(const LanguageCode&, const LanguageCode&) = default;
    friend auto operator<=>(const LanguageCode&, const LanguageCode&) = default;

private:
    std::string code_;
};

/// Opaque sense identifier (a BabelNet synset id, a WordNet sense key, ...).
class SenseId {
public:
    SenseId() = default;

    explicit SenseId(std::string value) : value_(std::move(value)) {
        if (value_.empty()) {
            throw ValidationError("sense id must be non-empty");
        }
        if (std::isspace(static_cast<unsigned char>(value_.front())) ||
            std::isspace(static_cast<unsigned char>(value_.back()))) {
            throw ValidationError("sense id must not have surrounding whitespace: '" +
                                  value_ + "'");
        }
    }

    const std::string& str() const { return value_; }

    friend bool operator==(const SenseId&, const SenseId&) = default;
    friend auto operator<=>(const SenseId&, const SenseId&) = default;

private:
    std::string value_;
};

/// ASCII-only case fold used for KB and inventory lemma keys.
inline std::string fold_lemma(std::string_view lemma) {
    std::string folded(lemma);
    for (char& c : folded) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return folded;
}

} // namespace wsd
