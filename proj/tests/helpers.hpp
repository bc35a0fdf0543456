#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "wsd/corpus.hpp"
#include "wsd/lexstore.hpp"
#include "wsd/types.hpp"

namespace wsd_test {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<unsigned> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("wsd_test_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        if (path_.empty()) return;
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    TempDir(TempDir&& other) noexcept : path_(std::move(other.path_)) {
        other.path_.clear();
    }
    TempDir& operator=(TempDir&& other) noexcept {
        if (this != &other) {
            if (!path_.empty()) {
                std::error_code ec;
                std::filesystem::remove_all(path_, ec);
            }
            path_ = std::move(other.path_);
            other.path_.clear();
        }
        return *this;
    }

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    out << content;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in),
                       std::istreambuf_iterator<char>());
}

/// Inventory with `n_senses` senses named <lemma>.<pos>.01 .. .NN, each with
/// a plain gloss, already canonicalized.
inline wsd::SenseInventory make_inventory(const std::string& lemma, wsd::Pos pos,
                                          const std::string& lang, int n_senses) {
    wsd::SenseInventory inv;
    inv.lemma = lemma;
    inv.pos = pos;
    inv.language = wsd::LanguageCode(lang);
    for (int i = 1; i <= n_senses; ++i) {
        wsd::SenseEntry entry;
        const std::string number = (i < 10 ? "0" : "") + std::to_string(i);
        entry.sense_id = wsd::SenseId(lemma + "." + std::string(wsd::to_string(pos)) +
                                      "." + number);
        entry.gloss = "gloss " + number + " of " + lemma;
        entry.language = inv.language;
        inv.senses.push_back(std::move(entry));
    }
    inv.canonicalize();
    return inv;
}

inline wsd::WsdInstance make_instance(const std::string& id, const std::string& lang,
                                      const std::string& text, const std::string& lemma,
                                      wsd::Pos pos,
                                      const std::string& gold = std::string{}) {
    wsd::WsdInstance instance;
    instance.id = id;
    instance.language = wsd::LanguageCode(lang);
    instance.text = text;
    instance.target_lemma = lemma;
    instance.target_pos = pos;
    if (!gold.empty()) instance.gold_sense = wsd::SenseId(gold);
    return instance;
}

} // namespace wsd_test
