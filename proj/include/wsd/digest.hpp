#pragma once

#include <openssl/evp.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>

#include "wsd/errors.hpp"

namespace wsd {

/// SHA-256 of a byte string, as lowercase hex.
inline std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int digest_len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &digest_len,
                   EVP_sha256(), nullptr) != 1) {
        throw Error("sha256: digest computation failed");
    }
    std::string hex;
    hex.reserve(2 * digest_len);
    static constexpr char kHexChars[] = "0123456789abcdef";
    for (unsigned int i = 0; i < digest_len; ++i) {
        hex.push_back(kHexChars[digest[i] >> 4]);
        hex.push_back(kHexChars[digest[i] & 0xf]);
    }
    return hex;
}

/// SHA-256 of a file's exact bytes.
inline std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("sha256: cannot open file: " + path.string());
    }
    std::string bytes((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
    return sha256_hex(bytes);
}

} // namespace wsd
