#pragma once

#include <openssl/evp.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "lsd/error.hpp"
#include "lsd/io/container.hpp"

namespace lsd::io
{

/// Lower-case hex SHA-256 of a byte range.
inline std::string sha256_hex(const void* data, std::size_t size)
{
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), data, size) != 1 || EVP_DigestFinal_ex(ctx.get(), digest.data(), &len) != 1) {
        fail(ErrorCode::IoError, "SHA-256 computation failed");
    }
    std::string hex;
    char buf[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(buf, sizeof(buf), "%02x", digest[i]);
        hex += buf;
    }
    return hex;
}

inline std::string sha256_hex(const std::string& text) { return sha256_hex(text.data(), text.size()); }

inline std::string sha256_file(const std::filesystem::path& path)
{
    const auto bytes = read_bytes(path);
    return sha256_hex(bytes.data(), bytes.size());
}

}  // namespace lsd::io
