#pragma once

#include <openssl/sha.h>

#include <array>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

namespace martfl {

using Bytes = std::vector<uint8_t>;
using Digest = std::array<uint8_t, 32>;

inline Digest sha256(const uint8_t* data, size_t len) {
    Digest out{};
    SHA256(data, len, out.data());
    return out;
}

inline Digest sha256(const Bytes& data) { return sha256(data.data(), data.size()); }

inline Digest sha256(const std::string& data) {
    return sha256(reinterpret_cast<const uint8_t*>(data.data()), data.size());
}

inline void append_bytes(Bytes& buf, const uint8_t* data, size_t len) {
    buf.insert(buf.end(), data, data + len);
}

inline void append_u32be(Bytes& buf, uint32_t v) {
    buf.push_back(static_cast<uint8_t>(v >> 24));
    buf.push_back(static_cast<uint8_t>(v >> 16));
    buf.push_back(static_cast<uint8_t>(v >> 8));
    buf.push_back(static_cast<uint8_t>(v));
}

inline void append_u64be(Bytes& buf, uint64_t v) {
    append_u32be(buf, static_cast<uint32_t>(v >> 32));
    append_u32be(buf, static_cast<uint32_t>(v));
}

inline std::string to_hex(const uint8_t* data, size_t len) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (size_t i = 0; i < len; ++i) {
        out.push_back(digits[data[i] >> 4]);
        out.push_back(digits[data[i] & 0xf]);
    }
    return out;
}

inline std::string to_hex(const Digest& d) { return to_hex(d.data(), d.size()); }
inline std::string to_hex(const Bytes& b) { return to_hex(b.data(), b.size()); }

inline Bytes from_hex(const std::string& hex) {
    if (hex.size() % 2 != 0) throw std::invalid_argument("from_hex: odd length");
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        throw std::invalid_argument("from_hex: bad digit");
    };
    Bytes out(hex.size() / 2);
    for (size_t i = 0; i < out.size(); ++i)
        out[i] = static_cast<uint8_t>(nibble(hex[2 * i]) << 4 | nibble(hex[2 * i + 1]));
    return out;
}

inline Digest digest_from_hex(const std::string& hex) {
    Bytes b = from_hex(hex);
    if (b.size() != 32) throw std::invalid_argument("digest_from_hex: need 32 bytes");
    Digest d{};
    std::memcpy(d.data(), b.data(), 32);
    return d;
}

}  // namespace martfl
