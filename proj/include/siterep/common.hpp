#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace siterep {

// Version stamp embedded in every artifact file (corpus, ratings, features,
// models, reports). Readers reject files whose stamp does not match.
inline constexpr std::string_view kSchemaVersion = "1";

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Missing or unusable input (file not found, empty URL list, bad arguments).
struct InputError : Error {
    using Error::Error;
};

// Artifact schema version does not match what this build writes/expects.
struct SchemaError : Error {
    using Error::Error;
};

// Structurally invalid data (malformed JSON line, out-of-range rating).
struct DataError : Error {
    using Error::Error;
};

// Network-level failure; retriable indicates a retry may succeed.
struct TransportError : Error {
    explicit TransportError(const std::string& msg, bool retriable_ = true)
        : Error(msg), retriable(retriable_) {}
    bool retriable;
};

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string to_hex(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

inline std::string ascii_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out)
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    return out;
}

inline bool is_ascii_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && is_ascii_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_ascii_space(s.back())) s.remove_suffix(1);
    return s;
}

}  // namespace siterep
