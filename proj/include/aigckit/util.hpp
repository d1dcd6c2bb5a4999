#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aigckit/errors.hpp"

namespace aigckit::util {

bool utf8_valid(std::string_view s);

std::string to_hex(std::span<const unsigned char> bytes);
std::vector<unsigned char> from_hex(std::string_view hex);

std::array<unsigned char, 32> sha256(std::string_view data);
std::string sha256_hex(std::string_view data);

/// Shortest round-trip decimal form (std::to_chars); one lexical form per value.
std::string format_double(double v);

std::string_view trim(std::string_view s);
std::string normalize_newlines(std::string_view s);  // CRLF -> LF
std::vector<std::string> split_lines(std::string_view s);
size_t count_words(std::string_view s);  // whitespace-delimited tokens

/// UTC wall-clock instant at second precision. Serialized as RFC 3339
/// "YYYY-MM-DDTHH:MM:SSZ"; fractional seconds are accepted on parse and
/// truncated.
struct Timestamp {
    std::int64_t epoch_seconds = 0;

    static Timestamp parse(std::string_view text);
    static Timestamp now();
    std::string to_rfc3339() const;

    auto operator<=>(const Timestamp&) const = default;
};

/// Fills a buffer with random bytes; defaults to the OS CSPRNG.
using RandomBytesFn = std::function<void(unsigned char*, std::size_t)>;
const RandomBytesFn& system_random();

std::string new_uuid_v4(const RandomBytesFn& fill = system_random());
bool is_uuid(std::string_view s);                 // 8-4-4-4-12 hex, any case
std::string lowercase(std::string_view s);

/// Scheme + ':' + non-empty remainder, free of whitespace, control chars,
/// and the characters N-Quads forbids inside IRIREF.
bool absolute_iri_valid(std::string_view iri);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

/// Runs fn(0..n-1), at most `concurrency` at a time. fn must only touch
/// index-owned state; completion order is unspecified.
void parallel_for(std::size_t n, std::size_t concurrency,
                  const std::function<void(std::size_t)>& fn);

}  // namespace aigckit::util
