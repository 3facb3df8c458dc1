#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace gca {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
bool is_blank(std::string_view s);

// Collapses runs of whitespace (spaces, tabs, newlines) into single spaces and
// trims the edges. This is the canonical form used by the message grammar.
std::string normalize_whitespace(std::string_view s);

std::vector<std::string> split_whitespace(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

bool starts_with_icase(std::string_view s, std::string_view prefix);
bool contains_icase(std::string_view haystack, std::string_view needle);

// FNV-1a, used for stable request keys and the hashing embedder. Must not
// change across versions or recorded fixtures become unmatchable by key.
std::uint64_t fnv1a(std::string_view data, std::uint64_t seed = 14695981039346656037ull);
std::string to_hex(std::uint64_t v);

}  // namespace gca
