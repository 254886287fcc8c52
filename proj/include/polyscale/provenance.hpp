#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace polyscale {

inline constexpr std::string_view tool_version = "0.1.0";

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);
/// FNV-1a 64 of a file's bytes, as 16 hex digits.
std::string file_checksum(const std::filesystem::path& path);

/// "# key: value" header lines written at the top of every CSV output.
struct Provenance {
    std::string command;
    std::vector<std::pair<std::string, std::string>> entries;

    void add(std::string key, std::string value) { entries.emplace_back(std::move(key), std::move(value)); }
    void write(std::ostream& out) const;
};

}  // namespace polyscale
