#include "polyscale/provenance.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "polyscale/error.hpp"

namespace polyscale {

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string file_checksum(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return hex64(fnv1a64(ss.str()));
}

void Provenance::write(std::ostream& out) const {
    out << "# polyscale " << tool_version << "\n";
    out << "# command: " << command << "\n";
    for (const auto& [k, v] : entries) out << "# " << k << ": " << v << "\n";
}

}  // namespace polyscale
