#pragma once

// Pseudonym map persistence. The map file is the only reidentification
// artifact the pipeline produces, so it is written atomically, carries a
// version header and a content checksum, and is fully validated on load.
// Format (documented bit-exactly in docs/MAP_FORMAT.md):
//
//   #plogshield-map v1
//   <kind>\t<original>\t<pseudonym>\n     rows sorted by (kind, original)
//   #sha <16 hex chars>\n                 hash of all preceding bytes
//
// Kinds: ip, project, user, user.variant. A user.variant row maps a
// truncated 8-char form to its canonical's pseudonym.

#include <map>
#include <string>
#include <string_view>

#include "plogshield/core.hpp"
#include "plogshield/pseudonym.hpp"

namespace plog {

class MapFormatError : public Error {
public:
    explicit MapFormatError(const std::string& what) : Error(Errc::Config, what) {}
};

class MapChecksumError : public Error {
public:
    explicit MapChecksumError(const std::string& what) : Error(Errc::Config, what) {}
};

class MapDuplicateError : public Error {
public:
    explicit MapDuplicateError(const std::string& what) : Error(Errc::Config, what) {}
};

class MapInvariantError : public Error {
public:
    explicit MapInvariantError(const std::string& what) : Error(Errc::Config, what) {}
};

inline constexpr std::string_view kMapHeader = "#plogshield-map v1";

inline std::string serialize_map(const PseudonymMap& map) {
    std::string body;
    body += kMapHeader;
    body += '\n';
    // Emission order matches sorting by (kind tag, original):
    // "ip" < "project" < "user" < "user.variant".
    for (const auto& [orig, pseudo] : map.ips)
        body += "ip\t" + orig + "\t" + pseudo + "\n";
    for (const auto& [orig, pseudo] : map.projects)
        body += "project\t" + orig + "\t" + pseudo + "\n";
    for (const auto& [orig, pseudo] : map.users)
        body += "user\t" + orig + "\t" + pseudo + "\n";
    for (const auto& [variant, pseudo] : map.user_variants)
        body += "user.variant\t" + variant + "\t" + pseudo + "\n";
    body += "#sha " + content_hash_hex(body) + "\n";
    return body;
}

inline void save_map(const PseudonymMap& map, const fs::path& path) {
    validate_map(map);  // only forward maps are persisted
    write_file_atomic(path, serialize_map(map));
}

inline PseudonymMap parse_map(std::string_view text) {
    LineSplit split = split_lines(text);
    if (split.lines.empty() || split.lines[0] != kMapHeader)
        throw MapFormatError("missing or unknown map header");
    if (split.lines.size() < 2 || !split.lines.back().starts_with("#sha "))
        throw MapChecksumError("missing checksum line");

    std::string_view sha_line = split.lines.back();
    std::size_t body_len = static_cast<std::size_t>(sha_line.data() - text.data());
    std::string_view body = text.substr(0, body_len);
    std::string_view recorded = sha_line.substr(5);
    if (recorded != content_hash_hex(body))
        throw MapChecksumError("map checksum mismatch");

    PseudonymMap map;
    for (std::size_t i = 1; i + 1 < split.lines.size(); ++i) {
        std::string_view line = split.lines[i];
        if (line.empty()) continue;
        std::size_t t1 = line.find('\t');
        std::size_t t2 = t1 == std::string_view::npos ? t1 : line.find('\t', t1 + 1);
        if (t2 == std::string_view::npos || line.find('\t', t2 + 1) != std::string_view::npos)
            throw MapFormatError("malformed map row at line " + std::to_string(i + 1));
        std::string kind(line.substr(0, t1));
        std::string orig(line.substr(t1 + 1, t2 - t1 - 1));
        std::string pseudo(line.substr(t2 + 1));
        std::map<std::string, std::string>* target = nullptr;
        if (kind == "user") target = &map.users;
        else if (kind == "ip") target = &map.ips;
        else if (kind == "project") target = &map.projects;
        else if (kind == "user.variant") target = &map.user_variants;
        else throw MapFormatError("unknown kind tag: " + kind);
        if (!target->emplace(orig, pseudo).second)
            throw MapDuplicateError("duplicate map row: " + kind + " " + orig);
    }
    map.rebuild_index();
    try {
        validate_map(map);
    } catch (const Error& e) {
        throw MapInvariantError(e.what());
    }
    return map;
}

inline PseudonymMap load_map(const fs::path& path) {
    return parse_map(read_file(path));
}

}  // namespace plog
