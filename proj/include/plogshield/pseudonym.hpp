#pragma once

// Pseudonym generation: the second stage of each branch. Builds a
// kind-scoped bijection original -> pseudonym with rejection resampling
// on collision. Pseudonym shapes:
//   users     u[a-z0-9]{7}   fixed 8 chars, so a pseudonym truncates to
//                            itself in ps/top columns
//   ips       10.x.y.z       a seeded 24-bit permutation over 10.0.0.0/8,
//                            disjoint from anything extracted
//   projects  proj[0-9]{4}   matched case-insensitively downstream
//
// A truncated user variant maps to the same pseudonym as its canonical
// name. Project case variants are not stored: case handling is a property
// of the substitution rule, not of the map.

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "plogshield/core.hpp"
#include "plogshield/extract.hpp"

namespace plog {

enum class MapMode { Pseudonymize, Anonymize };

struct PseudonymMap {
    MapMode mode = MapMode::Pseudonymize;
    std::uint64_t seed = 0;

    std::map<std::string, std::string> users;     // original -> pseudonym
    std::map<std::string, std::string> ips;
    std::map<std::string, std::string> projects;
    std::map<std::string, std::string> user_variants;  // variant -> its canonical's pseudonym

    // lower(original) -> original, for case-insensitive project lookup.
    std::map<std::string, std::string> project_ci;

    void rebuild_index() {
        project_ci.clear();
        for (const auto& [orig, _] : projects) project_ci.emplace(to_lower_copy(orig), orig);
    }

    bool empty() const {
        return users.empty() && ips.empty() && projects.empty() && user_variants.empty();
    }

    std::size_t size() const {
        return users.size() + ips.size() + projects.size() + user_variants.size();
    }

    bool operator==(const PseudonymMap& other) const {
        return users == other.users && ips == other.ips && projects == other.projects &&
               user_variants == other.user_variants;
    }

    const std::map<std::string, std::string>& entries(PiiKind k) const {
        switch (k) {
            case PiiKind::User: return users;
            case PiiKind::Ip: return ips;
            case PiiKind::Project: return projects;
        }
        return users;
    }

    std::map<std::string, std::string>& entries(PiiKind k) {
        switch (k) {
            case PiiKind::User: return users;
            case PiiKind::Ip: return ips;
            case PiiKind::Project: return projects;
        }
        return users;
    }
};

// ---------------------------------------------------------------------------
// Validation. Structural invariants (injectivity, domain/range disjointness,
// variant consistency) hold for forward and inverted maps alike; shape
// invariants only apply to forward maps.
// ---------------------------------------------------------------------------

inline void validate_map_structure(const PseudonymMap& map) {
    std::set<std::string> domain_ci;
    for (PiiKind k : {PiiKind::User, PiiKind::Ip, PiiKind::Project})
        for (const auto& [orig, _] : map.entries(k)) domain_ci.insert(to_lower_copy(orig));
    for (const auto& [variant, _] : map.user_variants) domain_ci.insert(to_lower_copy(variant));

    for (PiiKind k : {PiiKind::User, PiiKind::Ip, PiiKind::Project}) {
        std::set<std::string> range;
        for (const auto& [orig, pseudo] : map.entries(k)) {
            if (pseudo.empty() || orig.empty())
                throw config_error("map holds an empty token");
            if (!range.insert(pseudo).second)
                throw config_error("map not injective: duplicate pseudonym " + pseudo);
            if (domain_ci.count(to_lower_copy(pseudo)))
                throw config_error("pseudonym collides with an original: " + pseudo);
        }
    }

    for (const auto& [variant, pseudo] : map.user_variants) {
        bool forward = false, inverted = false;
        for (const auto& [canon, p] : map.users) {
            if (p == pseudo && canon.size() > kUserTruncWidth &&
                std::string_view(canon).substr(0, kUserTruncWidth) == variant) {
                forward = true;
                break;
            }
        }
        auto it = map.users.find(variant);
        if (it != map.users.end() && it->second.size() > kUserTruncWidth &&
            std::string_view(it->second).substr(0, kUserTruncWidth) == pseudo)
            inverted = true;
        if (!forward && !inverted)
            throw config_error("variant entry does not match any canonical: " + variant);
    }
}

inline bool is_user_pseudonym_shape(std::string_view s) {
    if (s.size() != kUserTruncWidth || s[0] != 'u') return false;
    for (char c : s.substr(1))
        if (!((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9'))) return false;
    return true;
}

inline bool is_project_pseudonym_shape(std::string_view s) {
    if (s.size() != 8 || !s.starts_with("proj")) return false;
    for (char c : s.substr(4))
        if (!is_ascii_digit(c)) return false;
    return true;
}

inline bool is_pseudo_ip_shape(std::string_view s) {
    auto end = ipv4_token_end(s, 0);
    return end && *end == s.size() && s.starts_with("10.");
}

inline void validate_map_shapes(const PseudonymMap& map) {
    for (const auto& [_, p] : map.users)
        if (!is_user_pseudonym_shape(p))
            throw config_error("user pseudonym has wrong shape: " + p);
    for (const auto& [v, p] : map.user_variants) {
        if (v.size() != kUserTruncWidth)
            throw config_error("user variant is not 8 chars: " + v);
        if (!is_user_pseudonym_shape(p))
            throw config_error("variant pseudonym has wrong shape: " + p);
    }
    for (const auto& [orig, p] : map.ips) {
        if (!is_pseudo_ip_shape(p)) throw config_error("pseudo-IP outside 10.0.0.0/8: " + p);
        if (map.ips.count(p)) throw config_error("pseudo-IP collides with an extracted IP: " + p);
    }
    for (const auto& [_, p] : map.projects)
        if (!is_project_pseudonym_shape(p))
            throw config_error("project pseudonym has wrong shape: " + p);
}

inline void validate_map(const PseudonymMap& map) {
    validate_map_structure(map);
    validate_map_shapes(map);
}

// ---------------------------------------------------------------------------
// Generation.
// ---------------------------------------------------------------------------

namespace detail {

// 4-round Feistel network over 24 bits: a seeded permutation of the
// 10.0.0.0/8 host space, so pseudo-IPs never repeat without bookkeeping.
inline std::uint32_t feistel24(std::uint32_t x, std::uint64_t key) {
    std::uint32_t left = (x >> 12) & 0xfff;
    std::uint32_t right = x & 0xfff;
    for (int round = 0; round < 4; ++round) {
        std::uint32_t f =
            static_cast<std::uint32_t>(Rng::mix(key, (static_cast<std::uint64_t>(round) << 12) | right)) &
            0xfff;
        std::uint32_t next = left ^ f;
        left = right;
        right = next;
    }
    return (left << 12) | right;
}

inline std::string pseudo_ip_from_counter(std::uint32_t v) {
    return "10." + std::to_string((v >> 16) & 0xff) + "." + std::to_string((v >> 8) & 0xff) + "." +
           std::to_string(v & 0xff);
}

inline std::uint64_t os_entropy_seed() {
    std::random_device rd;
    return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

}  // namespace detail

// Builds the map for an entity set. Deterministic for a given (entities,
// seed); with no seed (Anonymize mode) the seed is drawn from OS entropy.
inline PseudonymMap build_map(const EntitySet& entities, std::optional<std::uint64_t> seed,
                              MapMode mode = MapMode::Pseudonymize) {
    PseudonymMap map;
    map.mode = mode;
    map.seed = seed ? *seed : detail::os_entropy_seed();

    // Nothing generated may collide (case-insensitively) with anything that
    // can appear as a match token: originals, variants, earlier pseudonyms,
    // or a denylisted command name.
    std::set<std::string> forbidden;
    auto forbid = [&](std::string_view s) { forbidden.insert(to_lower_copy(s)); };
    for (PiiKind k : {PiiKind::User, PiiKind::Ip, PiiKind::Project})
        for (const auto& e : entities.of(k)) {
            forbid(e.canonical);
            for (const auto& v : e.variants) forbid(v);
        }
    for (const auto& name : default_denylist()) forbid(name);
    forbid(kEndSnapMarker);

    auto admissible = [&](const std::string& candidate) {
        return forbidden.count(to_lower_copy(candidate)) == 0;
    };

    // Users.
    {
        Rng rng(Rng::mix(map.seed, 0x75736572ULL));
        static constexpr char alphabet[] = "abcdefghijklmnopqrstuvwxyz0123456789";
        for (const auto& e : entities.users) {
            std::string pseudo;
            int attempts = 0;
            do {
                if (++attempts > 10000) throw capacity_error("user pseudonym space exhausted");
                pseudo = "u";
                for (int i = 0; i < 7; ++i) pseudo.push_back(alphabet[rng.below(36)]);
            } while (!admissible(pseudo));
            forbid(pseudo);
            map.users.emplace(e.canonical, pseudo);
            for (const auto& v : e.variants) map.user_variants.emplace(v, pseudo);
        }
    }

    // IPs: walk the seeded permutation, skipping collisions.
    {
        std::uint64_t key = Rng::mix(map.seed, 0x697076ULL);
        std::uint32_t counter = 0;
        for (const auto& e : entities.ips) {
            std::string pseudo;
            while (true) {
                if (counter >= (1u << 24)) throw capacity_error("pseudo-IP space exhausted");
                pseudo = detail::pseudo_ip_from_counter(detail::feistel24(counter++, key));
                if (admissible(pseudo)) break;
            }
            forbid(pseudo);
            map.ips.emplace(e.canonical, pseudo);
        }
    }

    // Projects: seeded shuffle of the 10^4 id space.
    {
        if (entities.projects.size() > 10000)
            throw capacity_error("project pseudonym space exhausted (10,000 ids)");
        Rng rng(Rng::mix(map.seed, 0x70726f6aULL));
        std::vector<int> ids(10000);
        for (int i = 0; i < 10000; ++i) ids[i] = i;
        for (std::size_t i = ids.size(); i > 1; --i)
            std::swap(ids[i - 1], ids[rng.below(i)]);
        std::size_t cursor = 0;
        for (const auto& e : entities.projects) {
            std::string pseudo;
            while (true) {
                if (cursor >= ids.size())
                    throw capacity_error("project pseudonym space exhausted (10,000 ids)");
                char buf[16];
                std::snprintf(buf, sizeof(buf), "proj%04d", ids[cursor++]);
                pseudo = buf;
                if (admissible(pseudo)) break;
            }
            forbid(pseudo);
            map.projects.emplace(e.canonical, pseudo);
        }
    }

    map.rebuild_index();
    validate_map(map);
    return map;
}

// Exact-match lookup for users (canonicals, then variants) and IPs;
// case-insensitive lookup for projects.
inline std::optional<std::string> pseudonym_for(const PseudonymMap& map, PiiKind kind,
                                                std::string_view token) {
    switch (kind) {
        case PiiKind::User: {
            auto it = map.users.find(std::string(token));
            if (it != map.users.end()) return it->second;
            auto vt = map.user_variants.find(std::string(token));
            if (vt != map.user_variants.end()) return vt->second;
            return std::nullopt;
        }
        case PiiKind::Ip: {
            auto it = map.ips.find(std::string(token));
            if (it != map.ips.end()) return it->second;
            return std::nullopt;
        }
        case PiiKind::Project: {
            auto it = map.project_ci.find(to_lower_copy(token));
            if (it == map.project_ci.end()) return std::nullopt;
            return map.projects.at(it->second);
        }
    }
    return std::nullopt;
}

// Swaps domain and range per kind. Variant pairs swap with it, so
// invert(invert(m)) == m. Preconditions: injective per kind.
inline PseudonymMap invert_map(const PseudonymMap& map) {
    validate_map_structure(map);
    PseudonymMap out;
    out.mode = map.mode;
    out.seed = map.seed;
    for (PiiKind k : {PiiKind::User, PiiKind::Ip, PiiKind::Project})
        for (const auto& [orig, pseudo] : map.entries(k)) out.entries(k).emplace(pseudo, orig);
    for (const auto& [variant, pseudo] : map.user_variants)
        out.user_variants.emplace(pseudo, variant);
    out.rebuild_index();
    validate_map_structure(out);
    return out;
}

}  // namespace plog
