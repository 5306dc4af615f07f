#pragma once

// PII extraction: the first stage of each pseudonymization branch. Users
// are taken from structure-aware positions (the USER column of w, ps-aux,
// top and jobqueue subsections, located via the tools' own header rows,
// plus home/scratch path segments anywhere in a file). IPs are found by a
// whole-text scan, projects by case-insensitive matching against an
// externally supplied master list.
//
// Tokens read from the 8-char-wide ps-aux/top user columns are tagged
// possibly-truncated; the merge stage attaches them as variants to the
// unique full username sharing their 8-char prefix, or keeps them as
// standalone entities (with a warning) when the prefix is ambiguous.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "plogshield/core.hpp"
#include "plogshield/corpus.hpp"

namespace plog {

// ---------------------------------------------------------------------------
// Structured line visitation, shared by extraction, substitution and the
// leak audit so that all three agree on what a "user column" is.
// ---------------------------------------------------------------------------

enum class LinePart {
    Leading,
    SectionHeader,
    SectionPreamble,
    SubsectionHeader,
    Content,
    EndMarker,
    Trailing,
};

struct LineInfo {
    LinePart part = LinePart::Leading;
    SubsectionKind sub = SubsectionKind::W;  // valid when inside a subsection
    bool in_subsection = false;
    const std::vector<Field>* fields = nullptr;  // always set for visited lines
    std::optional<std::size_t> user_field;       // column index, once the header row was seen
    bool is_user_header = false;                 // this line is the header row itself
    bool truncating = false;                     // ps-aux/top: user column cut to 8 chars
};

// Calls fn(line_text, info) for every line of the file, in document order.
template <typename Fn>
inline void visit_lines(const SnapshotFile& file, Fn&& fn) {
    std::vector<Field> fields;
    auto emit = [&](const std::string& line, LinePart part) {
        LineInfo info;
        info.part = part;
        fields = split_fields(line);
        info.fields = &fields;
        fn(line, info);
    };

    for (const auto& l : file.leading) emit(l, LinePart::Leading);
    for (const auto& sec : file.sections) {
        emit(sec.header_line, LinePart::SectionHeader);
        for (const auto& l : sec.preamble) emit(l, LinePart::SectionPreamble);
        for (const auto& sub : sec.subsections) {
            {
                LineInfo info;
                info.part = LinePart::SubsectionHeader;
                info.sub = sub.kind;
                info.in_subsection = true;
                fields = split_fields(sub.header_line);
                info.fields = &fields;
                fn(sub.header_line, info);
            }
            std::optional<std::size_t> user_field;
            bool user_bearing = has_user_column(sub.kind);
            bool truncating = truncates_user_column(sub.kind);
            for (const auto& l : sub.lines) {
                LineInfo info;
                info.part = LinePart::Content;
                info.sub = sub.kind;
                info.in_subsection = true;
                fields = split_fields(l);
                info.fields = &fields;
                if (user_bearing && !user_field) {
                    for (std::size_t i = 0; i < fields.size(); ++i) {
                        std::string_view ft(l.data() + fields[i].span.begin, fields[i].span.size());
                        if (ft == "USER") {
                            user_field = i;
                            info.is_user_header = true;
                            break;
                        }
                    }
                }
                if (!info.is_user_header) info.user_field = user_field;
                info.truncating = truncating;
                fn(l, info);
            }
        }
        if (sec.terminated) {
            static const std::string end_line{kEndSnapMarker};
            emit(end_line, LinePart::EndMarker);
        }
        for (const auto& l : sec.trailing) emit(l, LinePart::Trailing);
    }
}

inline std::string_view field_text(std::string_view line, const Field& f) {
    return line.substr(f.span.begin, f.span.size());
}

// True when the token is a full '/'-separated segment of a field that
// contains a path.
inline bool token_is_path_segment(std::string_view line, const Field& field, ByteSpan token) {
    std::string_view ft = field_text(line, field);
    if (ft.find('/') == std::string_view::npos) return false;
    bool left_ok = token.begin == field.span.begin || line[token.begin - 1] == '/';
    bool right_ok = token.end == field.span.end || line[token.end] == '/';
    return left_ok && right_ok;
}

// Path segments directly following a "home" or "scratch" segment carry
// usernames (/ccs/home/<u>/..., /gpfs/.../scratch/<u>/...).
inline bool segment_follows_home_or_scratch(std::string_view line, const Field& field,
                                            ByteSpan token) {
    if (token.begin < 2 || line[token.begin - 1] != '/') return false;
    std::size_t seg_end = token.begin - 1;
    std::size_t seg_begin = seg_end;
    while (seg_begin > field.span.begin && line[seg_begin - 1] != '/') --seg_begin;
    std::string_view prev = line.substr(seg_begin, seg_end - seg_begin);
    return prev == "home" || prev == "scratch";
}

// ---------------------------------------------------------------------------
// Per-file extraction results.
// ---------------------------------------------------------------------------

struct TokenStat {
    std::uint64_t count = 0;
    bool seen_full = false;        // observed in a non-truncating position
    bool seen_truncated = false;   // 8-char token in a ps-aux/top user column
};

struct FileExtract {
    std::map<std::string, TokenStat> users;
    std::map<std::string, std::uint64_t> ips;
    // canonical -> occurrence form -> count
    std::map<std::string, std::map<std::string, std::uint64_t>> projects;
};

// Master list of project IDs (the stand-in for an external customer
// database). Entries must be unique case-insensitively.
struct MasterList {
    std::vector<std::string> entries;
    std::map<std::string, std::string> by_lower;  // lower(entry) -> entry
};

inline MasterList make_master_list(std::vector<std::string> entries) {
    if (entries.empty()) throw config_error("project master list is empty");
    MasterList ml;
    for (auto& e : entries) {
        if (e.empty()) continue;
        std::string low = to_lower_copy(e);
        if (!ml.by_lower.emplace(low, e).second)
            throw config_error("duplicate case-insensitive master list entry: " + e);
        ml.entries.push_back(e);
    }
    if (ml.entries.empty()) throw config_error("project master list is empty");
    return ml;
}

inline MasterList load_master_list(const fs::path& path) {
    std::string data = read_file(path);
    LineSplit split = split_lines(data);
    std::vector<std::string> entries;
    for (auto l : split.lines)
        if (!l.empty()) entries.emplace_back(l);
    return make_master_list(std::move(entries));
}

// ---------------------------------------------------------------------------
// Extraction operations.
// ---------------------------------------------------------------------------

inline void extract_users_into(const SnapshotFile& file, FileExtract& fx) {
    visit_lines(file, [&](const std::string& line, const LineInfo& info) {
        // User column of w / ps-aux / top / jobqueue content rows.
        if (info.part == LinePart::Content && info.user_field &&
            *info.user_field < info.fields->size()) {
            const Field& f = (*info.fields)[*info.user_field];
            std::string_view tok = field_text(line, f);
            bool clean = !tok.empty();
            for (char c : tok)
                if (!is_word_char(c)) clean = false;
            if (clean) {
                TokenStat& st = fx.users[std::string(tok)];
                ++st.count;
                if (info.truncating && tok.size() == kUserTruncWidth)
                    st.seen_truncated = true;
                else
                    st.seen_full = true;
            }
        }
        // Home/scratch path segments anywhere in the file.
        for (const Field& f : *info.fields) {
            std::string_view ft = field_text(line, f);
            if (ft.find('/') == std::string_view::npos) continue;
            scan_tokens(ft, [&](Token t) {
                if (t.is_ipv4) return;
                ByteSpan abs{f.span.begin + t.span.begin, f.span.begin + t.span.end};
                if (!segment_follows_home_or_scratch(line, f, abs)) return;
                if (!token_is_path_segment(line, f, abs)) return;
                TokenStat& st = fx.users[std::string(line.data() + abs.begin, abs.size())];
                ++st.count;
                st.seen_full = true;
            });
        }
    });
}

inline std::map<std::string, TokenStat> extract_users(const SnapshotFile& file) {
    FileExtract fx;
    extract_users_into(file, fx);
    return fx.users;
}

// Non-identifying constants that are never treated as PII.
inline bool ip_is_exempt(std::string_view ip) {
    return ip == "0.0.0.0" || ip == "127.0.0.1" || ip == "255.255.255.255";
}

inline std::map<std::string, std::uint64_t> extract_ips(std::string_view raw_text) {
    std::map<std::string, std::uint64_t> out;
    scan_tokens(raw_text, [&](Token t) {
        if (!t.is_ipv4) return;
        std::string_view tok = raw_text.substr(t.span.begin, t.span.size());
        if (ip_is_exempt(tok)) return;
        ++out[std::string(tok)];
    });
    return out;
}

// Every boundary-delimited, case-insensitive occurrence form of a master
// list entry: canonical -> form -> count.
inline std::map<std::string, std::map<std::string, std::uint64_t>> match_projects(
    std::string_view raw_text, const MasterList& master) {
    std::map<std::string, std::map<std::string, std::uint64_t>> out;
    scan_tokens(raw_text, [&](Token t) {
        if (t.is_ipv4) return;
        std::string_view tok = raw_text.substr(t.span.begin, t.span.size());
        auto it = master.by_lower.find(to_lower_copy(tok));
        if (it == master.by_lower.end()) return;
        ++out[it->second][std::string(tok)];
    });
    return out;
}

inline FileExtract extract_file(const SnapshotFile& file, std::string_view raw_text,
                                const MasterList* master) {
    FileExtract fx;
    extract_users_into(file, fx);
    fx.ips = extract_ips(raw_text);
    if (master != nullptr) fx.projects = match_projects(raw_text, *master);
    return fx;
}

// ---------------------------------------------------------------------------
// Entity sets.
// ---------------------------------------------------------------------------

struct PiiEntity {
    PiiKind kind = PiiKind::User;
    std::string canonical;
    std::vector<std::string> variants;  // truncated forms (users) / case forms (projects)
    std::uint64_t source_count = 0;
};

struct EntitySet {
    std::vector<PiiEntity> users;     // sorted by canonical
    std::vector<PiiEntity> ips;       // sorted
    std::vector<PiiEntity> projects;  // sorted
    std::vector<std::string> warnings;

    const std::vector<PiiEntity>& of(PiiKind k) const {
        switch (k) {
            case PiiKind::User: return users;
            case PiiKind::Ip: return ips;
            case PiiKind::Project: return projects;
        }
        return users;
    }

    bool empty() const { return users.empty() && ips.empty() && projects.empty(); }
};

// Deterministic fold of per-file extracts; the result is independent of the
// input order.
inline EntitySet merge_entity_sets(const std::vector<FileExtract>& partials) {
    std::map<std::string, TokenStat> users;
    std::map<std::string, std::uint64_t> ips;
    std::map<std::string, std::map<std::string, std::uint64_t>> projects;
    for (const auto& fx : partials) {
        for (const auto& [tok, st] : fx.users) {
            TokenStat& into = users[tok];
            into.count += st.count;
            into.seen_full |= st.seen_full;
            into.seen_truncated |= st.seen_truncated;
        }
        for (const auto& [tok, n] : fx.ips) ips[tok] += n;
        for (const auto& [canon, forms] : fx.projects)
            for (const auto& [form, n] : forms) projects[canon][form] += n;
    }

    EntitySet out;

    // Resolve possibly-truncated user tokens.
    std::map<std::string, PiiEntity> user_entities;
    for (const auto& [tok, st] : users) {
        if (st.seen_full) {
            PiiEntity& e = user_entities[tok];
            e.kind = PiiKind::User;
            e.canonical = tok;
            e.source_count += st.count;
        }
    }
    for (const auto& [tok, st] : users) {
        if (st.seen_full) {
            if (st.seen_truncated && tok.size() == kUserTruncWidth) {
                // The token is a user in its own right; warn if it could also
                // be a truncation of a longer name.
                for (const auto& [full, fst] : users) {
                    if (fst.seen_full && full.size() > kUserTruncWidth &&
                        std::string_view(full).substr(0, kUserTruncWidth) == tok) {
                        out.warnings.push_back("ambiguous truncation: '" + tok +
                                               "' is both a user and a prefix of '" + full + "'");
                        break;
                    }
                }
            }
            continue;
        }
        // Truncation-only token: find the full names it could belong to.
        std::vector<const std::string*> matches;
        for (const auto& [full, fst] : users) {
            if (fst.seen_full && full.size() > kUserTruncWidth &&
                std::string_view(full).substr(0, kUserTruncWidth) == tok)
                matches.push_back(&full);
        }
        if (matches.size() == 1) {
            PiiEntity& e = user_entities[*matches[0]];
            e.variants.push_back(tok);
            e.source_count += st.count;
        } else {
            PiiEntity& e = user_entities[tok];
            e.kind = PiiKind::User;
            e.canonical = tok;
            e.source_count += st.count;
            out.warnings.push_back("ambiguous truncation: '" + tok + "' matches " +
                                   std::to_string(matches.size()) + " full usernames");
        }
    }
    for (auto& [canon, e] : user_entities) {
        std::sort(e.variants.begin(), e.variants.end());
        out.users.push_back(std::move(e));
    }

    for (const auto& [tok, n] : ips)
        out.ips.push_back(PiiEntity{PiiKind::Ip, tok, {}, n});

    for (const auto& [canon, forms] : projects) {
        PiiEntity e{PiiKind::Project, canon, {}, 0};
        for (const auto& [form, n] : forms) {
            e.source_count += n;
            if (form != canon) e.variants.push_back(form);
        }
        std::sort(e.variants.begin(), e.variants.end());
        out.projects.push_back(std::move(e));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Entity set TSV: kind<TAB>canonical<TAB>variant1,variant2,...<TAB>count,
// sorted by (kind tag, canonical).
// ---------------------------------------------------------------------------

inline std::string serialize_entity_set(const EntitySet& es) {
    std::string out;
    auto emit = [&](const std::vector<PiiEntity>& entities) {
        for (const auto& e : entities) {
            out += kind_tag(e.kind);
            out += '\t';
            out += e.canonical;
            out += '\t';
            for (std::size_t i = 0; i < e.variants.size(); ++i) {
                if (i > 0) out += ',';
                out += e.variants[i];
            }
            out += '\t';
            out += std::to_string(e.source_count);
            out += '\n';
        }
    };
    emit(es.ips);       // "ip" < "project" < "user"
    emit(es.projects);
    emit(es.users);
    return out;
}

inline EntitySet parse_entity_set(std::string_view text) {
    EntitySet es;
    LineSplit split = split_lines(text);
    for (auto line : split.lines) {
        if (line.empty()) continue;
        std::vector<std::string_view> cols;
        std::size_t pos = 0;
        while (true) {
            std::size_t tab = line.find('\t', pos);
            if (tab == std::string_view::npos) {
                cols.push_back(line.substr(pos));
                break;
            }
            cols.push_back(line.substr(pos, tab - pos));
            pos = tab + 1;
        }
        if (cols.size() != 4) throw config_error("malformed entity row");
        auto kind = parse_kind_tag(cols[0]);
        if (!kind) throw config_error("bad kind tag in entity set");
        PiiEntity e;
        e.kind = *kind;
        e.canonical = std::string(cols[1]);
        std::string_view vars = cols[2];
        std::size_t vpos = 0;
        while (vpos < vars.size()) {
            std::size_t comma = vars.find(',', vpos);
            if (comma == std::string_view::npos) comma = vars.size();
            if (comma > vpos) e.variants.emplace_back(vars.substr(vpos, comma - vpos));
            vpos = comma + 1;
        }
        e.source_count = std::stoull(std::string(cols[3]));
        switch (*kind) {
            case PiiKind::User: es.users.push_back(std::move(e)); break;
            case PiiKind::Ip: {
                auto end = ipv4_token_end(e.canonical, 0);
                if (!end || *end != e.canonical.size())
                    throw config_error("entity set holds an invalid IPv4 token: " + e.canonical);
                es.ips.push_back(std::move(e));
                break;
            }
            case PiiKind::Project: es.projects.push_back(std::move(e)); break;
        }
    }
    auto by_canonical = [](const PiiEntity& a, const PiiEntity& b) {
        return a.canonical < b.canonical;
    };
    std::sort(es.users.begin(), es.users.end(), by_canonical);
    std::sort(es.ips.begin(), es.ips.end(), by_canonical);
    std::sort(es.projects.begin(), es.projects.end(), by_canonical);
    return es;
}

inline void save_entity_set(const EntitySet& es, const fs::path& path) {
    write_file_atomic(path, serialize_entity_set(es));
}

inline EntitySet load_entity_set(const fs::path& path) {
    return parse_entity_set(read_file(path));
}

}  // namespace plog
