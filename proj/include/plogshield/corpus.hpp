#pragma once

// Snapshot file model. One file holds one login node's day: hour sections
// open with a "-- HH:MM:SS" marker line and close with a literal "endsnap"
// line; inside a section each subsection opens with a "== <tag> ==" header.
// Parsing is lossless: every input line lands in exactly one slot of the
// model and serialize() reproduces the input byte for byte. Malformed
// regions are kept verbatim and reported as warnings, never errors.
//
// The exact format is documented in docs/FORMAT.md.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "plogshield/core.hpp"

namespace plog {

enum class SubsectionKind {
    W = 0,
    Meminfo,
    Vmstat,
    PsAux,
    Top,
    JobQueue,
    LsPlain,
    LsColor,
    GpfsWrite,
    Df,
};

inline constexpr int kSubsectionCount = 10;

inline constexpr std::string_view subsection_tag(SubsectionKind k) {
    switch (k) {
        case SubsectionKind::W: return "w";
        case SubsectionKind::Meminfo: return "meminfo";
        case SubsectionKind::Vmstat: return "vmstat";
        case SubsectionKind::PsAux: return "ps-aux";
        case SubsectionKind::Top: return "top";
        case SubsectionKind::JobQueue: return "jobqueue";
        case SubsectionKind::LsPlain: return "ls-plain";
        case SubsectionKind::LsColor: return "ls-color";
        case SubsectionKind::GpfsWrite: return "gpfs-write";
        case SubsectionKind::Df: return "df";
    }
    return "?";
}

inline std::optional<SubsectionKind> subsection_from_tag(std::string_view tag) {
    for (int i = 0; i < kSubsectionCount; ++i) {
        auto k = static_cast<SubsectionKind>(i);
        if (subsection_tag(k) == tag) return k;
    }
    return std::nullopt;
}

// Subsections whose rows carry a user column, and those that truncate it.
inline bool has_user_column(SubsectionKind k) {
    return k == SubsectionKind::W || k == SubsectionKind::PsAux || k == SubsectionKind::Top ||
           k == SubsectionKind::JobQueue;
}

inline bool truncates_user_column(SubsectionKind k) {
    return k == SubsectionKind::PsAux || k == SubsectionKind::Top;
}

inline constexpr std::string_view kEndSnapMarker = "endsnap";

struct Subsection {
    SubsectionKind kind = SubsectionKind::W;
    std::string header_line;          // raw "== tag ==" line
    std::vector<std::string> lines;   // content, without newlines
    ByteSpan byte_span;               // header start to start of next element
};

struct HourSection {
    int hour_stamp = 0;
    std::string header_line;          // raw "-- HH:MM:SS..." line
    std::vector<std::string> preamble;   // lines between marker and first subsection
    std::vector<Subsection> subsections;
    bool terminated = false;          // closing "endsnap" line present
    std::vector<std::string> trailing;   // lines after endsnap, before next section
    ByteSpan byte_span;               // marker start to end of endsnap line (or next section)

    std::size_t line_span() const {
        std::size_t n = 1 + preamble.size() + (terminated ? 1 : 0);
        for (const auto& s : subsections) n += 1 + s.lines.size();
        return n;
    }
};

struct SnapshotFile {
    std::string path;
    std::vector<std::string> leading;    // lines before the first section marker
    std::vector<HourSection> sections;
    std::size_t line_count = 0;
    bool final_newline = false;
    std::vector<std::string> warnings;
};

// "-- HH:MM:SS" with anything after the stamp; hour must be 00-23.
inline std::optional<int> parse_hour_marker(std::string_view line) {
    if (line.size() < 11 || line[0] != '-' || line[1] != '-' || line[2] != ' ') return std::nullopt;
    auto digits = [&](std::size_t i) { return is_ascii_digit(line[i]) && is_ascii_digit(line[i + 1]); };
    if (!digits(3) || line[5] != ':' || !digits(6) || line[8] != ':' || !digits(9))
        return std::nullopt;
    if (line.size() > 11 && line[11] != ' ') return std::nullopt;
    int hh = (line[3] - '0') * 10 + (line[4] - '0');
    int mm = (line[6] - '0') * 10 + (line[7] - '0');
    int ss = (line[9] - '0') * 10 + (line[10] - '0');
    if (hh > 23 || mm > 59 || ss > 59) return std::nullopt;
    return hh;
}

// Full-line "== tag ==" match; the tag itself may be unknown.
inline std::optional<std::string_view> parse_subsection_header(std::string_view line) {
    if (line.size() < 7) return std::nullopt;
    if (!line.starts_with("== ") || !line.ends_with(" ==")) return std::nullopt;
    std::string_view tag = line.substr(3, line.size() - 6);
    if (tag.empty() || tag.find(' ') != std::string_view::npos) return std::nullopt;
    return tag;
}

inline SnapshotFile parse_snapshot(std::string_view raw_text, std::string path = {}) {
    SnapshotFile file;
    file.path = std::move(path);
    LineSplit split = split_lines(raw_text);
    file.final_newline = split.final_newline;
    file.line_count = split.lines.size();

    HourSection* section = nullptr;
    Subsection* subsection = nullptr;
    bool after_end = false;  // inside a terminated section's trailing region
    std::size_t offset = 0;

    auto close_section_at = [&](std::size_t at) {
        if (section != nullptr && section->byte_span.end == 0) section->byte_span.end = at;
        if (subsection != nullptr && subsection->byte_span.end == 0) subsection->byte_span.end = at;
    };

    for (std::size_t idx = 0; idx < split.lines.size(); ++idx) {
        std::string_view line = split.lines[idx];
        std::size_t line_end = offset + line.size();
        if (idx + 1 < split.lines.size() || file.final_newline) ++line_end;

        if (auto hour = parse_hour_marker(line)) {
            if (section != nullptr && !section->terminated)
                file.warnings.push_back("unterminated section before line " +
                                        std::to_string(idx + 1));
            close_section_at(offset);
            if (!file.sections.empty() && *hour <= file.sections.back().hour_stamp)
                file.warnings.push_back("hour order not increasing at line " +
                                        std::to_string(idx + 1));
            file.sections.emplace_back();
            section = &file.sections.back();
            section->hour_stamp = *hour;
            section->header_line = std::string(line);
            section->byte_span.begin = offset;
            subsection = nullptr;
            after_end = false;
            offset = line_end;
            continue;
        }

        if (section != nullptr && !after_end && line == kEndSnapMarker) {
            if (subsection != nullptr && subsection->byte_span.end == 0)
                subsection->byte_span.end = offset;
            subsection = nullptr;
            section->terminated = true;
            section->byte_span.end = line_end;
            after_end = true;
            offset = line_end;
            continue;
        }

        if (section != nullptr && !after_end) {
            if (auto tag = parse_subsection_header(line)) {
                if (auto kind = subsection_from_tag(*tag)) {
                    if (subsection != nullptr && subsection->byte_span.end == 0)
                        subsection->byte_span.end = offset;
                    if (!section->subsections.empty() &&
                        static_cast<int>(*kind) <=
                            static_cast<int>(section->subsections.back().kind))
                        file.warnings.push_back("subsection out of canonical order at line " +
                                                std::to_string(idx + 1));
                    section->subsections.emplace_back();
                    subsection = &section->subsections.back();
                    subsection->kind = *kind;
                    subsection->header_line = std::string(line);
                    subsection->byte_span.begin = offset;
                    offset = line_end;
                    continue;
                }
                file.warnings.push_back("unknown subsection tag at line " + std::to_string(idx + 1));
            }
            if (subsection != nullptr)
                subsection->lines.emplace_back(line);
            else
                section->preamble.emplace_back(line);
            offset = line_end;
            continue;
        }

        // Outside any open section: leading or inter-section lines.
        if (line == kEndSnapMarker)
            file.warnings.push_back("stray endsnap at line " + std::to_string(idx + 1));
        if (section != nullptr)
            section->trailing.emplace_back(line);
        else
            file.leading.emplace_back(line);
        offset = line_end;
    }

    if (section != nullptr && !section->terminated)
        file.warnings.push_back("file ends inside an unterminated section");
    close_section_at(offset);
    return file;
}

inline std::string serialize(const SnapshotFile& file) {
    std::vector<std::string> lines;
    lines.reserve(file.line_count);
    for (const auto& l : file.leading) lines.push_back(l);
    for (const auto& sec : file.sections) {
        lines.push_back(sec.header_line);
        for (const auto& l : sec.preamble) lines.push_back(l);
        for (const auto& sub : sec.subsections) {
            lines.push_back(sub.header_line);
            for (const auto& l : sub.lines) lines.push_back(l);
        }
        if (sec.terminated) lines.push_back(std::string(kEndSnapMarker));
        for (const auto& l : sec.trailing) lines.push_back(l);
    }
    return join_lines(lines, file.final_newline);
}

// Fast scan used by the sharder: section spans without building the model.
// Spans match HourSection::byte_span from a full parse exactly. Single
// allocation-free pass; this runs serially over every oversized file.
inline std::vector<std::pair<int, ByteSpan>> section_boundaries(std::string_view raw_text) {
    std::vector<std::pair<int, ByteSpan>> out;
    const std::size_t n = raw_text.size();
    std::size_t offset = 0;
    bool open = false;
    while (offset < n) {
        const char* nl =
            static_cast<const char*>(std::memchr(raw_text.data() + offset, '\n', n - offset));
        std::size_t content_end = nl ? static_cast<std::size_t>(nl - raw_text.data()) : n;
        std::size_t next = nl ? content_end + 1 : n;
        std::string_view line = raw_text.substr(offset, content_end - offset);
        if (auto hour = parse_hour_marker(line)) {
            if (open) out.back().second.end = offset;
            out.emplace_back(*hour, ByteSpan{offset, 0});
            open = true;
        } else if (open && line == kEndSnapMarker) {
            out.back().second.end = next;
            open = false;
        }
        offset = next;
    }
    if (open) out.back().second.end = n;
    return out;
}

// Structural skeleton (hour stamps, subsection kinds, line counts) used to
// check that substitution preserves file structure.
inline std::string structure_signature(const SnapshotFile& file) {
    std::string sig;
    sig += "L" + std::to_string(file.leading.size()) + ";";
    for (const auto& sec : file.sections) {
        sig += "S" + std::to_string(sec.hour_stamp) + ":" + std::to_string(sec.preamble.size());
        for (const auto& sub : sec.subsections) {
            sig += ",";
            sig += subsection_tag(sub.kind);
            sig += "=" + std::to_string(sub.lines.size());
        }
        sig += sec.terminated ? "|t" : "|u";
        sig += std::to_string(sec.trailing.size()) + ";";
    }
    return sig;
}

}  // namespace plog
