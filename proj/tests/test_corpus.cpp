#include <catch2/catch_amalgamated.hpp>

#include "plogshield/corpus.hpp"
#include "plogshield/synth.hpp"
#include "test_helpers.hpp"

using namespace plog;

TEST_CASE("empty input parses to an empty file") {
    SnapshotFile f = parse_snapshot("");
    CHECK(f.sections.empty());
    CHECK(f.line_count == 0);
    CHECK(serialize(f).empty());
    CHECK(section_boundaries("").empty());
}

TEST_CASE("hour marker syntax") {
    CHECK(parse_hour_marker("-- 00:00:00").value() == 0);
    CHECK(parse_hour_marker("-- 23:59:59").value() == 23);
    CHECK(parse_hour_marker("-- 07:03:41 Jun 12").value() == 7);
    CHECK_FALSE(parse_hour_marker("-- 24:00:00").has_value());
    CHECK_FALSE(parse_hour_marker("-- 10:60:00").has_value());
    CHECK_FALSE(parse_hour_marker("-- 10:00:0").has_value());
    CHECK_FALSE(parse_hour_marker("-- 10:00:00x").has_value());
    CHECK_FALSE(parse_hour_marker("--10:00:00").has_value());
    CHECK_FALSE(parse_hour_marker("endsnap").has_value());
}

TEST_CASE("subsection header syntax") {
    CHECK(parse_subsection_header("== w ==").value() == "w");
    CHECK(parse_subsection_header("== ps-aux ==").value() == "ps-aux");
    CHECK_FALSE(parse_subsection_header("== two words ==").has_value());
    CHECK_FALSE(parse_subsection_header("==w==").has_value());
    CHECK_FALSE(parse_subsection_header("== w == trailing").has_value());
}

TEST_CASE("a 24-section file parses into 24 terminated sections") {
    std::string text;
    for (int h = 0; h < 24; ++h) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "-- %02d:00:00\n", h);
        text += buf;
        text += "== w ==\nUSER TTY\nalice pts/0\n";
        text += "endsnap\n";
    }
    SnapshotFile f = parse_snapshot(text);
    REQUIRE(f.sections.size() == 24);
    for (int h = 0; h < 24; ++h) {
        CHECK(f.sections[h].hour_stamp == h);
        CHECK(f.sections[h].terminated);
    }
    CHECK(serialize(f) == text);
    CHECK(f.warnings.empty());

    auto bounds = section_boundaries(text);
    REQUIRE(bounds.size() == 24);
    for (std::size_t i = 0; i < 24; ++i) {
        CHECK(bounds[i].first == f.sections[i].hour_stamp);
        CHECK(bounds[i].second == f.sections[i].byte_span);
    }
}

TEST_CASE("unterminated final section is flagged, not fatal") {
    std::string text = "-- 03:00:00\n== w ==\nUSER TTY\nbob pts/1\n";
    SnapshotFile f = parse_snapshot(text);
    REQUIRE(f.sections.size() == 1);
    CHECK_FALSE(f.sections[0].terminated);
    CHECK(!f.warnings.empty());
    CHECK(serialize(f) == text);
}

TEST_CASE("malformed regions are retained verbatim") {
    std::string text =
        "stray preamble\n"
        "endsnap\n"                    // stray endsnap before any section
        "-- 05:00:00\n"
        "loose line before subsections\n"
        "== bogus ==\n"                // unknown tag: kept as a content line
        "== w ==\n"
        "row\n"
        "endsnap\n"
        "trailing junk\n"
        "-- 04:00:00\n"                // hour order violation
        "endsnap\n";
    SnapshotFile f = parse_snapshot(text);
    CHECK(serialize(f) == text);
    CHECK(f.sections.size() == 2);
    CHECK(f.warnings.size() >= 3);
}

TEST_CASE("no trailing newline round-trips") {
    std::string text = "-- 01:00:00\n== w ==\nlast line no newline";
    SnapshotFile f = parse_snapshot(text);
    CHECK_FALSE(f.final_newline);
    CHECK(serialize(f) == text);
    CHECK(f.line_count == 3);
}

TEST_CASE("line accounting matches the model") {
    std::string text = "lead\n-- 02:00:00\npre\n== w ==\na\nb\nendsnap\ntrail\n";
    SnapshotFile f = parse_snapshot(text);
    std::size_t in_sections = 0;
    for (const auto& s : f.sections) in_sections += s.line_span() + s.trailing.size();
    CHECK(f.leading.size() + in_sections == f.line_count);
    CHECK(f.line_count == 8);
}

TEST_CASE("generated corpus round-trips byte-for-byte over 100 seeded files") {
    testutil::TempDir dir;
    CorpusSpec spec;
    spec.n_files = 100;
    spec.lines_per_file = 150;
    spec.n_users = 12;
    spec.n_projects = 4;
    spec.n_ips = 6;
    spec.seed = 20260809;
    generate_corpus(spec, dir.path);

    std::size_t checked = 0;
    for (const auto& rel : list_corpus_files(dir.path)) {
        std::string text = read_file(dir.path / rel);
        SnapshotFile f = parse_snapshot(text, rel.string());
        REQUIRE(serialize(f) == text);

        auto bounds = section_boundaries(text);
        REQUIRE(bounds.size() == f.sections.size());
        for (std::size_t i = 0; i < bounds.size(); ++i) {
            CHECK(bounds[i].first == f.sections[i].hour_stamp);
            CHECK(bounds[i].second == f.sections[i].byte_span);
        }
        ++checked;
    }
    CHECK(checked == 100);
}

TEST_CASE("parser losslessness fuzz: random bytes never throw, always round-trip") {
    testutil::Rand rnd(0xfeedbeef);
    const char* fragments[] = {"-- 03:00:00", "-- 12:11:10", "endsnap", "== w ==",
                               "== ps-aux ==", "== bogus ==", "USER PID", "joe 1.2.3.4"};
    for (int iter = 0; iter < 1000; ++iter) {
        std::string text;
        std::size_t pieces = rnd.below(30);
        for (std::size_t p = 0; p < pieces; ++p) {
            switch (rnd.below(4)) {
                case 0: text += fragments[rnd.below(8)]; break;
                case 1: {
                    std::size_t len = rnd.below(20);
                    for (std::size_t i = 0; i < len; ++i)
                        text.push_back(static_cast<char>(rnd.below(256)));
                    break;
                }
                case 2: text += std::to_string(rnd.below(1000000)); break;
                default: text += rnd.word(0, 12); break;
            }
            if (rnd.chance(0.7)) text += '\n';
        }
        SnapshotFile f = parse_snapshot(text);
        REQUIRE(serialize(f) == text);

        // Boundary scan agrees with the full parse on arbitrary input.
        auto bounds = section_boundaries(text);
        REQUIRE(bounds.size() == f.sections.size());
        for (std::size_t i = 0; i < bounds.size(); ++i)
            REQUIRE(bounds[i].second == f.sections[i].byte_span);
    }
}

TEST_CASE("subsection spans are disjoint and ordered") {
    std::string text =
        "-- 06:00:00\n== w ==\na\n== meminfo ==\nb\nc\n== df ==\nd\nendsnap\n";
    SnapshotFile f = parse_snapshot(text);
    REQUIRE(f.sections.size() == 1);
    const auto& subs = f.sections[0].subsections;
    REQUIRE(subs.size() == 3);
    for (std::size_t i = 0; i + 1 < subs.size(); ++i)
        CHECK(subs[i].byte_span.end <= subs[i + 1].byte_span.begin);
    CHECK(text.substr(subs[1].byte_span.begin, subs[1].byte_span.size()) ==
          "== meminfo ==\nb\nc\n");
}
