#include <catch2/catch_amalgamated.hpp>

#include "plogshield/map_store.hpp"
#include "plogshield/substitute.hpp"
#include "test_helpers.hpp"

using namespace plog;

namespace {

PseudonymMap sample_map() {
    EntitySet es;
    es.users.push_back({PiiKind::User, "verylonguser12", {"verylong"}, 3});
    es.users.push_back({PiiKind::User, "joe", {}, 2});
    es.ips.push_back({PiiKind::Ip, "192.0.2.45", {}, 1});
    es.projects.push_back({PiiKind::Project, "ABC123", {"abc123"}, 2});
    return build_map(es, 424242);
}

}  // namespace

TEST_CASE("empty map serializes to header plus checksum only") {
    PseudonymMap empty;
    std::string text = serialize_map(empty);
    LineSplit split = split_lines(text);
    REQUIRE(split.lines.size() == 2);
    CHECK(split.lines[0] == kMapHeader);
    CHECK(split.lines[1].starts_with("#sha "));
    CHECK(parse_map(text).empty());
}

TEST_CASE("save then load yields an equal map") {
    testutil::TempDir dir;
    PseudonymMap map = sample_map();
    save_map(map, dir / "map.tsv");
    PseudonymMap back = load_map(dir / "map.tsv");
    CHECK(back == map);
    CHECK(back.user_variants == map.user_variants);
}

TEST_CASE("two saves of the same map are byte-identical") {
    testutil::TempDir dir;
    PseudonymMap map = sample_map();
    save_map(map, dir / "a.tsv");
    save_map(map, dir / "b.tsv");
    CHECK(read_file(dir / "a.tsv") == read_file(dir / "b.tsv"));
}

TEST_CASE("rows are sorted by (kind, original)") {
    std::string text = serialize_map(sample_map());
    LineSplit split = split_lines(text);
    std::vector<std::pair<std::string, std::string>> keys;
    for (auto line : split.lines) {
        if (line.empty() || line[0] == '#') continue;
        std::size_t t1 = line.find('\t');
        std::size_t t2 = line.find('\t', t1 + 1);
        keys.emplace_back(std::string(line.substr(0, t1)),
                          std::string(line.substr(t1 + 1, t2 - t1 - 1)));
    }
    CHECK(std::is_sorted(keys.begin(), keys.end()));
}

TEST_CASE("load rejects corruption with distinct errors") {
    PseudonymMap map = sample_map();
    std::string good = serialize_map(map);

    SECTION("bad header") {
        std::string bad = "#plogshield-map v9\n" + good.substr(good.find('\n') + 1);
        CHECK_THROWS_AS(parse_map(bad), MapFormatError);
    }
    SECTION("flipped byte fails the checksum") {
        std::string bad = good;
        std::size_t at = bad.find("user\t");
        bad[at + 5] ^= 1;
        CHECK_THROWS_AS(parse_map(bad), MapChecksumError);
    }
    SECTION("truncated file fails the checksum") {
        std::string bad = good.substr(0, good.size() / 2);
        CHECK_THROWS_AS(parse_map(bad), MapChecksumError);
    }
    SECTION("missing checksum line") {
        std::string bad = good.substr(0, good.rfind("#sha"));
        CHECK_THROWS_AS(parse_map(bad), MapChecksumError);
    }
    SECTION("duplicate row") {
        std::string body = std::string(kMapHeader) + "\n";
        body += "user\talice\tuaaaaaa1\n";
        body += "user\talice\tuaaaaaa2\n";
        std::string bad = body + "#sha " + content_hash_hex(body) + "\n";
        CHECK_THROWS_AS(parse_map(bad), MapDuplicateError);
    }
    SECTION("invariant violation: wrong pseudonym shape") {
        std::string body = std::string(kMapHeader) + "\n";
        body += "user\talice\tWRONGSHAPE\n";
        std::string bad = body + "#sha " + content_hash_hex(body) + "\n";
        CHECK_THROWS_AS(parse_map(bad), MapInvariantError);
    }
    SECTION("invariant violation: duplicate pseudonym") {
        std::string body = std::string(kMapHeader) + "\n";
        body += "user\talice\tux1y2z3w\n";
        body += "user\tbob\tux1y2z3w\n";
        std::string bad = body + "#sha " + content_hash_hex(body) + "\n";
        CHECK_THROWS_AS(parse_map(bad), MapInvariantError);
    }
}

TEST_CASE("atomic save leaves no temp files and no loadable partial") {
    testutil::TempDir dir;
    save_map(sample_map(), dir / "map.tsv");
    std::size_t entries = 0;
    for (const auto& e : fs::directory_iterator(dir.path)) {
        (void)e;
        ++entries;
    }
    CHECK(entries == 1);

    // A simulated crash mid-write (truncated content) must not load.
    std::string good = read_file(dir / "map.tsv");
    write_file(dir / "crashed.tsv", good.substr(0, good.size() - 9));
    CHECK_THROWS_AS(load_map(dir / "crashed.tsv"), Error);
}

TEST_CASE("pseudonymize then apply the inverted map recovers the original text") {
    PseudonymMap map = sample_map();
    std::string original =
        "-- 00:00:00\n"
        "== w ==\n"
        "USER TTY FROM\n"
        "verylonguser12 pts/0 192.0.2.45\n"
        "joe pts/1 host1\n"
        "== jobqueue ==\n"
        "JOBID USER PROJ\n"
        "1 joe abc123\n"
        "2 verylonguser12 ABC123\n"
        "endsnap\n";

    SubstitutionPlan forward = compile_plan(map);
    ApplyResult pseudo = apply_plan_structured(parse_snapshot(original, "t"), forward);
    CHECK(pseudo.text != original);

    SubstitutionPlan backward = compile_plan(invert_map(map));
    ApplyResult back = apply_plan_structured(parse_snapshot(pseudo.text, "t"), backward);
    CHECK(back.text == original);
}

TEST_CASE("loaded maps behave like built maps end to end") {
    testutil::TempDir dir;
    PseudonymMap map = sample_map();
    save_map(map, dir / "map.tsv");
    PseudonymMap loaded = load_map(dir / "map.tsv");

    std::string text = "verylong 192.0.2.45 Abc123\n";
    ApplyResult a = apply_plan(text, compile_plan(map));
    ApplyResult b = apply_plan(text, compile_plan(loaded));
    CHECK(a.text == b.text);
}
