#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "plogshield/synth.hpp"
#include "test_helpers.hpp"

using namespace plog;

namespace {

CorpusSpec small_spec(std::uint64_t seed) {
    CorpusSpec spec;
    spec.n_files = 6;
    spec.lines_per_file = 400;
    spec.n_users = 20;
    spec.n_projects = 5;
    spec.n_ips = 8;
    spec.seed = seed;
    return spec;
}

}  // namespace

TEST_CASE("spec validation") {
    CorpusSpec bad;
    bad.n_files = 0;
    CHECK_THROWS_AS(validate(bad), Error);
    CorpusSpec strag = small_spec(1);
    strag.n_stragglers = 7;  // > n_files
    CHECK_THROWS_AS(validate(strag), Error);

    // The real dataset's shape is representable: 3,500 files, ~175M lines.
    CorpusSpec paper_scale;
    paper_scale.n_files = 3500;
    paper_scale.lines_per_file = 50000;
    paper_scale.n_users = 1967;
    paper_scale.n_projects = 400;
    paper_scale.n_ips = 800;
    CHECK_NOTHROW(validate(paper_scale));
}

TEST_CASE("same spec and seed give byte-identical corpora") {
    testutil::TempDir a, b;
    CorpusSpec spec = small_spec(42);
    spec.n_files = 1;
    spec.lines_per_file = 100;
    spec.n_users = 4;
    spec.n_projects = 1;
    spec.n_ips = 2;
    generate_corpus(spec, a.path);
    generate_corpus(spec, b.path);
    CHECK(testutil::tree_digest(a.path) == testutil::tree_digest(b.path));
    CHECK(read_file(a / "manifest.tsv") == read_file(b / "manifest.tsv"));
    CHECK(read_file(a / "users.txt") == read_file(b / "users.txt"));
}

TEST_CASE("planted populations have the promised shape") {
    CorpusSpec spec;
    spec.n_users = 200;
    spec.n_projects = 30;
    spec.n_ips = 100;
    Populations pops = make_populations(spec);
    CHECK(pops.users.size() == 200);
    CHECK(pops.tool_collision_user == "joe");
    CHECK(pops.long_users.size() == 20);
    for (const auto& u : pops.long_users) CHECK(u.size() > kUserTruncWidth);

    // Unambiguous truncation: 8-char prefixes unique across all names.
    std::set<std::string> keys;
    for (const auto& u : pops.users)
        if (u.size() >= kUserTruncWidth)
            CHECK(keys.insert(u.substr(0, kUserTruncWidth)).second);

    for (const auto& ip : pops.ips) {
        CHECK_FALSE(ip.starts_with("10."));
        auto end = ipv4_token_end(ip, 0);
        REQUIRE(end.has_value());
        CHECK(*end == ip.size());
    }
}

TEST_CASE("straggler files reach the long-tail multiplier") {
    testutil::TempDir dir;
    CorpusSpec spec = small_spec(7);
    spec.n_files = 12;
    spec.n_stragglers = 3;
    spec.long_tail_multiplier = 5.0;
    generate_corpus(spec, dir.path);

    CorpusStats stats = corpus_stats(dir.path);
    REQUIRE(stats.file_count == 12);
    std::vector<std::uint64_t> lines;
    for (const auto& [_, n] : stats.per_file_lines) lines.push_back(n);
    std::sort(lines.begin(), lines.end());
    std::uint64_t median = lines[lines.size() / 2];
    std::size_t big = 0;
    for (auto n : lines)
        if (n >= 5 * median) ++big;
    CHECK(big == 3);
}

TEST_CASE("manifest offsets point at the exact emitted bytes") {
    testutil::TempDir dir;
    GroundTruthManifest manifest = generate_corpus(small_spec(99), dir.path);
    REQUIRE(!manifest.occurrences.empty());
    std::map<std::string, std::string> cache;
    for (const auto& occ : manifest.occurrences) {
        auto it = cache.find(occ.path);
        if (it == cache.end()) it = cache.emplace(occ.path, read_file(dir.path / occ.path)).first;
        REQUIRE(occ.offset + occ.token.size() <= it->second.size());
        CHECK(it->second.substr(occ.offset, occ.token.size()) == occ.token);
    }
}

TEST_CASE("manifest counts match an independent boundary-checking scan") {
    testutil::TempDir dir;
    GroundTruthManifest manifest = generate_corpus(small_spec(555), dir.path);

    std::map<std::string, std::size_t> per_token;
    for (const auto& occ : manifest.occurrences) ++per_token[occ.token];

    bool saw_collision_token = false;
    for (const auto& [token, count] : per_token) {
        std::size_t found = testutil::naive_count_in_corpus(dir.path, token);
        if (token == "joe") {
            // The editor occurrences are not PII and not in the manifest.
            saw_collision_token = true;
            CHECK(found > count);
        } else {
            INFO("token: " << token);
            CHECK(found == count);
        }
    }
    CHECK(saw_collision_token);
}

TEST_CASE("every population token appears at least once in canonical form") {
    testutil::TempDir dir;
    GroundTruthManifest manifest = generate_corpus(small_spec(321), dir.path);
    for (const auto& u : manifest.users)
        CHECK(testutil::naive_count_in_corpus(dir.path, u) >= 1);
    for (const auto& p : manifest.projects)
        CHECK(testutil::naive_count_in_corpus(dir.path, p, /*ci=*/true) >= 1);
    for (const auto& ip : manifest.ips)
        CHECK(testutil::naive_count_in_corpus(dir.path, ip) >= 1);
}

TEST_CASE("truncated long usernames are planted and recorded truncated") {
    testutil::TempDir dir;
    CorpusSpec spec = small_spec(808);
    spec.n_users = 30;  // 3 long names
    GroundTruthManifest manifest = generate_corpus(spec, dir.path);

    std::set<std::string> long_names;
    for (const auto& u : manifest.users)
        if (u.size() > kUserTruncWidth) long_names.insert(u);
    REQUIRE(!long_names.empty());

    std::size_t truncated_rows = 0;
    for (const auto& occ : manifest.occurrences) {
        if (occ.kind != PiiKind::User) continue;
        if (occ.token.size() == kUserTruncWidth) {
            for (const auto& full : long_names)
                if (full.substr(0, kUserTruncWidth) == occ.token) {
                    ++truncated_rows;
                    break;
                }
        }
    }
    CHECK(truncated_rows > 0);
}

TEST_CASE("corpus_stats") {
    SECTION("empty directory") {
        testutil::TempDir dir;
        CorpusStats stats = corpus_stats(dir.path);
        CHECK(stats.file_count == 0);
        CHECK(stats.total_lines == 0);
        CHECK(stats.per_file_lines.empty());
    }
    SECTION("totals within ten percent of target") {
        testutil::TempDir dir;
        CorpusSpec spec;
        spec.n_files = 10;
        spec.lines_per_file = 1000;
        spec.n_users = 10;
        spec.n_projects = 3;
        spec.n_ips = 5;
        spec.seed = 4;
        generate_corpus(spec, dir.path);
        CorpusStats stats = corpus_stats(dir.path);
        CHECK(stats.file_count == 10);
        CHECK(stats.total_lines > 9000);
        CHECK(stats.total_lines < 11000);
        CHECK(std::is_sorted(stats.per_file_lines.begin(), stats.per_file_lines.end()));

        // The streaming count agrees with the in-memory count.
        for (const auto& [rel, lines] : stats.per_file_lines)
            CHECK(lines == count_lines(read_file(dir.path / rel)));
    }
    SECTION("unreadable entries land in the error set") {
        testutil::TempDir dir;
        fs::create_directories(dir.path / "Jun2020");
        fs::create_symlink(dir.path / "nowhere.txt", dir.path / "Jun2020/login1.2020-06-01.txt");
        CorpusStats stats = corpus_stats(dir.path);
        CHECK(stats.file_count == 0);
        REQUIRE(stats.errors.size() == 1);
    }
}

TEST_CASE("corpus filename convention") {
    CHECK(is_snapshot_filename("login1.2020-06-01.txt"));
    CHECK(is_snapshot_filename("node-a2.2021-12-31.txt"));
    CHECK_FALSE(is_snapshot_filename("users.txt"));
    CHECK_FALSE(is_snapshot_filename("manifest.tsv"));
    CHECK_FALSE(is_snapshot_filename("login1.2020-6-01.txt"));
    CHECK_FALSE(is_snapshot_filename(".2020-06-01.txt"));
}
