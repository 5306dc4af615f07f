#pragma once

// Seeded synthetic corpus generator. Emits snapshot files in the format
// corpus.hpp parses, together with a ground-truth manifest recording the
// byte offset of every identifying token it planted. The generator
// deliberately plants the hazards the substitution layer must survive:
//   - usernames longer than 8 chars, rendered truncated in ps-aux/top
//   - one username colliding with a common tool name ("joe"), appearing
//     both as a user and as a command token (only the former is PII)
//   - project IDs in lower/UPPER/Title case forms
//   - usernames and projects embedded in filesystem paths
//   - IP addresses in free-text command arguments and df output
//   - non-identifying decoys (0.0.0.0, 127.0.0.1, malformed quads)
//
// Output is byte-identical for equal (spec, seed): every file draws from
// its own RNG stream derived from (seed, file index).

#include <cstdint>
#include <cstdio>
#include <deque>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "plogshield/core.hpp"
#include "plogshield/corpus.hpp"

namespace plog {

struct CorpusSpec {
    std::size_t n_files = 1;
    std::size_t lines_per_file = 1000;  // target, +-10% jitter per file
    std::size_t n_users = 10;
    std::size_t n_projects = 3;
    std::size_t n_ips = 5;
    double long_tail_multiplier = 1.0;
    std::size_t n_stragglers = 0;
    std::uint64_t seed = 0;
};

inline void validate(const CorpusSpec& spec) {
    if (spec.n_files == 0) throw config_error("n_files must be > 0");
    if (spec.lines_per_file < 50)
        throw config_error("lines_per_file must be >= 50 (one section is ~50 lines)");
    if (spec.n_users == 0 || spec.n_projects == 0 || spec.n_ips == 0)
        throw config_error("populations must be > 0");
    if (spec.long_tail_multiplier < 1.0) throw config_error("long_tail_multiplier must be >= 1");
    if (spec.n_stragglers > spec.n_files) throw config_error("n_stragglers > n_files");
    if (spec.n_files * spec.lines_per_file < 8 * (spec.n_users + spec.n_projects + spec.n_ips))
        throw config_error("corpus too small to cover the requested populations");
}

struct Occurrence {
    std::string path;   // relative to the corpus root
    std::size_t offset = 0;
    PiiKind kind = PiiKind::User;
    std::string token;  // the emitted form (truncated / case variant)
};

struct GroundTruthManifest {
    std::vector<std::string> users;     // full usernames
    std::vector<std::string> projects;  // canonical (upper-case) project IDs
    std::vector<std::string> ips;
    std::vector<Occurrence> occurrences;
};

// ---------------------------------------------------------------------------
// Populations.
// ---------------------------------------------------------------------------

struct Populations {
    std::vector<std::string> users;
    std::vector<std::string> projects;
    std::vector<std::string> ips;
    std::string tool_collision_user;       // "" when n_users < 2
    std::vector<std::string> long_users;   // the >8-char subset
};

namespace detail {

inline const std::vector<std::string>& name_stems() {
    static const std::vector<std::string> v = {
        "smith", "jones", "chen",  "patel", "kim",   "lopez", "garcia", "silva",
        "brown", "davis", "moore", "clark", "lewis", "walker", "hall",  "young",
        "king",  "wright", "scott", "green", "baker", "adams", "nelson", "hill",
        "rivera", "campbell", "mitchell", "carter", "roberts", "turner",
    };
    return v;
}

inline const std::vector<std::string>& name_prefixes() {
    static const std::vector<std::string> v = {
        "alex", "sam", "chris", "pat", "jordan", "taylor", "casey", "morgan",
        "jamie", "robin", "drew", "lee", "kai", "max", "nina", "omar",
        "ravi", "sara", "tomas", "wei", "yuki", "zoe", "ivan", "lena",
    };
    return v;
}

inline bool in_denylist(const std::string& name) {
    const auto& dl = default_denylist();
    return std::find(dl.begin(), dl.end(), name) != dl.end();
}

// Howard Hinnant's civil date algorithms.
inline long days_from_civil(int y, unsigned m, unsigned d) {
    y -= m <= 2;
    const long era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<long>(doe) - 719468;
}

inline std::tuple<int, unsigned, unsigned> civil_from_days(long z) {
    z += 719468;
    const long era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const int y = static_cast<int>(yoe) + static_cast<int>(era) * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp + (mp < 10 ? 3 : -9);
    return {y + (m <= 2), m, d};
}

inline const char* month_abbrev(unsigned m) {
    static const char* names[] = {"Jan", "Feb", "Mar", "Apr", "May", "Jun",
                                  "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};
    return names[m - 1];
}

}  // namespace detail

inline Populations make_populations(const CorpusSpec& spec) {
    Populations pops;
    Rng rng(Rng::mix(spec.seed, 0x706f7073ULL));  // population stream

    std::set<std::string> used;
    std::set<std::string> trunc_keys;  // first 8 chars of every name of length >= 8

    auto admit = [&](const std::string& name) {
        if (used.count(name)) return false;
        if (detail::in_denylist(name)) return false;
        if (name.size() >= kUserTruncWidth) {
            std::string key = name.substr(0, kUserTruncWidth);
            if (trunc_keys.count(key)) return false;
            trunc_keys.insert(key);
        }
        used.insert(name);
        return true;
    };

    std::size_t n_long = spec.n_users / 10;
    bool want_collision = spec.n_users >= 2;
    std::size_t n_short = spec.n_users - n_long - (want_collision ? 1 : 0);

    if (want_collision) {
        pops.users.push_back("joe");
        pops.tool_collision_user = "joe";
        used.insert("joe");
    }
    while (pops.long_users.size() < n_long) {
        std::string name = detail::name_prefixes()[rng.below(detail::name_prefixes().size())] +
                           detail::name_stems()[rng.below(detail::name_stems().size())] +
                           std::to_string(rng.range(10, 99));
        if (name.size() <= kUserTruncWidth || !admit(name)) continue;
        pops.long_users.push_back(name);
        pops.users.push_back(name);
    }
    std::size_t made_short = 0;
    while (made_short < n_short) {
        std::string name;
        if (rng.below(2) == 0) {
            // 3-4 letters + one digit
            std::size_t len = rng.range(3, 4);
            for (std::size_t i = 0; i < len; ++i)
                name.push_back(static_cast<char>('a' + rng.below(26)));
            name.push_back(static_cast<char>('0' + rng.below(10)));
        } else {
            // initial + stem, letters only
            name.push_back(static_cast<char>('a' + rng.below(26)));
            name += detail::name_stems()[rng.below(detail::name_stems().size())];
            if (name.size() > kUserTruncWidth) name.resize(kUserTruncWidth - 1 + rng.below(2));
        }
        if (!admit(name)) continue;
        pops.users.push_back(name);
        ++made_short;
    }

    std::set<std::string> proj_used;
    while (pops.projects.size() < spec.n_projects) {
        std::string id;
        for (int i = 0; i < 3; ++i) id.push_back(static_cast<char>('A' + rng.below(26)));
        for (int i = 0; i < 3; ++i) id.push_back(static_cast<char>('0' + rng.below(10)));
        if (!proj_used.insert(id).second) continue;
        pops.projects.push_back(id);
    }

    // Documentation / benchmark ranges: public-looking, never real hosts,
    // and disjoint from the 10.0.0.0/8 pseudo-IP range.
    std::set<std::string> ip_used;
    const std::size_t ip_capacity = 3 * 254 + 256 * 254;
    if (spec.n_ips > ip_capacity) throw config_error("n_ips exceeds generator address space");
    while (pops.ips.size() < spec.n_ips) {
        std::string ip;
        switch (rng.below(4)) {
            case 0: ip = "192.0.2." + std::to_string(rng.range(1, 254)); break;
            case 1: ip = "198.51.100." + std::to_string(rng.range(1, 254)); break;
            case 2: ip = "203.0.113." + std::to_string(rng.range(1, 254)); break;
            default:
                ip = "198.18." + std::to_string(rng.below(256)) + "." +
                     std::to_string(rng.range(1, 254));
                break;
        }
        if (!ip_used.insert(ip).second) continue;
        pops.ips.push_back(ip);
    }
    return pops;
}

// ---------------------------------------------------------------------------
// File emission.
// ---------------------------------------------------------------------------

namespace detail {

class FileEmitter {
public:
    explicit FileEmitter(std::string rel_path) : path_(std::move(rel_path)) {}

    void lit(std::string_view s) { buf_ += s; }

    void pii(PiiKind kind, std::string_view emitted) {
        occ_.push_back(Occurrence{path_, buf_.size(), kind, std::string(emitted)});
        buf_ += emitted;
    }

    // Column helper: pads with spaces to `width`, always at least one space.
    void gap(std::size_t written, std::size_t width) {
        std::size_t pad = written < width ? width - written : 0;
        buf_.append(pad > 0 ? pad : 1, ' ');
    }

    void field(std::string_view s, std::size_t width) {
        lit(s);
        gap(s.size(), width);
    }

    void pii_field(PiiKind kind, std::string_view s, std::size_t width) {
        pii(kind, s);
        gap(s.size(), width);
    }

    void nl() { buf_ += '\n'; }

    const std::string& text() const { return buf_; }
    std::vector<Occurrence>& occurrences() { return occ_; }

private:
    std::string path_;
    std::string buf_;
    std::vector<Occurrence> occ_;
};

struct PickQueues {
    std::deque<std::size_t> users, projects, ips;  // forced-coverage indices
};

struct FilePlan {
    std::string rel_path;
    std::string month = "Jun";  // token for START / SUBMIT_TIME columns
    std::size_t target_lines = 0;
    bool straggler = false;
    std::uint64_t rng_seed = 0;
    PickQueues forced;
};

// Token picks. Forced-coverage indices drain only through sites that render
// the canonical form in full, so every population token is guaranteed to
// appear verbatim at least once.
class RowContext {
public:
    RowContext(const Populations& pops, PickQueues& forced, Rng& rng)
        : pops_(pops), forced_(forced), rng_(rng) {}

    // Full-render sites: w rows, jobqueue rows, path segments.
    const std::string& pick_user_full() {
        if (!forced_.users.empty()) {
            std::size_t i = forced_.users.front();
            forced_.users.pop_front();
            return pops_.users[i];
        }
        return pops_.users[rng_.below(pops_.users.size())];
    }

    // Truncating sites: ps-aux and top user columns.
    const std::string& pick_user_any() { return pops_.users[rng_.below(pops_.users.size())]; }

    struct ProjPick {
        const std::string& canonical;
        bool forced;
    };

    // Canonical-render site: jobqueue PROJ column.
    ProjPick pick_project_canonical() {
        if (!forced_.projects.empty()) {
            std::size_t i = forced_.projects.front();
            forced_.projects.pop_front();
            return {pops_.projects[i], true};
        }
        return {pops_.projects[rng_.below(pops_.projects.size())], false};
    }

    // Lower-cased path sites.
    const std::string& pick_project_any() {
        return pops_.projects[rng_.below(pops_.projects.size())];
    }

    const std::string& pick_ip() {
        if (!forced_.ips.empty()) {
            std::size_t i = forced_.ips.front();
            forced_.ips.pop_front();
            return pops_.ips[i];
        }
        return pops_.ips[rng_.below(pops_.ips.size())];
    }

    bool ips_pending() const { return !forced_.ips.empty(); }

    std::string mixed_case_form(const std::string& canonical) {
        switch (rng_.below(5)) {
            case 0: return to_lower_copy(canonical);
            case 1: {
                std::string t = to_lower_copy(canonical);
                t[0] = ascii_upper(t[0]);
                return t;
            }
            default: return canonical;
        }
    }

private:
    const Populations& pops_;
    PickQueues& forced_;
    Rng& rng_;
};

inline std::string trunc_user(const std::string& name) {
    return name.size() > kUserTruncWidth ? name.substr(0, kUserTruncWidth) : name;
}

inline void emit_user_path(FileEmitter& em, RowContext& ctx, Rng& rng) {
    // Both layouts the extractor knows: home dirs and project scratch.
    if (rng.below(2) == 0) {
        em.lit("/ccs/home/");
        em.pii(PiiKind::User, ctx.pick_user_full());
        em.lit(rng.below(2) == 0 ? "/run.sh" : "/notes.txt");
    } else {
        em.lit("/gpfs/alpine/");
        em.pii(PiiKind::Project, to_lower_copy(ctx.pick_project_any()));
        em.lit("/scratch/");
        em.pii(PiiKind::User, ctx.pick_user_full());
        em.lit(rng.below(2) == 0 ? "/input.dat" : "/job.log");
    }
}

inline void emit_ps_command(FileEmitter& em, RowContext& ctx, Rng& rng,
                            const std::string& collision_user, bool force_editor) {
    std::uint64_t kind = force_editor ? 0 : rng.below(6);
    if (kind == 0 && !collision_user.empty()) {
        // The text-editor hazard: same token as a username, but a command.
        em.lit(collision_user);
        em.lit(" ");
        emit_user_path(em, ctx, rng);
        return;
    }
    switch (kind) {
        case 1:
            em.lit("python3 ");
            emit_user_path(em, ctx, rng);
            em.lit(" --iters ");
            em.lit(std::to_string(rng.range(10, 9000)));
            break;
        case 2:
            em.lit("python3 serve.py --host ");
            em.pii(PiiKind::Ip, ctx.pick_ip());
            em.lit(" --port ");
            em.lit(std::to_string(rng.range(1024, 9999)));
            break;
        case 3:
            em.lit(rng.below(2) == 0 ? "bash ./run.sh --bind 0.0.0.0"
                                     : "ping -c 1 127.0.0.1");
            break;
        case 4:
            em.lit("rsync -a ");
            emit_user_path(em, ctx, rng);
            em.lit(" backup/");
            break;
        default:
            em.lit(rng.below(2) == 0 ? "tail -f build.log" : "gmake -j 8 all");
            break;
    }
}

}  // namespace detail

// Emits one snapshot file's content and occurrence list. Exposed for tests.
inline std::pair<std::string, std::vector<Occurrence>> render_snapshot_file(
    const detail::FilePlan& plan, const Populations& pops) {
    Rng rng(plan.rng_seed);
    detail::FileEmitter em(plan.rel_path);
    detail::PickQueues forced = plan.forced;
    detail::RowContext ctx(pops, forced, rng);
    const char* mon = plan.month.c_str();

    std::size_t n_sections = std::clamp<std::size_t>((plan.target_lines + 35) / 70, 1, 24);
    std::size_t per_section = plan.target_lines / n_sections;
    bool interrupted = rng.below(8) == 0;  // occasional abrupt end of day

    for (std::size_t s = 0; s < n_sections; ++s) {
        bool last = s + 1 == n_sections;
        char stamp[32];
        std::snprintf(stamp, sizeof(stamp), "-- %02u:%02u:%02u", static_cast<unsigned>(s),
                      static_cast<unsigned>(rng.below(6)), static_cast<unsigned>(rng.below(60)));
        em.lit(stamp);
        em.nl();

        std::size_t n_w = rng.range(3, 6);
        std::size_t n_top = rng.range(4, 7);
        std::size_t n_jq = rng.range(3, 6);
        std::size_t n_df = 5;
        if (last) {
            // Drain any forced-coverage leftovers in the final section.
            n_w = std::max({n_w, forced.users.size(), forced.ips.size()});
            n_jq = std::max(n_jq, forced.projects.size());
        }
        std::size_t fixed = 47 + n_w + n_top + n_jq + n_df;
        std::size_t n_ps = per_section > fixed ? per_section - fixed : 1;

        // -- w --
        em.lit("== w ==");
        em.nl();
        char up[96];
        std::snprintf(up, sizeof(up),
                      " %02zu:%02llu:%02llu up %llu days, %2llu:%02llu, %zu users,  load average: "
                      "%llu.%02llu, %llu.%02llu, %llu.%02llu",
                      s, static_cast<unsigned long long>(rng.below(6)),
                      static_cast<unsigned long long>(rng.below(60)),
                      static_cast<unsigned long long>(rng.range(1, 90)),
                      static_cast<unsigned long long>(rng.below(24)),
                      static_cast<unsigned long long>(rng.below(60)), n_w,
                      static_cast<unsigned long long>(rng.below(4)),
                      static_cast<unsigned long long>(rng.below(100)),
                      static_cast<unsigned long long>(rng.below(4)),
                      static_cast<unsigned long long>(rng.below(100)),
                      static_cast<unsigned long long>(rng.below(4)),
                      static_cast<unsigned long long>(rng.below(100)));
        em.lit(up);
        em.nl();
        em.lit("USER             TTY      FROM              LOGIN@   IDLE   JCPU   PCPU WHAT");
        em.nl();
        for (std::size_t r = 0; r < n_w; ++r) {
            em.pii_field(PiiKind::User, ctx.pick_user_full(), 17);
            em.field("pts/" + std::to_string(rng.below(40)), 9);
            if (ctx.ips_pending() || rng.below(2) == 0) {
                em.pii_field(PiiKind::Ip, ctx.pick_ip(), 18);
            } else {
                em.field("host" + std::to_string(rng.range(1, 400)) + ".example.org", 18);
            }
            char cols[64];
            std::snprintf(cols, sizeof(cols), "%02llu:%02llu    %llum  %llu.%02llus %llu.%02llus ",
                          static_cast<unsigned long long>(rng.below(24)),
                          static_cast<unsigned long long>(rng.below(60)),
                          static_cast<unsigned long long>(rng.below(50)),
                          static_cast<unsigned long long>(rng.below(3)),
                          static_cast<unsigned long long>(rng.below(100)),
                          static_cast<unsigned long long>(rng.below(2)),
                          static_cast<unsigned long long>(rng.below(100)));
            em.lit(cols);
            switch (rng.below(4)) {
                case 0: em.lit("-bash"); break;
                case 1: em.lit("vim notes.txt"); break;
                case 2: em.lit("tmux a -t main"); break;
                default: em.lit("tail -f run.log"); break;
            }
            em.nl();
        }

        // -- meminfo --
        em.lit("== meminfo ==");
        em.nl();
        static const char* mem_keys[12] = {"MemTotal",   "MemFree",  "MemAvailable", "Buffers",
                                           "Cached",     "SwapCached", "Active",     "Inactive",
                                           "SwapTotal",  "SwapFree", "Dirty",        "Writeback"};
        for (const char* key : mem_keys) {
            em.lit(key);
            em.lit(":");
            std::string v = std::to_string(rng.range(1000, 530000000));
            em.gap(std::string_view(key).size() + 1 + v.size(), 28);
            em.lit(v);
            em.lit(" kB");
            em.nl();
        }

        // -- vmstat --
        em.lit("== vmstat ==");
        em.nl();
        static const char* vm_keys[10] = {"nr_free_pages",         "nr_zone_inactive_anon",
                                          "nr_zone_active_anon",   "nr_zone_inactive_file",
                                          "nr_zone_active_file",   "nr_mapped",
                                          "nr_file_pages",         "nr_dirty",
                                          "nr_writeback",          "pgfault"};
        for (const char* key : vm_keys) {
            em.lit(key);
            em.lit(" ");
            em.lit(std::to_string(rng.range(0, 2000000000)));
            em.nl();
        }

        // -- ps-aux --
        em.lit("== ps-aux ==");
        em.nl();
        em.lit("USER         PID %CPU %MEM    VSZ   RSS TTY      STAT START   TIME COMMAND");
        em.nl();
        bool editor_done = false;
        for (std::size_t r = 0; r < n_ps; ++r) {
            const std::string& user = ctx.pick_user_any();
            em.pii_field(PiiKind::User, detail::trunc_user(user), 11);
            char cols[96];
            std::snprintf(cols, sizeof(cols),
                          "%6llu %2llu.%llu %2llu.%llu %6llu %5llu %-8s %-4s %s%02llu   %llu:%02llu ",
                          static_cast<unsigned long long>(rng.range(100, 999999)),
                          static_cast<unsigned long long>(rng.below(99)),
                          static_cast<unsigned long long>(rng.below(10)),
                          static_cast<unsigned long long>(rng.below(60)),
                          static_cast<unsigned long long>(rng.below(10)),
                          static_cast<unsigned long long>(rng.range(1000, 999999)),
                          static_cast<unsigned long long>(rng.range(100, 99999)),
                          rng.below(3) == 0 ? "?" : "pts/2", rng.below(4) == 0 ? "R" : "S", mon,
                          static_cast<unsigned long long>(rng.range(1, 28)),
                          static_cast<unsigned long long>(rng.below(30)),
                          static_cast<unsigned long long>(rng.below(60)));
            em.lit(cols);
            bool force_editor = s == 0 && !editor_done && !pops.tool_collision_user.empty();
            if (force_editor) editor_done = true;
            detail::emit_ps_command(em, ctx, rng, pops.tool_collision_user, force_editor);
            em.nl();
        }

        // -- top --
        em.lit("== top ==");
        em.nl();
        char toph[96];
        std::snprintf(toph, sizeof(toph), "top - %02zu:%02llu:%02llu up %llu days, %zu users", s,
                      static_cast<unsigned long long>(rng.below(60)),
                      static_cast<unsigned long long>(rng.below(60)),
                      static_cast<unsigned long long>(rng.range(1, 90)), n_w);
        em.lit(toph);
        em.nl();
        char tasks[96];
        std::snprintf(tasks, sizeof(tasks),
                      "Tasks: %llu total,   %llu running, %llu sleeping,   0 stopped,   0 zombie",
                      static_cast<unsigned long long>(rng.range(200, 900)),
                      static_cast<unsigned long long>(rng.below(8)),
                      static_cast<unsigned long long>(rng.range(200, 880)));
        em.lit(tasks);
        em.nl();
        char cpus[120];
        std::snprintf(cpus, sizeof(cpus),
                      "%%Cpu(s): %2llu.%llu us,  %llu.%llu sy,  0.0 ni, %2llu.%llu id,  0.2 wa,  "
                      "0.0 hi,  0.0 si,  0.0 st",
                      static_cast<unsigned long long>(rng.below(40)),
                      static_cast<unsigned long long>(rng.below(10)),
                      static_cast<unsigned long long>(rng.below(9)),
                      static_cast<unsigned long long>(rng.below(10)),
                      static_cast<unsigned long long>(rng.range(40, 95)),
                      static_cast<unsigned long long>(rng.below(10)));
        em.lit(cpus);
        em.nl();
        em.lit("MiB Mem : 523135.6 total, 214001.9 free, 102881.2 used, 206252.5 buff/cache");
        em.nl();
        em.lit("  PID USER      PR  NI    VIRT    RES    SHR S  %CPU  %MEM     TIME+ COMMAND");
        em.nl();
        for (std::size_t r = 0; r < n_top; ++r) {
            char pid[16];
            std::snprintf(pid, sizeof(pid), "%5llu ",
                          static_cast<unsigned long long>(rng.range(100, 99999)));
            em.lit(pid);
            const std::string& user = ctx.pick_user_any();
            em.pii_field(PiiKind::User, detail::trunc_user(user), 9);
            char cols[96];
            std::snprintf(cols, sizeof(cols),
                          "20   0 %7llu %6llu %5llu %s %2llu.%llu %2llu.%llu %4llu:%02llu.%02llu ",
                          static_cast<unsigned long long>(rng.range(10000, 9999999)),
                          static_cast<unsigned long long>(rng.range(1000, 999999)),
                          static_cast<unsigned long long>(rng.range(100, 99999)),
                          rng.below(4) == 0 ? "R" : "S",
                          static_cast<unsigned long long>(rng.below(100)),
                          static_cast<unsigned long long>(rng.below(10)),
                          static_cast<unsigned long long>(rng.below(60)),
                          static_cast<unsigned long long>(rng.below(10)),
                          static_cast<unsigned long long>(rng.below(600)),
                          static_cast<unsigned long long>(rng.below(60)),
                          static_cast<unsigned long long>(rng.below(100)));
            em.lit(cols);
            if (!pops.tool_collision_user.empty() && rng.below(8) == 0)
                em.lit(pops.tool_collision_user);  // the editor again
            else
                em.lit(rng.below(2) == 0 ? "python3" : "bash");
            em.nl();
        }

        // -- jobqueue --
        em.lit("== jobqueue ==");
        em.nl();
        em.lit("JOBID    USER             STAT  QUEUE     PROJ      EXEC_HOST  SUBMIT_TIME");
        em.nl();
        for (std::size_t r = 0; r < n_jq; ++r) {
            em.field(std::to_string(rng.range(100000, 999999)), 9);
            em.pii_field(PiiKind::User, ctx.pick_user_full(), 17);
            em.field(rng.below(3) == 0 ? "PEND" : "RUN", 6);
            em.field(rng.below(4) == 0 ? "killable" : "batch", 10);
            auto proj = ctx.pick_project_canonical();
            em.pii_field(PiiKind::Project,
                         proj.forced ? proj.canonical : ctx.mixed_case_form(proj.canonical), 10);
            em.field("batch" + std::to_string(rng.range(1, 8)), 11);
            char sub[24];
            std::snprintf(sub, sizeof(sub), "%s%02llu_%02llu:%02llu", mon,
                          static_cast<unsigned long long>(rng.range(1, 28)),
                          static_cast<unsigned long long>(rng.below(24)),
                          static_cast<unsigned long long>(rng.below(60)));
            em.lit(sub);
            em.nl();
        }

        // -- ls timings --
        em.lit("== ls-plain ==");
        em.nl();
        em.lit("ls_home_seconds 0." + std::to_string(rng.range(10, 999)));
        em.nl();
        em.lit("== ls-color ==");
        em.nl();
        em.lit("ls_color_home_seconds 0." + std::to_string(rng.range(10, 999)));
        em.nl();

        // -- gpfs write probe --
        em.lit("== gpfs-write ==");
        em.nl();
        em.lit("gpfs_write_1g_seconds " + std::to_string(rng.range(1, 29)) + "." +
               std::to_string(rng.range(10, 99)) + " target /gpfs/alpine/");
        em.pii(PiiKind::Project, to_lower_copy(ctx.pick_project_any()));
        em.lit("/scratch/");
        em.pii(PiiKind::User, ctx.pick_user_full());
        em.lit("/ioprobe.bin");
        em.nl();

        // -- df --
        em.lit("== df ==");
        em.nl();
        em.lit("Filesystem            Size  Used Avail Use% Mounted on");
        em.nl();
        em.lit("/dev/sda1             446G  " + std::to_string(rng.range(100, 400)) +
               "G  211G  51% /");
        em.nl();
        em.lit("/dev/sda2             960G  " + std::to_string(rng.range(100, 800)) +
               "G  104G  83% /sw");
        em.nl();
        em.pii(PiiKind::Ip, ctx.pick_ip());
        em.lit(":/export/home    12T  8.1T  3.9T  68% /ccs/home");
        em.nl();
        em.lit("gpfs0                 250P  180P   70P  72% /gpfs/alpine");
        em.nl();

        if (last && interrupted) break;  // abrupt interruption: no endsnap
        em.lit(kEndSnapMarker);
        em.nl();
    }

    return {em.text(), std::move(em.occurrences())};
}

// ---------------------------------------------------------------------------
// Corpus generation.
// ---------------------------------------------------------------------------

inline GroundTruthManifest generate_corpus(const CorpusSpec& spec, const fs::path& out_dir) {
    validate(spec);
    Populations pops = make_populations(spec);

    GroundTruthManifest manifest;
    manifest.users = pops.users;
    manifest.projects = pops.projects;
    manifest.ips = pops.ips;

    Rng jitter_rng(Rng::mix(spec.seed, 0x6a69747465ULL));
    const long start_day = detail::days_from_civil(2020, 6, 1);

    std::vector<detail::FilePlan> plans;
    plans.reserve(spec.n_files);
    for (std::size_t i = 0; i < spec.n_files; ++i) {
        detail::FilePlan plan;
        bool straggler = i + spec.n_stragglers >= spec.n_files && spec.long_tail_multiplier > 1.0;
        double jitter = 0.9 + 0.2 * jitter_rng.unit01();
        plan.target_lines =
            straggler
                ? static_cast<std::size_t>(1.15 * spec.long_tail_multiplier *
                                           static_cast<double>(spec.lines_per_file))
                : static_cast<std::size_t>(jitter * static_cast<double>(spec.lines_per_file));
        plan.straggler = straggler;
        plan.rng_seed = Rng::mix(spec.seed, 1000 + i);

        auto [y, m, d] = detail::civil_from_days(start_day + static_cast<long>(i / 5));
        char name[64];
        std::snprintf(name, sizeof(name), "%s%d/login%zu.%04d-%02u-%02u.txt",
                      detail::month_abbrev(m), y, 1 + i % 5, y, m, d);
        plan.rel_path = name;
        plan.month = detail::month_abbrev(m);

        auto slice = [&](std::size_t n) {
            std::size_t lo = i * n / spec.n_files;
            std::size_t hi = (i + 1) * n / spec.n_files;
            std::deque<std::size_t> q;
            for (std::size_t k = lo; k < hi; ++k) q.push_back(k);
            return q;
        };
        plan.forced.users = slice(pops.users.size());
        plan.forced.projects = slice(pops.projects.size());
        plan.forced.ips = slice(pops.ips.size());
        plans.push_back(std::move(plan));
    }

    fs::create_directories(out_dir);
    for (const auto& plan : plans) {
        auto [text, occ] = render_snapshot_file(plan, pops);
        fs::path target = out_dir / plan.rel_path;
        fs::create_directories(target.parent_path());
        write_file(target, text);
        manifest.occurrences.insert(manifest.occurrences.end(), occ.begin(), occ.end());
    }

    std::sort(manifest.occurrences.begin(), manifest.occurrences.end(),
              [](const Occurrence& a, const Occurrence& b) {
                  return std::tie(a.path, a.offset) < std::tie(b.path, b.offset);
              });

    // Manifest and populations are written only after every file succeeded.
    auto write_list = [&](const char* name, std::vector<std::string> items) {
        std::sort(items.begin(), items.end());
        std::string body;
        for (const auto& s : items) {
            body += s;
            body += '\n';
        }
        write_file(out_dir / name, body);
    };
    write_list("users.txt", manifest.users);
    write_list("projects.txt", manifest.projects);
    write_list("ips.txt", manifest.ips);

    std::string tsv;
    for (const auto& o : manifest.occurrences) {
        tsv += o.path;
        tsv += '\t';
        tsv += std::to_string(o.offset);
        tsv += '\t';
        tsv += kind_tag(o.kind);
        tsv += '\t';
        tsv += o.token;
        tsv += '\n';
    }
    write_file(out_dir / "manifest.tsv", tsv);
    return manifest;
}

inline GroundTruthManifest load_manifest(const fs::path& dir) {
    GroundTruthManifest m;
    auto read_list = [&](const char* name, std::vector<std::string>& into) {
        std::string data = read_file(dir / name);
        LineSplit split = split_lines(data);
        for (auto l : split.lines)
            if (!l.empty()) into.emplace_back(l);
    };
    read_list("users.txt", m.users);
    read_list("projects.txt", m.projects);
    read_list("ips.txt", m.ips);

    std::string data = read_file(dir / "manifest.tsv");
    LineSplit split = split_lines(data);
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
        if (cols.size() != 4) throw config_error("malformed manifest row");
        auto kind = parse_kind_tag(cols[2]);
        if (!kind) throw config_error("bad kind tag in manifest");
        m.occurrences.push_back(
            Occurrence{std::string(cols[0]),
                       static_cast<std::size_t>(std::stoull(std::string(cols[1]))), *kind,
                       std::string(cols[3])});
    }
    return m;
}

// ---------------------------------------------------------------------------
// Corpus statistics.
// ---------------------------------------------------------------------------

struct CorpusStats {
    std::size_t file_count = 0;
    std::uint64_t total_lines = 0;
    std::vector<std::pair<std::string, std::uint64_t>> per_file_lines;  // sorted by path
    std::vector<std::string> errors;
};

inline CorpusStats corpus_stats(const fs::path& dir) {
    CorpusStats stats;
    for (const auto& rel : list_corpus_files(dir)) {
        try {
            std::uint64_t lines = count_lines_in_file(dir / rel);
            stats.per_file_lines.emplace_back(rel.string(), lines);
            stats.total_lines += lines;
            ++stats.file_count;
        } catch (const Error&) {
            stats.errors.push_back(rel.string());
        }
    }
    return stats;
}

}  // namespace plog
