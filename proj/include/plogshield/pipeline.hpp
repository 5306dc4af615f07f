#pragma once

// End-to-end workflows.
//
// Pseudonymize mode runs three logical branches (users, IPs, projects)
// with a hard phase barrier per branch: extract over all task units,
// merge, build one corpus-wide map, then substitute over all task units.
// The branches share the extraction pass and their maps merge into one
// combined plan, so each file is written exactly once; equivalence with
// sequential per-branch application is covered by tests. Output is
// byte-identical for any worker count given a fixed seed.
//
// Anonymize mode runs an independent pipeline per file with a map drawn
// from OS entropy and never persisted: the same user in two files gets
// two unrelated substitutes, which is precisely why release pipelines
// prefer pseudonymization.
//
// Files larger than shard_threshold x median split into section-aligned
// task units so a few oversized files cannot dominate the end of the run.
// Units are dispatched largest first from a shared queue; workers never
// idle while units remain.

#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "plogshield/core.hpp"
#include "plogshield/corpus.hpp"
#include "plogshield/extract.hpp"
#include "plogshield/map_store.hpp"
#include "plogshield/pseudonym.hpp"
#include "plogshield/substitute.hpp"
#include "plogshield/synth.hpp"

namespace plog {

struct RunConfig {
    fs::path input_dir;
    fs::path output_dir;
    MapMode mode = MapMode::Pseudonymize;
    std::size_t workers = 1;
    std::optional<std::uint64_t> seed;
    fs::path project_master_list;
    fs::path map_out;  // Pseudonymize: where the map is written
    double shard_threshold = 3.0;
    std::optional<fs::path> denylist_path;
};

struct TaskUnit {
    fs::path rel_path;
    ByteSpan span;  // byte range within the file
    std::size_t shard_index = 0;
    std::size_t shard_count = 1;
    std::uint64_t weight = 0;  // bytes, scheduling key
};

struct PhaseTiming {
    std::string name;
    double start_s = 0;
    double end_s = 0;
    double duration() const { return end_s - start_s; }
};

struct RunReport {
    double makespan_seconds = 0;
    std::vector<PhaseTiming> phases;
    std::size_t files_processed = 0;
    std::size_t units_processed = 0;
    std::uint64_t lines_processed = 0;
    std::array<std::uint64_t, 3> replacements{0, 0, 0};  // user, ip, project
    std::vector<std::string> warnings;
};

// ---------------------------------------------------------------------------
// Sharding and scheduling.
// ---------------------------------------------------------------------------

// Splits one file into section-aligned task units. Files at or below
// threshold x median stay whole; larger files split into
// ceil(size / (threshold x median)) units, cut at section starts.
inline std::vector<TaskUnit> shard_file(const fs::path& path, const fs::path& rel_path,
                                        double threshold, std::uint64_t median_size) {
    std::error_code ec;
    std::uint64_t size = fs::file_size(path, ec);
    if (ec) throw io_error("cannot stat: " + path.string());
    std::vector<TaskUnit> units;
    double cap = threshold * static_cast<double>(median_size);
    if (median_size == 0 || static_cast<double>(size) <= cap || size == 0) {
        units.push_back(TaskUnit{rel_path, {0, size}, 0, 1, size});
        return units;
    }
    std::size_t want = static_cast<std::size_t>(std::ceil(static_cast<double>(size) / cap));

    std::string text = read_file(path);
    std::vector<std::size_t> starts;
    for (const auto& [hour, span] : section_boundaries(text)) starts.push_back(span.begin);

    // Cut points at the section start nearest to each ideal boundary.
    std::vector<std::size_t> cuts{0};
    for (std::size_t i = 1; i < want; ++i) {
        std::size_t ideal = i * size / want;
        auto it = std::lower_bound(starts.begin(), starts.end(), ideal);
        if (it == starts.end()) break;
        if (*it > cuts.back()) cuts.push_back(*it);
    }
    cuts.push_back(size);
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
        units.push_back(TaskUnit{rel_path,
                                 {cuts[i], cuts[i + 1]},
                                 i,
                                 cuts.size() - 1,
                                 cuts[i + 1] - cuts[i]});
    return units;
}

// Deterministic ordering: heaviest first, then path, then shard index.
inline void sort_units_for_dispatch(std::vector<TaskUnit>& units) {
    std::sort(units.begin(), units.end(), [](const TaskUnit& a, const TaskUnit& b) {
        if (a.weight != b.weight) return a.weight > b.weight;
        if (a.rel_path != b.rel_path) return a.rel_path.string() < b.rel_path.string();
        return a.shard_index < b.shard_index;
    });
}

struct Assignment {
    std::vector<std::vector<std::size_t>> per_worker;  // unit indices in dispatch order
    double predicted_makespan = 0;                     // in weight units
};

// Static largest-first list schedule (LPT): the planning view of what the
// dynamic pool does with identical per-unit costs.
inline Assignment schedule(const std::vector<TaskUnit>& units, std::size_t workers) {
    if (workers == 0) throw config_error("workers must be >= 1");
    std::vector<std::size_t> order(units.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (units[a].weight != units[b].weight) return units[a].weight > units[b].weight;
        if (units[a].rel_path != units[b].rel_path)
            return units[a].rel_path.string() < units[b].rel_path.string();
        return units[a].shard_index < units[b].shard_index;
    });
    Assignment out;
    out.per_worker.assign(workers, {});
    std::vector<double> load(workers, 0);
    for (std::size_t idx : order) {
        std::size_t target = 0;
        for (std::size_t w = 1; w < workers; ++w)
            if (load[w] < load[target]) target = w;
        out.per_worker[target].push_back(idx);
        load[target] += static_cast<double>(units[idx].weight);
    }
    out.predicted_makespan = *std::max_element(load.begin(), load.end());
    return out;
}

namespace detail {

// Dynamic largest-first dispatch: units must already be sorted heaviest
// first; free workers pull the next unit, so no worker idles while work
// remains. The thread count is capped at the hardware concurrency: the
// work is CPU-bound, so threads beyond physical cores only add scheduling
// overhead without changing output. fn may throw; the first exception
// wins and is rethrown.
template <typename Fn>
inline void run_units_parallel(std::size_t unit_count, std::size_t workers, Fn&& fn) {
    std::size_t hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = workers;
    workers = std::min(workers, hw);
    if (workers <= 1 || unit_count <= 1) {
        for (std::size_t i = 0; i < unit_count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    std::size_t n_threads = std::min(workers, unit_count);
    pool.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) {
        pool.emplace_back([&] {
            while (true) {
                std::size_t i = next.fetch_add(1);
                if (i >= unit_count) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Unit construction.
// ---------------------------------------------------------------------------

inline std::vector<TaskUnit> build_task_units(const fs::path& input_dir, double shard_threshold,
                                              std::vector<std::string>* warnings = nullptr) {
    std::vector<fs::path> files = list_corpus_files(input_dir);
    if (files.empty()) throw config_error("input directory holds no snapshot files: " +
                                          input_dir.string());
    std::vector<std::uint64_t> sizes;
    sizes.reserve(files.size());
    for (const auto& rel : files) {
        std::error_code ec;
        std::uint64_t s = fs::file_size(input_dir / rel, ec);
        if (ec) {
            if (warnings) warnings->push_back("unreadable: " + rel.string());
            s = 0;
        }
        sizes.push_back(s);
    }
    std::vector<std::uint64_t> sorted = sizes;
    std::sort(sorted.begin(), sorted.end());
    std::uint64_t median = sorted.empty() ? 0 : sorted[sorted.size() / 2];

    std::vector<TaskUnit> units;
    for (std::size_t i = 0; i < files.size(); ++i) {
        try {
            auto file_units = shard_file(input_dir / files[i], files[i], shard_threshold, median);
            units.insert(units.end(), file_units.begin(), file_units.end());
        } catch (const Error& e) {
            if (warnings) warnings->push_back("skipped " + files[i].string() + ": " + e.what());
        }
    }
    sort_units_for_dispatch(units);
    return units;
}

// ---------------------------------------------------------------------------
// Pipeline.
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::string> load_denylist(const std::optional<fs::path>& path) {
    if (!path) return default_denylist();
    std::string data = read_file(*path);
    LineSplit split = split_lines(data);
    std::vector<std::string> out;
    for (auto l : split.lines)
        if (!l.empty()) out.emplace_back(l);
    return out;
}

inline void check_output_collisions(const fs::path& out_dir,
                                    const std::vector<TaskUnit>& units) {
    std::set<std::string> rels;
    for (const auto& u : units) rels.insert(u.rel_path.string());
    for (const auto& rel : rels) {
        if (fs::exists(out_dir / rel))
            throw config_error("output collision, refusing to overwrite: " +
                               (out_dir / rel).string());
    }
}

// Substitutes every unit and writes the output tree. Shard outputs are
// reassembled in shard order, so the bytes are independent of scheduling;
// whichever worker finishes the last shard of a file performs the write.
// A file with any failed unit is skipped whole and recorded.
inline void substitute_units(const fs::path& input_dir, const fs::path& output_dir,
                             const std::vector<TaskUnit>& units, const SubstitutionPlan& plan,
                             std::size_t workers, RunReport& report,
                             const std::vector<bool>& unit_ok) {
    struct FileJob {
        std::vector<std::size_t> unit_idxs;  // in shard order
        std::atomic<std::size_t> remaining{0};
        std::atomic<bool> failed{false};
    };
    std::map<std::string, std::size_t> job_of;
    std::vector<std::unique_ptr<FileJob>> jobs;
    for (std::size_t i = 0; i < units.size(); ++i) {
        std::string rel = units[i].rel_path.string();
        auto [it, fresh] = job_of.emplace(rel, jobs.size());
        if (fresh) jobs.push_back(std::make_unique<FileJob>());
        FileJob& job = *jobs[it->second];
        job.unit_idxs.push_back(i);
        if (unit_ok[i])
            job.remaining.fetch_add(1, std::memory_order_relaxed);
        else
            job.failed.store(true, std::memory_order_relaxed);
    }
    for (auto& job : jobs)
        std::sort(job->unit_idxs.begin(), job->unit_idxs.end(), [&](std::size_t a, std::size_t b) {
            return units[a].shard_index < units[b].shard_index;
        });

    std::vector<ApplyResult> results(units.size());
    std::mutex warn_mutex;
    std::vector<std::string> warnings;

    run_units_parallel(units.size(), workers, [&](std::size_t i) {
        if (!unit_ok[i]) return;
        FileJob& job = *jobs[job_of.at(units[i].rel_path.string())];
        try {
            std::string text = read_file_span(input_dir / units[i].rel_path, units[i].span);
            SnapshotFile parsed = parse_snapshot(text, units[i].rel_path.string());
            results[i] = apply_plan_structured(parsed, plan);
        } catch (const Error& e) {
            job.failed.store(true, std::memory_order_release);
            std::lock_guard<std::mutex> lock(warn_mutex);
            warnings.push_back("skipped " + units[i].rel_path.string() + ": " + e.what());
        }
        if (job.remaining.fetch_sub(1, std::memory_order_acq_rel) == 1 &&
            !job.failed.load(std::memory_order_acquire)) {
            std::string assembled;
            for (std::size_t u : job.unit_idxs) assembled += results[u].text;
            fs::path target = output_dir / units[i].rel_path;
            fs::create_directories(target.parent_path());
            write_file(target, assembled);
        }
    });

    report.warnings.insert(report.warnings.end(), warnings.begin(), warnings.end());
    for (const auto& job : jobs)
        if (!job->unit_idxs.empty() && !job->failed.load()) ++report.files_processed;
    for (std::size_t i = 0; i < units.size(); ++i) {
        if (!unit_ok[i]) continue;
        if (jobs[job_of.at(units[i].rel_path.string())]->failed.load()) continue;
        auto by_kind = counts_by_kind(plan, results[i].counts);
        for (std::size_t k = 0; k < 3; ++k) report.replacements[k] += by_kind[k];
        ++report.units_processed;
    }
}

}  // namespace detail

// Pseudonymize/Anonymize over an explicit unit list (the benchmark harness
// feeds subsets); run_pipeline builds the units for the whole corpus.
inline RunReport run_pipeline_on(const RunConfig& config, std::vector<TaskUnit> units) {
    if (config.workers == 0) throw config_error("workers must be >= 1");
    auto t0 = std::chrono::steady_clock::now();
    RunReport report;

    MasterList master = load_master_list(config.project_master_list);
    std::vector<std::string> denylist = detail::load_denylist(config.denylist_path);
    sort_units_for_dispatch(units);
    detail::check_output_collisions(config.output_dir, units);
    fs::create_directories(config.output_dir);
    std::vector<bool> unit_ok(units.size(), true);

    if (config.mode == MapMode::Pseudonymize) {
        // Phase 1: extraction over all units.
        double extract_start = detail::seconds_since(t0);
        std::vector<FileExtract> extracts(units.size());
        std::vector<std::uint64_t> unit_lines(units.size(), 0);
        std::mutex warn_mutex;
        detail::run_units_parallel(units.size(), config.workers, [&](std::size_t i) {
            try {
                std::string text = read_file_span(config.input_dir / units[i].rel_path, units[i].span);
                SnapshotFile parsed = parse_snapshot(text, units[i].rel_path.string());
                extracts[i] = extract_file(parsed, text, &master);
                unit_lines[i] = parsed.line_count;
            } catch (const Error& e) {
                unit_ok[i] = false;
                std::lock_guard<std::mutex> lock(warn_mutex);
                report.warnings.push_back("skipped " + units[i].rel_path.string() + ": " + e.what());
            }
        });
        std::vector<FileExtract> good;
        good.reserve(extracts.size());
        for (std::size_t i = 0; i < extracts.size(); ++i)
            if (unit_ok[i]) good.push_back(std::move(extracts[i]));
        EntitySet entities = merge_entity_sets(good);
        // The map file is the only artifact allowed to carry originals;
        // run reports only ever see counts.
        if (!entities.warnings.empty())
            report.warnings.push_back(std::to_string(entities.warnings.size()) +
                                      " ambiguous-truncation warning(s); run `extract` for the "
                                      "entity-level detail");
        for (auto n : unit_lines) report.lines_processed += n;
        report.phases.push_back({"extract", extract_start, detail::seconds_since(t0)});

        // Phase 2: one corpus-wide map; the barrier before substitution.
        double map_start = detail::seconds_since(t0);
        PseudonymMap map = build_map(entities, config.seed, MapMode::Pseudonymize);
        fs::path map_path = config.map_out.empty() ? config.output_dir / "map.tsv" : config.map_out;
        save_map(map, map_path);
        report.phases.push_back({"map", map_start, detail::seconds_since(t0)});

        // Phase 3: substitution over all units.
        double subst_start = detail::seconds_since(t0);
        SubstitutionPlan plan = compile_plan(map, denylist);
        detail::substitute_units(config.input_dir, config.output_dir, units, plan, config.workers,
                                 report, unit_ok);
        report.phases.push_back({"substitute", subst_start, detail::seconds_since(t0)});
    } else {
        // Anonymize: an independent pipeline per unit, nothing persisted.
        double anon_start = detail::seconds_since(t0);
        std::mutex agg_mutex;
        detail::run_units_parallel(units.size(), config.workers, [&](std::size_t i) {
            std::string text;
            SnapshotFile parsed;
            try {
                text = read_file_span(config.input_dir / units[i].rel_path, units[i].span);
                parsed = parse_snapshot(text, units[i].rel_path.string());
            } catch (const Error& e) {
                std::lock_guard<std::mutex> lock(agg_mutex);
                unit_ok[i] = false;
                report.warnings.push_back("skipped " + units[i].rel_path.string() + ": " + e.what());
                return;
            }
            FileExtract fx = extract_file(parsed, text, &master);
            EntitySet entities = merge_entity_sets({fx});
            PseudonymMap map = build_map(entities, std::nullopt, MapMode::Anonymize);
            SubstitutionPlan plan = compile_plan(map, denylist);
            ApplyResult result = apply_plan_structured(parsed, plan);
            fs::path target = config.output_dir / units[i].rel_path;
            fs::create_directories(target.parent_path());
            write_file(target, result.text);
            auto by_kind = counts_by_kind(plan, result.counts);
            std::lock_guard<std::mutex> lock(agg_mutex);
            for (std::size_t k = 0; k < 3; ++k) report.replacements[k] += by_kind[k];
            report.lines_processed += parsed.line_count;
            ++report.files_processed;
            ++report.units_processed;
        });
        report.phases.push_back({"anonymize", anon_start, detail::seconds_since(t0)});
    }

    report.makespan_seconds = detail::seconds_since(t0);
    return report;
}

inline RunReport run_pipeline(const RunConfig& config) {
    std::vector<std::string> warnings;
    // Anonymize keeps whole files: each file is its own pipeline.
    double threshold = config.mode == MapMode::Pseudonymize
                           ? config.shard_threshold
                           : std::numeric_limits<double>::infinity();
    std::vector<TaskUnit> units = build_task_units(config.input_dir, threshold, &warnings);
    RunReport report = run_pipeline_on(config, std::move(units));
    report.warnings.insert(report.warnings.end(), warnings.begin(), warnings.end());
    return report;
}

// Reverse-pseudonymization: apply the inverted map across a corpus.
inline RunReport run_reverse(const fs::path& input_dir, const fs::path& output_dir,
                             const fs::path& map_path, std::size_t workers,
                             double shard_threshold = 3.0) {
    auto t0 = std::chrono::steady_clock::now();
    RunReport report;
    PseudonymMap inverted = invert_map(load_map(map_path));
    SubstitutionPlan plan = compile_plan(inverted);
    std::vector<TaskUnit> units = build_task_units(input_dir, shard_threshold, &report.warnings);
    detail::check_output_collisions(output_dir, units);
    fs::create_directories(output_dir);
    std::vector<bool> unit_ok(units.size(), true);
    double start = detail::seconds_since(t0);
    detail::substitute_units(input_dir, output_dir, units, plan, workers, report, unit_ok);
    report.phases.push_back({"reverse", start, detail::seconds_since(t0)});
    report.makespan_seconds = detail::seconds_since(t0);
    return report;
}

// ---------------------------------------------------------------------------
// Zero-leak audit.
// ---------------------------------------------------------------------------

struct LeakHit {
    std::string path;
    std::size_t line_no = 0;  // 1-based within the file
    std::string token;
    PiiKind kind = PiiKind::User;
};

struct AuditReport {
    std::vector<LeakHit> hits;        // capped at max_hits for reporting
    std::uint64_t total_hits = 0;     // full count
    std::size_t files_scanned = 0;
    // Boundary-delimited occurrences of denylisted user tokens outside
    // user columns / path segments (e.g. "joe" the editor). Informational.
    std::uint64_t shadowed = 0;

    bool clean() const { return total_hits == 0; }
};

// Scans a corpus for boundary-delimited occurrences of any entity token.
// Users and IPs match exactly (canonicals and variants), projects match
// case-insensitively. Denylisted user tokens count as leaks only in user
// columns and path segments, matching the substitution policy.
inline AuditReport audit_corpus(const fs::path& dir, const EntitySet& entities,
                                const std::vector<std::string>& denylist = default_denylist(),
                                std::size_t max_hits = 100) {
    std::set<std::string> user_tokens;
    for (const auto& e : entities.users) {
        user_tokens.insert(e.canonical);
        for (const auto& v : e.variants) user_tokens.insert(v);
    }
    std::set<std::string> ip_tokens;
    for (const auto& e : entities.ips) ip_tokens.insert(e.canonical);
    std::set<std::string> project_lower;
    for (const auto& e : entities.projects) project_lower.insert(to_lower_copy(e.canonical));
    std::set<std::string> deny(denylist.begin(), denylist.end());

    AuditReport report;
    for (const auto& rel : list_corpus_files(dir)) {
        std::string text = read_file(dir / rel);
        SnapshotFile parsed = parse_snapshot(text, rel.string());
        std::size_t line_no = 0;
        visit_lines(parsed, [&](const std::string& line, const LineInfo& info) {
            ++line_no;
            std::size_t fidx = 0;
            const auto& fields = *info.fields;
            scan_tokens(line, [&](Token t) {
                while (fidx < fields.size() && fields[fidx].span.end <= t.span.begin) ++fidx;
                if (fidx >= fields.size()) return;
                std::string tok(line.data() + t.span.begin, t.span.size());
                PiiKind kind;
                if (t.is_ipv4) {
                    if (!ip_tokens.count(tok)) return;
                    kind = PiiKind::Ip;
                } else if (user_tokens.count(tok)) {
                    kind = PiiKind::User;
                    if (deny.count(tok)) {
                        bool in_user_col = info.user_field && fidx == *info.user_field &&
                                           t.span == fields[fidx].span;
                        if (!in_user_col && !token_is_path_segment(line, fields[fidx], t.span)) {
                            ++report.shadowed;
                            return;
                        }
                    }
                } else if (project_lower.count(to_lower_copy(tok))) {
                    kind = PiiKind::Project;
                } else {
                    return;
                }
                ++report.total_hits;
                if (max_hits == 0 || report.hits.size() < max_hits)
                    report.hits.push_back(LeakHit{rel.string(), line_no, tok, kind});
            });
        });
        ++report.files_scanned;
    }
    return report;
}

// ---------------------------------------------------------------------------
// Serial-time extrapolation (the baseline study's arithmetic).
// ---------------------------------------------------------------------------

struct RateAnchor {
    std::uint64_t lines = 0;
    double seconds = 0;
};

inline double estimate_serial_time(std::uint64_t lines, RateAnchor anchor) {
    if (anchor.lines == 0) throw config_error("rate anchor needs lines > 0");
    return static_cast<double>(lines) * anchor.seconds / static_cast<double>(anchor.lines);
}

// ---------------------------------------------------------------------------
// Report serialization.
// ---------------------------------------------------------------------------

inline std::string report_tsv(const RunReport& r) {
    std::string out = "phase\tstart_s\tend_s\tduration_s\n";
    char buf[160];
    for (const auto& p : r.phases) {
        std::snprintf(buf, sizeof(buf), "%s\t%.6f\t%.6f\t%.6f\n", p.name.c_str(), p.start_s,
                      p.end_s, p.duration());
        out += buf;
    }
    std::snprintf(buf, sizeof(buf), "total\t0.000000\t%.6f\t%.6f\n", r.makespan_seconds,
                  r.makespan_seconds);
    out += buf;
    return out;
}

inline std::string report_summary(const RunReport& r) {
    char buf[256];
    std::string out;
    std::snprintf(buf, sizeof(buf), "makespan_seconds: %.3f\n", r.makespan_seconds);
    out += buf;
    for (const auto& p : r.phases) {
        std::snprintf(buf, sizeof(buf), "phase %-12s %.3f s\n", p.name.c_str(), p.duration());
        out += buf;
    }
    std::snprintf(buf, sizeof(buf),
                  "files: %zu  units: %zu  lines: %llu\nreplacements: user=%llu ip=%llu "
                  "project=%llu\nwarnings: %zu\n",
                  r.files_processed, r.units_processed,
                  static_cast<unsigned long long>(r.lines_processed),
                  static_cast<unsigned long long>(r.replacements[0]),
                  static_cast<unsigned long long>(r.replacements[1]),
                  static_cast<unsigned long long>(r.replacements[2]), r.warnings.size());
    out += buf;
    return out;
}

}  // namespace plog
