#pragma once

// Scaling measurement harness. Reproduces the measurement methodology at
// desk scale: a serial baseline over growing line budgets with an OLS fit,
// strong scaling at fixed problem size, and weak scaling where the corpus
// fraction grows with the worker count. Wall-clock timing on the monotonic
// clock; one warm-up run is discarded and the median of the repetitions is
// reported, since desk-scale runs are short enough to be noisy.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "plogshield/core.hpp"
#include "plogshield/pipeline.hpp"
#include "plogshield/synth.hpp"

namespace plog {

enum class BenchMode { Baseline, Strong, Weak };

inline constexpr std::string_view bench_mode_tag(BenchMode m) {
    switch (m) {
        case BenchMode::Baseline: return "baseline";
        case BenchMode::Strong: return "strong";
        case BenchMode::Weak: return "weak";
    }
    return "?";
}

struct ScalingPoint {
    std::size_t workers = 1;
    std::uint64_t problem_lines = 0;
    double makespan_s = 0;  // median over the repetitions
    double speedup = 1;
    double efficiency = 1;
    std::vector<double> samples;  // the individual repetition makespans
};

struct OlsFit {
    double slope = 0;      // seconds per line
    double intercept = 0;  // seconds
    double r_squared = 0;
};

struct ScalingReport {
    BenchMode mode = BenchMode::Baseline;
    std::vector<ScalingPoint> points;
    std::optional<OlsFit> fit;  // Baseline only, needs >= 2 points
};

struct BenchOptions {
    std::size_t repetitions = 3;  // median reported
    std::size_t warmup = 1;
    fs::path work_dir;            // scratch space for run outputs
    fs::path master_list;         // project master list for the pipeline
    std::uint64_t seed = 1234;    // pipeline seed (timings only; outputs discarded)
    double shard_threshold = 3.0;
    double line_margin = 0.01;    // baseline subset tolerance, fraction of the step
};

// Ordinary least squares over (x, y); r_squared in [0, 1].
inline OlsFit fit_ols(const std::vector<std::pair<double, double>>& pts) {
    const double n = static_cast<double>(pts.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (auto [x, y] : pts) {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    double denom = n * sxx - sx * sx;
    OlsFit fit;
    fit.slope = denom == 0 ? 0 : (n * sxy - sx * sy) / denom;
    fit.intercept = (sy - fit.slope * sx) / n;
    double mean_y = sy / n;
    double ss_tot = 0, ss_res = 0;
    for (auto [x, y] : pts) {
        double pred = fit.slope * x + fit.intercept;
        ss_tot += (y - mean_y) * (y - mean_y);
        ss_res += (y - pred) * (y - pred);
    }
    fit.r_squared = ss_tot == 0 ? 1.0 : std::max(0.0, 1.0 - ss_res / ss_tot);
    return fit;
}

namespace detail {

inline double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Pipeline runs allocate and free millions of short strings; without
// returning freed arenas to the OS, later repetitions in the same process
// measure allocator fragmentation instead of the pipeline. Reset between
// timed runs.
inline void stabilize_heap() {
#if defined(__GLIBC__)
    ::malloc_trim(0);
#endif
}

// One configuration to measure: a worker budget over a unit list.
struct SeriesSpec {
    std::size_t workers = 1;
    std::vector<TaskUnit> units;
};

struct SeriesResult {
    double median_makespan = 0;
    std::vector<double> samples;  // post-warmup makespans, in measurement order
    RunReport last_report;
};

inline RunReport one_timed_run(const fs::path& corpus, const BenchOptions& opt,
                               const SeriesSpec& series) {
    static std::atomic<std::uint64_t> run_counter{0};
    fs::path out = opt.work_dir / ("run" + std::to_string(run_counter.fetch_add(1)));
    RunConfig config;
    config.input_dir = corpus;
    config.output_dir = out;
    config.mode = MapMode::Pseudonymize;
    config.workers = series.workers;
    config.seed = opt.seed;
    config.project_master_list = opt.master_list;
    config.map_out = out / "map.tsv";
    config.shard_threshold = opt.shard_threshold;
    RunReport report = run_pipeline_on(config, series.units);
    std::error_code ec;
    fs::remove_all(out, ec);
    stabilize_heap();
    return report;
}

// Measures every series in interleaved rounds, alternating the in-round
// direction, so that slow environmental drift (cache state, allocator,
// frequency scaling) biases no series relative to another. Warm-up rounds
// are discarded; the median of the remaining rounds is reported per
// series.
inline std::vector<SeriesResult> timed_series(const fs::path& corpus, const BenchOptions& opt,
                                              const std::vector<SeriesSpec>& series) {
    std::vector<SeriesResult> out(series.size());
    std::size_t rounds = opt.warmup + opt.repetitions;
    for (std::size_t round = 0; round < rounds; ++round) {
        for (std::size_t k = 0; k < series.size(); ++k) {
            std::size_t i = round % 2 == 0 ? k : series.size() - 1 - k;
            RunReport report = one_timed_run(corpus, opt, series[i]);
            if (round >= opt.warmup) out[i].samples.push_back(report.makespan_seconds);
            out[i].last_report = std::move(report);
        }
    }
    for (std::size_t i = 0; i < series.size(); ++i)
        out[i].median_makespan = median_of(out[i].samples);
    return out;
}

inline std::vector<TaskUnit> whole_file_units(const fs::path& corpus,
                                              const std::vector<std::string>& rels) {
    std::vector<TaskUnit> units;
    for (const auto& rel : rels) {
        std::uint64_t size = fs::file_size(corpus / rel);
        units.push_back(TaskUnit{fs::path(rel), {0, size}, 0, 1, size});
    }
    return units;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Baseline: serial runs over nested subsets of the corpus.
// ---------------------------------------------------------------------------

// Picks a nested subset of task units hitting `target_lines` within
// margin_fraction. Whole files are taken in path order; the last file may
// contribute a section-aligned prefix to land inside the margin.
inline std::vector<TaskUnit> select_line_subset(const fs::path& corpus,
                                                std::uint64_t target_lines,
                                                double margin_fraction = 0.01) {
    CorpusStats stats = corpus_stats(corpus);
    std::uint64_t margin = std::max<std::uint64_t>(
        1, static_cast<std::uint64_t>(margin_fraction * static_cast<double>(target_lines)));
    std::vector<TaskUnit> units;
    std::uint64_t total = 0;
    for (const auto& [rel, lines] : stats.per_file_lines) {
        if (total + margin >= target_lines) break;
        std::uint64_t size = fs::file_size(corpus / rel);
        if (total + lines <= target_lines + margin) {
            units.push_back(TaskUnit{fs::path(rel), {0, size}, 0, 1, size});
            total += lines;
            continue;
        }
        // Section-aligned prefix of this file to close the gap.
        std::string text = read_file(corpus / rel);
        std::uint64_t need = target_lines - total;
        std::size_t best_cut = 0;
        std::uint64_t best_lines = 0;
        std::uint64_t best_err = ~std::uint64_t{0};
        std::uint64_t lines_so_far = 0;
        std::size_t prev = 0;
        auto consider = [&](std::size_t cut) {
            lines_so_far += count_lines(std::string_view(text).substr(prev, cut - prev));
            prev = cut;
            std::uint64_t err = lines_so_far > need ? lines_so_far - need : need - lines_so_far;
            if (err < best_err) {
                best_err = err;
                best_cut = cut;
                best_lines = lines_so_far;
            }
        };
        for (const auto& [hour, span] : section_boundaries(text))
            if (span.begin > 0) consider(span.begin);
        consider(text.size());
        if (best_cut > 0) {
            units.push_back(TaskUnit{fs::path(rel), {0, best_cut}, 0, 1, best_cut});
            total += best_lines;
        }
        break;
    }
    if (total + margin < target_lines || total > target_lines + margin)
        throw config_error("corpus cannot honor a " + std::to_string(target_lines) +
                           "-line subset within the margin");
    return units;
}

inline ScalingReport run_baseline(const fs::path& corpus, const std::vector<std::uint64_t>& steps,
                                  const BenchOptions& opt) {
    ScalingReport report;
    report.mode = BenchMode::Baseline;
    fs::create_directories(opt.work_dir);
    std::vector<detail::SeriesSpec> series;
    for (std::uint64_t target : steps)
        series.push_back({1, select_line_subset(corpus, target, opt.line_margin)});
    auto results = detail::timed_series(corpus, opt, series);
    for (auto& r : results)
        report.points.push_back(ScalingPoint{1, r.last_report.lines_processed, r.median_makespan,
                                             1.0, 1.0, std::move(r.samples)});
    if (report.points.size() >= 2) {
        std::vector<std::pair<double, double>> xy;
        for (const auto& p : report.points)
            xy.emplace_back(static_cast<double>(p.problem_lines), p.makespan_s);
        report.fit = fit_ols(xy);
    }
    return report;
}

// ---------------------------------------------------------------------------
// Strong scaling: fixed problem, growing worker count.
// ---------------------------------------------------------------------------

inline ScalingReport run_strong_scaling(const fs::path& corpus,
                                        const std::vector<std::size_t>& worker_list,
                                        const BenchOptions& opt) {
    if (std::find(worker_list.begin(), worker_list.end(), std::size_t{1}) == worker_list.end())
        throw config_error("strong scaling needs workers=1 in the list");
    ScalingReport report;
    report.mode = BenchMode::Strong;
    fs::create_directories(opt.work_dir);
    std::vector<TaskUnit> units = build_task_units(corpus, opt.shard_threshold);

    std::vector<detail::SeriesSpec> series;
    for (std::size_t w : worker_list) series.push_back({w, units});
    auto results = detail::timed_series(corpus, opt, series);

    double t1 = 0;
    for (std::size_t i = 0; i < worker_list.size(); ++i) {
        if (worker_list[i] == 1) t1 = results[i].median_makespan;
        report.points.push_back(ScalingPoint{worker_list[i], results[i].last_report.lines_processed,
                                             results[i].median_makespan, 0, 0,
                                             std::move(results[i].samples)});
    }
    for (auto& p : report.points) {
        p.speedup = p.makespan_s > 0 ? t1 / p.makespan_s : 0;
        p.efficiency = p.speedup / static_cast<double>(p.workers);
    }
    return report;
}

// ---------------------------------------------------------------------------
// Weak scaling: the corpus fraction grows with the worker count.
// ---------------------------------------------------------------------------

// Greedy largest-first partition of the corpus files into `bins` groups of
// roughly equal line counts.
inline std::vector<std::vector<std::string>> partition_by_lines(const fs::path& corpus,
                                                                std::size_t bins) {
    CorpusStats stats = corpus_stats(corpus);
    if (stats.file_count < bins)
        throw config_error("corpus has fewer files than requested partitions");
    std::vector<std::pair<std::string, std::uint64_t>> files = stats.per_file_lines;
    std::sort(files.begin(), files.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    std::vector<std::vector<std::string>> out(bins);
    std::vector<std::uint64_t> load(bins, 0);
    for (const auto& [rel, lines] : files) {
        std::size_t target = 0;
        for (std::size_t b = 1; b < bins; ++b)
            if (load[b] < load[target]) target = b;
        out[target].push_back(rel);
        load[target] += lines;
    }
    return out;
}

inline ScalingReport run_weak_scaling(const fs::path& corpus,
                                      const std::vector<std::size_t>& worker_list,
                                      const BenchOptions& opt) {
    if (std::find(worker_list.begin(), worker_list.end(), std::size_t{1}) == worker_list.end())
        throw config_error("weak scaling needs workers=1 in the list");
    ScalingReport report;
    report.mode = BenchMode::Weak;
    fs::create_directories(opt.work_dir);
    std::size_t max_workers = *std::max_element(worker_list.begin(), worker_list.end());
    auto partitions = partition_by_lines(corpus, max_workers);

    std::vector<detail::SeriesSpec> series;
    for (std::size_t w : worker_list) {
        std::vector<std::string> rels;
        for (std::size_t b = 0; b < w && b < partitions.size(); ++b)
            rels.insert(rels.end(), partitions[b].begin(), partitions[b].end());
        series.push_back({w, detail::whole_file_units(corpus, rels)});
    }
    auto results = detail::timed_series(corpus, opt, series);

    double t11 = 0;
    for (std::size_t i = 0; i < worker_list.size(); ++i) {
        if (worker_list[i] == 1) t11 = results[i].median_makespan;
        report.points.push_back(ScalingPoint{worker_list[i], results[i].last_report.lines_processed,
                                             results[i].median_makespan, 0, 0,
                                             std::move(results[i].samples)});
    }
    for (auto& p : report.points) {
        p.efficiency = p.makespan_s > 0 ? t11 / p.makespan_s : 0;
        p.speedup = p.efficiency * static_cast<double>(p.workers);
    }
    return report;
}

// ---------------------------------------------------------------------------
// Report output: CSV plus a gnuplot-friendly .dat twin.
// ---------------------------------------------------------------------------

inline std::string scaling_csv(const ScalingReport& r) {
    std::string out = "mode,workers,lines,makespan_s,speedup,efficiency\n";
    char buf[160];
    for (const auto& p : r.points) {
        std::snprintf(buf, sizeof(buf), "%s,%zu,%llu,%.6f,%.4f,%.4f\n",
                      std::string(bench_mode_tag(r.mode)).c_str(), p.workers,
                      static_cast<unsigned long long>(p.problem_lines), p.makespan_s, p.speedup,
                      p.efficiency);
        out += buf;
    }
    if (r.fit) {
        std::snprintf(buf, sizeof(buf), "# ols slope=%.9g intercept=%.6f r_squared=%.6f\n",
                      r.fit->slope, r.fit->intercept, r.fit->r_squared);
        out += buf;
    }
    return out;
}

inline std::string scaling_dat(const ScalingReport& r) {
    std::string out = "# workers lines makespan_s speedup efficiency\n";
    char buf[160];
    for (const auto& p : r.points) {
        std::snprintf(buf, sizeof(buf), "%zu %llu %.6f %.4f %.4f\n", p.workers,
                      static_cast<unsigned long long>(p.problem_lines), p.makespan_s, p.speedup,
                      p.efficiency);
        out += buf;
    }
    return out;
}

}  // namespace plog
