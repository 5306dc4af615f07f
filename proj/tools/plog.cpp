// plog: operator CLI for the plogshield pseudonymization engine.
//
// Exit codes: 0 ok, 1 usage, 2 configuration, 3 I/O, 4 leak-check failure,
// 5 pseudonym capacity exhausted.

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "plogshield/plogshield.hpp"

namespace {

std::size_t default_workers() {
    if (const char* env = std::getenv("PLOG_WORKERS")) {
        char* end = nullptr;
        unsigned long v = std::strtoul(env, &end, 10);
        if (end != env && v >= 1) return static_cast<std::size_t>(v);
    }
    return 1;
}

std::vector<std::size_t> parse_worker_list(const std::string& s) {
    std::vector<std::size_t> out;
    std::size_t pos = 0;
    while (pos < s.size()) {
        std::size_t comma = s.find(',', pos);
        if (comma == std::string::npos) comma = s.size();
        std::string part = s.substr(pos, comma - pos);
        if (!part.empty()) out.push_back(std::stoull(part));
        pos = comma + 1;
    }
    if (out.empty()) throw plog::config_error("empty worker list");
    return out;
}

std::vector<std::uint64_t> parse_step_list(const std::string& s) {
    std::vector<std::uint64_t> out;
    std::size_t pos = 0;
    while (pos < s.size()) {
        std::size_t comma = s.find(',', pos);
        if (comma == std::string::npos) comma = s.size();
        std::string part = s.substr(pos, comma - pos);
        if (!part.empty()) out.push_back(std::stoull(part));
        pos = comma + 1;
    }
    return out;
}

void print_report(const plog::RunReport& report) {
    std::cerr << plog::report_summary(report);
    for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"plogshield: parallel pseudonymization for login-node snapshot logs"};
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "generate a seeded synthetic corpus");
    plog::CorpusSpec spec;
    std::string gen_out;
    gen->add_option("--files", spec.n_files, "number of snapshot files")->required();
    gen->add_option("--lines", spec.lines_per_file, "target lines per file")->required();
    gen->add_option("--users", spec.n_users, "user population size");
    gen->add_option("--projects", spec.n_projects, "project population size");
    gen->add_option("--ips", spec.n_ips, "IP population size");
    gen->add_option("--stragglers", spec.n_stragglers, "number of oversized files");
    gen->add_option("--tail-mult", spec.long_tail_multiplier, "straggler size multiplier");
    gen->add_option("--seed", spec.seed, "corpus seed");
    gen->add_option("--out", gen_out, "output directory")->required();

    // extract
    auto* extract = app.add_subcommand("extract", "extract PII entities from a corpus");
    std::string ex_in, ex_projects, ex_out;
    extract->add_option("--in", ex_in, "corpus directory")->required();
    extract->add_option("--projects", ex_projects, "project master list file")->required();
    extract->add_option("--out", ex_out, "entities TSV output")->required();

    // pseudonymize
    auto* pseu = app.add_subcommand("pseudonymize", "pseudonymize a corpus (reversible)");
    std::string ps_in, ps_out, ps_projects, ps_map, ps_denylist;
    std::size_t ps_workers = default_workers();
    std::uint64_t ps_seed = 0;
    bool ps_has_seed = false;
    double ps_threshold = 3.0;
    pseu->add_option("--in", ps_in, "input corpus directory")->required();
    pseu->add_option("--out", ps_out, "output corpus directory")->required();
    pseu->add_option("--projects", ps_projects, "project master list file");
    pseu->add_option("--map", ps_map, "pseudonym map output path")->required();
    pseu->add_option("--workers", ps_workers, "worker count");
    auto* seed_opt = pseu->add_option("--seed", ps_seed, "map seed (deterministic output)");
    pseu->add_option("--denylist", ps_denylist, "command-name denylist file");
    pseu->add_option("--shard-threshold", ps_threshold, "split files above N x median size");

    // anonymize
    auto* anon = app.add_subcommand("anonymize", "anonymize a corpus (no map, not reversible)");
    std::string an_in, an_out, an_projects;
    std::size_t an_workers = default_workers();
    anon->add_option("--in", an_in, "input corpus directory")->required();
    anon->add_option("--out", an_out, "output corpus directory")->required();
    anon->add_option("--projects", an_projects, "project master list file");
    anon->add_option("--workers", an_workers, "worker count");

    // reverse
    auto* rev = app.add_subcommand("reverse", "reverse-pseudonymize using a saved map");
    std::string rv_in, rv_map, rv_out;
    std::size_t rv_workers = default_workers();
    rev->add_option("--in", rv_in, "pseudonymized corpus directory")->required();
    rev->add_option("--map", rv_map, "pseudonym map path")->required();
    rev->add_option("--out", rv_out, "output corpus directory")->required();
    rev->add_option("--workers", rv_workers, "worker count");

    // verify
    auto* verify = app.add_subcommand("verify", "zero-leak audit against an entity set");
    std::string vf_in, vf_entities, vf_denylist;
    verify->add_option("--in", vf_in, "corpus directory to audit")->required();
    verify->add_option("--entities", vf_entities, "entities TSV from `extract`")->required();
    verify->add_option("--denylist", vf_denylist, "command-name denylist file");

    // bench
    auto* bench = app.add_subcommand("bench", "scaling benchmarks over a corpus");
    std::string bn_mode, bn_in, bn_workers = "1,2,4,8", bn_out, bn_projects, bn_steps;
    bench->add_option("--mode", bn_mode, "baseline|strong|weak")->required();
    bench->add_option("--in", bn_in, "corpus directory")->required();
    bench->add_option("--workers", bn_workers, "comma-separated worker counts");
    bench->add_option("--out", bn_out, "report CSV path")->required();
    bench->add_option("--projects", bn_projects, "project master list (default <in>/projects.txt)");
    bench->add_option("--steps", bn_steps,
                      "baseline line budgets, comma-separated (default 10k..100k step 10k)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }

    try {
        if (gen->parsed()) {
            plog::GroundTruthManifest manifest = plog::generate_corpus(spec, gen_out);
            plog::CorpusStats stats = plog::corpus_stats(gen_out);
            std::cerr << "generated " << stats.file_count << " files, " << stats.total_lines
                      << " lines, " << manifest.occurrences.size() << " planted occurrences\n";
            return 0;
        }

        if (extract->parsed()) {
            plog::MasterList master = plog::load_master_list(ex_projects);
            std::vector<plog::FileExtract> partials;
            for (const auto& rel : plog::list_corpus_files(ex_in)) {
                std::string text = plog::read_file(plog::fs::path(ex_in) / rel);
                plog::SnapshotFile parsed = plog::parse_snapshot(text, rel.string());
                partials.push_back(plog::extract_file(parsed, text, &master));
            }
            plog::EntitySet entities = plog::merge_entity_sets(partials);
            plog::save_entity_set(entities, ex_out);
            std::cerr << "extracted " << entities.users.size() << " users, "
                      << entities.ips.size() << " ips, " << entities.projects.size()
                      << " projects\n";
            for (const auto& w : entities.warnings) std::cerr << "warning: " << w << "\n";
            return 0;
        }

        if (pseu->parsed()) {
            if (ps_projects.empty())
                throw plog::config_error("pseudonymize requires --projects (master list)");
            ps_has_seed = seed_opt->count() > 0;
            plog::RunConfig config;
            config.input_dir = ps_in;
            config.output_dir = ps_out;
            config.mode = plog::MapMode::Pseudonymize;
            config.workers = ps_workers;
            if (ps_has_seed) config.seed = ps_seed;
            config.project_master_list = ps_projects;
            config.map_out = ps_map;
            config.shard_threshold = ps_threshold;
            if (!ps_denylist.empty()) config.denylist_path = ps_denylist;
            plog::RunReport report = plog::run_pipeline(config);
            plog::write_file(plog::fs::path(ps_out) / "run_report.tsv", plog::report_tsv(report));
            print_report(report);
            return 0;
        }

        if (anon->parsed()) {
            if (an_projects.empty())
                throw plog::config_error("anonymize requires --projects (master list)");
            plog::RunConfig config;
            config.input_dir = an_in;
            config.output_dir = an_out;
            config.mode = plog::MapMode::Anonymize;
            config.workers = an_workers;
            config.project_master_list = an_projects;
            plog::RunReport report = plog::run_pipeline(config);
            plog::write_file(plog::fs::path(an_out) / "run_report.tsv", plog::report_tsv(report));
            print_report(report);
            return 0;
        }

        if (rev->parsed()) {
            plog::RunReport report = plog::run_reverse(rv_in, rv_out, rv_map, rv_workers);
            print_report(report);
            return 0;
        }

        if (verify->parsed()) {
            plog::EntitySet entities = plog::load_entity_set(vf_entities);
            std::vector<std::string> denylist = plog::default_denylist();
            if (!vf_denylist.empty()) {
                denylist.clear();
                std::string data = plog::read_file(vf_denylist);
                for (auto l : plog::split_lines(data).lines)
                    if (!l.empty()) denylist.emplace_back(l);
            }
            plog::AuditReport audit = plog::audit_corpus(vf_in, entities, denylist);
            std::cerr << "scanned " << audit.files_scanned << " files, " << audit.total_hits
                      << " leaks, " << audit.shadowed << " denylist-shadowed occurrences\n";
            for (const auto& hit : audit.hits)
                std::cerr << "leak: " << hit.path << ":" << hit.line_no << " "
                          << plog::kind_tag(hit.kind) << " '" << hit.token << "'\n";
            return audit.clean() ? 0 : 4;
        }

        if (bench->parsed()) {
            plog::BenchOptions opt;
            opt.master_list = bn_projects.empty()
                                  ? plog::fs::path(bn_in) / "projects.txt"
                                  : plog::fs::path(bn_projects);
            opt.work_dir = plog::fs::path(bn_out).parent_path().empty()
                               ? plog::fs::path("plog_bench_work")
                               : plog::fs::path(bn_out).parent_path() / "plog_bench_work";
            plog::ScalingReport report;
            if (bn_mode == "baseline") {
                std::vector<std::uint64_t> steps = parse_step_list(bn_steps);
                if (steps.empty())
                    for (std::uint64_t t = 10000; t <= 100000; t += 10000) steps.push_back(t);
                report = plog::run_baseline(bn_in, steps, opt);
            } else if (bn_mode == "strong") {
                report = plog::run_strong_scaling(bn_in, parse_worker_list(bn_workers), opt);
            } else if (bn_mode == "weak") {
                report = plog::run_weak_scaling(bn_in, parse_worker_list(bn_workers), opt);
            } else {
                throw plog::config_error("unknown bench mode: " + bn_mode);
            }
            plog::write_file(bn_out, plog::scaling_csv(report));
            plog::fs::path dat = bn_out;
            dat.replace_extension(".dat");
            plog::write_file(dat, plog::scaling_dat(report));
            std::error_code ec;
            plog::fs::remove_all(opt.work_dir, ec);
            std::cerr << plog::scaling_csv(report);
            return 0;
        }
    } catch (const plog::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 1;
}
