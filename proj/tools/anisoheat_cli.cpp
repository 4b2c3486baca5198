#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "anisoheat/experiment.hpp"

using namespace anisoheat;

namespace {

const char* kFooter = R"(Exit codes:
  0  every check passed
  1  at least one check failed (named in report.json and on stderr)
  2  configuration error (the message names the field path)
  3  numerical error (tail not converged, unstable march, aliasing, ...)
  4  kernel cache or file I/O error

Environment:
  ANISOHEAT_CACHE_DIR  cache directory used when --cache-dir is not given)";

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Heat kernels of state-dependent anisotropic stable jump operators"};
    app.footer(kFooter);
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "Build the kernel for a config, validate it and write the artifacts");
    std::string config_path;
    std::size_t threads = 1;
    std::string cache_dir;
    std::string export_mode = "all";
    std::string output_dir;
    bool no_cache = false;
    run->add_option("config", config_path, "JSON experiment config")->required()->check(CLI::ExistingFile);
    run->add_option("--threads", threads, "Worker threads (accepted; runs are single-threaded)")->check(CLI::PositiveNumber);
    run->add_option("--cache-dir", cache_dir, "Frozen-kernel cache directory");
    run->add_option("--export", export_mode, "What to write")->check(CLI::IsMember({"all", "kernels", "report"}));
    run->add_option("--output", output_dir, "Output directory (default: output.directory from the config)");
    run->add_flag("--no-cache", no_cache, "Neither read nor write the kernel cache");

    CLI11_PARSE(app, argc, argv);

    try {
        const auto config = load_config(config_path);
        RunOptions opt;
        opt.threads = threads;
        opt.export_mode = parse_export_mode(export_mode);
        if (!output_dir.empty()) opt.output_dir = output_dir;
        if (!no_cache) {
            if (!cache_dir.empty()) {
                opt.cache_dir = cache_dir;
            } else if (const char* env = std::getenv("ANISOHEAT_CACHE_DIR"); env && *env) {
                opt.cache_dir = env;
            } else {
                opt.cache_dir = ".anisoheat_cache";
            }
        }
        const auto res = run_experiment(config, opt);
        for (const auto& c : res.report.checks) {
            std::printf("%-4s %-36s %.6g %s %.6g\n", c.pass ? "ok" : "FAIL", c.name.c_str(), c.value, c.relation.c_str(),
                        c.tolerance);
        }
        std::printf("%s  config %s  %.2fs (frozen %.2fs, cache hits %zu)\n", res.exit_code == 0 ? "PASS" : "FAIL",
                    res.config_hash.substr(0, 12).c_str(), res.times.total, res.times.frozen, res.cache_hits);
        for (const auto& f : res.report.failures()) std::fprintf(stderr, "failed: %s\n", f.c_str());
        return res.exit_code;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
}
