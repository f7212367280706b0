#include "pagc/cli.hpp"

#include "pagc/error.hpp"
#include "pagc/pipeline.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace pagc {

namespace {

struct CommonOpts {
    std::string manifest;
    std::string config;
    std::string out;
    long long seed = -1; // -1 = keep the config value
    int threads = 0;     // 0 = keep the config value
    bool no_timestamp = false;
};

RunConfig load_config(const CommonOpts& opts) {
    RunConfig cfg = opts.config.empty() ? RunConfig{} : parse_config_file(opts.config);
    if (opts.seed >= 0) {
        cfg.seed = static_cast<std::uint64_t>(opts.seed);
        cfg.phantom.seed = static_cast<std::uint64_t>(opts.seed);
    }
    if (opts.threads > 0) cfg.threads = opts.threads;
    if (opts.no_timestamp) cfg.timestamp = false;
    return cfg;
}

void add_common(CLI::App* cmd, CommonOpts& opts, bool needs_manifest) {
    if (needs_manifest)
        cmd->add_option("--manifest", opts.manifest, "cohort manifest CSV")->required();
    cmd->add_option("--config", opts.config, "key=value run configuration file");
    cmd->add_option("--out", opts.out, "output directory")->required();
    cmd->add_option("--seed", opts.seed, "override the configured seed");
    cmd->add_option("--threads", opts.threads, "worker threads (default from config)");
    cmd->add_flag("--no-timestamp", opts.no_timestamp, "omit the timestamp field from reports");
}

} // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"pixel-array graph and radiomics classification toolkit"};
    app.require_subcommand(1);

    CommonOpts phantom_opts, pag_opts, rad_opts;

    CLI::App* phantom = app.add_subcommand("phantom", "generate a synthetic cohort");
    add_common(phantom, phantom_opts, false);

    CLI::App* pag = app.add_subcommand("pag", "pixel-array graph spectral pipeline");
    add_common(pag, pag_opts, true);

    CLI::App* radiomics = app.add_subcommand("radiomics", "radiomics feature pipeline");
    add_common(radiomics, rad_opts, true);

    std::string explain_model, explain_table, explain_out;
    long long explain_seed = 7;
    int explain_repeats = 20;
    CLI::App* explain = app.add_subcommand("explain", "permutation importance for a saved model");
    explain->add_option("--model", explain_model, "model JSON file")->required();
    explain->add_option("--table", explain_table, "feature table CSV")->required();
    explain->add_option("--out", explain_out, "output importance CSV")->required();
    explain->add_option("--seed", explain_seed, "permutation seed");
    explain->add_option("--repeats", explain_repeats, "permutations per feature");

    std::string report_in;
    CLI::App* report = app.add_subcommand("report", "summarize a report JSON");
    report->add_option("--in", report_in, "report.json produced by pag/radiomics")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) { // --help
            app.exit(e);
            return 0;
        }
        std::cerr << e.what() << "\n";
        return 2;
    }

    try {
        if (phantom->parsed()) {
            const RunConfig cfg = load_config(phantom_opts);
            const auto result = run_phantom_cmd(cfg, phantom_opts.out);
            std::cout << result.dump(2) << "\n";
        } else if (pag->parsed()) {
            const RunConfig cfg = load_config(pag_opts);
            const auto report_json = run_pag(pag_opts.manifest, cfg, pag_opts.out);
            std::cout << format_report_summary(report_json);
        } else if (radiomics->parsed()) {
            const RunConfig cfg = load_config(rad_opts);
            const auto report_json = run_radiomics(rad_opts.manifest, cfg, rad_opts.out);
            std::cout << format_report_summary(report_json);
        } else if (explain->parsed()) {
            if (explain_repeats < 1 || explain_seed < 0)
                throw InputError("explain: repeats must be >= 1 and seed >= 0");
            const auto result =
                run_explain(explain_model, explain_table, explain_repeats,
                            static_cast<std::uint64_t>(explain_seed), explain_out);
            std::cout << result.dump(2) << "\n";
        } else if (report->parsed()) {
            std::ifstream in(report_in);
            if (!in) throw InputError("missing file: " + report_in);
            nlohmann::json j;
            try {
                in >> j;
            } catch (const nlohmann::json::exception& e) {
                throw InputError(std::string("bad report json: ") + e.what());
            }
            std::cout << format_report_summary(j);
        }
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const AnalysisError& e) {
        std::cerr << "analysis failed: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

int run_cli(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run_cli(args);
}

} // namespace pagc
