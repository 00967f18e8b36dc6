// Command-line front end: `specreuse simulate` runs an SNR sweep of the
// transmission strategies and writes a CSV table or JSON summary.

#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "specreuse/specreuse.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Opportunistic spectrum reutilization simulator"};
    app.require_subcommand(1);

    auto* simulate = app.add_subcommand(
        "simulate", "Calibrate and evaluate transmission strategies over an SNR sweep");

    std::string config_path;
    std::string snr_spec;
    std::string methods_spec;
    std::string format_spec = "csv";
    std::string out_path;
    std::optional<std::uint64_t> seed;
    std::optional<double> rho_max;
    std::optional<std::int64_t> n_train, n_eval;
    std::optional<int> workers;

    simulate->add_option("--config", config_path, "Config file (key = value lines)");
    simulate->add_option("--seed", seed, "Master RNG seed");
    simulate->add_option("--snr", snr_spec, "SNR grid in dB: lo:step:hi or comma list");
    simulate->add_option("--rho-max", rho_max, "Interference-ratio target in (0,1)");
    simulate->add_option("--out", out_path, "Output file path");
    simulate->add_option("--methods", methods_spec,
                         "Comma list of baseline,known,estimated,unconditional");
    simulate->add_option("--n-train", n_train, "Training slots per point");
    simulate->add_option("--n-eval", n_eval, "Evaluation slots per point");
    simulate->add_option("--format", format_spec, "Output format: csv or json-summary")
        ->check(CLI::IsMember({"csv", "json-summary"}));
    simulate->add_option("--workers", workers, "Worker threads (0 = auto)");

    CLI11_PARSE(app, argc, argv);

    try {
        specreuse::ExperimentConfig cfg;
        if (!config_path.empty()) specreuse::apply_config_file(cfg, config_path);
        if (seed) cfg.seed = *seed;
        if (!snr_spec.empty()) cfg.snr_db_grid = specreuse::parse_snr_spec(snr_spec);
        if (rho_max) cfg.rho_max = *rho_max;
        if (!out_path.empty()) cfg.out_path = out_path;
        if (!methods_spec.empty()) cfg.methods = specreuse::parse_methods(methods_spec);
        if (n_train) cfg.n_train = *n_train;
        if (n_eval) cfg.n_eval = *n_eval;
        if (workers) cfg.workers = *workers;
        cfg.validate();

        const auto records = specreuse::run_sweep(cfg);
        const auto format = format_spec == "csv" ? specreuse::OutputFormat::Csv
                                                 : specreuse::OutputFormat::JsonSummary;
        specreuse::emit_results(records, cfg, cfg.out_path, format);
        std::cout << "wrote " << records.size() << " records to " << cfg.out_path << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
