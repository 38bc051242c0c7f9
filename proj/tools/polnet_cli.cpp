#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "polnet/fixtures.hpp"
#include "polnet/pipeline.hpp"

int main(int argc, char** argv) {
    CLI::App app{"polnet: multilayer community detection and temporal ERGM analysis of conflict networks"};
    app.require_subcommand(1);

    // fixture generation
    std::string fixture_kind, fixture_params = "{}", fixture_out = "fixture";
    std::uint64_t fixture_seed = 42;
    auto* fixture = app.add_subcommand("fixture", "Generate a synthetic dataset with a ground-truth sidecar");
    fixture->add_option("--kind", fixture_kind,
                        "planted-communities | known-ergm-panel | clustered-corpus")
        ->required();
    fixture->add_option("--params", fixture_params, "JSON parameter overrides");
    fixture->add_option("--seed", fixture_seed, "RNG seed");
    fixture->add_option("--out", fixture_out, "Output directory")->required();

    // pipeline stages share one option set
    polnet::PipelineOptions opts;
    std::string years;
    int reps = -1;
    int gof_sims = -1;
    std::vector<CLI::App*> stage_cmds;
    auto add_stage = [&](const std::string& name, const std::string& desc) {
        auto* cmd = app.add_subcommand(name, desc);
        cmd->add_option("--manifest", opts.manifest_path, "Dataset manifest (JSON)")->required();
        cmd->add_option("--out", opts.out_dir, "Artifact directory");
        cmd->add_option("--years", years, "Year range A:B (defaults to the manifest span)");
        cmd->add_option("--seed", opts.seed, "RNG seed");
        cmd->add_option("--threads", opts.threads, "Worker threads (1 = serial reference path)");
        cmd->add_option("--reps", reps, "Bootstrap replications override");
        cmd->add_option("--gof-sims", gof_sims, "Goodness-of-fit simulations override");
        cmd->add_option("--grid", opts.grid_path, "Settings grid JSON (embedding_grid, init_proportions)");
        cmd->add_flag("--force", opts.force, "Re-run even when cached artifacts are fresh");
        stage_cmds.push_back(cmd);
        return cmd;
    };
    add_stage("build-graphs", "Build yearly multilayer treaty graphs from events");
    add_stage("embed", "Train speech embeddings");
    add_stage("distances", "Compute vote and speech similarity matrices");
    add_stage("detect", "Extract multiplex communities");
    add_stage("derive-covariates", "Derive community covariates for the panel");
    add_stage("fit", "Fit TERGMs with bootstrap confidence intervals");
    add_stage("gof", "Simulate goodness-of-fit envelopes");
    add_stage("predict", "Rolling out-of-sample AUC-PR");
    add_stage("report", "Assemble polarity and coefficient tables");
    add_stage("all", "Run every stage in order");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    if (fixture->parsed()) {
        try {
            polnet::generate_fixture(fixture_kind, fixture_params, fixture_seed, fixture_out);
            std::cout << "fixture written to " << fixture_out << "\n";
            return 0;
        } catch (const std::invalid_argument& e) {
            std::cerr << "error: " << e.what() << "\n";
            return 1;
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return 2;
        }
    }

    if (!years.empty()) {
        const auto colon = years.find(':');
        if (colon == std::string::npos) {
            std::cerr << "error: --years expects A:B\n";
            return 1;
        }
        try {
            opts.year_lo = std::stoi(years.substr(0, colon));
            opts.year_hi = std::stoi(years.substr(colon + 1));
        } catch (...) {
            std::cerr << "error: --years expects integer years A:B\n";
            return 1;
        }
    }
    if (reps > 0) opts.reps = reps;
    if (gof_sims > 0) opts.gof_sims = gof_sims;

    for (auto* cmd : stage_cmds) {
        if (cmd->parsed()) return polnet::run_pipeline(cmd->get_name(), opts);
    }
    return 1;
}
