// deeppp: command-line front end. See README.md for the verbs.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "deeppp/commands.hpp"
#include "deeppp/config.hpp"
#include "deeppp/error.hpp"
#include "deeppp/learner.hpp"

namespace {

enum Exit { kOk = 0, kInternal = 1, kBadInput = 2, kDiverged = 3 };

struct Common {
    std::string config;
    std::vector<std::string> sets;
    std::optional<std::uint64_t> seed;
    std::string out;
};

// generate, train and sweep refuse to run without a seed, from --seed or the
// config file; the check lives in the commands so both sources count.
void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("-c,--config", c.config, "YAML experiment config");
    cmd->add_option("--set", c.sets, "Override a config key, e.g. --set propagation.alpha=0.4")->take_all();
    cmd->add_option("--seed", c.seed, "Seed for every random stream");
    cmd->add_option("-o,--out", c.out, "Output directory (output_dir)");
}

// A flag set on the command line is just another override.
void shortcut(CLI::App* cmd, std::vector<std::string>& extra, const std::string& flag, const std::string& key,
              const std::string& help) {
    cmd->add_option_function<std::string>(
        flag, [&extra, key](const std::string& v) { extra.push_back(key + "=" + v); }, help);
}

deeppp::ExperimentConfig resolve(const Common& c, const std::vector<std::string>& extra) {
    auto cfg = c.config.empty() ? deeppp::ExperimentConfig{} : deeppp::load_config(c.config);
    for (const auto& s : c.sets) deeppp::apply_override(cfg, s);
    for (const auto& s : extra) deeppp::apply_override(cfg, s);
    if (!c.out.empty()) cfg.output_dir = c.out;
    if (c.seed) {
        deeppp::set_seed(cfg, *c.seed);
    } else if (cfg.seed) {
        deeppp::set_seed(cfg, *cfg.seed);
    }
    cfg.validate();
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Personalized-propagation influence prediction toolkit"};
    app.require_subcommand(1);

    Common common;
    std::vector<std::string> extra;
    std::string run_dir;

    auto* features = app.add_subcommand("features", "Per-node feature table for a graph");
    add_common(features, common);
    shortcut(features, extra, "--graph", "data.graph", "Edge list");
    shortcut(features, extra, "--embedding", "features.embedding", "none | deepwalk | file");

    auto* generate = app.add_subcommand("generate", "Synthetic cascade instance set");
    add_common(generate, common);
    shortcut(generate, extra, "--nodes", "generate.nodes", "Graph size");
    shortcut(generate, extra, "--edge-prob", "generate.edge_prob", "Cascade transmission probability");
    shortcut(generate, extra, "--cascades", "generate.cascades", "Number of simulated cascades");

    auto* sample = app.add_subcommand("sample", "Instance set from a graph and two activation snapshots");
    add_common(sample, common);
    shortcut(sample, extra, "--graph", "data.graph", "Edge list");
    shortcut(sample, extra, "--activation", "data.activation", "Active ids at t");
    shortcut(sample, extra, "--activation-next", "data.activation_next", "Active ids at t + delta");
    shortcut(sample, extra, "--sample-size", "sampler.sample_size", "Ego network size");

    auto* train = app.add_subcommand("train", "Train and evaluate one model");
    add_common(train, common);
    shortcut(train, extra, "--instances", "data.instances", "instances.jsonl");
    shortcut(train, extra, "--head", "propagation.head", "GCN | GAT | PPNP | APPNP | DEEPPP");
    shortcut(train, extra, "--alpha", "propagation.alpha", "Teleport probability");
    shortcut(train, extra, "--k", "propagation.k_iters", "Power iterations");
    shortcut(train, extra, "--epochs", "train.epochs", "Epochs");
    shortcut(train, extra, "--lr", "train.learning_rate", "Learning rate");
    shortcut(train, extra, "--batch-size", "train.batch_size", "Mini-batch size");

    auto* sweep = app.add_subcommand("sweep", "Grid over heads and alphas");
    add_common(sweep, common);
    shortcut(sweep, extra, "--instances", "data.instances", "instances.jsonl");
    shortcut(sweep, extra, "--epochs", "train.epochs", "Epochs per cell");
    shortcut(sweep, extra, "--workers", "workers", "Concurrent cells");

    auto* forecast = app.add_subcommand("forecast", "Rolling-origin region case forecast");
    add_common(forecast, common);
    shortcut(forecast, extra, "--series", "forecast.series", "date,region_id,cumulative_cases CSV");
    shortcut(forecast, extra, "--edges", "forecast.edges", "Region interaction edge list");
    shortcut(forecast, extra, "--horizon", "forecast.horizon", "Largest horizon in days (1-6)");
    shortcut(forecast, extra, "--growth-model", "forecast.growth_model", "blend | persistence");

    auto* report = app.add_subcommand("report", "Merge run artifacts into one summary");
    report->add_option("run_dir", run_dir, "Directory holding runs")->required();
    report->add_option("-o,--out", common.out, "Where to write report.json (default: run_dir)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kBadInput;
    }

    try {
        if (report->parsed()) {
            const auto warnings = deeppp::cmd_report(run_dir, common.out.empty() ? run_dir : common.out);
            for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
            return kOk;
        }
        const auto cfg = resolve(common, extra);
        if (features->parsed()) deeppp::cmd_features(cfg);
        if (generate->parsed()) deeppp::cmd_generate(cfg);
        if (sample->parsed()) deeppp::cmd_sample(cfg);
        if (train->parsed()) deeppp::cmd_train(cfg);
        if (forecast->parsed()) deeppp::cmd_forecast(cfg);
        if (sweep->parsed()) {
            int failed = 0;
            for (const auto& c : deeppp::cmd_sweep(cfg)) {
                if (c.status != "ok") {
                    ++failed;
                    std::cerr << "cell " << deeppp::to_string(c.head) << " alpha=" << c.alpha << ": " << c.status << "\n";
                }
            }
            if (failed) std::cerr << failed << " sweep cell(s) failed\n";
        }
        return kOk;
    } catch (const deeppp::InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kBadInput;
    } catch (const deeppp::FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kBadInput;
    } catch (const deeppp::DivergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kDiverged;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kInternal;
    }
}
