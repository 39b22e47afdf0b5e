#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "deeppp/config.hpp"

namespace deeppp {

// CLI verbs as library calls. Each writes its primary outputs into
// cfg.output_dir; wall-clock and timestamps go to metadata.json only, so the
// other files are byte-identical across reruns with the same config and seed.
// Errors surface as InputError / FormatError (bad input), DivergenceError
// (training blew up) or anything else (internal).

/// features.csv + features.schema.json for data.graph.
void cmd_features(const ExperimentConfig& cfg);

/// Small-world graph, independent cascades, labelled instances:
/// graph.tsv, instances.jsonl, generate_summary.json.
void cmd_generate(const ExperimentConfig& cfg);

/// Instances from a real graph and two activation snapshots
/// (data.graph, data.activation, data.activation_next): instances.jsonl.
void cmd_sample(const ExperimentConfig& cfg);

/// model.ckpt, trace.json, eval.json, eval.csv, eval_grid.csv, run.json.
void cmd_train(const ExperimentConfig& cfg);

struct SweepCell {
    Head head = Head::DEEPPP;
    double alpha = 0.0;
    int k_iters = 0;
    std::string status;  // "ok" or the failure message
};

/// One cell per (head, alpha, K) under cells/, then sweep.csv and
/// sweep_f1best.csv. A failing cell is recorded and the sweep goes on.
std::vector<SweepCell> cmd_sweep(const ExperimentConfig& cfg);

/// forecast.csv (per cutoff and horizon), forecast_regions.csv,
/// forecast_summary.json.
void cmd_forecast(const ExperimentConfig& cfg);

/// Collects every run below `run_dir` (directories holding eval.json) and
/// every sweep.csv into report.json and report_runs.csv under `out_dir`.
/// Returns the warnings (also stored in the report).
std::vector<std::string> cmd_report(const std::filesystem::path& run_dir, const std::filesystem::path& out_dir);

}  // namespace deeppp
