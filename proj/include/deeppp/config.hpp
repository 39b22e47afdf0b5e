#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "deeppp/learner.hpp"
#include "deeppp/propagation.hpp"

namespace deeppp {

// Experiment configuration. The on-disk form is YAML with the sections below;
// configs/example.yaml lists every key with its default. Any key can be
// overridden as a dotted path, e.g. `--set propagation.alpha=0.4`.

struct DataSection {
    std::string graph;               // edge list
    std::string activation;          // active ids at t
    std::string activation_next;     // active ids at t + delta
    std::string embeddings;          // optional precomputed embedding file
    std::string instances;           // instances.jsonl for train / sweep
    bool directed = false;
};

struct FeatureSection {
    bool vertex = true;
    /// none | deepwalk | file
    std::string embedding = "none";
    bool standardize = true;
    DeepWalkOptions deepwalk;
};

struct GenerateSection {
    std::size_t nodes = 500;
    std::size_t ring_degree = 8;
    double rewire_prob = 0.1;
    double edge_prob = 0.3;
    std::size_t seeds_per_cascade = 100;
    std::size_t cascades = 7;
    /// Activation snapshot taken after this many rounds ...
    std::size_t observe_round = 0;
    /// ... labelled with the state this many rounds later.
    std::size_t label_delay = 1;
};

struct SweepSection {
    std::vector<Head> heads{Head::GCN, Head::GAT, Head::PPNP, Head::APPNP, Head::DEEPPP};
    std::vector<double> alphas{0.2, 0.4, 0.6, 0.8};
    std::vector<int> k_values{10};
};

struct ForecastSection {
    std::string series;       // date,region_id,cumulative_cases
    std::string edges;        // region interaction edge list; complete graph when empty
    int horizon = 6;          // horizons 1..horizon are evaluated
    std::size_t min_window = 7;
    double growth_threshold = 0.025;
    /// blend | persistence
    std::string growth_model = "blend";
    int epochs = 20;
};

struct ExperimentConfig {
    std::optional<std::uint64_t> seed;
    std::string output_dir = "out";
    std::size_t workers = 1;
    DataSection data;
    FeatureSection features;
    SamplerOptions sampler;
    PropagationConfig propagation;
    TrainConfig train;
    SweepSection sweep;
    GenerateSection generate;
    ForecastSection forecast;

    /// Throws InputError on out-of-range values.
    void validate() const;
};

/// Parses YAML text. Unknown keys are an error so typos do not pass silently.
ExperimentConfig parse_config(const std::string& yaml_text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Applies "section.key=value" (value parsed as YAML scalar or flow sequence).
void apply_override(ExperimentConfig& cfg, const std::string& assignment);

/// Canonical YAML echo of the full config (stable key order).
std::string config_to_yaml(const ExperimentConfig& cfg);

/// Seed propagated into sampler, train and deepwalk settings.
void set_seed(ExperimentConfig& cfg, std::uint64_t seed);

nlohmann::ordered_json to_json(const PropagationConfig& p);
nlohmann::ordered_json to_json(const TrainConfig& t);
PropagationConfig propagation_from_json(const nlohmann::json& j);
TrainConfig train_from_json(const nlohmann::json& j);

}  // namespace deeppp
