#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "deeppp/features.hpp"
#include "deeppp/graph.hpp"

namespace deeppp {

enum class Split : std::uint8_t { Train, Validation, Test };

const char* to_string(Split s);
Split parse_split(std::string_view s);

/// A sampled local network around one target node.
struct EgoInstance {
    /// Local edges (u < v, sorted) of the induced subgraph.
    std::vector<Edge> edges;
    NormalizedAdjacency sub_adjacency;
    std::uint32_t ego_index = 0;
    /// Activation at observation time; the ego's own flag is always 0.
    std::vector<std::uint8_t> neighbor_activation;
    Eigen::MatrixXd features;
    std::uint8_t label = 0;
    /// External id of the ego (informational).
    std::string ego_id;

    std::size_t size() const { return neighbor_activation.size(); }
};

struct InstanceProvenance {
    std::uint64_t graph_hash = 0;
    std::uint64_t seed = 0;
    std::uint32_t sample_size = 0;
};

struct ClassBalance {
    std::size_t positives = 0;
    std::size_t negatives = 0;
};

struct InstanceSet {
    std::vector<EgoInstance> instances;
    std::vector<Split> split_tags;
    InstanceProvenance provenance;
    std::vector<std::string> feature_names;
    std::vector<ColumnStats> standardization;

    std::vector<std::size_t> indices(Split s) const;
    ClassBalance balance(Split s) const;
    std::size_t feature_width() const {
        return instances.empty() ? feature_names.size() : static_cast<std::size_t>(instances.front().features.cols());
    }
};

// -----------------------------------------------------------------------------
// Sampling
// -----------------------------------------------------------------------------

struct EgoSample {
    /// Distinct visited nodes in first-visit order; nodes[0] is the ego.
    std::vector<NodeIndex> nodes;
    /// Set when the ego has no neighbors (the sample is {ego}).
    bool isolated = false;
};

/// Random walk with restart from `ego`, collecting distinct nodes until `m`
/// are found or 50*m steps are spent. The walk's RNG is derived from
/// (seed, ego), so results do not depend on which other egos are sampled.
EgoSample sample_ego(const Graph& g, NodeIndex ego, std::size_t m, double restart_prob, std::uint64_t seed);

/// Induced subgraph over `sampled` (order kept), renormalized, with feature
/// rows sliced from `feat` and the ego's own activation masked to 0.
EgoInstance build_instance(const Graph& g, std::span<const NodeIndex> sampled, NodeIndex ego,
                           std::uint8_t label, const FeatureMatrix& feat);

/// One (t, t + delta) observation pair over the same topology.
struct Observation {
    Graph at_t;
    Graph at_t_plus;
};

struct SamplerOptions {
    std::size_t sample_size = 50;
    double restart_prob = 0.15;
    std::uint64_t seed = 0;
    bool balance = true;
};

/// Egos are nodes inactive at t with at least one active neighbor at t; the
/// label is their activation at t + delta. With `balance`, the majority class
/// is downsampled to the minority size. Splits are 75/12.5/12.5, stratified
/// by label, from a seeded shuffle. Observations are pooled before balancing.
/// Throws InputError when an activation flips from 1 to 0.
InstanceSet generate_dataset(std::span<const Observation> observations, const FeatureMatrix& feat,
                             const SamplerOptions& opts);

InstanceSet generate_dataset(const Graph& g_t, const Graph& g_t_plus, const FeatureMatrix& feat,
                             const SamplerOptions& opts);

/// Standardizes instance feature columns with statistics of the training split.
void standardize_instances(InstanceSet& set);

/// Model input rows: [features | activation | is_ego | ego activation features].
/// The four ego statistics are broadcast to every row.
Eigen::MatrixXd instance_input(const EgoInstance& inst);

/// Width of instance_input for a given feature width.
inline std::size_t instance_input_width(std::size_t feature_width) { return feature_width + 6; }

// -----------------------------------------------------------------------------
// Independent cascade
// -----------------------------------------------------------------------------

/// states[r][u] == 1 when u is active after round r; states[0] holds the seeds.
using CascadeTrajectory = std::vector<std::vector<std::uint8_t>>;

/// Each node activated in round r tries once, in round r + 1, to activate each
/// inactive neighbor with probability `edge_prob`. Stops early when no new
/// node activates (the trailing states are then repeated up to `rounds`).
CascadeTrajectory simulate_cascade(const Graph& g, std::span<const NodeIndex> seeds, double edge_prob,
                                   std::size_t rounds, std::uint64_t rng_seed);

/// Watts-Strogatz ring lattice (each node joined to `k/2` neighbors per side)
/// with each lattice edge rewired to a uniform random endpoint with
/// probability `rewire_prob`. Duplicate and self edges are skipped.
Graph small_world_graph(std::size_t n, std::size_t k, double rewire_prob, std::uint64_t seed);

// -----------------------------------------------------------------------------
// Serialization (JSON lines)
// -----------------------------------------------------------------------------

/// Line 1: header object {"format","version","provenance","feature_names",
/// "standardization"}. Each further line is one instance:
/// {"ego_id","ego_index","edges","activation","features","label","split"}.
/// Doubles are written in shortest round-trip form, so reloading is bit-exact.
void write_instances(const InstanceSet& set, const std::filesystem::path& path);
InstanceSet read_instances(const std::filesystem::path& path);

}  // namespace deeppp
