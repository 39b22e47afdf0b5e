#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "deeppp/graph.hpp"

namespace deeppp {

struct ColumnStats {
    double mean = 0.0;
    double std = 1.0;
};

/// Per-node feature table. `standardization` is empty unless
/// assemble_features standardized the columns.
struct FeatureMatrix {
    Eigen::MatrixXd values;
    std::vector<std::string> column_names;
    std::vector<ColumnStats> standardization;

    Eigen::Index rows() const { return values.rows(); }
    Eigen::Index cols() const { return values.cols(); }
};

struct EgoInstance;

// -----------------------------------------------------------------------------
// Vertex features
// -----------------------------------------------------------------------------

inline constexpr int kDefaultIterationCap = 1000;

/// PageRank on the self-loop-augmented random walk encoded by `adj`
/// (a walker at j moves to each of its d_j = deg(j)+1 closed neighbors with
/// equal probability). Iterates until the max-abs change drops below `tol`.
/// Throws ConvergenceError after `max_iter` sweeps.
std::vector<double> pagerank(const NormalizedAdjacency& adj, double damping = 0.85,
                             double tol = 1e-12, int max_iter = kDefaultIterationCap);

/// Dominant eigenvector of the raw adjacency, computed per connected
/// component by power iteration on A + I and scaled so each component's
/// maximum is 1. Isolated nodes score 1.
std::vector<double> eigenvector_centrality(const Graph& g, double tol = 1e-13,
                                           int max_iter = 100000);

/// 1/deg; isolated nodes map to 1.
std::vector<double> degree_reciprocal(const Graph& g);

/// k-core number by minimum-degree peeling (Batagelj-Zaversnik bucket order).
std::vector<int> coreness(const Graph& g);

/// 2*triangles/(deg*(deg-1)); 0 for deg < 2.
std::vector<double> clustering_coefficient(const Graph& g);

struct HubAuthority {
    double hub = 0.0;
    double authority = 0.0;
};

/// HITS by power iteration. Each half-step pair (authority <- A^T hub,
/// hub <- A authority) is applied as one A^T A / A A^T sweep from the uniform
/// start. On a bipartite component the top eigenspace of A A^T is spanned by
/// the +l and -l eigenvectors of A, so the limit is projected onto the +l
/// part. Result: the uniform vector projected on the top eigenspace of A,
/// and hub == authority on undirected input.
/// Scores have unit Euclidean norm. A graph without edges returns 1/sqrt(n).
std::vector<HubAuthority> hits(const Graph& g, double tol = 1e-13, int max_iter = 100000);

// -----------------------------------------------------------------------------
// Ego features
// -----------------------------------------------------------------------------

struct EgoActivationFeatures {
    double active_count = 0.0;
    double active_ratio = 0.0;
    /// Edge density among active neighbors; 0 with fewer than two.
    double active_density = 0.0;
    double active_components = 0.0;
};

/// Statistics of the ego's direct neighbors inside the instance subgraph.
EgoActivationFeatures ego_activation_features(const EgoInstance& inst);

// -----------------------------------------------------------------------------
// Embeddings
// -----------------------------------------------------------------------------

struct DeepWalkOptions {
    int dim = 64;
    int walks_per_node = 10;
    int walk_length = 40;
    int window = 5;
    int negatives = 5;
    int epochs = 1;
    double learning_rate = 0.025;
    std::uint64_t seed = 0;
};

/// Uniform truncated random walks followed by skip-gram with negative sampling.
/// Deterministic for a given seed.
FeatureMatrix deepwalk_embed(const Graph& g, const DeepWalkOptions& opts);

struct LoadedEmbeddings {
    FeatureMatrix features;
    std::vector<std::string> warnings;
};

/// "id<TAB>v1<TAB>...<TAB>vd" rows aligned to g's dense order. Nodes without
/// a row get zeros; ids not in g are skipped. Both cases produce a warning.
LoadedEmbeddings load_embeddings(const std::filesystem::path& path, const Graph& g);

// -----------------------------------------------------------------------------
// Assembly
// -----------------------------------------------------------------------------

/// Vertex feature block in the fixed column order
/// pagerank, eigenvector, degree_reciprocal, coreness, clustering, hub, authority, degree.
FeatureMatrix vertex_features(const Graph& g);

/// Horizontal concatenation. With `standardize`, each column is centered and
/// scaled using the statistics of `fit_rows` only (all rows when empty);
/// a zero-variance column gets std 1.
FeatureMatrix assemble_features(std::span<const FeatureMatrix> parts, bool standardize,
                                std::span<const Eigen::Index> fit_rows = {});

/// Header "id,<columns>", one row per node in dense order.
void write_feature_csv(const FeatureMatrix& fm, const Graph& g, const std::filesystem::path& path);

}  // namespace deeppp
