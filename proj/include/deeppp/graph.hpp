#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace deeppp {

using NodeIndex = std::uint32_t;
using Edge = std::pair<NodeIndex, NodeIndex>;

// =============================================================================
// Graph
//
// Undirected simple graph in CSR form. Neighbor lists are sorted and free of
// duplicates and self-loops. Topology is shared between copies, so deriving a
// graph with a different activation vector is cheap.
// =============================================================================
class Graph {
public:
    Graph();

    /// Builds a graph from dense-index edges. Self-loops are dropped,
    /// both orientations of a pair collapse to one undirected edge.
    static Graph from_edges(std::vector<std::string> ids, std::span<const Edge> edges);

    /// Same as from_edges, with ids "0".."n-1".
    static Graph from_edges(std::size_t n, std::span<const Edge> edges);

    std::size_t node_count() const { return topo_->ids.size(); }
    std::size_t edge_count() const { return topo_->neighbors.size() / 2; }
    bool empty() const { return node_count() == 0; }

    std::span<const NodeIndex> neighbors(NodeIndex u) const {
        const auto* base = topo_->neighbors.data();
        return {base + topo_->offsets[u], base + topo_->offsets[u + 1]};
    }
    std::size_t degree(NodeIndex u) const { return topo_->offsets[u + 1] - topo_->offsets[u]; }
    bool has_edge(NodeIndex u, NodeIndex v) const;

    /// Undirected edges with u < v, lexicographically sorted.
    std::vector<Edge> edges() const;

    const std::string& id(NodeIndex u) const { return topo_->ids[u]; }
    const std::vector<std::string>& ids() const { return topo_->ids; }
    std::optional<NodeIndex> find(std::string_view id) const;
    /// Throws InputError on unknown id.
    NodeIndex index_of(std::string_view id) const;

    bool is_active(NodeIndex u) const { return activation_[u] != 0; }
    std::span<const std::uint8_t> activation() const { return activation_; }
    std::size_t active_count() const;

    /// Earliest edge timestamp touching each node; empty when the source had none.
    const std::vector<std::int64_t>& timestamps() const { return topo_->timestamps; }

    /// True when the loader was told the source lists directed arcs.
    bool source_directed() const { return topo_->source_directed; }

    /// Copy sharing topology with a replaced activation vector (size n, values 0/1).
    Graph with_activation(std::vector<std::uint8_t> flags) const;

    /// Subgraph induced by `nodes`; local index i corresponds to nodes[i].
    Graph induced_subgraph(std::span<const NodeIndex> nodes) const;

    /// Structural fingerprint (ids + adjacency), independent of activation.
    std::uint64_t fingerprint() const { return topo_->fingerprint; }

private:
    struct Topology {
        std::vector<std::size_t> offsets{0};
        std::vector<NodeIndex> neighbors;
        std::vector<std::string> ids;
        std::unordered_map<std::string, NodeIndex> index;
        std::vector<std::int64_t> timestamps;
        bool source_directed = false;
        std::uint64_t fingerprint = 0;
    };

    std::shared_ptr<const Topology> topo_;
    std::vector<std::uint8_t> activation_;

    friend Graph load_edge_list(const std::filesystem::path&, bool);
    friend Graph build_graph(std::vector<std::string>, std::span<const Edge>,
                             std::vector<std::int64_t>, bool);
};

/// Shared builder behind from_edges and the loader. `edge_time` is either
/// empty or parallel to `edges`.
Graph build_graph(std::vector<std::string> ids, std::span<const Edge> edges,
                  std::vector<std::int64_t> edge_time, bool source_directed);

/// Reads "src<TAB>dst[<TAB>timestamp]" lines ('#' comments, blank lines skipped).
/// Dense indices follow first appearance. Activation starts all-inactive.
/// The result is always symmetrized; `directed_hint` is recorded only.
Graph load_edge_list(const std::filesystem::path& path, bool directed_hint = false);

void write_edge_list(const Graph& g, const std::filesystem::path& path);

/// Returns g with exactly `active_ids` active. Throws InputError on unknown ids.
Graph set_activation(const Graph& g, std::span<const std::string> active_ids);

/// One external id per line; '#' comments and blank lines skipped.
std::vector<std::string> load_activation_ids(const std::filesystem::path& path);

// =============================================================================
// Normalized adjacency  D^-1/2 (A + I) D^-1/2,  d_i = deg(i) + 1
// =============================================================================
struct NormalizedAdjacency {
    Eigen::SparseMatrix<double, Eigen::RowMajor> matrix;
    std::uint64_t source_hash = 0;

    Eigen::Index size() const { return matrix.rows(); }
    Eigen::MatrixXd dense() const { return Eigen::MatrixXd(matrix); }
};

NormalizedAdjacency normalize_adjacency(const Graph& g);

/// Normalization of an edge list over nodes [0, n). Used for sampled
/// subgraphs, which only carry local edges.
NormalizedAdjacency normalize_edges(std::size_t n, std::span<const Edge> edges,
                                    std::uint64_t source_hash = 0);

}  // namespace deeppp
