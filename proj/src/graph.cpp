#include "deeppp/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "deeppp/error.hpp"
#include "deeppp/textio.hpp"

namespace deeppp {

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

void fnv_mix(std::uint64_t& h, const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= kFnvPrime;
    }
}

}  // namespace

Graph::Graph() : topo_(std::make_shared<Topology>()) {}

Graph build_graph(std::vector<std::string> ids, std::span<const Edge> edges,
                  std::vector<std::int64_t> edge_time, bool source_directed) {
    const std::size_t n = ids.size();
    if (n > std::numeric_limits<NodeIndex>::max()) {
        throw InputError("node count " + std::to_string(n) + " exceeds index range");
    }
    auto topo = std::make_shared<Graph::Topology>();

    std::vector<std::vector<NodeIndex>> adj(n);
    std::vector<std::int64_t> first_seen;
    if (!edge_time.empty()) first_seen.assign(n, std::numeric_limits<std::int64_t>::max());
    for (std::size_t e = 0; e < edges.size(); ++e) {
        auto [u, v] = edges[e];
        if (u >= n || v >= n) throw InputError("edge endpoint out of range");
        if (!first_seen.empty()) {
            first_seen[u] = std::min(first_seen[u], edge_time[e]);
            first_seen[v] = std::min(first_seen[v], edge_time[e]);
        }
        if (u == v) continue;
        adj[u].push_back(v);
        adj[v].push_back(u);
    }
    topo->offsets.assign(n + 1, 0);
    for (std::size_t u = 0; u < n; ++u) {
        auto& list = adj[u];
        std::sort(list.begin(), list.end());
        list.erase(std::unique(list.begin(), list.end()), list.end());
        topo->offsets[u + 1] = topo->offsets[u] + list.size();
    }
    topo->neighbors.reserve(topo->offsets[n]);
    for (auto& list : adj) topo->neighbors.insert(topo->neighbors.end(), list.begin(), list.end());

    topo->index.reserve(n);
    for (std::size_t u = 0; u < n; ++u) {
        if (!topo->index.emplace(ids[u], static_cast<NodeIndex>(u)).second) {
            throw InputError("duplicate node id '" + ids[u] + "'");
        }
    }
    topo->ids = std::move(ids);
    // Nodes untouched by any timestamped edge keep the sentinel max value.
    topo->timestamps = std::move(first_seen);
    topo->source_directed = source_directed;

    std::uint64_t h = kFnvOffset;
    const std::uint64_t count = n;
    fnv_mix(h, &count, sizeof count);
    for (const auto& s : topo->ids) {
        fnv_mix(h, s.data(), s.size());
        fnv_mix(h, "\0", 1);
    }
    fnv_mix(h, topo->offsets.data(), topo->offsets.size() * sizeof(std::size_t));
    fnv_mix(h, topo->neighbors.data(), topo->neighbors.size() * sizeof(NodeIndex));
    topo->fingerprint = h;

    Graph g;
    g.topo_ = std::move(topo);
    g.activation_.assign(n, 0);
    return g;
}

Graph Graph::from_edges(std::vector<std::string> ids, std::span<const Edge> edges) {
    return build_graph(std::move(ids), edges, {}, false);
}

Graph Graph::from_edges(std::size_t n, std::span<const Edge> edges) {
    std::vector<std::string> ids(n);
    for (std::size_t i = 0; i < n; ++i) ids[i] = std::to_string(i);
    return from_edges(std::move(ids), edges);
}

bool Graph::has_edge(NodeIndex u, NodeIndex v) const {
    auto nb = neighbors(u);
    return std::binary_search(nb.begin(), nb.end(), v);
}

std::vector<Edge> Graph::edges() const {
    std::vector<Edge> out;
    out.reserve(edge_count());
    for (NodeIndex u = 0; u < node_count(); ++u) {
        for (NodeIndex v : neighbors(u)) {
            if (u < v) out.emplace_back(u, v);
        }
    }
    return out;
}

std::optional<NodeIndex> Graph::find(std::string_view id) const {
    auto it = topo_->index.find(std::string(id));
    if (it == topo_->index.end()) return std::nullopt;
    return it->second;
}

NodeIndex Graph::index_of(std::string_view id) const {
    if (auto idx = find(id)) return *idx;
    throw InputError("unknown node id '" + std::string(id) + "'");
}

std::size_t Graph::active_count() const {
    return static_cast<std::size_t>(std::count(activation_.begin(), activation_.end(), 1));
}

Graph Graph::with_activation(std::vector<std::uint8_t> flags) const {
    if (flags.size() != node_count()) {
        throw InputError("activation vector has " + std::to_string(flags.size()) +
                         " entries, graph has " + std::to_string(node_count()) + " nodes");
    }
    for (auto& f : flags) f = f ? 1 : 0;
    Graph g = *this;
    g.activation_ = std::move(flags);
    return g;
}

Graph Graph::induced_subgraph(std::span<const NodeIndex> nodes) const {
    std::unordered_map<NodeIndex, NodeIndex> local;
    local.reserve(nodes.size());
    std::vector<std::string> ids;
    ids.reserve(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        local.emplace(nodes[i], static_cast<NodeIndex>(i));
        ids.push_back(id(nodes[i]));
    }
    std::vector<Edge> sub;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        for (NodeIndex v : neighbors(nodes[i])) {
            auto it = local.find(v);
            if (it != local.end() && i < it->second) sub.emplace_back(static_cast<NodeIndex>(i), it->second);
        }
    }
    Graph g = from_edges(std::move(ids), sub);
    for (std::size_t i = 0; i < nodes.size(); ++i) g.activation_[i] = activation_[nodes[i]];
    return g;
}

Graph load_edge_list(const std::filesystem::path& path, bool directed_hint) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open edge list '" + path.string() + "'");

    std::vector<std::string> ids;
    std::unordered_map<std::string, NodeIndex> index;
    std::vector<Edge> edges;
    std::vector<std::int64_t> times;
    bool any_time = false;

    auto intern = [&](const std::string& s) {
        auto [it, inserted] = index.emplace(s, static_cast<NodeIndex>(ids.size()));
        if (inserted) {
            if (ids.size() >= std::numeric_limits<NodeIndex>::max()) {
                throw InputError("node count overflow in '" + path.string() + "'");
            }
            ids.push_back(s);
        }
        return it->second;
    };

    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (is_blank_or_comment(line)) continue;
        auto fields = split_fields(line);
        auto where = [&] { return path.string() + ":" + std::to_string(lineno); };
        if (fields.size() < 2 || fields.size() > 3) {
            throw InputError(where() + ": expected 2 or 3 fields, got " + std::to_string(fields.size()));
        }
        if (fields[0].empty() || fields[1].empty()) throw InputError(where() + ": empty node id");
        std::int64_t ts = 0;
        if (fields.size() == 3) {
            const auto& f = fields[2];
            auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), ts);
            if (ec != std::errc() || p != f.data() + f.size()) {
                throw InputError(where() + ": timestamp '" + f + "' is not an integer");
            }
            any_time = true;
        }
        NodeIndex u = intern(fields[0]);
        NodeIndex v = intern(fields[1]);
        edges.emplace_back(u, v);
        times.push_back(fields.size() == 3 ? ts : std::numeric_limits<std::int64_t>::max());
    }
    if (edges.empty()) throw InputError("edge list '" + path.string() + "' contains no edges");
    if (!any_time) times.clear();
    return build_graph(std::move(ids), edges, std::move(times), directed_hint);
}

void write_edge_list(const Graph& g, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write '" + path.string() + "'");
    for (auto [u, v] : g.edges()) out << g.id(u) << '\t' << g.id(v) << '\n';
}

Graph set_activation(const Graph& g, std::span<const std::string> active_ids) {
    std::vector<std::uint8_t> flags(g.node_count(), 0);
    for (const auto& id : active_ids) flags[g.index_of(id)] = 1;
    return g.with_activation(std::move(flags));
}

std::vector<std::string> load_activation_ids(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open activation file '" + path.string() + "'");
    std::vector<std::string> ids;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (is_blank_or_comment(line)) continue;
        auto fields = split_fields(line);
        ids.push_back(fields.front());
    }
    return ids;
}

NormalizedAdjacency normalize_edges(std::size_t n, std::span<const Edge> edges, std::uint64_t source_hash) {
    std::vector<double> dhat(n, 1.0);
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(n + 2 * edges.size());
    for (auto [u, v] : edges) {
        dhat[u] += 1.0;
        dhat[v] += 1.0;
    }
    for (std::size_t i = 0; i < n; ++i) {
        trips.emplace_back(static_cast<int>(i), static_cast<int>(i), 1.0 / dhat[i]);
    }
    for (auto [u, v] : edges) {
        const double w = 1.0 / std::sqrt(dhat[u] * dhat[v]);
        trips.emplace_back(static_cast<int>(u), static_cast<int>(v), w);
        trips.emplace_back(static_cast<int>(v), static_cast<int>(u), w);
    }
    NormalizedAdjacency out;
    out.matrix.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    out.matrix.setFromTriplets(trips.begin(), trips.end());
    out.matrix.makeCompressed();
    if (source_hash == 0) {
        source_hash = kFnvOffset;
        const std::uint64_t count = n;
        fnv_mix(source_hash, &count, sizeof count);
        fnv_mix(source_hash, edges.data(), edges.size() * sizeof(Edge));
    }
    out.source_hash = source_hash;
    return out;
}

NormalizedAdjacency normalize_adjacency(const Graph& g) {
    auto edges = g.edges();
    return normalize_edges(g.node_count(), edges, g.fingerprint());
}

}  // namespace deeppp
