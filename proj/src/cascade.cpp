#include <algorithm>
#include <set>

#include "deeppp/error.hpp"
#include "deeppp/random.hpp"
#include "deeppp/sampler.hpp"

namespace deeppp {

CascadeTrajectory simulate_cascade(const Graph& g, std::span<const NodeIndex> seeds, double edge_prob,
                                   std::size_t rounds, std::uint64_t rng_seed) {
    if (seeds.empty()) throw InputError("cascade needs at least one seed");
    if (!(edge_prob >= 0.0 && edge_prob <= 1.0)) throw InputError("edge probability must lie in [0,1]");
    Rng rng(rng_seed);
    std::vector<std::uint8_t> state(g.node_count(), 0);
    std::vector<NodeIndex> frontier;
    for (auto s : seeds) {
        if (s >= g.node_count()) throw InputError("cascade seed out of range");
        if (!state[s]) {
            state[s] = 1;
            frontier.push_back(s);
        }
    }
    std::sort(frontier.begin(), frontier.end());
    CascadeTrajectory traj{state};
    for (std::size_t r = 0; r < rounds; ++r) {
        std::vector<NodeIndex> next;
        for (auto u : frontier) {
            for (auto v : g.neighbors(u)) {
                if (state[v]) continue;
                if (rng.bernoulli(edge_prob)) {
                    state[v] = 1;
                    next.push_back(v);
                }
            }
        }
        std::sort(next.begin(), next.end());
        frontier.swap(next);
        traj.push_back(state);
    }
    return traj;
}

Graph small_world_graph(std::size_t n, std::size_t k, double rewire_prob, std::uint64_t seed) {
    if (n < 3) throw InputError("small-world graph needs at least 3 nodes");
    if (k < 2 || k % 2 != 0 || k >= n) throw InputError("small-world degree k must be even, >= 2 and < n");
    Rng rng(seed);
    std::set<Edge> edges;
    auto key = [](NodeIndex a, NodeIndex b) { return a < b ? Edge{a, b} : Edge{b, a}; };
    for (std::size_t u = 0; u < n; ++u) {
        for (std::size_t j = 1; j <= k / 2; ++j) edges.insert(key(static_cast<NodeIndex>(u), static_cast<NodeIndex>((u + j) % n)));
    }
    for (std::size_t u = 0; u < n; ++u) {
        for (std::size_t j = 1; j <= k / 2; ++j) {
            const auto a = static_cast<NodeIndex>(u);
            const auto b = static_cast<NodeIndex>((u + j) % n);
            if (!rng.bernoulli(rewire_prob)) continue;
            const auto c = static_cast<NodeIndex>(rng.below(n));
            if (c == a || edges.count(key(a, c)) || !edges.count(key(a, b))) continue;
            edges.erase(key(a, b));
            edges.insert(key(a, c));
        }
    }
    std::vector<Edge> list(edges.begin(), edges.end());
    return Graph::from_edges(n, list);
}

}  // namespace deeppp
