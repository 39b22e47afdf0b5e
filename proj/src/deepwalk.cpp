#include <algorithm>
#include <cmath>

#include "deeppp/error.hpp"
#include "deeppp/features.hpp"
#include "deeppp/random.hpp"

namespace deeppp {

namespace {

constexpr double kMaxExp = 6.0;

double sigmoid(double x) {
    if (x > kMaxExp) return 1.0;
    if (x < -kMaxExp) return 0.0;
    return 1.0 / (1.0 + std::exp(-x));
}

// Cumulative unigram^0.75 distribution over walk occurrences.
std::vector<double> negative_table(const std::vector<std::vector<NodeIndex>>& walks, std::size_t n) {
    std::vector<double> freq(n, 0.0);
    for (const auto& w : walks) {
        for (auto v : w) freq[v] += 1.0;
    }
    std::vector<double> cdf(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        total += std::pow(freq[i], 0.75);
        cdf[i] = total;
    }
    for (auto& c : cdf) c /= total;
    return cdf;
}

}  // namespace

FeatureMatrix deepwalk_embed(const Graph& g, const DeepWalkOptions& opts) {
    if (opts.dim < 1) throw InputError("deepwalk dim must be >= 1");
    if (opts.walk_length < 2) throw InputError("deepwalk walk_length must be >= 2");
    const auto n = g.node_count();
    const auto dim = static_cast<std::size_t>(opts.dim);

    FeatureMatrix out;
    for (int j = 0; j < opts.dim; ++j) out.column_names.push_back("dw_" + std::to_string(j));
    out.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), opts.dim);
    if (n == 0) return out;

    Rng rng(derive_seed(opts.seed, {0x77616c6b}));

    std::vector<std::vector<NodeIndex>> walks;
    walks.reserve(n * static_cast<std::size_t>(opts.walks_per_node));
    std::vector<NodeIndex> starts(n);
    for (NodeIndex u = 0; u < n; ++u) starts[u] = u;
    for (int r = 0; r < opts.walks_per_node; ++r) {
        rng.shuffle(starts.begin(), starts.end());
        for (auto s : starts) {
            std::vector<NodeIndex> walk{s};
            walk.reserve(static_cast<std::size_t>(opts.walk_length));
            while (walk.size() < static_cast<std::size_t>(opts.walk_length)) {
                auto nb = g.neighbors(walk.back());
                if (nb.empty()) break;
                walk.push_back(nb[rng.below(nb.size())]);
            }
            walks.push_back(std::move(walk));
        }
    }
    const auto cdf = negative_table(walks, n);
    auto draw_negative = [&] {
        auto it = std::upper_bound(cdf.begin(), cdf.end(), rng.uniform());
        return static_cast<NodeIndex>(std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), n - 1));
    };

    std::vector<double> in_vec(n * dim), out_vec(n * dim, 0.0), grad(dim);
    for (auto& x : in_vec) x = (rng.uniform() - 0.5) / static_cast<double>(dim);

    std::size_t total_pairs = 0;
    for (const auto& w : walks) total_pairs += w.size();
    total_pairs *= static_cast<std::size_t>(std::max(1, opts.epochs));
    std::size_t processed = 0;

    auto update = [&](NodeIndex center, NodeIndex target, double label, double lr) {
        double* cv = &in_vec[center * dim];
        double* tv = &out_vec[target * dim];
        double dot = 0.0;
        for (std::size_t k = 0; k < dim; ++k) dot += cv[k] * tv[k];
        const double gcoef = (label - sigmoid(dot)) * lr;
        for (std::size_t k = 0; k < dim; ++k) {
            grad[k] += gcoef * tv[k];
            tv[k] += gcoef * cv[k];
        }
    };

    for (int epoch = 0; epoch < std::max(1, opts.epochs); ++epoch) {
        for (const auto& walk : walks) {
            for (std::size_t i = 0; i < walk.size(); ++i, ++processed) {
                const double lr = std::max(opts.learning_rate * 1e-4,
                                           opts.learning_rate * (1.0 - static_cast<double>(processed) /
                                                                           static_cast<double>(total_pairs)));
                // word2vec-style dynamic window
                const auto shrink = rng.below(static_cast<std::uint64_t>(std::max(1, opts.window)));
                const auto span = static_cast<std::size_t>(std::max(1, opts.window)) - shrink;
                const auto lo = i >= span ? i - span : 0;
                const auto hi = std::min(walk.size() - 1, i + span);
                for (std::size_t j = lo; j <= hi; ++j) {
                    if (j == i) continue;
                    std::fill(grad.begin(), grad.end(), 0.0);
                    update(walk[i], walk[j], 1.0, lr);
                    for (int k = 0; k < opts.negatives; ++k) {
                        auto neg = draw_negative();
                        if (neg == walk[j]) continue;
                        update(walk[i], neg, 0.0, lr);
                    }
                    double* cv = &in_vec[walk[i] * dim];
                    for (std::size_t k = 0; k < dim; ++k) cv[k] += grad[k];
                }
            }
        }
    }

    for (std::size_t u = 0; u < n; ++u) {
        for (std::size_t k = 0; k < dim; ++k) {
            out.values(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(k)) = in_vec[u * dim + k];
        }
    }
    return out;
}

}  // namespace deeppp
