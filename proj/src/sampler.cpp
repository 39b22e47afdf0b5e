#include "deeppp/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "deeppp/error.hpp"
#include "deeppp/random.hpp"

namespace deeppp {

const char* to_string(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Validation: return "val";
        case Split::Test: return "test";
    }
    return "?";
}

Split parse_split(std::string_view s) {
    if (s == "train") return Split::Train;
    if (s == "val") return Split::Validation;
    if (s == "test") return Split::Test;
    throw InputError("unknown split tag '" + std::string(s) + "'");
}

std::vector<std::size_t> InstanceSet::indices(Split s) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < split_tags.size(); ++i) {
        if (split_tags[i] == s) out.push_back(i);
    }
    return out;
}

ClassBalance InstanceSet::balance(Split s) const {
    ClassBalance b;
    for (auto i : indices(s)) (instances[i].label ? b.positives : b.negatives)++;
    return b;
}

EgoSample sample_ego(const Graph& g, NodeIndex ego, std::size_t m, double restart_prob, std::uint64_t seed) {
    if (ego >= g.node_count()) throw InputError("ego index out of range");
    if (m == 0) throw InputError("sample size must be positive");
    if (!(restart_prob > 0.0 && restart_prob < 1.0)) throw InputError("restart probability must lie in (0,1)");
    EgoSample out;
    out.nodes.push_back(ego);
    if (g.degree(ego) == 0) {
        out.isolated = true;
        return out;
    }
    if (m == 1) return out;

    Rng rng(derive_seed(seed, {ego}));
    std::unordered_set<NodeIndex> seen{ego};
    NodeIndex current = ego;
    const std::size_t budget = 50 * m;
    for (std::size_t step = 0; step < budget && out.nodes.size() < m; ++step) {
        if (current != ego && rng.bernoulli(restart_prob)) {
            current = ego;
            continue;
        }
        auto nb = g.neighbors(current);
        current = nb[rng.below(nb.size())];
        if (seen.insert(current).second) out.nodes.push_back(current);
    }
    return out;
}

EgoInstance build_instance(const Graph& g, std::span<const NodeIndex> sampled, NodeIndex ego,
                           std::uint8_t label, const FeatureMatrix& feat) {
    auto it = std::find(sampled.begin(), sampled.end(), ego);
    if (it == sampled.end()) throw InputError("ego is not part of the sampled node set");
    if (feat.rows() != static_cast<Eigen::Index>(g.node_count())) {
        throw InputError("feature matrix has " + std::to_string(feat.rows()) + " rows, graph has " +
                         std::to_string(g.node_count()) + " nodes");
    }
    const Graph sub = g.induced_subgraph(sampled);
    EgoInstance inst;
    inst.edges = sub.edges();
    inst.sub_adjacency = normalize_edges(sub.node_count(), inst.edges);
    inst.ego_index = static_cast<std::uint32_t>(it - sampled.begin());
    inst.neighbor_activation.assign(sub.activation().begin(), sub.activation().end());
    inst.neighbor_activation[inst.ego_index] = 0;
    inst.label = label ? 1 : 0;
    inst.ego_id = g.id(ego);
    inst.features.resize(static_cast<Eigen::Index>(sampled.size()), feat.cols());
    for (std::size_t i = 0; i < sampled.size(); ++i) {
        inst.features.row(static_cast<Eigen::Index>(i)) = feat.values.row(static_cast<Eigen::Index>(sampled[i]));
    }
    return inst;
}

namespace {

struct Candidate {
    std::size_t observation;
    NodeIndex ego;
    std::uint8_t label;
};

void check_monotone(const Observation& obs, std::size_t which) {
    if (obs.at_t.fingerprint() != obs.at_t_plus.fingerprint()) {
        throw InputError("observation " + std::to_string(which) + ": graphs at t and t+delta differ in structure");
    }
    for (NodeIndex u = 0; u < obs.at_t.node_count(); ++u) {
        if (obs.at_t.is_active(u) && !obs.at_t_plus.is_active(u)) {
            throw InputError("observation " + std::to_string(which) + ": node '" + obs.at_t.id(u) +
                             "' is active at t but inactive at t+delta");
        }
    }
}

}  // namespace

InstanceSet generate_dataset(std::span<const Observation> observations, const FeatureMatrix& feat,
                             const SamplerOptions& opts) {
    std::vector<Candidate> candidates;
    for (std::size_t k = 0; k < observations.size(); ++k) {
        const auto& obs = observations[k];
        check_monotone(obs, k);
        const auto& g = obs.at_t;
        for (NodeIndex u = 0; u < g.node_count(); ++u) {
            if (g.is_active(u)) continue;
            auto nb = g.neighbors(u);
            bool touched = std::any_of(nb.begin(), nb.end(), [&](NodeIndex v) { return g.is_active(v); });
            if (touched) candidates.push_back({k, u, static_cast<std::uint8_t>(obs.at_t_plus.is_active(u))});
        }
    }

    Rng rng(derive_seed(opts.seed, {0x73706c6974}));
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < candidates.size(); ++i) (candidates[i].label ? pos : neg).push_back(i);
    if (opts.balance && !pos.empty() && !neg.empty()) {
        auto& major = pos.size() > neg.size() ? pos : neg;
        const auto keep = std::min(pos.size(), neg.size());
        rng.shuffle(major.begin(), major.end());
        major.resize(keep);
        std::sort(major.begin(), major.end());
    }
    std::vector<std::size_t> kept;
    kept.insert(kept.end(), pos.begin(), pos.end());
    kept.insert(kept.end(), neg.begin(), neg.end());
    std::sort(kept.begin(), kept.end());

    InstanceSet set;
    set.provenance.graph_hash = observations.empty() ? 0 : observations.front().at_t.fingerprint();
    set.provenance.seed = opts.seed;
    set.provenance.sample_size = static_cast<std::uint32_t>(opts.sample_size);
    set.feature_names = feat.column_names;
    set.instances.reserve(kept.size());
    for (auto ci : kept) {
        const auto& c = candidates[ci];
        const auto& g = observations[c.observation].at_t;
        const auto walk_seed = derive_seed(opts.seed, {c.observation});
        auto sample = sample_ego(g, c.ego, opts.sample_size, opts.restart_prob, walk_seed);
        set.instances.push_back(build_instance(g, sample.nodes, c.ego, c.label, feat));
    }

    // Stratified split: shuffle each class, cut 75 / 12.5 / 12.5.
    set.split_tags.assign(set.instances.size(), Split::Train);
    for (std::uint8_t cls : {std::uint8_t{1}, std::uint8_t{0}}) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < set.instances.size(); ++i) {
            if (set.instances[i].label == cls) members.push_back(i);
        }
        rng.shuffle(members.begin(), members.end());
        const auto n = members.size();
        const auto n_train = (n * 3) / 4;
        const auto n_val = (n - n_train) / 2;
        for (std::size_t r = 0; r < n; ++r) {
            set.split_tags[members[r]] = r < n_train ? Split::Train
                                         : r < n_train + n_val ? Split::Validation
                                                               : Split::Test;
        }
    }
    return set;
}

InstanceSet generate_dataset(const Graph& g_t, const Graph& g_t_plus, const FeatureMatrix& feat,
                             const SamplerOptions& opts) {
    std::vector<Observation> obs{{g_t, g_t_plus}};
    return generate_dataset(obs, feat, opts);
}

void standardize_instances(InstanceSet& set) {
    const auto width = static_cast<Eigen::Index>(set.feature_width());
    std::vector<double> sum(static_cast<std::size_t>(width), 0.0), sq(static_cast<std::size_t>(width), 0.0);
    double count = 0.0;
    const auto train = set.indices(Split::Train);
    for (auto i : train) {
        const auto& f = set.instances[i].features;
        for (Eigen::Index r = 0; r < f.rows(); ++r) {
            for (Eigen::Index j = 0; j < width; ++j) sum[static_cast<std::size_t>(j)] += f(r, j);
        }
        count += static_cast<double>(f.rows());
    }
    set.standardization.assign(static_cast<std::size_t>(width), ColumnStats{});
    if (count == 0.0) return;
    for (Eigen::Index j = 0; j < width; ++j) set.standardization[static_cast<std::size_t>(j)].mean = sum[static_cast<std::size_t>(j)] / count;
    for (auto i : train) {
        const auto& f = set.instances[i].features;
        for (Eigen::Index r = 0; r < f.rows(); ++r) {
            for (Eigen::Index j = 0; j < width; ++j) {
                const double d = f(r, j) - set.standardization[static_cast<std::size_t>(j)].mean;
                sq[static_cast<std::size_t>(j)] += d * d;
            }
        }
    }
    for (Eigen::Index j = 0; j < width; ++j) {
        const double sd = std::sqrt(sq[static_cast<std::size_t>(j)] / count);
        set.standardization[static_cast<std::size_t>(j)].std = sd > 1e-12 ? sd : 1.0;
    }
    for (auto& inst : set.instances) {
        for (Eigen::Index j = 0; j < width; ++j) {
            const auto& st = set.standardization[static_cast<std::size_t>(j)];
            inst.features.col(j) = (inst.features.col(j).array() - st.mean) / st.std;
        }
    }
}

Eigen::MatrixXd instance_input(const EgoInstance& inst) {
    const auto m = static_cast<Eigen::Index>(inst.size());
    const auto f = inst.features.cols();
    Eigen::MatrixXd x(m, f + 6);
    x.leftCols(f) = inst.features;
    for (Eigen::Index i = 0; i < m; ++i) {
        x(i, f) = inst.neighbor_activation[static_cast<std::size_t>(i)];
        x(i, f + 1) = i == static_cast<Eigen::Index>(inst.ego_index) ? 1.0 : 0.0;
    }
    EgoActivationFeatures ego;
    const bool has_neighbor = std::any_of(inst.edges.begin(), inst.edges.end(), [&](const Edge& e) {
        return e.first == inst.ego_index || e.second == inst.ego_index;
    });
    if (has_neighbor) ego = ego_activation_features(inst);
    x.col(f + 2).setConstant(ego.active_count);
    x.col(f + 3).setConstant(ego.active_ratio);
    x.col(f + 4).setConstant(ego.active_density);
    x.col(f + 5).setConstant(ego.active_components);
    return x;
}

}  // namespace deeppp
