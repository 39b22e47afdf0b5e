#include "deeppp/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "deeppp/error.hpp"
#include "deeppp/sampler.hpp"
#include "deeppp/textio.hpp"

namespace deeppp {

namespace {

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

std::vector<std::vector<NodeIndex>> connected_components(const Graph& g) {
    const auto n = g.node_count();
    std::vector<char> seen(n, 0);
    std::vector<std::vector<NodeIndex>> comps;
    std::vector<NodeIndex> stack;
    for (NodeIndex s = 0; s < n; ++s) {
        if (seen[s]) continue;
        comps.emplace_back();
        auto& comp = comps.back();
        seen[s] = 1;
        stack.push_back(s);
        while (!stack.empty()) {
            auto u = stack.back();
            stack.pop_back();
            comp.push_back(u);
            for (auto v : g.neighbors(u)) {
                if (!seen[v]) {
                    seen[v] = 1;
                    stack.push_back(v);
                }
            }
        }
        std::sort(comp.begin(), comp.end());
    }
    return comps;
}

// y = A x on the raw adjacency.
void adjacency_multiply(const Graph& g, const std::vector<double>& x, std::vector<double>& y) {
    for (NodeIndex u = 0; u < g.node_count(); ++u) {
        double s = 0.0;
        for (auto v : g.neighbors(u)) s += x[v];
        y[u] = s;
    }
}

double normalize_l2(std::vector<double>& x) {
    double norm = 0.0;
    for (double v : x) norm += v * v;
    norm = std::sqrt(norm);
    if (norm > 0.0) {
        for (double& v : x) v /= norm;
    }
    return norm;
}

}  // namespace

std::vector<double> pagerank(const NormalizedAdjacency& adj, double damping, double tol, int max_iter) {
    if (!(tol > 0.0)) throw InputError("pagerank tolerance must be positive");
    if (!(damping > 0.0 && damping < 1.0)) throw InputError("pagerank damping must lie in (0,1)");
    const auto n = static_cast<std::size_t>(adj.size());
    if (n == 0) return {};

    // The stored pattern is A + I and the diagonal holds 1/d_hat.
    const auto& m = adj.matrix;
    std::vector<double> inv_dhat(n);
    for (std::size_t i = 0; i < n; ++i) inv_dhat[i] = m.coeff(static_cast<int>(i), static_cast<int>(i));

    std::vector<double> p(n, 1.0 / static_cast<double>(n)), next(n);
    const double teleport = (1.0 - damping) / static_cast<double>(n);
    double residual = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator e(m, static_cast<int>(i)); e; ++e) {
                s += p[static_cast<std::size_t>(e.col())] * inv_dhat[static_cast<std::size_t>(e.col())];
            }
            next[i] = teleport + damping * s;
        }
        residual = max_abs_diff(p, next);
        p.swap(next);
        if (residual < tol) {
            const double total = std::accumulate(p.begin(), p.end(), 0.0);
            for (double& v : p) v /= total;
            return p;
        }
    }
    throw ConvergenceError("pagerank did not converge in " + std::to_string(max_iter) + " iterations",
                           residual);
}

std::vector<double> eigenvector_centrality(const Graph& g, double tol, int max_iter) {
    const auto n = g.node_count();
    std::vector<double> score(n, 1.0);
    for (const auto& comp : connected_components(g)) {
        if (comp.size() == 1) continue;
        std::vector<NodeIndex> local(n, 0);
        for (std::size_t i = 0; i < comp.size(); ++i) local[comp[i]] = static_cast<NodeIndex>(i);
        std::vector<double> x(comp.size(), 1.0), y(comp.size());
        double residual = 0.0;
        bool converged = false;
        for (int it = 0; it < max_iter && !converged; ++it) {
            // (A + I) x keeps the iteration from oscillating on bipartite components.
            double top = 0.0;
            for (std::size_t i = 0; i < comp.size(); ++i) {
                double s = x[i];
                for (auto v : g.neighbors(comp[i])) s += x[local[v]];
                y[i] = s;
                top = std::max(top, s);
            }
            for (double& v : y) v /= top;
            residual = max_abs_diff(x, y);
            x.swap(y);
            converged = residual < tol;
        }
        if (!converged) {
            throw ConvergenceError("eigenvector centrality did not converge", residual);
        }
        for (std::size_t i = 0; i < comp.size(); ++i) score[comp[i]] = x[i];
    }
    return score;
}

std::vector<double> degree_reciprocal(const Graph& g) {
    std::vector<double> out(g.node_count(), 1.0);
    for (NodeIndex u = 0; u < g.node_count(); ++u) {
        if (g.degree(u) > 0) out[u] = 1.0 / static_cast<double>(g.degree(u));
    }
    return out;
}

std::vector<int> coreness(const Graph& g) {
    const auto n = g.node_count();
    std::vector<int> deg(n);
    int max_deg = 0;
    for (NodeIndex u = 0; u < n; ++u) {
        deg[u] = static_cast<int>(g.degree(u));
        max_deg = std::max(max_deg, deg[u]);
    }
    // Bucket sort by degree, then peel in increasing order.
    std::vector<std::size_t> bin(static_cast<std::size_t>(max_deg) + 1, 0);
    for (auto d : deg) ++bin[static_cast<std::size_t>(d)];
    std::size_t start = 0;
    for (auto& b : bin) {
        auto count = b;
        b = start;
        start += count;
    }
    std::vector<NodeIndex> order(n);
    std::vector<std::size_t> pos(n);
    for (NodeIndex u = 0; u < n; ++u) {
        pos[u] = bin[static_cast<std::size_t>(deg[u])]++;
        order[pos[u]] = u;
    }
    for (std::size_t d = bin.size(); d-- > 1;) bin[d] = bin[d - 1];
    if (!bin.empty()) bin[0] = 0;

    for (std::size_t i = 0; i < n; ++i) {
        auto u = order[i];
        for (auto v : g.neighbors(u)) {
            if (deg[v] > deg[u]) {
                auto dv = static_cast<std::size_t>(deg[v]);
                auto pv = pos[v];
                auto pw = bin[dv];
                auto w = order[pw];
                if (v != w) {
                    std::swap(order[pv], order[pw]);
                    pos[v] = pw;
                    pos[w] = pv;
                }
                ++bin[dv];
                --deg[v];
            }
        }
    }
    return deg;
}

std::vector<double> clustering_coefficient(const Graph& g) {
    std::vector<double> out(g.node_count(), 0.0);
    for (NodeIndex u = 0; u < g.node_count(); ++u) {
        auto nu = g.neighbors(u);
        const auto d = nu.size();
        if (d < 2) continue;
        std::size_t links = 0;
        for (auto v : nu) {
            auto nv = g.neighbors(v);
            // Sorted-list intersection counts each neighbor-neighbor edge twice.
            auto a = nu.begin();
            auto b = nv.begin();
            while (a != nu.end() && b != nv.end()) {
                if (*a < *b) {
                    ++a;
                } else if (*b < *a) {
                    ++b;
                } else {
                    ++links;
                    ++a;
                    ++b;
                }
            }
        }
        out[u] = static_cast<double>(links) / static_cast<double>(d * (d - 1));
    }
    return out;
}

namespace {

void positive_part(const Graph& g, std::vector<double>& x, std::vector<double>& tmp) {
    adjacency_multiply(g, x, tmp);
    double norm = 0.0;
    for (double v : tmp) norm += v * v;
    norm = std::sqrt(norm);
    if (norm == 0.0) return;
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += tmp[i] / norm;
    normalize_l2(x);
}

}  // namespace

std::vector<HubAuthority> hits(const Graph& g, double tol, int max_iter) {
    const auto n = g.node_count();
    std::vector<HubAuthority> out(n);
    if (n == 0) return out;
    const double uniform = 1.0 / std::sqrt(static_cast<double>(n));
    if (g.edge_count() == 0) {
        for (auto& s : out) s = {uniform, uniform};
        return out;
    }

    std::vector<double> hub(n, uniform), auth(n, uniform), tmp(n), next(n);
    double residual = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        // authority <- A^T (A authority); A is symmetric so A^T == A.
        adjacency_multiply(g, auth, tmp);
        adjacency_multiply(g, tmp, next);
        normalize_l2(next);
        residual = max_abs_diff(auth, next);
        auth.swap(next);

        // hub <- A (A^T hub)
        adjacency_multiply(g, hub, tmp);
        adjacency_multiply(g, tmp, next);
        normalize_l2(next);
        residual = std::max(residual, max_abs_diff(hub, next));
        hub.swap(next);

        if (residual < tol) {
            // Bipartite components give A A^T a degenerate top eigenspace
            // (A has both +l and -l). x + A x / |A x| drops the -l part and
            // leaves the nonnegative Perron direction.
            positive_part(g, hub, tmp);
            positive_part(g, auth, tmp);
            for (std::size_t i = 0; i < n; ++i) out[i] = {hub[i], auth[i]};
            return out;
        }
    }
    throw ConvergenceError("HITS did not converge", residual);
}

EgoActivationFeatures ego_activation_features(const EgoInstance& inst) {
    const auto m = inst.size();
    std::vector<std::vector<NodeIndex>> adj(m);
    for (auto [u, v] : inst.edges) {
        adj[u].push_back(v);
        adj[v].push_back(u);
    }
    const auto ego = inst.ego_index;
    std::vector<NodeIndex> active;
    for (auto v : adj[ego]) {
        if (inst.neighbor_activation[v]) active.push_back(v);
    }
    EgoActivationFeatures f;
    const auto k = active.size();
    f.active_count = static_cast<double>(k);
    f.active_ratio = adj[ego].empty() ? 0.0 : static_cast<double>(k) / static_cast<double>(adj[ego].size());
    if (k == 0) return f;

    std::vector<char> in_set(m, 0);
    for (auto v : active) in_set[v] = 1;
    std::size_t internal_edges = 0;
    for (auto [u, v] : inst.edges) {
        if (in_set[u] && in_set[v]) ++internal_edges;
    }
    if (k >= 2) {
        f.active_density = static_cast<double>(internal_edges) / (static_cast<double>(k * (k - 1)) / 2.0);
    }

    std::vector<char> seen(m, 0);
    std::vector<NodeIndex> stack;
    std::size_t components = 0;
    for (auto s : active) {
        if (seen[s]) continue;
        ++components;
        seen[s] = 1;
        stack.push_back(s);
        while (!stack.empty()) {
            auto u = stack.back();
            stack.pop_back();
            for (auto v : adj[u]) {
                if (in_set[v] && !seen[v]) {
                    seen[v] = 1;
                    stack.push_back(v);
                }
            }
        }
    }
    f.active_components = static_cast<double>(components);
    return f;
}

LoadedEmbeddings load_embeddings(const std::filesystem::path& path, const Graph& g) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open embedding file '" + path.string() + "'");
    LoadedEmbeddings out;
    std::vector<std::vector<double>> rows(g.node_count());
    std::size_t dim = 0;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (is_blank_or_comment(line)) continue;
        auto fields = split_fields(line);
        const auto where = path.string() + ":" + std::to_string(lineno);
        if (fields.size() < 2) throw InputError(where + ": expected an id and at least one value");
        const auto d = fields.size() - 1;
        if (dim == 0) {
            dim = d;
        } else if (d != dim) {
            throw InputError(where + ": row has " + std::to_string(d) + " values, expected " +
                             std::to_string(dim));
        }
        std::vector<double> vals(d);
        for (std::size_t i = 0; i < d; ++i) {
            try {
                std::size_t used = 0;
                vals[i] = std::stod(fields[i + 1], &used);
                if (used != fields[i + 1].size()) throw std::invalid_argument("trailing");
            } catch (const std::exception&) {
                throw InputError(where + ": '" + fields[i + 1] + "' is not a number");
            }
            if (!std::isfinite(vals[i])) throw InputError(where + ": non-finite value");
        }
        auto idx = g.find(fields[0]);
        if (!idx) {
            out.warnings.push_back(where + ": unknown id '" + fields[0] + "' skipped");
            continue;
        }
        rows[*idx] = std::move(vals);
    }
    if (dim == 0) throw InputError("embedding file '" + path.string() + "' has no rows");

    out.features.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(g.node_count()),
                                                static_cast<Eigen::Index>(dim));
    for (std::size_t u = 0; u < rows.size(); ++u) {
        if (rows[u].empty()) {
            out.warnings.push_back("node '" + g.id(static_cast<NodeIndex>(u)) +
                                   "' has no embedding row; filled with zeros");
            continue;
        }
        for (std::size_t j = 0; j < dim; ++j) {
            out.features.values(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(j)) = rows[u][j];
        }
    }
    for (std::size_t j = 0; j < dim; ++j) out.features.column_names.push_back("emb_" + std::to_string(j));
    return out;
}

FeatureMatrix vertex_features(const Graph& g) {
    const auto n = static_cast<Eigen::Index>(g.node_count());
    FeatureMatrix fm;
    fm.column_names = {"pagerank", "eigenvector", "degree_reciprocal", "coreness",
                       "clustering", "hub", "authority", "degree"};
    fm.values.resize(n, 8);
    if (n == 0) return fm;
    const auto pr = pagerank(normalize_adjacency(g));
    const auto eig = eigenvector_centrality(g);
    const auto rec = degree_reciprocal(g);
    const auto core = coreness(g);
    const auto cc = clustering_coefficient(g);
    const auto ha = hits(g);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto u = static_cast<std::size_t>(i);
        fm.values(i, 0) = pr[u];
        fm.values(i, 1) = eig[u];
        fm.values(i, 2) = rec[u];
        fm.values(i, 3) = core[u];
        fm.values(i, 4) = cc[u];
        fm.values(i, 5) = ha[u].hub;
        fm.values(i, 6) = ha[u].authority;
        fm.values(i, 7) = static_cast<double>(g.degree(static_cast<NodeIndex>(u)));
    }
    return fm;
}

FeatureMatrix assemble_features(std::span<const FeatureMatrix> parts, bool standardize,
                                std::span<const Eigen::Index> fit_rows) {
    FeatureMatrix out;
    if (parts.empty()) return out;
    const auto n = parts.front().rows();
    Eigen::Index width = 0;
    for (const auto& p : parts) {
        if (p.rows() != n) {
            throw InputError("feature block row mismatch: " + std::to_string(p.rows()) + " vs " +
                             std::to_string(n));
        }
        width += p.cols();
    }
    out.values.resize(n, width);
    Eigen::Index col = 0;
    for (const auto& p : parts) {
        out.values.middleCols(col, p.cols()) = p.values;
        col += p.cols();
        out.column_names.insert(out.column_names.end(), p.column_names.begin(), p.column_names.end());
    }
    if (!standardize) return out;

    std::vector<Eigen::Index> rows(fit_rows.begin(), fit_rows.end());
    if (rows.empty()) {
        rows.resize(static_cast<std::size_t>(n));
        std::iota(rows.begin(), rows.end(), Eigen::Index{0});
    }
    const double count = static_cast<double>(rows.size());
    out.standardization.resize(static_cast<std::size_t>(width));
    for (Eigen::Index j = 0; j < width; ++j) {
        double mean = 0.0;
        for (auto r : rows) mean += out.values(r, j);
        mean /= count;
        double var = 0.0;
        for (auto r : rows) var += (out.values(r, j) - mean) * (out.values(r, j) - mean);
        var /= count;
        double sd = std::sqrt(var);
        if (!(sd > 1e-12)) sd = 1.0;
        out.values.col(j) = (out.values.col(j).array() - mean) / sd;
        out.standardization[static_cast<std::size_t>(j)] = {mean, sd};
    }
    return out;
}

void write_feature_csv(const FeatureMatrix& fm, const Graph& g, const std::filesystem::path& path) {
    std::ostringstream os;
    os << "id";
    for (const auto& c : fm.column_names) os << ',' << csv_escape(c);
    os << '\n';
    for (Eigen::Index i = 0; i < fm.rows(); ++i) {
        os << csv_escape(g.id(static_cast<NodeIndex>(i)));
        for (Eigen::Index j = 0; j < fm.cols(); ++j) os << ',' << format_double(fm.values(i, j));
        os << '\n';
    }
    write_text_file(path.string(), os.str());
}

}  // namespace deeppp
