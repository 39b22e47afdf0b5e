#pragma once

// Brute-force reference implementations used only by the tests. Everything
// here is dense and slow on purpose, and shares no code with the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

namespace oracle {

using Dense = Eigen::MatrixXd;
using EdgeList = std::vector<std::pair<std::uint32_t, std::uint32_t>>;

inline Dense adjacency(std::size_t n, const EdgeList& edges) {
    Dense a = Dense::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (auto [u, v] : edges) {
        if (u == v) continue;
        a(u, v) = 1.0;
        a(v, u) = 1.0;
    }
    return a;
}

/// D^-1/2 (A + I) D^-1/2 straight from the definition.
inline Dense normalized(const Dense& a) {
    const auto n = a.rows();
    Dense at = a + Dense::Identity(n, n);
    Eigen::VectorXd d = at.rowwise().sum();
    Dense out(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) out(i, j) = at(i, j) / std::sqrt(d(i) * d(j));
    }
    return out;
}

/// Personalized PageRank by plain power iteration: pi <- (1-a) A pi + a e.
inline Eigen::VectorXd ppr_power(const Dense& ahat, Eigen::Index root, double alpha, int iters = 20000) {
    const auto n = ahat.rows();
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    e(root) = 1.0;
    Eigen::VectorXd pi = e;
    for (int k = 0; k < iters; ++k) {
        Eigen::VectorXd next = (1.0 - alpha) * ahat * pi + alpha * e;
        const double diff = (next - pi).cwiseAbs().maxCoeff();
        pi = next;
        if (diff < 1e-16) break;
    }
    return pi;
}

inline Dense softmax_rows(const Dense& z) {
    Dense p(z.rows(), z.cols());
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        Eigen::RowVectorXd r = (z.row(i).array() - z.row(i).maxCoeff()).exp();
        p.row(i) = r / r.sum();
    }
    return p;
}

/// Random simple graph: each pair joined with probability p.
inline EdgeList random_graph(std::size_t n, double p, std::mt19937_64& rng) {
    std::bernoulli_distribution coin(p);
    EdgeList edges;
    for (std::uint32_t u = 0; u < n; ++u) {
        for (std::uint32_t v = u + 1; v < n; ++v) {
            if (coin(rng)) edges.emplace_back(u, v);
        }
    }
    return edges;
}

/// Coreness by definition: the largest k such that v survives repeated
/// deletion of vertices with degree < k.
inline std::vector<int> coreness(const Dense& a) {
    const auto n = static_cast<std::size_t>(a.rows());
    std::vector<int> core(n, 0);
    for (int k = 1; k <= static_cast<int>(n); ++k) {
        std::vector<bool> alive(n, true);
        bool changed = true;
        while (changed) {
            changed = false;
            for (std::size_t v = 0; v < n; ++v) {
                if (!alive[v]) continue;
                int deg = 0;
                for (std::size_t u = 0; u < n; ++u) deg += alive[u] && a(v, u) > 0 ? 1 : 0;
                if (deg < k) {
                    alive[v] = false;
                    changed = true;
                }
            }
        }
        for (std::size_t v = 0; v < n; ++v) {
            if (alive[v]) core[v] = k;
        }
    }
    return core;
}

/// Local clustering: closed triangles over all neighbor pairs.
inline std::vector<double> clustering(const Dense& a) {
    const auto n = a.rows();
    std::vector<double> out(static_cast<std::size_t>(n), 0.0);
    for (Eigen::Index v = 0; v < n; ++v) {
        std::vector<Eigen::Index> nb;
        for (Eigen::Index u = 0; u < n; ++u) {
            if (a(v, u) > 0) nb.push_back(u);
        }
        if (nb.size() < 2) continue;
        double links = 0.0;
        for (std::size_t i = 0; i < nb.size(); ++i) {
            for (std::size_t j = i + 1; j < nb.size(); ++j) links += a(nb[i], nb[j]);
        }
        out[static_cast<std::size_t>(v)] = 2.0 * links / static_cast<double>(nb.size() * (nb.size() - 1));
    }
    return out;
}

/// AUC by enumerating every (positive, negative) pair.
inline double auc_pairs(const std::vector<double>& s, const std::vector<int>& y) {
    double wins = 0.0, pairs = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (y[i] != 1) continue;
        for (std::size_t j = 0; j < s.size(); ++j) {
            if (y[j] != 0) continue;
            pairs += 1.0;
            wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
        }
    }
    return wins / pairs;
}

inline double f1_at(const std::vector<double>& s, const std::vector<int>& y, double t) {
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const bool pos = s[i] >= t;
        tp += pos && y[i] == 1;
        fp += pos && y[i] == 0;
        fn += !pos && y[i] == 1;
    }
    const double p = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    const double r = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    return p + r > 0 ? 2 * p * r / (p + r) : 0.0;
}

/// Central differences of f at x along every coordinate.
inline std::vector<double> finite_difference(const std::function<double(const std::vector<double>&)>& f,
                                             std::vector<double> x, double step) {
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double keep = x[i];
        x[i] = keep + step;
        const double up = f(x);
        x[i] = keep - step;
        const double down = f(x);
        x[i] = keep;
        g[i] = (up - down) / (2.0 * step);
    }
    return g;
}

// Connected components of a dense adjacency.
inline std::vector<int> components(const Dense& a) {
    const auto n = a.rows();
    std::vector<int> comp(static_cast<std::size_t>(n), -1);
    int next = 0;
    for (Eigen::Index s = 0; s < n; ++s) {
        if (comp[s] >= 0) continue;
        std::vector<Eigen::Index> stack{s};
        comp[s] = next;
        while (!stack.empty()) {
            const auto v = stack.back();
            stack.pop_back();
            for (Eigen::Index u = 0; u < n; ++u) {
                if (a(v, u) > 0 && comp[u] < 0) {
                    comp[u] = next;
                    stack.push_back(u);
                }
            }
        }
        ++next;
    }
    return comp;
}

// Fixed point of x = (1-d)/n + d P x with P the closed-neighborhood walk, by LU.
inline Eigen::VectorXd pagerank(const Dense& a, double d) {
    const auto n = a.rows();
    Dense at = a + Dense::Identity(n, n);
    Eigen::VectorXd deg = at.colwise().sum().transpose();
    Dense p(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) p(i, j) = at(i, j) / deg(j);
    }
    Dense lhs = Dense::Identity(n, n) - d * p;
    Eigen::VectorXd rhs = Eigen::VectorXd::Constant(n, (1.0 - d) / static_cast<double>(n));
    return lhs.fullPivLu().solve(rhs);
}

// Per component: eigenvector of the largest eigenvalue, abs, max-normalized.
inline Eigen::VectorXd eigenvector(const Dense& a) {
    const auto n = a.rows();
    const auto comp = components(a);
    Eigen::VectorXd out(n);
    const int count = n == 0 ? 0 : *std::max_element(comp.begin(), comp.end()) + 1;
    for (int c = 0; c < count; ++c) {
        std::vector<Eigen::Index> members;
        for (Eigen::Index v = 0; v < n; ++v) {
            if (comp[v] == c) members.push_back(v);
        }
        const auto m = static_cast<Eigen::Index>(members.size());
        Dense sub(m, m);
        for (Eigen::Index i = 0; i < m; ++i) {
            for (Eigen::Index j = 0; j < m; ++j) sub(i, j) = a(members[i], members[j]);
        }
        Eigen::SelfAdjointEigenSolver<Dense> es(sub);
        Eigen::VectorXd v = es.eigenvectors().col(m - 1).cwiseAbs();
        v /= v.maxCoeff();
        for (Eigen::Index i = 0; i < m; ++i) out(members[i]) = v(i);
    }
    return out;
}

// Uniform vector projected on the top eigenspace of A (the nonnegative part
// of the top eigenspace of A A^T), unit norm.
inline Eigen::VectorXd hits(const Dense& a) {
    const auto n = a.rows();
    Eigen::SelfAdjointEigenSolver<Dense> es(a);
    const double top = es.eigenvalues()(n - 1);
    Eigen::VectorXd u = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
    Eigen::VectorXd proj = Eigen::VectorXd::Zero(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        if (es.eigenvalues()(k) < top - 1e-9 * std::max(1.0, top)) continue;
        const auto vk = es.eigenvectors().col(k);
        proj += vk.dot(u) * vk;
    }
    proj /= proj.norm();
    // must also be a top eigenvector of A A^T
    Dense aat = a * a.transpose();
    const double top2 = Eigen::SelfAdjointEigenSolver<Dense>(aat).eigenvalues()(n - 1);
    if ((aat * proj - top2 * proj).norm() > 1e-8) proj.setConstant(std::nan(""));
    return proj;
}

}  // namespace oracle
