#include "deeppp/propagation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

#include "deeppp/error.hpp"

namespace deeppp {

const char* to_string(Head h) {
    switch (h) {
        case Head::GCN: return "GCN";
        case Head::GAT: return "GAT";
        case Head::PPNP: return "PPNP";
        case Head::APPNP: return "APPNP";
        case Head::DEEPPP: return "DEEPPP";
    }
    return "?";
}

Head parse_head(std::string_view s) {
    std::string up(s);
    std::transform(up.begin(), up.end(), up.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    if (up == "GCN") return Head::GCN;
    if (up == "GAT") return Head::GAT;
    if (up == "PPNP") return Head::PPNP;
    if (up == "APPNP") return Head::APPNP;
    if (up == "DEEPPP") return Head::DEEPPP;
    throw InputError("unknown propagation head '" + std::string(s) + "'");
}

void PropagationConfig::validate() const {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw InputError("alpha must lie in (0, 1], got " + std::to_string(alpha));
    if (k_iters < 0) throw InputError("k_iters must be >= 0");
    if (gat_heads < 1) throw InputError("gat_heads must be >= 1");
    if (!(leaky_slope >= 0.0)) throw InputError("leaky_slope must be >= 0");
}

namespace {

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw InputError("alpha must lie in (0, 1], got " + std::to_string(alpha));
}

void check_rows(const NormalizedAdjacency& adj, const Eigen::MatrixXd& h) {
    if (h.rows() != adj.size()) {
        throw InputError("logit rows (" + std::to_string(h.rows()) + ") differ from adjacency size (" +
                         std::to_string(adj.size()) + ")");
    }
}

Eigen::LLT<Eigen::MatrixXd> resolvent_factor(const NormalizedAdjacency& adj, double alpha) {
    const auto m = adj.size();
    Eigen::MatrixXd sys = Eigen::MatrixXd::Identity(m, m) - (1.0 - alpha) * adj.dense();
    Eigen::LLT<Eigen::MatrixXd> llt(sys);
    if (llt.info() != Eigen::Success) throw std::logic_error("PPR system is not positive definite");
    return llt;
}

double leaky(double x, double slope) { return x > 0.0 ? x : slope * x; }

}  // namespace

Eigen::MatrixXd row_softmax(const Eigen::MatrixXd& z) {
    Eigen::MatrixXd p(z.rows(), z.cols());
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        const double top = z.row(i).maxCoeff();
        p.row(i) = (z.row(i).array() - top).exp();
        p.row(i) /= p.row(i).sum();
    }
    return p;
}

Eigen::MatrixXd ppr_matrix(const NormalizedAdjacency& adj, double alpha) {
    check_alpha(alpha);
    const auto m = adj.size();
    return alpha * resolvent_factor(adj, alpha).solve(Eigen::MatrixXd::Identity(m, m));
}

Eigen::VectorXd personalized_pagerank_exact(const NormalizedAdjacency& adj, Eigen::Index root, double alpha) {
    check_alpha(alpha);
    if (root < 0 || root >= adj.size()) throw InputError("root index out of range");
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(adj.size());
    rhs(root) = alpha;
    return resolvent_factor(adj, alpha).solve(rhs);
}

double influence_score(const NormalizedAdjacency& adj, double alpha, Eigen::Index x, Eigen::Index y) {
    if (y < 0 || y >= adj.size()) throw InputError("target index out of range");
    return personalized_pagerank_exact(adj, x, alpha)(y);
}

Eigen::MatrixXd ppnp_logits(const NormalizedAdjacency& adj, const LogitMatrix& h, double alpha) {
    check_alpha(alpha);
    check_rows(adj, h);
    return alpha * resolvent_factor(adj, alpha).solve(h);
}

Eigen::MatrixXd ppnp_forward(const NormalizedAdjacency& adj, const LogitMatrix& h, double alpha) {
    return row_softmax(ppnp_logits(adj, h, alpha));
}

Eigen::MatrixXd appnp_logits(const NormalizedAdjacency& adj, const LogitMatrix& h, double alpha, int k) {
    check_alpha(alpha);
    check_rows(adj, h);
    if (k < 0) throw InputError("K must be >= 0");
    Eigen::MatrixXd z = h;
    for (int it = 0; it < k; ++it) {
        Eigen::MatrixXd next = (1.0 - alpha) * (adj.matrix * z) + alpha * h;
        z.swap(next);
    }
    return z;
}

Eigen::MatrixXd appnp_forward(const NormalizedAdjacency& adj, const LogitMatrix& h, double alpha, int k) {
    return row_softmax(appnp_logits(adj, h, alpha, k));
}

Eigen::MatrixXd deeppp_logits(const NormalizedAdjacency& adj, const LogitMatrix& h, double alpha, bool exact,
                              int k, double residual_scale) {
    Eigen::MatrixXd z = exact ? ppnp_logits(adj, h, alpha) : appnp_logits(adj, h, alpha, k);
    z += residual_scale * h;
    return z;
}

Eigen::MatrixXd deeppp_forward(const NormalizedAdjacency& adj, const LogitMatrix& h, double alpha, bool exact,
                               int k) {
    return row_softmax(deeppp_logits(adj, h, alpha, exact, k, alpha));
}

Eigen::MatrixXd gcn_layer(const NormalizedAdjacency& adj, const Eigen::MatrixXd& h, const Eigen::MatrixXd& w,
                          Activation act) {
    check_rows(adj, h);
    if (h.cols() != w.rows()) {
        throw InputError("gcn_layer: input width " + std::to_string(h.cols()) + " vs weight rows " +
                         std::to_string(w.rows()));
    }
    Eigen::MatrixXd out = adj.matrix * (h * w);
    if (act == Activation::Relu) out = out.cwiseMax(0.0);
    return out;
}

Neighborhoods attention_scope(const NormalizedAdjacency& adj) {
    Neighborhoods scope(static_cast<std::size_t>(adj.size()));
    for (Eigen::Index i = 0; i < adj.size(); ++i) {
        auto& row = scope[static_cast<std::size_t>(i)];
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(adj.matrix, i); it; ++it) {
            row.push_back(it.col());
        }
        if (!std::binary_search(row.begin(), row.end(), i)) {
            row.insert(std::lower_bound(row.begin(), row.end(), i), i);
        }
    }
    return scope;
}

AttentionHead gat_attention(const Eigen::MatrixXd& h, const Eigen::MatrixXd& w, const Eigen::VectorXd& a,
                            const Neighborhoods& scope, double slope) {
    if (h.cols() != w.rows()) throw InputError("gat_attention: feature width does not match W");
    if (a.size() != 2 * w.cols()) throw InputError("gat_attention: attention vector must have length 2F'");
    if (static_cast<Eigen::Index>(scope.size()) != h.rows()) throw InputError("gat_attention: scope size mismatch");
    const auto width = w.cols();
    AttentionHead out;
    out.projected = h * w;
    out.source_score = out.projected * a.head(width);
    out.target_score = out.projected * a.tail(width);
    out.coefficients.resize(scope.size());
    out.raw.resize(scope.size());
    for (std::size_t i = 0; i < scope.size(); ++i) {
        const auto& nb = scope[i];
        auto& raw = out.raw[i];
        auto& coef = out.coefficients[i];
        raw.resize(nb.size());
        coef.resize(nb.size());
        double top = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < nb.size(); ++k) {
            raw[k] = out.source_score(static_cast<Eigen::Index>(i)) + out.target_score(nb[k]);
            top = std::max(top, leaky(raw[k], slope));
        }
        double total = 0.0;
        for (std::size_t k = 0; k < nb.size(); ++k) {
            coef[k] = std::exp(leaky(raw[k], slope) - top);
            total += coef[k];
        }
        for (auto& c : coef) c /= total;
    }
    return out;
}

Eigen::MatrixXd gat_layer(const Eigen::MatrixXd& h, const std::vector<Eigen::MatrixXd>& w_per_head,
                          const std::vector<Eigen::VectorXd>& a_per_head, const Neighborhoods& scope,
                          double slope, HeadMerge merge, Activation act) {
    const auto heads = w_per_head.size();
    if (heads == 0 || a_per_head.size() != heads) throw InputError("gat_layer: need matching W and a per head");
    const auto width = w_per_head.front().cols();
    for (const auto& w : w_per_head) {
        if (w.cols() != width) throw InputError("gat_layer: heads must share output width");
    }
    const auto m = h.rows();
    Eigen::MatrixXd out = merge == HeadMerge::Concat
                              ? Eigen::MatrixXd::Zero(m, width * static_cast<Eigen::Index>(heads))
                              : Eigen::MatrixXd::Zero(m, width);
    for (std::size_t k = 0; k < heads; ++k) {
        const auto att = gat_attention(h, w_per_head[k], a_per_head[k], scope, slope);
        Eigen::MatrixXd agg = Eigen::MatrixXd::Zero(m, width);
        for (std::size_t i = 0; i < scope.size(); ++i) {
            for (std::size_t j = 0; j < scope[i].size(); ++j) {
                agg.row(static_cast<Eigen::Index>(i)) += att.coefficients[i][j] * att.projected.row(scope[i][j]);
            }
        }
        if (merge == HeadMerge::Concat) {
            out.middleCols(width * static_cast<Eigen::Index>(k), width) = agg;
        } else {
            out += agg / static_cast<double>(heads);
        }
    }
    if (act == Activation::Relu) out = out.cwiseMax(0.0);
    return out;
}

}  // namespace deeppp
