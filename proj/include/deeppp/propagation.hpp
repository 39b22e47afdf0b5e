#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "deeppp/graph.hpp"

namespace deeppp {

// =============================================================================
// Propagation heads
//
// Every head consumes per-node logits H (m x c) produced by the predictor and
// returns row-stochastic class probabilities:
//
//   PPNP    softmax( alpha (I - (1-alpha) A)^-1 H )
//   APPNP   Z0 = H,  Z(k+1) = (1-alpha) A Z(k) + alpha H,  softmax(Z(K))
//   DEEPPP  softmax( alpha (I - (1-alpha) A)^-1 H + alpha H )
//   GCN     softmax( A H )
//   GAT     softmax( mean over heads of attention-weighted W_k h_j )
//
// where A is the self-loop normalized adjacency of the instance.
// =============================================================================

enum class Head : std::uint8_t { GCN, GAT, PPNP, APPNP, DEEPPP };

const char* to_string(Head h);
Head parse_head(std::string_view s);

struct PropagationConfig {
    /// Teleport probability; alpha == 1 means no propagation.
    double alpha = 0.8;
    int k_iters = 10;
    Head head = Head::DEEPPP;
    int gat_heads = 4;
    double leaky_slope = 0.2;
    /// DEEPPP only: exact resolvent when true, K power steps otherwise.
    bool exact = true;

    /// Throws InputError unless alpha in (0,1], k_iters >= 0, gat_heads >= 1.
    void validate() const;
};

using LogitMatrix = Eigen::MatrixXd;

enum class Activation : std::uint8_t { Identity, Relu };

/// Row-wise softmax with max subtraction.
Eigen::MatrixXd row_softmax(const Eigen::MatrixXd& z);

/// alpha (I - (1-alpha) A)^-1 via a dense Cholesky factorization. The system
/// matrix has spectrum in [alpha, 2 - alpha], so it is always SPD.
Eigen::MatrixXd ppr_matrix(const NormalizedAdjacency& adj, double alpha);

/// Personalized PageRank vector of `root`: solves (I - (1-alpha) A) pi = alpha e_root.
Eigen::VectorXd personalized_pagerank_exact(const NormalizedAdjacency& adj, Eigen::Index root, double alpha);

/// I(x, y): the y-th entry of the personalized PageRank vector of x.
double influence_score(const NormalizedAdjacency& adj, double alpha, Eigen::Index x, Eigen::Index y);

/// Pre-softmax PPNP logits alpha (I - (1-alpha) A)^-1 H.
Eigen::MatrixXd ppnp_logits(const NormalizedAdjacency& adj, const LogitMatrix& h, double alpha);
Eigen::MatrixXd ppnp_forward(const NormalizedAdjacency& adj, const LogitMatrix& h, double alpha);

/// K-th power iterate Z(K); Z(0) = H.
Eigen::MatrixXd appnp_logits(const NormalizedAdjacency& adj, const LogitMatrix& h, double alpha, int k);
Eigen::MatrixXd appnp_forward(const NormalizedAdjacency& adj, const LogitMatrix& h, double alpha, int k);

/// Pre-softmax DeepPP logits: PPNP logits (exact, or the K-th APPNP iterate)
/// plus residual_scale * H. residual_scale defaults to alpha; passing 0
/// recovers PPNP.
Eigen::MatrixXd deeppp_logits(const NormalizedAdjacency& adj, const LogitMatrix& h, double alpha, bool exact,
                              int k, double residual_scale);
Eigen::MatrixXd deeppp_forward(const NormalizedAdjacency& adj, const LogitMatrix& h, double alpha, bool exact,
                               int k);

/// sigma(A H W).
Eigen::MatrixXd gcn_layer(const NormalizedAdjacency& adj, const Eigen::MatrixXd& h, const Eigen::MatrixXd& w,
                          Activation act);

// -----------------------------------------------------------------------------
// Graph attention
// -----------------------------------------------------------------------------

/// Attention scope per node: sorted neighbor indices including the node itself.
using Neighborhoods = std::vector<std::vector<Eigen::Index>>;

/// Neighborhoods from the sparsity pattern of A (which carries self-loops).
Neighborhoods attention_scope(const NormalizedAdjacency& adj);

/// One attention head's intermediate values, kept for back-propagation.
struct AttentionHead {
    Eigen::MatrixXd projected;        // G = h W  (m x F')
    Eigen::VectorXd source_score;     // s_i = a_src . G_i
    Eigen::VectorXd target_score;     // t_j = a_dst . G_j
    /// coefficients[i][k] pairs with scope[i][k]; each row sums to 1.
    std::vector<std::vector<double>> coefficients;
    /// Pre-activation e_ij = s_i + t_j, aligned with coefficients.
    std::vector<std::vector<double>> raw;
};

/// alpha_ij = softmax_j LeakyReLU(a^T [W h_i || W h_j]) over j in scope[i].
/// `w` is F x F', `a` has length 2F' (source half first).
AttentionHead gat_attention(const Eigen::MatrixXd& h, const Eigen::MatrixXd& w, const Eigen::VectorXd& a,
                            const Neighborhoods& scope, double slope);

enum class HeadMerge : std::uint8_t { Concat, Average };

/// Multi-head attention layer: each head yields sum_j alpha_ij W_k h_j; heads
/// are concatenated (hidden layers) or averaged (output layer), then `act` is
/// applied.
Eigen::MatrixXd gat_layer(const Eigen::MatrixXd& h, const std::vector<Eigen::MatrixXd>& w_per_head,
                          const std::vector<Eigen::VectorXd>& a_per_head, const Neighborhoods& scope,
                          double slope, HeadMerge merge, Activation act);

}  // namespace deeppp
