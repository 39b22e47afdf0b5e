#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "deeppp/error.hpp"
#include "deeppp/features.hpp"
#include "deeppp/graph.hpp"
#include "deeppp/sampler.hpp"
#include "oracles.hpp"

using namespace deeppp;
namespace fs = std::filesystem;

namespace {

Graph make(std::size_t n, const oracle::EdgeList& list) {
    std::vector<Edge> edges(list.begin(), list.end());
    return Graph::from_edges(n, edges);
}

Graph star(std::size_t leaves) {
    oracle::EdgeList e;
    for (std::uint32_t i = 1; i <= leaves; ++i) e.emplace_back(0, i);
    return make(leaves + 1, e);
}

// Fixed family used by every oracle comparison: 100 graphs, 1..10 nodes.
std::vector<std::pair<std::size_t, oracle::EdgeList>> family() {
    std::mt19937_64 rng(20240607);
    std::uniform_int_distribution<std::size_t> size(1, 10);
    std::uniform_real_distribution<double> density(0.1, 0.8);
    std::vector<std::pair<std::size_t, oracle::EdgeList>> out;
    for (int i = 0; i < 100; ++i) {
        const auto n = size(rng);
        const double p = density(rng);
        out.emplace_back(n, oracle::random_graph(n, p, rng));
    }
    return out;
}

class TempDir : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("deeppp_features_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    fs::path write(const std::string& name, const std::string& text) {
        const auto p = dir_ / name;
        std::ofstream(p, std::ios::binary) << text;
        return p;
    }

    fs::path dir_;
};

EgoInstance ego_with(std::size_t m, const oracle::EdgeList& edges, std::vector<std::uint8_t> act) {
    EgoInstance inst;
    inst.edges.assign(edges.begin(), edges.end());
    inst.ego_index = 0;
    inst.neighbor_activation = std::move(act);
    inst.neighbor_activation.resize(m, 0);
    return inst;
}

}  // namespace

// --- pagerank ---------------------------------------------------------------

TEST(PageRank, SingleEdgeIsUniform) {
    const auto pr = pagerank(normalize_adjacency(make(2, {{0, 1}})));
    EXPECT_NEAR(pr[0], 0.5, 1e-12);
    EXPECT_NEAR(pr[1], 0.5, 1e-12);
}

TEST(PageRank, IsolatedNode) {
    const auto pr = pagerank(normalize_adjacency(make(1, {})));
    ASSERT_EQ(pr.size(), 1u);
    EXPECT_NEAR(pr[0], 1.0, 1e-12);
}

TEST(PageRank, StarCenterDominates) {
    const auto g = star(3);
    const auto pr = pagerank(normalize_adjacency(g));
    const auto ref = oracle::pagerank(oracle::adjacency(4, {{0, 1}, {0, 2}, {0, 3}}), 0.85);
    for (int i = 1; i < 4; ++i) EXPECT_GT(pr[0], pr[i]);
    EXPECT_NEAR(std::accumulate(pr.begin(), pr.end(), 0.0), 1.0, 1e-9);
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(pr[i], ref(i), 1e-9);
}

TEST(PageRank, ReportsNonConvergence) {
    EXPECT_THROW(pagerank(normalize_adjacency(star(5)), 0.85, 1e-12, 2), ConvergenceError);
}

TEST(PageRank, MatchesLinearSolveOnFamily) {
    for (const auto& [n, edges] : family()) {
        const auto pr = pagerank(normalize_adjacency(make(n, edges)));
        const auto ref = oracle::pagerank(oracle::adjacency(n, edges), 0.85);
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            EXPECT_GE(pr[i], 0.0);
            EXPECT_NEAR(pr[i], ref(i), 1e-9);
            sum += pr[i];
        }
        EXPECT_NEAR(sum, 1.0, 1e-9);
    }
}

// --- eigenvector centrality ------------------------------------------------

TEST(Eigenvector, RegularGraphs) {
    for (double v : eigenvector_centrality(make(3, {{0, 1}, {1, 2}, {0, 2}}))) EXPECT_NEAR(v, 1.0, 1e-9);
    for (double v : eigenvector_centrality(make(2, {{0, 1}}))) EXPECT_NEAR(v, 1.0, 1e-9);
}

TEST(Eigenvector, PathMiddleIsMax) {
    const auto ec = eigenvector_centrality(make(3, {{0, 1}, {1, 2}}));
    const auto ref = oracle::eigenvector(oracle::adjacency(3, {{0, 1}, {1, 2}}));
    EXPECT_NEAR(ec[1], 1.0, 1e-9);
    EXPECT_NEAR(ec[0], ec[2], 1e-9);
    EXPECT_LT(ec[0], 1.0);
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(ec[i], ref(i), 1e-9);
}

TEST(Eigenvector, IsolatedNodesScoreOne) {
    const auto ec = eigenvector_centrality(make(3, {{0, 1}}));
    EXPECT_NEAR(ec[2], 1.0, 1e-12);
}

TEST(Eigenvector, MatchesEigensolverOnFamily) {
    for (const auto& [n, edges] : family()) {
        const auto ec = eigenvector_centrality(make(n, edges));
        const auto ref = oracle::eigenvector(oracle::adjacency(n, edges));
        for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(ec[i], ref(i), 1e-9) << "n=" << n << " node " << i;
    }
}

// --- degree reciprocal ------------------------------------------------------

TEST(DegreeReciprocal, Examples) {
    const auto r = degree_reciprocal(make(6, {{0, 1}, {0, 2}, {0, 3}, {0, 4}}));
    EXPECT_DOUBLE_EQ(r[0], 0.25);
    EXPECT_DOUBLE_EQ(r[1], 1.0);
    EXPECT_DOUBLE_EQ(r[5], 1.0);
}

// --- coreness ---------------------------------------------------------------

TEST(Coreness, Examples) {
    EXPECT_EQ(coreness(make(3, {{0, 1}, {1, 2}, {0, 2}})), (std::vector<int>{2, 2, 2}));
    EXPECT_EQ(coreness(make(3, {{0, 1}, {1, 2}})), (std::vector<int>{1, 1, 1}));
    const oracle::EdgeList k4p{{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}, {3, 4}};
    EXPECT_EQ(coreness(make(5, k4p)), (std::vector<int>{3, 3, 3, 3, 1}));
    EXPECT_EQ(oracle::coreness(oracle::adjacency(5, k4p)), (std::vector<int>{3, 3, 3, 3, 1}));
}

TEST(Coreness, MatchesFilteringOnFamily) {
    for (const auto& [n, edges] : family()) {
        EXPECT_EQ(coreness(make(n, edges)), oracle::coreness(oracle::adjacency(n, edges)));
    }
}

// --- clustering -------------------------------------------------------------

TEST(Clustering, Examples) {
    for (double c : clustering_coefficient(make(3, {{0, 1}, {1, 2}, {0, 2}}))) EXPECT_DOUBLE_EQ(c, 1.0);
    EXPECT_DOUBLE_EQ(clustering_coefficient(star(4))[0], 0.0);
    for (double c : clustering_coefficient(make(4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}}))) EXPECT_DOUBLE_EQ(c, 0.0);
}

TEST(Clustering, MatchesEnumerationOnFamily) {
    for (const auto& [n, edges] : family()) {
        const auto cc = clustering_coefficient(make(n, edges));
        const auto ref = oracle::clustering(oracle::adjacency(n, edges));
        for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(cc[i], ref[i], 1e-12);
    }
}

// --- hits -------------------------------------------------------------------

TEST(Hits, SingleEdge) {
    const auto h = hits(make(2, {{0, 1}}));
    for (const auto& s : h) {
        EXPECT_NEAR(s.hub, 1.0 / std::sqrt(2.0), 1e-12);
        EXPECT_NEAR(s.authority, 1.0 / std::sqrt(2.0), 1e-12);
    }
}

TEST(Hits, StarCenterAboveLeaves) {
    const auto h = hits(star(4));
    const auto ref = oracle::hits(oracle::adjacency(5, {{0, 1}, {0, 2}, {0, 3}, {0, 4}}));
    for (int i = 1; i < 5; ++i) EXPECT_GT(h[0].hub, h[i].hub);
    for (int i = 0; i < 5; ++i) EXPECT_NEAR(h[i].hub, ref(i), 1e-9);
}

TEST(Hits, EdgelessGraph) {
    const auto h = hits(make(4, {}));
    for (const auto& s : h) EXPECT_NEAR(s.hub, 0.5, 1e-12);
}

TEST(Hits, MatchesEigenspaceProjectionOnFamily) {
    for (const auto& [n, edges] : family()) {
        const auto h = hits(make(n, edges));
        const auto ref = oracle::hits(oracle::adjacency(n, edges));
        double hub2 = 0.0, auth2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            EXPECT_DOUBLE_EQ(h[i].hub, h[i].authority);
            EXPECT_NEAR(h[i].hub, ref(i), 1e-9) << "n=" << n << " node " << i;
            hub2 += h[i].hub * h[i].hub;
            auth2 += h[i].authority * h[i].authority;
        }
        EXPECT_NEAR(hub2, 1.0, 1e-9);
        EXPECT_NEAR(auth2, 1.0, 1e-9);
    }
}

// --- ego activation features ------------------------------------------------

TEST(EgoActivation, NoActiveNeighbors) {
    const auto f = ego_activation_features(ego_with(4, {{0, 1}, {0, 2}, {0, 3}}, {}));
    EXPECT_EQ(f.active_count, 0.0);
    EXPECT_EQ(f.active_ratio, 0.0);
    EXPECT_EQ(f.active_density, 0.0);
    EXPECT_EQ(f.active_components, 0.0);
}

TEST(EgoActivation, ActiveClique) {
    oracle::EdgeList e{{0, 1}, {0, 2}, {0, 3}, {0, 4}};
    for (std::uint32_t i = 1; i <= 4; ++i) {
        for (std::uint32_t j = i + 1; j <= 4; ++j) e.emplace_back(i, j);
    }
    const auto f = ego_activation_features(ego_with(5, e, {0, 1, 1, 1, 1}));
    EXPECT_EQ(f.active_count, 4.0);
    EXPECT_EQ(f.active_ratio, 1.0);
    EXPECT_EQ(f.active_density, 1.0);
    EXPECT_EQ(f.active_components, 1.0);
}

TEST(EgoActivation, TwoSeparateActive) {
    const auto f = ego_activation_features(ego_with(5, {{0, 1}, {0, 2}, {0, 3}, {0, 4}, {2, 3}}, {0, 1, 0, 1, 0}));
    EXPECT_EQ(f.active_count, 2.0);
    EXPECT_EQ(f.active_ratio, 0.5);
    EXPECT_EQ(f.active_density, 0.0);
    EXPECT_EQ(f.active_components, 2.0);
}

TEST(EgoActivation, MatchesBruteForceOnFamily) {
    std::mt19937_64 rng(99);
    for (const auto& [n, edges] : family()) {
        std::vector<std::uint8_t> act(n);
        for (auto& a : act) a = rng() % 2;
        act[0] = 0;
        const auto f = ego_activation_features(ego_with(n, edges, act));

        const auto a = oracle::adjacency(n, edges);
        std::vector<Eigen::Index> nb, on;
        for (Eigen::Index v = 1; v < static_cast<Eigen::Index>(n); ++v) {
            if (a(0, v) > 0) {
                nb.push_back(v);
                if (act[v]) on.push_back(v);
            }
        }
        const auto k = static_cast<Eigen::Index>(on.size());
        oracle::Dense sub = oracle::Dense::Zero(k, k);
        double links = 0.0;
        for (Eigen::Index i = 0; i < k; ++i) {
            for (Eigen::Index j = 0; j < k; ++j) {
                sub(i, j) = a(on[i], on[j]);
                if (i < j) links += sub(i, j);
            }
        }
        const auto comp = oracle::components(sub);
        const double ncomp = k == 0 ? 0.0 : *std::max_element(comp.begin(), comp.end()) + 1.0;
        EXPECT_EQ(f.active_count, static_cast<double>(k));
        EXPECT_DOUBLE_EQ(f.active_ratio, nb.empty() ? 0.0 : static_cast<double>(k) / static_cast<double>(nb.size()));
        EXPECT_DOUBLE_EQ(f.active_density, k < 2 ? 0.0 : 2.0 * links / static_cast<double>(k * (k - 1)));
        EXPECT_EQ(f.active_components, ncomp);
    }
}

// --- deepwalk ---------------------------------------------------------------

TEST(DeepWalk, CliquesSeparate) {
    oracle::EdgeList e;
    for (std::uint32_t base : {0u, 6u}) {
        for (std::uint32_t i = 0; i < 6; ++i) {
            for (std::uint32_t j = i + 1; j < 6; ++j) e.emplace_back(base + i, base + j);
        }
    }
    DeepWalkOptions o;
    o.dim = 16;
    o.seed = 7;
    o.epochs = 3;
    const auto fm = deepwalk_embed(make(12, e), o);
    ASSERT_EQ(fm.rows(), 12);
    ASSERT_EQ(fm.cols(), 16);
    auto cosine = [&](int i, int j) {
        const auto a = fm.values.row(i), b = fm.values.row(j);
        return a.dot(b) / (a.norm() * b.norm());
    };
    double intra = 0.0, inter = 0.0;
    int ni = 0, nx = 0;
    for (int i = 0; i < 12; ++i) {
        for (int j = i + 1; j < 12; ++j) {
            if (i / 6 == j / 6) {
                intra += cosine(i, j);
                ++ni;
            } else {
                inter += cosine(i, j);
                ++nx;
            }
        }
    }
    EXPECT_GT(intra / ni, inter / nx);
}

TEST(DeepWalk, SingleNodeDimOne) {
    DeepWalkOptions o;
    o.dim = 1;
    const auto fm = deepwalk_embed(make(1, {}), o);
    ASSERT_EQ(fm.rows(), 1);
    ASSERT_EQ(fm.cols(), 1);
    EXPECT_TRUE(std::isfinite(fm.values(0, 0)));
}

TEST(DeepWalk, DeterministicForSeed) {
    DeepWalkOptions o;
    o.dim = 8;
    o.seed = 123;
    const auto g = make(8, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 6}, {6, 7}, {7, 0}});
    const auto a = deepwalk_embed(g, o);
    const auto b = deepwalk_embed(g, o);
    EXPECT_TRUE(a.values == b.values);
    EXPECT_TRUE(a.values.allFinite());
    o.seed = 124;
    EXPECT_FALSE(deepwalk_embed(g, o).values == a.values);
}

// --- load_embeddings --------------------------------------------------------

TEST_F(TempDir, EmbeddingsAlignToDenseOrder) {
    const auto g = Graph::from_edges({"a", "b"}, std::vector<Edge>{{0, 1}});
    const auto le = load_embeddings(write("e.tsv", "b\t3\t4\na\t1\t2\n"), g);
    ASSERT_EQ(le.features.rows(), 2);
    ASSERT_EQ(le.features.cols(), 2);
    EXPECT_EQ(le.features.values(0, 0), 1.0);
    EXPECT_EQ(le.features.values(0, 1), 2.0);
    EXPECT_EQ(le.features.values(1, 0), 3.0);
    EXPECT_TRUE(le.warnings.empty());
}

TEST_F(TempDir, EmbeddingsMissingNodeFilledWithZeros) {
    const auto g = Graph::from_edges({"a", "b"}, std::vector<Edge>{{0, 1}});
    const auto le = load_embeddings(write("e.tsv", "a\t1\t2\nzz\t5\t5\n"), g);
    EXPECT_EQ(le.features.values(1, 0), 0.0);
    EXPECT_EQ(le.features.values(1, 1), 0.0);
    ASSERT_EQ(le.warnings.size(), 2u);
}

TEST_F(TempDir, EmbeddingsRaggedRowNamesLine) {
    const auto g = Graph::from_edges({"a", "b"}, std::vector<Edge>{{0, 1}});
    try {
        load_embeddings(write("e.tsv", "a\t1\t2\nb\t1\n"), g);
        FAIL() << "expected InputError";
    } catch (const InputError& e) {
        EXPECT_NE(std::string(e.what()).find(":2"), std::string::npos) << e.what();
    }
}

// --- assembly ---------------------------------------------------------------

TEST(Assemble, WidthsAdd) {
    FeatureMatrix a{Eigen::MatrixXd::Random(5, 7), std::vector<std::string>(7, "a"), {}};
    FeatureMatrix b{Eigen::MatrixXd::Random(5, 64), std::vector<std::string>(64, "b"), {}};
    const std::vector<FeatureMatrix> parts{a, b};
    const auto fm = assemble_features(parts, false);
    EXPECT_EQ(fm.cols(), 71);
    EXPECT_EQ(fm.column_names.size(), 71u);
    EXPECT_TRUE(fm.standardization.empty());
}

TEST(Assemble, RowMismatchThrows) {
    FeatureMatrix a{Eigen::MatrixXd::Zero(5, 1), {"a"}, {}};
    FeatureMatrix b{Eigen::MatrixXd::Zero(4, 1), {"b"}, {}};
    const std::vector<FeatureMatrix> parts{a, b};
    EXPECT_ANY_THROW(assemble_features(parts, false));
}

TEST(Assemble, StandardizeOnFitRows) {
    Eigen::MatrixXd v(6, 2);
    v << 1, 3, 2, 3, 3, 3, 4, 3, 100, 3, -50, 3;
    const std::vector<FeatureMatrix> parts{FeatureMatrix{v, {"x", "c"}, {}}};
    const std::vector<Eigen::Index> fit{0, 1, 2, 3};
    const auto fm = assemble_features(parts, true, fit);
    double mean = 0.0;
    for (auto r : fit) mean += fm.values(r, 0);
    EXPECT_LT(std::abs(mean / 4.0), 1e-9);
    EXPECT_TRUE(fm.values.col(1).isZero());
    ASSERT_EQ(fm.standardization.size(), 2u);
    EXPECT_DOUBLE_EQ(fm.standardization[0].mean, 2.5);
    EXPECT_DOUBLE_EQ(fm.standardization[1].std, 1.0);
}

TEST(VertexFeatures, TriangleHasEightColumns) {
    const auto fm = vertex_features(make(3, {{0, 1}, {1, 2}, {0, 2}}));
    EXPECT_EQ(fm.cols(), 8);
    EXPECT_EQ(fm.column_names.front(), "pagerank");
    EXPECT_TRUE(fm.values.allFinite());
}

TEST(VertexFeatures, PermutationEquivariant) {
    std::mt19937_64 rng(5);
    for (const auto& [n, edges] : family()) {
        std::vector<std::uint32_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0u);
        std::shuffle(perm.begin(), perm.end(), rng);
        oracle::EdgeList moved;
        for (auto [u, v] : edges) moved.emplace_back(perm[u], perm[v]);
        const auto a = vertex_features(make(n, edges));
        const auto b = vertex_features(make(n, moved));
        for (std::size_t i = 0; i < n; ++i) {
            for (Eigen::Index c = 0; c < a.cols(); ++c) {
                EXPECT_NEAR(a.values(i, c), b.values(perm[i], c), 1e-7) << a.column_names[c];
            }
        }
    }
}
