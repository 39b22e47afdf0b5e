#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "deeppp/error.hpp"
#include "deeppp/learner.hpp"
#include "oracles.hpp"

using namespace deeppp;

namespace {

EgoInstance toy_instance(std::mt19937_64& rng, std::size_t m, std::size_t f, int label) {
    const auto edges = oracle::random_graph(m, 0.35, rng);
    EgoInstance inst;
    for (auto [u, v] : edges) inst.edges.emplace_back(u, v);
    inst.sub_adjacency = normalize_edges(m, inst.edges);
    inst.ego_index = 0;
    inst.neighbor_activation.assign(m, 0);
    std::bernoulli_distribution coin(0.4);
    for (std::size_t i = 1; i < m; ++i) inst.neighbor_activation[i] = coin(rng) ? 1 : 0;
    std::normal_distribution<double> gauss(0.0, 1.0);
    inst.features.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(f));
    for (Eigen::Index i = 0; i < inst.features.size(); ++i) inst.features.data()[i] = gauss(rng);
    inst.label = static_cast<std::uint8_t>(label);
    // Make the label learnable from the ego row.
    inst.features(0, 0) += label ? 1.5 : -1.5;
    return inst;
}

InstanceSet toy_set(std::size_t count, std::uint64_t seed, std::size_t m = 8, std::size_t f = 5) {
    std::mt19937_64 rng(seed);
    InstanceSet set;
    for (std::size_t i = 0; i < count; ++i) {
        set.instances.push_back(toy_instance(rng, m, f, static_cast<int>(i % 2)));
        const auto slot = (i / 2) % 8;
        set.split_tags.push_back(slot < 6 ? Split::Train : (slot == 6 ? Split::Validation : Split::Test));
    }
    for (std::size_t j = 0; j < f; ++j) set.feature_names.push_back("f" + std::to_string(j));
    return set;
}

PreparedInstance gradient_instance(const PropagationConfig& pcfg, std::uint64_t seed, int label) {
    std::mt19937_64 rng(seed);
    const auto edges = oracle::random_graph(10, 0.3, rng);
    std::vector<Edge> list(edges.begin(), edges.end());
    Eigen::MatrixXd x(10, 5);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = gauss(rng);
    return prepare_instance(normalize_edges(10, list), x, 3, label, pcfg);
}

ModelParams random_params(const ModelShape& shape, std::uint64_t seed, double scale = 0.5) {
    ModelParams p(shape);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-scale, scale);
    for (auto& v : p.flat_view()) v = u(rng);
    return p;
}

double max_relative_error(const std::vector<double>& analytic, const std::vector<double>& numeric) {
    double worst = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        const double denom = std::max({std::abs(analytic[i]), std::abs(numeric[i]), 1e-8});
        worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / denom);
    }
    return worst;
}

struct HeadCase {
    Head head;
    bool exact;
    LossKind loss;
};

class GradientCheck : public ::testing::TestWithParam<HeadCase> {};

}  // namespace

TEST(Predictor, ZeroParametersGiveZeroLogits) {
    ModelShape shape{4, 6, 2, 0};
    ModelParams p(shape);
    Eigen::MatrixXd x = Eigen::MatrixXd::Random(5, 4);
    EXPECT_EQ(predictor_forward(p, x, 0.0, false, 1).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Predictor, NoDropoutMeansTrainEqualsEval) {
    auto p = random_params({4, 6, 2, 0}, 3);
    Eigen::MatrixXd x = Eigen::MatrixXd::Random(5, 4);
    EXPECT_EQ(predictor_forward(p, x, 0.0, true, 9), predictor_forward(p, x, 0.0, false, 9));
}

TEST(Predictor, DropoutMaskIsSeeded) {
    auto p = random_params({4, 32, 2, 0}, 3);
    Eigen::MatrixXd x = Eigen::MatrixXd::Random(6, 4);
    const auto a = predictor_forward(p, x, 0.5, true, 11);
    EXPECT_EQ(a, predictor_forward(p, x, 0.5, true, 11));
    EXPECT_NE(a, predictor_forward(p, x, 0.5, true, 12));
    EXPECT_NE(a, predictor_forward(p, x, 0.5, false, 11));
}

TEST(Predictor, WidthMismatchNamesBothWidths) {
    auto p = random_params({4, 6, 2, 0}, 3);
    Eigen::MatrixXd x = Eigen::MatrixXd::Random(3, 7);
    try {
        predictor_forward(p, x, 0.0, false, 0);
        FAIL();
    } catch (const InputError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find('4'), std::string::npos);
        EXPECT_NE(msg.find('7'), std::string::npos);
    }
}

TEST(Loss, WorkedValues) {
    Eigen::MatrixXd perfect(1, 2);
    perfect << 0.0, 1.0;
    std::vector<int> one{1};
    EXPECT_DOUBLE_EQ(loss(perfect, one, LossKind::CrossEntropy), 0.0);
    EXPECT_DOUBLE_EQ(loss(perfect, one, LossKind::Mse), 0.0);

    Eigen::MatrixXd uniform(2, 2);
    uniform << 0.5, 0.5, 0.5, 0.5;
    std::vector<int> mixed{0, 1};
    EXPECT_NEAR(loss(uniform, mixed, LossKind::CrossEntropy), 0.693147, 1e-6);

    Eigen::MatrixXd p(1, 2);
    p << 0.8, 0.2;
    std::vector<int> zero{0};
    EXPECT_NEAR(loss(p, zero, LossKind::Mse), 0.08, 1e-15);
}

TEST(Loss, CrossEntropyIsClamped) {
    Eigen::MatrixXd p(1, 2);
    p << 1.0, 0.0;
    std::vector<int> one{1};
    EXPECT_NEAR(loss(p, one, LossKind::CrossEntropy), -std::log(1e-12), 1e-9);
}

TEST_P(GradientCheck, MatchesCentralDifferences) {
    const auto hc = GetParam();
    PropagationConfig pcfg;
    pcfg.head = hc.head;
    pcfg.exact = hc.exact;
    pcfg.alpha = 0.3;
    pcfg.k_iters = 6;
    pcfg.gat_heads = 2;
    for (int label : {0, 1}) {
        const auto inst = gradient_instance(pcfg, 17 + static_cast<std::uint64_t>(label), label);
        TrainConfig tcfg;
        tcfg.hidden = 16;
        const auto shape = model_shape(5, tcfg, pcfg);
        const auto params = random_params(shape, 5 + static_cast<std::uint64_t>(label));
        ForwardOptions opts;
        opts.loss = hc.loss;
        std::vector<BatchItem> batch{{&inst, 0}};

        const auto g = backward(params, batch, pcfg, opts);
        auto f = [&](const std::vector<double>& theta) {
            ModelParams q(shape);
            q.assign(theta);
            return batch_loss(q, batch, pcfg, opts);
        };
        const std::vector<double> theta(params.flat_view().begin(), params.flat_view().end());
        const auto numeric = oracle::finite_difference(f, theta, 1e-5);
        ASSERT_EQ(g.values.size(), numeric.size());
        EXPECT_LT(max_relative_error(g.values, numeric), 1e-4) << to_string(hc.head) << " label " << label;
        EXPECT_NEAR(g.loss, f(theta), 1e-14);
    }
}

INSTANTIATE_TEST_SUITE_P(
    Heads, GradientCheck,
    ::testing::Values(HeadCase{Head::GCN, true, LossKind::CrossEntropy}, HeadCase{Head::GAT, true, LossKind::CrossEntropy},
                      HeadCase{Head::PPNP, true, LossKind::CrossEntropy},
                      HeadCase{Head::APPNP, true, LossKind::CrossEntropy},
                      HeadCase{Head::DEEPPP, true, LossKind::CrossEntropy},
                      HeadCase{Head::DEEPPP, false, LossKind::CrossEntropy},
                      HeadCase{Head::DEEPPP, true, LossKind::Mse}, HeadCase{Head::GAT, true, LossKind::Mse}),
    [](const ::testing::TestParamInfo<HeadCase>& info) {
        return std::string(to_string(info.param.head)) + (info.param.exact ? "" : "_power") +
               (info.param.loss == LossKind::Mse ? "_mse" : "");
    });

TEST(Backward, GradientWithDropoutMatchesDifferences) {
    PropagationConfig pcfg;
    pcfg.head = Head::APPNP;
    const auto inst = gradient_instance(pcfg, 23, 1);
    TrainConfig tcfg;
    tcfg.hidden = 12;
    const auto shape = model_shape(5, tcfg, pcfg);
    const auto params = random_params(shape, 8);
    ForwardOptions opts;
    opts.dropout_rate = 0.3;
    opts.train_mode = true;
    std::vector<BatchItem> batch{{&inst, 99}};
    const auto g = backward(params, batch, pcfg, opts);
    auto f = [&](const std::vector<double>& theta) {
        ModelParams q(shape);
        q.assign(theta);
        return batch_loss(q, batch, pcfg, opts);
    };
    const std::vector<double> theta(params.flat_view().begin(), params.flat_view().end());
    EXPECT_LT(max_relative_error(g.values, oracle::finite_difference(f, theta, 1e-5)), 1e-4);
}

TEST(Backward, ZeroLossBatchHasVanishingGradient) {
    PropagationConfig pcfg;
    const auto inst = gradient_instance(pcfg, 4, 1);
    TrainConfig tcfg;
    ModelParams params(model_shape(5, tcfg, pcfg));
    // Logits (0, 60) on every node: p[1] = 1 up to e^-60.
    params.b2()(1) = 60.0 / inst.ego_weights.sum();
    std::vector<BatchItem> batch{{&inst, 0}};
    const auto g = backward(params, batch, pcfg, {});
    EXPECT_LT(g.loss, 1e-20);
    double norm = 0.0;
    for (double v : g.values) norm += v * v;
    EXPECT_LT(std::sqrt(norm), 1e-8);
}

TEST(Backward, DuplicatedInstanceEqualsSingle) {
    PropagationConfig pcfg;
    pcfg.head = Head::GAT;
    const auto inst = gradient_instance(pcfg, 5, 0);
    TrainConfig tcfg;
    const auto params = random_params(model_shape(5, tcfg, pcfg), 2);
    std::vector<BatchItem> one{{&inst, 0}}, two{{&inst, 0}, {&inst, 0}};
    const auto a = backward(params, one, pcfg, {});
    const auto b = backward(params, two, pcfg, {});
    ASSERT_EQ(a.values.size(), b.values.size());
    for (std::size_t i = 0; i < a.values.size(); ++i) EXPECT_NEAR(a.values[i], b.values[i], 1e-15);
}

TEST(Backward, PropagationWeightsReproduceFullForward) {
    // The cached ego row must agree with the full-matrix forward of each head.
    for (Head head : {Head::GCN, Head::PPNP, Head::APPNP, Head::DEEPPP}) {
        PropagationConfig pcfg;
        pcfg.head = head;
        pcfg.alpha = 0.35;
        pcfg.k_iters = 7;
        std::mt19937_64 rng(31);
        const auto edges = oracle::random_graph(9, 0.4, rng);
        std::vector<Edge> list(edges.begin(), edges.end());
        const auto adj = normalize_edges(9, list);
        Eigen::MatrixXd h = Eigen::MatrixXd::Random(9, 2);
        Eigen::MatrixXd full;
        switch (head) {
            case Head::GCN: full = row_softmax(adj.dense() * h); break;
            case Head::PPNP: full = ppnp_forward(adj, h, pcfg.alpha); break;
            case Head::APPNP: full = appnp_forward(adj, h, pcfg.alpha, pcfg.k_iters); break;
            default: full = deeppp_forward(adj, h, pcfg.alpha, true, pcfg.k_iters); break;
        }
        for (Eigen::Index ego = 0; ego < 9; ++ego) {
            const auto r = ego_propagation_weights(adj, ego, pcfg);
            Eigen::RowVectorXd z = r * h;
            Eigen::RowVectorXd p = (z.array() - z.maxCoeff()).exp();
            p /= p.sum();
            EXPECT_LT((p - full.row(ego)).cwiseAbs().maxCoeff(), 1e-12) << to_string(head);
        }
    }
}

TEST(Train, ZeroLearningRateLeavesParametersUntouched) {
    const auto data = toy_set(16, 1);
    TrainConfig tcfg;
    tcfg.learning_rate = 0.0;
    tcfg.epochs = 3;
    tcfg.batch_size = 4;
    tcfg.seed = 21;
    tcfg.hidden = 8;
    PropagationConfig pcfg;
    const auto result = train(data, tcfg, pcfg);
    ModelParams fresh(result.params.shape());
    fresh.initialize(tcfg.seed);
    EXPECT_TRUE(std::equal(fresh.flat_view().begin(), fresh.flat_view().end(), result.params.flat_view().begin()));
    EXPECT_EQ(result.trace.epochs.size(), 3u);
}

TEST(Train, SeededRunsAreBitIdentical) {
    const auto data = toy_set(24, 2);
    TrainConfig tcfg;
    tcfg.epochs = 4;
    tcfg.batch_size = 5;
    tcfg.seed = 3;
    tcfg.hidden = 8;
    for (Head head : {Head::DEEPPP, Head::GAT}) {
        PropagationConfig pcfg;
        pcfg.head = head;
        const auto a = train(data, tcfg, pcfg);
        const auto b = train(data, tcfg, pcfg);
        EXPECT_EQ(trace_to_json(a.trace), trace_to_json(b.trace));
        EXPECT_TRUE(std::equal(a.params.flat_view().begin(), a.params.flat_view().end(),
                               b.params.flat_view().begin()));
    }
}

TEST(Train, FullBatchDescentNeverIncreasesTrainingLoss) {
    auto data = toy_set(20, 4);
    for (auto& s : data.split_tags) s = Split::Train;
    TrainConfig tcfg;
    tcfg.learning_rate = 1e-3;
    tcfg.epochs = 40;
    tcfg.batch_size = 20;
    tcfg.dropout_rate = 0.0;
    tcfg.seed = 8;
    tcfg.hidden = 16;
    for (Head head : {Head::GCN, Head::GAT, Head::PPNP, Head::APPNP, Head::DEEPPP}) {
        PropagationConfig pcfg;
        pcfg.head = head;
        const auto r = train(data, tcfg, pcfg);
        for (std::size_t e = 1; e < r.trace.epochs.size(); ++e) {
            EXPECT_LE(r.trace.epochs[e].train_loss, r.trace.epochs[e - 1].train_loss + 1e-9) << to_string(head);
        }
    }
}

TEST(Train, TraceLengthEqualsEpochsRun) {
    const auto data = toy_set(16, 5);
    TrainConfig tcfg;
    tcfg.epochs = 7;
    tcfg.batch_size = 3;
    tcfg.hidden = 4;
    const auto r = train(data, tcfg, {});
    EXPECT_EQ(r.trace.epochs.size(), 7u);
    EXPECT_GE(r.trace.best_epoch, 1);
    EXPECT_LE(r.trace.best_epoch, 7);
    EXPECT_TRUE(r.trace.test.has_value());
}

TEST(Train, DivergenceCarriesPartialTrace) {
    const auto data = toy_set(16, 6);
    TrainConfig tcfg;
    tcfg.learning_rate = 1e300;
    tcfg.epochs = 50;
    tcfg.batch_size = 2;
    tcfg.dropout_rate = 0.0;
    tcfg.loss = LossKind::Mse;
    try {
        train(data, tcfg, {});
        FAIL() << "expected divergence";
    } catch (const DivergenceError& e) {
        EXPECT_FALSE(e.trace().epochs.empty());
        EXPECT_FALSE(std::isfinite(e.trace().epochs.back().train_loss));
    }
}

TEST(Train, EmptyTrainingSplitIsRejected) {
    auto data = toy_set(8, 7);
    for (auto& s : data.split_tags) s = Split::Test;
    EXPECT_THROW(train(data, {}, {}), InputError);
}

TEST(Train, LearnsSeparableToySet) {
    const auto data = toy_set(160, 9);
    TrainConfig tcfg;
    tcfg.epochs = 30;
    tcfg.batch_size = 8;
    tcfg.seed = 1;
    tcfg.hidden = 16;
    const auto r = train(data, tcfg, {});
    ASSERT_TRUE(r.trace.test && r.trace.test->auc);
    EXPECT_GT(*r.trace.test->auc, 0.9);
}

TEST(Evaluate, AllPositiveSplitGivesFullRecall) {
    auto data = toy_set(12, 10);
    for (auto& inst : data.instances) inst.label = 1;
    PropagationConfig pcfg;
    TrainConfig tcfg;
    ModelParams params(model_shape(instance_input_width(5), tcfg, pcfg));
    params.b2()(1) = 5.0;  // every score near 1
    std::vector<std::size_t> all(12);
    for (std::size_t i = 0; i < 12; ++i) all[i] = i;
    const auto rep = evaluate(params, data, all, pcfg);
    EXPECT_DOUBLE_EQ(rep.recall, 1.0);
    EXPECT_FALSE(rep.auc.has_value());
}

TEST(Evaluate, IsIdempotent) {
    const auto data = toy_set(24, 11);
    PropagationConfig pcfg;
    TrainConfig tcfg;
    ModelParams params(model_shape(instance_input_width(5), tcfg, pcfg));
    params.initialize(4);
    const auto idx = data.indices(Split::Train);
    EXPECT_EQ(report_to_json(evaluate(params, data, idx, pcfg)), report_to_json(evaluate(params, data, idx, pcfg)));
}

TEST(Evaluate, RandomParametersAreNearChance) {
    // Labels here carry no signal at all, so the mean AUC over seeds sits at 0.5.
    std::mt19937_64 rng(12);
    InstanceSet data;
    for (int i = 0; i < 200; ++i) {
        auto inst = toy_instance(rng, 8, 5, 0);
        inst.label = static_cast<std::uint8_t>(i % 2);
        data.instances.push_back(std::move(inst));
        data.split_tags.push_back(Split::Test);
    }
    PropagationConfig pcfg;
    TrainConfig tcfg;
    double mean = 0.0;
    const int seeds = 10;
    for (int s = 0; s < seeds; ++s) {
        ModelParams params(model_shape(instance_input_width(5), tcfg, pcfg));
        params.initialize(static_cast<std::uint64_t>(s));
        mean += *evaluate(params, data, data.indices(Split::Test), pcfg).auc / seeds;
    }
    EXPECT_NEAR(mean, 0.5, 0.1);
}

TEST(Params, FlatViewRoundTrip) {
    ModelShape shape{7, 5, 2, 3};
    EXPECT_EQ(ModelParams::parameter_count(shape), 7u * 5 + 5 + 5 * 2 + 2 + 3 * (4 + 4));
    auto p = random_params(shape, 77, 3.0);
    ModelParams q(shape);
    q.assign(p.flat_view());
    EXPECT_EQ(q.w1(), p.w1());
    EXPECT_EQ(q.b1(), p.b1());
    EXPECT_EQ(q.w2(), p.w2());
    EXPECT_EQ(q.b2(), p.b2());
    for (std::size_t k = 0; k < 3; ++k) {
        EXPECT_EQ(q.gat_w(k), p.gat_w(k));
        EXPECT_EQ(q.gat_a(k), p.gat_a(k));
    }
    // Documented order: W1 row-major comes first, then b1.
    EXPECT_EQ(p.flat_view()[1], p.w1()(0, 1));
    EXPECT_EQ(p.flat_view()[7 * 5], p.b1()(0));
    std::vector<double> wrong(3);
    EXPECT_THROW(q.assign(wrong), InputError);
}

TEST(Params, InitializationIsSeededFanInUniform) {
    ModelShape shape{16, 9, 2, 0};
    ModelParams a(shape), b(shape);
    a.initialize(5);
    b.initialize(5);
    EXPECT_TRUE(std::equal(a.flat_view().begin(), a.flat_view().end(), b.flat_view().begin()));
    EXPECT_LE(a.w1().cwiseAbs().maxCoeff(), 1.0 / 4.0);
    EXPECT_LE(a.w2().cwiseAbs().maxCoeff(), 1.0 / 3.0);
    EXPECT_EQ(a.b1().cwiseAbs().maxCoeff(), 0.0);
}

class CheckpointTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = std::filesystem::temp_directory_path() /
               ("deeppp_ckpt_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
                ::testing::UnitTest::GetInstance()->current_test_info()->name());
        std::filesystem::create_directories(dir_);
    }
    void TearDown() override { std::filesystem::remove_all(dir_); }
    std::filesystem::path dir_;
};

TEST_F(CheckpointTest, RoundTripIsBitExact) {
    PropagationConfig pcfg;
    pcfg.head = Head::GAT;
    pcfg.alpha = 0.4;
    TrainConfig tcfg;
    tcfg.seed = 99;
    const auto p = random_params(model_shape(11, tcfg, pcfg), 3, 10.0);
    const auto path = (dir_ / "m.ckpt").string();
    save_checkpoint(p, pcfg, tcfg, path);
    const auto ck = load_checkpoint(path);
    EXPECT_EQ(ck.params.shape(), p.shape());
    EXPECT_EQ(0, std::memcmp(ck.params.flat_view().data(), p.flat_view().data(), p.size() * sizeof(double)));
    EXPECT_EQ(ck.pcfg.head, Head::GAT);
    EXPECT_EQ(ck.pcfg.alpha, 0.4);
    EXPECT_EQ(ck.tcfg.seed, 99u);
}

TEST_F(CheckpointTest, CorruptedByteFailsChecksum) {
    TrainConfig tcfg;
    PropagationConfig pcfg;
    const auto p = random_params(model_shape(6, tcfg, pcfg), 1);
    const auto path = (dir_ / "m.ckpt").string();
    save_checkpoint(p, pcfg, tcfg, path);
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(200);
    char c = 0;
    f.read(&c, 1);
    f.seekp(200);
    c = static_cast<char>(c ^ 0x10);
    f.write(&c, 1);
    f.close();
    try {
        load_checkpoint(path);
        FAIL();
    } catch (const FormatError& e) {
        EXPECT_NE(std::string(e.what()).find("checksum"), std::string::npos);
    }
}

TEST_F(CheckpointTest, UnknownVersionIsRejected) {
    TrainConfig tcfg;
    PropagationConfig pcfg;
    const auto p = random_params(model_shape(6, tcfg, pcfg), 1);
    const auto path = (dir_ / "m.ckpt").string();
    save_checkpoint(p, pcfg, tcfg, path);
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(8);
    const char v = 7;
    f.write(&v, 1);
    f.close();
    try {
        load_checkpoint(path);
        FAIL();
    } catch (const FormatError& e) {
        EXPECT_NE(std::string(e.what()).find("version"), std::string::npos);
    }
}

TEST_F(CheckpointTest, WidthMismatchNamesBothWidths) {
    TrainConfig tcfg;
    PropagationConfig pcfg;
    const auto p = random_params(model_shape(13, tcfg, pcfg), 1);
    try {
        check_input_width(p, 21);
        FAIL();
    } catch (const InputError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("13"), std::string::npos);
        EXPECT_NE(msg.find("21"), std::string::npos);
    }
}
