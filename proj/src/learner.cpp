#include "deeppp/learner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "deeppp/error.hpp"
#include "deeppp/random.hpp"

namespace deeppp {

const char* to_string(LossKind k) { return k == LossKind::Mse ? "mse" : "cross_entropy"; }

LossKind parse_loss(std::string_view s) {
    if (s == "cross_entropy" || s == "ce") return LossKind::CrossEntropy;
    if (s == "mse") return LossKind::Mse;
    throw InputError("unknown loss '" + std::string(s) + "'");
}

void TrainConfig::validate() const {
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw InputError("learning_rate must be >= 0");
    if (epochs < 0) throw InputError("epochs must be >= 0");
    if (batch_size < 1) throw InputError("batch_size must be >= 1");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw InputError("dropout_rate must lie in [0, 1)");
    if (hidden < 1) throw InputError("hidden width must be >= 1");
}

namespace {

constexpr double kProbFloor = 1e-12;

Eigen::MatrixXd dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, std::uint64_t seed) {
    Eigen::MatrixXd mask(rows, cols);
    Rng rng(seed);
    const double keep_scale = 1.0 / (1.0 - rate);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) mask(i, j) = rng.uniform() < rate ? 0.0 : keep_scale;
    }
    return mask;
}

Eigen::RowVectorXd softmax_row(const Eigen::RowVectorXd& z) {
    Eigen::RowVectorXd p = (z.array() - z.maxCoeff()).exp();
    return p / p.sum();
}

double row_loss(const Eigen::RowVectorXd& p, int label, LossKind kind) {
    if (kind == LossKind::CrossEntropy) return -std::log(std::max(p(label), kProbFloor));
    double s = 0.0;
    for (Eigen::Index c = 0; c < p.size(); ++c) {
        const double y = c == label ? 1.0 : 0.0;
        s += (p(c) - y) * (p(c) - y);
    }
    return s;
}

// dL/dz for the ego logits z, with p = softmax(z).
Eigen::RowVectorXd logit_gradient(const Eigen::RowVectorXd& p, int label, LossKind kind) {
    if (kind == LossKind::CrossEntropy) {
        if (p(label) < kProbFloor) return Eigen::RowVectorXd::Zero(p.size());  // clamp is flat
        Eigen::RowVectorXd g = p;
        g(label) -= 1.0;
        return g;
    }
    Eigen::RowVectorXd dp = 2.0 * p;
    dp(label) -= 2.0;
    const double inner = p.dot(dp);
    return p.array() * (dp.array() - inner);
}

struct PredictorState {
    Eigen::MatrixXd pre;     // X W1 + b1
    Eigen::MatrixXd mask;    // empty when no dropout
    Eigen::MatrixXd hidden;  // relu(pre) * mask
    Eigen::MatrixXd logits;  // hidden W2 + b2
};

PredictorState run_predictor(const ModelParams& params, const Eigen::MatrixXd& x, double rate, bool train_mode,
                             std::uint64_t seed) {
    check_input_width(params, static_cast<std::size_t>(x.cols()));
    PredictorState st;
    st.pre = (x * params.w1()).rowwise() + params.b1().transpose();
    st.hidden = st.pre.cwiseMax(0.0);
    if (train_mode && rate > 0.0) {
        st.mask = dropout_mask(st.hidden.rows(), st.hidden.cols(), rate, seed);
        st.hidden = st.hidden.cwiseProduct(st.mask);
    }
    st.logits = (st.hidden * params.w2()).rowwise() + params.b2().transpose();
    return st;
}

struct HeadOutput {
    Eigen::RowVectorXd logits;
    std::vector<AttentionHead> attention;
};

HeadOutput run_head(const ModelParams& params, const PreparedInstance& inst, const PropagationConfig& pcfg,
                    const Eigen::MatrixXd& h) {
    HeadOutput out;
    if (pcfg.head != Head::GAT) {
        out.logits = inst.ego_weights * h;
        return out;
    }
    const auto heads = params.shape().gat_heads;
    const auto ego = static_cast<std::size_t>(inst.ego);
    out.logits = Eigen::RowVectorXd::Zero(h.cols());
    for (std::size_t k = 0; k < heads; ++k) {
        Eigen::MatrixXd w = params.gat_w(k);
        Eigen::VectorXd a = params.gat_a(k);
        out.attention.push_back(gat_attention(h, w, a, inst.scope, pcfg.leaky_slope));
        const auto& att = out.attention.back();
        for (std::size_t j = 0; j < inst.scope[ego].size(); ++j) {
            out.logits += att.coefficients[ego][j] * att.projected.row(inst.scope[ego][j]);
        }
    }
    out.logits /= static_cast<double>(heads);
    return out;
}

// Accumulates d(weight * loss)/d(theta) into grad; returns the loss.
double accumulate_instance(const ModelParams& params, const PreparedInstance& inst, const PropagationConfig& pcfg,
                           const ForwardOptions& opts, std::uint64_t seed, double weight, ModelParams* grad) {
    const auto st = run_predictor(params, inst.input, opts.dropout_rate, opts.train_mode, seed);
    const auto head = run_head(params, inst, pcfg, st.logits);
    const Eigen::RowVectorXd p = softmax_row(head.logits);
    const double value = row_loss(p, inst.label, opts.loss);
    if (grad == nullptr) return value;

    const Eigen::RowVectorXd dz = weight * logit_gradient(p, inst.label, opts.loss);
    Eigen::MatrixXd dh;
    if (pcfg.head != Head::GAT) {
        dh = inst.ego_weights.transpose() * dz;
    } else {
        const auto heads = params.shape().gat_heads;
        const auto ego = static_cast<std::size_t>(inst.ego);
        const auto c = st.logits.cols();
        const auto& nb = inst.scope[ego];
        dh = Eigen::MatrixXd::Zero(st.logits.rows(), c);
        const Eigen::RowVectorXd dout = dz / static_cast<double>(heads);
        for (std::size_t k = 0; k < heads; ++k) {
            const auto& att = head.attention[k];
            const auto& g = att.projected;
            const auto& coef = att.coefficients[ego];
            const auto& raw = att.raw[ego];
            Eigen::VectorXd a = params.gat_a(k);
            Eigen::MatrixXd dg = Eigen::MatrixXd::Zero(g.rows(), c);
            std::vector<double> dcoef(nb.size());
            double mean = 0.0;
            for (std::size_t j = 0; j < nb.size(); ++j) {
                dg.row(nb[j]) += coef[j] * dout;
                dcoef[j] = dout.dot(g.row(nb[j]));
                mean += coef[j] * dcoef[j];
            }
            Eigen::RowVectorXd da_src = Eigen::RowVectorXd::Zero(c);
            Eigen::RowVectorXd da_dst = Eigen::RowVectorXd::Zero(c);
            double ds = 0.0;
            for (std::size_t j = 0; j < nb.size(); ++j) {
                const double dl = coef[j] * (dcoef[j] - mean);
                const double de = dl * (raw[j] > 0.0 ? 1.0 : pcfg.leaky_slope);
                ds += de;
                da_dst += de * g.row(nb[j]);
                dg.row(nb[j]) += de * a.tail(c).transpose();
            }
            da_src += ds * g.row(inst.ego);
            dg.row(inst.ego) += ds * a.head(c).transpose();

            grad->gat_w(k) += st.logits.transpose() * dg;
            grad->gat_a(k).head(c) += da_src.transpose();
            grad->gat_a(k).tail(c) += da_dst.transpose();
            Eigen::MatrixXd w = params.gat_w(k);
            dh += dg * w.transpose();
        }
    }

    grad->w2() += st.hidden.transpose() * dh;
    grad->b2() += dh.colwise().sum().transpose();
    Eigen::MatrixXd dpre = dh * params.w2().transpose();
    dpre = dpre.cwiseProduct((st.pre.array() > 0.0).cast<double>().matrix());
    if (st.mask.size() > 0) dpre = dpre.cwiseProduct(st.mask);
    grad->w1() += inst.input.transpose() * dpre;
    grad->b1() += dpre.colwise().sum().transpose();
    return value;
}

}  // namespace

LogitMatrix predictor_forward(const ModelParams& params, const Eigen::MatrixXd& x, double dropout_rate,
                              bool train_mode, std::uint64_t seed) {
    return run_predictor(params, x, dropout_rate, train_mode, seed).logits;
}

double loss(const Eigen::MatrixXd& probs, std::span<const int> labels, LossKind kind) {
    if (static_cast<std::size_t>(probs.rows()) != labels.size()) throw InputError("loss: rows and labels differ");
    if (labels.empty()) return 0.0;
    double total = 0.0;
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
        total += row_loss(probs.row(i), labels[static_cast<std::size_t>(i)], kind);
    }
    return total / static_cast<double>(labels.size());
}

Eigen::RowVectorXd ego_propagation_weights(const NormalizedAdjacency& adj, Eigen::Index ego,
                                           const PropagationConfig& pcfg) {
    const auto m = adj.size();
    if (ego < 0 || ego >= m) throw InputError("ego index out of range");
    Eigen::VectorXd e = Eigen::VectorXd::Zero(m);
    e(ego) = 1.0;
    const double alpha = pcfg.alpha;

    // Row `ego` of the APPNP operator M_K, via M_(k+1) = (1-alpha) M_k A + alpha I
    // (A is symmetric and the M_k are polynomials in A).
    auto appnp_row = [&] {
        Eigen::VectorXd r = e;
        for (int k = 0; k < pcfg.k_iters; ++k) {
            Eigen::VectorXd next = (1.0 - alpha) * (adj.matrix * r) + alpha * e;
            r.swap(next);
        }
        return r;
    };

    Eigen::VectorXd r;
    switch (pcfg.head) {
        case Head::GCN: r = adj.matrix.transpose() * e; break;
        case Head::PPNP: r = personalized_pagerank_exact(adj, ego, alpha); break;
        case Head::APPNP: r = appnp_row(); break;
        case Head::DEEPPP:
            r = pcfg.exact ? personalized_pagerank_exact(adj, ego, alpha) : appnp_row();
            r += alpha * e;
            break;
        case Head::GAT: return {};
    }
    return r.transpose();
}

PreparedInstance prepare_instance(const NormalizedAdjacency& adj, Eigen::MatrixXd input, Eigen::Index ego,
                                  int label, const PropagationConfig& pcfg) {
    pcfg.validate();
    if (input.rows() != adj.size()) throw InputError("input rows differ from adjacency size");
    PreparedInstance p;
    p.input = std::move(input);
    p.ego = ego;
    p.label = label;
    if (pcfg.head == Head::GAT) {
        p.scope = attention_scope(adj);
    } else {
        p.ego_weights = ego_propagation_weights(adj, ego, pcfg);
    }
    return p;
}

PreparedInstance prepare_instance(const EgoInstance& inst, const PropagationConfig& pcfg) {
    return prepare_instance(inst.sub_adjacency, instance_input(inst), inst.ego_index, inst.label, pcfg);
}

ModelShape model_shape(std::size_t input_width, const TrainConfig& tcfg, const PropagationConfig& pcfg) {
    ModelShape s;
    s.input_width = input_width;
    s.hidden = tcfg.hidden;
    s.classes = 2;
    s.gat_heads = pcfg.head == Head::GAT ? static_cast<std::size_t>(pcfg.gat_heads) : 0;
    return s;
}

Eigen::RowVectorXd forward_ego(const ModelParams& params, const PreparedInstance& inst, const PropagationConfig& pcfg,
                               const ForwardOptions& opts, std::uint64_t dropout_seed) {
    const auto st = run_predictor(params, inst.input, opts.dropout_rate, opts.train_mode, dropout_seed);
    return softmax_row(run_head(params, inst, pcfg, st.logits).logits);
}

double batch_loss(const ModelParams& params, std::span<const BatchItem> batch, const PropagationConfig& pcfg,
                  const ForwardOptions& opts) {
    if (batch.empty()) return 0.0;
    double total = 0.0;
    for (const auto& item : batch) {
        total += accumulate_instance(params, *item.instance, pcfg, opts, item.dropout_seed, 0.0, nullptr);
    }
    return total / static_cast<double>(batch.size());
}

Gradient backward(const ModelParams& params, std::span<const BatchItem> batch, const PropagationConfig& pcfg,
                  const ForwardOptions& opts) {
    ModelParams grad(params.shape());
    Gradient out;
    if (batch.empty()) {
        out.values.assign(params.size(), 0.0);
        return out;
    }
    const double weight = 1.0 / static_cast<double>(batch.size());
    double total = 0.0;
    for (const auto& item : batch) {
        total += accumulate_instance(params, *item.instance, pcfg, opts, item.dropout_seed, weight, &grad);
    }
    out.loss = total * weight;
    out.values.assign(grad.flat_view().begin(), grad.flat_view().end());
    return out;
}

EvalReport evaluate(const ModelParams& params, std::span<const PreparedInstance> prepared,
                    const PropagationConfig& pcfg, LossKind loss_kind) {
    std::vector<double> scores;
    std::vector<int> labels;
    scores.reserve(prepared.size());
    labels.reserve(prepared.size());
    double total = 0.0;
    ForwardOptions opts;
    opts.loss = loss_kind;
    for (const auto& inst : prepared) {
        const auto p = forward_ego(params, inst, pcfg, opts);
        scores.push_back(p(1));
        labels.push_back(inst.label);
        total += row_loss(p, inst.label, loss_kind);
    }
    auto report = make_report(scores, labels);
    if (!prepared.empty()) report.loss = total / static_cast<double>(prepared.size());
    return report;
}

EvalReport evaluate(const ModelParams& params, const InstanceSet& data, std::span<const std::size_t> indices,
                    const PropagationConfig& pcfg, LossKind loss_kind) {
    std::vector<PreparedInstance> prepared;
    prepared.reserve(indices.size());
    for (auto i : indices) prepared.push_back(prepare_instance(data.instances.at(i), pcfg));
    return evaluate(params, prepared, pcfg, loss_kind);
}

TrainResult train(const InstanceSet& data, const TrainConfig& tcfg, const PropagationConfig& pcfg) {
    tcfg.validate();
    pcfg.validate();
    const auto train_idx = data.indices(Split::Train);
    if (train_idx.empty()) throw InputError("training split is empty");

    auto prepare_all = [&](const std::vector<std::size_t>& idx) {
        std::vector<PreparedInstance> out;
        out.reserve(idx.size());
        for (auto i : idx) out.push_back(prepare_instance(data.instances[i], pcfg));
        return out;
    };
    const auto train_set = prepare_all(train_idx);
    const auto val_set = prepare_all(data.indices(Split::Validation));
    const auto test_set = prepare_all(data.indices(Split::Test));

    const auto width = static_cast<std::size_t>(train_set.front().input.cols());
    TrainResult result{ModelParams(model_shape(width, tcfg, pcfg)), {}};
    auto& params = result.params;
    params.initialize(tcfg.seed);
    ModelParams best = params;
    std::optional<double> best_auc;
    double best_val_loss = std::numeric_limits<double>::infinity();

    ForwardOptions opts;
    opts.loss = tcfg.loss;
    opts.dropout_rate = tcfg.dropout_rate;
    opts.train_mode = true;

    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<BatchItem> batch;
    for (int epoch = 1; epoch <= tcfg.epochs; ++epoch) {
        const auto started = std::chrono::steady_clock::now();
        Rng rng(derive_seed(tcfg.seed, {0x65706f6368, static_cast<std::uint64_t>(epoch)}));
        rng.shuffle(order.begin(), order.end());

        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += tcfg.batch_size) {
            const auto stop = std::min(order.size(), start + tcfg.batch_size);
            batch.clear();
            for (auto k = start; k < stop; ++k) {
                batch.push_back({&train_set[order[k]],
                                 derive_seed(tcfg.seed, {static_cast<std::uint64_t>(epoch), order[k]})});
            }
            const auto g = backward(params, batch, pcfg, opts);
            loss_sum += g.loss * static_cast<double>(batch.size());
            auto theta = params.flat_view();
            for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= tcfg.learning_rate * g.values[i];
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = loss_sum / static_cast<double>(order.size());
        if (!std::isfinite(rec.train_loss)) {
            result.trace.epochs.push_back(rec);
            throw DivergenceError("training diverged at epoch " + std::to_string(epoch), result.trace);
        }
        if (!val_set.empty()) {
            const auto report = evaluate(params, val_set, pcfg, tcfg.loss);
            rec.val_loss = report.loss;
            rec.val_auc = report.auc;
        }
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        result.trace.epochs.push_back(rec);

        bool improved = false;
        if (rec.val_auc) {
            improved = !best_auc || *rec.val_auc > *best_auc;
        } else if (!best_auc && rec.val_loss) {
            improved = *rec.val_loss < best_val_loss;
        } else if (val_set.empty()) {
            improved = true;  // nothing to select on: keep the latest
        }
        if (improved) {
            if (rec.val_auc) best_auc = rec.val_auc;
            if (rec.val_loss) best_val_loss = *rec.val_loss;
            best = params;
            result.trace.best_epoch = epoch;
        }
    }
    params = best;
    if (!test_set.empty()) result.trace.test = evaluate(params, test_set, pcfg, tcfg.loss);
    return result;
}

std::string trace_to_json(const TrainTrace& trace) {
    nlohmann::ordered_json j;
    j["best_epoch"] = trace.best_epoch;
    auto epochs = nlohmann::ordered_json::array();
    for (const auto& e : trace.epochs) {
        nlohmann::ordered_json r;
        r["epoch"] = e.epoch;
        r["train_loss"] = e.train_loss;
        r["val_loss"] = e.val_loss ? nlohmann::ordered_json(*e.val_loss) : nlohmann::ordered_json(nullptr);
        r["val_auc"] = e.val_auc ? nlohmann::ordered_json(*e.val_auc) : nlohmann::ordered_json(nullptr);
        epochs.push_back(std::move(r));
    }
    j["epochs"] = std::move(epochs);
    if (trace.test) {
        j["test"] = nlohmann::ordered_json::parse(report_to_json(*trace.test));
    } else {
        j["test"] = nullptr;
    }
    return j.dump(2) + "\n";
}

void check_input_width(const ModelParams& params, std::size_t data_width) {
    if (params.shape().input_width != data_width) {
        throw InputError("model expects input width " + std::to_string(params.shape().input_width) +
                         " but data has width " + std::to_string(data_width));
    }
}

}  // namespace deeppp
