#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "deeppp/metrics.hpp"
#include "deeppp/model.hpp"
#include "deeppp/propagation.hpp"
#include "deeppp/sampler.hpp"

namespace deeppp {

enum class LossKind : std::uint8_t { CrossEntropy, Mse };

const char* to_string(LossKind k);
LossKind parse_loss(std::string_view s);

struct TrainConfig {
    double learning_rate = 0.1;
    int epochs = 1000;
    /// "1024 mini batches" read as batch size 1024.
    std::size_t batch_size = 1024;
    double dropout_rate = 0.2;
    LossKind loss = LossKind::CrossEntropy;
    std::uint64_t seed = 0;
    std::size_t hidden = 64;

    /// learning_rate >= 0 (0 freezes the parameters), batch_size >= 1,
    /// dropout in [0, 1), epochs >= 0, hidden >= 1.
    void validate() const;
};

struct EpochRecord {
    int epoch = 0;
    /// Mean mini-batch loss over the epoch, measured before each update.
    double train_loss = 0.0;
    std::optional<double> val_loss;
    std::optional<double> val_auc;
    /// Wall-clock; kept out of the serialized trace.
    double seconds = 0.0;
};

struct TrainTrace {
    std::vector<EpochRecord> epochs;
    int best_epoch = 0;
    std::optional<EvalReport> test;
};

/// Training hit a non-finite loss. Carries the trace up to that point.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& what, TrainTrace trace)
        : std::runtime_error(what), trace_(std::move(trace)) {}
    const TrainTrace& trace() const { return trace_; }

private:
    TrainTrace trace_;
};

// -----------------------------------------------------------------------------
// Predictor and loss
// -----------------------------------------------------------------------------

/// H = relu(X W1 + b1) * mask W2 + b2. In train mode with dropout > 0 the
/// hidden units get an inverted-dropout mask drawn from `seed`.
LogitMatrix predictor_forward(const ModelParams& params, const Eigen::MatrixXd& x, double dropout_rate,
                              bool train_mode, std::uint64_t seed);

/// Mean over rows. Cross-entropy clamps p[label] at 1e-12; MSE is the
/// squared distance to the one-hot label.
double loss(const Eigen::MatrixXd& probs, std::span<const int> labels, LossKind kind);

// -----------------------------------------------------------------------------
// Prepared instances
// -----------------------------------------------------------------------------

/// An instance with everything that does not depend on the parameters
/// precomputed. For the linear heads (GCN, PPNP, APPNP, DEEPPP) the ego's
/// output logits are a fixed row vector times H; that vector is cached here.
/// Immutable after construction.
struct PreparedInstance {
    Eigen::MatrixXd input;
    Eigen::Index ego = 0;
    int label = 0;
    Eigen::RowVectorXd ego_weights;
    Neighborhoods scope;
};

PreparedInstance prepare_instance(const NormalizedAdjacency& adj, Eigen::MatrixXd input, Eigen::Index ego,
                                  int label, const PropagationConfig& pcfg);
PreparedInstance prepare_instance(const EgoInstance& inst, const PropagationConfig& pcfg);

/// Ego-row weights r with ego logits = r H, for the linear heads.
Eigen::RowVectorXd ego_propagation_weights(const NormalizedAdjacency& adj, Eigen::Index ego,
                                           const PropagationConfig& pcfg);

ModelShape model_shape(std::size_t input_width, const TrainConfig& tcfg, const PropagationConfig& pcfg);

// -----------------------------------------------------------------------------
// Forward / backward
// -----------------------------------------------------------------------------

struct BatchItem {
    const PreparedInstance* instance = nullptr;
    std::uint64_t dropout_seed = 0;
};

struct ForwardOptions {
    LossKind loss = LossKind::CrossEntropy;
    double dropout_rate = 0.0;
    bool train_mode = false;
};

/// Ego-row class probabilities.
Eigen::RowVectorXd forward_ego(const ModelParams& params, const PreparedInstance& inst, const PropagationConfig& pcfg,
                               const ForwardOptions& opts = {}, std::uint64_t dropout_seed = 0);

/// Mean loss over the batch.
double batch_loss(const ModelParams& params, std::span<const BatchItem> batch, const PropagationConfig& pcfg,
                  const ForwardOptions& opts);

struct Gradient {
    double loss = 0.0;
    std::vector<double> values;  // flat_view order
};

/// Exact reverse-mode gradient of the mean batch loss. Per-instance terms are
/// summed in batch order.
Gradient backward(const ModelParams& params, std::span<const BatchItem> batch, const PropagationConfig& pcfg,
                  const ForwardOptions& opts);

// -----------------------------------------------------------------------------
// Training
// -----------------------------------------------------------------------------

struct TrainResult {
    ModelParams params;
    TrainTrace trace;
};

/// Plain SGD over seeded mini-batches. Keeps the parameters of the epoch with
/// the best validation AUC (lowest validation loss when AUC is undefined).
/// The returned trace carries the test report of those parameters.
TrainResult train(const InstanceSet& data, const TrainConfig& tcfg, const PropagationConfig& pcfg);

/// Eval-mode report over the given instances (scores are P(active) of the ego).
EvalReport evaluate(const ModelParams& params, const InstanceSet& data, std::span<const std::size_t> indices,
                    const PropagationConfig& pcfg, LossKind loss_kind = LossKind::CrossEntropy);
EvalReport evaluate(const ModelParams& params, std::span<const PreparedInstance> prepared,
                    const PropagationConfig& pcfg, LossKind loss_kind = LossKind::CrossEntropy);

/// Trace as JSON (wall-clock excluded).
std::string trace_to_json(const TrainTrace& trace);

// -----------------------------------------------------------------------------
// Checkpoints
// -----------------------------------------------------------------------------

struct Checkpoint {
    ModelParams params;
    PropagationConfig pcfg;
    TrainConfig tcfg;
};

/// Layout: magic "DEEPPPCK", u32 version, u32 config length, config JSON,
/// u64 parameter count, little-endian f64 payload, u32 CRC-32 of all
/// preceding bytes.
void save_checkpoint(const ModelParams& params, const PropagationConfig& pcfg, const TrainConfig& tcfg,
                     const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

/// Throws InputError naming both widths when data and model disagree.
void check_input_width(const ModelParams& params, std::size_t data_width);

}  // namespace deeppp
