#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace deeppp {

/// Architecture of the predictor f_theta plus optional attention heads.
struct ModelShape {
    std::size_t input_width = 0;
    std::size_t hidden = 64;
    std::size_t classes = 2;
    /// Attention heads applied on top of the logits; 0 unless the GAT head is used.
    std::size_t gat_heads = 0;

    bool operator==(const ModelShape&) const = default;
};

// =============================================================================
// ModelParams
//
// All trainable values live in one contiguous buffer. Flat order:
//
//   W1 (input_width x hidden, row-major)
//   b1 (hidden)
//   W2 (hidden x classes, row-major)
//   b2 (classes)
//   for each attention head k:
//     W_k (classes x classes, row-major)
//     a_k (2 * classes; source half first)
//
// Matrix accessors are Eigen maps into that buffer.
// =============================================================================
class ModelParams {
public:
    using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    using MatrixMap = Eigen::Map<RowMatrix>;
    using ConstMatrixMap = Eigen::Map<const RowMatrix>;
    using VectorMap = Eigen::Map<Eigen::VectorXd>;
    using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;

    ModelParams() = default;
    explicit ModelParams(const ModelShape& shape);

    static std::size_t parameter_count(const ModelShape& shape);

    const ModelShape& shape() const { return shape_; }
    std::size_t size() const { return data_.size(); }

    std::span<double> flat_view() { return data_; }
    std::span<const double> flat_view() const { return data_; }
    /// Copies `values` in; throws InputError on size mismatch.
    void assign(std::span<const double> values);

    MatrixMap w1() { return {data_.data() + off_w1_, rows(shape_.input_width), rows(shape_.hidden)}; }
    ConstMatrixMap w1() const { return {data_.data() + off_w1_, rows(shape_.input_width), rows(shape_.hidden)}; }
    VectorMap b1() { return {data_.data() + off_b1_, rows(shape_.hidden)}; }
    ConstVectorMap b1() const { return {data_.data() + off_b1_, rows(shape_.hidden)}; }
    MatrixMap w2() { return {data_.data() + off_w2_, rows(shape_.hidden), rows(shape_.classes)}; }
    ConstMatrixMap w2() const { return {data_.data() + off_w2_, rows(shape_.hidden), rows(shape_.classes)}; }
    VectorMap b2() { return {data_.data() + off_b2_, rows(shape_.classes)}; }
    ConstVectorMap b2() const { return {data_.data() + off_b2_, rows(shape_.classes)}; }
    MatrixMap gat_w(std::size_t k) { return {data_.data() + gat_offset(k), rows(shape_.classes), rows(shape_.classes)}; }
    ConstMatrixMap gat_w(std::size_t k) const {
        return {data_.data() + gat_offset(k), rows(shape_.classes), rows(shape_.classes)};
    }
    VectorMap gat_a(std::size_t k) { return {data_.data() + gat_offset(k) + sq(shape_.classes), rows(2 * shape_.classes)}; }
    ConstVectorMap gat_a(std::size_t k) const {
        return {data_.data() + gat_offset(k) + sq(shape_.classes), rows(2 * shape_.classes)};
    }

    /// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases 0.
    void initialize(std::uint64_t seed);

private:
    static Eigen::Index rows(std::size_t n) { return static_cast<Eigen::Index>(n); }
    static std::size_t sq(std::size_t n) { return n * n; }
    std::size_t gat_offset(std::size_t k) const { return off_gat_ + k * (sq(shape_.classes) + 2 * shape_.classes); }

    ModelShape shape_;
    std::vector<double> data_;
    std::size_t off_w1_ = 0, off_b1_ = 0, off_w2_ = 0, off_b2_ = 0, off_gat_ = 0;
};

}  // namespace deeppp
