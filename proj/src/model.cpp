#include "deeppp/model.hpp"

#include <algorithm>
#include <cmath>

#include "deeppp/error.hpp"
#include "deeppp/random.hpp"

namespace deeppp {

std::size_t ModelParams::parameter_count(const ModelShape& s) {
    return s.input_width * s.hidden + s.hidden + s.hidden * s.classes + s.classes +
           s.gat_heads * (s.classes * s.classes + 2 * s.classes);
}

ModelParams::ModelParams(const ModelShape& shape) : shape_(shape), data_(parameter_count(shape), 0.0) {
    off_w1_ = 0;
    off_b1_ = off_w1_ + shape.input_width * shape.hidden;
    off_w2_ = off_b1_ + shape.hidden;
    off_b2_ = off_w2_ + shape.hidden * shape.classes;
    off_gat_ = off_b2_ + shape.classes;
}

void ModelParams::assign(std::span<const double> values) {
    if (values.size() != data_.size()) {
        throw InputError("parameter vector has " + std::to_string(values.size()) + " entries, model expects " +
                         std::to_string(data_.size()));
    }
    std::copy(values.begin(), values.end(), data_.begin());
}

void ModelParams::initialize(std::uint64_t seed) {
    Rng rng(derive_seed(seed, {0x696e6974}));
    std::fill(data_.begin(), data_.end(), 0.0);
    auto fill_uniform = [&](double* p, std::size_t count, std::size_t fan_in) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(fan_in, 1)));
        for (std::size_t i = 0; i < count; ++i) p[i] = rng.uniform(-bound, bound);
    };
    fill_uniform(data_.data() + off_w1_, shape_.input_width * shape_.hidden, shape_.input_width);
    fill_uniform(data_.data() + off_w2_, shape_.hidden * shape_.classes, shape_.hidden);
    for (std::size_t k = 0; k < shape_.gat_heads; ++k) {
        fill_uniform(data_.data() + gat_offset(k), sq(shape_.classes), shape_.classes);
        fill_uniform(data_.data() + gat_offset(k) + sq(shape_.classes), 2 * shape_.classes, 2 * shape_.classes);
    }
}

}  // namespace deeppp
