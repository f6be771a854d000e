#include "linerec/tensor.hpp"

#include <cmath>

#include "linerec/errors.hpp"

namespace linerec {

namespace {
int64_t checked_numel(const std::vector<int64_t>& shape) {
    int64_t n = 1;
    for (int64_t d : shape) {
        if (d <= 0) throw DimensionError("tensor: extents must be positive");
        n *= d;
    }
    return n;
}
}  // namespace

Tensor::Tensor(std::vector<int64_t> shape)
    : shape_(std::move(shape)), data_(static_cast<size_t>(checked_numel(shape_)), 0.0f) {}

Tensor::Tensor(std::vector<int64_t> shape, std::vector<float> data) : shape_(std::move(shape)) {
    int64_t n = checked_numel(shape_);
    if (n != static_cast<int64_t>(data.size()))
        throw DimensionError("tensor: data length does not match shape");
    data_ = std::move(data);
}

Tensor Tensor::full(std::vector<int64_t> shape, float value) {
    Tensor t(std::move(shape));
    for (float& v : t.data_) v = value;
    return t;
}

bool Tensor::all_finite() const {
    for (float v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

uint64_t Rng::next_u64() {
    uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

float Rng::next_float() {
    return static_cast<float>(next_u64() >> 40) * (1.0f / 16777216.0f);
}

Tensor Rng::uniform(std::vector<int64_t> shape, float lo, float hi) {
    if (!(lo < hi)) throw ParameterError("rng_uniform: lo must be < hi");
    Tensor t(std::move(shape));
    float span = hi - lo;
    for (int64_t i = 0; i < t.size(); ++i) t.at(i) = lo + span * next_float();
    return t;
}

uint64_t Rng::next_below(uint64_t n) {
    return n == 0 ? 0 : next_u64() % n;
}

}  // namespace linerec
