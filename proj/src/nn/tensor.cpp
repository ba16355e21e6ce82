#include "cnnrom/nn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cnnrom::nn {

std::int64_t shape_size(const Shape& shape)
{
    std::int64_t n = 1;
    for (const auto d : shape) {
        if (d < 0) {
            throw std::invalid_argument("negative tensor dimension");
        }
        n *= d;
    }
    return n;
}

std::string shape_string(const Shape& shape)
{
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        s += (i ? "," : "") + std::to_string(shape[i]);
    }
    return s + "]";
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), values_(static_cast<std::size_t>(shape_size(shape_)), fill)
{
}

Tensor::Tensor(Shape shape, std::vector<double> values) : shape_(std::move(shape)), values_(values.begin(), values.end())
{
    if (static_cast<std::int64_t>(values_.size()) != shape_size(shape_)) {
        throw std::invalid_argument("Tensor: value count does not match shape " + shape_string(shape_));
    }
}

Tensor Tensor::reshaped(Shape shape) const
{
    if (shape_size(shape) != size()) {
        throw std::invalid_argument("Tensor::reshaped: " + shape_string(shape_) + " -> " + shape_string(shape));
    }
    Tensor out = *this;
    out.shape_ = std::move(shape);
    return out;
}

void Tensor::fill(double v)
{
    std::fill(values_.begin(), values_.end(), v);
}

bool Tensor::all_finite() const
{
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace cnnrom::nn
