#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/StdVector>

namespace cnnrom::nn {

using Shape = std::vector<std::int64_t>;

std::int64_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major array of doubles. Image batches use NCHW. Storage is
/// SIMD-aligned so vectorized kernels split work identically on every run.
class Tensor {
public:
    using Storage = std::vector<double, Eigen::aligned_allocator<double>>;

    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> values);

    const Shape& shape() const { return shape_; }
    std::int64_t dim(std::size_t i) const { return shape_.at(i); }
    std::size_t ndim() const { return shape_.size(); }
    std::int64_t size() const { return static_cast<std::int64_t>(values_.size()); }
    bool empty() const { return values_.empty(); }

    double* data() { return values_.data(); }
    const double* data() const { return values_.data(); }
    Storage& values() { return values_; }
    const Storage& values() const { return values_; }
    double& operator[](std::int64_t i) { return values_[static_cast<std::size_t>(i)]; }
    double operator[](std::int64_t i) const { return values_[static_cast<std::size_t>(i)]; }

    Eigen::Map<Eigen::VectorXd> vec() { return {values_.data(), size()}; }
    Eigen::Map<const Eigen::VectorXd> vec() const { return {values_.data(), size()}; }

    /// Same values under a new shape of equal size.
    Tensor reshaped(Shape shape) const;
    void fill(double v);
    bool all_finite() const;

    bool operator==(const Tensor& other) const = default;

private:
    Shape shape_;
    Storage values_;
};

}  // namespace cnnrom::nn
