#pragma once

#include <cstddef>
#include <initializer_list>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace fsl::numerics {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_to_string(const Shape& shape);

// Dense row-major tensor of doubles. A rank-0 shape ({}) is a scalar.
class Tensor {
  public:
    Tensor() : Tensor(Shape{}) {}
    explicit Tensor(Shape shape);
    Tensor(Shape shape, std::vector<double> data);

    static Tensor scalar(double v);
    static Tensor vector(std::vector<double> values);
    static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
    static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);
    static Tensor filled(Shape shape, double v);

    [[nodiscard]] const Shape& shape() const noexcept { return shape_; }
    [[nodiscard]] std::size_t rank() const noexcept { return shape_.size(); }
    [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
    [[nodiscard]] std::size_t dim(std::size_t axis) const;

    // 2-D accessors; rank-1 tensors are treated as a single row.
    [[nodiscard]] std::size_t rows() const;
    [[nodiscard]] std::size_t cols() const;

    [[nodiscard]] std::span<const double> data() const noexcept { return data_; }
    [[nodiscard]] std::span<double> data() noexcept { return data_; }
    [[nodiscard]] std::span<const double> row(std::size_t r) const;
    [[nodiscard]] std::span<double> row(std::size_t r);

    double operator[](std::size_t i) const { return data_[i]; }
    double& operator[](std::size_t i) { return data_[i]; }
    [[nodiscard]] double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

    // Value of a single-element tensor.
    [[nodiscard]] double item() const;

    [[nodiscard]] bool all_finite() const noexcept;
    [[nodiscard]] double l2_norm_squared() const noexcept;

    friend bool operator==(const Tensor&, const Tensor&) = default;

  private:
    Shape shape_;
    std::vector<double> data_;
};

// Named tensors in deterministic (sorted) order: parameter sets and gradients.
using TensorMap = std::map<std::string, Tensor>;
using GradMap = TensorMap;

} // namespace fsl::numerics
