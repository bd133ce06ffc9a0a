#include "fsl/numerics/tensor.hpp"

#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "fsl/common/errors.hpp"

namespace fsl::numerics {

std::size_t shape_size(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_to_string(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i != 0) {
            os << 'x';
        }
        os << shape[i];
    }
    os << ']';
    return os.str();
}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)), data_(shape_size(shape_), 0.0) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_size(shape_) != data_.size()) {
        throw DimensionError("tensor shape " + shape_to_string(shape_) + " does not match " +
                             std::to_string(data_.size()) + " values");
    }
}

Tensor Tensor::scalar(double v) { return Tensor(Shape{}, {v}); }

Tensor Tensor::vector(std::vector<double> values) {
    const std::size_t n = values.size();
    return Tensor(Shape{n}, std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
    return Tensor(Shape{rows, cols}, std::move(values));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    std::vector<double> values;
    values.reserve(r * c);
    for (const auto& row : rows) {
        if (row.size() != c) {
            throw DimensionError("ragged matrix literal");
        }
        values.insert(values.end(), row.begin(), row.end());
    }
    return Tensor(Shape{r, c}, std::move(values));
}

Tensor Tensor::filled(Shape shape, double v) {
    Tensor t(std::move(shape));
    std::fill(t.data_.begin(), t.data_.end(), v);
    return t;
}

std::size_t Tensor::dim(std::size_t axis) const {
    if (axis >= shape_.size()) {
        throw DimensionError("axis " + std::to_string(axis) + " out of range for shape " +
                             shape_to_string(shape_));
    }
    return shape_[axis];
}

std::size_t Tensor::rows() const {
    switch (shape_.size()) {
    case 0:
    case 1:
        return 1;
    case 2:
        return shape_[0];
    default:
        throw DimensionError("rows() on tensor of shape " + shape_to_string(shape_));
    }
}

std::size_t Tensor::cols() const {
    switch (shape_.size()) {
    case 0:
        return 1;
    case 1:
        return shape_[0];
    case 2:
        return shape_[1];
    default:
        throw DimensionError("cols() on tensor of shape " + shape_to_string(shape_));
    }
}

std::span<const double> Tensor::row(std::size_t r) const {
    const std::size_t c = cols();
    return std::span<const double>(data_).subspan(r * c, c);
}

std::span<double> Tensor::row(std::size_t r) {
    const std::size_t c = cols();
    return std::span<double>(data_).subspan(r * c, c);
}

double Tensor::item() const {
    if (data_.size() != 1) {
        throw DimensionError("item() on tensor of shape " + shape_to_string(shape_));
    }
    return data_[0];
}

bool Tensor::all_finite() const noexcept {
    for (const double v : data_) {
        if (!std::isfinite(v)) {
            return false;
        }
    }
    return true;
}

double Tensor::l2_norm_squared() const noexcept {
    double s = 0.0;
    for (const double v : data_) {
        s += v * v;
    }
    return s;
}

} // namespace fsl::numerics
