#ifndef WDKG_TENSOR_HPP
#define WDKG_TENSOR_HPP

#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "wdkg/errors.hpp"
#include "wdkg/matrix.hpp"

namespace wdkg::ad {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& s) {
    std::size_t n = 1;
    for (auto d : s) n *= d;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::string out = "(";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += "x";
        out += std::to_string(s[i]);
    }
    return out + ")";
}

// Dense row-major value type. Scalars use shape {1}.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape) : shape_(std::move(shape)), v_(shape_size(shape_), 0.0) {}
    Tensor(Shape shape, std::vector<double> values) : shape_(std::move(shape)), v_(std::move(values)) {
        if (v_.size() != shape_size(shape_))
            throw ShapeMismatch("Tensor: " + std::to_string(v_.size()) + " values for shape " +
                                shape_str(shape_));
    }

    static Tensor scalar(double x) { return Tensor({1}, {x}); }
    static Tensor from_matrix(const Matrix& m) {
        return Tensor({m.rows, m.cols}, m.v);
    }

    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return v_.size(); }
    bool empty() const { return v_.empty(); }

    double* data() { return v_.data(); }
    const double* data() const { return v_.data(); }
    double& operator[](std::size_t i) { return v_[i]; }
    double operator[](std::size_t i) const { return v_[i]; }

    double& at(std::size_t i, std::size_t j) { return v_[i * shape_[1] + j]; }
    double at(std::size_t i, std::size_t j) const { return v_[i * shape_[1] + j]; }
    double& at(std::size_t i, std::size_t j, std::size_t k) {
        return v_[(i * shape_[1] + j) * shape_[2] + k];
    }
    double at(std::size_t i, std::size_t j, std::size_t k) const {
        return v_[(i * shape_[1] + j) * shape_[2] + k];
    }

    Matrix to_matrix() const {
        if (rank() != 2) throw ShapeMismatch("to_matrix: tensor is " + shape_str(shape_));
        Matrix m(shape_[0], shape_[1]);
        m.v = v_;
        return m;
    }

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    Shape shape_;
    std::vector<double> v_;
};

} // namespace wdkg::ad

#endif
