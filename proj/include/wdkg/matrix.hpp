#ifndef WDKG_MATRIX_HPP
#define WDKG_MATRIX_HPP

#include <cstddef>
#include <vector>

namespace wdkg {

// Dense row-major matrix of doubles. Deliberately minimal: the KG side of
// the library only needs storage, indexing and a handful of helpers. The
// differentiable tensor type lives separately in wdkg::ad.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> v;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), v(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return v[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return v[r * cols + c]; }

    std::size_t size() const { return v.size(); }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

    friend bool operator==(const Matrix& a, const Matrix& b) {
        return a.rows == b.rows && a.cols == b.cols && a.v == b.v;
    }
};

} // namespace wdkg

#endif
