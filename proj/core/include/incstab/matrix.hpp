#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace incstab {

/// Small dense matrix, row-major. Systems here are low-dimensional, so no
/// attempt is made at sparsity or expression templates.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}

    static Matrix identity(int n) {
        Matrix m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    double& operator()(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    double operator()(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }

    [[nodiscard]] bool square() const { return rows == cols; }

    [[nodiscard]] Matrix transposed() const {
        Matrix t(cols, rows);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    Matrix& operator+=(const Matrix& b) {
        if (rows != b.rows || cols != b.cols) throw std::invalid_argument("matrix shape mismatch");
        for (std::size_t i = 0; i < data.size(); ++i) data[i] += b.data[i];
        return *this;
    }

    Matrix& operator*=(double s) {
        for (double& v : data) v *= s;
        return *this;
    }
};

inline Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
inline Matrix operator*(double s, Matrix a) { return a *= s; }

inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) throw std::invalid_argument("matrix shape mismatch");
    Matrix c(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i)
        for (int k = 0; k < a.cols; ++k) {
            const double aik = a(i, k);
            for (int j = 0; j < b.cols; ++j) c(i, j) += aik * b(k, j);
        }
    return c;
}

inline double frobenius_norm(const Matrix& a) {
    double s = 0.0;
    for (double v : a.data) s += v * v;
    return std::sqrt(s);
}

inline double max_abs(const Matrix& a) {
    double m = 0.0;
    for (double v : a.data) m = std::max(m, std::abs(v));
    return m;
}

}  // namespace incstab
