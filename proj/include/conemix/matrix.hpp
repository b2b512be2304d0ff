#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <ostream>
#include <span>
#include <vector>

#include "conemix/errors.hpp"
#include "conemix/scalar.hpp"

namespace conemix {

template <Scalar T>
using Vector = std::vector<T>;

using Vec = Vector<double>;
using QVec = Vector<Rational>;

/// Dense row-major matrix over double or exact rationals. Shapes are always
/// at least 1x1.
template <Scalar T>
class Matrix {
public:
    using value_type = T;

    Matrix(std::size_t rows, std::size_t cols, const T& fill = T(0))
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {
        if (rows == 0 || cols == 0) throw Error(ErrorCode::DimensionMismatch, "matrix shape must be at least 1x1");
    }

    Matrix(std::initializer_list<std::initializer_list<T>> init)
        : Matrix(init.size(), init.size() ? init.begin()->size() : 0) {
        std::size_t i = 0;
        for (const auto& row : init) {
            if (row.size() != cols_) throw Error(ErrorCode::DimensionMismatch, "ragged initializer");
            std::copy(row.begin(), row.end(), data_.begin() + static_cast<std::ptrdiff_t>(i * cols_));
            ++i;
        }
    }

    static Matrix from_rows(const std::vector<std::vector<T>>& rows) {
        if (rows.empty() || rows.front().empty()) throw Error(ErrorCode::DimensionMismatch, "empty matrix");
        Matrix m(rows.size(), rows.front().size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != m.cols_) throw Error(ErrorCode::DimensionMismatch, "ragged matrix rows");
            for (std::size_t j = 0; j < m.cols_; ++j) m(i, j) = rows[i][j];
        }
        return m;
    }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = T(1);
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool is_square() const noexcept { return rows_ == cols_; }

    T& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    const T& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<T> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const T> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

    Vector<T> column(std::size_t j) const {
        Vector<T> c(rows_);
        for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
        return c;
    }

    const std::vector<T>& data() const noexcept { return data_; }

    Matrix transpose() const {
        Matrix t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    Matrix& operator+=(const Matrix& o) {
        check_same_shape(o);
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
        return *this;
    }
    Matrix& operator-=(const Matrix& o) {
        check_same_shape(o);
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
        return *this;
    }
    Matrix& operator*=(const T& s) {
        for (auto& v : data_) v *= s;
        return *this;
    }

    friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
    friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
    friend Matrix operator*(Matrix a, const T& s) { return a *= s; }
    friend Matrix operator*(const T& s, Matrix a) { return a *= s; }

    friend Matrix operator*(const Matrix& a, const Matrix& b) {
        if (a.cols_ != b.rows_) throw Error(ErrorCode::DimensionMismatch, "matrix product shape");
        Matrix c(a.rows_, b.cols_);
        for (std::size_t i = 0; i < a.rows_; ++i)
            for (std::size_t k = 0; k < a.cols_; ++k) {
                const T& aik = a(i, k);
                if (is_zero(aik)) continue;
                for (std::size_t j = 0; j < b.cols_; ++j) c(i, j) += aik * b(k, j);
            }
        return c;
    }

    friend Vector<T> operator*(const Matrix& a, const Vector<T>& x) {
        if (a.cols_ != x.size()) throw Error(ErrorCode::DimensionMismatch, "matrix-vector shape");
        Vector<T> y(a.rows_, T(0));
        for (std::size_t i = 0; i < a.rows_; ++i)
            for (std::size_t j = 0; j < a.cols_; ++j) y[i] += a(i, j) * x[j];
        return y;
    }

    bool operator==(const Matrix& o) const {
        return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
    }

    template <Scalar U>
    Matrix<U> cast() const {
        Matrix<U> out(rows_, cols_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) {
                if constexpr (std::is_same_v<U, T>)
                    out(i, j) = (*this)(i, j);
                else if constexpr (std::is_same_v<U, double>)
                    out(i, j) = to_double((*this)(i, j));
                else
                    out(i, j) = Rational((*this)(i, j));
            }
        return out;
    }

private:
    void check_same_shape(const Matrix& o) const {
        if (rows_ != o.rows_ || cols_ != o.cols_) throw Error(ErrorCode::DimensionMismatch, "matrix shapes differ");
    }

    std::size_t rows_;
    std::size_t cols_;
    std::vector<T> data_;
};

using Mat = Matrix<double>;
using QMat = Matrix<Rational>;

template <Scalar T>
std::ostream& operator<<(std::ostream& os, const Matrix<T>& m) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
        os << (i ? " [" : "[[");
        for (std::size_t j = 0; j < m.cols(); ++j) os << (j ? ", " : "") << m(i, j);
        os << (i + 1 == m.rows() ? "]]" : "]\n");
    }
    return os;
}

// ---- vector helpers ----------------------------------------------------

template <Scalar T>
T dot(std::span<const T> a, std::span<const T> b) {
    if (a.size() != b.size()) throw Error(ErrorCode::DimensionMismatch, "dot product length");
    T s(0);
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

template <Scalar T>
T dot(const Vector<T>& a, const Vector<T>& b) {
    return dot<T>(std::span<const T>(a), std::span<const T>(b));
}

inline double norm2(std::span<const double> a) {
    double s = 0;
    for (double v : a) s += v * v;
    return std::sqrt(s);
}
inline double norm2(const Vec& a) { return norm2(std::span<const double>(a)); }
inline double norm2(const QVec& a) {
    double s = 0;
    for (const auto& v : a) s += to_double(v) * to_double(v);
    return std::sqrt(s);
}

template <Scalar T>
Vector<T> kron(const Vector<T>& a, const Vector<T>& b) {
    Vector<T> out;
    out.reserve(a.size() * b.size());
    for (const auto& x : a)
        for (const auto& y : b) out.push_back(T(x * y));
    return out;
}

template <Scalar T>
Vector<T> axpy(const Vector<T>& x, const T& alpha, const Vector<T>& y) {
    if (x.size() != y.size()) throw Error(ErrorCode::DimensionMismatch, "vector lengths differ");
    Vector<T> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = alpha * x[i] + y[i];
    return out;
}

inline Vec to_double(const QVec& v) {
    Vec out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = to_double(v[i]);
    return out;
}

inline Vec sub(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw Error(ErrorCode::DimensionMismatch, "vector lengths differ");
    Vec out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

inline Vec scaled(Vec v, double s) {
    for (auto& x : v) x *= s;
    return v;
}

// ---- Eigen bridge (float only) -----------------------------------------

inline Eigen::MatrixXd to_eigen(const Mat& m) {
    Eigen::MatrixXd e(static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols()));
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j)
            e(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m(i, j);
    return e;
}

inline Mat from_eigen(const Eigen::MatrixXd& e) {
    Mat m(static_cast<std::size_t>(e.rows()), static_cast<std::size_t>(e.cols()));
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j)
            m(i, j) = e(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    return m;
}

}  // namespace conemix
