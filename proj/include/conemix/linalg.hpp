#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <complex>
#include <cstddef>
#include <optional>
#include <vector>

#include "conemix/matrix.hpp"
#include "conemix/scalar.hpp"

namespace conemix {

template <Scalar T>
Matrix<T> kron(const Matrix<T>& a, const Matrix<T>& b) {
    Matrix<T> out(a.rows() * b.rows(), a.cols() * b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) {
            const T& aij = a(i, j);
            if (is_zero(aij)) continue;
            for (std::size_t k = 0; k < b.rows(); ++k)
                for (std::size_t l = 0; l < b.cols(); ++l)
                    out(i * b.rows() + k, j * b.cols() + l) = aij * b(k, l);
        }
    return out;
}

/// m^n by repeated squaring; m^0 is the identity.
template <Scalar T>
Matrix<T> mat_power(const Matrix<T>& m, unsigned long long n) {
    if (!m.is_square()) throw Error(ErrorCode::DimensionMismatch, "mat_power needs a square matrix");
    Matrix<T> result = Matrix<T>::identity(m.rows());
    Matrix<T> base = m;
    while (n > 0) {
        if (n & 1ULL) result = result * base;
        n >>= 1ULL;
        if (n) base = base * base;
    }
    return result;
}

template <Scalar T>
Matrix<T> shifted(const Matrix<T>& m, const T& lambda) {
    Matrix<T> out = m;
    for (std::size_t i = 0; i < std::min(m.rows(), m.cols()); ++i) out(i, i) -= lambda;
    return out;
}

namespace detail {

/// Fraction-free (Bareiss) echelon reduction of an integer matrix; returns rank.
inline std::size_t bareiss_rank(std::vector<std::vector<mpz_class>> a) {
    const std::size_t rows = a.size();
    const std::size_t cols = rows ? a.front().size() : 0;
    std::size_t rank = 0;
    mpz_class prev = 1;
    for (std::size_t c = 0; c < cols && rank < rows; ++c) {
        std::size_t pivot = rank;
        while (pivot < rows && a[pivot][c] == 0) ++pivot;
        if (pivot == rows) continue;
        std::swap(a[pivot], a[rank]);
        const mpz_class& p = a[rank][c];
        for (std::size_t i = rank + 1; i < rows; ++i) {
            for (std::size_t j = c + 1; j < cols; ++j) {
                mpz_class v = a[i][j] * p - a[i][c] * a[rank][j];
                mpz_divexact(a[i][j].get_mpz_t(), v.get_mpz_t(), prev.get_mpz_t());
            }
            a[i][c] = 0;
        }
        prev = p;
        ++rank;
    }
    return rank;
}

/// Scales every row by the lcm of its denominators so Bareiss can run on integers.
inline std::vector<std::vector<mpz_class>> integer_rows(const QMat& m) {
    std::vector<std::vector<mpz_class>> out(m.rows(), std::vector<mpz_class>(m.cols()));
    for (std::size_t i = 0; i < m.rows(); ++i) {
        mpz_class l = 1;
        for (std::size_t j = 0; j < m.cols(); ++j) mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), m(i, j).get_den_mpz_t());
        for (std::size_t j = 0; j < m.cols(); ++j) out[i][j] = m(i, j).get_num() * (l / m(i, j).get_den());
    }
    return out;
}

inline Eigen::VectorXd singular_values(const Mat& m) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(to_eigen(m));
    return svd.singularValues();
}

}  // namespace detail

/// Exact rank via fraction-free elimination.
inline std::size_t rank(const QMat& m) { return detail::bareiss_rank(detail::integer_rows(m)); }

/// Numerical rank: singular values above eps_rank * sigma_max.
inline std::size_t rank(const Mat& m, const Tolerances& tol = {}) {
    Eigen::VectorXd s = detail::singular_values(m);
    if (s.size() == 0 || s(0) == 0.0) return 0;
    const double cut = tol.eps_rank * s(0);
    std::size_t r = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > cut) ++r;
    return r;
}

/// True when some singular value sits within 10x of the rank cutoff.
inline bool rank_is_marginal(const Mat& m, const Tolerances& tol = {}) {
    Eigen::VectorXd s = detail::singular_values(m);
    if (s.size() == 0 || s(0) == 0.0) return false;
    const double cut = tol.eps_rank * s(0);
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > cut / 10.0 && s(i) < cut * 10.0) return true;
    return false;
}

/// Dimension of the null space. Rational input is always exact; double input
/// is promoted to its exact binary value when the mode asks for exactness.
template <Scalar T>
std::size_t kernel_dim(const Matrix<T>& m, const ScalarMode& mode = ScalarMode::floating()) {
    if constexpr (is_rational_v<T>) {
        return m.cols() - rank(m);
    } else {
        if (mode.is_exact()) return m.cols() - rank(m.template cast<Rational>());
        return m.cols() - rank(m, mode.tol);
    }
}

/// Basis of the right null space by exact reduced row echelon form.
inline std::vector<QVec> null_space(const QMat& m) {
    QMat a = m;
    const std::size_t rows = a.rows(), cols = a.cols();
    std::vector<std::size_t> pivots;
    std::size_t r = 0;
    for (std::size_t c = 0; c < cols && r < rows; ++c) {
        std::size_t p = r;
        while (p < rows && sgn(a(p, c)) == 0) ++p;
        if (p == rows) continue;
        if (p != r)
            for (std::size_t j = 0; j < cols; ++j) std::swap(a(p, j), a(r, j));
        Rational inv = 1 / a(r, c);
        for (std::size_t j = 0; j < cols; ++j) a(r, j) *= inv;
        for (std::size_t i = 0; i < rows; ++i) {
            if (i == r || sgn(a(i, c)) == 0) continue;
            Rational f = a(i, c);
            for (std::size_t j = 0; j < cols; ++j) a(i, j) -= f * a(r, j);
        }
        pivots.push_back(c);
        ++r;
    }
    std::vector<bool> is_pivot(cols, false);
    for (auto c : pivots) is_pivot[c] = true;
    std::vector<QVec> basis;
    for (std::size_t f = 0; f < cols; ++f) {
        if (is_pivot[f]) continue;
        QVec v(cols, Rational(0));
        v[f] = 1;
        for (std::size_t k = 0; k < pivots.size(); ++k) v[pivots[k]] = -a(k, f);
        basis.push_back(std::move(v));
    }
    return basis;
}

/// Orthonormal basis of the numerical null space (right singular vectors).
inline std::vector<Vec> null_space(const Mat& m, const Tolerances& tol = {}) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(to_eigen(m), Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    const double cut = s.size() && s(0) > 0 ? tol.eps_rank * s(0) : 0.0;
    std::size_t r = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > cut) ++r;
    if (s.size() && s(0) == 0.0) r = 0;
    std::vector<Vec> basis;
    const auto& v = svd.matrixV();
    for (Eigen::Index j = static_cast<Eigen::Index>(r); j < v.cols(); ++j) {
        Vec col(static_cast<std::size_t>(v.rows()));
        for (Eigen::Index i = 0; i < v.rows(); ++i) col[static_cast<std::size_t>(i)] = v(i, j);
        basis.push_back(std::move(col));
    }
    return basis;
}

/// Right singular vector for the smallest singular value.
inline Vec smallest_singular_vector(const Mat& m) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(to_eigen(m), Eigen::ComputeFullV);
    const auto& v = svd.matrixV();
    Vec col(static_cast<std::size_t>(v.rows()));
    for (Eigen::Index i = 0; i < v.rows(); ++i) col[static_cast<std::size_t>(i)] = v(i, v.cols() - 1);
    return col;
}

/// Solves a square exact system; returns nullopt when singular.
template <Scalar T>
std::optional<Matrix<T>> inverse(const Matrix<T>& m, double eps = 1e-12) {
    if (!m.is_square()) throw Error(ErrorCode::DimensionMismatch, "inverse needs a square matrix");
    const std::size_t n = m.rows();
    Matrix<T> a = m;
    Matrix<T> inv = Matrix<T>::identity(n);
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t p = c;
        if constexpr (is_rational_v<T>) {
            while (p < n && sgn(a(p, c)) == 0) ++p;
            if (p == n) return std::nullopt;
        } else {
            for (std::size_t i = c + 1; i < n; ++i)
                if (std::abs(a(i, c)) > std::abs(a(p, c))) p = i;
            if (std::abs(a(p, c)) <= eps) return std::nullopt;
        }
        if (p != c)
            for (std::size_t j = 0; j < n; ++j) {
                std::swap(a(p, j), a(c, j));
                std::swap(inv(p, j), inv(c, j));
            }
        T pivot_inv = T(1) / a(c, c);
        for (std::size_t j = 0; j < n; ++j) {
            a(c, j) *= pivot_inv;
            inv(c, j) *= pivot_inv;
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (i == c || is_zero(a(i, c))) continue;
            T f = a(i, c);
            for (std::size_t j = 0; j < n; ++j) {
                a(i, j) -= f * a(c, j);
                inv(i, j) -= f * inv(c, j);
            }
        }
    }
    return inv;
}

// ---- spectra --------------------------------------------------------------

using Complex = std::complex<double>;

/// Eigenvalues over the complex numbers (Hessenberg QR). Rational input is
/// rounded to double first.
template <Scalar T>
std::vector<Complex> eigenvalues(const Matrix<T>& m) {
    if (!m.is_square()) throw Error(ErrorCode::DimensionMismatch, "eigenvalues need a square matrix");
    Mat md = m.template cast<double>();
    Eigen::EigenSolver<Eigen::MatrixXd> es(to_eigen(md), false);
    const auto& ev = es.eigenvalues();
    std::vector<Complex> out(static_cast<std::size_t>(ev.size()));
    for (Eigen::Index i = 0; i < ev.size(); ++i) out[static_cast<std::size_t>(i)] = ev(i);
    return out;
}

struct SpectralRadius {
    double value = 0.0;
    /// Set when the floating estimate was confirmed as an exact rational
    /// eigenvalue of a rational matrix. Absent means the value is a float
    /// estimate only.
    std::optional<Rational> exact;

    bool approximate() const { return !exact.has_value(); }
};

/// Largest eigenvalue modulus. For rational input the estimate is snapped to
/// a nearby small-denominator rational and confirmed by an exact kernel test.
template <Scalar T>
SpectralRadius spectral_radius(const Matrix<T>& m) {
    SpectralRadius out;
    for (const auto& ev : eigenvalues(m)) out.value = std::max(out.value, std::abs(ev));
    if constexpr (is_rational_v<T>) {
        Rational candidate = rationalize(out.value, 1 << 20);
        const double gap = std::abs(to_double(candidate) - out.value);
        if (gap <= 1e-7 * std::max(1.0, out.value) && kernel_dim(shifted(m, candidate)) > 0) {
            out.exact = candidate;
            out.value = to_double(candidate);
        }
    }
    return out;
}

struct MultiplicityPair {
    std::size_t geometric = 0;
    std::size_t algebraic = 0;
    /// Size of the largest Jordan block (exact path only).
    std::optional<std::size_t> degree;
    /// A float decision sat within 10x of its threshold.
    bool marginal = false;

    bool operator==(const MultiplicityPair&) const = default;
};

/// Geometric and algebraic multiplicity of lambda. Exact: kernel dimensions
/// of (m - lambda I)^k until they stabilize. Float: SVD rank for the
/// geometric part, eigenvalue clustering within eps_cluster for the algebraic.
template <Scalar T>
MultiplicityPair multiplicities(const Matrix<T>& m, const T& lambda,
                                const ScalarMode& mode = ScalarMode::floating()) {
    if (!m.is_square()) throw Error(ErrorCode::DimensionMismatch, "multiplicities need a square matrix");
    const std::size_t d = m.rows();
    MultiplicityPair out;
    if (is_rational_v<T> || mode.is_exact()) {
        QMat b = shifted(m.template cast<Rational>(), Rational(lambda));
        std::size_t k1 = kernel_dim(b);
        if (k1 == 0) return out;
        out.geometric = k1;
        std::size_t prev = k1;
        std::size_t power = 1;
        QMat bp = b;
        while (power < d) {
            bp = bp * b;
            std::size_t next = kernel_dim(bp);
            if (next == prev) break;
            prev = next;
            ++power;
        }
        out.algebraic = prev;
        out.degree = power;
        return out;
    } else {
        const double lam = to_double(lambda);
        const double eps = mode.tol.eps_cluster;
        for (const auto& ev : eigenvalues(m)) {
            const double dist = std::abs(ev - Complex(lam, 0.0));
            if (dist <= eps) ++out.algebraic;
            if (dist > eps / 10.0 && dist < eps * 10.0) out.marginal = true;
        }
        if (out.algebraic == 0) return out;
        Mat b = shifted(m.template cast<double>(), lam);
        std::size_t g = d - rank(b, mode.tol);
        out.marginal = out.marginal || rank_is_marginal(b, mode.tol);
        std::size_t clamped = std::clamp<std::size_t>(g, 1, out.algebraic);
        if (clamped != g) out.marginal = true;
        out.geometric = clamped;
        return out;
    }
}

/// Largest Jordan block for lambda, exact. Zero when lambda is not an eigenvalue.
inline std::size_t jordan_degree(const QMat& m, const Rational& lambda) {
    auto p = multiplicities(m, lambda, ScalarMode::exact());
    return p.degree.value_or(0);
}

}  // namespace conemix
