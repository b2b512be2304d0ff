#pragma once

#include <cstddef>
#include <vector>

#include "conemix/matrix.hpp"

namespace conemix {

enum class LpStatus { Optimal, Infeasible, Unbounded };

template <Scalar T>
struct LpResult {
    LpStatus status = LpStatus::Infeasible;
    T value{0};
    Vector<T> x;
};

namespace detail {

/// Dense two-phase tableau simplex with Bland's rule. Works over exact
/// rationals (eps ignored) or doubles (pivots and reduced costs compared
/// against eps).
template <Scalar T>
class Simplex {
public:
    Simplex(const Matrix<T>& a, const Vector<T>& b, double eps)
        : m_(a.rows()), n_(a.cols()), eps_(eps), t_(m_, std::vector<T>(n_ + m_ + 1, T(0))), basis_(m_) {
        if (b.size() != m_) throw Error(ErrorCode::DimensionMismatch, "lp rhs length");
        for (std::size_t i = 0; i < m_; ++i) {
            const bool flip = sign_of(b[i]) < 0;
            for (std::size_t j = 0; j < n_; ++j) t_[i][j] = flip ? T(-a(i, j)) : a(i, j);
            t_[i][n_ + i] = T(1);
            t_[i][rhs()] = flip ? T(-b[i]) : b[i];
            basis_[i] = n_ + i;
        }
    }

    LpResult<T> minimize(const Vector<T>& c) {
        LpResult<T> res;
        std::vector<T> phase1(n_ + m_, T(0));
        for (std::size_t i = 0; i < m_; ++i) phase1[n_ + i] = T(1);
        run(phase1, n_ + m_);
        T infeas(0);
        for (std::size_t i = 0; i < m_; ++i)
            if (basis_[i] >= n_) infeas += t_[i][rhs()];
        if (sign_of(infeas, eps_) > 0) {
            res.status = LpStatus::Infeasible;
            return res;
        }
        // Drive remaining zero-level artificials out where possible.
        for (std::size_t i = 0; i < m_; ++i) {
            if (basis_[i] < n_) continue;
            for (std::size_t j = 0; j < n_; ++j)
                if (!is_zero(t_[i][j], eps_)) {
                    pivot(i, j);
                    break;
                }
        }
        std::vector<T> cost(n_ + m_, T(0));
        for (std::size_t j = 0; j < n_; ++j) cost[j] = c[j];
        if (!run(cost, n_)) {
            res.status = LpStatus::Unbounded;
            return res;
        }
        res.status = LpStatus::Optimal;
        res.x.assign(n_, T(0));
        for (std::size_t i = 0; i < m_; ++i)
            if (basis_[i] < n_) res.x[basis_[i]] = t_[i][rhs()];
        res.value = T(0);
        for (std::size_t j = 0; j < n_; ++j) res.value += c[j] * res.x[j];
        return res;
    }

private:
    std::size_t rhs() const { return n_ + m_; }

    void pivot(std::size_t row, std::size_t col) {
        T inv = T(1) / t_[row][col];
        for (auto& v : t_[row]) v *= inv;
        for (std::size_t i = 0; i < m_; ++i) {
            if (i == row || is_zero(t_[i][col])) continue;
            T f = t_[i][col];
            for (std::size_t j = 0; j <= rhs(); ++j) t_[i][j] -= f * t_[row][j];
        }
        basis_[row] = col;
    }

    /// Returns false on unboundedness. Only columns < allowed may enter.
    bool run(const std::vector<T>& cost, std::size_t allowed) {
        for (std::size_t iter = 0; iter < 100000; ++iter) {
            std::size_t enter = allowed;
            for (std::size_t j = 0; j < allowed; ++j) {
                T r = cost[j];
                for (std::size_t i = 0; i < m_; ++i) r -= cost[basis_[i]] * t_[i][j];
                if (sign_of(r, eps_) < 0) {
                    enter = j;
                    break;
                }
            }
            if (enter == allowed) return true;
            std::size_t leave = m_;
            T best(0);
            for (std::size_t i = 0; i < m_; ++i) {
                if (sign_of(t_[i][enter], eps_) <= 0) continue;
                T ratio = t_[i][rhs()] / t_[i][enter];
                if (leave == m_) {
                    leave = i;
                    best = ratio;
                    continue;
                }
                const int cmp = sign_of(T(ratio - best), eps_);
                if (cmp < 0 || (cmp == 0 && basis_[i] < basis_[leave])) {
                    leave = i;
                    best = ratio;
                }
            }
            if (leave == m_) return false;
            pivot(leave, enter);
        }
        return true;
    }

    std::size_t m_, n_;
    double eps_;
    std::vector<std::vector<T>> t_;
    std::vector<std::size_t> basis_;
};

}  // namespace detail

/// minimize c.x subject to A x = b, x >= 0.
template <Scalar T>
LpResult<T> lp_minimize(const Matrix<T>& a, const Vector<T>& b, const Vector<T>& c, double eps = 1e-10) {
    if (c.size() != a.cols()) throw Error(ErrorCode::DimensionMismatch, "lp cost length");
    detail::Simplex<T> s(a, b, eps);
    return s.minimize(c);
}

/// Is x a nonnegative combination of the given generators?
template <Scalar T>
bool conic_feasible(const std::vector<Vector<T>>& generators, const Vector<T>& x, double eps = 1e-10) {
    if (generators.empty()) {
        for (const auto& v : x)
            if (!is_zero(v, eps)) return false;
        return true;
    }
    const std::size_t d = x.size();
    Matrix<T> a(d, generators.size());
    for (std::size_t j = 0; j < generators.size(); ++j) {
        if (generators[j].size() != d) throw Error(ErrorCode::DimensionMismatch, "generator length");
        for (std::size_t i = 0; i < d; ++i) a(i, j) = generators[j][i];
    }
    Vector<T> c(generators.size(), T(0));
    return lp_minimize(a, x, c, eps).status == LpStatus::Optimal;
}

}  // namespace conemix
