#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "conemix/linalg.hpp"
#include "conemix/matrix.hpp"

namespace conemix {

namespace detail {

template <Scalar T>
void normalize_ray(Vector<T>& r) {
    if constexpr (is_rational_v<T>) {
        Rational s(0);
        for (const auto& v : r) s += abs_of(v);
        if (sgn(s) != 0)
            for (auto& v : r) v /= s;
    } else {
        double n = norm2(r);
        if (n > 0)
            for (auto& v : r) v /= n;
    }
}

template <Scalar T>
bool parallel_rays(const Vector<T>& a, const Vector<T>& b, double eps) {
    // both normalized the same way, so parallel rays coincide
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!is_zero(T(a[i] - b[i]), eps)) return false;
    return true;
}

}  // namespace detail

/// Extreme rays of the polyhedral cone {y : <a_i, y> >= 0 for all i} by the
/// double description method. The constraint vectors must span the space, so
/// the cone is pointed. Rays are normalized (unit L1 for rationals, unit L2
/// for doubles).
template <Scalar T>
std::vector<Vector<T>> extreme_rays_of_halfspaces(const std::vector<Vector<T>>& constraints, double eps = 1e-9) {
    if (constraints.empty()) throw Error(ErrorCode::InvalidCone, "no constraints");
    const std::size_t d = constraints.front().size();
    const std::size_t n = constraints.size();

    // Pick d linearly independent constraints greedily.
    std::vector<std::size_t> chosen;
    for (std::size_t i = 0; i < n && chosen.size() < d; ++i) {
        Matrix<T> trial(chosen.size() + 1, d);
        for (std::size_t k = 0; k < chosen.size(); ++k)
            for (std::size_t j = 0; j < d; ++j) trial(k, j) = constraints[chosen[k]][j];
        for (std::size_t j = 0; j < d; ++j) trial(chosen.size(), j) = constraints[i][j];
        std::size_t r;
        if constexpr (is_rational_v<T>)
            r = rank(trial);
        else
            r = rank(trial, Tolerances{});
        if (r == chosen.size() + 1) chosen.push_back(i);
    }
    if (chosen.size() < d) throw Error(ErrorCode::InvalidCone, "constraint vectors do not span the space");

    Matrix<T> basis(d, d);
    for (std::size_t k = 0; k < d; ++k)
        for (std::size_t j = 0; j < d; ++j) basis(k, j) = constraints[chosen[k]][j];
    auto inv = inverse(basis);
    if (!inv) throw Error(ErrorCode::InvalidCone, "degenerate constraint basis");

    struct Ray {
        Vector<T> v;
        std::vector<bool> zeros;  // indexed by constraint
    };
    std::vector<Ray> rays;
    for (std::size_t k = 0; k < d; ++k) {
        Ray r{inv->column(k), std::vector<bool>(n, false)};
        for (std::size_t kk = 0; kk < d; ++kk)
            if (kk != k) r.zeros[chosen[kk]] = true;
        detail::normalize_ray(r.v);
        rays.push_back(std::move(r));
    }

    std::vector<bool> processed(n, false);
    for (auto c : chosen) processed[c] = true;

    for (std::size_t ci = 0; ci < n; ++ci) {
        if (processed[ci]) continue;
        const auto& a = constraints[ci];
        const double scale = std::max(1e-300, norm2(a));
        std::vector<T> s(rays.size());
        std::vector<int> sg(rays.size());
        for (std::size_t k = 0; k < rays.size(); ++k) {
            s[k] = dot(a, rays[k].v);
            sg[k] = sign_of(s[k], eps * scale);
        }
        std::vector<Ray> next;
        for (std::size_t k = 0; k < rays.size(); ++k) {
            if (sg[k] >= 0) {
                Ray r = rays[k];
                r.zeros[ci] = (sg[k] == 0);
                next.push_back(std::move(r));
            }
        }
        for (std::size_t p = 0; p < rays.size(); ++p) {
            if (sg[p] <= 0) continue;
            for (std::size_t q = 0; q < rays.size(); ++q) {
                if (sg[q] >= 0) continue;
                // combinatorial adjacency test
                std::vector<bool> common(n, false);
                std::size_t count = 0;
                for (std::size_t i = 0; i < n; ++i)
                    if (processed[i] && rays[p].zeros[i] && rays[q].zeros[i]) {
                        common[i] = true;
                        ++count;
                    }
                if (count + 2 < d) continue;
                bool adjacent = true;
                for (std::size_t o = 0; o < rays.size() && adjacent; ++o) {
                    if (o == p || o == q) continue;
                    bool contains_all = true;
                    for (std::size_t i = 0; i < n && contains_all; ++i)
                        if (common[i] && !rays[o].zeros[i]) contains_all = false;
                    if (contains_all) adjacent = false;
                }
                if (!adjacent) continue;
                Ray r;
                r.v.resize(d);
                for (std::size_t j = 0; j < d; ++j) r.v[j] = s[p] * rays[q].v[j] - s[q] * rays[p].v[j];
                detail::normalize_ray(r.v);
                r.zeros = common;
                r.zeros[ci] = true;
                next.push_back(std::move(r));
            }
        }
        processed[ci] = true;
        rays = std::move(next);
    }

    std::vector<Vector<T>> out;
    for (auto& r : rays) {
        bool dup = false;
        for (const auto& o : out)
            if (detail::parallel_rays(o, r.v, eps)) dup = true;
        if (!dup) out.push_back(std::move(r.v));
    }
    return out;
}

}  // namespace conemix
