#pragma once

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "conemix/cones.hpp"
#include "conemix/herm_basis.hpp"
#include "conemix/linalg.hpp"
#include "conemix/lp.hpp"
#include "conemix/maps.hpp"

namespace conemix {

enum class TrajectoryMode { Cesaro, Power, Decoupling };
enum class VerdictKind { Converged, Diverged, Undecided };

inline const char* to_string(TrajectoryMode m) {
    switch (m) {
        case TrajectoryMode::Cesaro: return "cesaro";
        case TrajectoryMode::Power: return "power";
        case TrajectoryMode::Decoupling: return "decouple";
    }
    return "unknown";
}

inline const char* to_string(VerdictKind k) {
    switch (k) {
        case VerdictKind::Converged: return "Converged";
        case VerdictKind::Diverged: return "Diverged";
        case VerdictKind::Undecided: return "Undecided";
    }
    return "Undecided";
}

struct TrajectoryVerdict {
    VerdictKind kind = VerdictKind::Undecided;
    Vec limit;                   // Converged: final iterate (final normalized state for decoupling)
    std::size_t at_step = 0;     // Converged: first step of the final stable run
    double growth_estimate = 0;  // Diverged: mean norm increase per step over the window
};

struct ConvergenceRule {
    std::size_t window = 10;
    double tol = 1e-10;
    double ceiling = 1e12;
};

/// iterates[i] (and distances[i] for decoupling) belongs to step first_step + i.
struct TrajectoryRecord {
    TrajectoryMode mode = TrajectoryMode::Power;
    std::size_t first_step = 0;
    std::vector<Vec> iterates;
    std::vector<double> distances;
    TrajectoryVerdict verdict;

    std::size_t last_step() const { return first_step + iterates.size() - 1; }
};

namespace detail {

inline double float_spectral_radius(const DynMap& a) {
    const double r = a.exact() ? spectral_radius(*a.exact()).value : spectral_radius(a.matrix()).value;
    double scale = 0.0;
    for (double v : a.matrix().data()) scale = std::max(scale, std::abs(v));
    if (!(r > 1e-12 * std::max(1.0, scale))) throw Error(ErrorCode::ZeroSpectralRadius, "spectral radius is zero");
    return r;
}

/// Converged when the last `window` successive differences are below
/// tol * max(1, |iterate|); Diverged on the ceiling or on strict,
/// non-decaying norm growth over the window (at least 1e-6 relative).
inline void judge_iterates(TrajectoryRecord& rec, const ConvergenceRule& rule) {
    const auto& it = rec.iterates;
    const std::size_t n = it.size();
    std::vector<double> diff(n, 0.0);
    for (std::size_t k = 1; k < n; ++k) diff[k] = norm2(sub(it[k], it[k - 1]));
    auto small = [&](std::size_t k) { return diff[k] < rule.tol * std::max(1.0, norm2(it[k])); };

    const double last_norm = norm2(it.back());
    if (!std::isfinite(last_norm) || last_norm > rule.ceiling) {
        rec.verdict.kind = VerdictKind::Diverged;
        rec.verdict.growth_estimate = n > 1 ? (last_norm - norm2(it.front())) / static_cast<double>(n - 1) : last_norm;
        return;
    }
    if (n > rule.window) {
        std::size_t start = n - 1;
        while (start >= 1 && small(start)) --start;
        // start is the last index whose difference is not small (or 0)
        if (n - 1 - start >= rule.window) {
            rec.verdict.kind = VerdictKind::Converged;
            rec.verdict.limit = it.back();
            rec.verdict.at_step = rec.first_step + start;
            return;
        }
        bool growing = true;
        for (std::size_t k = n - rule.window; k < n; ++k)
            if (!(norm2(it[k]) > norm2(it[k - 1]) * (1.0 + 1e-12))) growing = false;
        const double base = norm2(it[n - 1 - rule.window]);
        growing = growing && last_norm - base > 1e-6 * std::max(base, 1e-300);
        const double first = diff[n - rule.window], last = diff[n - 1];
        if (growing && last >= first * (1.0 - 1e-9) && last > 0.0) {
            rec.verdict.kind = VerdictKind::Diverged;
            rec.verdict.growth_estimate = (last_norm - norm2(it[n - 1 - rule.window])) / static_cast<double>(rule.window);
            return;
        }
    }
    rec.verdict.kind = VerdictKind::Undecided;
}

inline void check_length(const DynMap& a, const Vec& x) {
    if (x.size() != a.dim()) throw Error(ErrorCode::DimensionMismatch, "initial vector length does not match map dimension");
}

}  // namespace detail

/// Running averages (1/n) sum_{k<n} (A / r)^k x for n = 1..n_max.
inline TrajectoryRecord cesaro_trajectory(const DynMap& a, const Vec& x, std::size_t n_max,
                                          const ConvergenceRule& rule = {}) {
    detail::check_length(a, x);
    const double r = detail::float_spectral_radius(a);
    const Mat m = a.matrix() * (1.0 / r);
    TrajectoryRecord rec;
    rec.mode = TrajectoryMode::Cesaro;
    rec.first_step = 1;
    Vec term = x;
    Vec sum(x.size(), 0.0);
    for (std::size_t n = 1; n <= std::max<std::size_t>(n_max, 1); ++n) {
        for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += term[i];
        rec.iterates.push_back(scaled(sum, 1.0 / static_cast<double>(n)));
        if (norm2(rec.iterates.back()) > rule.ceiling) break;
        term = m * term;
    }
    detail::judge_iterates(rec, rule);
    return rec;
}

/// Normalized powers (A / r)^n x for n = 0..n_max.
inline TrajectoryRecord power_trajectory(const DynMap& a, const Vec& x, std::size_t n_max,
                                         const ConvergenceRule& rule = {}) {
    detail::check_length(a, x);
    const double r = detail::float_spectral_radius(a);
    const Mat m = a.matrix() * (1.0 / r);
    TrajectoryRecord rec;
    rec.mode = TrajectoryMode::Power;
    rec.first_step = 0;
    rec.iterates.push_back(x);
    for (std::size_t n = 1; n <= n_max; ++n) {
        rec.iterates.push_back(m * rec.iterates.back());
        if (norm2(rec.iterates.back()) > rule.ceiling) break;
    }
    detail::judge_iterates(rec, rule);
    return rec;
}

/// Operand dimensions, units and cones of a bipartite system. Vector index
/// i * d2 + j carries the (i, j) component, matching kron.
struct BipartiteLayout {
    ConeSpec k1, k2;
    UnitElement u1, u2;

    std::size_t d1() const { return k1.dim(); }
    std::size_t d2() const { return k2.dim(); }
    std::size_t dim() const { return d1() * d2(); }

    static BipartiteLayout make(const ConeSpec& k1, const ConeSpec& k2, std::optional<UnitElement> u1 = std::nullopt,
                                std::optional<UnitElement> u2 = std::nullopt) {
        BipartiteLayout l{k1, k2, u1 ? *u1 : default_unit(k1), u2 ? *u2 : default_unit(k2)};
        if (l.u1.u.size() != k1.dim() || l.u2.u.size() != k2.dim())
            throw Error(ErrorCode::InvalidUnit, "operand unit length does not match its cone");
        if (!interior_dual_contains(k1, l.u1.u, ScalarMode::floating()) ||
            !interior_dual_contains(k2, l.u2.u, ScalarMode::floating()))
            throw Error(ErrorCode::InvalidUnit, "operand unit is not in the interior of the dual cone");
        return l;
    }

    static BipartiteLayout from_tensor(const ConeSpec& cone) {
        if (cone.kind() != ConeSpec::Kind::Tensor) throw Error(ErrorCode::InvalidCone, "bipartite layout needs a tensor cone");
        return make(cone.left(), cone.right());
    }

    Vec joint_unit() const { return kron(u1.u, u2.u); }
};

/// Reduced states: pi1 = X u2 and pi2 = X^T u1 for the d1 x d2 reshape X of x.
inline std::pair<Vec, Vec> reduced_states(const Vec& x, const BipartiteLayout& layout) {
    const std::size_t d1 = layout.d1(), d2 = layout.d2();
    if (x.size() != d1 * d2) throw Error(ErrorCode::DimensionMismatch, "bipartite vector length");
    Vec p1(d1, 0.0), p2(d2, 0.0);
    for (std::size_t i = 0; i < d1; ++i)
        for (std::size_t j = 0; j < d2; ++j) {
            p1[i] += x[i * d2 + j] * layout.u2.u[j];
            p2[j] += x[i * d2 + j] * layout.u1.u[i];
        }
    return {p1, p2};
}

/// max |<y, x>| over the order interval -u <= y <= u of the dual ordering.
inline double u_norm(const Vec& x, const UnitElement& unit, const ConeSpec& cone) {
    const std::size_t d = cone.dim();
    if (x.size() != d) throw Error(ErrorCode::DimensionMismatch, "vector length does not match cone dimension");
    if (unit.u.size() != d || !interior_dual_contains(cone, unit.u, ScalarMode::floating()))
        throw Error(ErrorCode::InvalidUnit, "unit element is not in the interior of the dual cone");
    const Vec& u = unit.u;
    if (cone.orthant_like()) {
        double s = 0.0;
        for (std::size_t i = 0; i < d; ++i) s += u[i] * std::abs(x[i]);
        return s;
    }
    if (cone.kind() == ConeSpec::Kind::Psd) {
        HermBasis basis(cone.hdim());
        Eigen::SelfAdjointEigenSolver<CMat> es(basis.mat(u));
        if (es.eigenvalues().minCoeff() <= 0.0) throw Error(ErrorCode::InvalidUnit, "unit matrix is not positive definite");
        const CMat root = es.operatorSqrt();
        const CMat y = root * basis.mat(x) * root;
        Eigen::SelfAdjointEigenSolver<CMat> ys((y + y.adjoint()) / 2.0, Eigen::EigenvaluesOnly);
        return ys.eigenvalues().cwiseAbs().sum();
    }
    if (const FiniteCone* fc = cone.finite()) {
        // variables y+ (d), y- (d), s (m), t (m):  <g, y> + s = <g, u>,  -<g, y> + t = <g, u>
        const auto& gens = fc->extremal;
        const std::size_t m = gens.size();
        Mat a(2 * m, 2 * d + 2 * m);
        Vec b(2 * m), c(2 * d + 2 * m, 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            const double gu = dot(gens[i], u);
            for (std::size_t j = 0; j < d; ++j) {
                a(i, j) = gens[i][j];
                a(i, d + j) = -gens[i][j];
                a(m + i, j) = -gens[i][j];
                a(m + i, d + j) = gens[i][j];
            }
            a(i, 2 * d + i) = 1.0;
            a(m + i, 2 * d + m + i) = 1.0;
            b[i] = b[m + i] = gu;
        }
        for (std::size_t j = 0; j < d; ++j) {
            c[j] = -x[j];
            c[d + j] = x[j];
        }
        auto res = lp_minimize(a, b, c, 1e-12);
        if (res.status != LpStatus::Optimal) throw Error(ErrorCode::InvalidUnit, "order interval is unbounded");
        return std::max(0.0, -res.value);
    }
    throw Error(ErrorCode::Unsupported, "u-norm is not available for separable cones");
}

/// Distances |xi_n - pi1(xi_n) (x) pi2(xi_n)|_2 along xi_n = A^n x / <u1 (x) u2, A^n x>,
/// renormalized every step. Converged means the distance stays below tol for
/// the final window.
inline TrajectoryRecord decoupling_trace(const DynMap& a, const Vec& x, const BipartiteLayout& layout,
                                         std::size_t n_max, const ConvergenceRule& rule = {}) {
    if (layout.dim() != a.dim()) throw Error(ErrorCode::DimensionMismatch, "layout does not match map dimension");
    detail::check_length(a, x);
    const Vec u = layout.joint_unit();
    TrajectoryRecord rec;
    rec.mode = TrajectoryMode::Decoupling;
    rec.first_step = 0;
    Vec xi = x;
    for (std::size_t n = 0; n <= n_max; ++n) {
        if (n > 0) xi = a.matrix() * xi;
        const double s = dot(u, xi);
        if (!(s > 1e-12 * norm2(u) * norm2(xi)))
            throw Error(ErrorCode::NormalizationVanished,
                        "<u1 (x) u2, A^n x> vanished at step " + std::to_string(n));
        xi = scaled(xi, 1.0 / s);
        auto [p1, p2] = reduced_states(xi, layout);
        rec.distances.push_back(norm2(sub(xi, kron(p1, p2))));
        rec.iterates.push_back(xi);
    }
    const std::size_t n = rec.distances.size();
    std::size_t run = 0;
    while (run < n && rec.distances[n - 1 - run] < rule.tol) ++run;
    if (run >= std::min(rule.window, n)) {
        rec.verdict.kind = VerdictKind::Converged;
        rec.verdict.limit = rec.iterates.back();
        rec.verdict.at_step = n - run;
    } else {
        rec.verdict.kind = VerdictKind::Undecided;
    }
    return rec;
}

/// xi_N = A^N x / <u, A^N x> by repeated squaring; a direct estimate of the
/// limit state when convergence is slow.
inline Vec normalized_power(const DynMap& a, const Vec& x, const Vec& u, unsigned long long n) {
    detail::check_length(a, x);
    const double r = detail::float_spectral_radius(a);
    Vec y = mat_power(a.matrix() * (1.0 / r), n) * x;
    const double s = dot(u, y);
    if (!(s > 1e-12 * norm2(u) * norm2(y))) throw Error(ErrorCode::NormalizationVanished, "normalization vanished");
    return scaled(y, 1.0 / s);
}

}  // namespace conemix
