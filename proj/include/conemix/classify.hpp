#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "conemix/cones.hpp"
#include "conemix/digraph.hpp"
#include "conemix/linalg.hpp"
#include "conemix/maps.hpp"

namespace conemix {

namespace route {
inline constexpr const char* fixed_space = "kernel-fixed-space";
inline constexpr const char* algebraic_multiplicity = "algebraic-multiplicity";
inline constexpr const char* kron_kernel = "kron-kernel";
inline constexpr const char* kron_multiplicity = "kron-geometric-multiplicity";
inline constexpr const char* spectral_gap = "spectral-gap";
inline constexpr const char* interior_eigenvectors = "interior-eigenvectors";
inline constexpr const char* power_improvement = "power-improvement";
inline constexpr const char* extremal_reachability = "extremal-reachability";
inline constexpr const char* graph_connected = "graph-strongly-connected";
inline constexpr const char* tensor_graph = "tensor-graph-strongly-connected";
inline constexpr const char* period_one = "period-one";
inline constexpr const char* tensor_square = "tensor-square-irreducible";
inline constexpr const char* wielandt = "wielandt-probe";
}  // namespace route

/// Largest map dimension whose Kronecker square is still handled in exact arithmetic.
inline constexpr std::size_t exact_kron_limit = 8;

struct RouteOutcome {
    bool verdict = false;
    bool exact = false;
    bool marginal = false;
};

struct StationaryPair {
    Vec x0, y0;
    std::optional<QVec> exact_x0, exact_y0;
    bool marginal = false;
};

/// Why no stationary pair exists, with whatever eigenvectors were found.
struct NotErgodic {
    std::string reason;
    std::size_t fixed_space_dim = 0;
    std::optional<Vec> x0, y0;
    std::optional<double> pairing;
};

namespace detail {

struct Spectral {
    SpectralRadius r;
    Mat a_hat = Mat(1, 1);  // A / r(A)
    std::optional<QMat> exact;
    std::optional<QMat> exact_hat;

    bool exact_r() const { return exact_hat.has_value(); }
};

inline double max_abs(const Mat& m) {
    double out = 0.0;
    for (double v : m.data()) out = std::max(out, std::abs(v));
    return out;
}

inline Spectral spectral(const DynMap& a) {
    Spectral s;
    s.exact = a.exact();
    const std::size_t d = a.dim();
    if (s.exact) {
        if (mat_power(*s.exact, d) == QMat(d, d)) throw Error(ErrorCode::ZeroSpectralRadius, "map is nilpotent");
        s.r = spectral_radius(*s.exact);
    } else {
        s.r = spectral_radius(a.matrix());
    }
    if (!(s.r.value > 1e-12 * std::max(1.0, max_abs(a.matrix()))))
        throw Error(ErrorCode::ZeroSpectralRadius, "spectral radius is zero");
    s.a_hat = a.matrix() * (1.0 / s.r.value);
    if (s.exact && s.r.exact) s.exact_hat = *s.exact * Rational(1 / *s.r.exact);
    return s;
}

inline ScalarMode float_mode(const Tolerances& tol) { return ScalarMode::floating(tol); }

template <Scalar T>
std::size_t argmax_abs(const Vector<T>& v) {
    std::size_t k = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (abs_of(v[i]) > abs_of(v[k])) k = i;
    return k;
}

/// Sign rule: largest-magnitude entry positive, then confirm membership;
/// fall back to the other sign; nullopt when neither sign is in the cone.
template <Scalar T, class InCone>
std::optional<Vector<T>> orient(Vector<T> v, InCone&& in_cone) {
    if (sign_of(v[argmax_abs(v)]) < 0)
        for (auto& e : v) e = -e;
    if (in_cone(v)) return v;
    for (auto& e : v) e = -e;
    if (in_cone(v)) return v;
    return std::nullopt;
}

template <class F>
bool or_unsupported(F&& f) {
    try {
        return f();
    } catch (const Error& e) {
        if (e.code() == ErrorCode::Unsupported) return true;
        throw;
    }
}

}  // namespace detail

/// Perron eigenvectors x0 in K and y0 in K* for r(A), scaled so <u, x0> = 1
/// and <y0, x0> = 1.
inline std::variant<StationaryPair, NotErgodic> stationary_pair(const DynMap& a, const Tolerances& tol = {}) {
    const detail::Spectral s = detail::spectral(a);
    const ConeSpec& cone = a.cone();

    if (s.exact_r()) {
        const QMat b = shifted(*s.exact_hat, Rational(1));
        auto kx = null_space(b);
        auto ky = null_space(b.transpose());
        if (kx.size() != 1) {
            NotErgodic ne{"eigenvalue r(A) has geometric multiplicity " + std::to_string(kx.size()), kx.size(), {}, {}, {}};
            return ne;
        }
        auto x = detail::orient(kx[0], [&](const QVec& v) {
            return detail::or_unsupported([&] { return contains(cone, v, ScalarMode::exact()); });
        });
        auto y = detail::orient(ky[0], [&](const QVec& v) {
            return detail::or_unsupported([&] { return dual_contains(cone, v, ScalarMode::exact()); });
        });
        if (!x || !y) return NotErgodic{"Perron eigenvector lies in neither sign of the cone", 1, {}, {}, {}};
        Rational ux(0);
        if (a.unit().exact)
            ux = dot(*a.unit().exact, *x);
        else
            for (const auto& v : *x) ux += abs_of(v);
        for (auto& v : *x) v /= ux;
        Rational pairing = dot(*y, *x);
        if (sgn(pairing) == 0) {
            Rational top = abs_of((*y)[detail::argmax_abs(*y)]);
            for (auto& v : *y) v /= top;
            return NotErgodic{"<y0, x0> = 0", 1, to_double(*x), to_double(*y), 0.0};
        }
        for (auto& v : *y) v /= pairing;
        return StationaryPair{to_double(*x), to_double(*y), *x, *y, false};
    }

    const Mat b = shifted(s.a_hat, 1.0);
    bool marginal = rank_is_marginal(b, tol);
    auto kx = null_space(b, tol);
    auto ky = null_space(b.transpose(), tol);
    if (kx.size() > 1 || ky.size() > 1) {
        NotErgodic ne{"eigenvalue r(A) has geometric multiplicity " + std::to_string(kx.size()), kx.size(), {}, {}, {}};
        return ne;
    }
    if (kx.empty()) {
        kx.push_back(smallest_singular_vector(b));
        marginal = true;
    }
    if (ky.empty()) {
        ky.push_back(smallest_singular_vector(b.transpose()));
        marginal = true;
    }
    const ScalarMode fm = detail::float_mode(tol);
    auto x = detail::orient(kx[0], [&](const Vec& v) {
        return detail::or_unsupported([&] { return contains(cone, v, fm); });
    });
    auto y = detail::orient(ky[0], [&](const Vec& v) {
        return detail::or_unsupported([&] { return dual_contains(cone, v, fm); });
    });
    if (!x || !y) return NotErgodic{"Perron eigenvector lies in neither sign of the cone", 1, {}, {}, {}};
    const double ux = dot(a.unit().u, *x);
    for (auto& v : *x) v /= ux;
    const double pairing = dot(*y, *x);
    if (std::abs(pairing) <= 1e-9 * norm2(*x) * norm2(*y)) {
        const double top = std::abs((*y)[detail::argmax_abs(*y)]);
        for (auto& v : *y) v /= top;
        return NotErgodic{"<y0, x0> = 0", 1, *x, *y, pairing / (norm2(*x) * top)};
    }
    for (auto& v : *y) v /= pairing;
    return StationaryPair{*x, *y, std::nullopt, std::nullopt, marginal};
}

// ---- ergodicity ----

/// dim Ker(A - I) = 1; applies to dual unit preserving maps only.
inline std::optional<RouteOutcome> ergodic_by_fixed_space(const DynMap& a, const Tolerances& tol = {}) {
    if (!is_dup(a)) return std::nullopt;
    if (a.exact()) return RouteOutcome{kernel_dim(shifted(*a.exact(), Rational(1))) == 1, true, false};
    const Mat b = shifted(a.matrix(), 1.0);
    return RouteOutcome{kernel_dim(b, detail::float_mode(tol)) == 1, false, rank_is_marginal(b, tol)};
}

/// r(A) has algebraic multiplicity 1.
inline std::optional<RouteOutcome> ergodic_by_algebraic_multiplicity(const DynMap& a, const Tolerances& tol = {}) {
    const detail::Spectral s = detail::spectral(a);
    if (s.exact_r()) {
        auto p = multiplicities(*s.exact_hat, Rational(1), ScalarMode::exact());
        return RouteOutcome{p.algebraic == 1, true, false};
    }
    auto p = multiplicities(s.a_hat, 1.0, detail::float_mode(tol));
    return RouteOutcome{p.algebraic == 1, false, p.marginal};
}

inline bool is_ergodic(const DynMap& a, const Tolerances& tol = {}) {
    if (auto r = ergodic_by_fixed_space(a, tol)) {
        detail::spectral(a);
        return r->verdict;
    }
    return ergodic_by_algebraic_multiplicity(a, tol)->verdict;
}

// ---- mixing ----

/// dim Ker(A (x) A - I) = 1; dual unit preserving maps only.
inline std::optional<RouteOutcome> mixing_by_kron_kernel(const DynMap& a, const Tolerances& tol = {}) {
    if (!is_dup(a)) return std::nullopt;
    if (a.exact() && a.dim() <= exact_kron_limit)
        return RouteOutcome{kernel_dim(shifted(kron(*a.exact(), *a.exact()), Rational(1))) == 1, true, false};
    const Mat b = shifted(kron(a.matrix(), a.matrix()), 1.0);
    return RouteOutcome{kernel_dim(b, detail::float_mode(tol)) == 1, false, rank_is_marginal(b, tol)};
}

/// r(A)^2 has geometric multiplicity 1 as an eigenvalue of A (x) A.
inline std::optional<RouteOutcome> mixing_by_kron_multiplicity(const DynMap& a, const Tolerances& tol = {}) {
    const detail::Spectral s = detail::spectral(a);
    if (s.exact_r() && a.dim() <= exact_kron_limit) {
        const QMat k = kron(*s.exact_hat, *s.exact_hat);
        return RouteOutcome{kernel_dim(shifted(k, Rational(1))) == 1, true, false};
    }
    auto p = multiplicities(kron(s.a_hat, s.a_hat), 1.0, detail::float_mode(tol));
    return RouteOutcome{p.geometric == 1, false, p.marginal};
}

/// Spectral condition: r(A) simple and every other eigenvalue strictly
/// inside the disc of radius r(A). Always floating point.
inline std::optional<RouteOutcome> mixing_by_spectral_gap(const DynMap& a, const Tolerances& tol = {}) {
    const detail::Spectral s = detail::spectral(a);
    const double eps = tol.eps_cluster;
    std::size_t at_one = 0;
    bool gap = true;
    bool marginal = false;
    for (const auto& ev : eigenvalues(s.a_hat)) {
        const double dist = std::abs(ev - Complex(1.0, 0.0));
        if (dist <= eps) {
            ++at_one;
        } else if (std::abs(ev) >= 1.0 - eps) {
            gap = false;
        }
        const double inside = 1.0 - std::abs(ev);
        if ((dist > eps / 10 && dist < eps * 10) || (dist > eps && inside > eps / 10 && inside < eps * 10))
            marginal = true;
    }
    return RouteOutcome{gap && at_one == 1, false, marginal};
}

inline bool is_mixing(const DynMap& a, const Tolerances& tol = {}) {
    if (auto r = mixing_by_kron_kernel(a, tol)) {
        detail::spectral(a);
        return r->verdict;
    }
    return mixing_by_kron_multiplicity(a, tol)->verdict;
}

// ---- irreducibility ----

namespace detail {

inline bool interior_pair(const DynMap& a, const StationaryPair& p, const Tolerances& tol) {
    if (p.exact_x0 && p.exact_y0)
        return interior_contains(a.cone(), *p.exact_x0, ScalarMode::exact()) &&
               interior_dual_contains(a.cone(), *p.exact_y0, ScalarMode::exact());
    const ScalarMode fm = float_mode(tol);
    return interior_contains(a.cone(), p.x0, fm) && interior_dual_contains(a.cone(), p.y0, fm);
}

}  // namespace detail

/// Ergodic with x0 in the interior of K and y0 in the interior of K*.
inline std::optional<RouteOutcome> irreducible_by_interior_eigenvectors(const DynMap& a, const Tolerances& tol = {}) {
    auto sp = stationary_pair(a, tol);
    const bool exact = detail::spectral(a).exact_r();
    if (std::holds_alternative<NotErgodic>(sp)) return RouteOutcome{false, exact, false};
    const auto& p = std::get<StationaryPair>(sp);
    try {
        return RouteOutcome{detail::interior_pair(a, p, tol), exact, p.marginal};
    } catch (const Error& e) {
        if (e.code() == ErrorCode::Unsupported) return std::nullopt;
        throw;
    }
}

/// (I + A)^(d-1) g in the interior of K for every extremal generator g.
inline std::optional<RouteOutcome> irreducible_by_power_improvement(const DynMap& a, const Tolerances& tol = {}) {
    const ConeSpec& cone = a.cone();
    if (!cone.finitely_generated()) return std::nullopt;
    const std::size_t d = a.dim();
    auto exact_gens = cone.exact_extremal();
    if (a.exact() && exact_gens) {
        const QMat m = mat_power(*a.exact() + QMat::identity(d), d - 1);
        for (const auto& g : *exact_gens)
            if (!interior_contains(cone, m * g, ScalarMode::exact())) return RouteOutcome{false, true, false};
        return RouteOutcome{true, true, false};
    }
    const detail::Spectral s = detail::spectral(a);
    const Mat m = mat_power(s.a_hat + Mat::identity(d), d - 1);
    const auto gens = cone.extremal();
    for (const auto& g : *gens)
        if (!interior_contains(cone, m * g, detail::float_mode(tol))) return RouteOutcome{false, false, false};
    return RouteOutcome{true, false, false};
}

/// For all extremal g of K and h of K*, some n <= d-1 has <h, A^n g> > 0.
inline std::optional<RouteOutcome> irreducible_by_extremal_reachability(const DynMap& a, const Tolerances& tol = {}) {
    const ConeSpec& cone = a.cone();
    if (!cone.finitely_generated()) return std::nullopt;
    const std::size_t d = a.dim();
    auto exact_gens = cone.exact_extremal();
    auto exact_dual = cone.exact_dual_extremal();
    if (a.exact() && exact_gens && exact_dual) {
        for (const auto& g : *exact_gens) {
            std::vector<QVec> orbit{g};
            for (std::size_t n = 1; n < d; ++n) orbit.push_back(*a.exact() * orbit.back());
            for (const auto& h : *exact_dual) {
                bool reached = false;
                for (const auto& v : orbit)
                    if (sgn(dot(h, v)) > 0) {
                        reached = true;
                        break;
                    }
                if (!reached) return RouteOutcome{false, true, false};
            }
        }
        return RouteOutcome{true, true, false};
    }
    const detail::Spectral s = detail::spectral(a);
    const auto dual = *cone.dual_extremal();
    const auto gens = cone.extremal();
    for (const auto& g : *gens) {
        std::vector<Vec> orbit{g};
        for (std::size_t n = 1; n < d; ++n) orbit.push_back(s.a_hat * orbit.back());
        for (const auto& h : dual) {
            bool reached = false;
            for (const auto& v : orbit)
                if (dot(h, v) > tol.eps_interior * norm2(h) * norm2(v)) {
                    reached = true;
                    break;
                }
            if (!reached) return RouteOutcome{false, false, false};
        }
    }
    return RouteOutcome{true, false, false};
}

inline Digraph map_digraph(const DynMap& a) {
    return a.exact() ? Digraph::from_matrix(*a.exact()) : Digraph::from_matrix(a.matrix());
}

/// Orthant maps: the transition digraph is strongly connected.
inline std::optional<RouteOutcome> irreducible_by_graph(const DynMap& a, const Tolerances& = {}) {
    if (!a.cone().orthant_like()) return std::nullopt;
    return RouteOutcome{strongly_connected(map_digraph(a)), true, false};
}

inline bool is_irreducible(const DynMap& a, const Tolerances& tol = {}) {
    detail::spectral(a);
    if (auto r = irreducible_by_graph(a, tol)) return r->verdict;
    if (auto r = irreducible_by_power_improvement(a, tol)) return r->verdict;
    auto r = irreducible_by_interior_eigenvectors(a, tol);
    if (!r) throw Error(ErrorCode::Unsupported, "no irreducibility test applies to this cone");
    return r->verdict;
}

// ---- primitivity ----

/// Mixing with x0 and y0 interior.
inline std::optional<RouteOutcome> primitive_by_interior_eigenvectors(const DynMap& a, const Tolerances& tol = {}) {
    const bool mixing = is_mixing(a, tol);
    auto sp = stationary_pair(a, tol);
    const bool exact = detail::spectral(a).exact_r() && a.dim() <= exact_kron_limit;
    if (!mixing || std::holds_alternative<NotErgodic>(sp)) return RouteOutcome{false, exact, false};
    const auto& p = std::get<StationaryPair>(sp);
    try {
        return RouteOutcome{detail::interior_pair(a, p, tol), exact, p.marginal};
    } catch (const Error& e) {
        if (e.code() == ErrorCode::Unsupported) return std::nullopt;
        throw;
    }
}

/// Orthant maps: the digraph of W (x) W is strongly connected.
inline std::optional<RouteOutcome> primitive_by_tensor_graph(const DynMap& a, const Tolerances& = {}) {
    if (!a.cone().orthant_like()) return std::nullopt;
    const Digraph g = map_digraph(a);
    return RouteOutcome{strongly_connected(tensor_product(g, g)), true, false};
}

/// Orthant maps: strongly connected with period one.
inline std::optional<RouteOutcome> primitive_by_period(const DynMap& a, const Tolerances& = {}) {
    if (!a.cone().orthant_like()) return std::nullopt;
    const Digraph g = map_digraph(a);
    return RouteOutcome{strongly_connected(g) && period(g) == 1, true, false};
}

/// Non-orthant polyhedral maps: A (x) A is irreducible on the minimal tensor
/// cone, tested by power improvement. Limited to small cones.
inline std::optional<RouteOutcome> primitive_by_tensor_square(const DynMap& a, const Tolerances& tol = {}) {
    const ConeSpec& cone = a.cone();
    if (cone.orthant_like() || !cone.finitely_generated() || a.dim() > 4) return std::nullopt;
    if (cone.extremal()->size() > 6) return std::nullopt;
    const ConeSpec square = ConeSpec::tensor(cone, cone);
    const DynMap t = a.exact() ? DynMap::raw(kron(*a.exact(), *a.exact()), square)
                               : DynMap::raw(kron(a.matrix(), a.matrix()), square);
    return irreducible_by_power_improvement(t, tol);
}

inline bool is_primitive(const DynMap& a, const Tolerances& tol = {}) {
    detail::spectral(a);
    if (auto r = primitive_by_tensor_graph(a, tol)) return r->verdict;
    auto r = primitive_by_interior_eigenvectors(a, tol);
    if (!r) throw Error(ErrorCode::Unsupported, "no primitivity test applies to this cone");
    return r->verdict;
}

// ---- power probe ----

struct WielandtProbe {
    std::size_t cap = 0;
    /// Smallest n with A^n mapping K \ {0} into the interior of K, if found within the cap.
    std::optional<std::size_t> index;
};

namespace detail {

inline std::size_t word_span_dim(std::vector<Eigen::VectorXcd>& basis, const Eigen::VectorXcd& candidate) {
    Eigen::VectorXcd v = candidate;
    for (const auto& b : basis) v -= b.dot(v) * b;
    const double n = v.norm();
    if (n > 1e-10 * std::max(1.0, candidate.norm())) basis.push_back(v / n);
    return basis.size();
}

}  // namespace detail

/// Iterates powers until strictly positive. Orthant: entrywise positivity of
/// the power pattern, capped at (d-1)^2 + 1. Kraus maps: span of Kraus words of
/// length n equals the full matrix algebra, capped at h^2 (h^2 - N + 1).
inline std::optional<WielandtProbe> wielandt_probe(const DynMap& a) {
    if (a.cone().orthant_like()) {
        const std::size_t d = a.dim();
        WielandtProbe out;
        out.cap = (d - 1) * (d - 1) + 1;
        const Digraph g = map_digraph(a);
        std::vector<std::vector<bool>> reach(d, std::vector<bool>(d, false));
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j : g.successors(i)) reach[i][j] = true;
        for (std::size_t n = 1; n <= out.cap; ++n) {
            bool all = true;
            for (std::size_t i = 0; i < d && all; ++i)
                for (std::size_t j = 0; j < d && all; ++j) all = reach[i][j];
            if (all) {
                out.index = n;
                return out;
            }
            std::vector<std::vector<bool>> next(d, std::vector<bool>(d, false));
            for (std::size_t i = 0; i < d; ++i)
                for (std::size_t k = 0; k < d; ++k)
                    if (reach[i][k])
                        for (std::size_t j : g.successors(k)) next[i][j] = true;
            reach = std::move(next);
        }
        return out;
    }
    if (a.provenance() == Provenance::Kraus) {
        const auto& ops = a.kraus_ops();
        const std::size_t h = a.cone().hdim();
        const std::size_t full = h * h;
        WielandtProbe out;
        out.cap = full * (full - a.kraus_rank() + 1);
        const auto len = static_cast<Eigen::Index>(full);
        std::vector<CMat> words;
        {
            std::vector<Eigen::VectorXcd> basis;
            for (const auto& k : ops)
                if (detail::word_span_dim(basis, Eigen::Map<const Eigen::VectorXcd>(k.data(), len)) > words.size())
                    words.push_back(k);
        }
        for (std::size_t n = 1; n <= out.cap; ++n) {
            if (words.size() == full) {
                out.index = n;
                return out;
            }
            std::vector<Eigen::VectorXcd> basis;
            std::vector<CMat> next;
            for (const auto& k : ops)
                for (const auto& w : words) {
                    CMat p = k * w;
                    if (detail::word_span_dim(basis, Eigen::Map<const Eigen::VectorXcd>(p.data(), len)) > next.size())
                        next.push_back(std::move(p));
                }
            words = std::move(next);
        }
        return out;
    }
    return std::nullopt;
}

// ---- full report ----

struct RouteRecord {
    std::string property;
    std::string route;
    bool verdict = false;
    bool exact = false;
    bool marginal = false;
    bool decisive = false;

    bool operator==(const RouteRecord&) const = default;
};

struct ClassificationReport {
    double r = 0.0;
    std::optional<Rational> r_exact;
    bool exact = false;
    bool ergodic = false;
    bool mixing = false;
    bool irreducible = false;
    bool primitive = false;
    std::optional<Vec> stationary;
    std::optional<Vec> dual_stationary;
    std::optional<QVec> stationary_exact;
    std::optional<QVec> dual_stationary_exact;
    std::optional<double> pairing;
    std::optional<std::size_t> fixed_space_dim;
    MultiplicityPair multiplicity_r;
    MultiplicityPair multiplicity_r2_kron;
    std::vector<RouteRecord> routes;
    std::vector<std::string> criteria_fired;
    std::vector<std::string> hypothesis_flags;
    PositivityVerdict positivity;
    bool dup = false;
    std::optional<bool> graph_strongly_connected;
    std::optional<std::size_t> graph_period;
    std::optional<std::size_t> primitivity_index;
    std::optional<std::size_t> primitivity_cap;
};

struct ClassifyOptions {
    Tolerances tol;
    PositivityOptions positivity;
};

namespace detail {

using RouteFn = std::function<std::optional<RouteOutcome>(const DynMap&, const Tolerances&)>;

struct RouteSpec {
    const char* name;
    RouteFn fn;
};

/// Runs the routes in priority order; the first applicable one decides.
inline bool decide(ClassificationReport& rep, const DynMap& a, const Tolerances& tol, const char* property,
                   const std::vector<RouteSpec>& specs) {
    std::optional<bool> verdict;
    bool any_float = false;
    std::vector<std::string> seen;
    for (const auto& s : specs) {
        std::optional<RouteOutcome> out;
        try {
            out = s.fn(a, tol);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::Unsupported) throw;
            rep.hypothesis_flags.push_back(std::string(property) + "/" + s.name + " skipped: " + e.what());
        }
        if (!out) continue;
        RouteRecord rec{property, s.name, out->verdict, out->exact, out->marginal, !verdict.has_value()};
        if (!verdict) {
            verdict = out->verdict;
            rep.criteria_fired.push_back(std::string(property) + "/" + s.name);
        }
        any_float = any_float || !out->exact;
        if (out->marginal) rep.hypothesis_flags.push_back("tolerance-marginal: " + std::string(property) + "/" + s.name);
        seen.push_back(std::string(s.name) + "=" + (out->verdict ? "true" : "false"));
        rep.routes.push_back(rec);
    }
    bool disagree = false;
    for (const auto& r : rep.routes)
        if (r.property == property && r.verdict != *verdict) disagree = true;
    if (disagree) {
        std::string msg = std::string(any_float ? "tolerance-marginal: " : "") + "routes disagree on " + property + ":";
        for (const auto& s : seen) msg += " " + s;
        rep.hypothesis_flags.push_back(msg);
    }
    return verdict.value_or(false);
}

}  // namespace detail

/// Runs every applicable route, cross-checks them, and fills the report.
inline ClassificationReport classify(const DynMap& a, const ClassifyOptions& opts = {}) {
    ClassificationReport rep;
    const Tolerances& tol = opts.tol;
    rep.positivity = is_positive(a, opts.positivity);
    rep.dup = is_dup(a);
    if (rep.positivity.value == PositivityVerdict::Value::No)
        rep.hypothesis_flags.push_back("map is not positive on the cone: " + rep.positivity.certificate);
    else if (rep.positivity.value == PositivityVerdict::Value::Unknown)
        rep.hypothesis_flags.push_back("positivity undecided: " + rep.positivity.certificate);
    if (!rep.dup) rep.hypothesis_flags.push_back("map is not dual unit preserving; general spectral routes used");

    if (a.cone().orthant_like()) {
        const Digraph g = map_digraph(a);
        rep.graph_strongly_connected = strongly_connected(g);
        if (*rep.graph_strongly_connected) rep.graph_period = period(g);
    }

    detail::Spectral s;
    try {
        s = detail::spectral(a);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::ZeroSpectralRadius) throw;
        rep.hypothesis_flags.push_back("spectral radius is zero; no property can hold");
        return rep;
    }
    rep.r = s.r.value;
    rep.r_exact = s.r.exact;
    rep.exact = s.exact_r();

    if (s.exact_r()) {
        rep.multiplicity_r = multiplicities(*s.exact_hat, Rational(1), ScalarMode::exact());
        if (a.dim() <= exact_kron_limit)
            rep.multiplicity_r2_kron = multiplicities(kron(*s.exact_hat, *s.exact_hat), Rational(1), ScalarMode::exact());
        else
            rep.multiplicity_r2_kron = multiplicities(kron(s.a_hat, s.a_hat), 1.0, ScalarMode::floating(tol));
    } else {
        rep.multiplicity_r = multiplicities(s.a_hat, 1.0, ScalarMode::floating(tol));
        rep.multiplicity_r2_kron = multiplicities(kron(s.a_hat, s.a_hat), 1.0, ScalarMode::floating(tol));
    }
    rep.fixed_space_dim = rep.multiplicity_r.geometric;
    if (rep.multiplicity_r.marginal) rep.hypothesis_flags.push_back("tolerance-marginal: multiplicity of r(A)");
    if (rep.multiplicity_r2_kron.marginal) rep.hypothesis_flags.push_back("tolerance-marginal: multiplicity of r(A)^2 in A (x) A");

    auto sp = stationary_pair(a, tol);
    if (auto* p = std::get_if<StationaryPair>(&sp)) {
        rep.stationary = p->x0;
        rep.dual_stationary = p->y0;
        rep.stationary_exact = p->exact_x0;
        rep.dual_stationary_exact = p->exact_y0;
        rep.pairing = 1.0;
    } else {
        const auto& ne = std::get<NotErgodic>(sp);
        rep.stationary = ne.x0;
        rep.dual_stationary = ne.y0;
        rep.pairing = ne.pairing;
        rep.hypothesis_flags.push_back("no stationary pair: " + ne.reason);
    }

    using detail::RouteSpec;
    rep.ergodic = detail::decide(rep, a, tol, "ergodic",
                                 {{route::fixed_space, ergodic_by_fixed_space},
                                  {route::algebraic_multiplicity, ergodic_by_algebraic_multiplicity}});
    rep.mixing = detail::decide(rep, a, tol, "mixing",
                                {{route::kron_kernel, mixing_by_kron_kernel},
                                 {route::kron_multiplicity, mixing_by_kron_multiplicity},
                                 {route::spectral_gap, mixing_by_spectral_gap}});
    rep.irreducible = detail::decide(rep, a, tol, "irreducible",
                                     {{route::graph_connected, irreducible_by_graph},
                                      {route::power_improvement, irreducible_by_power_improvement},
                                      {route::extremal_reachability, irreducible_by_extremal_reachability},
                                      {route::interior_eigenvectors, irreducible_by_interior_eigenvectors}});
    rep.primitive = detail::decide(rep, a, tol, "primitive",
                                   {{route::tensor_graph, primitive_by_tensor_graph},
                                    {route::period_one, primitive_by_period},
                                    {route::tensor_square, primitive_by_tensor_square},
                                    {route::interior_eigenvectors, primitive_by_interior_eigenvectors}});

    if (auto probe = wielandt_probe(a)) {
        rep.primitivity_cap = probe->cap;
        rep.primitivity_index = probe->index;
        const bool found = probe->index.has_value();
        rep.routes.push_back({"primitive", route::wielandt, found, a.cone().orthant_like(), false, false});
        if (found != rep.primitive)
            rep.hypothesis_flags.push_back(std::string("routes disagree on primitive: ") + route::wielandt + "=" +
                                           (found ? "true" : "false"));
        if (!found) rep.hypothesis_flags.push_back("not primitive by bound: no strictly positive power up to " +
                                                   std::to_string(probe->cap));
    }

    if (std::holds_alternative<StationaryPair>(sp) != rep.ergodic)
        rep.hypothesis_flags.push_back("stationary pair existence disagrees with the ergodicity verdict");

    if (rep.mixing && !rep.ergodic) {
        rep.hypothesis_flags.push_back("implication lattice: mixing without ergodicity; mixing withdrawn");
        rep.mixing = false;
    }
    if (rep.irreducible && !rep.ergodic) {
        rep.hypothesis_flags.push_back("implication lattice: irreducible without ergodicity; irreducible withdrawn");
        rep.irreducible = false;
    }
    if (rep.primitive && !(rep.mixing && rep.irreducible)) {
        rep.hypothesis_flags.push_back("implication lattice: primitive without mixing and irreducibility; primitive withdrawn");
        rep.primitive = false;
    }

    if (!rep.dup && rep.dual_stationary && rep.ergodic) {
        bool interior = false;
        try {
            interior = rep.dual_stationary_exact
                           ? interior_dual_contains(a.cone(), *rep.dual_stationary_exact, ScalarMode::exact())
                           : interior_dual_contains(a.cone(), *rep.dual_stationary, ScalarMode::floating(tol));
        } catch (const Error& e) {
            if (e.code() != ErrorCode::Unsupported) throw;
        }
        if (!interior)
            rep.hypothesis_flags.push_back("dual stationary vector is not interior to the dual cone; decoupling hypothesis fails");
    }
    return rep;
}

}  // namespace conemix
