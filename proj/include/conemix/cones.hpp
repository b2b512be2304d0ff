#pragma once

#include <Eigen/SVD>

#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "conemix/double_description.hpp"
#include "conemix/herm_basis.hpp"
#include "conemix/linalg.hpp"
#include "conemix/lp.hpp"
#include "conemix/matrix.hpp"

namespace conemix {

template <Scalar T>
Vec as_double(const Vector<T>& x) {
    if constexpr (is_rational_v<T>)
        return to_double(x);
    else
        return x;
}

template <Scalar T>
QVec as_rational(const Vector<T>& x) {
    if constexpr (is_rational_v<T>) {
        return x;
    } else {
        QVec out(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) out[i] = Rational(x[i]);
        return out;
    }
}

inline Vec basis_vector(std::size_t d, std::size_t k) {
    Vec e(d, 0.0);
    e[k] = 1.0;
    return e;
}

/// Unit element u in the interior of the dual cone; the exact copy is kept
/// whenever the cone's data is rational.
struct UnitElement {
    Vec u;
    std::optional<QVec> exact;

    bool operator==(const UnitElement&) const = default;
};

/// Finite description of a polyhedral cone, computed once.
struct FiniteCone {
    std::vector<Vec> generators;  // as supplied
    std::optional<std::vector<QVec>> exact_generators;
    std::vector<Vec> extremal;
    std::optional<std::vector<QVec>> exact_extremal;
    std::vector<Vec> dual;  // extreme rays of the dual cone
    std::optional<std::vector<QVec>> exact_dual;
};

namespace detail {

template <Scalar T>
std::vector<Vec> to_double_all(const std::vector<Vector<T>>& v) {
    std::vector<Vec> out;
    for (const auto& x : v) out.push_back(as_double(x));
    return out;
}

inline std::vector<Vec> unit_normalized(std::vector<Vec> v) {
    for (auto& x : v) {
        double n = norm2(x);
        if (n > 0)
            for (auto& e : x) e /= n;
    }
    return v;
}

template <Scalar T>
FiniteCone build_finite_cone(const std::vector<Vector<T>>& gens) {
    if (gens.empty()) throw Error(ErrorCode::InvalidCone, "polyhedral cone needs generators");
    const std::size_t d = gens.front().size();
    if (d == 0) throw Error(ErrorCode::InvalidCone, "ambient dimension must be positive");
    for (const auto& g : gens) {
        if (g.size() != d) throw Error(ErrorCode::DimensionMismatch, "generator lengths differ");
        if constexpr (!is_rational_v<T>)
            for (double v : g)
                if (!std::isfinite(v)) throw Error(ErrorCode::InvalidCone, "non-finite generator entry");
    }
    constexpr double eps = 1e-10;

    // drop zero vectors and parallel duplicates
    std::vector<Vector<T>> rays;
    std::vector<Vector<T>> normalized;
    for (const auto& g : gens) {
        Vector<T> n = g;
        normalize_ray(n);
        bool zero = true;
        for (const auto& v : n)
            if (!is_zero(v, eps)) zero = false;
        if (zero) continue;
        bool dup = false;
        for (const auto& o : normalized)
            if (parallel_rays(o, n, eps)) dup = true;
        if (dup) continue;
        rays.push_back(g);
        normalized.push_back(std::move(n));
    }

    Matrix<T> span(rays.size(), d);
    for (std::size_t i = 0; i < rays.size(); ++i)
        for (std::size_t j = 0; j < d; ++j) span(i, j) = normalized[i][j];
    std::size_t r;
    if constexpr (is_rational_v<T>)
        r = rank(span);
    else
        r = rank(span, Tolerances{});
    if (r != d) throw Error(ErrorCode::InvalidCone, "generators do not span the ambient space (empty interior)");

    // pointedness: some c >= 0, sum c = 1, with sum c_i g_i = 0 means K meets -K
    {
        Matrix<T> a(d + 1, rays.size());
        for (std::size_t j = 0; j < rays.size(); ++j) {
            for (std::size_t i = 0; i < d; ++i) a(i, j) = normalized[j][i];
            a(d, j) = T(1);
        }
        Vector<T> b(d + 1, T(0));
        b[d] = T(1);
        Vector<T> c(rays.size(), T(0));
        if (lp_minimize(a, b, c, eps).status == LpStatus::Optimal)
            throw Error(ErrorCode::InvalidCone, "cone is not pointed (contains a line)");
    }

    std::vector<Vector<T>> extremal;
    for (std::size_t i = 0; i < rays.size(); ++i) {
        std::vector<Vector<T>> others;
        for (std::size_t j = 0; j < rays.size(); ++j)
            if (j != i) others.push_back(normalized[j]);
        if (!conic_feasible(others, normalized[i], eps)) extremal.push_back(rays[i]);
    }

    FiniteCone fc;
    fc.generators = to_double_all(gens);
    fc.extremal = to_double_all(extremal);
    auto dual = extreme_rays_of_halfspaces(extremal);
    fc.dual = to_double_all(dual);
    if constexpr (is_rational_v<T>) {
        fc.exact_generators = gens;
        fc.exact_extremal = extremal;
        fc.exact_dual = dual;
    }
    return fc;
}

}  // namespace detail

/// Closed pointed cone with nonempty interior: the nonnegative orthant, the
/// PSD cone over h x h Hermitian matrices (ambient dimension h^2), a finitely
/// generated polyhedral cone, or the minimal tensor product of two cones.
/// Immutable after construction.
class ConeSpec {
public:
    enum class Kind { Orthant, Psd, Polyhedral, Tensor };

    static ConeSpec orthant(std::size_t d) {
        if (d == 0) throw Error(ErrorCode::InvalidCone, "orthant dimension must be positive");
        ConeSpec c(Kind::Orthant, d);
        c.orthant_like_ = true;
        return c;
    }

    static ConeSpec psd(std::size_t h) {
        if (h == 0) throw Error(ErrorCode::InvalidCone, "Hermitian dimension must be positive");
        ConeSpec c(Kind::Psd, h * h);
        c.hdim_ = h;
        return c;
    }

    static ConeSpec polyhedral(const std::vector<Vec>& generators) {
        auto fc = detail::build_finite_cone(generators);
        ConeSpec c(Kind::Polyhedral, generators.front().size());
        c.finite_ = std::make_shared<const FiniteCone>(std::move(fc));
        return c;
    }

    static ConeSpec polyhedral(const std::vector<QVec>& generators) {
        auto fc = detail::build_finite_cone(generators);
        ConeSpec c(Kind::Polyhedral, generators.front().size());
        c.finite_ = std::make_shared<const FiniteCone>(std::move(fc));
        return c;
    }

    /// Minimal tensor cone: conic hull of a (x) b with a in left, b in right.
    /// With a PSD operand only product-vector queries are supported.
    static ConeSpec tensor(const ConeSpec& left, const ConeSpec& right) {
        ConeSpec c(Kind::Tensor, left.dim() * right.dim());
        c.left_ = std::make_shared<const ConeSpec>(left);
        c.right_ = std::make_shared<const ConeSpec>(right);
        if (left.orthant_like_ && right.orthant_like_) {
            c.orthant_like_ = true;
        } else if (left.finitely_generated() && right.finitely_generated()) {
            auto lq = left.exact_extremal();
            auto rq = right.exact_extremal();
            if (lq && rq) {
                std::vector<QVec> prods;
                for (const auto& a : *lq)
                    for (const auto& b : *rq) prods.push_back(kron(a, b));
                c.finite_ = std::make_shared<const FiniteCone>(detail::build_finite_cone(prods));
            } else {
                std::vector<Vec> prods;
                const auto lf = left.extremal();
                const auto rf = right.extremal();
                for (const auto& a : *lf)
                    for (const auto& b : *rf) prods.push_back(kron(a, b));
                c.finite_ = std::make_shared<const FiniteCone>(detail::build_finite_cone(prods));
            }
        }
        return c;
    }

    Kind kind() const { return kind_; }
    std::size_t dim() const { return dim_; }
    std::size_t hdim() const {
        if (kind_ != Kind::Psd) throw Error(ErrorCode::Unsupported, "hdim is defined for PSD cones only");
        return hdim_;
    }

    const ConeSpec& left() const { return require_tensor(), *left_; }
    const ConeSpec& right() const { return require_tensor(), *right_; }

    /// Orthant, or a tensor of orthants (which is again an orthant).
    bool orthant_like() const { return orthant_like_; }
    bool finitely_generated() const { return orthant_like_ || finite_ != nullptr; }
    /// Tensor cone with a PSD factor: the separable cone.
    bool separable_tensor() const { return kind_ == Kind::Tensor && !finitely_generated(); }

    const FiniteCone* finite() const { return finite_.get(); }

    /// Extremal generators, nullopt when the cone has infinitely many rays.
    std::optional<std::vector<Vec>> extremal() const {
        if (orthant_like_) {
            std::vector<Vec> e;
            for (std::size_t k = 0; k < dim_; ++k) e.push_back(basis_vector(dim_, k));
            return e;
        }
        if (finite_) return finite_->extremal;
        return std::nullopt;
    }

    std::optional<std::vector<QVec>> exact_extremal() const {
        if (orthant_like_) {
            std::vector<QVec> e;
            for (std::size_t k = 0; k < dim_; ++k) {
                QVec v(dim_, Rational(0));
                v[k] = 1;
                e.push_back(std::move(v));
            }
            return e;
        }
        if (finite_) return finite_->exact_extremal;
        return std::nullopt;
    }

    /// Extremal generators of the dual cone.
    std::optional<std::vector<Vec>> dual_extremal() const {
        if (orthant_like_) return extremal();
        if (finite_) return finite_->dual;
        return std::nullopt;
    }

    std::optional<std::vector<QVec>> exact_dual_extremal() const {
        if (orthant_like_) return exact_extremal();
        if (finite_) return finite_->exact_dual;
        return std::nullopt;
    }

    bool same_shape(const ConeSpec& o) const {
        if (kind_ != o.kind_ || dim_ != o.dim_ || hdim_ != o.hdim_) return false;
        if (kind_ == Kind::Tensor) return left_->same_shape(*o.left_) && right_->same_shape(*o.right_);
        return true;
    }

private:
    ConeSpec(Kind k, std::size_t d) : kind_(k), dim_(d) {}

    void require_tensor() const {
        if (kind_ != Kind::Tensor) throw Error(ErrorCode::Unsupported, "not a tensor cone");
    }

    Kind kind_;
    std::size_t dim_;
    std::size_t hdim_ = 0;
    bool orthant_like_ = false;
    std::shared_ptr<const FiniteCone> finite_;
    std::shared_ptr<const ConeSpec> left_, right_;
};

namespace detail {

template <Scalar T>
void check_dim(const ConeSpec& cone, const Vector<T>& x) {
    if (x.size() != cone.dim()) throw Error(ErrorCode::DimensionMismatch, "vector length does not match cone dimension");
}

/// Splits x = a (x) b when the d1 x d2 reshape has numerical rank one.
inline std::optional<std::pair<Vec, Vec>> product_factors(const Vec& x, std::size_t d1, std::size_t d2, double eps = 1e-9) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(d1), static_cast<Eigen::Index>(d2));
    for (std::size_t i = 0; i < d1; ++i)
        for (std::size_t j = 0; j < d2; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = x[i * d2 + j];
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    if (s.size() == 0 || s(0) == 0.0) return std::make_pair(Vec(d1, 0.0), Vec(d2, 0.0));
    if (s.size() > 1 && s(1) > eps * s(0)) return std::nullopt;
    const double root = std::sqrt(s(0));
    Vec a(d1), b(d2);
    for (std::size_t i = 0; i < d1; ++i) a[i] = root * svd.matrixU()(static_cast<Eigen::Index>(i), 0);
    for (std::size_t j = 0; j < d2; ++j) b[j] = root * svd.matrixV()(static_cast<Eigen::Index>(j), 0);
    return std::make_pair(a, b);
}

template <class Test>
bool product_test(const ConeSpec& cone, const Vec& x, Test&& test) {
    auto f = product_factors(x, cone.left().dim(), cone.right().dim());
    if (!f) throw Error(ErrorCode::Unsupported, "membership of non-product vectors in a separable cone is not decidable here");
    const auto& [a, b] = *f;
    if (test(cone.left(), a) && test(cone.right(), b)) return true;
    return test(cone.left(), scaled(a, -1.0)) && test(cone.right(), scaled(b, -1.0));
}

}  // namespace detail

template <Scalar T>
bool interior_contains(const ConeSpec& cone, const Vector<T>& x, const ScalarMode& mode = {});
template <Scalar T>
bool interior_dual_contains(const ConeSpec& cone, const Vector<T>& y, const ScalarMode& mode = {});

/// Cone membership; tolerances are relative to |x| so verdicts are scale invariant.
template <Scalar T>
bool contains(const ConeSpec& cone, const Vector<T>& x, const ScalarMode& mode = {}) {
    detail::check_dim(cone, x);
    const bool exact = is_rational_v<T> || mode.is_exact();
    const double eps = mode.tol.eps_interior;
    if (cone.orthant_like()) {
        const double tol = exact ? 0.0 : eps * norm2(x);
        for (const auto& v : x)
            if (to_double(v) < -tol || (exact && sign_of(v) < 0)) return false;
        return true;
    }
    if (cone.kind() == ConeSpec::Kind::Psd) {
        Vec xd = as_double(x);
        HermBasis basis(cone.hdim());
        return min_hermitian_eigenvalue(basis.mat(xd)) >= -eps * norm2(xd);
    }
    if (const FiniteCone* fc = cone.finite()) {
        if (exact && fc->exact_extremal) return conic_feasible(*fc->exact_extremal, as_rational(x));
        Vec xd = as_double(x);
        const double n = norm2(xd);
        if (n == 0.0) return true;
        xd = scaled(xd, 1.0 / n);
        return conic_feasible(detail::unit_normalized(fc->extremal), xd, std::max(eps, 1e-12));
    }
    return detail::product_test(cone, as_double(x), [&](const ConeSpec& k, const Vec& v) { return contains(k, v, mode); });
}

template <Scalar T>
bool interior_contains(const ConeSpec& cone, const Vector<T>& x, const ScalarMode& mode) {
    detail::check_dim(cone, x);
    const bool exact = is_rational_v<T> || mode.is_exact();
    const double eps = mode.tol.eps_interior;
    const double xn = norm2(x);
    if (xn == 0.0) return false;
    if (cone.orthant_like()) {
        for (const auto& v : x) {
            if (exact ? sign_of(v) <= 0 : to_double(v) <= eps * xn) return false;
        }
        return true;
    }
    if (cone.kind() == ConeSpec::Kind::Psd) {
        HermBasis basis(cone.hdim());
        return min_hermitian_eigenvalue(basis.mat(as_double(x))) > eps * xn;
    }
    if (const FiniteCone* fc = cone.finite()) {
        if (exact && fc->exact_dual) {
            QVec q = as_rational(x);
            for (const auto& y : *fc->exact_dual)
                if (sgn(dot(y, q)) <= 0) return false;
            return true;
        }
        Vec xd = as_double(x);
        for (const auto& y : fc->dual)
            if (dot(y, xd) <= eps * norm2(y) * xn) return false;
        return true;
    }
    return detail::product_test(cone, as_double(x), [&](const ConeSpec& k, const Vec& v) { return interior_contains(k, v, mode); });
}

/// Membership in the dual cone K* = {y : <y, x> >= 0 for all x in K}.
template <Scalar T>
bool dual_contains(const ConeSpec& cone, const Vector<T>& y, const ScalarMode& mode = {}) {
    detail::check_dim(cone, y);
    if (cone.orthant_like() || cone.kind() == ConeSpec::Kind::Psd) return contains(cone, y, mode);
    const bool exact = is_rational_v<T> || mode.is_exact();
    if (const FiniteCone* fc = cone.finite()) {
        if (exact && fc->exact_extremal) {
            QVec q = as_rational(y);
            for (const auto& g : *fc->exact_extremal)
                if (sgn(dot(g, q)) < 0) return false;
            return true;
        }
        Vec yd = as_double(y);
        const double yn = norm2(yd);
        for (const auto& g : fc->extremal)
            if (dot(g, yd) < -mode.tol.eps_interior * norm2(g) * yn) return false;
        return true;
    }
    return detail::product_test(cone, as_double(y), [&](const ConeSpec& k, const Vec& v) { return dual_contains(k, v, mode); });
}

/// Membership in the interior of the dual cone (valid unit elements live here).
template <Scalar T>
bool interior_dual_contains(const ConeSpec& cone, const Vector<T>& y, const ScalarMode& mode) {
    detail::check_dim(cone, y);
    if (cone.orthant_like() || cone.kind() == ConeSpec::Kind::Psd) return interior_contains(cone, y, mode);
    const bool exact = is_rational_v<T> || mode.is_exact();
    const double yn = norm2(y);
    if (yn == 0.0) return false;
    if (const FiniteCone* fc = cone.finite()) {
        if (exact && fc->exact_extremal) {
            QVec q = as_rational(y);
            for (const auto& g : *fc->exact_extremal)
                if (sgn(dot(g, q)) <= 0) return false;
            return true;
        }
        Vec yd = as_double(y);
        for (const auto& g : fc->extremal)
            if (dot(g, yd) <= mode.tol.eps_interior * norm2(g) * yn) return false;
        return true;
    }
    return detail::product_test(cone, as_double(y), [&](const ConeSpec& k, const Vec& v) { return interior_dual_contains(k, v, mode); });
}

/// Interior test for a product vector a (x) b of a tensor cone: holds exactly
/// when each factor is interior to its own cone.
template <Scalar T>
bool interior_contains_product(const ConeSpec& cone, const Vector<T>& a, const Vector<T>& b, const ScalarMode& mode = {}) {
    if (cone.kind() != ConeSpec::Kind::Tensor) throw Error(ErrorCode::Unsupported, "product test needs a tensor cone");
    auto test = [&](const Vector<T>& p, const Vector<T>& q) {
        return interior_contains(cone.left(), p, mode) && interior_contains(cone.right(), q, mode);
    };
    if (test(a, b)) return true;
    Vector<T> na = a, nb = b;
    for (auto& v : na) v = -v;
    for (auto& v : nb) v = -v;
    return test(na, nb);
}

/// Extremal generators; nullopt for cones with a continuum of extremal rays (PSD).
inline std::optional<std::vector<Vec>> extremal_generators(const ConeSpec& cone) { return cone.extremal(); }

inline UnitElement default_unit(const ConeSpec& cone) {
    switch (cone.kind()) {
        case ConeSpec::Kind::Orthant:
            return {Vec(cone.dim(), 1.0), QVec(cone.dim(), Rational(1))};
        case ConeSpec::Kind::Psd: {
            HermBasis basis(cone.hdim());
            const auto h = static_cast<Eigen::Index>(cone.hdim());
            return {basis.vec(CMat::Identity(h, h)), std::nullopt};
        }
        case ConeSpec::Kind::Polyhedral: {
            const FiniteCone* fc = cone.finite();
            UnitElement u{Vec(cone.dim(), 0.0), std::nullopt};
            for (const auto& y : fc->dual)
                for (std::size_t i = 0; i < y.size(); ++i) u.u[i] += y[i];
            if (fc->exact_dual) {
                QVec q(cone.dim(), Rational(0));
                for (const auto& y : *fc->exact_dual)
                    for (std::size_t i = 0; i < y.size(); ++i) q[i] += y[i];
                u.u = to_double(q);
                u.exact = std::move(q);
            }
            return u;
        }
        case ConeSpec::Kind::Tensor: {
            UnitElement l = default_unit(cone.left()), r = default_unit(cone.right());
            UnitElement u{kron(l.u, r.u), std::nullopt};
            if (l.exact && r.exact) u.exact = kron(*l.exact, *r.exact);
            return u;
        }
    }
    throw Error(ErrorCode::InvalidCone, "unknown cone kind");
}

/// The dual cone as a cone in its own right (used for adjoint maps).
inline ConeSpec dual_cone(const ConeSpec& cone) {
    if (cone.orthant_like() || cone.kind() == ConeSpec::Kind::Psd) return cone;
    if (const FiniteCone* fc = cone.finite()) {
        if (fc->exact_dual) return ConeSpec::polyhedral(*fc->exact_dual);
        return ConeSpec::polyhedral(fc->dual);
    }
    throw Error(ErrorCode::Unsupported, "dual of a separable cone has no finite description");
}

}  // namespace conemix
