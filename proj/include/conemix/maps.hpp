#pragma once

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "conemix/cones.hpp"
#include "conemix/herm_basis.hpp"
#include "conemix/linalg.hpp"
#include "conemix/matrix.hpp"

namespace conemix {

enum class Provenance { Raw, Stochastic, Kraus };

/// A real square matrix acting on the ambient space of a cone, together with
/// the unit element that defines states. Rational input keeps an exact copy
/// next to the double matrix.
class DynMap {
public:
    static DynMap raw(const Mat& m, const ConeSpec& cone, std::optional<UnitElement> unit = std::nullopt) {
        for (double v : m.data())
            if (!std::isfinite(v)) throw Error(ErrorCode::Schema, "matrix entries must be finite");
        return DynMap(m, std::nullopt, cone, std::move(unit), Provenance::Raw);
    }

    static DynMap raw(const QMat& m, const ConeSpec& cone, std::optional<UnitElement> unit = std::nullopt) {
        return DynMap(m.cast<double>(), m, cone, std::move(unit), Provenance::Raw);
    }

    std::size_t dim() const { return m_.rows(); }
    const Mat& matrix() const { return m_; }
    const std::optional<QMat>& exact() const { return exact_; }
    const ConeSpec& cone() const { return cone_; }
    const UnitElement& unit() const { return unit_; }
    Provenance provenance() const { return provenance_; }
    const std::vector<CMat>& kraus_ops() const { return kraus_; }
    /// Number of linearly independent Kraus operators (0 unless provenance is Kraus).
    std::size_t kraus_rank() const { return kraus_rank_; }

    /// Same map with the rational copy dropped, forcing every route onto floats.
    DynMap without_exact() const {
        DynMap out = *this;
        out.exact_.reset();
        out.unit_.exact.reset();
        return out;
    }

    DynMap with_unit(const UnitElement& u) const {
        return DynMap(m_, exact_, cone_, u, provenance_, kraus_, kraus_rank_);
    }

    friend DynMap from_stochastic(const QMat& w);
    friend DynMap from_stochastic(const Mat& w);
    friend DynMap from_kraus(const std::vector<CMat>& ops);
    friend DynMap adjoint(const DynMap& a);

private:
    DynMap(Mat m, std::optional<QMat> exact, ConeSpec cone, std::optional<UnitElement> unit, Provenance p,
           std::vector<CMat> kraus = {}, std::size_t kraus_rank = 0)
        : m_(std::move(m)),
          exact_(std::move(exact)),
          cone_(std::move(cone)),
          unit_(unit ? std::move(*unit) : default_unit(cone_)),
          provenance_(p),
          kraus_(std::move(kraus)),
          kraus_rank_(kraus_rank) {
        if (!m_.is_square()) throw Error(ErrorCode::DimensionMismatch, "dynamical map must be square");
        if (m_.rows() != cone_.dim()) throw Error(ErrorCode::DimensionMismatch, "map size does not match cone dimension");
        if (unit_.u.size() != cone_.dim()) throw Error(ErrorCode::InvalidUnit, "unit length does not match cone dimension");
        const bool ok = unit_.exact ? interior_dual_contains(cone_, *unit_.exact, ScalarMode::exact())
                                    : interior_dual_contains(cone_, unit_.u, ScalarMode::floating());
        if (!ok) throw Error(ErrorCode::InvalidUnit, "unit element is not in the interior of the dual cone");
    }

    Mat m_;
    std::optional<QMat> exact_;
    ConeSpec cone_;
    UnitElement unit_;
    Provenance provenance_;
    std::vector<CMat> kraus_;
    std::size_t kraus_rank_;
};

inline DynMap from_stochastic(const QMat& w) {
    if (!w.is_square()) throw Error(ErrorCode::DimensionMismatch, "transition matrix must be square");
    for (std::size_t i = 0; i < w.rows(); ++i)
        for (std::size_t j = 0; j < w.cols(); ++j)
            if (sgn(w(i, j)) < 0)
                throw Error(ErrorCode::NegativeEntry, "entry (" + std::to_string(i) + "," + std::to_string(j) + ") is negative");
    for (std::size_t j = 0; j < w.cols(); ++j) {
        Rational s(0);
        for (std::size_t i = 0; i < w.rows(); ++i) s += w(i, j);
        if (s != 1) throw Error(ErrorCode::ColumnSumViolation, "column " + std::to_string(j) + " sums to " + to_string(s));
    }
    return DynMap(w.cast<double>(), w, ConeSpec::orthant(w.rows()), std::nullopt, Provenance::Stochastic);
}

inline DynMap from_stochastic(const Mat& w) {
    if (!w.is_square()) throw Error(ErrorCode::DimensionMismatch, "transition matrix must be square");
    for (std::size_t i = 0; i < w.rows(); ++i)
        for (std::size_t j = 0; j < w.cols(); ++j) {
            if (!std::isfinite(w(i, j))) throw Error(ErrorCode::Schema, "matrix entries must be finite");
            if (w(i, j) < 0)
                throw Error(ErrorCode::NegativeEntry, "entry (" + std::to_string(i) + "," + std::to_string(j) + ") is negative");
        }
    for (std::size_t j = 0; j < w.cols(); ++j) {
        double s = 0;
        for (std::size_t i = 0; i < w.rows(); ++i) s += w(i, j);
        if (std::abs(s - 1.0) > 1e-12)
            throw Error(ErrorCode::ColumnSumViolation, "column " + std::to_string(j) + " sums to " + std::to_string(s));
    }
    return DynMap(w, std::nullopt, ConeSpec::orthant(w.rows()), std::nullopt, Provenance::Stochastic);
}

/// Real superoperator of rho -> sum_k K_k rho K_k^dagger in Hermitian-basis
/// coordinates.
inline Mat kraus_superoperator(const std::vector<CMat>& ops, const HermBasis& basis) {
    const std::size_t d = basis.dim();
    Mat m(d, d);
    for (std::size_t j = 0; j < d; ++j) {
        const CMat& bj = basis.elements()[j];
        CMat image = CMat::Zero(bj.rows(), bj.cols());
        for (const auto& k : ops) image += k * bj * k.adjoint();
        for (std::size_t i = 0; i < d; ++i) m(i, j) = (basis.elements()[i] * image).trace().real();
    }
    return m;
}

inline DynMap from_kraus(const std::vector<CMat>& ops) {
    if (ops.empty()) throw Error(ErrorCode::DimensionMismatch, "at least one Kraus operator is required");
    const auto h = ops.front().rows();
    for (const auto& k : ops)
        if (k.rows() != h || k.cols() != h) throw Error(ErrorCode::DimensionMismatch, "Kraus operators must all be h x h");
    HermBasis basis(static_cast<std::size_t>(h));
    Mat m = kraus_superoperator(ops, basis);

    Eigen::MatrixXcd stacked(h * h, static_cast<Eigen::Index>(ops.size()));
    for (std::size_t k = 0; k < ops.size(); ++k)
        stacked.col(static_cast<Eigen::Index>(k)) = Eigen::Map<const Eigen::VectorXcd>(ops[k].data(), h * h);
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(stacked);
    const auto& s = svd.singularValues();
    std::size_t n = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > 1e-10 * s(0)) ++n;

    return DynMap(m, std::nullopt, ConeSpec::psd(static_cast<std::size_t>(h)), std::nullopt, Provenance::Kraus, ops, n);
}

/// Transpose with respect to the orthonormal coordinates, acting on the dual cone.
inline DynMap adjoint(const DynMap& a) {
    std::optional<QMat> exact;
    if (a.exact_) exact = a.exact_->transpose();
    std::vector<CMat> ops;
    for (const auto& k : a.kraus_) ops.push_back(k.adjoint());
    const Provenance p = a.provenance_ == Provenance::Kraus ? Provenance::Kraus : Provenance::Raw;
    return DynMap(a.m_.transpose(), std::move(exact), dual_cone(a.cone_), std::nullopt, p, std::move(ops), a.kraus_rank_);
}

/// Dual unit preserving: A^T u = u.
inline bool is_dup(const DynMap& a) {
    if (a.exact() && a.unit().exact) return a.exact()->transpose() * *a.unit().exact == *a.unit().exact;
    Vec lhs = a.matrix().transpose() * a.unit().u;
    return norm2(sub(lhs, a.unit().u)) <= 1e-10 * (1.0 + norm2(a.unit().u));
}

struct PositivityVerdict {
    enum class Value { Yes, No, Unknown };
    Value value = Value::Unknown;
    std::string certificate;
};

inline const char* to_string(PositivityVerdict::Value v) {
    switch (v) {
        case PositivityVerdict::Value::Yes: return "yes";
        case PositivityVerdict::Value::No: return "no";
        case PositivityVerdict::Value::Unknown: return "unknown";
    }
    return "unknown";
}

/// Applies a real superoperator to a complex (not necessarily Hermitian) matrix
/// by splitting it into Hermitian and anti-Hermitian parts.
inline CMat apply_superoperator(const Mat& m, const HermBasis& basis, const CMat& x) {
    const std::complex<double> i_unit(0.0, 1.0);
    CMat h1 = (x + x.adjoint()) / 2.0;
    CMat h2 = (x - x.adjoint()) / (2.0 * i_unit);
    return basis.mat(m * basis.vec(h1)) + i_unit * basis.mat(m * basis.vec(h2));
}

inline CMat choi_matrix(const Mat& m, const HermBasis& basis) {
    const auto h = static_cast<Eigen::Index>(basis.hdim());
    CMat choi = CMat::Zero(h * h, h * h);
    for (Eigen::Index a = 0; a < h; ++a)
        for (Eigen::Index b = 0; b < h; ++b) {
            CMat e = CMat::Zero(h, h);
            e(a, b) = 1.0;
            choi.block(a * h, b * h, h, h) = apply_superoperator(m, basis, e);
        }
    return choi;
}

struct PositivityOptions {
    std::size_t samples = 512;
    std::uint64_t seed = 0x5eedULL;
};

/// K-positivity. Decided exactly for finitely generated cones; for PSD cones a
/// PSD Choi matrix certifies Yes, a sampled pure state with a negative image
/// certifies No, and anything else is Unknown.
inline PositivityVerdict is_positive(const DynMap& a, const PositivityOptions& opts = {}) {
    using V = PositivityVerdict::Value;
    const ConeSpec& cone = a.cone();
    if (cone.orthant_like()) {
        for (std::size_t i = 0; i < a.dim(); ++i)
            for (std::size_t j = 0; j < a.dim(); ++j) {
                const bool negative = a.exact() ? sgn((*a.exact())(i, j)) < 0 : a.matrix()(i, j) < 0;
                if (negative)
                    return {V::No, "negative entry at (" + std::to_string(i) + "," + std::to_string(j) + ")"};
            }
        return {V::Yes, "all entries are nonnegative"};
    }
    if (cone.finitely_generated()) {
        auto exact_gens = cone.exact_extremal();
        if (a.exact() && exact_gens) {
            for (std::size_t k = 0; k < exact_gens->size(); ++k)
                if (!contains(cone, *a.exact() * (*exact_gens)[k], ScalarMode::exact()))
                    return {V::No, "extremal generator " + std::to_string(k) + " is mapped outside the cone"};
        } else {
            auto gens = *cone.extremal();
            for (std::size_t k = 0; k < gens.size(); ++k)
                if (!contains(cone, a.matrix() * gens[k], ScalarMode::floating()))
                    return {V::No, "extremal generator " + std::to_string(k) + " is mapped outside the cone"};
        }
        return {V::Yes, "every extremal generator is mapped into the cone"};
    }
    if (cone.kind() != ConeSpec::Kind::Psd)
        return {V::Unknown, "positivity on a separable cone is not decidable here"};

    HermBasis basis(cone.hdim());
    const double scale = std::max(1.0, std::sqrt(static_cast<double>(a.dim())));
    const double choi_min = min_hermitian_eigenvalue(choi_matrix(a.matrix(), basis));
    std::ostringstream note;
    note.precision(6);
    if (choi_min >= -1e-10 * scale) {
        note << "Choi matrix is positive semidefinite (min eigenvalue " << choi_min << "), so the map is completely positive";
        return {V::Yes, note.str()};
    }

    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const auto h = static_cast<Eigen::Index>(cone.hdim());
    for (std::size_t s = 0; s < opts.samples; ++s) {
        Eigen::VectorXcd psi(h);
        for (Eigen::Index i = 0; i < h; ++i) psi(i) = std::complex<double>(gauss(rng), gauss(rng));
        psi.normalize();
        CMat rho = psi * psi.adjoint();
        const double out_min = min_hermitian_eigenvalue(basis.mat(a.matrix() * basis.vec(rho)));
        if (out_min < -1e-10 * scale) {
            note << "sampled pure state #" << s << " is mapped to a matrix with eigenvalue " << out_min;
            return {V::No, note.str()};
        }
    }
    note << "Choi matrix has eigenvalue " << choi_min << " (not completely positive); no violation among "
         << opts.samples << " sampled pure states";
    return {V::Unknown, note.str()};
}

}  // namespace conemix
