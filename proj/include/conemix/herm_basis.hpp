#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "conemix/matrix.hpp"

namespace conemix {

using CMat = Eigen::MatrixXcd;

/// Orthonormal real basis of the h x h Hermitian matrices under the trace
/// inner product: identity/sqrt(h), then the symmetric and antisymmetric
/// off-diagonal generalized Gell-Mann matrices, then the traceless diagonal
/// ones. Coordinates of a Hermitian X are x_i = Tr(B_i X).
class HermBasis {
public:
    explicit HermBasis(std::size_t h) : h_(h) {
        if (h == 0) throw Error(ErrorCode::InvalidCone, "Hermitian dimension must be positive");
        const auto n = static_cast<Eigen::Index>(h);
        const std::complex<double> i_unit(0.0, 1.0);
        elements_.push_back(CMat::Identity(n, n) / std::sqrt(static_cast<double>(h)));
        for (Eigen::Index j = 0; j < n; ++j)
            for (Eigen::Index k = j + 1; k < n; ++k) {
                CMat s = CMat::Zero(n, n);
                s(j, k) = s(k, j) = 1.0 / std::sqrt(2.0);
                elements_.push_back(s);
            }
        for (Eigen::Index j = 0; j < n; ++j)
            for (Eigen::Index k = j + 1; k < n; ++k) {
                CMat a = CMat::Zero(n, n);
                a(j, k) = -i_unit / std::sqrt(2.0);
                a(k, j) = i_unit / std::sqrt(2.0);
                elements_.push_back(a);
            }
        for (Eigen::Index l = 1; l < n; ++l) {
            CMat g = CMat::Zero(n, n);
            const double norm = 1.0 / std::sqrt(static_cast<double>(l * (l + 1)));
            for (Eigen::Index m = 0; m < l; ++m) g(m, m) = norm;
            g(l, l) = -static_cast<double>(l) * norm;
            elements_.push_back(g);
        }
    }

    std::size_t hdim() const { return h_; }
    std::size_t dim() const { return h_ * h_; }
    const std::vector<CMat>& elements() const { return elements_; }

    /// Coordinates Re Tr(B_i X); exact for Hermitian X.
    Vec vec(const CMat& x) const {
        Vec out(dim());
        for (std::size_t i = 0; i < dim(); ++i) out[i] = (elements_[i] * x).trace().real();
        return out;
    }

    CMat mat(const Vec& x) const {
        if (x.size() != dim()) throw Error(ErrorCode::DimensionMismatch, "Hermitian coordinate length");
        const auto n = static_cast<Eigen::Index>(h_);
        CMat out = CMat::Zero(n, n);
        for (std::size_t i = 0; i < dim(); ++i) out += x[i] * elements_[i];
        return out;
    }

private:
    std::size_t h_;
    std::vector<CMat> elements_;
};

inline double min_hermitian_eigenvalue(const CMat& x) {
    CMat sym = (x + x.adjoint()) / 2.0;
    Eigen::SelfAdjointEigenSolver<CMat> es(sym, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

}  // namespace conemix
