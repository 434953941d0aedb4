#include "opkern/kernels.hpp"

#include "opkern/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace opkern {

Site::Site(Vector coords) : coords_(std::move(coords)) {
    if (coords_.size() < 1) {
        throw DimensionError("site must have at least one coordinate");
    }
    if (!coords_.allFinite()) {
        throw DomainError("site coordinates must be finite");
    }
}

Site::Site(std::initializer_list<double> coords)
    : Site(Vector(Eigen::Map<const Vector>(coords.begin(), static_cast<Index>(coords.size())))) {}

Site Site::scalar(double x) { return Site{x}; }

int compare(const Site& a, const Site& b) {
    const Index n = std::min(a.dim(), b.dim());
    for (Index i = 0; i < n; ++i) {
        if (a[i] < b[i]) {
            return -1;
        }
        if (a[i] > b[i]) {
            return 1;
        }
    }
    if (a.dim() != b.dim()) {
        return a.dim() < b.dim() ? -1 : 1;
    }
    return 0;
}

std::vector<Site> scalar_sites(std::initializer_list<double> xs) {
    std::vector<Site> out;
    out.reserve(xs.size());
    for (double x : xs) {
        out.push_back(Site::scalar(x));
    }
    return out;
}

std::vector<Site> equispaced_grid(Interval domain, Index n) {
    if (n < 1) {
        throw DomainError("grid needs at least one point");
    }
    if (!std::isfinite(domain.lo) || !std::isfinite(domain.hi) || domain.hi < domain.lo) {
        throw DomainError("grid interval must be finite with lo <= hi");
    }
    std::vector<Site> out;
    out.reserve(static_cast<std::size_t>(n));
    const double width = domain.hi - domain.lo;
    for (Index i = 0; i < n; ++i) {
        const double frac = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
        out.push_back(Site::scalar(domain.lo + width * frac));
    }
    return out;
}

namespace {

void require_same_space(const Site& s, const Site& t) {
    if (s.dim() != t.dim()) {
        throw DimensionError("site dimension mismatch: " + std::to_string(s.dim()) + " vs " +
                             std::to_string(t.dim()));
    }
}

double squared_distance(const Site& s, const Site& t) { return (s.coords() - t.coords()).squaredNorm(); }

OpMatrix evaluate_raw(const KernelSpec& spec, const Site& s, const Site& t);

/// C(s)^{-1/2} for C(s) = K(s, s), built from a symmetric eigendecomposition.
Matrix inverse_sqrt_diagonal_block(const KernelSpec& inner, const Site& s) {
    Matrix c = evaluate_raw(inner, s, s);
    c = 0.5 * (c + c.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(c);
    if (eig.info() != Eigen::Success) {
        throw NumericalError("normalized: eigendecomposition of K(s,s) failed");
    }
    const Vector& lambda = eig.eigenvalues();
    const double lmax = lambda.maxCoeff();
    if (!(lmax > 0.0) || lambda.minCoeff() < 1e-12 * lmax) {
        throw DomainError("normalized: K(s,s) is not invertible at this site");
    }
    Matrix r = eig.eigenvectors() * lambda.cwiseSqrt().cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
    return 0.5 * (r + r.transpose());
}

OpMatrix evaluate_raw(const KernelSpec& spec, const Site& s, const Site& t) {
    return std::visit(
        [&](const auto& v) -> OpMatrix {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, GaussianSpec>) {
                const double value = v.sigma * v.sigma * std::exp(-squared_distance(s, t) / (2.0 * v.ell * v.ell));
                return value * Matrix::Identity(v.dim, v.dim);
            } else if constexpr (std::is_same_v<T, ConstantSpec>) {
                return v.value * Matrix::Identity(v.dim, v.dim);
            } else if constexpr (std::is_same_v<T, DiagExp3Spec>) {
                const double r2 = squared_distance(s, t);
                const double r = std::sqrt(r2);
                Matrix m = Matrix::Zero(3, 3);
                m(0, 0) = 1.0;
                m(1, 1) = std::exp(-r);
                m(2, 2) = std::exp(-r2);
                return m;
            } else if constexpr (std::is_same_v<T, Rational2Spec>) {
                const double r2 = squared_distance(s, t);
                const double r = std::sqrt(r2);
                const double near = 1.0 / (1.0 + r);
                const double far = 1.0 / (1.0 + r2);
                Matrix m(2, 2);
                m << near, far, far, near;
                return m;
            } else if constexpr (std::is_same_v<T, SeparableSpec>) {
                return evaluate_raw(*v.base, s, t)(0, 0) * v.coregion;
            } else if constexpr (std::is_same_v<T, NormalizedSpec>) {
                const Matrix left = inverse_sqrt_diagonal_block(*v.inner, s);
                const Matrix right = inverse_sqrt_diagonal_block(*v.inner, t);
                return left * evaluate_raw(*v.inner, s, t) * right;
            } else {
                return evaluate_raw(*v.base, s, t)(0, 0) * v.map;
            }
        },
        spec.variant);
}

void require_length(const HVec& v, Index expected, const char* what) {
    if (v.size() != expected) {
        throw DimensionError(std::string(what) + " has length " + std::to_string(v.size()) + ", expected " +
                             std::to_string(expected));
    }
}

}  // namespace

OperatorKernel::OperatorKernel(KernelSpec spec)
    : spec_(std::make_shared<const KernelSpec>(std::move(spec))) {
    validate(*spec_);
    out_dim_ = spec_->output_dim();
    in_dim_ = spec_->input_dim();
}

Index OperatorKernel::dim() const {
    if (!is_square()) {
        throw DimensionError("kernel " + canonical() + " is not square");
    }
    return out_dim_;
}

OpMatrix OperatorKernel::evaluate(const Site& s, const Site& t) const {
    require_same_space(s, t);
    if (!is_square()) {
        return evaluate_raw(*spec_, s, t);
    }
    const int order = compare(s, t);
    if (order < 0) {
        return evaluate_raw(*spec_, s, t);
    }
    if (order > 0) {
        return evaluate_raw(*spec_, t, s).transpose();
    }
    Matrix m = evaluate_raw(*spec_, s, s);
    return 0.5 * (m + m.transpose());
}

double induced_scalar(const OperatorKernel& k, const Site& s, const HVec& a, const Site& t, const HVec& b) {
    require_length(a, k.output_dim(), "a");
    require_length(b, k.input_dim(), "b");
    return a.dot(k.evaluate(s, t) * b);
}

double continuity_increment(const OperatorKernel& k, const Site& s, const Site& t, const HVec& a) {
    require_length(a, k.dim(), "a");
    if (const auto* g = std::get_if<GaussianSpec>(&k.spec().variant)) {
        // 2 sigma^2 (1 - exp(-r^2 / 2 ell^2)) |a|^2 via expm1, free of cancellation as t -> s.
        require_same_space(s, t);
        const double x = squared_distance(s, t) / (2.0 * g->ell * g->ell);
        return -2.0 * g->sigma * g->sigma * std::expm1(-x) * a.squaredNorm();
    }
    const Matrix m = k.evaluate(s, s) - k.evaluate(s, t) - k.evaluate(t, s) + k.evaluate(t, t);
    const double value = a.dot(m * a);
    if (value < 0.0 && value >= -1e-12) {
        return 0.0;
    }
    return value;
}

TwoSpaceValue two_space_form(const OperatorKernel& k, const Site& s, const HVec& a, const HVec& b, const Site& t,
                             const HVec& c, const HVec& d) {
    const auto* two = std::get_if<TwoSpaceSpec>(&k.spec().variant);
    if (two == nullptr) {
        throw DomainError("two_space_form requires a twospace kernel");
    }
    require_length(a, two->d1, "a");
    require_length(c, two->d1, "c");
    require_length(b, two->d2, "b");
    require_length(d, two->d2, "d");
    TwoSpaceValue out;
    out.value = b.dot(k.evaluate(s, t) * a);
    const double swapped = d.dot(k.evaluate(t, s) * c);
    out.hermitian_defect = std::abs(out.value - swapped);
    return out;
}

}  // namespace opkern
