#include "opkern/rkhs.hpp"

#include "opkern/error.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>

namespace opkern {

namespace {

class Fnv1a {
public:
    void update(const void* data, std::size_t size) {
        const auto* bytes = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < size; ++i) {
            state_ = (state_ ^ bytes[i]) * 0x100000001b3ULL;
        }
    }
    void update(double v) { update(&v, sizeof v); }
    std::uint64_t digest() const { return state_; }

private:
    std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::string context_digest(const OperatorKernel& k, const BlockGram& g) {
    Fnv1a h;
    const std::string canonical = k.canonical();
    h.update(canonical.data(), canonical.size());
    for (const Site& s : g.sites()) {
        for (Index c = 0; c < s.dim(); ++c) {
            h.update(s[c]);
        }
    }
    const Matrix& m = g.data();
    h.update(m.data(), static_cast<std::size_t>(m.size()) * sizeof(double));
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h.digest()));
    return buf;
}

void require_site(const RkhsContext& ctx, Index i) {
    if (i < 0 || i >= ctx.n()) {
        throw DomainError("site index " + std::to_string(i) + " out of range [0, " + std::to_string(ctx.n()) + ")");
    }
}

void require_hvec(const RkhsContext& ctx, const HVec& a) {
    if (a.size() != ctx.d()) {
        throw DimensionError("vector has length " + std::to_string(a.size()) + ", expected " +
                             std::to_string(ctx.d()));
    }
}

void require_context(const ContextPtr& expected, const RkhsElement& x) {
    if (x.context() != expected) {
        throw ContextError("element belongs to a different context");
    }
}

RkhsElement section_with(const ContextPtr& ctx, Index i, const HVec& value) {
    Vector coeffs = Vector::Zero(ctx->size());
    coeffs.segment(i * ctx->d(), ctx->d()) = value;
    return RkhsElement(ctx, std::move(coeffs));
}

}  // namespace

RkhsContext::RkhsContext(OperatorKernel k, BlockGram gram, double null_tol)
    : kernel_(std::move(k)), gram_(std::move(gram)), null_tol_(null_tol) {
    hash_ = context_digest(kernel_, gram_);
}

ContextPtr make_context_with_gram(const OperatorKernel& k, BlockGram gram, double null_tol) {
    if (!k.is_square()) {
        throw DomainError("RKHS contexts require a square kernel");
    }
    if (gram.d() != k.dim()) {
        throw DimensionError("Gram block size does not match the kernel dimension");
    }
    if (static_cast<Index>(gram.sites().size()) != gram.n()) {
        throw DimensionError("context Gram must carry its sites");
    }
    const SpectrumReport& report = psd_check(gram);
    if (!report.psd) {
        throw NumericalError("Gram matrix is not positive semi-definite (min eigenvalue " +
                             std::to_string(report.min_eig) + ")");
    }
    try {
        factorize(gram);
    } catch (const NumericalError&) {
        // Leave the factor empty; sampling reports the failure.
    }
    return ContextPtr(new RkhsContext(k, std::move(gram), null_tol));
}

ContextPtr make_context(const OperatorKernel& k, std::vector<Site> sites, double null_tol) {
    return make_context_with_gram(k, assemble_gram(k, sites), null_tol);
}

RkhsElement::RkhsElement(ContextPtr ctx, Vector coeffs) : ctx_(std::move(ctx)), coeffs_(std::move(coeffs)) {
    if (!ctx_) {
        throw ContextError("element needs a context");
    }
    if (coeffs_.size() != ctx_->size()) {
        throw DimensionError("coefficient vector has length " + std::to_string(coeffs_.size()) + ", expected " +
                             std::to_string(ctx_->size()));
    }
    if (!coeffs_.allFinite()) {
        throw DomainError("coefficients must be finite");
    }
}

RkhsElement RkhsElement::zero(ContextPtr ctx) {
    const Index size = ctx->size();
    return RkhsElement(std::move(ctx), Vector::Zero(size));
}

RkhsElement RkhsElement::section(ContextPtr ctx, Index i, Index a) {
    require_site(*ctx, i);
    if (a < 0 || a >= ctx->d()) {
        throw DimensionError("basis index out of range");
    }
    return section_with(ctx, i, HVec::Unit(ctx->d(), a));
}

double RkhsElement::norm() const { return std::sqrt(inner_product(*this, *this)); }

bool RkhsElement::equals(const RkhsElement& other) const {
    require_context(ctx_, other);
    const double gap = (*this - other).norm();
    return gap <= ctx_->null_tol() * (1.0 + norm() + other.norm());
}

RkhsElement RkhsElement::operator+(const RkhsElement& other) const {
    require_context(ctx_, other);
    return RkhsElement(ctx_, coeffs_ + other.coeffs_);
}

RkhsElement RkhsElement::operator-(const RkhsElement& other) const {
    require_context(ctx_, other);
    return RkhsElement(ctx_, coeffs_ - other.coeffs_);
}

RkhsElement operator*(double alpha, const RkhsElement& x) { return RkhsElement(x.ctx_, alpha * x.coeffs_); }

double inner_product(const RkhsElement& x, const RkhsElement& y) {
    require_context(x.context(), y);
    const double value = x.coeffs().dot(x.context()->gram_matrix() * y.coeffs());
    if (&x == &y || x.coeffs() == y.coeffs()) {
        if (value < 0.0 && value >= -1e-12) {
            return 0.0;
        }
    }
    return value;
}

double evaluate_element(const RkhsElement& x, const Site& t, const HVec& a) {
    const RkhsContext& ctx = *x.context();
    require_hvec(ctx, a);
    double total = 0.0;
    for (Index j = 0; j < ctx.n(); ++j) {
        const auto c = x.block(j);
        if (c.isZero(0.0)) {
            continue;
        }
        total += a.dot(ctx.kernel().evaluate(t, ctx.sites()[static_cast<std::size_t>(j)]) * c);
    }
    return total;
}

RkhsElement feature_embed(const ContextPtr& ctx, Index i, const HVec& a) {
    require_site(*ctx, i);
    require_hvec(*ctx, a);
    return section_with(ctx, i, a);
}

HVec feature_adjoint(const ContextPtr& ctx, Index i, const RkhsElement& x) {
    require_context(ctx, x);
    require_site(*ctx, i);
    const Index d = ctx->d();
    return ctx->gram_matrix().middleRows(i * d, d) * x.coeffs();
}

OpMatrix covariance(const ContextPtr& ctx, Index i) {
    require_site(*ctx, i);
    const Site& s = ctx->sites()[static_cast<std::size_t>(i)];
    return ctx->kernel().evaluate(s, s);
}

RkhsElement frame_projection(const ContextPtr& ctx, Index i, const RkhsElement& x) {
    return section_with(ctx, i, feature_adjoint(ctx, i, x));
}

TransformFamily::TransformFamily(ContextPtr ctx, std::vector<OpMatrix> mats)
    : ctx_(std::move(ctx)), mats_(std::move(mats)), unitary_(true) {
    if (static_cast<Index>(mats_.size()) != ctx_->n()) {
        throw DimensionError("transform family needs one matrix per context site");
    }
    const Index d = ctx_->d();
    for (const OpMatrix& b : mats_) {
        if (b.rows() != d || b.cols() != d) {
            throw DimensionError("transform matrices must be d x d");
        }
        if (!b.allFinite()) {
            throw DomainError("transform matrices must be finite");
        }
        if (max_abs(b.transpose() * b - Matrix::Identity(d, d)) > 1e-10) {
            unitary_ = false;
        }
    }
}

RkhsElement transformed_embed(const TransformFamily& fam, Index i, const HVec& a) {
    require_site(*fam.context(), i);
    require_hvec(*fam.context(), a);
    return section_with(fam.context(), i, fam[i] * a);
}

HVec transformed_adjoint(const TransformFamily& fam, Index i, const RkhsElement& x) {
    return fam[i].transpose() * feature_adjoint(fam.context(), i, x);
}

RkhsElement cross_apply(const TransformFamily& fam, Index out, Index in, const RkhsElement& x) {
    require_site(*fam.context(), out);
    return transformed_embed(fam, out, transformed_adjoint(fam, in, x));
}

RkhsElement chain_apply(const TransformFamily& fam, std::span<const Index> indices, const RkhsElement& x) {
    if (indices.empty()) {
        throw DomainError("chain_apply: index list is empty");
    }
    require_context(fam.context(), x);
    RkhsElement current = x;
    for (auto it = indices.rbegin(); it != indices.rend(); ++it) {
        current = cross_apply(fam, *it, *it, current);
    }
    return current;
}

OnbExpansion onb_expansion(const ContextPtr& ctx, double trunc_tol) {
    const SpectrumReport& spec = ctx->spectrum();
    OnbExpansion out;
    out.context = ctx;
    const double cutoff = trunc_tol * spec.lambda_max;
    for (std::size_t k = 0; k < spec.eigenvalues.size(); ++k) {
        const double lambda = spec.eigenvalues[k];
        if (!(lambda > cutoff) || !(lambda > 0.0)) {
            break;
        }
        out.basis.emplace_back(ctx, spec.eigenvectors.col(static_cast<Index>(k)) / std::sqrt(lambda));
        out.eigenvalues.push_back(lambda);
    }
    if (out.basis.empty()) {
        throw DomainError("onb_expansion: every eigenvalue falls below the truncation threshold");
    }
    return out;
}

double reconstruction_error(const OnbExpansion& expansion) {
    const RkhsContext& ctx = *expansion.context;
    const Index n = ctx.n();
    const Index d = ctx.d();
    // values(k, i*d + a) = phi_k(s_i, e_a)
    Matrix values(static_cast<Index>(expansion.basis.size()), n * d);
    for (std::size_t k = 0; k < expansion.basis.size(); ++k) {
        for (Index i = 0; i < n; ++i) {
            for (Index a = 0; a < d; ++a) {
                values(static_cast<Index>(k), i * d + a) =
                    evaluate_element(expansion.basis[k], ctx.sites()[static_cast<std::size_t>(i)], HVec::Unit(d, a));
            }
        }
    }
    const Matrix reconstructed = values.transpose() * values;
    double worst = 0.0;
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
            const Matrix exact =
                ctx.kernel().evaluate(ctx.sites()[static_cast<std::size_t>(i)], ctx.sites()[static_cast<std::size_t>(j)]);
            worst = std::max(worst, max_abs(reconstructed.block(i * d, j * d, d, d) - exact));
        }
    }
    return worst;
}

}  // namespace opkern
