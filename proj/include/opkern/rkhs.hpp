#pragma once

#include "opkern/gram.hpp"
#include "opkern/kernels.hpp"

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace opkern {

/// Finite-span realization of the RKHS of the induced scalar kernel: the span of the sections at
/// (s_i, e_a) for the context sites, with inner product c^T G d on coefficient vectors.
///
/// Contexts are frozen at construction and shared by the elements built on them.
class RkhsContext {
public:
    const OperatorKernel& kernel() const noexcept { return kernel_; }
    const std::vector<Site>& sites() const noexcept { return gram_.sites(); }
    const BlockGram& gram() const noexcept { return gram_; }
    const Matrix& gram_matrix() const noexcept { return gram_.data(); }
    const SpectrumReport& spectrum() const { return *gram_.spectrum(); }
    Index n() const noexcept { return gram_.n(); }
    Index d() const noexcept { return gram_.d(); }
    Index size() const noexcept { return gram_.n() * gram_.d(); }
    double null_tol() const noexcept { return null_tol_; }
    /// Hex digest of the canonical kernel, the sites and the Gram entries.
    const std::string& hash() const noexcept { return hash_; }

    /// Assembles, certifies and (when possible) factorizes the Gram of (k, sites).
    /// Throws NumericalError when the Gram is not PSD.
    friend std::shared_ptr<const RkhsContext> make_context(const OperatorKernel& k, std::vector<Site> sites,
                                                           double null_tol);
    /// Builds a context around a caller-supplied Gram instead of the assembled one. Used to inject
    /// faults: the identity suite compares the Gram against fresh kernel evaluations.
    friend std::shared_ptr<const RkhsContext> make_context_with_gram(const OperatorKernel& k, BlockGram gram,
                                                                     double null_tol);

private:
    RkhsContext(OperatorKernel k, BlockGram gram, double null_tol);

    OperatorKernel kernel_;
    BlockGram gram_;
    double null_tol_;
    std::string hash_;
};

using ContextPtr = std::shared_ptr<const RkhsContext>;

ContextPtr make_context(const OperatorKernel& k, std::vector<Site> sites, double null_tol = 1e-10);
ContextPtr make_context_with_gram(const OperatorKernel& k, BlockGram gram, double null_tol = 1e-10);

/// Element of the finite span, stored as coefficients over the sections (i, a), index i*d + a.
class RkhsElement {
public:
    RkhsElement(ContextPtr ctx, Vector coeffs);
    static RkhsElement zero(ContextPtr ctx);
    /// The section at (s_i, e_a).
    static RkhsElement section(ContextPtr ctx, Index i, Index a);

    const ContextPtr& context() const noexcept { return ctx_; }
    const Vector& coeffs() const noexcept { return coeffs_; }
    auto block(Index i) const { return coeffs_.segment(i * ctx_->d(), ctx_->d()); }

    /// G * coeffs: the values of the element at every (s_i, e_a).
    Vector gram_image() const { return ctx_->gram_matrix() * coeffs_; }
    double norm() const;

    /// Equality in the RKHS, i.e. modulo the null space of G.
    bool equals(const RkhsElement& other) const;

    RkhsElement operator+(const RkhsElement& other) const;
    RkhsElement operator-(const RkhsElement& other) const;
    friend RkhsElement operator*(double alpha, const RkhsElement& x);

private:
    ContextPtr ctx_;
    Vector coeffs_;
};

/// c^T G d, clamped to 0 when x is y and roundoff makes it slightly negative.
double inner_product(const RkhsElement& x, const RkhsElement& y);

/// x(t, a) = sum_j a^T K(t, s_j) c_j, evaluated through the kernel, so t need not be a context site.
double evaluate_element(const RkhsElement& x, const Site& t, const HVec& a);

/// V_i a: the section at (s_i, a).
RkhsElement feature_embed(const ContextPtr& ctx, Index i, const HVec& a);

/// V_i^* x: block i of G c.
HVec feature_adjoint(const ContextPtr& ctx, Index i, const RkhsElement& x);

/// K(s_i, s_i), the covariance operator on H at site i.
OpMatrix covariance(const ContextPtr& ctx, Index i);

/// V_i V_i^* x: the section at (s_i, (G c)_i).
RkhsElement frame_projection(const ContextPtr& ctx, Index i, const RkhsElement& x);

/// One bounded operator B_i per context site.
class TransformFamily {
public:
    TransformFamily(ContextPtr ctx, std::vector<OpMatrix> mats);

    const ContextPtr& context() const noexcept { return ctx_; }
    const std::vector<OpMatrix>& mats() const noexcept { return mats_; }
    const OpMatrix& operator[](Index i) const { return mats_.at(static_cast<std::size_t>(i)); }
    /// True when every B_i satisfies max |B_i^T B_i - I| <= 1e-10.
    bool unitary() const noexcept { return unitary_; }

private:
    ContextPtr ctx_;
    std::vector<OpMatrix> mats_;
    bool unitary_;
};

/// W_i a: the section at (s_i, B_i a).
RkhsElement transformed_embed(const TransformFamily& fam, Index i, const HVec& a);

/// W_i^* x = B_i^T (G c)_i.
HVec transformed_adjoint(const TransformFamily& fam, Index i, const RkhsElement& x);

/// (W_{i1} W_{i1}^*) ... (W_{ik} W_{ik}^*) x, applied as literal compositions (rightmost first).
/// Throws DomainError on an empty index list.
RkhsElement chain_apply(const TransformFamily& fam, std::span<const Index> indices, const RkhsElement& x);

/// W_out W_in^* x.
RkhsElement cross_apply(const TransformFamily& fam, Index out, Index in, const RkhsElement& x);

struct OnbExpansion {
    ContextPtr context;
    /// G-orthonormal basis functions, one per retained eigenpair.
    std::vector<RkhsElement> basis;
    /// Eigenvalues of G for the retained eigenpairs, nonincreasing.
    std::vector<double> eigenvalues;
};

/// Orthonormal basis from the eigenpairs of G with lambda_k > trunc_tol * lambda_max: the k-th
/// function has coefficients u_k / sqrt(lambda_k). Throws DomainError when nothing survives.
OnbExpansion onb_expansion(const ContextPtr& ctx, double trunc_tol);

/// max over grid pairs of |sum_k phi_k(s_i, e_a) phi_k(s_j, e_b) - K(s_i, s_j)[a, b]|, with the
/// basis evaluated through the kernel and the right side freshly evaluated.
double reconstruction_error(const OnbExpansion& expansion);

}  // namespace opkern
