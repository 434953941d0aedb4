#pragma once

#include "opkern/kernel_spec.hpp"
#include "opkern/types.hpp"

#include <string>
#include <string_view>

namespace opkern {

/// Evaluable operator-valued kernel K: S x S -> B(R^d1, R^d2).
///
/// Immutable after construction and safe to evaluate from any number of threads. For square
/// kernels evaluate(s, t) == evaluate(t, s).transpose() holds exactly: the pair is always computed
/// in lexicographic site order and transposed when needed, and the diagonal block is symmetrized.
class OperatorKernel {
public:
    explicit OperatorKernel(KernelSpec spec);
    static OperatorKernel parse(std::string_view text) { return OperatorKernel(parse_kernel_spec(text)); }

    const KernelSpec& spec() const noexcept { return *spec_; }
    std::string canonical() const { return render(*spec_); }

    /// Rows of K(s, t).
    Index output_dim() const noexcept { return out_dim_; }
    /// Columns of K(s, t).
    Index input_dim() const noexcept { return in_dim_; }
    /// Block dimension d of a square kernel; throws DimensionError for twospace kernels.
    Index dim() const;
    bool is_square() const noexcept { return out_dim_ == in_dim_ && spec_->is_square(); }

    /// K(s, t). Throws DimensionError when s and t live in different R^m, DomainError when a
    /// normalized kernel meets a site with singular K(s, s).
    OpMatrix evaluate(const Site& s, const Site& t) const;

private:
    KernelSpecPtr spec_;
    Index out_dim_;
    Index in_dim_;
};

/// The scalar kernel on S x H: a^T K(s, t) b.
double induced_scalar(const OperatorKernel& k, const Site& s, const HVec& a, const Site& t, const HVec& b);

/// Squared RKHS distance between the sections at (s, a) and (t, a):
/// a^T (K(s,s) - K(s,t) - K(t,s) + K(t,t)) a, with roundoff in [-1e-12, 0) clamped to 0.
double continuity_increment(const OperatorKernel& k, const Site& s, const Site& t, const HVec& a);

struct TwoSpaceValue {
    double value = 0.0;
    double hermitian_defect = 0.0;
};

/// Diagnostic evaluation of the two-space form F((s,a,b),(t,c,d)) = b^T K(s,t) a for a twospace
/// kernel. hermitian_defect = |F((s,a,b),(t,c,d)) - F((t,c,d),(s,a,b))|. No positivity is implied.
TwoSpaceValue two_space_form(const OperatorKernel& k, const Site& s, const HVec& a, const HVec& b, const Site& t,
                             const HVec& c, const HVec& d);

}  // namespace opkern
