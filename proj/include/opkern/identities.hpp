#pragma once

#include "opkern/rkhs.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace opkern {

inline constexpr std::uint64_t kDefaultIdentitySeed = 0x5EED;

struct IdentityResult {
    std::string name;
    double max_residual = 0.0;
    double tolerance = 0.0;
    bool pass = true;
    /// Recorded for comparison only; never affects IdentityReport::all_pass.
    bool informational = false;
};

struct IdentityReport {
    std::vector<IdentityResult> results;
    int trials = 0;
    std::uint64_t seed = 0;

    bool all_pass() const;
    /// nullptr when the identity was not run.
    const IdentityResult* find(const std::string& name) const;
    std::vector<std::string> failing() const;
};

/// Runs the operator identity suite on seeded random inputs and reports, per identity, the largest
/// residual seen. Failures are reported, never thrown; only trials < 1 throws (DomainError).
///
/// Always checked: reproducing_property, feature_norm, covariance_symmetry, covariance_psd,
/// covariance_composition, adjoint_relation, factorization_consistency, norm_bound, continuity.
/// When every K(s_i, s_i) is the identity: isometry, projection_idempotent, projection_self_adjoint.
/// With a transform family: w_norm, w_adjoint, w_composition, w_product_chain, w_chain_apply,
/// w_cross_apply, plus the informational w_projection_alt_form and w_cross_alt_form; and when the family is
/// unitary on a normalized context: w_isometry, w_projection_idempotent, w_projection_self_adjoint.
IdentityReport verify_identities(const ContextPtr& ctx, const TransformFamily* fam, int trials,
                                 std::uint64_t seed = kDefaultIdentitySeed);

/// Random B_i with standard normal entries, or random orthogonal B_i (QR of a normal matrix).
TransformFamily random_transform_family(const ContextPtr& ctx, std::uint64_t seed, bool unitary);

/// Fixed-width human-readable table of a report.
std::string format_table(const IdentityReport& report);

}  // namespace opkern
