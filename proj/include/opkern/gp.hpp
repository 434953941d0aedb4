#pragma once

#include "opkern/rkhs.hpp"

#include <cstdint>

namespace opkern {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// N draws of the centered Gaussian process with cross-covariances K(s_i, s_j) (plus the recorded
/// jitter on the diagonal) at the context sites. Row p holds path p; column i*d + a is the
/// component a of the process value at site i.
struct SampleBatch {
    ContextPtr context;
    std::uint64_t seed = 0;
    Index count = 0;
    RowMatrix paths;

    Index n() const { return context->n(); }
    Index d() const { return context->d(); }
};

/// Path p is L z_p, with z_p[k] the counter-based normal at (seed, p, k). Deterministic in
/// (context, count, seed) regardless of OPKERN_THREADS. Throws NumericalError when the context Gram
/// could not be factorized.
SampleBatch sample_paths(const ContextPtr& ctx, Index count, std::uint64_t seed);

/// (1/N) sum_p f_p f_p^T as an nd x nd matrix; block (i, j) estimates K(s_i, s_j). The mean is not
/// subtracted since the process is centered. Single-threaded, so the result is reproducible.
Matrix empirical_covariance(const SampleBatch& batch);

/// G + eps I with the jitter actually used by the factorization.
Matrix target_covariance(const RkhsContext& ctx);

struct CovErrorReport {
    double max_abs_err = 0.0;
    /// Largest absolute error inside each d x d block.
    Matrix per_block_err;
    /// 4 max_{ij} sqrt((T_ii T_jj + T_ij^2) / N) for the target T.
    double mc_tolerance = 0.0;
    bool pass = false;
};

CovErrorReport covariance_error_report(const SampleBatch& batch);
/// Compares the batch against another context's target covariance (same n and d).
CovErrorReport covariance_error_report(const SampleBatch& batch, const RkhsContext& against);

}  // namespace opkern
