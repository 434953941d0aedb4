#include "opkern/gp.hpp"

#include "opkern/error.hpp"
#include "opkern/parallel.hpp"
#include "opkern/random.hpp"

#include <cmath>

namespace opkern {

SampleBatch sample_paths(const ContextPtr& ctx, Index count, std::uint64_t seed) {
    if (count < 1) {
        throw DomainError("sample_paths: count must be >= 1");
    }
    const auto& factor = ctx->gram().factor();
    if (!factor) {
        throw NumericalError("sample_paths: the context Gram could not be factorized");
    }
    const Matrix& lower = *factor;
    const Index size = ctx->size();

    SampleBatch batch;
    batch.context = ctx;
    batch.seed = seed;
    batch.count = count;
    batch.paths.resize(count, size);

#pragma omp parallel for schedule(static) num_threads(worker_count())
    for (Index p = 0; p < count; ++p) {
        const NormalStream normal(seed, static_cast<std::uint64_t>(p));
        Vector z(size);
        for (Index k = 0; k < size; ++k) {
            z[k] = normal(static_cast<std::uint64_t>(k));
        }
        batch.paths.row(p) = (lower.triangularView<Eigen::Lower>() * z).transpose();
    }
    return batch;
}

Matrix empirical_covariance(const SampleBatch& batch) {
    // Single-threaded GEMM (EIGEN_DONT_PARALLELIZE): fixed blocking, fixed summation order.
    Matrix acc = batch.paths.transpose() * batch.paths;
    return acc / static_cast<double>(batch.paths.rows());
}

Matrix target_covariance(const RkhsContext& ctx) {
    Matrix t = ctx.gram_matrix();
    t.diagonal().array() += ctx.gram().jitter_used();
    return t;
}

CovErrorReport covariance_error_report(const SampleBatch& batch, const RkhsContext& against) {
    if (against.n() != batch.n() || against.d() != batch.d()) {
        throw DimensionError("covariance_error_report: batch and context shapes differ");
    }
    const Matrix target = target_covariance(against);
    const Matrix err = (empirical_covariance(batch) - target).cwiseAbs();
    const Index n = batch.n();
    const Index d = batch.d();
    const double count = static_cast<double>(batch.paths.rows());

    CovErrorReport report;
    report.per_block_err.resize(n, n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
            report.per_block_err(i, j) = err.block(i * d, j * d, d, d).maxCoeff();
        }
    }
    report.max_abs_err = err.maxCoeff();
    double worst = 0.0;
    for (Index i = 0; i < target.rows(); ++i) {
        for (Index j = 0; j < target.cols(); ++j) {
            const double var = target(i, i) * target(j, j) + target(i, j) * target(i, j);
            worst = std::max(worst, std::sqrt(std::max(var, 0.0) / count));
        }
    }
    report.mc_tolerance = 4.0 * worst;
    report.pass = report.max_abs_err <= report.mc_tolerance;
    return report;
}

CovErrorReport covariance_error_report(const SampleBatch& batch) {
    return covariance_error_report(batch, *batch.context);
}

}  // namespace opkern
