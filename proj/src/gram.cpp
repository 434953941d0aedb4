#include "opkern/gram.hpp"

#include "opkern/error.hpp"
#include "opkern/parallel.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>

namespace opkern {

Index effective_rank(const std::vector<double>& eigenvalues, double tolerance) {
    double trace = 0.0;
    for (double v : eigenvalues) {
        trace += v;
    }
    const double budget = tolerance * std::max(trace, 0.0);
    // tail[k] = sum of positive eigenvalues from position k on
    double tail = 0.0;
    Index k = static_cast<Index>(eigenvalues.size());
    for (Index j = static_cast<Index>(eigenvalues.size()) - 1; j >= 0; --j) {
        tail += std::max(eigenvalues[static_cast<std::size_t>(j)], 0.0);
        if (tail > budget) {
            break;
        }
        k = j;
    }
    return k;
}

BlockGram assemble_gram(const OperatorKernel& k, std::span<const Site> sites, GramOptions options) {
    if (sites.empty()) {
        throw DomainError("assemble_gram: site list is empty");
    }
    const Index d = k.dim();
    const Index n = static_cast<Index>(sites.size());
    if (n * d > options.size_cap) {
        throw DomainError("assemble_gram: n*d = " + std::to_string(n * d) + " exceeds the cap of " +
                          std::to_string(options.size_cap));
    }
    for (const Site& s : sites) {
        if (s.dim() != sites.front().dim()) {
            throw DimensionError("assemble_gram: sites have mixed coordinate dimensions");
        }
    }

    BlockGram g;
    g.n_ = n;
    g.d_ = d;
    g.sites_.assign(sites.begin(), sites.end());
    g.data_.resize(n * d, n * d);

    // Each (i, j) block is written by exactly one iteration, so the result is independent of the
    // schedule. Exceptions cannot cross the OpenMP region; the first one is rethrown afterwards.
    std::exception_ptr failure;
#pragma omp parallel for schedule(static) num_threads(worker_count())
    for (Index i = 0; i < n; ++i) {
        try {
            for (Index j = i; j < n; ++j) {
                const Matrix block = k.evaluate(g.sites_[static_cast<std::size_t>(i)],
                                                g.sites_[static_cast<std::size_t>(j)]);
                g.data_.block(i * d, j * d, d, d) = block;
                if (i != j) {
                    g.data_.block(j * d, i * d, d, d) = block.transpose();
                }
            }
        } catch (...) {
#pragma omp critical(opkern_assemble_failure)
            if (!failure) {
                failure = std::current_exception();
            }
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
    g.data_ = 0.5 * (g.data_ + g.data_.transpose()).eval();
    return g;
}

BlockGram gram_from_matrix(Matrix data, Index d, std::vector<Site> sites) {
    if (data.rows() != data.cols() || data.rows() == 0) {
        throw DimensionError("gram_from_matrix: matrix must be square and nonempty");
    }
    if (d < 1 || data.rows() % d != 0) {
        throw DimensionError("gram_from_matrix: block size does not divide the matrix size");
    }
    BlockGram g;
    g.d_ = d;
    g.n_ = data.rows() / d;
    if (!sites.empty() && static_cast<Index>(sites.size()) != g.n_) {
        throw DimensionError("gram_from_matrix: site count does not match the matrix");
    }
    g.sites_ = std::move(sites);
    g.data_ = 0.5 * (data + data.transpose());
    return g;
}

const SpectrumReport& psd_check(BlockGram& g) {
    if (g.spectrum_) {
        return *g.spectrum_;
    }
    if (!g.data_.allFinite()) {
        throw NumericalError("psd_check: Gram matrix has non-finite entries");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(g.data_);
    if (eig.info() != Eigen::Success) {
        throw NumericalError("psd_check: eigensolver failed");
    }
    const Index size = g.data_.rows();
    SpectrumReport report;
    report.eigenvalues.resize(static_cast<std::size_t>(size));
    report.eigenvectors.resize(size, size);
    // Eigen returns ascending order.
    for (Index k = 0; k < size; ++k) {
        report.eigenvalues[static_cast<std::size_t>(k)] = eig.eigenvalues()[size - 1 - k];
        report.eigenvectors.col(k) = eig.eigenvectors().col(size - 1 - k);
    }
    report.lambda_max = report.eigenvalues.front();
    report.min_eig = report.eigenvalues.back();
    report.trace = g.data_.trace();
    report.psd = report.min_eig >= -1e-10 * std::max(report.lambda_max, 1.0);
    for (double tol : kEffectiveRankTolerances) {
        report.effective_rank[tol] = effective_rank(report.eigenvalues, tol);
    }
    g.spectrum_ = std::move(report);
    return *g.spectrum_;
}

std::vector<double> jitter_ladder(const Matrix& g) {
    const double mean_diag = g.trace() / static_cast<double>(g.rows());
    // A zero (or negative-trace) matrix has no natural scale; fall back to unit scale.
    const double scale = mean_diag > 0.0 ? mean_diag : 1.0;
    std::vector<double> ladder{0.0};
    for (int e = -12; e <= -6; ++e) {
        ladder.push_back(std::pow(10.0, e) * scale);
    }
    return ladder;
}

void factorize(BlockGram& g) {
    if (g.factor_) {
        return;
    }
    if (!g.data_.allFinite()) {
        throw NumericalError("factorize: Gram matrix has non-finite entries");
    }
    const double bound = 1e-8 * (1.0 + max_abs(g.data_));
    for (double eps : jitter_ladder(g.data_)) {
        Matrix shifted = g.data_;
        shifted.diagonal().array() += eps;
        Eigen::LLT<Matrix> llt(shifted);
        if (llt.info() != Eigen::Success) {
            continue;
        }
        Matrix lower = llt.matrixL();
        if (!lower.allFinite() || max_abs(lower * lower.transpose() - shifted) > bound) {
            continue;
        }
        g.factor_ = std::move(lower);
        g.jitter_ = eps;
        return;
    }
    throw NumericalError("indefinite: Cholesky failed for every jitter up to 1e-6 tr(G)/(nd)");
}

std::vector<SpectrumReport> spectral_decay_profile(const OperatorKernel& k, std::span<const Index> site_counts,
                                                   Interval domain) {
    if (site_counts.empty()) {
        throw DomainError("spectral_decay_profile: no site counts given");
    }
    for (std::size_t i = 0; i < site_counts.size(); ++i) {
        if (site_counts[i] < 1 || (i > 0 && site_counts[i] <= site_counts[i - 1])) {
            throw DomainError("spectral_decay_profile: site counts must be positive and strictly increasing");
        }
    }
    std::vector<SpectrumReport> out;
    out.reserve(site_counts.size());
    for (Index n : site_counts) {
        const std::vector<Site> grid = equispaced_grid(domain, n);
        BlockGram g = assemble_gram(k, grid);
        out.push_back(psd_check(g));
    }
    return out;
}

}  // namespace opkern
