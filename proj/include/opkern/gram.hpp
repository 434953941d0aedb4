#pragma once

#include "opkern/kernels.hpp"
#include "opkern/types.hpp"

#include <array>
#include <map>
#include <optional>
#include <span>
#include <vector>

namespace opkern {

/// Tolerances for which every SpectrumReport records an effective rank.
inline constexpr std::array<double, 6> kEffectiveRankTolerances = {1e-2, 1e-4, 1e-6, 1e-8, 1e-10, 1e-12};

struct SpectrumReport {
    /// Nonincreasing.
    std::vector<double> eigenvalues;
    /// Column k is the unit eigenvector for eigenvalues[k].
    Matrix eigenvectors;
    double lambda_max = 0.0;
    double min_eig = 0.0;
    double trace = 0.0;
    /// psd <=> min_eig >= -1e-10 * max(lambda_max, 1).
    bool psd = false;
    /// tolerance -> smallest k whose spectral tail sum_{j >= k} max(lambda_j, 0) is <= tolerance * trace.
    std::map<double, Index> effective_rank;
};

/// Smallest k such that the eigenvalues past position k carry at most `tolerance` of the trace.
Index effective_rank(const std::vector<double>& eigenvalues, double tolerance);

struct GramOptions {
    /// Upper bound on n * d.
    Index size_cap = 5000;
};

/// Block Gram matrix G with G[i, j] = K(s_i, s_j), plus cached spectrum and Cholesky factor.
///
/// The matrix itself never changes after assembly; psd_check and factorize only fill caches.
class BlockGram {
public:
    Index n() const noexcept { return n_; }
    Index d() const noexcept { return d_; }
    const std::vector<Site>& sites() const noexcept { return sites_; }
    const Matrix& data() const noexcept { return data_; }
    auto block(Index i, Index j) const { return data_.block(i * d_, j * d_, d_, d_); }

    const std::optional<Matrix>& factor() const noexcept { return factor_; }
    double jitter_used() const noexcept { return jitter_; }
    const std::optional<SpectrumReport>& spectrum() const noexcept { return spectrum_; }

    /// Gram of (kernel, sites). Fails with DomainError when n * d exceeds the size cap.
    friend BlockGram assemble_gram(const OperatorKernel& k, std::span<const Site> sites, GramOptions options);
    /// Wraps an externally supplied matrix (for example a hand-edited or corrupted Gram).
    /// The matrix is symmetrized by averaging. `sites` may be empty.
    friend BlockGram gram_from_matrix(Matrix data, Index d, std::vector<Site> sites);
    friend const SpectrumReport& psd_check(BlockGram& g);
    friend void factorize(BlockGram& g);

private:
    BlockGram() = default;

    Index n_ = 0;
    Index d_ = 0;
    std::vector<Site> sites_;
    Matrix data_;
    std::optional<Matrix> factor_;
    double jitter_ = 0.0;
    std::optional<SpectrumReport> spectrum_;
};

BlockGram assemble_gram(const OperatorKernel& k, std::span<const Site> sites, GramOptions options = {});
BlockGram gram_from_matrix(Matrix data, Index d, std::vector<Site> sites = {});

/// Full symmetric eigendecomposition; caches and returns the report.
/// Throws NumericalError when the matrix has non-finite entries.
const SpectrumReport& psd_check(BlockGram& g);

/// Cholesky factorization G + eps I = L L^T, trying eps = 0 and then
/// 1e-12, 1e-11, ..., 1e-6 times tr(G) / (n d). The first eps whose factor reconstructs within
/// 1e-8 (1 + max|G|) is kept. Throws NumericalError("indefinite ...") when the ladder is exhausted.
void factorize(BlockGram& g);

/// The jitter values factorize tries, in order.
std::vector<double> jitter_ladder(const Matrix& g);

/// Spectrum of the Gram on an equispaced grid for each entry of `site_counts` (strictly increasing).
std::vector<SpectrumReport> spectral_decay_profile(const OperatorKernel& k, std::span<const Index> site_counts,
                                                   Interval domain = {});

}  // namespace opkern
