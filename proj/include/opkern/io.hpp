#pragma once

#include "opkern/gp.hpp"
#include "opkern/gram.hpp"
#include "opkern/identities.hpp"
#include "opkern/rkhs.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace opkern {

/// Site list text: `grid(a, b, n)` for n equispaced scalar sites, `x1, x2, ...` or `[x1, x2, ...]`
/// for scalar sites, `[[x, y], [x, y], ...]` for multi-dimensional sites. Throws ParseError.
std::vector<Site> parse_sites(std::string_view text);

/// Comma-separated numeric matrix. Lines starting with '#' and blank lines are skipped.
Matrix read_matrix_csv(std::istream& in);
Matrix read_matrix_csv_file(const std::string& path);
void write_matrix_csv(std::ostream& out, const Matrix& m);

nlohmann::json sites_json(const std::vector<Site>& sites);

/// `# n=<n>,d=<d>,sites=<json>` followed by the row-major matrix.
void write_gram_csv(std::ostream& out, const BlockGram& g);

/// {n, d, sites, jitter_used, eigenvalues, min_eig, psd, effective_rank}. Requires psd_check.
nlohmann::json spectrum_json(const BlockGram& g);
nlohmann::json spectrum_json(const SpectrumReport& report, Index n, Index d, const std::vector<Site>& sites,
                             double jitter_used);

/// {identity_name: {max_residual, tolerance, pass, informational}}.
nlohmann::json identity_report_json(const IdentityReport& report);

/// {context_hash, coeffs}.
nlohmann::json element_json(const RkhsElement& x);
/// Rebuilds an element; throws ContextError when the hash does not match `ctx`.
RkhsElement element_from_json(const nlohmann::json& j, const ContextPtr& ctx);

nlohmann::json cov_report_json(const CovErrorReport& report, const SampleBatch& batch);

/// `# seed=<seed>,context=<hash>,N=<N>,n=<n>,d=<d>` then one row per path.
void write_batch_csv(std::ostream& out, const SampleBatch& batch);

/// "OPKGP1", u64 seed, u32 N, u32 n, u32 d, then N*n*d float64 values, all little-endian.
void write_batch_binary(std::ostream& out, const SampleBatch& batch);

struct BatchFile {
    std::uint64_t seed = 0;
    std::uint32_t count = 0;
    std::uint32_t n = 0;
    std::uint32_t d = 0;
    RowMatrix paths;
};

/// Throws Error on a bad magic or truncated payload.
BatchFile read_batch_binary(std::istream& in);

}  // namespace opkern
