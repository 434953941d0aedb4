#include "opkern/io.hpp"

#include "opkern/error.hpp"
#include "opkern/kernel_spec.hpp"

#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace opkern {

namespace {

constexpr char kBatchMagic[6] = {'O', 'P', 'K', 'G', 'P', '1'};

static_assert(std::endian::native == std::endian::little, "binary batch I/O assumes a little-endian host");

class SiteParser {
public:
    explicit SiteParser(std::string_view text) : text_(text) {}

    std::vector<Site> parse() {
        skip_ws();
        std::vector<Site> out;
        if (text_.substr(pos_).starts_with("grid")) {
            pos_ += 4;
            expect('(');
            const double lo = number();
            expect(',');
            const double hi = number();
            expect(',');
            const double count = number();
            expect(')');
            if (count < 1 || std::floor(count) != count) {
                throw ParseError("grid point count must be a positive integer", pos_);
            }
            if (hi < lo) {
                throw ParseError("grid needs lo <= hi", pos_);
            }
            out = equispaced_grid({lo, hi}, static_cast<Index>(count));
        } else if (peek('[')) {
            ++pos_;
            if (peek('[')) {
                do {
                    out.push_back(Site(vector()));
                } while (peek(',') && (++pos_, true));
            } else {
                do {
                    out.push_back(Site::scalar(number()));
                } while (peek(',') && (++pos_, true));
            }
            expect(']');
        } else {
            do {
                out.push_back(Site::scalar(number()));
            } while (peek(',') && (++pos_, true));
        }
        skip_ws();
        if (pos_ != text_.size()) {
            throw ParseError("unexpected trailing input in site list", pos_);
        }
        if (out.empty()) {
            throw ParseError("site list is empty", pos_);
        }
        for (const Site& s : out) {
            if (s.dim() != out.front().dim()) {
                throw ParseError("sites have mixed dimensions", pos_);
            }
        }
        return out;
    }

private:
    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
        }
    }
    bool peek(char c) {
        skip_ws();
        return pos_ < text_.size() && text_[pos_] == c;
    }
    void expect(char c) {
        if (!peek(c)) {
            throw ParseError(std::string("expected '") + c + "' in site list", pos_);
        }
        ++pos_;
    }
    double number() {
        skip_ws();
        std::size_t begin = pos_;
        if (begin < text_.size() && text_[begin] == '+') {
            ++begin;
        }
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(text_.data() + begin, text_.data() + text_.size(), v);
        if (ec != std::errc() || !std::isfinite(v)) {
            throw ParseError("expected finite number in site list", pos_);
        }
        pos_ = static_cast<std::size_t>(ptr - text_.data());
        return v;
    }
    Vector vector() {
        expect('[');
        std::vector<double> xs;
        do {
            xs.push_back(number());
        } while (peek(',') && (++pos_, true));
        expect(']');
        return Eigen::Map<Vector>(xs.data(), static_cast<Index>(xs.size()));
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

template <typename T>
void write_le(std::ostream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof value);
}

template <typename T>
T read_le(std::istream& in) {
    T value{};
    if (!in.read(reinterpret_cast<char*>(&value), sizeof value)) {
        throw Error("batch file is truncated");
    }
    return value;
}

}  // namespace

std::vector<Site> parse_sites(std::string_view text) { return SiteParser(text).parse(); }

Matrix read_matrix_csv(std::istream& in) {
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') {
            continue;
        }
        std::vector<double> row;
        std::stringstream cells(line);
        std::string cell;
        while (std::getline(cells, cell, ',')) {
            const auto b = cell.find_first_not_of(" \t\r");
            const auto e = cell.find_last_not_of(" \t\r");
            if (b == std::string::npos) {
                throw ParseError("empty cell on line " + std::to_string(line_no), 0);
            }
            double v = 0.0;
            const auto [ptr, ec] = std::from_chars(cell.data() + b, cell.data() + e + 1, v);
            if (ec != std::errc() || ptr != cell.data() + e + 1) {
                throw ParseError("bad number on line " + std::to_string(line_no), b);
            }
            row.push_back(v);
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw ParseError("ragged matrix on line " + std::to_string(line_no), 0);
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) {
        throw ParseError("matrix file has no rows", 0);
    }
    Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        }
    }
    return m;
}

Matrix read_matrix_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open " + path);
    }
    return read_matrix_csv(in);
}

void write_matrix_csv(std::ostream& out, const Matrix& m) {
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            if (j > 0) {
                out << ',';
            }
            out << format_double(m(i, j));
        }
        out << '\n';
    }
}

nlohmann::json sites_json(const std::vector<Site>& sites) {
    nlohmann::json out = nlohmann::json::array();
    for (const Site& s : sites) {
        out.push_back(std::vector<double>(s.coords().data(), s.coords().data() + s.dim()));
    }
    return out;
}

void write_gram_csv(std::ostream& out, const BlockGram& g) {
    out << "# n=" << g.n() << ",d=" << g.d() << ",sites=" << sites_json(g.sites()).dump() << '\n';
    write_matrix_csv(out, g.data());
}

nlohmann::json spectrum_json(const SpectrumReport& report, Index n, Index d, const std::vector<Site>& sites,
                             double jitter_used) {
    nlohmann::json ranks = nlohmann::json::object();
    for (const auto& [tol, rank] : report.effective_rank) {
        char key[16];
        std::snprintf(key, sizeof key, "%.0e", tol);
        ranks[key] = rank;
    }
    return {
        {"n", n},
        {"d", d},
        {"sites", sites_json(sites)},
        {"jitter_used", jitter_used},
        {"eigenvalues", report.eigenvalues},
        {"min_eig", report.min_eig},
        {"psd", report.psd},
        {"effective_rank", ranks},
    };
}

nlohmann::json spectrum_json(const BlockGram& g) {
    if (!g.spectrum()) {
        throw Error("spectrum_json: run psd_check first");
    }
    return spectrum_json(*g.spectrum(), g.n(), g.d(), g.sites(), g.jitter_used());
}

nlohmann::json identity_report_json(const IdentityReport& report) {
    nlohmann::json out = nlohmann::json::object();
    for (const IdentityResult& r : report.results) {
        out[r.name] = {
            {"max_residual", std::isfinite(r.max_residual) ? r.max_residual : 1e308},
            {"tolerance", r.tolerance},
            {"pass", r.pass},
            {"informational", r.informational},
        };
    }
    return out;
}

nlohmann::json element_json(const RkhsElement& x) {
    const Vector& c = x.coeffs();
    return {{"context_hash", x.context()->hash()}, {"coeffs", std::vector<double>(c.data(), c.data() + c.size())}};
}

RkhsElement element_from_json(const nlohmann::json& j, const ContextPtr& ctx) {
    if (j.at("context_hash").get<std::string>() != ctx->hash()) {
        throw ContextError("element was serialized from a different context");
    }
    const auto coeffs = j.at("coeffs").get<std::vector<double>>();
    return RkhsElement(ctx, Eigen::Map<const Vector>(coeffs.data(), static_cast<Index>(coeffs.size())));
}

nlohmann::json cov_report_json(const CovErrorReport& report, const SampleBatch& batch) {
    nlohmann::json blocks = nlohmann::json::array();
    for (Index i = 0; i < report.per_block_err.rows(); ++i) {
        std::vector<double> row(static_cast<std::size_t>(report.per_block_err.cols()));
        for (Index j = 0; j < report.per_block_err.cols(); ++j) {
            row[static_cast<std::size_t>(j)] = report.per_block_err(i, j);
        }
        blocks.push_back(row);
    }
    return {
        {"context_hash", batch.context->hash()},
        {"seed", batch.seed},
        {"count", batch.count},
        {"n", batch.n()},
        {"d", batch.d()},
        {"jitter_used", batch.context->gram().jitter_used()},
        {"max_abs_err", report.max_abs_err},
        {"per_block_err", blocks},
        {"mc_tolerance", report.mc_tolerance},
        {"pass", report.pass},
    };
}

void write_batch_csv(std::ostream& out, const SampleBatch& batch) {
    out << "# seed=" << batch.seed << ",context=" << batch.context->hash() << ",N=" << batch.count
        << ",n=" << batch.n() << ",d=" << batch.d() << '\n';
    write_matrix_csv(out, batch.paths);
}

void write_batch_binary(std::ostream& out, const SampleBatch& batch) {
    out.write(kBatchMagic, sizeof kBatchMagic);
    write_le<std::uint64_t>(out, batch.seed);
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(batch.count));
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(batch.n()));
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(batch.d()));
    out.write(reinterpret_cast<const char*>(batch.paths.data()),
              static_cast<std::streamsize>(batch.paths.size() * static_cast<Index>(sizeof(double))));
}

BatchFile read_batch_binary(std::istream& in) {
    char magic[sizeof kBatchMagic];
    if (!in.read(magic, sizeof magic) || std::memcmp(magic, kBatchMagic, sizeof magic) != 0) {
        throw Error("not an OPKGP1 batch file");
    }
    BatchFile file;
    file.seed = read_le<std::uint64_t>(in);
    file.count = read_le<std::uint32_t>(in);
    file.n = read_le<std::uint32_t>(in);
    file.d = read_le<std::uint32_t>(in);
    file.paths.resize(file.count, static_cast<Index>(file.n) * file.d);
    const auto bytes = static_cast<std::streamsize>(file.paths.size() * static_cast<Index>(sizeof(double)));
    if (!in.read(reinterpret_cast<char*>(file.paths.data()), bytes)) {
        throw Error("batch file is truncated");
    }
    return file;
}

}  // namespace opkern
