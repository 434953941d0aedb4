#include "cli.hpp"

#include "opkern/opkern.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

namespace opkern::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Options {
    std::string kernel;
    std::string sites;
    std::string out = ".";
    std::string format;
    std::optional<std::uint64_t> seed;
    std::string config;
    std::string raw;
    Index dim = 1;
    std::string counts;
    std::string domain = "0,1";
    Index count = 0;
    int trials = 100;
    double trunc_tol = 1e-12;
    std::string family = "none";
    bool quiet = false;
};

struct UsageError : Error {
    using Error::Error;
};

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

/// key=value lines; '#' starts a comment line.
std::map<std::string, std::string> read_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw UsageError("cannot open config file '" + path + "'");
    }
    std::map<std::string, std::string> entries;
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        const std::string text = trim(line);
        if (text.empty() || text.front() == '#') {
            continue;
        }
        const auto eq = text.find('=');
        if (eq == std::string::npos) {
            throw UsageError(path + ":" + std::to_string(number) + ": expected key=value");
        }
        std::string key = trim(text.substr(0, eq));
        if (key.rfind("--", 0) == 0) {
            key.erase(0, 2);
        }
        entries[key] = trim(text.substr(eq + 1));
    }
    return entries;
}

/// Long option names present on the command line, with or without an inline `=value`.
std::set<std::string> given_flags(const std::vector<std::string>& args) {
    std::set<std::string> names;
    for (const std::string& a : args) {
        if (a.rfind("--", 0) == 0 && a.size() > 2) {
            names.insert(a.substr(2, a.find('=') == std::string::npos ? std::string::npos : a.find('=') - 2));
        }
    }
    return names;
}

std::optional<std::string> config_path(const std::vector<std::string>& args) {
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            return args[i + 1];
        }
        if (args[i].rfind("--config=", 0) == 0) {
            return args[i].substr(9);
        }
    }
    return std::nullopt;
}

void write_file(const fs::path& path, const std::string& contents) {
    std::ofstream f(path, std::ios::binary);
    if (!f || !f.write(contents.data(), static_cast<std::streamsize>(contents.size()))) {
        throw Error("cannot write '" + path.string() + "'");
    }
}

void write_json(const fs::path& path, const json& j) { write_file(path, j.dump(2) + "\n"); }

fs::path output_dir(const Options& o) {
    fs::path dir(o.out);
    fs::create_directories(dir);
    return dir;
}

json matrix_json(const Matrix& m) {
    json rows = json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        std::vector<double> row(static_cast<std::size_t>(m.cols()));
        for (Index j = 0; j < m.cols(); ++j) {
            row[static_cast<std::size_t>(j)] = m(i, j);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

OperatorKernel require_kernel(const Options& o) {
    if (o.kernel.empty()) {
        throw UsageError("--kernel is required");
    }
    return OperatorKernel::parse(o.kernel);
}

std::vector<Site> require_sites(const Options& o) {
    if (o.sites.empty()) {
        throw UsageError("--sites is required");
    }
    return parse_sites(o.sites);
}

std::string format_or(const Options& o, const std::string& fallback, std::initializer_list<const char*> allowed) {
    const std::string f = o.format.empty() ? fallback : o.format;
    for (const char* a : allowed) {
        if (f == a) {
            return f;
        }
    }
    throw UsageError("unsupported --format '" + f + "' for this command");
}

/// Reads a raw Gram and checks it against n sites of dimension d.
BlockGram raw_gram(const std::string& path, Index d, std::vector<Site> sites) {
    Matrix m = read_matrix_csv_file(path);
    if (m.rows() != m.cols() || m.rows() % d != 0) {
        throw DimensionError("raw Gram must be square with a multiple of " + std::to_string(d) + " rows");
    }
    if (!sites.empty() && m.rows() != static_cast<Index>(sites.size()) * d) {
        throw DimensionError("raw Gram size does not match the site count");
    }
    return gram_from_matrix(std::move(m), d, std::move(sites));
}

int cmd_gram(const Options& o, std::ostream& out) {
    const std::string format = format_or(o, "csv", {"csv", "json"});
    std::optional<OperatorKernel> kernel;
    if (!o.kernel.empty()) {
        kernel = OperatorKernel::parse(o.kernel);
    }
    BlockGram g = [&] {
        if (!o.raw.empty()) {
            const Index d = kernel ? kernel->output_dim() : o.dim;
            return raw_gram(o.raw, d, o.sites.empty() ? std::vector<Site>{} : parse_sites(o.sites));
        }
        if (!kernel) {
            throw UsageError("--kernel is required");
        }
        return assemble_gram(*kernel, require_sites(o));
    }();
    const SpectrumReport& report = psd_check(g);
    if (report.psd) {
        try {
            factorize(g);
        } catch (const NumericalError&) {
            // The spectrum report still records PSD; the factor is only needed for sampling.
        }
    }
    const fs::path dir = output_dir(o);
    if (format == "csv") {
        std::ostringstream ss;
        write_gram_csv(ss, g);
        write_file(dir / "gram.csv", ss.str());
    } else {
        write_json(dir / "gram.json",
                   {{"n", g.n()}, {"d", g.d()}, {"sites", sites_json(g.sites())}, {"matrix", matrix_json(g.data())}});
    }
    write_json(dir / "spectrum.json", spectrum_json(g));
    if (!o.quiet) {
        out << "gram: n=" << g.n() << " d=" << g.d() << " psd=" << (report.psd ? "true" : "false")
            << " min_eig=" << format_double(report.min_eig) << '\n';
    }
    return report.psd ? kSuccess : kNumerical;
}

std::vector<Index> parse_counts(const std::string& text) {
    std::vector<Index> counts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const std::string t = trim(item);
        if (t.empty()) {
            continue;
        }
        std::size_t used = 0;
        long long value = 0;
        try {
            value = std::stoll(t, &used);
        } catch (const std::exception&) {
            throw UsageError("--counts: '" + t + "' is not an integer");
        }
        if (used != t.size()) {
            throw UsageError("--counts: '" + t + "' is not an integer");
        }
        counts.push_back(static_cast<Index>(value));
    }
    if (counts.empty()) {
        throw UsageError("--counts must list at least one site count");
    }
    return counts;
}

Interval parse_domain(const std::string& text) {
    const auto comma = text.find(',');
    if (comma == std::string::npos) {
        throw UsageError("--domain must be 'a,b'");
    }
    try {
        Interval iv{std::stod(text.substr(0, comma)), std::stod(text.substr(comma + 1))};
        if (!(iv.lo < iv.hi)) {
            throw UsageError("--domain requires a < b");
        }
        return iv;
    } catch (const std::logic_error&) {
        throw UsageError("--domain must be 'a,b'");
    }
}

int cmd_spectrum(const Options& o, std::ostream& out) {
    const OperatorKernel kernel = require_kernel(o);
    const std::vector<Index> counts = parse_counts(o.counts);
    const Interval domain = parse_domain(o.domain);
    const auto reports = spectral_decay_profile(kernel, counts, domain);
    const fs::path dir = output_dir(o);
    for (std::size_t r = 0; r < reports.size(); ++r) {
        const Index n = counts[r];
        json j = spectrum_json(reports[r], n, kernel.output_dim(), equispaced_grid(domain, n), 0.0);
        j["kernel"] = kernel.canonical();
        write_json(dir / ("spectrum_n" + std::to_string(n) + ".json"), j);
    }
    if (!o.quiet) {
        out << "spectrum: " << reports.size() << " reports\n";
    }
    return kSuccess;
}

ContextPtr build_context(const Options& o, const OperatorKernel& kernel) {
    std::vector<Site> sites = require_sites(o);
    if (o.raw.empty()) {
        return make_context(kernel, std::move(sites));
    }
    return make_context_with_gram(kernel, raw_gram(o.raw, kernel.output_dim(), std::move(sites)));
}

int cmd_verify(const Options& o, std::ostream& out, std::ostream& err) {
    if (o.trials < 1) {
        throw UsageError("--trials must be >= 1");
    }
    format_or(o, "json", {"json"});
    const OperatorKernel kernel = require_kernel(o);
    const ContextPtr ctx = build_context(o, kernel);
    const std::uint64_t seed = o.seed.value_or(kDefaultIdentitySeed);
    std::optional<TransformFamily> family;
    if (o.family != "none") {
        family = random_transform_family(ctx, seed, o.family == "unitary");
    }
    const IdentityReport report = verify_identities(ctx, family ? &*family : nullptr, o.trials, seed);
    const auto failing = report.failing();
    write_json(output_dir(o) / "verify.json", {
                                                  {"kernel", kernel.canonical()},
                                                  {"context_hash", ctx->hash()},
                                                  {"n", ctx->n()},
                                                  {"d", ctx->d()},
                                                  {"trials", report.trials},
                                                  {"seed", report.seed},
                                                  {"family", o.family},
                                                  {"all_pass", report.all_pass()},
                                                  {"failing", failing},
                                                  {"identities", identity_report_json(report)},
                                              });
    for (const std::string& name : failing) {
        const IdentityResult* r = report.find(name);
        err << "identity failed: " << name << " (residual " << format_double(r->max_residual) << " > "
            << format_double(r->tolerance) << ")\n";
    }
    if (!o.quiet) {
        out << "verify: " << (failing.empty() ? "pass" : "FAIL") << " (" << report.results.size() << " identities, "
            << failing.size() << " failing)\n";
    }
    return failing.empty() ? kSuccess : kCheckFailed;
}

int cmd_sample(const Options& o, std::ostream& out) {
    if (o.count < 1) {
        throw UsageError("--N must be >= 1");
    }
    const std::string format = format_or(o, "csv", {"csv", "json", "bin"});
    const OperatorKernel kernel = require_kernel(o);
    const ContextPtr ctx = build_context(o, kernel);
    if (!ctx->gram().factor()) {
        throw NumericalError("the Gram could not be factorized within the jitter ladder");
    }
    const SampleBatch batch = sample_paths(ctx, o.count, o.seed.value_or(0));
    const CovErrorReport report = covariance_error_report(batch);
    const fs::path dir = output_dir(o);
    std::ostringstream ss;
    if (format == "csv") {
        write_batch_csv(ss, batch);
        write_file(dir / "batch.csv", ss.str());
    } else if (format == "bin") {
        write_batch_binary(ss, batch);
        write_file(dir / "batch.bin", ss.str());
    } else {
        write_json(dir / "batch.json", {{"seed", batch.seed},
                                        {"context_hash", ctx->hash()},
                                        {"count", batch.count},
                                        {"n", batch.n()},
                                        {"d", batch.d()},
                                        {"paths", matrix_json(batch.paths)}});
    }
    json j = cov_report_json(report, batch);
    j["kernel"] = kernel.canonical();
    write_json(dir / "cov_report.json", j);
    if (!o.quiet) {
        out << "sample: N=" << batch.count << " max_abs_err=" << format_double(report.max_abs_err)
            << " tolerance=" << format_double(report.mc_tolerance) << (report.pass ? " pass" : " FAIL") << '\n';
    }
    return report.pass ? kSuccess : kCheckFailed;
}

int cmd_expand(const Options& o, std::ostream& out) {
    if (!(o.trunc_tol > 0.0 && o.trunc_tol < 1.0)) {
        throw UsageError("--trunc-tol must lie in (0, 1)");
    }
    const std::string format = format_or(o, "csv", {"csv", "json"});
    const OperatorKernel kernel = require_kernel(o);
    const ContextPtr ctx = build_context(o, kernel);
    const OnbExpansion onb = onb_expansion(ctx, o.trunc_tol);
    Matrix coeffs(static_cast<Index>(onb.basis.size()), ctx->size());
    for (std::size_t k = 0; k < onb.basis.size(); ++k) {
        coeffs.row(static_cast<Index>(k)) = onb.basis[k].coeffs().transpose();
    }
    const double error = reconstruction_error(onb);
    const fs::path dir = output_dir(o);
    if (format == "csv") {
        std::ostringstream ss;
        ss << "# context=" << ctx->hash() << ",count=" << onb.basis.size() << ",n=" << ctx->n() << ",d=" << ctx->d()
           << '\n';
        write_matrix_csv(ss, coeffs);
        write_file(dir / "onb.csv", ss.str());
    } else {
        write_json(dir / "onb.json", {{"context_hash", ctx->hash()}, {"coeffs", matrix_json(coeffs)}});
    }
    write_json(dir / "expand.json", {
                                        {"kernel", kernel.canonical()},
                                        {"context_hash", ctx->hash()},
                                        {"n", ctx->n()},
                                        {"d", ctx->d()},
                                        {"trunc_tol", o.trunc_tol},
                                        {"count", onb.basis.size()},
                                        {"eigenvalues", onb.eigenvalues},
                                        {"reconstruction_error", error},
                                    });
    if (!o.quiet) {
        out << "expand: " << onb.basis.size() << " basis functions, reconstruction_error=" << format_double(error)
            << '\n';
    }
    return kSuccess;
}

void add_common(CLI::App* sub, Options& o) {
    sub->add_option("--kernel", o.kernel, "Kernel spec, e.g. \"gauss(sigma=1,ell=0.5)\"");
    sub->add_option("--out", o.out, "Output directory")->capture_default_str();
    sub->add_option("--format", o.format, "Artifact format for matrices and paths");
    sub->add_option("--config", o.config, "key=value file supplying defaults for the flags");
    sub->add_flag("--quiet", o.quiet, "Suppress the summary line");
}

void add_sites(CLI::App* sub, Options& o) {
    sub->add_option("--sites", o.sites, "grid(a,b,n), x1,x2,... or [[x,y],...]");
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"Operator-valued kernel toolkit", "opkern"};
    app.require_subcommand(1);

    CLI::App* gram = app.add_subcommand("gram", "Assemble the block Gram and certify it PSD");
    add_common(gram, o);
    add_sites(gram, o);
    gram->add_option("--raw", o.raw, "Read the Gram from a CSV file instead of assembling it");
    gram->add_option("--dim", o.dim, "Block size of a --raw Gram when no --kernel is given")
        ->check(CLI::PositiveNumber);

    CLI::App* spectrum = app.add_subcommand("spectrum", "Gram spectra on nested equispaced grids");
    add_common(spectrum, o);
    spectrum->add_option("--counts", o.counts, "Comma-separated increasing site counts");
    spectrum->add_option("--domain", o.domain, "Grid interval a,b")->capture_default_str();

    CLI::App* verify = app.add_subcommand("verify", "Run the operator identity suite");
    add_common(verify, o);
    add_sites(verify, o);
    verify->add_option("--raw", o.raw, "Use this Gram CSV instead of the assembled one");
    verify->add_option("--trials", o.trials, "Random trials per identity")->capture_default_str();
    verify->add_option("--seed", o.seed, "Trial seed");
    verify->add_option("--family", o.family, "Transform family: none, general or unitary")
        ->check(CLI::IsMember({"none", "general", "unitary"}))
        ->capture_default_str();

    CLI::App* sample = app.add_subcommand("sample", "Draw Gaussian process paths and check their covariance");
    add_common(sample, o);
    add_sites(sample, o);
    sample->add_option("--N", o.count, "Number of paths")->required();
    sample->add_option("--seed", o.seed, "Sampler seed (default 0)");

    CLI::App* expand = app.add_subcommand("expand", "Orthonormal expansion of the kernel on the sites");
    add_common(expand, o);
    add_sites(expand, o);
    expand->add_option("--trunc-tol", o.trunc_tol, "Relative eigenvalue cutoff in (0, 1)")->capture_default_str();

    std::vector<std::string> args = raw_args;
    try {
        if (const auto path = config_path(args)) {
            CLI::App* target = nullptr;
            for (const std::string& a : args) {
                if (a.rfind("-", 0) != 0) {
                    target = app.get_subcommand_no_throw(a);
                    break;
                }
            }
            if (target == nullptr) {
                throw UsageError("--config needs a subcommand");
            }
            const std::set<std::string> given = given_flags(args);
            for (const auto& [key, value] : read_config(*path)) {
                if (key == "config") {
                    continue;
                }
                if (target->get_option_no_throw("--" + key) == nullptr) {
                    throw UsageError("config key '" + key + "' is not an option of '" + target->get_name() + "'");
                }
                if (!given.contains(key)) {
                    args.push_back("--" + key);
                    if (key != "quiet") {
                        args.push_back(value);
                    }
                }
            }
        }
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            app.exit(e, out, err);
            return kSuccess;
        }
        err << "error: " << e.what() << "\n\n" << app.help();
        return kUsage;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kUsage;
    }

    try {
        if (gram->parsed()) {
            return cmd_gram(o, out);
        }
        if (spectrum->parsed()) {
            return cmd_spectrum(o, out);
        }
        if (verify->parsed()) {
            return cmd_verify(o, out, err);
        }
        if (sample->parsed()) {
            return cmd_sample(o, out);
        }
        return cmd_expand(o, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << '\n';
        return kNumerical;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    }
}

}  // namespace opkern::cli
