// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance                 run every criterion
//   acceptance --criterion N   run criterion N only
//
// Exit status is 0 only when every selected criterion passes.

#include "oracles.hpp"
#include "opkern/opkern.hpp"

#include <CLI11.hpp>

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#ifndef OPKERN_TOOL_PATH
#error "OPKERN_TOOL_PATH must name the opkern executable"
#endif

using namespace opkern;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

struct Criterion {
    int id;
    const char* title;
    double budget_seconds;
    std::function<Outcome()> run;
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

std::vector<Site> random_sites(std::mt19937_64& rng, int n, int dim) {
    std::uniform_real_distribution<double> coord(-2.0, 2.0);
    std::vector<Site> sites;
    for (int i = 0; i < n; ++i) {
        Vector x(dim);
        for (int k = 0; k < dim; ++k) {
            x[k] = coord(rng);
        }
        sites.emplace_back(x);
    }
    return sites;
}

Matrix random_psd(std::mt19937_64& rng, int d) {
    std::normal_distribution<double> normal;
    Matrix r(d, d);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            r(i, j) = normal(rng);
        }
    }
    return r * r.transpose();
}

std::string matrix_literal(const Matrix& m) {
    std::string s = "[";
    for (Index i = 0; i < m.rows(); ++i) {
        s += i ? ",[" : "[";
        for (Index j = 0; j < m.cols(); ++j) {
            s += (j ? "," : "") + format_double(m(i, j));
        }
        s += "]";
    }
    return s + "]";
}

std::string gauss_text(std::mt19937_64& rng, int dim) {
    std::uniform_real_distribution<double> sigma(0.5, 2.0);
    std::uniform_real_distribution<double> ell(0.2, 2.0);
    return "gauss(sigma=" + format_double(sigma(rng)) + ",ell=" + format_double(ell(rng)) +
           ",dim=" + std::to_string(dim) + ")";
}

HVec random_vec(std::mt19937_64& rng, Index d) {
    std::normal_distribution<double> normal;
    HVec v(d);
    for (Index k = 0; k < d; ++k) {
        v[k] = normal(rng);
    }
    return v;
}

RkhsElement random_element(std::mt19937_64& rng, const ContextPtr& ctx) {
    return RkhsElement(ctx, random_vec(rng, ctx->size()));
}

Outcome psd_zoo() {
    const std::vector<std::string> families{"gaussian", "diagexp3", "rational2", "separable", "normalized"};
    Outcome o;
    std::uniform_int_distribution<int> count(1, 20);
    std::uniform_int_distribution<int> small_dim(1, 3);
    for (std::size_t f = 0; f < families.size(); ++f) {
        std::mt19937_64 rng(1000 + f);
        int failures = 0;
        double worst = 0.0;
        for (int trial = 0; trial < 200; ++trial) {
            const int site_dim = trial % 2 == 0 ? 1 : 3;
            std::string text;
            if (families[f] == "gaussian") {
                text = gauss_text(rng, small_dim(rng));
            } else if (families[f] == "diagexp3" || families[f] == "rational2") {
                text = families[f];
            } else if (families[f] == "separable") {
                text = "separable(B=" + matrix_literal(random_psd(rng, small_dim(rng))) + ",base=" + gauss_text(rng, 1) +
                       ")";
            } else {
                text = "normalized(inner=" + gauss_text(rng, small_dim(rng)) + ")";
            }
            const auto k = OperatorKernel::parse(text);
            const auto sites = random_sites(rng, count(rng), site_dim);
            BlockGram g = assemble_gram(k, sites);
            const SpectrumReport& r = psd_check(g);
            const double relative = r.min_eig / std::max(r.lambda_max, 1e-300);
            worst = std::min(worst, relative);
            if (!(r.psd && r.min_eig >= -1e-10 * r.lambda_max)) {
                ++failures;
            }
        }
        o.detail += families[f] + " " + std::to_string(200 - failures) + "/200 (worst min_eig/lambda_max " +
                    fmt(worst) + "); ";
        o.pass = o.pass && failures == 0;
    }
    return o;
}

Outcome factorization_identity() {
    Outcome o;
    std::mt19937_64 rng(2);
    std::uniform_int_distribution<int> count(1, 10);
    std::uniform_int_distribution<int> small_dim(1, 3);
    std::uniform_real_distribution<double> gap(0.5, 1.0);
    std::uniform_real_distribution<double> ell(0.2, 0.5);
    double worst = 0.0;
    int jittered = 0;
    for (int trial = 0; trial < 50; ++trial) {
        std::string text;
        const int d = small_dim(rng);
        const std::string base = "gauss(ell=" + format_double(ell(rng)) + ",dim=" + std::to_string(d) + ")";
        switch (trial % 3) {
        case 0:
            text = base;
            break;
        case 1:
            text = "separable(B=" + matrix_literal(random_psd(rng, d) + Matrix::Identity(d, d)) +
                   ",base=gauss(ell=" + format_double(ell(rng)) + "))";
            break;
        default:
            text = "normalized(inner=" + base + ")";
            break;
        }
        const auto k = OperatorKernel::parse(text);
        std::vector<Site> sites;
        double x = 0.0;
        for (int i = count(rng); i > 0; --i) {
            sites.push_back(Site{x});
            x += gap(rng);
        }
        BlockGram g = assemble_gram(k, sites);
        factorize(g);
        if (g.jitter_used() != 0.0) {
            ++jittered;
            continue;
        }
        const Matrix& l = *g.factor();
        const Index dd = k.output_dim();
        double err = 0.0;
        for (std::size_t i = 0; i < sites.size(); ++i) {
            for (std::size_t j = 0; j < sites.size(); ++j) {
                const Matrix li = l.middleRows(static_cast<Index>(i) * dd, dd);
                const Matrix lj = l.middleRows(static_cast<Index>(j) * dd, dd);
                err = std::max(err, max_abs(li * lj.transpose() - k.evaluate(sites[i], sites[j])));
            }
        }
        worst = std::max(worst, err / (1.0 + max_abs(g.data())));
    }
    o.pass = jittered == 0 && worst <= 1e-8;
    o.detail = "max relative block error " + fmt(worst) + ", instances needing jitter " + std::to_string(jittered);
    return o;
}

Outcome covariance_suite() {
    Outcome o;
    for (int d : {1, 3}) {
        const auto ctx = make_context(OperatorKernel::parse("normalized(inner=gauss(sigma=1.5,ell=0.5,dim=" +
                                                            std::to_string(d) + "))"),
                                      equispaced_grid({0, 1}, 5));
        const auto report = verify_identities(ctx, nullptr, 100);
        double worst = 0.0;
        for (const auto& r : report.results) {
            if (!r.informational) {
                worst = std::max(worst, r.max_residual);
            }
        }
        o.pass = o.pass && report.all_pass() && worst <= 1e-8;
        o.detail += "d=" + std::to_string(d) + ": " + std::to_string(report.results.size()) +
                    " identities, max residual " + fmt(worst) + "; ";
    }
    return o;
}

Outcome isometry_projection() {
    std::mt19937_64 rng(4);
    const auto ctx =
        make_context(OperatorKernel::parse("normalized(inner=gauss(sigma=2,ell=0.7,dim=2))"), equispaced_grid({0, 2}, 6));
    std::uniform_int_distribution<Index> site(0, ctx->n() - 1);
    double iso = 0.0;
    double idem = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const Index i = site(rng);
        const HVec a = random_vec(rng, 2);
        iso = std::max(iso, std::abs(feature_embed(ctx, i, a).norm() - a.norm()));
        const auto x = random_element(rng, ctx);
        const auto px = frame_projection(ctx, i, x);
        idem = std::max(idem, (frame_projection(ctx, i, px) - px).norm() / std::max(x.norm(), 1e-300));
    }
    return {iso <= 1e-10 && idem <= 1e-8,
            "max | |V a| - |a| | " + fmt(iso) + ", max |P^2 x - P x| / |x| " + fmt(idem)};
}

Outcome extended_family() {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<Index> site(0, 3);
    const auto k = OperatorKernel::parse("gauss(sigma=1.3,ell=0.6,dim=2)");
    const auto sites = equispaced_grid({0, 1.5}, 4);
    const auto ctx = make_context(k, sites);
    const auto fam = random_transform_family(ctx, 55, false);
    double closed = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const Index s = site(rng);
        const Index t = site(rng);
        const HVec b = random_vec(rng, 2);
        const HVec formula = fam[s].transpose() * k.evaluate(sites[static_cast<std::size_t>(s)],
                                                              sites[static_cast<std::size_t>(t)]) *
                             fam[t] * b;
        const HVec composed = transformed_adjoint(fam, s, transformed_embed(fam, t, b));
        closed = std::max(closed, max_abs(formula - composed) / (1.0 + max_abs(formula)));
    }

    const auto nctx = make_context(OperatorKernel::parse("normalized(inner=gauss(sigma=1.3,ell=0.6,dim=2))"), sites);
    const auto unitary = random_transform_family(nctx, 56, true);
    double iso = 0.0;
    double idem = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const Index i = site(rng);
        const HVec a = random_vec(rng, 2);
        iso = std::max(iso, std::abs(transformed_embed(unitary, i, a).norm() - a.norm()));
        const auto x = random_element(rng, nctx);
        const std::vector<Index> once{i};
        const auto px = chain_apply(unitary, once, x);
        idem = std::max(idem, (chain_apply(unitary, once, px) - px).norm() / std::max(x.norm(), 1e-300));
    }
    return {unitary.unitary() && closed <= 1e-10 && iso <= 1e-10 && idem <= 1e-8,
            "closed form vs composition " + fmt(closed) + ", W isometry " + fmt(iso) + ", W projection " + fmt(idem)};
}

Outcome chain_oracle() {
    std::mt19937_64 rng(6);
    std::uniform_int_distribution<Index> site(0, 3);
    std::uniform_int_distribution<int> length(1, 4);
    const auto ctx = make_context(OperatorKernel::parse("gauss(sigma=1.1,ell=0.8,dim=2)"), equispaced_grid({0, 2}, 4));
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto fam = random_transform_family(ctx, 600 + static_cast<std::uint64_t>(trial), trial % 2 == 0);
        std::vector<Index> chain(static_cast<std::size_t>(length(rng)));
        for (auto& i : chain) {
            i = site(rng);
        }
        const auto x = random_element(rng, ctx);
        Matrix product = Matrix::Identity(ctx->size(), ctx->size());
        for (Index i : chain) {
            product = product * oracle::projection_operator(ctx->gram_matrix(), 2, i, fam[i] * fam[i].transpose());
        }
        const Vector expected = product * x.coeffs();
        const Vector got = chain_apply(fam, chain, x).coeffs();
        worst = std::max(worst, max_abs(got - expected) / (1.0 + max_abs(expected)));
    }
    return {worst <= 1e-10, "max relative coefficient error " + fmt(worst)};
}

Outcome mercer_expansion() {
    const auto ctx = make_context(OperatorKernel::parse("gauss"), equispaced_grid({0, 1}, 10));
    const auto onb = onb_expansion(ctx, 1e-12);
    const double err = reconstruction_error(onb);
    return {err <= 1e-8, std::to_string(onb.basis.size()) + " basis functions, reconstruction error " + fmt(err)};
}

Outcome continuity_modulus() {
    const auto k = OperatorKernel::parse("gauss(sigma=1,ell=1)");
    const HVec one = HVec::Ones(1);
    double lo = 1e300;
    double hi = -1e300;
    for (double s : {-3.0, -0.4, 0.0, 0.25, 1.0, 7.5}) {
        // The realized distance (s + h) - s, which is what the kernel sees.
        const double h = (s + 1e-3) - s;
        const double ratio = continuity_increment(k, Site{s}, Site{s + h}, one) / (h * h);
        lo = std::min(lo, ratio);
        hi = std::max(hi, ratio);
    }
    double excess = -1e300;
    for (int step = 1; step <= 10000; ++step) {
        for (double s : {0.0, 0.3, -2.0}) {
            const double h = (s + step / 10000.0) - s;
            excess = std::max(excess, continuity_increment(k, Site{s}, Site{s + h}, one) - h * h);
        }
    }
    // Also tiny h, where cancellation is the concern.
    for (double nominal : {1e-12, 1e-8, 1e-6, 1e-4}) {
        const double h = (0.5 + nominal) - 0.5;
        excess = std::max(excess, continuity_increment(k, Site{0.5}, Site{0.5 + h}, one) - h * h);
    }
    return {lo >= 0.999999 && hi <= 1.000001 && excess <= 0.0,
            "ratio at h=1e-3 in [" + std::to_string(lo) + ", " + std::to_string(hi) + "], max(increment - h^2) " +
                fmt(excess)};
}

Outcome compactness() {
    const auto gauss = OperatorKernel::parse("gauss");
    const std::vector<Index> counts{100};
    const auto profile = spectral_decay_profile(gauss, counts, {0, 1});
    const double ratio = profile[0].eigenvalues[9] / profile[0].eigenvalues[0];
    // Independent eigenvalue oracle on the same grid.
    std::vector<double> xs;
    for (const Site& s : equispaced_grid({0, 1}, 100)) {
        xs.push_back(s[0]);
    }
    const auto ref = oracle::jacobi_eigenvalues(oracle::scalar_gram(xs, [](double s, double t) {
        return oracle::gauss(s, t);
    }));
    const double ref_ratio = ref[9] / ref[0];
    const bool oracle_agrees = std::abs(profile[0].eigenvalues[0] - ref[0]) <= 1e-10 * ref[0] &&
                               std::abs(ratio - ref_ratio) <= 1e-12;

    // diagexp3: the first component is the constant kernel, a rank-one principal block.
    const Index n = 40;
    BlockGram g = assemble_gram(OperatorKernel::parse("diagexp3"), equispaced_grid({0, 1}, n));
    Matrix constant_block(n, n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
            constant_block(i, j) = g.data()(3 * i, 3 * j);
        }
    }
    BlockGram sub = gram_from_matrix(constant_block, 1);
    const Index rank = psd_check(sub).effective_rank.at(1e-6);
    const double top = sub.spectrum()->eigenvalues[0];
    return {ratio <= 1e-8 && oracle_agrees && rank == 1 && std::abs(top - static_cast<double>(n)) <= 1e-9 * n,
            "gaussian lambda_10/lambda_1 " + fmt(ratio) + " (oracle " + fmt(ref_ratio) +
                "), diagexp3 constant component effective rank " + std::to_string(rank)};
}

Outcome gp_recovery() {
    const auto ctx = make_context(OperatorKernel::parse("gauss"), scalar_sites({0.0, 1.0}));
    const auto a = sample_paths(ctx, 50000, 0);
    const auto b = sample_paths(ctx, 50000, 0);
    const auto report = covariance_error_report(a);
    const bool identical = a.paths == b.paths;
    return {report.max_abs_err <= 0.03 && report.pass && identical,
            "max |C - (G + eps I)| " + fmt(report.max_abs_err) + " (4 s.e. " + fmt(report.mc_tolerance) +
                "), repeat run bitwise identical: " + (identical ? "yes" : "no")};
}

Outcome fault_injection() {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "opkern_acceptance_fault";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const auto sites = equispaced_grid({0, 1}, 5);
    Matrix g = assemble_gram(OperatorKernel::parse("gauss"), sites).data();
    g(2, 2) += 0.1;
    {
        std::ofstream f(dir / "corrupted.csv");
        write_matrix_csv(f, g);
    }
    const std::string command = std::string("\"") + OPKERN_TOOL_PATH +
                                "\" verify --kernel gauss --sites \"grid(0,1,5)\" --trials 20 --quiet --raw \"" +
                                (dir / "corrupted.csv").string() + "\" --out \"" + dir.string() + "\" 2>/dev/null";
    const int status = std::system(command.c_str());
    const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return {code == 3, "opkern verify exit code " + std::to_string(code)};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> criteria{
        {1, "PSD zoo", 30, psd_zoo},
        {2, "factorization identity", 10, factorization_identity},
        {3, "covariance identity suite", 5, covariance_suite},
        {4, "isometry and projection", 5, isometry_projection},
        {5, "extended transform family", 5, extended_family},
        {6, "chain oracle", 5, chain_oracle},
        {7, "orthonormal expansion", 2, mercer_expansion},
        {8, "continuity modulus", 1, continuity_modulus},
        {9, "compactness surrogate", 5, compactness},
        {10, "GP covariance recovery", 20, gp_recovery},
        {11, "fault injection through the CLI", 2, fault_injection},
    };

    CLI::App app{"opkern acceptance suite"};
    int only = 0;
    app.add_option("--criterion", only, "Run a single criterion (1-11)")->check(CLI::Range(1, 11));
    CLI11_PARSE(app, argc, argv);

    bool all = true;
    for (const Criterion& c : criteria) {
        if (only != 0 && c.id != only) {
            continue;
        }
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_budget = seconds <= c.budget_seconds;
        const bool pass = o.pass && in_budget;
        all = all && pass;
        std::cout << (pass ? "PASS" : "FAIL") << " criterion " << c.id << ": " << c.title << " | " << o.detail
                  << " | " << fmt(seconds) << " s (budget " << c.budget_seconds << " s"
                  << (in_budget ? "" : ", exceeded") << ")" << std::endl;
    }
    return all ? 0 : 1;
}
