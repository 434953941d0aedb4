#include <doctest.h>

#include "oracles.hpp"
#include "opkern/error.hpp"
#include "opkern/gram.hpp"
#include "opkern/kernels.hpp"

#include <cmath>
#include <random>

using namespace opkern;

namespace {

const double e_inv = std::exp(-1.0);

std::vector<OperatorKernel> square_zoo() {
    return {
        OperatorKernel::parse("gauss(sigma=1.5,ell=0.7,dim=2)"),
        OperatorKernel::parse("const(c=2,dim=2)"),
        OperatorKernel::parse("diagexp3"),
        OperatorKernel::parse("rational2"),
        OperatorKernel::parse("separable(B=[[2,1],[1,1]],base=gauss(ell=0.5))"),
        OperatorKernel::parse("normalized(inner=separable(B=[[2,1],[1,1]],base=gauss(sigma=3)))"),
        OperatorKernel::parse("normalized(inner=gauss(sigma=2,dim=3))"),
    };
}

Site random_site(std::mt19937_64& rng, Index m) {
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    Vector v(m);
    for (Index k = 0; k < m; ++k) {
        v[k] = u(rng);
    }
    return Site(v);
}

}  // namespace

TEST_CASE("evaluate: worked values") {
    SUBCASE("gaussian at coincident sites") {
        const auto k = OperatorKernel::parse("gauss(sigma=1,ell=1,dim=1)");
        const Matrix m = k.evaluate(Site{0.0}, Site{0.0});
        REQUIRE(m.rows() == 1);
        CHECK(m(0, 0) == 1.0);
    }
    SUBCASE("diagexp3 at distance one") {
        const Matrix m = OperatorKernel::parse("diagexp3").evaluate(Site{0.0}, Site{1.0});
        Matrix expected = Matrix::Zero(3, 3);
        expected.diagonal() << 1.0, e_inv, e_inv;
        CHECK(max_abs(m - expected) == doctest::Approx(0.0));
        CHECK(m(1, 1) == doctest::Approx(0.367879).epsilon(1e-6));
    }
    SUBCASE("rational2 at distance one") {
        const Matrix m = OperatorKernel::parse("rational2").evaluate(Site{2.0}, Site{1.0});
        CHECK(max_abs(m - Matrix::Constant(2, 2, 0.5)) == 0.0);
    }
    SUBCASE("rational2 and diagexp3 use Euclidean distance in R^m") {
        const Matrix m = OperatorKernel::parse("rational2").evaluate(Site{0.0, 0.0}, Site{3.0, 4.0});
        CHECK(m(0, 0) == doctest::Approx(1.0 / 6.0));
        CHECK(m(0, 1) == doctest::Approx(1.0 / 26.0));
    }
}

TEST_CASE("evaluate: dimension mismatch") {
    const auto k = OperatorKernel::parse("gauss");
    CHECK_THROWS_AS(k.evaluate(Site{0.0}, Site{0.0, 1.0}), DimensionError);
    CHECK_THROWS_AS(Site(Vector::Constant(1, NAN)), DomainError);
}

TEST_CASE("property: exact symmetry K(s,t) = K(t,s)^T") {
    std::mt19937_64 rng(1);
    for (const auto& k : square_zoo()) {
        for (Index m : {1, 3}) {
            for (int trial = 0; trial < 50; ++trial) {
                const Site s = random_site(rng, m);
                const Site t = random_site(rng, m);
                CHECK(max_abs(k.evaluate(s, t) - k.evaluate(t, s).transpose()) == 0.0);
                const Matrix diag = k.evaluate(s, s);
                CHECK(max_abs(diag - diag.transpose()) == 0.0);
            }
        }
    }
}

TEST_CASE("property: normalized kernels have identity diagonal blocks") {
    std::mt19937_64 rng(2);
    const auto k = OperatorKernel::parse("normalized(inner=separable(B=[[3,1,0],[1,2,0.5],[0,0.5,1]],base=gauss(sigma=4)))");
    for (int trial = 0; trial < 100; ++trial) {
        const Site s = random_site(rng, 2);
        CHECK(max_abs(k.evaluate(s, s) - Matrix::Identity(3, 3)) <= 1e-10);
    }
}

TEST_CASE("normalized rejects singular diagonal blocks") {
    const auto k = OperatorKernel::parse("normalized(inner=rational2)");
    CHECK_THROWS_AS(k.evaluate(Site{0.0}, Site{1.0}), DomainError);
    const auto zero = OperatorKernel::parse("normalized(inner=const(c=0))");
    CHECK_THROWS_AS(zero.evaluate(Site{0.0}, Site{0.0}), DomainError);
}

TEST_CASE("induced_scalar") {
    const auto lifted = OperatorKernel::parse("gauss(sigma=1,ell=1,dim=3)");
    CHECK(induced_scalar(lifted, Site{0.3}, HVec::Unit(3, 0), Site{-1.2}, HVec::Unit(3, 1)) == 0.0);

    const auto diag = OperatorKernel::parse("diagexp3");
    const HVec e2 = HVec::Unit(3, 1);
    CHECK(induced_scalar(diag, Site{0.0}, e2, Site{1.0}, e2) == doctest::Approx(0.367879).epsilon(1e-6));

    const auto g1 = OperatorKernel::parse("gauss");
    CHECK(induced_scalar(g1, Site{0.0}, HVec::Ones(1), Site{1.0}, HVec::Ones(1)) ==
          doctest::Approx(0.606531).epsilon(1e-6));

    CHECK_THROWS_AS(induced_scalar(diag, Site{0.0}, HVec::Ones(2), Site{1.0}, e2), DimensionError);
}

TEST_CASE("property: induced scalar matches a^T K b and is symmetric") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> normal;
    for (const auto& k : square_zoo()) {
        const Index d = k.dim();
        for (int trial = 0; trial < 40; ++trial) {
            const Site s = random_site(rng, 2);
            const Site t = random_site(rng, 2);
            HVec a(d), b(d);
            for (Index i = 0; i < d; ++i) {
                a[i] = normal(rng);
                b[i] = normal(rng);
            }
            const double direct = a.transpose() * k.evaluate(s, t) * b;
            const double induced = induced_scalar(k, s, a, t, b);
            CHECK(std::abs(induced - direct) <= 1e-14 * (1.0 + std::abs(direct)));
            CHECK(std::abs(induced - induced_scalar(k, t, b, s, a)) <= 1e-14 * (1.0 + std::abs(direct)));
        }
    }
}

TEST_CASE("continuity_increment") {
    const auto g = OperatorKernel::parse("gauss");
    const HVec one = HVec::Ones(1);
    CHECK(continuity_increment(g, Site{0.4}, Site{0.4}, one) == 0.0);
    CHECK(continuity_increment(g, Site{0.0}, Site{1.0}, one) == doctest::Approx(2.0 * (1.0 - std::exp(-0.5))));
    CHECK(continuity_increment(g, Site{0.0}, Site{1.0}, one) == doctest::Approx(0.786939).epsilon(1e-6));

    // Taylor oracle: increment / h^2 = (1 - e^{-x}) / x with x = h^2 / 2.
    const double h = 1e-3;
    const double x = h * h / 2.0;
    const double oracle = -std::expm1(-x) / x;
    const double ratio = continuity_increment(g, Site{0.0}, Site{h}, one) / (h * h);
    CHECK(std::abs(ratio - 1.0) <= 1e-6);
    CHECK(std::abs(ratio - oracle) <= 1e-8);

    CHECK_THROWS_AS(continuity_increment(g, Site{0.0}, Site{1.0}, HVec::Ones(2)), DimensionError);
}

TEST_CASE("property: gaussian continuity modulus") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal;
    for (int trial = 0; trial < 300; ++trial) {
        const double sigma = 0.2 + 3.0 * unit(rng);
        const double ell = 0.1 + 2.0 * unit(rng);
        KernelSpec spec{GaussianSpec{sigma, ell, 2}};
        const OperatorKernel k(spec);
        const double h = ell * (1.0 - unit(rng));
        HVec a(2);
        a << normal(rng), normal(rng);
        a.normalize();
        const double s = 4.0 * unit(rng) - 2.0;
        const double inc = continuity_increment(k, Site{s}, Site{s + h}, a);
        CHECK(inc >= 0.0);
        CHECK(inc <= sigma * sigma / (ell * ell) * h * h * (1.0 + 1e-12));
    }
}

TEST_CASE("two_space_form") {
    SUBCASE("fully symmetric input") {
        const auto k = OperatorKernel::parse("twospace(M=[[1,0],[0,1]],base=const)");
        const HVec e1 = HVec::Unit(2, 0);
        const auto r = two_space_form(k, Site{0.0}, e1, e1, Site{1.0}, e1, e1);
        CHECK(r.value == 1.0);
        CHECK(r.hermitian_defect == 0.0);
    }
    SUBCASE("orthogonal vectors") {
        const auto k = OperatorKernel::parse("twospace(M=[[1,0],[0,1]],base=gauss)");
        const HVec zero = HVec::Zero(2);
        const auto r = two_space_form(k, Site{0.0}, HVec::Unit(2, 0), HVec::Unit(2, 1), Site{1.0}, zero, zero);
        CHECK(r.value == 0.0);
        CHECK(r.hermitian_defect == 0.0);
    }
    SUBCASE("asymmetric map: direct evaluation of both orderings") {
        const auto k = OperatorKernel::parse("twospace(M=[[1,0],[0,2]],base=const)");
        HVec a(2), b(2), c(2), d(2);
        a << 1, 0;
        b << 0, 1;
        c << 0, 1;
        d << 1, 0;
        // b^T M a = 0 and d^T M c = 0.
        auto r = two_space_form(k, Site{0.0}, a, b, Site{1.0}, c, d);
        CHECK(r.value == 0.0);
        CHECK(r.hermitian_defect == 0.0);
        // d = (0, 1): d^T M c = 2 while b^T M a = 0.
        d << 0, 1;
        r = two_space_form(k, Site{0.0}, a, b, Site{1.0}, c, d);
        CHECK(r.value == 0.0);
        CHECK(r.hermitian_defect == 2.0);
    }
    SUBCASE("non-square map") {
        const auto k = OperatorKernel::parse("twospace(M=[[1,2,3]],base=gauss)");
        CHECK(k.input_dim() == 3);
        CHECK(k.output_dim() == 1);
        CHECK_FALSE(k.is_square());
        CHECK_THROWS_AS(k.dim(), DimensionError);
        const auto r = two_space_form(k, Site{0.0}, HVec::Ones(3), HVec::Ones(1), Site{0.0}, HVec::Ones(3), HVec::Ones(1));
        CHECK(r.value == 6.0);
        CHECK_THROWS_AS(two_space_form(k, Site{0.0}, HVec::Ones(1), HVec::Ones(1), Site{0.0}, HVec::Ones(3),
                                       HVec::Ones(1)),
                        DimensionError);
    }
    SUBCASE("requires a twospace kernel") {
        const auto k = OperatorKernel::parse("gauss");
        CHECK_THROWS_AS(two_space_form(k, Site{0.0}, HVec::Ones(1), HVec::Ones(1), Site{0.0}, HVec::Ones(1),
                                       HVec::Ones(1)),
                        DomainError);
    }
}

TEST_CASE("property: positive definite kernels give PSD Grams") {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> count(1, 20);
    for (const auto& k : square_zoo()) {
        if (!k.spec().is_positive_definite_family()) {
            continue;
        }
        for (int trial = 0; trial < 30; ++trial) {
            std::vector<Site> sites;
            const int n = count(rng);
            for (int i = 0; i < n; ++i) {
                sites.push_back(random_site(rng, 1 + trial % 3));
            }
            BlockGram g = assemble_gram(k, sites);
            CHECK(psd_check(g).psd);
        }
    }
}

TEST_CASE("rational2 is not a positive definite kernel") {
    // K = k+(r) [[1,1],[1,1]] + k-(r) [[1,-1],[-1,1]] with k-(r) = (1/(1+r) - 1/(1+r^2)) / 2.
    // k-(0) = 0 but k-(r) < 0 on (0, 1), so the k- Gram on two sites has a zero diagonal and a
    // nonzero off-diagonal entry: one negative eigenvalue equal to -|k-(r)|.
    const double r = 0.5;
    const double k_minus = 0.5 * (1.0 / (1.0 + r) - 1.0 / (1.0 + r * r));
    const Matrix g_minus = oracle::scalar_gram({0.0, r}, [&](double s, double t) {
        const double dist = std::abs(s - t);
        return 0.5 * (1.0 / (1.0 + dist) - 1.0 / (1.0 + dist * dist));
    });
    const auto oracle_eigs = oracle::jacobi_eigenvalues(g_minus);
    CHECK(oracle_eigs.back() == doctest::Approx(-std::abs(k_minus)));

    BlockGram g = assemble_gram(OperatorKernel::parse("rational2"), scalar_sites({0.0, r}));
    const SpectrumReport& report = psd_check(g);
    CHECK_FALSE(report.psd);
    // The 4x4 Gram is the direct sum of 2 * (k+ Gram) and 2 * (k- Gram).
    CHECK(report.min_eig == doctest::Approx(2.0 * oracle_eigs.back()).epsilon(1e-12));
}
