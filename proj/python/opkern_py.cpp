#include "opkern/opkern.hpp"

#include <pybind11/eigen.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace opkern;

namespace {

Site to_site(const py::handle& item) {
    if (py::isinstance<py::float_>(item) || py::isinstance<py::int_>(item)) {
        return Site::scalar(item.cast<double>());
    }
    return Site(item.cast<Vector>());
}

/// Accepts a 1-D sequence of scalars or a sequence of coordinate sequences.
std::vector<Site> to_sites(const py::object& obj) {
    if (py::isinstance<py::str>(obj)) {
        return parse_sites(obj.cast<std::string>());
    }
    std::vector<Site> sites;
    for (const py::handle item : obj) {
        if (py::hasattr(item, "__len__") || py::isinstance<py::float_>(item) || py::isinstance<py::int_>(item)) {
            sites.push_back(to_site(item));
        } else {
            sites.push_back(Site::scalar(item.cast<double>()));
        }
    }
    return sites;
}

py::dict spectrum_dict(const SpectrumReport& r) {
    py::dict ranks;
    for (const auto& [tol, k] : r.effective_rank) {
        ranks[py::float_(tol)] = k;
    }
    py::dict d;
    d["eigenvalues"] = r.eigenvalues;
    d["eigenvectors"] = r.eigenvectors;
    d["lambda_max"] = r.lambda_max;
    d["min_eig"] = r.min_eig;
    d["trace"] = r.trace;
    d["psd"] = r.psd;
    d["effective_rank"] = ranks;
    return d;
}

py::dict cov_dict(const CovErrorReport& r) {
    py::dict d;
    d["max_abs_err"] = r.max_abs_err;
    d["per_block_err"] = r.per_block_err;
    d["mc_tolerance"] = r.mc_tolerance;
    d["pass"] = r.pass;
    return d;
}

}  // namespace

PYBIND11_MODULE(_opkern, m) {
    m.doc() = "Operator-valued kernels, their RKHS realizations and Gaussian process sampling.";

    static py::exception<Error> base(m, "Error", PyExc_RuntimeError);
    py::register_exception<ParseError>(m, "ParseError", base);
    py::register_exception<DomainError>(m, "DomainError", base);
    py::register_exception<DimensionError>(m, "DimensionError", base);
    py::register_exception<NumericalError>(m, "NumericalError", base);
    py::register_exception<ContextError>(m, "ContextError", base);

    py::class_<OperatorKernel>(m, "Kernel")
        .def(py::init([](const std::string& spec) { return OperatorKernel::parse(spec); }), py::arg("spec"))
        .def_property_readonly("canonical", &OperatorKernel::canonical)
        .def_property_readonly("output_dim", &OperatorKernel::output_dim)
        .def_property_readonly("input_dim", &OperatorKernel::input_dim)
        .def(
            "__call__",
            [](const OperatorKernel& k, const py::object& s, const py::object& t) {
                return Matrix(k.evaluate(to_site(s), to_site(t)));
            },
            py::arg("s"), py::arg("t"))
        .def("__repr__", [](const OperatorKernel& k) { return "Kernel('" + k.canonical() + "')"; });

    m.def(
        "induced_scalar",
        [](const OperatorKernel& k, const py::object& s, const HVec& a, const py::object& t, const HVec& b) {
            return induced_scalar(k, to_site(s), a, to_site(t), b);
        },
        py::arg("kernel"), py::arg("s"), py::arg("a"), py::arg("t"), py::arg("b"));
    m.def(
        "continuity_increment",
        [](const OperatorKernel& k, const py::object& s, const py::object& t, const HVec& a) {
            return continuity_increment(k, to_site(s), to_site(t), a);
        },
        py::arg("kernel"), py::arg("s"), py::arg("t"), py::arg("a"));

    m.def(
        "assemble_gram",
        [](const OperatorKernel& k, const py::object& sites) { return assemble_gram(k, to_sites(sites)).data(); },
        py::arg("kernel"), py::arg("sites"), "Block Gram matrix with G[i, j] = K(s_i, s_j).");
    m.def(
        "psd_check",
        [](const Matrix& g, Index d) {
            BlockGram gram = gram_from_matrix(g, d);
            return spectrum_dict(psd_check(gram));
        },
        py::arg("gram"), py::arg("d") = 1, "Eigen-spectrum certificate of a symmetric matrix.");
    m.def(
        "spectral_decay_profile",
        [](const OperatorKernel& k, const std::vector<Index>& counts, double lo, double hi) {
            py::list out;
            for (const SpectrumReport& r : spectral_decay_profile(k, counts, Interval{lo, hi})) {
                out.append(spectrum_dict(r));
            }
            return out;
        },
        py::arg("kernel"), py::arg("counts"), py::arg("lo") = 0.0, py::arg("hi") = 1.0);

    py::class_<RkhsContext, std::shared_ptr<RkhsContext>>(m, "Context")
        .def(py::init([](const OperatorKernel& k, const py::object& sites, double null_tol) {
                 return std::const_pointer_cast<RkhsContext>(make_context(k, to_sites(sites), null_tol));
             }),
             py::arg("kernel"), py::arg("sites"), py::arg("null_tol") = 1e-10)
        .def_property_readonly("n", &RkhsContext::n)
        .def_property_readonly("d", &RkhsContext::d)
        .def_property_readonly("hash", &RkhsContext::hash)
        .def_property_readonly("gram", &RkhsContext::gram_matrix)
        .def_property_readonly("jitter_used", [](const RkhsContext& c) { return c.gram().jitter_used(); })
        .def_property_readonly("kernel", &RkhsContext::kernel);

    py::class_<RkhsElement>(m, "Element")
        .def(py::init([](const std::shared_ptr<RkhsContext>& ctx, const Vector& c) { return RkhsElement(ctx, c); }),
             py::arg("context"), py::arg("coeffs"))
        .def_property_readonly("coeffs", &RkhsElement::coeffs)
        .def("norm", &RkhsElement::norm)
        .def("equals", &RkhsElement::equals)
        .def(
            "__call__",
            [](const RkhsElement& x, const py::object& t, const HVec& a) { return evaluate_element(x, to_site(t), a); },
            py::arg("t"), py::arg("a"))
        .def(py::self + py::self)
        .def(py::self - py::self)
        .def("__rmul__", [](const RkhsElement& x, double alpha) { return alpha * x; });

    m.def("inner_product", &inner_product, py::arg("x"), py::arg("y"));
    m.def(
        "feature_embed",
        [](const std::shared_ptr<RkhsContext>& ctx, Index i, const HVec& a) { return feature_embed(ctx, i, a); },
        py::arg("context"), py::arg("i"), py::arg("a"));
    m.def(
        "feature_adjoint",
        [](const std::shared_ptr<RkhsContext>& ctx, Index i, const RkhsElement& x) {
            return HVec(feature_adjoint(ctx, i, x));
        },
        py::arg("context"), py::arg("i"), py::arg("x"));
    m.def(
        "covariance",
        [](const std::shared_ptr<RkhsContext>& ctx, Index i) { return Matrix(covariance(ctx, i)); },
        py::arg("context"), py::arg("i"));
    m.def(
        "frame_projection",
        [](const std::shared_ptr<RkhsContext>& ctx, Index i, const RkhsElement& x) {
            return frame_projection(ctx, i, x);
        },
        py::arg("context"), py::arg("i"), py::arg("x"));

    m.def(
        "verify_identities",
        [](const std::shared_ptr<RkhsContext>& ctx, int trials, std::uint64_t seed, const std::string& family) {
            std::optional<TransformFamily> fam;
            if (family == "general" || family == "unitary") {
                fam = random_transform_family(ctx, seed, family == "unitary");
            } else if (family != "none") {
                throw DomainError("family must be none, general or unitary");
            }
            const IdentityReport report = verify_identities(ctx, fam ? &*fam : nullptr, trials, seed);
            py::dict out;
            for (const IdentityResult& r : report.results) {
                py::dict entry;
                entry["max_residual"] = r.max_residual;
                entry["tolerance"] = r.tolerance;
                entry["pass"] = r.pass;
                entry["informational"] = r.informational;
                out[py::str(r.name)] = entry;
            }
            return out;
        },
        py::arg("context"), py::arg("trials") = 100, py::arg("seed") = kDefaultIdentitySeed,
        py::arg("family") = "none");

    m.def(
        "sample_paths",
        [](const std::shared_ptr<RkhsContext>& ctx, Index count, std::uint64_t seed) {
            return RowMatrix(sample_paths(ctx, count, seed).paths);
        },
        py::arg("context"), py::arg("count"), py::arg("seed") = 0,
        "count x (n d) array; row p is path p, column i d + a is component a at site i.");
    m.def(
        "covariance_error_report",
        [](const std::shared_ptr<RkhsContext>& ctx, Index count, std::uint64_t seed) {
            return cov_dict(covariance_error_report(sample_paths(ctx, count, seed)));
        },
        py::arg("context"), py::arg("count"), py::arg("seed") = 0);

    m.def(
        "onb_expansion",
        [](const std::shared_ptr<RkhsContext>& ctx, double trunc_tol) {
            const OnbExpansion onb = onb_expansion(ctx, trunc_tol);
            Matrix coeffs(static_cast<Index>(onb.basis.size()), ctx->size());
            for (std::size_t k = 0; k < onb.basis.size(); ++k) {
                coeffs.row(static_cast<Index>(k)) = onb.basis[k].coeffs().transpose();
            }
            py::dict out;
            out["coeffs"] = coeffs;
            out["eigenvalues"] = onb.eigenvalues;
            out["reconstruction_error"] = reconstruction_error(onb);
            return out;
        },
        py::arg("context"), py::arg("trunc_tol") = 1e-12);
}
