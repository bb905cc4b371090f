#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "debias/closed_form.hpp"
#include "debias/debias_iter.hpp"
#include "debias/errors.hpp"
#include "debias/harness.hpp"
#include "debias/l1_analysis.hpp"
#include "debias/linops.hpp"
#include "debias/nlm.hpp"
#include "debias/subspace.hpp"

namespace py = pybind11;
using namespace debias;

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Signal image_from(const RowMatrix& img) {
  Vector flat = Eigen::Map<const Vector>(img.data(), img.size());
  return Signal::grid(std::move(flat), img.rows(), img.cols());
}

RowMatrix image_to(const Signal& s) {
  return Eigen::Map<const RowMatrix>(s.values().data(), s.shape().rows, s.shape().cols);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Method-bias removal for locally affine restoration estimators";

  py::register_exception<Error>(m, "DebiasError", PyExc_RuntimeError);

  py::class_<LinearMap>(m, "LinearMap")
      .def_static("from_matrix", &LinearMap::from_matrix, py::arg("matrix"))
      .def_static("identity", &LinearMap::identity, py::arg("n"))
      .def_property_readonly("domain_dim", &LinearMap::domain_dim)
      .def_property_readonly("codomain_dim", &LinearMap::codomain_dim)
      .def_property_readonly("norm_bound", &LinearMap::norm_bound)
      .def("apply", &LinearMap::apply, py::arg("x"))
      .def("apply_adjoint", &LinearMap::apply_adjoint, py::arg("y"))
      .def("dense", &LinearMap::dense);

  m.def("grad_1d", &grad_1d, py::arg("n"));
  m.def(
      "grad_2d", [](Index rows, Index cols) { return grad_2d(Shape::grid(rows, cols)); },
      py::arg("rows"), py::arg("cols"));
  m.def(
      "gauss_conv",
      [](Index rows, Index cols, double bandwidth) {
        return gauss_conv(Shape::grid(rows, cols), bandwidth);
      },
      py::arg("rows"), py::arg("cols"), py::arg("bandwidth"));
  m.def("op_norm", &op_norm, py::arg("op"), py::arg("iters") = 200, py::arg("seed") = 0);

  py::class_<SubspaceBasis>(m, "SubspaceBasis")
      .def(py::init([](Matrix columns, std::optional<Vector> offset) {
             const Index n = columns.rows();
             return SubspaceBasis::affine(std::move(columns), offset.value_or(Vector::Zero(n)));
           }),
           py::arg("columns"), py::arg("offset") = py::none())
      .def_readonly("columns", &SubspaceBasis::columns)
      .def_readonly("offset", &SubspaceBasis::offset)
      .def_readonly("orthonormal", &SubspaceBasis::orthonormal)
      .def_property_readonly("dim", &SubspaceBasis::dim);

  py::class_<BiasReport>(m, "BiasReport")
      .def_readonly("method_bias", &BiasReport::method_bias)
      .def_readonly("model_bias", &BiasReport::model_bias)
      .def_readonly("total_bias", &BiasReport::total_bias)
      .def_readonly("method_norm", &BiasReport::method_norm)
      .def_readonly("model_norm", &BiasReport::model_norm)
      .def_readonly("total_norm", &BiasReport::total_norm);

  m.def("orthonormalize", &orthonormalize, py::arg("basis"), py::arg("rel_tol") = kRankTolerance);
  m.def("project", &project, py::arg("u"), py::arg("basis"));
  m.def("bias_decompose", &bias_decompose, py::arg("u_f0"), py::arg("u0"), py::arg("model"));
  m.def("debias_cls", &debias_cls, py::arg("u_star"), py::arg("basis"), py::arg("phi"),
        py::arg("f"));
  m.def(
      "cls",
      [](const LinearMap& phi, const Vector& f, const Vector& b, const Matrix& a) {
        auto r = cls(phi, f, b, a);
        return py::make_tuple(r.solution, r.model);
      },
      py::arg("phi"), py::arg("f"), py::arg("b"), py::arg("a"));

  py::class_<EstimateWithModel>(m, "EstimateWithModel")
      .def_readonly("estimate", &EstimateWithModel::estimate)
      .def_readonly("model", &EstimateWithModel::model)
      .def_readonly("weak_bias", &EstimateWithModel::weak_bias)
      .def_readonly("support", &EstimateWithModel::support);

  m.def("least_squares", &least_squares, py::arg("phi"), py::arg("f"));
  m.def("tikhonov", &tikhonov, py::arg("phi"), py::arg("gamma"), py::arg("lam"), py::arg("f"),
        py::arg("compute_model") = true);
  m.def("hard_threshold", &hard_threshold, py::arg("f"), py::arg("lam"));
  m.def("soft_threshold", &soft_threshold, py::arg("f"), py::arg("lam"));

  py::class_<PdParams>(m, "PdParams")
      .def(py::init<>())
      .def_static("defaults_for", &PdParams::defaults_for, py::arg("gamma"))
      .def_readwrite("sigma", &PdParams::sigma)
      .def_readwrite("tau", &PdParams::tau)
      .def_readwrite("theta", &PdParams::theta)
      .def_readwrite("beta", &PdParams::beta)
      .def_readwrite("max_iters", &PdParams::max_iters)
      .def_readwrite("tol", &PdParams::tol);

  py::class_<SupportInfo>(m, "SupportInfo")
      .def(py::init([](std::vector<Index> cosupport, Vector signs) {
             SupportInfo s;
             s.cosupport = std::move(cosupport);
             s.signs = std::move(signs);
             return s;
           }),
           py::arg("cosupport"), py::arg("signs"))
      .def_readonly("cosupport", &SupportInfo::cosupport)
      .def_readonly("signs", &SupportInfo::signs)
      .def_readonly("alpha", &SupportInfo::alpha);

  py::class_<PdResult>(m, "PdResult")
      .def_readonly("u_star", &PdResult::u_star)
      .def_readonly("z_star", &PdResult::z_star)
      .def_readonly("iters", &PdResult::iters)
      .def_readonly("converged", &PdResult::converged);

  py::class_<PdDebiasedResult>(m, "PdDebiasedResult")
      .def_readonly("u_star", &PdDebiasedResult::u_star)
      .def_readonly("tilde_u_star", &PdDebiasedResult::tilde_u_star)
      .def_readonly("support", &PdDebiasedResult::support)
      .def_readonly("iters", &PdDebiasedResult::iters)
      .def_readonly("converged", &PdDebiasedResult::converged)
      .def_readonly("support_changed_at", &PdDebiasedResult::support_changed_at);

  m.def(
      "solve_pd",
      [](const LinearMap& phi, const LinearMap& gamma, double lam, const Vector& f,
         std::optional<PdParams> params) {
        return solve_pd(phi, gamma, lam, f, params.value_or(PdParams::defaults_for(gamma)));
      },
      py::arg("phi"), py::arg("gamma"), py::arg("lam"), py::arg("f"),
      py::arg("params") = py::none());
  m.def(
      "solve_pd_debiased",
      [](const LinearMap& phi, const LinearMap& gamma, double lam, const Vector& f,
         std::optional<PdParams> params) {
        return solve_pd_debiased(phi, gamma, lam, f,
                                 params.value_or(PdParams::defaults_for(gamma)));
      },
      py::arg("phi"), py::arg("gamma"), py::arg("lam"), py::arg("f"),
      py::arg("params") = py::none());
  m.def("explicit_solution", &explicit_solution, py::arg("phi"), py::arg("gamma"), py::arg("lam"),
        py::arg("f"), py::arg("support"));
  m.def("explicit_debias", &explicit_debias, py::arg("phi"), py::arg("gamma"), py::arg("f"),
        py::arg("support"));
  m.def(
      "cosupport_bruteforce",
      [](const LinearMap& phi, const LinearMap& gamma, double lam, const Vector& f) {
        auto r = cosupport_bruteforce(phi, gamma, lam, f);
        return py::make_tuple(r.support, r.u_star);
      },
      py::arg("phi"), py::arg("gamma"), py::arg("lam"), py::arg("f"));
  m.def("detect_support", &detect_support, py::arg("z"), py::arg("v"), py::arg("gamma"),
        py::arg("sigma"), py::arg("lam"), py::arg("beta"));

  py::class_<NlmConfig>(m, "NlmConfig")
      .def(py::init([](int patch_half, int window_half, double noise_sigma, int levels) {
             return NlmConfig::exponential(patch_half, window_half, noise_sigma, levels);
           }),
           py::arg("patch_half") = 1, py::arg("window_half") = 3, py::arg("noise_sigma") = 20.0,
           py::arg("levels") = 16)
      .def_readonly("patch_half", &NlmConfig::patch_half)
      .def_readonly("window_half", &NlmConfig::window_half)
      .def_readonly("noise_sigma", &NlmConfig::noise_sigma)
      .def_readonly("kernel_cutoffs", &NlmConfig::kernel_cutoffs)
      .def("kernel", &NlmConfig::kernel, py::arg("distance"));

  py::class_<NlmWeights>(m, "NlmWeights")
      .def_property_readonly("normalizer", [](const NlmWeights& w) {
        return image_to(Signal(w.normalizer, w.shape));
      });

  m.def(
      "nlm_weights", [](const RowMatrix& f, const NlmConfig& cfg) {
        return nlm_weights(image_from(f), cfg);
      },
      py::arg("f"), py::arg("config"));
  m.def(
      "nlm_apply",
      [](const RowMatrix& f, const NlmWeights& w) { return image_to(nlm_apply(image_from(f), w)); },
      py::arg("f"), py::arg("weights"));
  m.def(
      "nlm_jvp",
      [](const RowMatrix& d, const NlmWeights& w) { return image_to(nlm_jvp(image_from(d), w)); },
      py::arg("delta"), py::arg("weights"));

  py::class_<DebiasConfig>(m, "DebiasConfig")
      .def(py::init<>())
      .def_readwrite("epsilon", &DebiasConfig::epsilon)
      .def_readwrite("max_dirs", &DebiasConfig::max_dirs)
      .def_readwrite("stop_tol", &DebiasConfig::stop_tol)
      .def_readwrite("seed", &DebiasConfig::seed)
      .def_readwrite("drop_tol", &DebiasConfig::drop_tol);

  py::class_<DebiasRun>(m, "DebiasRun")
      .def_readonly("basis", &DebiasRun::basis)
      .def_readonly("tilde_u", &DebiasRun::tilde_u)
      .def_readonly("epsilon", &DebiasRun::epsilon)
      .def_readonly("converged", &DebiasRun::converged)
      .def_property_readonly("iterations",
                             [](const DebiasRun& r) { return r.history.size(); });

  m.def(
      "debias_general",
      [](const Vector& f, const Vector& u_star, const std::function<Vector(const Vector&)>& jvp,
         const LinearMap& phi, std::optional<DebiasConfig> cfg) {
        return debias_general(f, u_star, jvp, phi, cfg.value_or(DebiasConfig{}));
      },
      py::arg("f"), py::arg("u_star"), py::arg("jvp"), py::arg("phi"),
      py::arg("config") = py::none());

  m.def(
      "gen_pwc_1d",
      [](Index n, int pieces, Index min_piece_len, std::uint64_t seed) {
        return gen_pwc_1d(n, pieces, 0.0, 192.0, min_piece_len, seed).values();
      },
      py::arg("n"), py::arg("pieces"), py::arg("min_piece_len"), py::arg("seed") = 0);
  m.def(
      "awgn",
      [](const Vector& f, double sigma, std::uint64_t seed) {
        return awgn(Signal::line(f), sigma, seed).values();
      },
      py::arg("f"), py::arg("sigma"), py::arg("seed") = 0);
  m.def(
      "psnr",
      [](const Vector& u, const Vector& ref, double peak) {
        return psnr(Signal::line(u), Signal::line(ref), peak);
      },
      py::arg("u"), py::arg("ref"), py::arg("peak") = 255.0);
}
