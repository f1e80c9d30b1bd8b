#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <span>

#include "heavytail/copula.hpp"
#include "heavytail/errors.hpp"
#include "heavytail/joint_fit.hpp"
#include "heavytail/marginal_fit.hpp"
#include "heavytail/model.hpp"
#include "heavytail/moments.hpp"
#include "heavytail/tail_metrics.hpp"

namespace py = pybind11;
using namespace heavytail;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::span<const double> view(const Array& a) {
  if (a.ndim() != 1) throw py::value_error("expected a one-dimensional array");
  return {a.data(), static_cast<std::size_t>(a.shape(0))};
}

py::array_t<double> to_array(const std::vector<double>& v) {
  py::array_t<double> a(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), a.mutable_data());
  return a;
}

TailSide side_of(const std::string& s) {
  if (s == "lower") return TailSide::lower;
  if (s == "upper") return TailSide::upper;
  throw py::value_error("side must be 'lower' or 'upper'");
}

CopulaFamily family_of(const std::string& s) {
  const auto f = parse_copula_family(s);
  if (!f) throw py::value_error("unknown copula family '" + s + "'");
  return *f;
}

py::dict marginal_result(const MarginalFitResult& r) {
  py::dict d;
  d["params"] = r.params;
  d["residuals"] = std::vector<double>{r.residuals[1], r.residuals[2], r.residuals[3], r.residuals[4]};
  d["converged"] = r.converged;
  d["iterations"] = r.iterations;
  d["objective_trace"] = r.objective_trace;
  return d;
}

}  // namespace

PYBIND11_MODULE(heavytail, m) {
  m.doc() = "Multivariate heavy-tail model: sampling, moment fitting and tail diagnostics";

  static py::exception<Error> base(m, "Error", PyExc_ValueError);
  static py::exception<InvalidParameter> invalid(m, "InvalidParameter", base.ptr());
  static py::exception<DataError> data_error(m, "DataError", base.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const InvalidParameter& e) {
      invalid(e.what());
    } catch (const DataError& e) {
      data_error(e.what());
    } catch (const Error& e) {
      base(e.what());
    }
  });

  py::class_<MarginalParams>(m, "MarginalParams")
      .def(py::init([](double location, double right_tail, double left_tail, double scale) {
             return MarginalParams{location, right_tail, left_tail, scale};
           }),
           py::arg("location") = 0.0, py::arg("right_tail") = 0.0, py::arg("left_tail") = 0.0,
           py::arg("scale") = 1.0)
      .def_readwrite("location", &MarginalParams::location)
      .def_readwrite("right_tail", &MarginalParams::right_tail)
      .def_readwrite("left_tail", &MarginalParams::left_tail)
      .def_readwrite("scale", &MarginalParams::scale)
      .def("__repr__", [](const MarginalParams& p) {
        return "MarginalParams(location=" + std::to_string(p.location) + ", right_tail=" +
               std::to_string(p.right_tail) + ", left_tail=" + std::to_string(p.left_tail) +
               ", scale=" + std::to_string(p.scale) + ")";
      });

  py::class_<PairJointParams>(m, "PairJointParams")
      .def(py::init([](double upper, double lower, double body) { return PairJointParams{upper, lower, body}; }),
           py::arg("upper_tail_corr") = 0.0, py::arg("lower_tail_corr") = 0.0, py::arg("body_corr") = 0.0)
      .def_readwrite("upper_tail_corr", &PairJointParams::upper_tail_corr)
      .def_readwrite("lower_tail_corr", &PairJointParams::lower_tail_corr)
      .def_readwrite("body_corr", &PairJointParams::body_corr);

  m.def(
      "sample_univariate",
      [](const MarginalParams& p, std::size_t count, std::uint64_t seed, std::uint64_t stream) {
        return to_array(sample_univariate(p, count, {seed, stream}).values);
      },
      py::arg("params"), py::arg("count"), py::arg("seed"), py::arg("stream") = 0);

  m.def(
      "sample_multivariate",
      [](std::vector<MarginalParams> marginals, Eigen::MatrixXd upper, Eigen::MatrixXd lower,
         Eigen::MatrixXd body, std::size_t count, std::uint64_t seed, std::uint64_t stream) {
        ModelSpec spec{std::move(marginals), std::move(upper), std::move(lower), std::move(body)};
        spec.validate();
        return Eigen::MatrixXd(sample_multivariate(spec, count, {seed, stream}).data());
      },
      py::arg("marginals"), py::arg("upper_tail_corr"), py::arg("lower_tail_corr"), py::arg("body_corr"),
      py::arg("count"), py::arg("seed"), py::arg("stream") = 0);

  m.def(
      "sample_pair",
      [](const MarginalParams& a, const MarginalParams& b, const PairJointParams& joint, std::size_t count,
         std::uint64_t seed, std::uint64_t stream) {
        return Eigen::MatrixXd(sample_multivariate(ModelSpec::pair(a, b, joint), count, {seed, stream}).data());
      },
      py::arg("first"), py::arg("second"), py::arg("joint"), py::arg("count"), py::arg("seed"),
      py::arg("stream") = 0);

  m.def(
      "closed_form_moments",
      [](const MarginalParams& p) {
        const auto v = closed_form_moments(p);
        return std::vector<double>{v[1], v[2], v[3], v[4]};
      },
      py::arg("params"));

  m.def(
      "fit_marginal",
      [](const Array& y, std::uint64_t seed, int max_outer_iters, double block_tol, int restarts) {
        MarginalFitConfig cfg;
        cfg.max_outer_iters = max_outer_iters;
        cfg.block_tol = block_tol;
        cfg.restarts = restarts;
        const auto data = view(y);
        MarginalFitResult r;
        {
          py::gil_scoped_release release;
          r = fit_marginal(data, cfg, {seed, 0});
        }
        return marginal_result(r);
      },
      py::arg("y"), py::arg("seed") = 0, py::arg("max_outer_iters") = 200, py::arg("block_tol") = 1e-10,
      py::arg("restarts") = 0);

  m.def(
      "fit_pair",
      [](const Array& x, const Array& y, const MarginalParams& mx, const MarginalParams& my, std::size_t sim_draws,
         std::uint64_t seed, unsigned threads) {
        JointFitConfig cfg;
        cfg.sim_draws = sim_draws;
        cfg.seed = {seed, 0};
        cfg.threads = threads;
        const auto xs = view(x), ys = view(y);
        JointFitResult r;
        {
          py::gil_scoped_release release;
          r = fit_pair(xs, ys, mx, my, cfg);
        }
        py::dict d;
        d["params"] = r.params;
        d["objective_body"] = r.objective_body;
        d["objective_tails"] = r.objective_tails;
        d["converged"] = r.converged;
        d["alternations"] = r.alternations;
        d["threshold"] = r.threshold;
        return d;
      },
      py::arg("x"), py::arg("y"), py::arg("marginal_x"), py::arg("marginal_y"), py::arg("sim_draws") = 1'000'000,
      py::arg("seed") = 0, py::arg("threads") = 0);

  m.def(
      "repair_psd", [](const Eigen::MatrixXd& mat, double floor) { return repair_psd(mat, floor); },
      py::arg("matrix"), py::arg("floor") = 1e-6);

  m.def(
      "tail_proxy",
      [](const Array& x, const Array& y, const std::vector<double>& taus, const std::string& side) {
        return to_array(tail_proxy(view(x), view(y), taus, side_of(side)).lambdas);
      },
      py::arg("x"), py::arg("y"), py::arg("taus"), py::arg("side") = "lower");

  m.def(
      "joint_quantile",
      [](const Array& x, const Array& y, double tau, const std::string& side) {
        return joint_quantile_empirical(view(x), view(y), tau, side_of(side)).tau_star;
      },
      py::arg("x"), py::arg("y"), py::arg("tau"), py::arg("side"));

  m.def(
      "discrepancy",
      [](const Array& x, const Array& y, const Array& sim_x, const Array& sim_y, std::vector<double> taus) {
        if (taus.empty()) taus = default_discrepancy_taus();
        return discrepancy_between_samples(view(x), view(y), view(sim_x), view(sim_y), taus).value;
      },
      py::arg("x"), py::arg("y"), py::arg("sim_x"), py::arg("sim_y"), py::arg("taus") = std::vector<double>{});

  m.def(
      "kendall_tau", [](const Array& x, const Array& y) { return kendall_tau(view(x), view(y)); }, py::arg("x"),
      py::arg("y"));

  m.def(
      "fit_copula",
      [](const Array& x, const Array& y, const std::string& family) {
        const auto fit = fit_copula(view(x), view(y), family_of(family));
        py::dict d;
        d["family"] = to_string(fit.spec.family);
        d["rho"] = fit.spec.rho;
        d["dof"] = fit.spec.dof;
        d["theta"] = fit.spec.theta;
        d["kendall_tau"] = fit.kendall_tau;
        d["warnings"] = fit.warnings;
        return d;
      },
      py::arg("x"), py::arg("y"), py::arg("family"));
}
