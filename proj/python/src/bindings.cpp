// Thin numpy-facing wrappers. Samples are passed as a (T, P) array with implicit
// times 0..T-1; coefficient paths come back as a (N, P, K*P) array.

#include "tvvar/estimator.hpp"
#include "tvvar/model.hpp"
#include "tvvar/network.hpp"
#include "tvvar/spectral.hpp"

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace tvvar;

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::vector<Sample> to_samples(const RowMatrix& x) {
  std::vector<Sample> out;
  out.reserve(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index t = 0; t < x.rows(); ++t) out.push_back({t, x.row(t).transpose()});
  return out;
}

RowMatrix from_samples(const std::vector<Sample>& xs) {
  if (xs.empty()) return {};
  RowMatrix m(static_cast<Eigen::Index>(xs.size()), xs.front().values.size());
  for (std::size_t t = 0; t < xs.size(); ++t) m.row(static_cast<Eigen::Index>(t)) = xs[t].values.transpose();
  return m;
}

py::array_t<double> stack(const std::vector<ParamMatrix>& path) {
  const py::ssize_t n = static_cast<py::ssize_t>(path.size());
  const py::ssize_t p = n ? path.front().p() : 0, cols = n ? path.front().entries().cols() : 0;
  py::array_t<double> out({n, p, cols});
  auto v = out.mutable_unchecked<3>();
  for (py::ssize_t i = 0; i < n; ++i)
    for (py::ssize_t r = 0; r < p; ++r)
      for (py::ssize_t c = 0; c < cols; ++c) v(i, r, c) = path[static_cast<std::size_t>(i)](static_cast<int>(r), static_cast<int>(c));
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Online time-varying VAR estimation and spectral connectivity";

  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  m.def("warmup_length", &sope_warmup_length, py::arg("p"), py::arg("k"));

  m.def(
      "estimate",
      [](const RowMatrix& x, int k, const std::string& method, double lam, double beta, double q_sigma) {
        EstimatorConfig cfg;
        cfg.method = method_from_string(method);
        cfg.p = static_cast<int>(x.cols());
        cfg.k = k;
        cfg.hyper = {lam, beta, q_sigma};
        const auto xs = to_samples(x);
        std::vector<ParamMatrix> est;
        {
          py::gil_scoped_release release;
          est = run_estimator(cfg, xs);
        }
        return stack(est);
      },
      py::arg("x"), py::arg("k") = 1, py::arg("method") = "sope", py::arg("lam") = 5000.0, py::arg("beta") = 0.9,
      py::arg("q_sigma") = 1e-5,
      "Runs an estimator over a (T, P) array; returns (T - warmup, P, K*P) estimates.");

  m.def(
      "simulate",
      [](int p, int k, std::int64_t n, std::uint64_t seed) {
        SimSpec spec;
        spec.p = p;
        spec.k = k;
        spec.t_total = n;
        spec.seed = seed;
        spec.validate();
        Rng path_rng(spec.seed);
        const CoeffPath path = make_cosine_coeffs(spec, path_rng);
        Rng data_rng(derive_seed(spec.seed, 1));
        const auto data = simulate_tvvar(spec, path, data_rng);
        return py::make_tuple(from_samples(data), stack(path));
      },
      py::arg("p"), py::arg("k") = 1, py::arg("n") = 2000, py::arg("seed") = 0,
      "Simulates a cosine-coefficient TV-VAR; returns (data (T, P), coefficients (T, P, K*P)).");

  m.def(
      "band_connectivity",
      [](const Matrix& phi, int k, const Matrix& sigma, double lo, double hi, double fs, double spacing) {
        const auto f = band_connectivity(ParamMatrix(phi, k), sigma, {"band", lo, hi}, FreqSpec::uniform(fs, spacing));
        py::dict d;
        d["coherence"] = f.coherence;
        d["partial_coherence"] = f.partial_coherence;
        d["pdc"] = f.pdc;
        d["points"] = f.points;
        d["unstable_points"] = f.unstable_points;
        return d;
      },
      py::arg("phi"), py::arg("k"), py::arg("sigma"), py::arg("lo"), py::arg("hi"), py::arg("fs") = 1000.0,
      py::arg("spacing") = 1.0, "Band-averaged coherence, partial coherence and PDC of one coefficient matrix.");

  m.def(
      "spectrum",
      [](const Matrix& phi, int k, const Matrix& sigma, double freq_hz, double fs) {
        return spectral_frame(ParamMatrix(phi, k), sigma, freq_hz, fs).s;
      },
      py::arg("phi"), py::arg("k"), py::arg("sigma"), py::arg("freq"), py::arg("fs") = 1000.0);

  m.def("quantile", &quantile_linear, py::arg("values"), py::arg("q"));

  m.def(
      "network_delta",
      [](const Matrix& before, const Matrix& after, const Matrix& thresholds) {
        const auto d = network_delta(before, after, thresholds);
        const auto p = static_cast<int>(before.rows());
        std::vector<std::vector<std::string>> out(static_cast<std::size_t>(p));
        for (int i = 0; i < p; ++i)
          for (int j = 0; j < p; ++j) out[static_cast<std::size_t>(i)].push_back(to_string(d.at(i, j)));
        return out;
      },
      py::arg("before"), py::arg("after"), py::arg("thresholds"),
      "Edge classes (absent, persistent, lost, gained) as a nested list of strings.");
}
