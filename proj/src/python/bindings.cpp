#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "sevl/harness.hpp"
#include "sevl/incompressible.hpp"
#include "sevl/levy.hpp"
#include "sevl/pressure.hpp"
#include "sevl/spectral.hpp"

namespace py = pybind11;
using namespace sevl;

namespace {

using Arr = py::array_t<double, py::array::c_style | py::array::forcecast>;

// (m, N, ..., N) real array -> field; m inferred from leading axis
TorusField to_field(const Arr& a, int d) {
  if (a.ndim() != d + 1) throw std::invalid_argument("expected array of shape (m, N, ..., N)");
  const int m = static_cast<int>(a.shape(0));
  const int n = static_cast<int>(a.shape(1));
  for (int i = 2; i <= d; ++i)
    if (a.shape(i) != n) throw std::invalid_argument("grid axes must have equal length");
  GridPtr g = make_grid(d, n);
  std::vector<double> v(a.data(), a.data() + a.size());
  return TorusField::from_real(g, m, v);
}

Arr to_array(const TorusField& f) {
  const auto& g = *f.grid();
  std::vector<py::ssize_t> shape{f.components()};
  for (int i = 0; i < g.dim; ++i) shape.push_back(g.n);
  Arr out(shape);
  double* o = out.mutable_data();
  for (int c = 0; c < f.components(); ++c) {
    const auto v = f.real_values(c);
    std::copy(v.begin(), v.end(), o + static_cast<std::size_t>(c) * g.size);
  }
  return out;
}

int field_dim(const Arr& a) { return static_cast<int>(a.ndim()) - 1; }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Spectral torus tools, pressure transforms, Levy measures and the experiment harness.";
#ifdef SEVL_VERSION
  m.attr("__version__") = SEVL_VERSION;
#endif

  m.def("sobolev_norm", [](const Arr& a, double s) { return sobolev_norm(s, to_field(a, field_dim(a))); },
        py::arg("values"), py::arg("s"));
  m.def("wpinf_norm", [](const Arr& a, int p) { return wpinf_norm(p, to_field(a, field_dim(a))); },
        py::arg("values"), py::arg("p"));
  m.def("leray_project", [](const Arr& a) { return to_array(leray_project(to_field(a, field_dim(a)))); },
        py::arg("values"));
  m.def("mollify", [](const Arr& a, int n) { return to_array(mollify(n, to_field(a, field_dim(a)))); },
        py::arg("values"), py::arg("n"));
  m.def("divergence", [](const Arr& a) { return to_array(divergence(to_field(a, field_dim(a)))); },
        py::arg("values"));
  m.def("projected_advection",
        [](const Arr& a) { return to_array(projected_advection(to_field(a, field_dim(a)))); },
        py::arg("values"));
  m.def("taylor_green", [](int n) { return to_array(taylor_green(make_grid(2, n))); }, py::arg("n"));

  py::class_<LevyMeasure>(m, "LevyMeasure")
      .def_static("two_point", &LevyMeasure::two_point, py::arg("l0"), py::arg("rate"))
      .def_static("truncated_stable", &LevyMeasure::truncated_stable, py::arg("a"), py::arg("c"),
                  py::arg("eps") = 1e-2)
      .def("total_rate", &LevyMeasure::total_rate)
      .def("second_moment", &LevyMeasure::second_moment)
      .def("small_jump_second_moment", &LevyMeasure::small_jump_second_moment)
      .def("__repr__", &LevyMeasure::describe);

  py::class_<PressureLaw>(m, "PressureLaw")
      .def_static("by_name", &PressureLaw::by_name, py::arg("name"),
                  py::arg("params") = std::vector<double>{})
      .def_readonly("label", &PressureLaw::label)
      .def("P", [](const PressureLaw& l, double rho) { return l.P(rho); })
      .def("dP", [](const PressureLaw& l, double rho) { return l.Pprime(rho); });

  py::class_<PressureTransform>(m, "PressureTransform")
      .def(py::init(&build_transform), py::arg("law"))
      .def_readonly("r0", &PressureTransform::r0)
      .def_readonly("r_inf", &PressureTransform::r_inf)
      .def_readonly("lambda_lip", &PressureTransform::lambda_lip)
      .def("r", [](const PressureTransform& t, double rho) { return t.r(rho); })
      .def("dr", [](const PressureTransform& t, double rho) { return t.r_prime(rho); })
      .def("r_inv", [](const PressureTransform& t, double q) { return t.r_inv(q); })
      .def("lambda_ext", [](const PressureTransform& t, double q) { return t.lambda_ext(q); });
  m.def("structural_residual", &verify_structural_identity, py::arg("law"), py::arg("transform"),
        py::arg("rho_grid"));

  m.def("run", [](const std::vector<std::string>& args) {
    py::gil_scoped_release nogil;
    return harness::run(args);
  }, py::arg("args"), "Run a harness subcommand; argv[0] is not expected.");
  m.def("subcommands", &harness::subcommands);
  m.def("default_config", &harness::default_config, py::arg("subcommand"));
}
