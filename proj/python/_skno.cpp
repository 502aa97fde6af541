#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "json.hpp"
#include "skno/adjoint.hpp"
#include "skno/diagnostics.hpp"
#include "skno/error.hpp"
#include "skno/loss.hpp"
#include "skno/oracle.hpp"
#include "skno/suite.hpp"
#include "skno/train.hpp"

namespace py = pybind11;
using nlohmann::json;
using namespace skno;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Field to_field(const Array& a) {
  if (a.ndim() != 2 && a.ndim() != 3) throw UsageError("expected an array of shape (N, C) or (N0, N1, C)");
  const Grid g = a.ndim() == 2 ? Grid(static_cast<int>(a.shape(0)))
                               : Grid(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
  const int c = static_cast<int>(a.shape(a.ndim() - 1));
  return Field(g, c, std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const Grid& g, int aux, std::span<const double> v) {
  std::vector<py::ssize_t> shape;
  for (int ax = 0; ax < g.dims(); ++ax) shape.push_back(g.resolution(ax));
  shape.push_back(aux);
  Array out(shape);
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

Array samples_array(const Dataset& ds, bool inputs) {
  std::vector<py::ssize_t> shape{ds.count};
  for (int ax = 0; ax < ds.grid.dims(); ++ax) shape.push_back(ds.grid.resolution(ax));
  shape.push_back(inputs ? ds.a_channels : ds.u_channels);
  Array out(shape);
  const auto& src = inputs ? ds.a : ds.u;
  std::copy(src.begin(), src.end(), out.mutable_data());
  return out;
}

Dataset dataset_from(const std::string& spec_json) { return generate_dataset(DataSpec::from_json(json::parse(spec_json))); }

}  // namespace

PYBIND11_MODULE(_skno, m) {
  m.doc() = "Spectral operator learning with an auxiliary p axis";

  py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  py::class_<SknoModel>(m, "Model")
      .def(py::init([](const std::string& arch_json, std::uint64_t seed) {
             return SknoModel(ArchConfig::from_json(json::parse(arch_json)), seed);
           }),
           py::arg("arch_json"), py::arg("seed") = 0)
      .def_static("load", [](const std::string& dir) { return SknoModel::load(dir); })
      .def("save", [](const SknoModel& mdl, const std::string& dir) { mdl.save(dir); })
      .def("arch_json", [](const SknoModel& mdl) { return mdl.arch().to_json().dump(); })
      .def("arch_hash", [](const SknoModel& mdl) { return mdl.arch().hash(); })
      .def("param_names",
           [](const SknoModel& mdl) {
             std::vector<std::string> names;
             for (const auto& p : mdl.params().all()) names.push_back(p.name);
             return names;
           })
      .def("param",
           [](const SknoModel& mdl, const std::string& name) {
             const Param& p = mdl.param(name);
             std::vector<py::ssize_t> shape(p.shape.begin(), p.shape.end());
             Array out(shape);
             std::copy(p.data.begin(), p.data.end(), out.mutable_data());
             return out;
           })
      .def("set_param",
           [](SknoModel& mdl, const std::string& name, const Array& values) {
             Param& p = mdl.params().at(name);
             if (static_cast<std::size_t>(values.size()) != p.size()) throw UsageError("size mismatch for " + name);
             std::copy(values.data(), values.data() + values.size(), p.data.begin());
           })
      .def("forward", [](const SknoModel& mdl, const Array& a) {
        const Field u = forward(mdl, to_field(a));
        return to_array(u.grid(), u.aux_len(), u.values());
      });

  m.def("generate", [](const std::string& spec_json) {
    const Dataset ds = dataset_from(spec_json);
    return py::make_tuple(samples_array(ds, true), samples_array(ds, false));
  });

  m.def(
      "train",
      [](const std::string& arch_json, const std::string& train_json, const std::string& train_data,
         const std::string& test_data, const std::string& out_dir) {
        const ArchConfig arch = ArchConfig::from_json(json::parse(arch_json));
        const TrainConfig tc = TrainConfig::from_json(json::parse(train_json));
        const Dataset tr = dataset_from(train_data), te = dataset_from(test_data);
        TrainResult r;
        {
          py::gil_scoped_release release;
          r = train(tc, arch, tr, te, out_dir.empty() ? std::nullopt : std::optional<std::filesystem::path>(out_dir));
        }
        py::list metrics;
        for (const auto& row : r.metrics)
          metrics.append(py::dict(py::arg("epoch") = row.epoch, py::arg("train_loss") = row.train_loss,
                                  py::arg("test_rel_l2") = row.test_rel_l2, py::arg("wall_seconds") = row.wall_seconds,
                                  py::arg("lr") = row.lr));
        return py::make_tuple(r.best, metrics, r.best_test_rel_l2);
      },
      py::arg("arch_json"), py::arg("train_json"), py::arg("train_data"), py::arg("test_data"),
      py::arg("out_dir") = "");

  m.def(
      "evaluate",
      [](const SknoModel& mdl, const std::string& data, int resolution) {
        const EvalResult r = evaluate(mdl, dataset_from(data), resolution);
        return py::make_tuple(r.mean_rel_l2, r.per_sample);
      },
      py::arg("model"), py::arg("data_json"), py::arg("resolution") = 0);

  m.def("rel_l2", [](const Array& pred, const Array& target) {
    if (pred.size() != target.size() || pred.ndim() < 1) throw UsageError("shape mismatch");
    const int batch = static_cast<int>(pred.shape(0));
    return rel_l2_loss(std::span(pred.data(), pred.size()), std::span(target.data(), target.size()), batch, false).loss;
  });

  m.def("grad_check", [](const SknoModel& mdl, const Array& a, const Array& u, double eps) {
    const Field fa = to_field(a), fu = to_field(u);
    GradCheckOptions opt;
    opt.eps = eps;
    const auto rep = grad_check(mdl, fa.grid(), 1, fa.values(), fu.values(), opt);
    py::list rows;
    for (const auto& r : rep.rows)
      rows.append(py::dict(py::arg("tensor") = r.tensor, py::arg("max_rel_error") = r.max_rel_error,
                           py::arg("pass") = r.pass));
    return rows;
  }, py::arg("model"), py::arg("a"), py::arg("u"), py::arg("eps") = 1e-5);

  m.def("oracle_verify", []() {
    const VerifyReport rep = oracle_verify();
    return py::make_tuple(rep.pass, rep.table());
  });

  m.def("entanglement_entropy", [](const Eigen::MatrixXd& v) { return entanglement_entropy(v); });
  m.def("energy_capture", [](const Eigen::MatrixXd& v, const Eigen::VectorXd& chi, int r) {
    const auto e = energy_capture(v, chi, r);
    return py::make_tuple(e.energy, e.truncation_error, e.u_norm);
  });
  m.def("trace_entropies", [](const SknoModel& mdl, const Array& a) {
    py::list rows;
    for (const auto& r : trace_entropies(mdl, to_field(a)))
      rows.append(py::make_tuple(r.stage, r.skipped ? py::object(py::none()) : py::object(py::float_(r.entropy))));
    return rows;
  });
}
