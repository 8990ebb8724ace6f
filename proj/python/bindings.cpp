#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "floodaid/errors.hpp"
#include "floodaid/layers.hpp"
#include "floodaid/pipeline.hpp"
#include "floodaid/priority.hpp"
#include "floodaid/serialize.hpp"

namespace py = pybind11;
using namespace floodaid;

namespace {

// Trained model plus what was recorded while training it.
struct PyModel {
  FairModel model;
  TrainConfig config;
  TrainingLog log;
  std::vector<std::string> training_ids;
};

py::dict as_dict(const Json& j) {
  return py::module_::import("json").attr("loads")(j.dump()).cast<py::dict>();
}

Variant variant_arg(const std::string& s) {
  const auto v = parse_variant(s);
  if (!v) throw UsageError("variant must be 'fair' or 'baseline'");
  return *v;
}

std::vector<int> group_ids(const std::vector<std::string>& labels) {
  std::map<std::string, int> index;
  std::vector<int> out;
  for (const auto& l : labels) {
    const auto it = index.try_emplace(l, static_cast<int>(index.size())).first;
    out.push_back(it->second);
  }
  return out;
}

Dataset generate(std::uint64_t seed, std::optional<std::size_t> n_upazilas, std::optional<std::size_t> n_districts,
                 std::optional<double> bias_strength, std::optional<double> noise_sd) {
  RunConfig rc;
  if (n_upazilas) apply_setting(rc, "n_upazilas", std::to_string(*n_upazilas));
  if (n_districts) apply_setting(rc, "n_districts", std::to_string(*n_districts));
  if (bias_strength) rc.synthetic.district_bias_strength = *bias_strength;
  if (noise_sd) rc.synthetic.noise_sd = *noise_sd;
  rc.synthetic.seed = seed;
  return generate_synthetic(rc.synthetic).dataset;
}

PyModel train_model(const Dataset& data, const std::string& variant, double lam, int epochs, std::uint64_t seed) {
  TrainConfig tc;
  tc.variant = variant_arg(variant);
  tc.lambda = lam;
  tc.epochs = epochs;
  tc.seed = seed;
  auto r = train(data, tc);
  return PyModel{std::move(r.model), tc, std::move(r.log), std::move(r.training_ids)};
}

py::dict evaluation_dict(PyModel& m, const Dataset& data) {
  const auto ev = evaluate(m.model, data);
  Json j{{"performance", to_json(ev.performance)}, {"fairness", to_json(ev.fairness)}};
  return as_dict(j);
}

std::vector<py::dict> ranking_dicts(const std::vector<PriorityEntry>& entries) {
  std::vector<py::dict> out;
  for (const auto& e : entries) {
    py::dict d;
    d["upazila_id"] = e.upazila_id;
    d["district"] = e.district;
    d["region"] = std::string(region_label(e.region));
    d["predicted_damage"] = e.predicted_damage;
    d["vulnerability_score"] = e.vulnerability_score;
    d["priority_score"] = e.priority_score;
    d["rank"] = e.rank;
    out.push_back(d);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Fairness-aware flood damage prediction and aid prioritization";

  static py::exception<Error> base_exc(m, "FloodAidError", PyExc_RuntimeError);
  static py::exception<UsageError> usage_exc(m, "UsageError", base_exc.ptr());
  static py::exception<DataError> data_exc(m, "DataError", base_exc.ptr());
  static py::exception<NumericError> numeric_exc(m, "NumericError", base_exc.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const UsageError& e) {
      py::set_error(usage_exc, e.what());
    } catch (const DataError& e) {
      py::set_error(data_exc, e.what());
    } catch (const NumericError& e) {
      py::set_error(numeric_exc, e.what());
    }
  });

  m.attr("SCHEMA_VERSION") = kSchemaVersion;

  py::class_<Dataset>(m, "Dataset")
      .def_static("load", [](const std::filesystem::path& p) { return load_csv(p); }, py::arg("path"))
      .def("write", [](const Dataset& d, const std::filesystem::path& p) { write_csv(d, p); }, py::arg("path"))
      .def("__len__", &Dataset::size)
      .def_property_readonly("ids", &Dataset::ids)
      .def_property_readonly("targets", &Dataset::targets)
      .def_property_readonly("district_labels", &Dataset::district_labels)
      .def_property_readonly("district_indices", &Dataset::district_indices)
      .def_property_readonly("haor_flags", &Dataset::haor_flags)
      .def_property_readonly("vulnerability", [](const Dataset& d) {
        std::vector<double> out;
        for (const auto& m : derived_metrics(d)) out.push_back(m.vulnerability_score);
        return out;
      })
      .def("features", [](const Dataset& d) {
        const Matrix x = d.feature_matrix();
        std::vector<std::vector<double>> rows;
        for (std::size_t r = 0; r < x.rows(); ++r) {
          const auto row = x.row(r);
          rows.emplace_back(row.begin(), row.end());
        }
        return rows;
      });

  m.def("generate_synthetic", &generate, py::arg("seed") = 0, py::arg("n_upazilas") = py::none(),
        py::arg("n_districts") = py::none(), py::arg("bias_strength") = py::none(),
        py::arg("noise_sd") = py::none(), "Draw a synthetic dataset; defaults give the 87-row layout.");
  m.def(
      "stratified_split",
      [](const Dataset& d, double train_fraction, std::uint64_t seed) {
        auto s = stratified_split(d, train_fraction, seed);
        return py::make_tuple(std::move(s.train), std::move(s.test));
      },
      py::arg("dataset"), py::arg("train_fraction") = 0.8, py::arg("seed") = 0);

  py::class_<PyModel>(m, "Model")
      .def_property_readonly("parameter_count", [](const PyModel& p) { return p.model.parameter_count(); })
      .def_property_readonly("variant", [](const PyModel& p) { return std::string(variant_label(p.model.config().variant)); })
      .def_property_readonly("district_labels", [](const PyModel& p) { return p.model.district_labels(); })
      .def_property_readonly("training_ids", [](const PyModel& p) { return p.training_ids; })
      .def_property_readonly("log", [](const PyModel& p) { return as_dict(to_json(p.log)); })
      .def("predict", [](PyModel& p, const Dataset& d) { return predict(p.model, d); }, py::arg("dataset"))
      .def("evaluate", &evaluation_dict, py::arg("dataset"))
      .def(
          "rank",
          [](PyModel& p, const Dataset& d, const Dataset* context) {
            return ranking_dicts(rank_dataset(p.model, d, context));
          },
          py::arg("dataset"), py::arg("context") = nullptr)
      .def(
          "save",
          [](PyModel& p, const std::filesystem::path& stem) {
            return save_checkpoint(p.model, p.config, p.training_ids, stem);
          },
          py::arg("stem"));

  m.def("train", &train_model, py::arg("dataset"), py::arg("variant") = "fair", py::arg("lam") = 1.0,
        py::arg("epochs") = 100, py::arg("seed") = 0);
  m.def(
      "load_checkpoint",
      [](const std::filesystem::path& p) {
        auto ck = load_checkpoint(p);
        return PyModel{std::move(ck.model), ck.config, {}, std::move(ck.training_ids)};
      },
      py::arg("path"));

  m.def("performance_metrics", [](const std::vector<double>& a, const std::vector<double>& p) {
    return as_dict(to_json(performance_metrics(a, p)));
  }, py::arg("actual"), py::arg("predicted"));
  m.def("statistical_parity_difference", [](const std::vector<double>& p, const std::vector<std::string>& g) {
    return statistical_parity_difference(p, group_ids(g));
  }, py::arg("predicted"), py::arg("groups"));
  m.def("prediction_variance", [](const std::vector<double>& p, const std::vector<std::string>& g) {
    return prediction_variance(p, group_ids(g));
  }, py::arg("predicted"), py::arg("groups"));
  m.def("regional_fairness_gap", [](const std::vector<double>& a, const std::vector<double>& p,
                                    const std::vector<bool>& haor) { return regional_fairness_gap(a, p, haor); },
        py::arg("actual"), py::arg("predicted"), py::arg("is_haor"));
  m.def("equal_opportunity", [](const std::vector<double>& a, const std::vector<double>& p,
                                const std::vector<std::string>& g) { return equal_opportunity(a, p, group_ids(g)); },
        py::arg("actual"), py::arg("predicted"), py::arg("groups"));
  m.def("improvement_pct", &improvement_pct, py::arg("fair_value"), py::arg("baseline_value"));

  m.def("min_max_norm", [](const std::vector<double>& v) { return min_max_norm(v); }, py::arg("values"));
  m.def(
      "priority_scores",
      [](const std::vector<std::string>& ids, const std::vector<double>& pred, const std::vector<double>& vuln) {
        std::vector<UnitInfo> units;
        for (const auto& id : ids) units.push_back(UnitInfo{id, "", Region::kNonHaor});
        return ranking_dicts(priority_scores(units, pred, vuln));
      },
      py::arg("ids"), py::arg("predictions"), py::arg("vulnerabilities"));
  m.def("pearson", [](const std::vector<double>& a, const std::vector<double>& b) { return pearson_correlation(a, b); });
  m.def("spearman", [](const std::vector<double>& a, const std::vector<double>& b) { return spearman_correlation(a, b); });

  m.def("grl_backward", [](const std::vector<double>& g, double lam) {
    const Matrix out = grl_backward(Matrix(1, g.size(), g), lam);
    return std::vector<double>(out.values().begin(), out.values().end());
  }, py::arg("grad"), py::arg("lam"));

  m.def(
      "run_experiment",
      [](std::uint64_t seed, double lam, int epochs) {
        RunConfig rc;
        rc.train.lambda = lam;
        rc.train.epochs = epochs;
        const auto r = run_experiment(rc, seed);
        Json j{{"seed", seed},
               {"comparison", comparison_json(r.fair_eval, r.baseline_eval)},
               {"rank_shift", to_json(r.rank_shift)}};
        return as_dict(j);
      },
      py::arg("seed") = 0, py::arg("lam") = 1.0, py::arg("epochs") = 100,
      "Synthetic draw, split, fair and baseline training, evaluation and rank shift.");
}
