#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "bedsense/baselines.hpp"
#include "bedsense/contour.hpp"
#include "bedsense/dataset.hpp"
#include "bedsense/error.hpp"
#include "bedsense/evalharness.hpp"
#include "bedsense/features.hpp"
#include "bedsense/ingest.hpp"
#include "bedsense/mtnet.hpp"
#include "bedsense/preprocess.hpp"
#include "bedsense/synthgen.hpp"

namespace py = pybind11;
using namespace bedsense;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

namespace {

PressureFrame to_frame(const RowMatrix& values, double ceiling) {
  PressureFrame f;
  f.grid = {static_cast<int>(values.rows()), static_cast<int>(values.cols()), ceiling, 1.0};
  f.values.assign(values.data(), values.data() + values.size());
  return f;
}

RowMatrix to_matrix(const PressureFrame& f) {
  return Eigen::Map<const RowMatrix>(f.values.data(), f.grid.rows, f.grid.cols);
}

Posture posture_from_name(const std::string& name) {
  if (name == "supine") return Posture::kSupine;
  if (name == "left") return Posture::kLeft;
  if (name == "right") return Posture::kRight;
  throw DomainError("unknown posture '" + name + "'");
}

py::object to_python(const nlohmann::ordered_json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

std::vector<double> as_vector(const VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Pressure-mat BMI estimation and subject identification";

  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<LoadError>(m, "LoadError", PyExc_IOError);

  m.def("compute_bmi", &compute_bmi, py::arg("weight_kg"), py::arg("height_m"));
  m.attr("FEATURE_NAMES") = [] {
    std::vector<std::string> names;
    for (auto n : kFeatureNames) names.emplace_back(n);
    return names;
  }();

  // Frames ------------------------------------------------------------------
  m.def(
      "median_filter",
      [](const RowMatrix& frame, int window, double ceiling) {
        return to_matrix(median_filter(to_frame(frame, ceiling), window));
      },
      py::arg("frame"), py::arg("window") = 3, py::arg("ceiling") = 1000.0);
  m.def("gaussian_kernel", &gaussian_kernel, py::arg("window") = 5, py::arg("sigma") = 1.0);
  m.def(
      "temporal_gaussian",
      [](const std::vector<RowMatrix>& session, int window, double sigma, double ceiling) {
        std::vector<PressureFrame> frames;
        for (std::size_t i = 0; i < session.size(); ++i) {
          frames.push_back(to_frame(session[i], ceiling));
          frames.back().frame_index = static_cast<std::int64_t>(i);
        }
        std::vector<RowMatrix> out;
        for (const auto& f : temporal_gaussian(frames, window, sigma)) out.push_back(to_matrix(f));
        return out;
      },
      py::arg("session"), py::arg("window") = 5, py::arg("sigma") = 1.0, py::arg("ceiling") = 1000.0);
  m.def(
      "extract_features",
      [](const RowMatrix& frame, double ceiling) {
        const FeatureVector v = extract_all(to_frame(frame, ceiling));
        return std::vector<double>(v.values.begin(), v.values.end());
      },
      py::arg("frame"), py::arg("ceiling") = 1000.0);
  m.def("contour_levels", py::overload_cast<double, double, int>(&select_contour_levels), py::arg("min_value"),
        py::arg("max_value"), py::arg("max_levels") = 20);
  m.def(
      "trace_isolines",
      [](const RowMatrix& frame, double level) {
        py::list out;
        for (const auto& line : trace_isolines(to_frame(frame, std::max(frame.maxCoeff(), 1.0)), level)) {
          std::vector<std::pair<double, double>> pts;
          for (const auto& p : line.vertices) pts.emplace_back(p.x, p.y);
          out.append(py::make_tuple(pts, line.closed));
        }
        return out;
      },
      py::arg("frame"), py::arg("level"));

  // Corpora -----------------------------------------------------------------
  py::class_<SubjectRecord>(m, "SubjectRecord")
      .def_readonly("subject_id", &SubjectRecord::subject_id)
      .def_readonly("height_m", &SubjectRecord::height_m)
      .def_readonly("weight_kg", &SubjectRecord::weight_kg)
      .def_readonly("age_years", &SubjectRecord::age_years)
      .def_readonly("bmi", &SubjectRecord::bmi);
  m.def("make_subject", &make_subject, py::arg("subject_id"), py::arg("height_m"), py::arg("weight_kg"),
        py::arg("age_years") = std::nullopt);

  py::class_<Corpus>(m, "Corpus")
      .def_readonly("name", &Corpus::name)
      .def_readonly("subjects", &Corpus::subjects)
      .def_property_readonly("shape", [](const Corpus& c) { return py::make_tuple(c.grid.rows, c.grid.cols); })
      .def("__len__", [](const Corpus& c) { return c.frames.size(); })
      .def("frame", [](const Corpus& c, std::size_t i) { return to_matrix(c.frames.at(i)); })
      .def_property_readonly("subject_ids",
                             [](const Corpus& c) {
                               std::vector<std::string> ids;
                               for (const auto& f : c.frames) ids.push_back(f.subject_id);
                               return ids;
                             })
      .def_property_readonly("checksum", &corpus_checksum)
      .def_property_readonly("provenance", [](const Corpus& c) { return to_python(c.provenance); });

  m.def(
      "synthesize",
      [](int subjects, int frames_per_subject, const std::vector<std::string>& postures, bool noise,
         std::uint64_t seed) {
        SynthConfig cfg;
        cfg.n_subjects = subjects;
        cfg.frames_per_subject = frames_per_subject;
        cfg.postures.clear();
        for (const auto& p : postures) cfg.postures.push_back(posture_from_name(p));
        cfg.noise = noise ? NoiseSpec::moderate() : NoiseSpec::none();
        cfg.seed = seed;
        return generate_corpus(cfg);
      },
      py::arg("subjects") = 8, py::arg("frames_per_subject") = 200,
      py::arg("postures") = std::vector<std::string>{"supine", "left", "right"}, py::arg("noise") = true,
      py::arg("seed") = 0);
  m.def("load_corpus", &load_corpus, py::arg("root"));
  m.def("save_corpus", &save_corpus, py::arg("corpus"), py::arg("root"));
  m.def(
      "ingest",
      [](const std::filesystem::path& raw, const std::string& adapter) {
        IngestOptions o;
        o.adapter = adapter_from_string(adapter);
        return ingest_raw(raw, o);
      },
      py::arg("raw"), py::arg("adapter") = "pmatdata");
  m.def(
      "preprocess",
      [](const Corpus& c, int median_window, int gaussian_window, double gaussian_sigma) {
        PreprocessOptions o;
        o.median_window = median_window;
        o.gaussian_window = gaussian_window;
        o.gaussian_sigma = gaussian_sigma;
        return preprocess_corpus(c, o);
      },
      py::arg("corpus"), py::arg("median_window") = 3, py::arg("gaussian_window") = 5,
      py::arg("gaussian_sigma") = 1.0);

  // Feature tables ----------------------------------------------------------
  py::class_<FeatureTable>(m, "FeatureTable")
      .def("__len__", [](const FeatureTable& t) { return t.rows.size(); })
      .def_property_readonly("subject_ids", &FeatureTable::subject_ids)
      .def_property_readonly("feature_names",
                             [](const FeatureTable& t) {
                               std::vector<std::string> out;
                               for (std::size_t j = 0; j < kFeatureCount; ++j) {
                                 if (t.mask.test(j)) out.emplace_back(kFeatureNames[j]);
                               }
                               return out;
                             })
      .def(
          "matrix",
          [](const FeatureTable& t) {
            MatrixXd x(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(t.mask.count()));
            for (std::size_t i = 0; i < t.rows.size(); ++i) {
              Eigen::Index c = 0;
              for (std::size_t j = 0; j < kFeatureCount; ++j) {
                if (t.mask.test(j)) x(static_cast<Eigen::Index>(i), c++) = t.rows[i].features.values[j];
              }
            }
            return x;
          },
          "Active features, rows × features")
      .def_property_readonly("row_subjects",
                             [](const FeatureTable& t) {
                               std::vector<std::string> ids;
                               for (const auto& r : t.rows) ids.push_back(r.subject_id);
                               return ids;
                             })
      .def_property_readonly("bmi", [](const FeatureTable& t) {
        std::vector<double> b;
        for (const auto& r : t.rows) b.push_back(r.bmi);
        return b;
      });
  m.def("extract_table", &extract_table, py::arg("corpus"));
  m.def("load_feature_table", &load_feature_table, py::arg("path"));
  m.def("save_feature_table", &save_feature_table, py::arg("table"), py::arg("path"));

  // Multitask network -------------------------------------------------------
  py::class_<mtnet::MultitaskModel>(m, "MultitaskModel")
      .def(
          "predict",
          [](const mtnet::MultitaskModel& model, const MatrixXd& rows) {
            const mtnet::Predictions p = mtnet::predict(model, rows);
            return py::make_tuple(p.identity, as_vector(p.bmi), p.identity_probs);
          },
          py::arg("rows"), "Returns (identity, bmi, identity_probs)")
      .def("to_json", [](const mtnet::MultitaskModel& model) { return to_python(mtnet::to_json(model)); });
  m.def(
      "train",
      [](const MatrixXd& features, const std::vector<int>& identities, const std::vector<double>& bmi, int n_subjects,
         int max_iterations, double weight_decay, const std::vector<int>& hidden, std::uint64_t seed) {
        mtnet::TrainingData d;
        d.features = features;
        d.identities = identities;
        d.bmi = Eigen::Map<const VectorXd>(bmi.data(), static_cast<Eigen::Index>(bmi.size()));
        d.n_subjects = n_subjects;
        mtnet::TrainConfig cfg;
        cfg.max_iterations = max_iterations;
        cfg.weight_decay = weight_decay;
        cfg.hidden = hidden;
        cfg.seed = seed;
        py::gil_scoped_release release;
        return mtnet::train(d, cfg).model;
      },
      py::arg("features"), py::arg("identities"), py::arg("bmi"), py::arg("n_subjects"),
      py::arg("max_iterations") = 14500, py::arg("weight_decay") = 1e-4, py::arg("hidden") = mtnet::kDefaultHidden,
      py::arg("seed") = 0);

  // Baselines ---------------------------------------------------------------
  m.def(
      "knn_classify",
      [](const MatrixXd& train, const std::vector<int>& labels, const MatrixXd& queries, int k,
         const std::string& metric) {
        return baselines::KnnClassifier(train, labels, k, baselines::metric_from_string(metric)).classify_rows(queries);
      },
      py::arg("train"), py::arg("labels"), py::arg("queries"), py::arg("k") = 10, py::arg("metric") = "euclidean");
  m.def(
      "kmeans",
      [](const MatrixXd& points, int k, int restarts, bool standardize, std::uint64_t seed) {
        baselines::KMeansOptions o;
        o.restarts = restarts;
        o.standardize = standardize;
        o.seed = seed;
        const auto r = baselines::kmeans(points, k, o);
        return py::make_tuple(r.centroids, r.labels, r.inertia);
      },
      py::arg("points"), py::arg("k"), py::arg("restarts") = 10, py::arg("standardize") = true, py::arg("seed") = 0);
  m.def(
      "build_bmi_classes",
      [](const std::vector<SubjectRecord>& subjects, const std::string& mode, std::uint64_t seed) {
        baselines::KMeansOptions o;
        o.seed = seed;
        return baselines::build_bmi_classes(subjects, baselines::bmi_class_mode_from_string(mode), o);
      },
      py::arg("subjects"), py::arg("mode") = "weight_height", py::arg("seed") = 0);

  // Metrics and cross-validation --------------------------------------------
  m.def(
      "r2", [](const std::vector<double>& p, const std::vector<double>& t) { return eval::r2(p, t); }, py::arg("pred"),
      py::arg("truth"));
  m.def(
      "rmse", [](const std::vector<double>& p, const std::vector<double>& t) { return eval::rmse(p, t); },
      py::arg("pred"), py::arg("truth"));
  m.def(
      "accuracy", [](const std::vector<int>& p, const std::vector<int>& t) { return eval::accuracy(p, t); },
      py::arg("pred"), py::arg("truth"));
  m.def(
      "confusion_matrix",
      [](const std::vector<int>& p, const std::vector<int>& t, int n) { return eval::confusion_matrix(p, t, n); },
      py::arg("pred"), py::arg("truth"), py::arg("n_classes"));
  m.def(
      "per_class_prf",
      [](const std::vector<int>& p, const std::vector<int>& t, int n) {
        const eval::PrfReport r = eval::per_class_prf(p, t, n);
        py::list per;
        for (const auto& c : r.per_class) {
          py::dict d;
          d["precision"] = c.precision;
          d["recall"] = c.recall;
          d["f1"] = c.f1;
          d["support"] = c.support;
          per.append(d);
        }
        py::dict out;
        out["per_class"] = per;
        out["macro_precision"] = r.macro_precision;
        out["macro_recall"] = r.macro_recall;
        out["macro_f1"] = r.macro_f1;
        return out;
      },
      py::arg("pred"), py::arg("truth"), py::arg("n_classes"));
  m.def(
      "cross_validate",
      [](const FeatureTable& table, const std::string& recipe, int folds, std::uint64_t seed, int max_iterations,
         int k, int threads) {
        eval::Recipe r;
        r.kind = eval::recipe_from_string(recipe);
        r.mtnet.max_iterations = max_iterations;
        r.mtnet.seed = seed;
        r.knn_k = k;
        r.threads = threads;
        const auto plan = eval::make_folds(table, folds, seed);
        eval::EvaluationReport rep;
        {
          py::gil_scoped_release release;
          rep = eval::run_cv(table, r, plan);
        }
        return to_python(eval::to_json(rep));
      },
      py::arg("table"), py::arg("recipe") = "knn", py::arg("folds") = 10, py::arg("seed") = 0,
      py::arg("max_iterations") = 14500, py::arg("k") = 10, py::arg("threads") = 0,
      "Runs k-fold cross-validation and returns the report as a dict");
}
