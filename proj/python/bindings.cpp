#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>
#include <string>
#include <vector>

#include "gaze_sentinel/classifiers.hpp"
#include "gaze_sentinel/core.hpp"
#include "gaze_sentinel/error.hpp"
#include "gaze_sentinel/eval.hpp"
#include "gaze_sentinel/features.hpp"
#include "gaze_sentinel/io.hpp"
#include "gaze_sentinel/sim.hpp"

namespace py = pybind11;
using namespace gaze_sentinel;

namespace {

eval::Task task_from(const std::string& name) {
  const auto task = eval::parse_task(name);
  if (!task) throw Error(ErrorKind::InvalidArgument, "unknown task '" + name + "' (expected nf-ef or nf-df)");
  return *task;
}

learners::ClassifierKind classifier_from(const std::string& name) {
  const auto kind = learners::parse_classifier(name);
  if (!kind) throw Error(ErrorKind::InvalidArgument, "unknown classifier '" + name + "'");
  return *kind;
}

learners::Dataset dataset_from(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                               const std::vector<int>& groups) {
  if (x.size() != y.size() || x.size() != groups.size()) {
    throw Error(ErrorKind::Shape, "x, y and groups must have the same length");
  }
  learners::Dataset d(x.empty() ? 0 : x.front().size());
  for (std::size_t i = 0; i < x.size(); ++i) d.add(x[i], y[i], groups[i]);
  return d;
}

py::dict metrics_dict(const eval::Metrics& m) {
  py::dict d;
  d["accuracy"] = m.accuracy;
  d["recall"] = m.recall ? py::cast(*m.recall) : py::none();
  d["total"] = m.total;
  d["failures"] = m.failures;
  return d;
}

py::dict report_dict(const eval::EvalReport& r) {
  py::dict d;
  d["task"] = std::string(eval::to_string(r.task));
  d["classifier"] = std::string(learners::to_string(r.classifier));
  d["regime"] = std::string(eval::to_string(r.regime));
  d["regime_value"] = r.regime_value;
  py::list folds;
  for (const auto& f : r.folds) {
    auto fd = metrics_dict(f.metrics);
    fd["participant"] = f.participant;
    folds.append(fd);
  }
  d["folds"] = folds;
  d["aggregate"] = metrics_dict(r.aggregate);
  return d;
}

py::dict detection_dict(const eval::DetectionEvent& e) {
  py::dict d;
  d["participant"] = e.participant;
  d["puzzle"] = e.puzzle;
  d["t0"] = e.t0;
  d["t1"] = e.t1;
  d["label"] = e.label;
  d["score"] = e.score;
  d["truth"] = e.truth;
  return d;
}

std::vector<double> features_of(const Session& s, double t0, double t1) {
  const auto f = featurize_slice(s, t0, t1).to_array();
  return {f.begin(), f.end()};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Gaze-based robot failure detection";

  static py::exception<Error> error(m, "GazeSentinelError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      PyErr_SetString(error.ptr(), (std::string(to_string(e.kind())) + ": " + e.what()).c_str());
    }
  });

  m.attr("__version__") = GAZE_SENTINEL_VERSION;

  m.def("feature_names", [] {
    std::vector<std::string> out;
    for (auto n : feature_names()) out.emplace_back(n);
    return out;
  });

  m.def(
      "entropies",
      [](const std::vector<int>& labels) {
        std::vector<FixationEvent> fix;
        double t = 0.0;
        for (int l : labels) {
          if (l < 0 || l >= static_cast<int>(kAoiCount)) throw Error(ErrorKind::InvalidArgument, "AOI index out of range");
          fix.push_back({kAllAois[l], t, 0.25});
          t += 0.25;
        }
        const auto model = build_transition_model(fix);
        return py::make_tuple(stationary_entropy(model.visit_dist), transition_entropy(model));
      },
      py::arg("aoi_sequence"), "(stationary, transition) entropy in bits of an AOI index sequence.");

  py::class_<Session>(m, "Session")
      .def_readonly("participant_id", &Session::participant_id)
      .def_readonly("puzzle_id", &Session::puzzle_id)
      .def_readonly("duration", &Session::duration)
      .def_property_readonly("failure",
                             [](const Session& s) -> py::object {
                               if (!s.failure) return py::none();
                               return py::make_tuple(s.failure->piece,
                                                     s.failure->type == FailureType::EF ? "EF" : "DF");
                             })
      .def_property_readonly("n_samples", [](const Session& s) { return s.gaze.size(); })
      .def("samples",
           [](const Session& s) {
             std::vector<std::tuple<double, double, double, bool>> out;
             out.reserve(s.gaze.size());
             for (const auto& g : s.gaze) out.emplace_back(g.t, g.point.x, g.point.y, g.valid);
             return out;
           })
      .def("segments",
           [](const Session& s) {
             py::list out;
             for (const auto& seg : segment_session(s)) {
               py::dict d;
               d["piece"] = seg.piece_index;
               d["label"] = std::string(to_string(seg.label));
               d["t0"] = seg.t_start;
               d["t1"] = seg.t_end;
               out.append(d);
             }
             return out;
           })
      .def("features", &features_of, py::arg("t0"), py::arg("t1"),
           "Feature vector of the samples in [t0, t1).")
      .def("to_jsonl", [](const Session& s) { return io::session_to_jsonl(s); })
      .def_static("from_jsonl", [](const std::string& text) {
        std::istringstream in(text);
        return io::session_from_jsonl(in);
      });

  m.def(
      "simulate",
      [](int participants, std::uint64_t seed, const std::string& profile) {
        sim::CorpusSpec spec;
        spec.participants = participants;
        spec.master_seed = seed;
        if (!profile.empty()) spec.behavior = sim::load_profile(profile);
        py::gil_scoped_release release;
        return sim::generate_corpus(spec);
      },
      py::arg("participants") = 26, py::arg("seed") = 7, py::arg("profile") = "",
      "Simulated corpus: participants x 4 sessions.");

  m.def("load_session", &io::load_session, py::arg("path"));
  m.def(
      "save_session", [](const std::filesystem::path& p, const Session& s) { io::save_session(p, s); },
      py::arg("path"), py::arg("session"));

  m.def(
      "task_dataset",
      [](const std::vector<Session>& sessions, const std::string& task) {
        const auto records = eval::featurize_corpus(sessions);
        const auto data = eval::task_dataset(records, task_from(task));
        std::vector<std::vector<double>> x;
        for (std::size_t i = 0; i < data.size(); ++i) x.emplace_back(data.row(i).begin(), data.row(i).end());
        return py::make_tuple(x, data.labels(), data.groups());
      },
      py::arg("sessions"), py::arg("task") = "nf-ef",
      "(x, y, groups) for one task: NF rows plus the task's failure rows.");

  py::class_<learners::TrainedModel>(m, "Model")
      .def_property_readonly("classifier",
                             [](const learners::TrainedModel& mdl) {
                               return std::string(learners::to_string(mdl.config().kind()));
                             })
      .def_property_readonly("n_features", &learners::TrainedModel::n_features)
      .def(
          "predict",
          [](const learners::TrainedModel& mdl, const std::vector<double>& x) {
            const auto p = mdl.predict(x);
            return py::make_tuple(p.label, p.score);
          },
          py::arg("x"), "(label, score) for one feature vector.")
      .def("to_json", [](const learners::TrainedModel& mdl) { return io::model_to_json(mdl); })
      .def_static("from_json", [](const std::string& text) { return io::model_from_json(text); })
      .def("__eq__", [](const learners::TrainedModel& a, const learners::TrainedModel& b) { return a == b; });

  m.def(
      "train",
      [](const std::vector<std::vector<double>>& x, const std::vector<int>& y, const std::vector<int>& groups,
         const std::string& classifier, std::uint64_t seed) {
        const auto data = dataset_from(x, y, groups);
        py::gil_scoped_release release;
        return learners::train(learners::make_config(classifier_from(classifier), seed), data);
      },
      py::arg("x"), py::arg("y"), py::arg("groups"), py::arg("classifier") = "forest", py::arg("seed") = 0);

  m.def("save_model", &io::save_model, py::arg("path"), py::arg("model"));
  m.def("load_model", &io::load_model, py::arg("path"));

  m.def(
      "loo_cv",
      [](const std::vector<std::vector<double>>& x, const std::vector<int>& y, const std::vector<int>& groups,
         const std::string& classifier, std::uint64_t seed) {
        const auto data = dataset_from(x, y, groups);
        eval::EvalReport report;
        {
          py::gil_scoped_release release;
          report = eval::loo_cv(data, learners::make_config(classifier_from(classifier), seed));
        }
        return report_dict(report);
      },
      py::arg("x"), py::arg("y"), py::arg("groups"), py::arg("classifier") = "forest", py::arg("seed") = 7,
      "Participant-level leave-one-out with SMOTE inside each training fold.");

  m.def(
      "stream_detect",
      [](const learners::TrainedModel& model, const Session& session, double width, double slide) {
        py::list out;
        for (const auto& e : eval::stream_detect(model, session, width, slide)) out.append(detection_dict(e));
        return out;
      },
      py::arg("model"), py::arg("session"), py::arg("width") = 5.0, py::arg("slide") = 1.0);

  m.def(
      "sliding_window_count",
      [](const Session& s, double width, double slide) { return eval::sliding_windows(s, width, slide).size(); },
      py::arg("session"), py::arg("width") = 5.0, py::arg("slide") = 1.0);
}
