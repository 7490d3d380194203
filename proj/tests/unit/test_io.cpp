#include <cmath>
#include <filesystem>
#include <sstream>

#include "doctest.h"
#include "gaze_sentinel/error.hpp"
#include "gaze_sentinel/io.hpp"
#include "gaze_sentinel/sim.hpp"

using namespace gaze_sentinel;
namespace fs = std::filesystem;

namespace {

fs::path fixture(const char* name) { return fs::path(GAZE_SENTINEL_FIXTURE_DIR) / name; }

ErrorKind kind_of_session(const std::string& text) {
  std::istringstream in(text);
  try {
    io::session_from_jsonl(in, "mem");
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::Usage;
}

Session sample_session() {
  sim::CorpusSpec spec;
  spec.participants = 1;
  return sim::generate_session(spec, 1, 3);
}

}  // namespace

TEST_CASE("format_double round trips") {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456.789, -0.0, 5.0}) {
    CHECK(std::stod(io::format_double(v)) == v);
  }
  CHECK(io::format_double(5.0) == "5");
}

TEST_CASE("session JSONL round trip") {
  const auto s = sample_session();
  const auto text = io::session_to_jsonl(s, "prov");
  std::istringstream in(text);
  const auto back = io::session_from_jsonl(in);
  CHECK(io::session_to_jsonl(back, "prov") == text);
  CHECK(back.failure->type == s.failure->type);
  CHECK(back.gaze.size() == s.gaze.size());
  CHECK(back.gaze[1234].point.x == s.gaze[1234].point.x);
}

TEST_CASE("session input errors") {
  const auto text = io::session_to_jsonl(sample_session());
  CHECK(kind_of_session(text.substr(0, text.size() / 2)) == ErrorKind::Corrupt);
  CHECK(kind_of_session("not json\n") == ErrorKind::Corrupt);
  auto future = text;
  future.replace(future.find("\"schema_version\":1"), 18, "\"schema_version\":7");
  CHECK(kind_of_session(future) == ErrorKind::SchemaVersion);

  // Swap two sample lines so time goes backwards.
  const auto first = text.find('\n') + 1;
  const auto second = text.find('\n', first) + 1;
  const auto third = text.find('\n', second) + 1;
  const auto swapped = text.substr(0, first) + text.substr(second, third - second) +
                       text.substr(first, second - first) + text.substr(third);
  CHECK(kind_of_session(swapped) == ErrorKind::MalformedStream);
}

TEST_CASE("session files") {
  const auto dir = fs::temp_directory_path() / "gs_io_unit";
  fs::remove_all(dir);
  const auto path = dir / "nested" / "s.jsonl";
  const auto s = sample_session();
  io::save_session(path, s);
  CHECK(io::session_to_jsonl(io::load_session(path)) == io::session_to_jsonl(s));
  try {
    io::load_session(dir / "missing.jsonl");
    FAIL("expected Io");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Io);
  }
  fs::remove_all(dir);
}

TEST_CASE("feature table round trip") {
  eval::SegmentRecord r;
  r.segment = {4, 2, 3, SegmentLabel::DF, 50.25, 66.75};
  r.features.shift_rate_all = 1.0 / 3.0;
  r.features.p_aoi = {0.1, 0.2, 0.3, 0.15, 0.15, 0.1};
  r.features.transition_entropy = 1.2345678901234567;
  const eval::SegmentRecord rows[] = {r, r};
  const auto text = io::feature_table_csv(rows, "prov");
  CHECK(text.rfind("# prov\n", 0) == 0);
  const auto back = io::parse_feature_table(text);
  REQUIRE(back.size() == 2);
  CHECK(back[0].features == r.features);
  CHECK(back[0].segment.label == SegmentLabel::DF);
  CHECK(back[0].segment.t_end == 66.75);

  auto renamed = text;
  renamed.replace(renamed.find("mean_ee_dwell"), 13, "mean_xx_dwell");
  CHECK_THROWS_AS(io::parse_feature_table(renamed), Error);
}

TEST_CASE("model fixtures") {
  const auto v2 = io::load_model(fixture("model_v2.json"));
  const auto v1 = io::load_model(fixture("model_v1.json"));
  CHECK(v1 == v2);
  CHECK(v2.n_features() == 2);
  const double low[2] = {0.0, 9.0};
  const double high[2] = {1.0, 9.0};
  CHECK(v2.predict(low).score == doctest::Approx(1.0 / (1.0 + std::exp(0.125))).epsilon(1e-15));
  CHECK(v2.predict(low).label == 0);
  CHECK(v2.predict(high).score == doctest::Approx(1.0 / (1.0 + std::exp(-0.875))).epsilon(1e-15));
  CHECK(v2.predict(high).label == 1);
}

TEST_CASE("model documents round trip bit-exactly") {
  Rng rng(5);
  learners::Dataset d(3);
  for (int i = 0; i < 60; ++i) {
    const int y = i % 3 == 0;
    const double x[3] = {rng.normal() + y, rng.normal() * 1e-3, rng.uniform()};
    d.add(x, y, i % 4);
  }
  for (auto kind : learners::kAllClassifiers) {
    CAPTURE(to_string(kind));
    const auto model = learners::train(learners::make_config(kind, 2), d);
    const auto text = io::model_to_json(model);
    const auto back = io::model_from_json(text);
    CHECK(back == model);
    CHECK(io::model_to_json(back) == text);
  }
}

TEST_CASE("model document errors") {
  const auto text = io::read_file(fixture("model_v2.json"));
  auto kind_of = [](const std::string& t) {
    try {
      io::model_from_json(t);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::Usage;
  };
  CHECK(kind_of(text.substr(0, text.size() - 20)) == ErrorKind::Corrupt);
  auto bumped = text;
  bumped.replace(bumped.find("\"schema_version\": 2"), 19, "\"schema_version\": 3");
  CHECK(kind_of(bumped) == ErrorKind::SchemaVersion);
  auto tampered = text;
  tampered.replace(tampered.find("\"seed\": 3"), 9, "\"seed\": 4");
  CHECK(kind_of(tampered) == ErrorKind::Corrupt);
  auto dangling = text;
  dangling.replace(dangling.find("\"left\": [1,"), 11, "\"left\": [7,");
  CHECK(kind_of(dangling) == ErrorKind::Corrupt);
}

TEST_CASE("report tables") {
  eval::EvalReport r;
  r.task = eval::Task::NfVsDf;
  r.classifier = learners::ClassifierKind::LinearSvm;
  r.folds = {{1, {0.5, std::nullopt, 2, 0, 0}}};
  r.aggregate = {0.75, 0.5, 4, 2, 1};
  const eval::EvalReport reports[] = {r};
  CHECK(io::report_csv(reports) ==
        "task,classifier,n_or_width,fold,accuracy,recall\n"
        "nf-df,svm,full,1,0.5,NA\n"
        "nf-df,svm,full,all,0.75,0.5\n");
  io::OffsetCurve c{eval::Task::NfVsEf, learners::ClassifierKind::Forest, 5.0, {{0, 0.25}, {1, 0.5}}};
  const io::OffsetCurve curves[] = {c};
  CHECK(io::offset_curve_csv(curves) ==
        "task,classifier,width,offset_s,pct_detected\nnf-ef,forest,5,0,25\nnf-ef,forest,5,1,50\n");
}
