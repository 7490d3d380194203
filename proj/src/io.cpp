#include "gaze_sentinel/io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>
#include <system_error>

#include <unistd.h>

#include <nlohmann/json.hpp>

#include "gaze_sentinel/error.hpp"

namespace gaze_sentinel::io {

namespace {

using json = nlohmann::json;
using namespace gaze_sentinel::learners;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

[[noreturn]] void corrupt(std::string_view source, const std::string& what) {
  throw Error(ErrorKind::Corrupt, std::string(source) + ": " + what);
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <class T>
bool parse_number(std::string_view text, T& out) {
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end;
}

json tree_json(const Tree& tree) {
  json j = {{"feature", json::array()}, {"threshold", json::array()}, {"left", json::array()},
            {"right", json::array()},   {"value", json::array()}};
  for (const auto& n : tree.nodes) {
    j["feature"].push_back(n.feature);
    j["threshold"].push_back(n.threshold);
    j["left"].push_back(n.left);
    j["right"].push_back(n.right);
    j["value"].push_back(n.value);
  }
  return j;
}

Tree tree_from(const json& j, std::size_t n_features) {
  const auto feature = j.at("feature").get<std::vector<int>>();
  const auto threshold = j.at("threshold").get<std::vector<double>>();
  const auto left = j.at("left").get<std::vector<int>>();
  const auto right = j.at("right").get<std::vector<int>>();
  const auto value = j.at("value").get<std::vector<double>>();
  const std::size_t n = feature.size();
  if (n == 0 || threshold.size() != n || left.size() != n || right.size() != n || value.size() != n) {
    throw Error(ErrorKind::Corrupt, "tree arrays have inconsistent lengths");
  }
  Tree tree;
  for (std::size_t i = 0; i < n; ++i) {
    if (feature[i] >= 0) {
      const bool ok = static_cast<std::size_t>(feature[i]) < n_features && left[i] > static_cast<int>(i) &&
                      right[i] > static_cast<int>(i) && static_cast<std::size_t>(left[i]) < n &&
                      static_cast<std::size_t>(right[i]) < n;
      if (!ok) throw Error(ErrorKind::Corrupt, "tree node references are out of range");
    }
    tree.nodes.push_back({feature[i], threshold[i], left[i], right[i], value[i]});
  }
  return tree;
}

json config_json(const ClassifierConfig& config) {
  json j = std::visit(
      overloaded{
          [](const ForestParams& p) { return json{{"trees", p.trees}}; },
          [](const AdaBoostParams& p) { return json{{"rounds", p.rounds}}; },
          [](const GbtParams& p) {
            return json{{"rounds", p.rounds},       {"learning_rate", p.learning_rate},
                        {"max_depth", p.max_depth}, {"oblivious", p.oblivious},
                        {"l2_leaf", p.l2_leaf},     {"min_child_weight", p.min_child_weight}};
          },
          [](const LinearSvmParams& p) { return json{{"c", p.c}, {"epochs", p.epochs}}; },
      },
      config.params);
  j["classifier"] = std::string(to_string(config.kind()));
  j["seed"] = config.seed;
  return j;
}

ClassifierConfig config_from(const json& j) {
  const auto name = j.at("classifier").get<std::string>();
  const auto kind = parse_classifier(name);
  if (!kind) throw Error(ErrorKind::Corrupt, "unknown classifier '" + name + "'");
  ClassifierConfig config = make_config(*kind, j.at("seed").get<std::uint64_t>());
  std::visit(overloaded{
                 [&](ForestParams& p) { p.trees = j.at("trees").get<int>(); },
                 [&](AdaBoostParams& p) { p.rounds = j.at("rounds").get<int>(); },
                 [&](GbtParams& p) {
                   p.rounds = j.at("rounds").get<int>();
                   p.learning_rate = j.at("learning_rate").get<double>();
                   p.max_depth = j.at("max_depth").get<int>();
                   p.oblivious = j.at("oblivious").get<bool>();
                   p.l2_leaf = j.at("l2_leaf").get<double>();
                   p.min_child_weight = j.at("min_child_weight").get<double>();
                 },
                 [&](LinearSvmParams& p) {
                   p.c = j.at("c").get<double>();
                   p.epochs = j.at("epochs").get<int>();
                 },
             },
             config.params);
  return config;
}

json params_json(const ModelParams& params) {
  return std::visit(
      overloaded{
          [](const ForestModel& m) {
            json trees = json::array();
            for (const auto& t : m.trees) trees.push_back(tree_json(t));
            return json{{"trees", trees}};
          },
          [](const AdaBoostModel& m) {
            json stumps = json::array();
            for (const auto& t : m.stumps) stumps.push_back(tree_json(t));
            return json{{"stumps", stumps}, {"alphas", m.alphas}};
          },
          [](const GbtModel& m) {
            json trees = json::array();
            for (const auto& t : m.trees) trees.push_back(tree_json(t));
            json oblivious = json::array();
            for (const auto& t : m.oblivious) {
              oblivious.push_back(
                  {{"features", t.features}, {"thresholds", t.thresholds}, {"leaves", t.leaves}});
            }
            return json{{"base_margin", m.base_margin}, {"trees", trees}, {"oblivious", oblivious}};
          },
          [](const LinearSvmModel& m) { return json{{"weights", m.weights}, {"bias", m.bias}}; },
      },
      params);
}

ModelParams params_from(const json& j, ClassifierKind kind, std::size_t n_features) {
  switch (kind) {
    case ClassifierKind::Forest: {
      ForestModel m;
      for (const auto& t : j.at("trees")) m.trees.push_back(tree_from(t, n_features));
      return m;
    }
    case ClassifierKind::Ada: {
      AdaBoostModel m;
      for (const auto& t : j.at("stumps")) m.stumps.push_back(tree_from(t, n_features));
      m.alphas = j.at("alphas").get<std::vector<double>>();
      if (m.alphas.size() != m.stumps.size()) throw Error(ErrorKind::Corrupt, "stump/alpha count mismatch");
      return m;
    }
    case ClassifierKind::GbtA:
    case ClassifierKind::GbtB: {
      GbtModel m;
      m.base_margin = j.at("base_margin").get<double>();
      for (const auto& t : j.at("trees")) m.trees.push_back(tree_from(t, n_features));
      for (const auto& t : j.at("oblivious")) {
        ObliviousTree o;
        o.features = t.at("features").get<std::vector<int>>();
        o.thresholds = t.at("thresholds").get<std::vector<double>>();
        o.leaves = t.at("leaves").get<std::vector<double>>();
        if (o.thresholds.size() != o.features.size() || o.leaves.size() != (std::size_t{1} << o.features.size())) {
          throw Error(ErrorKind::Corrupt, "oblivious tree arrays have inconsistent lengths");
        }
        for (int f : o.features) {
          if (f < 0 || static_cast<std::size_t>(f) >= n_features) {
            throw Error(ErrorKind::Corrupt, "oblivious tree feature out of range");
          }
        }
        m.oblivious.push_back(std::move(o));
      }
      if (!m.trees.empty() && !m.oblivious.empty()) {
        throw Error(ErrorKind::Corrupt, "boosted model mixes tree kinds");
      }
      return m;
    }
    case ClassifierKind::LinearSvm: {
      LinearSvmModel m;
      m.weights = j.at("weights").get<std::vector<double>>();
      m.bias = j.at("bias").get<double>();
      if (m.weights.size() != n_features) throw Error(ErrorKind::Corrupt, "SVM weight arity mismatch");
      return m;
    }
  }
  throw Error(ErrorKind::Corrupt, "unknown model kind");
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw Error(ErrorKind::Io, "cannot create directory " + path.parent_path().string());
  }
  auto tmp = path;
  tmp += ".tmp-" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(ErrorKind::Io, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorKind::Io, "cannot move output into place at " + path.string());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string session_to_jsonl(const Session& session, std::string_view provenance) {
  json layout = json::array();
  for (const auto& [label, rect] : session.layout.entries()) {
    layout.push_back({{"aoi", to_string(label)}, {"rect", {rect.x0, rect.y0, rect.x1, rect.y1}}});
  }
  json timeline = json::array();
  for (const auto& ev : session.timeline) {
    timeline.push_back({{"t", ev.t}, {"piece", ev.piece}, {"event", to_string(ev.kind)}});
  }
  json header = {{"record", "header"},
                 {"schema_version", kSessionSchemaVersion},
                 {"participant", session.participant_id},
                 {"puzzle", session.puzzle_id},
                 {"duration", session.duration},
                 {"aoi_layout", layout},
                 {"timeline", timeline}};
  if (!provenance.empty()) header["provenance"] = provenance;
  if (session.failure) {
    header["failure"] = {{"piece", session.failure->piece},
                         {"type", session.failure->type == FailureType::EF ? "EF" : "DF"}};
  }

  std::string out = header.dump();
  out += '\n';
  out.reserve(out.size() + session.gaze.size() * 48);
  for (const auto& s : session.gaze) {
    out += "{\"t\":";
    out += format_double(s.t);
    out += ",\"x\":";
    out += format_double(s.point.x);
    out += ",\"y\":";
    out += format_double(s.point.y);
    out += s.valid ? ",\"valid\":true}\n" : ",\"valid\":false}\n";
  }
  return out;
}

Session session_from_jsonl(std::istream& in, std::string_view source) {
  std::string line;
  if (!std::getline(in, line)) corrupt(source, "empty session file");
  Session session;
  try {
    const auto header = json::parse(line);
    if (header.value("record", "") != "header") corrupt(source, "first record is not a header");
    const int version = header.at("schema_version").get<int>();
    if (version != kSessionSchemaVersion) {
      throw Error(ErrorKind::SchemaVersion, std::string(source) + ": session schema version " +
                                                std::to_string(version) + " is not supported");
    }
    session.participant_id = header.at("participant").get<int>();
    session.puzzle_id = header.at("puzzle").get<int>();
    session.duration = header.at("duration").get<double>();
    std::vector<AoiLayout::Entry> entries;
    for (const auto& e : header.at("aoi_layout")) {
      const auto name = e.at("aoi").get<std::string>();
      const auto label = parse_aoi(name);
      if (!label) corrupt(source, "unknown AOI '" + name + "'");
      const auto r = e.at("rect").get<std::array<double, 4>>();
      entries.push_back({*label, Rect{r[0], r[1], r[2], r[3]}});
    }
    session.layout = AoiLayout(std::move(entries));
    for (const auto& e : header.at("timeline")) {
      const auto name = e.at("event").get<std::string>();
      const auto kind = parse_timeline_kind(name);
      if (!kind) corrupt(source, "unknown timeline event '" + name + "'");
      session.timeline.push_back({e.at("t").get<double>(), e.at("piece").get<int>(), *kind});
    }
    if (header.contains("failure")) {
      const auto& f = header["failure"];
      const auto type = f.at("type").get<std::string>();
      if (type != "EF" && type != "DF") corrupt(source, "unknown failure type '" + type + "'");
      session.failure = FailureAnnotation{f.at("piece").get<int>(), type == "EF" ? FailureType::EF : FailureType::DF};
    }

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const auto rec = json::parse(line);
      GazeSample s;
      s.t = rec.at("t").get<double>();
      s.point = {rec.at("x").get<double>(), rec.at("y").get<double>()};
      s.valid = rec.at("valid").get<bool>();
      if (!session.gaze.empty() && !(s.t > session.gaze.back().t)) {
        throw Error(ErrorKind::MalformedStream, std::string(source) + ": timestamps not increasing at line " +
                                                    std::to_string(line_no));
      }
      session.gaze.push_back(s);
    }
  } catch (const json::exception& e) {
    corrupt(source, std::string("malformed session record: ") + e.what());
  }
  return session;
}

void save_session(const std::filesystem::path& path, const Session& session, std::string_view provenance) {
  write_file_atomic(path, session_to_jsonl(session, provenance));
}

Session load_session(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open session " + path.string());
  return session_from_jsonl(in, path.string());
}

std::string feature_table_csv(std::span<const eval::SegmentRecord> records, std::string_view provenance) {
  std::string out;
  if (!provenance.empty()) {
    out += "# ";
    out += provenance;
    out += '\n';
  }
  out += "participant,puzzle,piece,label,t0,t1";
  for (auto name : feature_names()) {
    out += ',';
    out += name;
  }
  out += '\n';
  for (const auto& r : records) {
    out += std::to_string(r.segment.participant_id) + ',' + std::to_string(r.segment.puzzle_id) + ',' +
           std::to_string(r.segment.piece_index) + ',' + std::string(to_string(r.segment.label)) + ',' +
           format_double(r.segment.t_start) + ',' + format_double(r.segment.t_end);
    for (double v : r.features.to_array()) {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

std::vector<eval::SegmentRecord> parse_feature_table(std::string_view text, std::string_view source) {
  std::vector<eval::SegmentRecord> records;
  bool header_seen = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    const auto cells = split(line, ',');
    if (!header_seen) {
      if (cells.size() != 6 + kFeatureCount || cells[0] != "participant") {
        corrupt(source, "unexpected feature table header");
      }
      for (std::size_t f = 0; f < kFeatureCount; ++f) {
        if (cells[6 + f] != feature_names()[f]) {
          throw Error(ErrorKind::SchemaVersion, std::string(source) + ": feature column '" +
                                                    std::string(cells[6 + f]) + "' does not match schema");
        }
      }
      header_seen = true;
      continue;
    }
    if (cells.size() != 6 + kFeatureCount) corrupt(source, "wrong column count at line " + std::to_string(line_no));
    eval::SegmentRecord r;
    const auto label = parse_segment_label(cells[3]);
    bool ok = parse_number(cells[0], r.segment.participant_id) && parse_number(cells[1], r.segment.puzzle_id) &&
              parse_number(cells[2], r.segment.piece_index) && label.has_value() &&
              parse_number(cells[4], r.segment.t_start) && parse_number(cells[5], r.segment.t_end);
    std::array<double, kFeatureCount> values{};
    for (std::size_t f = 0; ok && f < kFeatureCount; ++f) ok = parse_number(cells[6 + f], values[f]);
    if (!ok) corrupt(source, "unparseable value at line " + std::to_string(line_no));
    r.segment.label = *label;
    r.features = FeatureVector::from_array(values);
    records.push_back(r);
  }
  if (!header_seen) corrupt(source, "missing feature table header");
  return records;
}

std::string model_to_json(const TrainedModel& model) {
  json j = {
      {"format", "gaze-sentinel-model"},
      {"schema_version", kModelSchemaVersion},
      {"fingerprint", model.config().fingerprint()},
      {"n_features", model.n_features()},
      {"config", config_json(model.config())},
      {"standardizer", nullptr},
      {"model", params_json(model.params())},
  };
  if (const auto& s = model.standardizer()) j["standardizer"] = {{"mean", s->mean}, {"scale", s->scale}};
  return j.dump(1) + "\n";
}

TrainedModel model_from_json(std::string_view text, std::string_view source) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    corrupt(source, std::string("model file is not valid JSON: ") + e.what());
  }
  try {
    if (!j.is_object() || j.value("format", "") != "gaze-sentinel-model") {
      corrupt(source, "not a gaze-sentinel model document");
    }
    const int version = j.at("schema_version").get<int>();
    std::size_t n_features = 0;
    if (version == kModelSchemaVersion) {
      n_features = j.at("n_features").get<std::size_t>();
    } else if (version == 1) {
      n_features = j.at("features").size();
      warn(std::string(source) + ": schema v1 model read by a v" + std::to_string(kModelSchemaVersion) +
           " reader; fingerprint recomputed");
    } else {
      throw Error(ErrorKind::SchemaVersion, std::string(source) + ": model schema version " +
                                                std::to_string(version) + " is not supported (reader is v" +
                                                std::to_string(kModelSchemaVersion) + ")");
    }
    const auto config = config_from(j.at("config"));
    std::optional<Standardizer> standardizer;
    if (!j.at("standardizer").is_null()) {
      standardizer = Standardizer{j["standardizer"].at("mean").get<std::vector<double>>(),
                                  j["standardizer"].at("scale").get<std::vector<double>>()};
      if (standardizer->scale.size() != standardizer->mean.size()) {
        corrupt(source, "standardizer arrays differ in length");
      }
    }
    auto params = params_from(j.at("model"), config.kind(), n_features);
    TrainedModel model(config, n_features, std::move(standardizer), std::move(params));
    if (version == kModelSchemaVersion && j.at("fingerprint").get<std::string>() != config.fingerprint()) {
      corrupt(source, "config fingerprint does not match its config");
    }
    return model;
  } catch (const json::exception& e) {
    corrupt(source, std::string("malformed model document: ") + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Shape) corrupt(source, e.what());
    if (e.kind() == ErrorKind::Corrupt && std::string_view(e.what()).find(source) != 0) corrupt(source, e.what());
    throw;
  }
}

void save_model(const std::filesystem::path& path, const TrainedModel& model) {
  write_file_atomic(path, model_to_json(model));
}

TrainedModel load_model(const std::filesystem::path& path) { return model_from_json(read_file(path), path.string()); }

std::string report_csv(std::span<const eval::EvalReport> reports, std::string_view provenance) {
  std::string out;
  if (!provenance.empty()) {
    out += "# ";
    out += provenance;
    out += '\n';
  }
  out += "task,classifier,n_or_width,fold,accuracy,recall\n";
  auto row = [&](const eval::EvalReport& r, const std::string& fold, const eval::Metrics& m) {
    out += std::string(eval::to_string(r.task)) + ',' + std::string(to_string(r.classifier)) + ',' +
           (r.regime == eval::Regime::FullSegment ? std::string("full") : format_double(r.regime_value)) + ',' +
           fold + ',' + format_double(m.accuracy) + ',' + (m.recall ? format_double(*m.recall) : "NA") + '\n';
  };
  for (const auto& r : reports) {
    for (const auto& f : r.folds) row(r, std::to_string(f.participant), f.metrics);
    row(r, "all", r.aggregate);
  }
  return out;
}

std::string offset_curve_csv(std::span<const OffsetCurve> curves, std::string_view provenance) {
  std::string out;
  if (!provenance.empty()) {
    out += "# ";
    out += provenance;
    out += '\n';
  }
  out += "task,classifier,width,offset_s,pct_detected\n";
  for (const auto& c : curves) {
    for (const auto& r : c.rates) {
      out += std::string(eval::to_string(c.task)) + ',' + std::string(to_string(c.classifier)) + ',' +
             format_double(c.width) + ',' + std::to_string(r.offset) + ',' + format_double(100.0 * r.fraction) + '\n';
    }
  }
  return out;
}

std::string detections_jsonl(std::span<const eval::DetectionEvent> events, std::string_view provenance) {
  std::string out = json{{"record", "header"}, {"provenance", provenance}}.dump() + '\n';
  for (const auto& e : events) {
    out += json{{"participant", e.participant}, {"puzzle", e.puzzle}, {"t0", e.t0},     {"t1", e.t1},
                {"label", e.label},             {"score", e.score},   {"truth", e.truth}}
               .dump();
    out += '\n';
  }
  return out;
}

}  // namespace gaze_sentinel::io
