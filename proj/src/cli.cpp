#include "gaze_sentinel/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "gaze_sentinel/error.hpp"
#include "gaze_sentinel/eval.hpp"
#include "gaze_sentinel/io.hpp"
#include "gaze_sentinel/sim.hpp"
#include "gaze_sentinel/smote.hpp"

#ifndef GAZE_SENTINEL_VERSION
#define GAZE_SENTINEL_VERSION "0.0.0"
#endif

namespace gaze_sentinel::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

constexpr const char* kKeys[] = {"seed", "participants", "task",  "classifier", "mode",
                                 "n",    "width",        "slide", "out",        "profile"};

[[noreturn]] void usage(const std::string& message) { throw Error(ErrorKind::Usage, message); }

template <class T>
T parse_value(std::string_view key, std::string_view text) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) usage("invalid value '" + std::string(text) + "' for " + std::string(key));
  return value;
}

void set_key(RunConfig& c, std::string_view key, std::string_view value) {
  if (key == "seed") {
    c.seed = parse_value<std::uint64_t>(key, value);
  } else if (key == "participants") {
    c.participants = parse_value<int>(key, value);
  } else if (key == "task") {
    c.task = value;
  } else if (key == "classifier") {
    c.classifier = value;
  } else if (key == "mode") {
    c.mode = value;
  } else if (key == "n") {
    c.n_range = value;
  } else if (key == "width") {
    c.width = parse_value<double>(key, value);
  } else if (key == "slide") {
    c.slide = parse_value<double>(key, value);
  } else if (key == "out") {
    c.out = value;
  } else if (key == "profile") {
    c.profile = value;
  } else {
    usage("unknown configuration key '" + std::string(key) + "'");
  }
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

eval::Task resolve_task(const RunConfig& c) {
  const auto task = eval::parse_task(c.task);
  if (!task) usage("unknown task '" + c.task + "' (expected nf-ef or nf-df)");
  return *task;
}

std::vector<learners::ClassifierKind> resolve_classifiers(const RunConfig& c) {
  if (c.classifier == "all") {
    return {std::begin(learners::kAllClassifiers), std::end(learners::kAllClassifiers)};
  }
  const auto kind = learners::parse_classifier(c.classifier);
  if (!kind) usage("unknown classifier '" + c.classifier + "'");
  return {*kind};
}

void validate(const RunConfig& c) {
  if (c.participants < 1) usage("--participants must be at least 1");
  if (c.width != 3.0 && c.width != 5.0 && c.width != 10.0) usage("--width must be 3, 5 or 10");
  if (!(c.slide > 0.0) || !std::isfinite(c.slide)) usage("--slide must be positive");
  if (c.mode != "full" && c.mode != "first-n" && c.mode != "stream") {
    usage("unknown mode '" + c.mode + "' (expected full, first-n or stream)");
  }
}

std::string width_tag(double width) { return "w" + io::format_double(width); }

std::vector<fs::path> session_files(const fs::path& corpus) {
  fs::path dir = fs::is_directory(corpus / "sessions") ? corpus / "sessions" : corpus;
  if (!fs::is_directory(dir)) throw Error(ErrorKind::Io, "corpus directory not found: " + corpus.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error(ErrorKind::Io, "no session files in " + dir.string());
  return files;
}

std::vector<Session> load_corpus(const fs::path& corpus) {
  std::vector<Session> sessions;
  for (const auto& file : session_files(corpus)) sessions.push_back(io::load_session(file));
  return sessions;
}

sim::BehaviorParams resolve_profile(const RunConfig& c) {
  return c.profile.empty() ? sim::default_profile() : sim::load_profile(c.profile);
}

std::string session_file_name(int participant, int puzzle) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "p%03d_z%d.jsonl", participant, puzzle);
  return buf;
}

void cmd_simulate(const RunConfig& c, std::ostream& out) {
  sim::CorpusSpec spec;
  spec.participants = c.participants;
  spec.master_seed = c.seed;
  spec.behavior = resolve_profile(c);
  const fs::path root = c.out;
  const auto provenance = c.provenance();
  json manifest = {{"tool", "gaze-sentinel"},           {"version", tool_version()},
                   {"fingerprint", c.fingerprint()},    {"seed", c.seed},
                   {"participants", c.participants},    {"profile", spec.behavior.name},
                   {"sessions", json::array()}};
  for (int pid = 1; pid <= spec.participants; ++pid) {
    for (int puzzle = 1; puzzle <= sim::kPuzzlesPerParticipant; ++puzzle) {
      const auto session = sim::generate_session(spec, pid, puzzle);
      const auto name = session_file_name(pid, puzzle);
      io::save_session(root / "sessions" / name, session, provenance);
      manifest["sessions"].push_back("sessions/" + name);
    }
  }
  io::write_file_atomic(root / "corpus.json", manifest.dump(1) + "\n");
  out << "simulated " << manifest["sessions"].size() << " sessions into " << root.string() << "\n";
}

void cmd_extract(const RunConfig& c, const std::string& corpus, std::ostream& out) {
  const auto sessions = load_corpus(corpus);
  const auto records = eval::featurize_corpus(sessions);
  const auto path = fs::path(c.out) / "features.csv";
  io::write_file_atomic(path, io::feature_table_csv(records, c.provenance()));
  out << "wrote " << records.size() << " segment rows to " << path.string() << "\n";
}

void cmd_train(const RunConfig& c, const std::string& features, std::ostream& out) {
  const auto task = resolve_task(c);
  const auto records = io::parse_feature_table(io::read_file(features), features);
  const auto data = eval::task_dataset(records, task);
  for (auto kind : resolve_classifiers(c)) {
    const auto config = learners::make_config(kind, c.seed);
    Rng rng(derive_seed(c.seed, 0x534d4f5445ULL));
    const auto balanced = learners::smote(data, learners::kSmoteNeighbors, rng);
    const auto model = learners::train(config, balanced);
    const auto path = fs::path(c.out) /
                      ("model_" + std::string(eval::to_string(task)) + "_" + std::string(to_string(kind)) + ".json");
    io::save_model(path, model);
    out << "trained " << to_string(kind) << " on " << data.size() << " rows (" << balanced.size()
        << " after SMOTE) -> " << path.string() << "\n";
  }
}

void cmd_eval(const RunConfig& c, const std::string& corpus, std::ostream& out) {
  const auto task = resolve_task(c);
  const auto kinds = resolve_classifiers(c);
  const auto sessions = load_corpus(corpus);
  const auto records = eval::featurize_corpus(sessions);
  const fs::path dir = c.out;
  const auto provenance = c.provenance();
  const std::string task_name(eval::to_string(task));

  std::vector<eval::EvalReport> reports;
  if (c.mode == "full") {
    const auto data = eval::task_dataset(records, task);
    for (auto kind : kinds) reports.push_back(eval::loo_cv(data, learners::make_config(kind, c.seed), task));
    io::write_file_atomic(dir / ("report_full_" + task_name + ".csv"), io::report_csv(reports, provenance));
  } else if (c.mode == "first-n") {
    const auto n_values = c.n_range.empty() ? eval::default_n_values(task) : parse_n_range(c.n_range);
    std::string curve = "# " + provenance + "\ntask,classifier,n,accuracy,recall\n";
    for (auto kind : kinds) {
      const auto per_n = eval::eval_first_n(sessions, records, task, learners::make_config(kind, c.seed), n_values);
      for (const auto& r : per_n) {
        curve += task_name + ',' + std::string(to_string(kind)) + ',' + io::format_double(r.regime_value) + ',' +
                 io::format_double(r.aggregate.accuracy) + ',' +
                 (r.aggregate.recall ? io::format_double(*r.aggregate.recall) : "NA") + '\n';
      }
      reports.insert(reports.end(), per_n.begin(), per_n.end());
    }
    io::write_file_atomic(dir / ("report_first-n_" + task_name + ".csv"), io::report_csv(reports, provenance));
    io::write_file_atomic(dir / ("curve_first-n_" + task_name + ".csv"), curve);
  } else {
    const auto which = eval::task_sessions(sessions, task);
    const auto windows = eval::featurize_windows(sessions, which, c.width, c.slide);
    std::vector<io::OffsetCurve> curves;
    for (auto kind : kinds) {
      auto result = eval::eval_stream(sessions, records, windows, task, learners::make_config(kind, c.seed), c.width);
      curves.push_back({task, kind, c.width,
                        eval::interval_detection_rate(result.detections, sessions, task, c.width)});
      reports.push_back(std::move(result.report));
    }
    const auto tag = task_name + "_" + width_tag(c.width);
    io::write_file_atomic(dir / ("report_stream_" + tag + ".csv"), io::report_csv(reports, provenance));
    io::write_file_atomic(dir / ("offsets_" + tag + ".csv"), io::offset_curve_csv(curves, provenance));
  }

  for (const auto& r : reports) {
    out << task_name << ' ' << to_string(r.classifier) << ' ' << eval::to_string(r.regime);
    if (r.regime != eval::Regime::FullSegment) out << ' ' << io::format_double(r.regime_value);
    out << " accuracy=" << io::format_double(r.aggregate.accuracy)
        << " recall=" << (r.aggregate.recall ? io::format_double(*r.aggregate.recall) : "NA") << "\n";
  }
}

void cmd_detect(const RunConfig& c, const std::string& model_path, const std::string& session_path,
                std::ostream& out) {
  const auto model = io::load_model(model_path);
  const auto session = io::load_session(session_path);
  const auto events = eval::stream_detect(model, session, c.width, c.slide);
  char name[64];
  std::snprintf(name, sizeof name, "detections_p%03d_z%d_%s.jsonl", session.participant_id, session.puzzle_id,
                width_tag(c.width).c_str());
  const auto path = fs::path(c.out) / name;
  io::write_file_atomic(path, io::detections_jsonl(events, c.provenance()));
  const auto flagged = std::count_if(events.begin(), events.end(), [](const auto& e) { return e.label == 1; });
  out << flagged << " of " << events.size() << " windows flagged as failure -> " << path.string() << "\n";
}

struct CsvTable {
  std::string provenance;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv(const std::string& path) {
  CsvTable table;
  std::istringstream in(io::read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (table.provenance.empty()) table.provenance = line.substr(std::min<std::size_t>(2, line.size()));
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (table.header.empty()) {
      table.header = std::move(cells);
    } else {
      if (cells.size() != table.header.size()) throw Error(ErrorKind::Corrupt, path + ": ragged CSV row");
      table.rows.push_back(std::move(cells));
    }
  }
  return table;
}

std::string mode_from_provenance(const std::string& provenance) {
  const auto pos = provenance.find("config=");
  if (pos == std::string::npos) return "unknown";
  try {
    return json::parse(provenance.substr(pos + 7)).value("mode", "unknown");
  } catch (const json::exception&) {
    return "unknown";
  }
}

void cmd_report(const RunConfig& c, const std::vector<std::string>& inputs, std::ostream& out) {
  const std::vector<std::string> report_header = {"task", "classifier", "n_or_width", "fold", "accuracy", "recall"};
  const std::vector<std::string> offset_header = {"task", "classifier", "width", "offset_s", "pct_detected"};
  std::string summary = "# " + c.provenance() + "\nregime,task,classifier,n_or_width,accuracy,recall\n";
  std::string peaks = "# " + c.provenance() + "\ntask,classifier,width,peak_offset_s,peak_pct_detected\n";
  std::size_t summary_rows = 0;
  std::size_t peak_rows = 0;
  for (const auto& path : inputs) {
    const auto table = read_csv(path);
    if (table.header == report_header) {
      const auto mode = mode_from_provenance(table.provenance);
      for (const auto& r : table.rows) {
        if (r[3] != "all") continue;
        summary += mode + ',' + r[0] + ',' + r[1] + ',' + r[2] + ',' + r[4] + ',' + r[5] + '\n';
        ++summary_rows;
      }
    } else if (table.header == offset_header) {
      std::map<std::tuple<std::string, std::string, std::string>, std::pair<std::string, double>> best;
      std::vector<std::tuple<std::string, std::string, std::string>> order;
      for (const auto& r : table.rows) {
        const auto key = std::make_tuple(r[0], r[1], r[2]);
        const double pct = parse_value<double>("pct_detected", r[4]);
        auto it = best.find(key);
        if (it == best.end()) {
          best.emplace(key, std::make_pair(r[3], pct));
          order.push_back(key);
        } else if (pct > it->second.second) {
          it->second = {r[3], pct};
        }
      }
      for (const auto& key : order) {
        const auto& [offset, pct] = best.at(key);
        peaks += std::get<0>(key) + ',' + std::get<1>(key) + ',' + std::get<2>(key) + ',' + offset + ',' +
                 io::format_double(pct) + '\n';
        ++peak_rows;
      }
    } else {
      throw Error(ErrorKind::Corrupt, path + ": not a report or offset-curve CSV");
    }
  }
  const fs::path dir = c.out;
  io::write_file_atomic(dir / "summary.csv", summary);
  if (peak_rows > 0) io::write_file_atomic(dir / "offset_peaks.csv", peaks);
  out << "summarized " << summary_rows << " aggregate rows and " << peak_rows << " offset curves into "
      << dir.string() << "\n";
}

}  // namespace

std::string_view tool_version() { return GAZE_SENTINEL_VERSION; }

std::string RunConfig::canonical() const {
  const json j = {{"classifier", classifier}, {"command", command}, {"mode", mode},
                  {"n", n_range},             {"participants", participants},
                  {"profile", profile},       {"seed", seed},
                  {"slide", slide},           {"task", task},
                  {"width", width}};
  return j.dump();
}

std::string RunConfig::fingerprint() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(canonical())));
  return buf;
}

std::string RunConfig::provenance() const {
  return "gaze-sentinel " + std::string(tool_version()) + " fingerprint=" + fingerprint() +
         " seed=" + std::to_string(seed) + " config=" + canonical();
}

void apply_config_json(RunConfig& config, std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    usage(std::string("config file is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) usage("config file must hold a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (value.is_string()) {
      set_key(config, key, value.get<std::string>());
    } else if (value.is_number()) {
      set_key(config, key, value.dump());
    } else {
      usage("config key '" + key + "' must be a string or number");
    }
  }
}

void apply_environment(RunConfig& config, const EnvLookup& lookup) {
  for (const char* key : kKeys) {
    std::string name = "GAZE_SENTINEL_";
    for (const char* p = key; *p; ++p) name += static_cast<char>(std::toupper(static_cast<unsigned char>(*p)));
    if (const char* value = lookup(name.c_str()); value && *value) set_key(config, key, value);
  }
}

std::vector<double> parse_n_range(std::string_view text) {
  const auto sep = text.find("..");
  if (sep == std::string_view::npos) {
    const double v = parse_value<double>("--n", text);
    if (!(v > 0.0)) usage("--n values must be positive");
    return {v};
  }
  const double a = parse_value<double>("--n", text.substr(0, sep));
  const double b = parse_value<double>("--n", text.substr(sep + 2));
  if (!(a > 0.0) || !(b >= a)) usage("--n range must satisfy 0 < a <= b");
  std::vector<double> values;
  for (double v = a; v <= b + 1e-9; v += 1.0) values.push_back(v);
  if (b - values.back() > 1e-9) values.push_back(b);
  return values;
}

int exit_code_for(std::string_view kind) {
  if (kind == "usage") return 2;
  if (kind == "io") return 3;
  if (kind == "schema-version") return 4;
  if (kind == "corrupt") return 5;
  return 1;
}

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  auto report_error = [&](std::string_view kind, const std::string& message) {
    err << json{{"error", {{"kind", kind}, {"message", message}}}}.dump() << "\n";
    return exit_code_for(kind);
  };

  CLI::App app{"Gaze-based robot failure detection", "gaze-sentinel"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(tool_version()));

  RunConfig flags;
  std::string config_path;
  app.add_option("--config", config_path, "JSON file with default settings");
  std::vector<std::pair<std::string, CLI::Option*>> given;

  auto add_common = [&](CLI::App* sub) {
    given.emplace_back("seed", sub->add_option("--seed", flags.seed, "Master seed"));
    given.emplace_back("out", sub->add_option("--out", flags.out, "Output directory"));
    sub->add_option("--config", config_path, "JSON file with default settings");
  };
  auto add_task = [&](CLI::App* sub) {
    given.emplace_back("task", sub->add_option("--task", flags.task, "nf-ef or nf-df"));
    given.emplace_back("classifier", sub->add_option("--classifier", flags.classifier, "forest, ada, gbt-a, svm, gbt-b or all"));
  };
  auto add_window = [&](CLI::App* sub) {
    given.emplace_back("width", sub->add_option("--width", flags.width, "Window width in seconds (3, 5 or 10)"));
    given.emplace_back("slide", sub->add_option("--slide", flags.slide, "Window slide in seconds"));
  };

  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic session corpus");
  add_common(simulate);
  given.emplace_back("participants", simulate->add_option("--participants", flags.participants, "Number of participants"));
  given.emplace_back("profile", simulate->add_option("--profile", flags.profile, "Behavior profile JSON"));

  std::vector<std::string> positional;
  auto* extract = app.add_subcommand("extract", "Featurize the segments of a corpus");
  add_common(extract);
  extract->add_option("corpus", positional, "Corpus directory")->required()->expected(1);

  auto* train = app.add_subcommand("train", "Train classifiers on a feature table");
  add_common(train);
  add_task(train);
  train->add_option("features", positional, "Feature CSV")->required()->expected(1);

  auto* evaluate = app.add_subcommand("eval", "Leave-one-participant-out evaluation");
  add_common(evaluate);
  add_task(evaluate);
  add_window(evaluate);
  given.emplace_back("mode", evaluate->add_option("--mode", flags.mode, "full, first-n or stream"));
  given.emplace_back("n", evaluate->add_option("--n", flags.n_range, "First-n range a..b"));
  evaluate->add_option("corpus", positional, "Corpus directory")->required()->expected(1);

  auto* detect = app.add_subcommand("detect", "Sliding-window detection on one session");
  add_common(detect);
  add_window(detect);
  detect->add_option("inputs", positional, "Model JSON and session JSONL")->required()->expected(2);

  auto* report = app.add_subcommand("report", "Summarize report and offset-curve CSVs");
  add_common(report);
  report->add_option("inputs", positional, "CSV files")->required()->expected(1, 1000);

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << tool_version() << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    return report_error("usage", e.what());
  }

  try {
    RunConfig c;
    c.command = app.get_subcommands().front()->get_name();
    if (const char* env_config = std::getenv("GAZE_SENTINEL_CONFIG"); config_path.empty() && env_config) {
      config_path = env_config;
    }
    if (!config_path.empty()) {
      std::string text;
      try {
        text = io::read_file(config_path);
      } catch (const Error&) {
        usage("cannot read config file " + config_path);
      }
      apply_config_json(c, text);
    }
    apply_environment(c, [](const char* name) -> const char* { return std::getenv(name); });
    for (const auto& [key, option] : given) {
      if (option->count() == 0) continue;
      if (key == "seed") c.seed = flags.seed;
      if (key == "out") c.out = flags.out;
      if (key == "task") c.task = flags.task;
      if (key == "classifier") c.classifier = flags.classifier;
      if (key == "width") c.width = flags.width;
      if (key == "slide") c.slide = flags.slide;
      if (key == "participants") c.participants = flags.participants;
      if (key == "profile") c.profile = flags.profile;
      if (key == "mode") c.mode = flags.mode;
      if (key == "n") c.n_range = flags.n_range;
    }
    validate(c);

    if (c.command == "simulate") {
      cmd_simulate(c, out);
    } else if (c.command == "extract") {
      cmd_extract(c, positional.at(0), out);
    } else if (c.command == "train") {
      cmd_train(c, positional.at(0), out);
    } else if (c.command == "eval") {
      cmd_eval(c, positional.at(0), out);
    } else if (c.command == "detect") {
      cmd_detect(c, positional.at(0), positional.at(1), out);
    } else {
      cmd_report(c, positional, out);
    }
  } catch (const Error& e) {
    return report_error(to_string(e.kind()), e.what());
  } catch (const std::exception& e) {
    return report_error("internal", e.what());
  }
  return 0;
}

}  // namespace gaze_sentinel::cli
