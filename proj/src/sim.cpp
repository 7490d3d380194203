#include "gaze_sentinel/sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gaze_sentinel/error.hpp"

namespace gaze_sentinel::sim {

namespace {

using json = nlohmann::json;

constexpr ScenarioCondition kEfEarly{FailureType::EF, Timing::Early};
constexpr ScenarioCondition kEfLate{FailureType::EF, Timing::Late};
constexpr ScenarioCondition kDfEarly{FailureType::DF, Timing::Early};
constexpr ScenarioCondition kDfLate{FailureType::DF, Timing::Late};

constexpr std::array<std::array<ScenarioCondition, kPuzzlesPerParticipant>, 4> kLatinSquare = {{
    {kEfEarly, kEfLate, kDfLate, kDfEarly},
    {kEfLate, kDfEarly, kEfEarly, kDfLate},
    {kDfEarly, kDfLate, kEfLate, kEfEarly},
    {kDfLate, kEfEarly, kDfEarly, kEfLate},
}};

// Off-AOI gaze lands here; no layout rectangle covers it.
constexpr Rect kElsewhereRegion{1600.0, 500.0, 2000.0, 900.0};

double draw(Rng& rng, Range r) { return rng.uniform(r.lo, r.hi); }

std::size_t sample_index(std::span<const double, kAoiCount> weights, Rng& rng) {
  double total = 0.0;
  for (double w : weights) total += w;
  double u = rng.uniform() * total;
  std::size_t last = 0;
  for (std::size_t j = 0; j < kAoiCount; ++j) {
    if (weights[j] <= 0.0) continue;
    last = j;
    if (u < weights[j]) return j;
    u -= weights[j];
  }
  return last;
}

struct Interval {
  double start;
  double end;
};

// Piecewise description of what the robot is doing, used to pick the gaze
// regime at any instant.
struct Schedule {
  std::vector<Interval> robot_actions;
  Interval failure{0.0, 0.0};
  FailureType failure_type = FailureType::EF;
};

Schedule schedule_of(const Timeline& timeline) {
  Schedule s;
  for (int piece = 1; piece <= kRobotPieces; ++piece) {
    Interval iv{-1.0, -1.0};
    for (const auto& ev : timeline.events) {
      if (ev.piece != piece) continue;
      if (ev.kind == TimelineEventKind::PickupStart) iv.start = ev.t;
      if (ev.kind == TimelineEventKind::PlacementDone) iv.end = ev.t;
      if (ev.kind == TimelineEventKind::FailureStart) s.failure.start = ev.t;
      if (ev.kind == TimelineEventKind::FailureEnd) s.failure.end = ev.t;
    }
    s.robot_actions.push_back(iv);
  }
  s.failure_type = timeline.failure.type;
  return s;
}

class RegimeResolver {
 public:
  RegimeResolver(const BehaviorParams& params, const ParticipantTraits& traits, const Schedule& schedule,
                 double onset_shift)
      : params_(params), traits_(traits), schedule_(schedule), onset_shift_(onset_shift) {}

  // Effective dwell means and transition rows at time t.
  GazeMode at(double t) const {
    bool robot_active = false;
    for (const auto& iv : schedule_.robot_actions) robot_active |= t >= iv.start && t < iv.end;
    GazeMode mode = robot_active ? params_.robot_action : params_.participant_turn;

    if (t >= schedule_.failure.start && t < schedule_.failure.end) {
      const auto& response = schedule_.failure_type == FailureType::EF ? params_.ef : params_.df;
      const double w =
          response.envelope.at(t - schedule_.failure.start - onset_shift_) * traits_.reactivity;
      for (std::size_t l = 0; l < kAoiCount; ++l) {
        mode.mean_dwell[l] += w * response.dwell_delta[l];
        for (std::size_t j = 0; j < kAoiCount; ++j) {
          mode.transitions[l][j] += w * response.transition_delta[l][j];
        }
      }
    } else if (robot_active && params_.planning_distractor) {
      for (auto& row : mode.transitions) row[index_of(AoiLabel::ParticipantPieces)] *= 1.5;
    }

    for (std::size_t l = 0; l < kAoiCount; ++l) {
      mode.mean_dwell[l] = std::max(0.02, mode.mean_dwell[l] * traits_.dwell_scale[l]);
      for (std::size_t j = 0; j < kAoiCount; ++j) {
        auto& p = mode.transitions[l][j];
        p = j == l ? 0.0 : std::max(0.0, p) * traits_.preference[j];
      }
    }
    return mode;
  }

 private:
  const BehaviorParams& params_;
  const ParticipantTraits& traits_;
  const Schedule& schedule_;
  double onset_shift_;
};

Point2 fixation_target(AoiLabel aoi, const AoiLayout& layout, Rng& rng) {
  const Rect* rect = layout.rect_for(aoi);
  const Rect r = rect ? *rect : kElsewhereRegion;
  // Keep fixation centers in the inner 60% so jitter rarely leaves the AOI.
  const double mx = 0.2 * (r.x1 - r.x0);
  const double my = 0.2 * (r.y1 - r.y0);
  return {rng.uniform(r.x0 + mx, r.x1 - mx), rng.uniform(r.y0 + my, r.y1 - my)};
}

json matrix_json(const AoiMatrix& m) {
  json rows = json::array();
  for (const auto& row : m) rows.push_back(row);
  return rows;
}

json mode_json(const GazeMode& m) {
  return {{"mean_dwell", m.mean_dwell}, {"transitions", matrix_json(m.transitions)}};
}

json response_json(const FailureResponse& r) {
  return {{"dwell_delta", r.dwell_delta},
          {"transition_delta", matrix_json(r.transition_delta)},
          {"envelope",
           {{"onset", r.envelope.onset},
            {"ramp", r.envelope.ramp},
            {"hold_until", r.envelope.hold_until},
            {"fade", r.envelope.fade},
            {"residual", r.envelope.residual}}}};
}

GazeMode mode_from(const json& j) {
  GazeMode m;
  m.mean_dwell = j.at("mean_dwell").get<std::array<double, kAoiCount>>();
  m.transitions = j.at("transitions").get<AoiMatrix>();
  return m;
}

FailureResponse response_from(const json& j) {
  FailureResponse r;
  r.dwell_delta = j.at("dwell_delta").get<std::array<double, kAoiCount>>();
  r.transition_delta = j.at("transition_delta").get<AoiMatrix>();
  const auto& e = j.at("envelope");
  r.envelope = {e.at("onset").get<double>(), e.at("ramp").get<double>(),
                e.at("hold_until").get<double>(), e.at("fade").get<double>(),
                e.at("residual").get<double>()};
  return r;
}

void check_mode(const GazeMode& mode, std::string_view name) {
  for (std::size_t i = 0; i < kAoiCount; ++i) {
    if (!(mode.mean_dwell[i] > 0.0)) {
      throw Error(ErrorKind::InvalidArgument, std::string(name) + ": mean dwells must be positive");
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < kAoiCount; ++j) {
      if (mode.transitions[i][j] < 0.0) {
        throw Error(ErrorKind::InvalidArgument, std::string(name) + ": negative transition probability");
      }
      sum += mode.transitions[i][j];
    }
    if (mode.transitions[i][i] != 0.0) {
      throw Error(ErrorKind::InvalidArgument, std::string(name) + ": transition diagonal must be zero");
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw Error(ErrorKind::InvalidArgument, std::string(name) + ": transition rows must sum to 1");
    }
  }
}

}  // namespace

std::string to_string(ScenarioCondition condition) {
  return std::string(condition.type == FailureType::EF ? "EF" : "DF") +
         (condition.timing == Timing::Early ? "-Early" : "-Late");
}

std::array<ScenarioCondition, kPuzzlesPerParticipant> latin_square_schedule(int participant_id) {
  if (participant_id < 1) {
    throw Error(ErrorKind::InvalidArgument, "participant ids start at 1");
  }
  return kLatinSquare[static_cast<std::size_t>((participant_id - 1) % 4)];
}

double Envelope::at(double tau) const {
  if (tau < onset) return 0.0;
  if (tau < onset + ramp) return (tau - onset) / ramp;
  if (tau < hold_until) return 1.0;
  if (fade > 0.0 && tau < hold_until + fade) return 1.0 - (1.0 - residual) * (tau - hold_until) / fade;
  return residual;
}

void BehaviorParams::validate() const {
  if (!(sample_rate_hz > 0.0) || !(min_dwell > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "sample rate and min dwell must be positive");
  }
  check_mode(robot_action, "robot_action");
  check_mode(participant_turn, "participant_turn");
  for (const auto* r : {&ef, &df}) {
    for (std::size_t i = 0; i < kAoiCount; ++i) {
      if (r->transition_delta[i][i] != 0.0) {
        throw Error(ErrorKind::InvalidArgument, "failure transition deltas must keep a zero diagonal");
      }
    }
  }
  if (participant_variability < 0.0 || reactivity_variability < 0.0 || onset_jitter < 0.0 ||
      jitter_mm < 0.0 || dropout_rate < 0.0 || dropout_rate >= 1.0 || blink_rate_hz < 0.0) {
    throw Error(ErrorKind::InvalidArgument, "noise levels must be non-negative");
  }
}

BehaviorParams BehaviorParams::without_failure_response() const {
  BehaviorParams out = *this;
  out.name = name + "-null";
  for (auto* r : {&out.ef, &out.df}) {
    r->dwell_delta.fill(0.0);
    for (auto& row : r->transition_delta) row.fill(0.0);
  }
  return out;
}

BehaviorParams default_profile() {
  BehaviorParams p;
  p.name = "default";
  // AOI order: robot body, end effector, robot pieces, participant pieces,
  // puzzle board, elsewhere.
  p.robot_action.mean_dwell = {0.35, 0.60, 0.35, 0.40, 0.45, 0.30};
  p.robot_action.transitions = {{
      {0.00, 0.45, 0.15, 0.10, 0.20, 0.10},
      {0.15, 0.00, 0.25, 0.10, 0.40, 0.10},
      {0.10, 0.50, 0.00, 0.10, 0.25, 0.05},
      {0.10, 0.30, 0.10, 0.00, 0.40, 0.10},
      {0.10, 0.45, 0.10, 0.20, 0.00, 0.15},
      {0.15, 0.30, 0.10, 0.15, 0.30, 0.00},
  }};
  p.participant_turn.mean_dwell = {0.30, 0.30, 0.30, 0.70, 0.70, 0.40};
  p.participant_turn.transitions = {{
      {0.00, 0.10, 0.05, 0.35, 0.40, 0.10},
      {0.10, 0.00, 0.05, 0.35, 0.40, 0.10},
      {0.05, 0.05, 0.00, 0.40, 0.40, 0.10},
      {0.03, 0.03, 0.04, 0.00, 0.80, 0.10},
      {0.03, 0.03, 0.04, 0.75, 0.00, 0.15},
      {0.05, 0.05, 0.05, 0.40, 0.45, 0.00},
  }};

  p.ef.dwell_delta = {-0.10, -0.30, -0.15, -0.15, -0.15, -0.15};
  p.ef.transition_delta = {{
      {0.00, 0.00, 0.00, 0.06, 0.00, 0.00},
      {1.00, 0.00, 0.00, 0.06, 0.00, 0.00},
      {1.00, 0.00, 0.00, 0.06, 0.00, 0.00},
      {1.00, 0.00, 0.00, 0.00, 0.00, 0.00},
      {1.00, 0.00, 0.00, 0.06, 0.00, 0.00},
      {1.00, 0.00, 0.00, 0.06, 0.00, 0.00},
  }};
  p.ef.envelope = {2.0, 2.0, 12.0, 2.0, 0.3};

  p.df.dwell_delta = {-0.10, -0.35, -0.10, -0.10, 0.00, -0.10};
  p.df.transition_delta = {{
      {0.00, 1.00, 0.00, 0.08, 0.00, 0.00},
      {0.30, 0.00, 0.00, 0.08, 0.00, 0.00},
      {0.30, 1.00, 0.00, 0.08, 0.00, 0.00},
      {0.30, 1.00, 0.00, 0.00, 0.00, 0.00},
      {0.30, 1.00, 0.00, 0.08, 0.00, 0.00},
      {0.30, 1.00, 0.00, 0.08, 0.00, 0.00},
  }};
  p.df.envelope = {0.8, 1.2, 9.0, 2.0, 0.2};
  p.reactivity_variability = 0.4;
  return p;
}

std::string profile_to_json(const BehaviorParams& p) {
  json j = {
      {"schema_version", kProfileSchemaVersion},
      {"name", p.name},
      {"sample_rate_hz", p.sample_rate_hz},
      {"min_dwell", p.min_dwell},
      {"robot_action", mode_json(p.robot_action)},
      {"participant_turn", mode_json(p.participant_turn)},
      {"failure_ef", response_json(p.ef)},
      {"failure_df", response_json(p.df)},
      {"noise",
       {{"participant_variability", p.participant_variability},
        {"reactivity_variability", p.reactivity_variability},
        {"onset_jitter", p.onset_jitter},
        {"jitter_mm", p.jitter_mm},
        {"dropout_rate", p.dropout_rate},
        {"blink_rate_hz", p.blink_rate_hz}}},
      {"planning_distractor", p.planning_distractor},
  };
  return j.dump(2) + "\n";
}

BehaviorParams profile_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Corrupt, std::string("behavior profile is not valid JSON: ") + e.what());
  }
  try {
    const int version = j.at("schema_version").get<int>();
    if (version != kProfileSchemaVersion) {
      throw Error(ErrorKind::SchemaVersion, "behavior profile schema version " + std::to_string(version) +
                                                " is not supported (expected " +
                                                std::to_string(kProfileSchemaVersion) + ")");
    }
    BehaviorParams p;
    p.name = j.at("name").get<std::string>();
    p.sample_rate_hz = j.at("sample_rate_hz").get<double>();
    p.min_dwell = j.at("min_dwell").get<double>();
    p.robot_action = mode_from(j.at("robot_action"));
    p.participant_turn = mode_from(j.at("participant_turn"));
    p.ef = response_from(j.at("failure_ef"));
    p.df = response_from(j.at("failure_df"));
    const auto& noise = j.at("noise");
    p.participant_variability = noise.at("participant_variability").get<double>();
    p.reactivity_variability = noise.at("reactivity_variability").get<double>();
    p.onset_jitter = noise.at("onset_jitter").get<double>();
    p.jitter_mm = noise.at("jitter_mm").get<double>();
    p.dropout_rate = noise.at("dropout_rate").get<double>();
    p.blink_rate_hz = noise.at("blink_rate_hz").get<double>();
    p.planning_distractor = j.value("planning_distractor", false);
    p.validate();
    return p;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Corrupt, std::string("behavior profile is malformed: ") + e.what());
  }
}

BehaviorParams load_profile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open behavior profile " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return profile_from_json(buffer.str());
}

Timeline build_timeline(ScenarioCondition condition, const TimingParams& timing, Rng& rng) {
  Timeline tl;
  tl.failure = {condition.piece(), condition.type};
  double t = draw(rng, timing.lead_in);
  for (int piece = 1; piece <= kRobotPieces; ++piece) {
    const double duration = draw(rng, timing.robot_action);
    const double grasp = std::min(draw(rng, timing.grasp), 0.5 * duration);
    tl.events.push_back({t, piece, TimelineEventKind::PickupStart});
    double done = t + duration;
    if (piece == condition.piece()) {
      const double extra = failure_duration(condition.type);
      tl.events.push_back({t + grasp, piece, TimelineEventKind::FailureStart});
      tl.events.push_back({t + grasp + extra, piece, TimelineEventKind::FailureEnd});
      done += extra;
    }
    tl.events.push_back({done, piece, TimelineEventKind::PlacementDone});
    t = done + (piece < kRobotPieces ? draw(rng, timing.participant_turn) : draw(rng, timing.tail));
  }
  tl.duration = t;
  return tl;
}

ParticipantTraits draw_traits(const BehaviorParams& params, Rng& rng) {
  ParticipantTraits traits;
  for (auto& s : traits.dwell_scale) s = std::exp(params.participant_variability * rng.normal());
  for (auto& s : traits.preference) s = std::exp(params.participant_variability * rng.normal());
  traits.reactivity = std::exp(params.reactivity_variability * rng.normal());
  return traits;
}

AoiLayout default_layout() {
  return AoiLayout({
      {AoiLabel::RobotBody, {0.0, 500.0, 500.0, 900.0}},
      {AoiLabel::EndEffector, {550.0, 450.0, 750.0, 650.0}},
      {AoiLabel::RobotPieces, {0.0, 0.0, 400.0, 400.0}},
      {AoiLabel::PuzzleBoard, {450.0, 0.0, 1050.0, 400.0}},
      {AoiLabel::ParticipantPieces, {1100.0, 0.0, 1500.0, 400.0}},
  });
}

std::vector<GazeSample> synthesize_gaze(const Timeline& timeline, const BehaviorParams& params,
                                        const AoiLayout& layout, Rng& rng,
                                        const ParticipantTraits& traits) {
  params.validate();
  const Schedule schedule = schedule_of(timeline);
  const double onset_shift = rng.uniform(0.0, params.onset_jitter);
  const RegimeResolver resolver(params, traits, schedule, onset_shift);

  const double period = 1.0 / params.sample_rate_hz;
  // Dwells start above the debounce floor with a few samples of margin.
  const double dwell_floor = params.min_dwell + 3.0 * period;
  const auto n = static_cast<std::size_t>(std::ceil(timeline.duration * params.sample_rate_hz));

  std::vector<GazeSample> samples;
  samples.reserve(n);

  auto choose_first = [&](double t) {
    const auto mode = resolver.at(t);
    std::array<double, kAoiCount> weights{};
    for (const auto& row : mode.transitions) {
      for (std::size_t j = 0; j < kAoiCount; ++j) weights[j] += row[j];
    }
    return sample_index(weights, rng);
  };

  // Robot events are salient: whatever the participant was looking at, a new
  // fixation starts when one occurs.
  std::vector<double> event_times;
  for (const auto& ev : timeline.events) event_times.push_back(ev.t);
  std::sort(event_times.begin(), event_times.end());
  auto cut_at_event = [&](double start, double end) {
    const auto it = std::upper_bound(event_times.begin(), event_times.end(), start);
    return it != event_times.end() && *it < end ? *it : end;
  };

  std::size_t state = choose_first(0.0);
  double dwell_end = cut_at_event(0.0, dwell_floor + rng.exponential(resolver.at(0.0).mean_dwell[state]));
  Point2 target = fixation_target(kAllAois[state], layout, rng);
  double next_blink = params.blink_rate_hz > 0.0 ? rng.exponential(1.0 / params.blink_rate_hz) : INFINITY;
  double blink_end = -1.0;
  int dropout_left = 0;

  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / params.sample_rate_hz;
    while (t >= dwell_end) {
      const double start = dwell_end;
      const auto mode = resolver.at(start);
      state = sample_index(mode.transitions[state], rng);
      target = fixation_target(kAllAois[state], layout, rng);
      dwell_end = cut_at_event(start, start + dwell_floor + rng.exponential(mode.mean_dwell[state]));
    }
    if (t >= next_blink) {
      blink_end = t + rng.uniform(0.10, 0.25);
      next_blink = t + rng.exponential(1.0 / params.blink_rate_hz);
    }
    if (dropout_left == 0 && rng.uniform() < params.dropout_rate) {
      dropout_left = 1 + static_cast<int>(rng.index(4));
    }

    GazeSample s;
    s.t = t;
    s.point = {target.x + params.jitter_mm * rng.normal(), target.y + params.jitter_mm * rng.normal()};
    s.valid = t >= blink_end && dropout_left == 0;
    if (dropout_left > 0) --dropout_left;
    if (!s.valid) s.point = {0.0, 0.0};
    samples.push_back(s);
  }
  return samples;
}

Session generate_session(const CorpusSpec& spec, int participant_id, int puzzle_id) {
  if (puzzle_id < 1 || puzzle_id > kPuzzlesPerParticipant) {
    throw Error(ErrorKind::InvalidArgument, "puzzle ids run from 1 to 4");
  }
  const auto condition = latin_square_schedule(participant_id)[static_cast<std::size_t>(puzzle_id - 1)];

  Rng trait_rng(derive_seed(spec.master_seed, static_cast<std::uint64_t>(participant_id), 0));
  const auto traits = draw_traits(spec.behavior, trait_rng);

  Rng rng(derive_seed(spec.master_seed, static_cast<std::uint64_t>(participant_id),
                      static_cast<std::uint64_t>(puzzle_id)));
  const auto timeline = build_timeline(condition, spec.timing, rng);

  Session session;
  session.participant_id = participant_id;
  session.puzzle_id = puzzle_id;
  session.duration = timeline.duration;
  session.layout = default_layout();
  session.timeline = timeline.events;
  session.failure = timeline.failure;
  session.gaze = synthesize_gaze(timeline, spec.behavior, session.layout, rng, traits);
  return session;
}

std::vector<Session> generate_corpus(const CorpusSpec& spec) {
  if (spec.participants < 1) throw Error(ErrorKind::InvalidArgument, "corpus needs at least one participant");
  spec.behavior.validate();
  std::vector<Session> sessions;
  sessions.reserve(static_cast<std::size_t>(spec.participants) * kPuzzlesPerParticipant);
  for (int p = 1; p <= spec.participants; ++p) {
    for (int z = 1; z <= kPuzzlesPerParticipant; ++z) sessions.push_back(generate_session(spec, p, z));
  }
  return sessions;
}

}  // namespace gaze_sentinel::sim
