#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "gaze_sentinel/core.hpp"
#include "gaze_sentinel/rng.hpp"

namespace gaze_sentinel::sim {

inline constexpr int kProfileSchemaVersion = 1;
inline constexpr int kPuzzlesPerParticipant = 4;
inline constexpr int kRobotPieces = 4;

enum class Timing { Early, Late };

struct ScenarioCondition {
  FailureType type = FailureType::EF;
  Timing timing = Timing::Early;

  // Robot piece that fails: the first (early) or the third (late).
  int piece() const { return timing == Timing::Early ? 1 : 3; }
  friend bool operator==(const ScenarioCondition&, const ScenarioCondition&) = default;
};

std::string to_string(ScenarioCondition condition);  // e.g. "EF-Early"

// Counterbalanced order of the four conditions; rows repeat every four
// participants. Throws InvalidArgument for participant_id < 1.
std::array<ScenarioCondition, kPuzzlesPerParticipant> latin_square_schedule(int participant_id);

using AoiMatrix = std::array<std::array<double, kAoiCount>, kAoiCount>;

// Semi-Markov gaze regime: dwell on an AOI is min-floor plus an exponential
// with the given mean; the next AOI is drawn from the transition row.
struct GazeMode {
  std::array<double, kAoiCount> mean_dwell{};
  AoiMatrix transitions{};
};

// Reaction strength as a function of time since failure onset: zero until
// `onset`, linear rise over `ramp`, full until `hold_until`, linear decay to
// `residual` over `fade`.
struct Envelope {
  double onset = 0.0;
  double ramp = 1.0;
  double hold_until = 10.0;
  double fade = 2.0;
  double residual = 0.5;

  double at(double tau) const;
};

// Added to the robot-action regime during a failure, scaled by the envelope.
struct FailureResponse {
  std::array<double, kAoiCount> dwell_delta{};
  AoiMatrix transition_delta{};
  Envelope envelope;
};

struct BehaviorParams {
  std::string name = "default";
  double sample_rate_hz = 200.0;
  double min_dwell = 0.1;
  GazeMode robot_action;
  GazeMode participant_turn;
  FailureResponse ef;
  FailureResponse df;
  // Log-normal spread of each participant's dwell means and AOI preferences.
  double participant_variability = 0.2;
  // Log-normal spread of each participant's reaction strength.
  double reactivity_variability = 0.3;
  // Uniform jitter (seconds) added to the reaction onset of each failure.
  double onset_jitter = 1.0;
  double jitter_mm = 4.0;
  double dropout_rate = 0.004;  // per-sample chance of a short (<50 ms) dropout
  double blink_rate_hz = 0.2;
  // Participants glance at their own pieces while the robot places, as if
  // planning their next move.
  bool planning_distractor = false;

  // Throws InvalidArgument on rows not summing to 1, nonzero diagonals,
  // negative probabilities, or non-positive dwells/rates.
  void validate() const;

  // Same profile with every failure delta set to zero.
  BehaviorParams without_failure_response() const;
};

// The committed, calibrated profile (also shipped as profiles/default.json).
BehaviorParams default_profile();

std::string profile_to_json(const BehaviorParams& params);
// Throws SchemaVersion on a version mismatch and Corrupt on malformed text.
BehaviorParams profile_from_json(std::string_view text);
BehaviorParams load_profile(const std::filesystem::path& path);

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct TimingParams {
  Range lead_in{1.0, 3.0};
  Range robot_action{13.5, 18.0};  // duration of a correct pick-and-place
  Range grasp{3.0, 5.0};           // from pickup start to the moment the failure begins
  Range participant_turn{28.0, 38.0};
  Range tail{3.0, 6.0};
};

struct Timeline {
  std::vector<TimelineEvent> events;
  FailureAnnotation failure;
  double duration = 0.0;
};

// Four robot pick-and-place episodes with participant turns in between; the
// failure on piece 1 or 3 adds 15 s (EF hold) or 16.5 s (DF wrong placement,
// pause and correction).
Timeline build_timeline(ScenarioCondition condition, const TimingParams& timing, Rng& rng);

struct ParticipantTraits {
  std::array<double, kAoiCount> dwell_scale{1, 1, 1, 1, 1, 1};
  std::array<double, kAoiCount> preference{1, 1, 1, 1, 1, 1};
  double reactivity = 1.0;
};

ParticipantTraits draw_traits(const BehaviorParams& params, Rng& rng);

AoiLayout default_layout();

std::vector<GazeSample> synthesize_gaze(const Timeline& timeline, const BehaviorParams& params,
                                        const AoiLayout& layout, Rng& rng,
                                        const ParticipantTraits& traits = {});

struct CorpusSpec {
  int participants = 26;
  std::uint64_t master_seed = 7;
  BehaviorParams behavior = default_profile();
  TimingParams timing;
};

// Session for (participant, puzzle); depends only on the corpus settings and those ids.
Session generate_session(const CorpusSpec& spec, int participant_id, int puzzle_id);

// participants x 4 sessions ordered by participant then puzzle. Throws
// InvalidArgument for fewer than one participant.
std::vector<Session> generate_corpus(const CorpusSpec& spec);

}  // namespace gaze_sentinel::sim
