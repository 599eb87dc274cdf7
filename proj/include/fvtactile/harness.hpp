#pragma once

// Scenario runner, load probing, the scripted assembly sequence and plot-data
// projection of episode logs.

#include "fvtactile/io.hpp"
#include "fvtactile/pipeline.hpp"
#include "fvtactile/skills.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace fvt {

enum ExitCode : int { kExitSuccess = 0, kExitFailure = 1, kExitUsage = 2, kExitInternal = 3 };

// ---------------------------------------------------------------------------
// Registry

struct ScenarioInfo {
  std::string name;
  std::string default_skill;  // "none" runs the sensing loop without a skill
  int default_frames = 0;
  std::string description;
  std::vector<std::string> params;
};

const std::vector<ScenarioInfo>& scenario_registry();
/// Throws Error("invalid_argument") listing the known names.
const ScenarioInfo& scenario_info(const std::string& name);

/// skill_names() plus "none".
const std::vector<std::string>& runnable_skill_names();
/// Keys accepted in RunConfig::skill_params for a skill.
std::vector<std::string> skill_param_names(const std::string& skill);

struct RunConfig {
  std::string scenario;
  std::string skill;  // empty: the scenario default
  std::uint64_t seed = 0;
  std::optional<int> frames;
  std::map<std::string, double> skill_params;
  std::map<std::string, double> scenario_params;
  std::filesystem::path out_dir;  // empty: nothing written
  bool save_frames = false;       // PGM per frame under out_dir/frames
  int verbosity = 0;

  /// Unknown scenario, skill or parameter names throw Error("invalid_argument").
  void validate() const;
  std::string resolved_skill() const;
};

/// Context a skill may need from the calibrated pipeline.
struct SkillContext {
  double rest_area = 0.0;
  double image_area = 320.0 * 240.0;
  std::string scenario;
};

/// Throws Error("invalid_argument") for unknown names or parameter keys.
/// Returns nullptr for "none".
std::unique_ptr<Skill> make_skill(const std::string& name,
                                  const std::map<std::string, double>& params,
                                  const SkillContext& ctx = {});

std::unique_ptr<Scenario> make_scenario(const std::string& name,
                                        const std::map<std::string, double>& params = {});

// ---------------------------------------------------------------------------
// Episodes

/// One JSONL record: inputs, command, plant, skill state and ground truth.
Json frame_record(std::int64_t frame, const Pipeline& pipeline, const SkillCommand& cmd,
                  const Skill* skill);

struct RunResult {
  std::string outcome = "success";  // success | failure | stall | timeout
  int exit_code = kExitSuccess;
  int frames = 0;
  std::string skill;
  std::string skill_status = "running";
  std::vector<std::string> flags;
  std::string error_code;
  std::string message;
  std::map<std::string, double> metrics;
  std::vector<Json> log;

  Json summary() const;
};

/// Frame-synchronous loop sim -> tracker -> percepts -> skill -> plant. With
/// an output directory writes episode.jsonl, displacement.csv and
/// summary.json. Skill errors end the episode with exit code 1; invalid
/// configurations throw.
RunResult run_scenario(const RunConfig& cfg);

/// Pearson correlation; 0 when either side is constant.
double pearson(const std::vector<double>& a, const std::vector<double>& b);

// ---------------------------------------------------------------------------
// Load probing

struct ProbeResult {
  std::size_t index = 0;
  double position = 0.0;
  double smoothed = 0.0;
  std::vector<double> moving_average;  // NaN outside the valid region
};

/// Centered moving average of odd length `window` over the readings, argmax
/// over the valid region, ties broken toward the span midpoint. Throws
/// Error("no_unique_maximum") for a flat or degenerate stream and
/// Error("invalid_argument") for a bad window.
ProbeResult probe_max_load(const ProbeStream& stream, int window = 5);

// ---------------------------------------------------------------------------
// Assembly

struct AssemblyConfig {
  std::uint64_t seed = 0;
  /// "default", "absent" (no plate in view) or "stuck" (column sticks during
  /// the arm rotation).
  std::string variant = "default";
  std::filesystem::path out_dir;
  int probe_samples = 21;
  int probe_window = 5;
  double probe_noise = 0.02;
  double load_peak_position = 0.6;
};

struct PhaseReport {
  std::string name;
  bool success = false;
  int frames = 0;
  double duration_s = 0.0;
  std::string status;
  std::vector<std::string> flags;
  std::map<std::string, double> measurements;
  std::string error_code;
  std::string message;
};

struct AssemblyReport {
  bool success = false;
  std::string failed_phase;
  std::string error_code;
  std::vector<PhaseReport> phases;
  std::vector<Json> log;

  Json to_json() const;
  int exit_code() const { return success ? kExitSuccess : kExitFailure; }
};

/// locate, vis_scan, gentle_grasp, arm_rot, descend, load_probe, place.
const std::vector<std::string>& assembly_phases();

/// Runs the phases in order, each on its own pipeline with a seed forked from
/// cfg.seed, into one log with a global frame index and a "phase" field.
/// A failing phase stops the sequence with a partial report.
AssemblyReport run_assembly(const AssemblyConfig& cfg);

/// Replays the phase predicates over a log; returns the violations (empty
/// when the report is consistent with the log).
std::vector<std::string> replay_assembly(const std::vector<Json>& log, const Json& report);

// ---------------------------------------------------------------------------
// Plot data

struct PlotOptions {
  double slip_threshold = 0.5;
  double force_threshold = 1.0;
  double hysteresis = 0.1;
};

struct PlotTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void write_csv(std::ostream& out) const;
};

/// displacement (raw vs filtered), followme (input vs command), handover
/// (slip/force/trigger timelines), rotation (torque and angle), force-fit (measured
/// vs predicted force).
const std::vector<std::string>& plot_views();

/// Throws Error("invalid_argument") listing the views for an unknown name.
PlotTable plot_view(const std::vector<Json>& log, const std::string& view,
                    const PlotOptions& options = {});

/// Dotted leaf paths present in the log (e.g. "force.0", "truth.channels.angle").
std::vector<std::string> available_channels(const std::vector<Json>& log);

/// Frame column plus one column per dotted path. Throws
/// Error("invalid_argument") listing available channels for unknown ones.
PlotTable plot_channels(const std::vector<Json>& log, const std::vector<std::string>& channels);

}  // namespace fvt
