#include "fvtactile/harness.hpp"

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

using namespace fvt;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("fvt_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunResult run(const std::string& scenario, const std::string& skill = "", std::uint64_t seed = 7,
              std::map<std::string, double> skill_params = {}) {
  RunConfig cfg;
  cfg.scenario = scenario;
  cfg.skill = skill;
  cfg.seed = seed;
  cfg.skill_params = std::move(skill_params);
  return run_scenario(cfg);
}

bool has(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("registry rejects unknown scenarios, skills and parameters") {
  CHECK(scenario_registry().size() >= 17);
  CHECK(scenario_info("followme-pull-x").default_skill == "force-track");
  CHECK_THROWS_AS(scenario_info("juggle"), Error);
  RunConfig cfg;
  cfg.scenario = "static-hold";
  CHECK_NOTHROW(cfg.validate());
  cfg.skill = "teleport";
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.skill = "force-track";
  cfg.skill_params = {{"bogus", 1.0}};
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.skill_params.clear();
  cfg.scenario_params = {{"bogus", 1.0}};
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.scenario_params = {{"noise_sigma", 0.2}};
  CHECK_NOTHROW(cfg.validate());
  cfg.frames = -1;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("followme pull x with force tracking succeeds and logs force and command") {
  const RunResult r = run("followme-pull-x", "force-track", 7);
  CHECK(r.exit_code == kExitSuccess);
  CHECK(r.outcome == "success");
  REQUIRE(!r.log.empty());
  for (std::size_t i = 0; i < r.log.size(); ++i) {
    REQUIRE(r.log[i].at("frame") == static_cast<std::int64_t>(i));
    CHECK(r.log[i].at("force").size() == 3);
    CHECK(r.log[i].at("command").contains("ee_velocity"));
  }
  CHECK(r.metrics.at("nonzero_fraction") >= 0.9);
}

TEST_CASE("followme pull z with object tracking stalls") {
  const RunResult r = run("followme-pull-z", "object-track", 7);
  CHECK(r.exit_code == kExitFailure);
  CHECK(r.outcome == "stall");
  for (const auto& rec : r.log) CHECK(rec.at("command").at("ee_velocity")[2] == 0.0);
}

TEST_CASE("same config gives the same summary and byte-identical logs") {
  RunConfig cfg;
  cfg.scenario = "handover";
  cfg.seed = 11;
  cfg.out_dir = fresh_dir("repro_a");
  const RunResult a = run_scenario(cfg);
  const fs::path first = cfg.out_dir;
  cfg.out_dir = fresh_dir("repro_b");
  const RunResult b = run_scenario(cfg);
  CHECK(a.summary() == b.summary());
  const std::string la = slurp(first / "episode.jsonl");
  CHECK(!la.empty());
  CHECK(la == slurp(cfg.out_dir / "episode.jsonl"));
  CHECK(slurp(first / "displacement.csv") == slurp(cfg.out_dir / "displacement.csv"));
}

TEST_CASE("run writes the episode log, displacement CSV and summary") {
  RunConfig cfg;
  cfg.scenario = "static-hold";
  cfg.seed = 3;
  cfg.frames = 20;
  cfg.save_frames = true;
  cfg.out_dir = fresh_dir("static");
  const RunResult r = run_scenario(cfg);
  CHECK(r.exit_code == kExitSuccess);
  CHECK(r.frames == 20);
  const auto log = read_jsonl(cfg.out_dir / "episode.jsonl");
  REQUIRE(log.size() == 20);
  for (std::size_t i = 0; i < log.size(); ++i) CHECK(log[i].at("frame") == static_cast<std::int64_t>(i));
  CHECK(log[0].at("schema_version") == kSchemaVersion);
  const Json summary = read_json(cfg.out_dir / "summary.json");
  CHECK(summary.at("outcome") == "success");
  CHECK(fs::exists(cfg.out_dir / "displacement.csv"));
  CHECK(fs::exists(cfg.out_dir / "frames"));
}

TEST_CASE("stuck pen stalls below 90 degrees, heavy stick reaches 90") {
  const RunResult pen = run("stuck-pen", "", 3);
  CHECK(pen.outcome == "stall");
  CHECK(pen.exit_code == kExitFailure);
  CHECK(has(pen.flags, "possible_stall"));
  CHECK(pen.metrics.at("final_angle") < std::numbers::pi / 2 - 0.1);

  const RunResult stick = run("heavy-stick", "", 3);
  CHECK(stick.outcome == "success");
  CHECK(stick.metrics.at("final_angle") == doctest::Approx(std::numbers::pi / 2).epsilon(0.02));
}

TEST_CASE("arm rotation converges; the stuck variant is flagged") {
  const RunResult r = run("arm-rot", "", 2);
  CHECK(r.outcome == "success");
  CHECK(std::abs(r.metrics.at("final_skin_torque")) < 0.05 * std::abs(r.metrics.at("initial_skin_torque")));
  const RunResult s = run("arm-rot-stuck", "", 2);
  CHECK(s.exit_code == kExitFailure);
  CHECK(has(s.flags, "possible_stall"));
}

TEST_CASE("vis scan measures a 100 mm plate; the empty scene has nothing to scan") {
  const RunResult r = run("vis-scan", "", 4);
  CHECK(r.outcome == "success");
  CHECK(std::abs(r.metrics.at("extent") - 100.0) <= 2.0);
  const RunResult e = run("vis-scan-empty", "", 4);
  CHECK(e.exit_code == kExitFailure);
  CHECK(e.error_code == "nothing_to_scan");
}

TEST_CASE("vis scan with a zero floor runs to the workspace limit") {
  const RunResult r = run("vis-scan", "", 4, {{"area_floor", 0.0}});
  CHECK(has(r.flags, "at_workspace_limit"));
  CHECK(r.exit_code == kExitFailure);
}

TEST_CASE("gentle grasp stops at the object with the target force") {
  const RunResult r = run("gentle-grasp", "", 4);
  CHECK(r.outcome == "success");
  // Fingers press into the 30 mm object until the contact spring carries the target force.
  CHECK(r.metrics.at("final_opening") < 30.0);
  CHECK(std::abs(r.metrics.at("final_opening") - (30.0 - r.metrics.at("true_force") / 0.5)) < 0.5);
  CHECK(std::abs(r.metrics.at("final_force") / 2.0 - 1.0) <= 0.1);
  const RunResult e = run("gentle-grasp-empty", "", 4);
  CHECK(e.exit_code == kExitFailure);
  CHECK(e.error_code == "no_object");
}

TEST_CASE("descend detects ground contact near the true height") {
  const RunResult r = run("descend", "", 4);
  CHECK(r.outcome == "success");
  CHECK(std::abs(r.metrics.at("contact_height") - r.metrics.at("true_contact_height")) < 10.0);
}

TEST_CASE("handover closes after slip and force") {
  const RunResult r = run("handover", "", 4);
  CHECK(r.outcome == "success");
  CHECK(r.metrics.at("final_gripper_opening") < 40.0);
}

TEST_CASE("pearson correlation") {
  CHECK(pearson({1, 2, 3}, {2, 4, 6}) == doctest::Approx(1.0));
  CHECK(pearson({1, 2, 3}, {3, 2, 1}) == doctest::Approx(-1.0));
  CHECK(pearson({1, 1, 1}, {1, 2, 3}) == 0.0);
}

TEST_CASE("probe_max_load: noiseless parabola picks the sample nearest the peak") {
  Rng rng(1);
  const PipelineConfig pc;
  for (int n : {21, 11, 31}) {
    const ProbeStream s = scenario_plate_load(parabolic_profile(0.5), n, 0.0, rng, pc.geometry, pc.skin);
    const ProbeResult r = probe_max_load(s, 5);
    CHECK(r.position == doctest::Approx(0.5).epsilon(1e-12));
  }
  const ProbeStream off = scenario_plate_load(parabolic_profile(0.37), 21, 0.0, rng, pc.geometry, pc.skin);
  CHECK(probe_max_load(off, 5).position == doctest::Approx(0.35).epsilon(1e-12));
  // An even grid straddles the centered peak with two equal readings.
  const ProbeStream even = scenario_plate_load(parabolic_profile(0.5), 20, 0.0, rng, pc.geometry, pc.skin);
  CHECK(even.degenerate);
  CHECK_THROWS_AS(probe_max_load(even, 5), Error);
}

TEST_CASE("probe_max_load: 2% noise lands within one sample of the peak") {
  const PipelineConfig pc;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const ProbeStream s = scenario_plate_load(parabolic_profile(0.5), 21, 0.02, rng, pc.geometry, pc.skin);
    const ProbeResult r = probe_max_load(s, 5);
    CHECK(std::abs(r.position - 0.5) <= 0.05 + 1e-12);
  }
}

TEST_CASE("probe_max_load: flat and symmetric profiles have no unique maximum") {
  Rng rng(1);
  const PipelineConfig pc;
  const ProbeStream flat = scenario_plate_load(flat_profile(), 21, 0.0, rng, pc.geometry, pc.skin);
  try {
    probe_max_load(flat, 5);
    FAIL("expected no_unique_maximum");
  } catch (const Error& e) {
    CHECK(e.code() == "no_unique_maximum");
  }
  ProbeStream sym;
  for (int i = 0; i < 9; ++i) sym.samples.push_back({i / 8.0, (i == 2 || i == 6) ? 5.0 : 1.0, 0.0});
  CHECK_THROWS_AS(probe_max_load(sym, 1), Error);
  CHECK_THROWS_AS(probe_max_load(sym, 4), Error);
  CHECK_THROWS_AS(probe_max_load(sym, 11), Error);
}

TEST_CASE("assembly: default scene succeeds and replays cleanly") {
  AssemblyConfig cfg;
  cfg.seed = 3;
  cfg.out_dir = fresh_dir("assembly");
  const AssemblyReport r = run_assembly(cfg);
  CHECK(r.success);
  CHECK(r.exit_code() == kExitSuccess);
  REQUIRE(r.phases.size() == 7);
  for (std::size_t i = 0; i < 7; ++i) {
    CHECK(r.phases[i].name == assembly_phases()[i]);
    CHECK(r.phases[i].success);
  }
  CHECK(r.phases[4].measurements.at("contact_height") > 0.0);
  CHECK(r.phases[5].measurements.at("index_error") <= 1.0);
  CHECK(std::abs(r.phases[1].measurements.at("extent") - 100.0) <= 2.0);
  CHECK(replay_assembly(r.log, r.to_json()).empty());
  for (std::size_t i = 0; i < r.log.size(); ++i) REQUIRE(r.log[i].at("frame") == static_cast<std::int64_t>(i));

  const auto disk_log = read_jsonl(cfg.out_dir / "assembly.jsonl");
  CHECK(disk_log.size() == r.log.size());
  CHECK(read_json(cfg.out_dir / "assembly_report.json") == r.to_json());
}

TEST_CASE("assembly: a tampered report is caught by the replay") {
  AssemblyConfig cfg;
  cfg.seed = 3;
  const AssemblyReport r = run_assembly(cfg);
  Json bad = r.to_json();
  bad["phases"][3]["frames"] = 1;
  CHECK_FALSE(replay_assembly(r.log, bad).empty());
  std::vector<Json> gap = r.log;
  gap.erase(gap.begin() + 10);
  CHECK_FALSE(replay_assembly(gap, r.to_json()).empty());
}

TEST_CASE("assembly: absent object fails at locate") {
  AssemblyConfig cfg;
  cfg.variant = "absent";
  const AssemblyReport r = run_assembly(cfg);
  CHECK_FALSE(r.success);
  CHECK(r.failed_phase == "locate");
  CHECK(r.error_code == "nothing_to_scan");
  CHECK(r.phases.size() == 1);
  CHECK(r.exit_code() == kExitFailure);
}

TEST_CASE("assembly: stuck column flags the arm rotation and continues") {
  AssemblyConfig cfg;
  cfg.variant = "stuck";
  cfg.seed = 2;
  const AssemblyReport r = run_assembly(cfg);
  REQUIRE(r.phases.size() == 7);
  CHECK(has(r.phases[3].flags, "possible_stall"));
  CHECK(r.success);
}

TEST_CASE("plotdata: displacement projection on a static-hold log") {
  const RunResult r = run("static-hold", "", 1);
  const PlotTable t = plot_view(r.log, "displacement");
  REQUIRE(t.header.size() >= 3);
  CHECK(t.header[0] == "frame");
  CHECK(t.header[1] == "raw_x");
  CHECK(has(t.header, "filt_x"));
  CHECK(t.rows.size() == r.log.size());
}

TEST_CASE("plotdata: handover activity columns match thresholds recomputed from the log") {
  const RunResult r = run("handover", "", 4);
  PlotOptions opt;
  const PlotTable t = plot_view(r.log, "handover", opt);
  REQUIRE(t.rows.size() == r.log.size());
  const auto col = [&](const std::string& name) {
    return static_cast<std::size_t>(std::find(t.header.begin(), t.header.end(), name) - t.header.begin());
  };
  bool force_on = false;
  int triggers = 0;
  for (std::size_t i = 0; i < r.log.size(); ++i) {
    const Json& rec = r.log[i];
    const bool slip_on = rec.at("slip").at("flow").get<double>() > opt.slip_threshold;
    CHECK(slip_on == rec.at("slip").at("active").get<bool>());
    const double fx = rec.at("force")[0], fy = rec.at("force")[1], fz = rec.at("force")[2];
    const double norm = std::sqrt(fx * fx + fy * fy + fz * fz);
    if (force_on && norm <= opt.force_threshold) force_on = false;
    else if (!force_on && norm > (1.0 + opt.hysteresis) * opt.force_threshold) force_on = true;
    CHECK(t.rows[i][col("slip_active")] == (slip_on ? "1" : "0"));
    CHECK(t.rows[i][col("force_active")] == (force_on ? "1" : "0"));
    CHECK(t.rows[i][col("trigger")] == (slip_on && force_on ? "1" : "0"));
    triggers += slip_on && force_on;
  }
  CHECK(triggers > 0);
}

TEST_CASE("plotdata: empty log, unknown views and channels") {
  const PlotTable empty = plot_view({}, "followme");
  CHECK(empty.rows.empty());
  std::ostringstream out;
  empty.write_csv(out);
  const std::string csv = out.str();
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1);

  try {
    plot_view({}, "scatter");
    FAIL("expected invalid_argument");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("handover") != std::string::npos);
  }
  const RunResult r = run("static-hold", "", 1);
  try {
    plot_channels(r.log, {"force.7"});
    FAIL("expected invalid_argument");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("force.0") != std::string::npos);
  }
  const PlotTable t = plot_channels(r.log, {"force.0", "truth.wrench.0"});
  CHECK(t.header == std::vector<std::string>{"frame", "force.0", "truth.wrench.0"});
  CHECK(has(available_channels(r.log), "slip.flow"));
}

TEST_CASE("jsonl reader reports the failing line") {
  std::istringstream in("{\"a\":1}\n{\"a\":\n{\"a\":3}\n");
  try {
    read_jsonl(in);
    FAIL("expected io error");
  } catch (const Error& e) {
    CHECK(e.code() == "io");
    CHECK(std::string(e.what()).find("2") != std::string::npos);
  }
  std::istringstream ok("{\"a\":1}\n\n{\"a\":2}\n");
  CHECK(read_jsonl(ok).size() == 2);
  CHECK_THROWS_AS(read_jsonl(fs::path("/nonexistent/log.jsonl")), Error);
}

TEST_CASE("format_number gives the shortest round-trip form") {
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(2.0) == "2.0");
  CHECK(std::stod(format_number(1.0 / 3.0)) == 1.0 / 3.0);
}

}  // TEST_SUITE
