#include "fvtactile/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

namespace fvt {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string join(const std::vector<std::string>& items, const char* sep = ", ") {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? sep : "") + items[i];
  return out;
}

// ---------------------------------------------------------------------------
// Parameter tables

struct ParamTable {
  std::map<std::string, double*> doubles;
  std::map<std::string, int*> ints;

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : doubles) out.push_back(k);
    for (const auto& [k, v] : ints) out.push_back(k);
    std::sort(out.begin(), out.end());
    return out;
  }

  void apply(const std::string& owner, const std::map<std::string, double>& params) const {
    for (const auto& [key, value] : params) {
      if (auto it = doubles.find(key); it != doubles.end()) {
        *it->second = value;
      } else if (auto jt = ints.find(key); jt != ints.end()) {
        if (value != std::floor(value)) {
          throw Error("invalid_argument", owner + ": parameter '" + key + "' must be an integer");
        }
        *jt->second = static_cast<int>(value);
      } else {
        const auto known = names();
        throw Error("invalid_argument", owner + ": unknown parameter '" + key + "' (known: " +
                                            (known.empty() ? "none" : join(known)) + ")");
      }
    }
  }
};

struct SkillConfigs {
  ForceTrackConfig force_track;
  ObjectTrackConfig object_track;
  int tracking_axis = 1;  // 0: x, 1: y
  ArmRotSkillConfig arm_rot;
  double expected_rotation = kNaN;
  HandoverConfig handover;
  InHandRotConfig in_hand;
  int in_hand_mode = 0;
  VisScanConfig vis_scan;
  double area_floor = kNaN;
  GentleGraspConfig grasp;
  HoldConfig hold;
  DescendConfig descend;
};

ParamTable skill_table(const std::string& name, SkillConfigs& c) {
  ParamTable t;
  if (name == "force-track") {
    auto& f = c.force_track;
    t.doubles = {{"f_min", &f.f_min}, {"f_max", &f.f_max}, {"v_min", &f.v_min},
                 {"v_max", &f.v_max}, {"eps", &f.eps}};
  } else if (name == "object-track") {
    auto& o = c.object_track;
    t.doubles = {{"delta", &o.delta},       {"x_max", &o.x_max},       {"y_max", &o.y_max},
                 {"xbar_eps", &o.xbar_eps}, {"ybar_eps", &o.ybar_eps}, {"m_eps", &o.m_eps},
                 {"px_to_mm", &o.px_to_mm}};
    t.ints = {{"tracking_axis", &c.tracking_axis}};
  } else if (name == "arm-rot") {
    auto& a = c.arm_rot;
    t.doubles = {{"k_tau", &a.law.k_tau},
                 {"eps_tau", &a.law.eps_tau},
                 {"expected_rotation", &c.expected_rotation},
                 {"stall_tolerance", &a.stall_tolerance}};
    t.ints = {{"settle_frames", &a.settle_frames}, {"max_frames", &a.max_frames}};
  } else if (name == "handover") {
    auto& h = c.handover;
    t.doubles = {{"force_threshold", &h.force_threshold}, {"hysteresis", &h.hysteresis},
                 {"close_opening", &h.close_opening},     {"open_opening", &h.open_opening},
                 {"leak_alpha", &h.leaky.leak_alpha}};
    t.ints = {{"debounce", &h.debounce}};
  } else if (name == "in-hand-rot") {
    auto& r = c.in_hand;
    t.doubles = {{"eps_tau", &r.eps_tau},
                 {"leak_alpha", &r.leaky.leak_alpha},
                 {"open_opening", &r.open_opening},
                 {"regrip_opening", &r.regrip_opening},
                 {"expected_angle", &r.expected_angle},
                 {"stall_tolerance", &r.stall_tolerance}};
    t.ints = {{"mode", &c.in_hand_mode}, {"stop_frames", &r.stop_frames}, {"max_frames", &r.max_frames}};
  } else if (name == "vis-scan") {
    auto& v = c.vis_scan;
    t.doubles = {{"speed", &v.speed}, {"area_floor", &c.area_floor}, {"workspace_limit", &v.workspace_limit}};
    t.ints = {{"debounce", &v.debounce}, {"max_frames", &v.max_frames}};
  } else if (name == "gentle-grasp") {
    auto& g = c.grasp;
    t.doubles = {{"grip_force_target", &g.grip_force_target}, {"contact_eps", &g.contact_eps},
                 {"leak_alpha", &g.leaky.leak_alpha},         {"close_opening", &g.close_opening},
                 {"empty_opening", &g.empty_opening}};
    t.ints = {{"max_frames", &g.max_frames}};
  } else if (name == "hold") {
    t.doubles = {{"increment", &c.hold.increment}, {"min_opening", &c.hold.min_opening}};
  } else if (name == "descend") {
    auto& d = c.descend;
    t.doubles = {{"speed", &d.speed}, {"contact_threshold", &d.contact_threshold}};
    t.ints = {{"debounce", &d.debounce}, {"max_frames", &d.max_frames}};
  } else if (name != "none") {
    throw Error("invalid_argument",
                "unknown skill '" + name + "' (known: " + join(runnable_skill_names()) + ")");
  }
  return t;
}

bool is_followme(const std::string& scenario) { return scenario.rfind("followme-", 0) == 0; }

Axis followme_axis(const std::string& scenario) { return parse_axis(scenario.substr(scenario.size() - 1)); }

bool is_terminating(const std::string& skill) {
  static const std::set<std::string> names{"arm-rot",  "handover",     "in-hand-rot",
                                           "vis-scan", "gentle-grasp", "descend"};
  return names.count(skill) > 0;
}

// Defaults per scenario; keys double as the accepted parameter names.
std::map<std::string, double> scenario_defaults(const std::string& name) {
  std::map<std::string, double> d{{"noise_sigma", SkinModel{}.noise_sigma}};
  auto add = [&](std::initializer_list<std::pair<const std::string, double>> kv) { d.insert(kv); };
  if (name == "static-hold") {
    add({{"fx", 2.0}, {"fy", 1.0}, {"fz", 0.5}, {"tau", 0.0}});
  } else if (is_followme(name)) {
    add({{"k_human", 0.1}, {"speed", 20.0}, {"rest_s", 0.5}, {"move_s", 3.0}, {"hold_s", 1.0}});
  } else if (name == "stuck-pen") {
    add({{"gravity_torque", 0.2}, {"stiction", 0.2 * std::cos(std::numbers::pi / 3.0)}});
  } else if (name == "heavy-stick") {
    add({{"gravity_torque", 2.0}});
  } else if (name == "arm-rot" || name == "arm-rot-stuck") {
    add({{"gravity_torque", 2.0}, {"stiction", name == "arm-rot" ? 0.0 : 1.0}, {"initial_angle", 0.0}});
  } else if (name == "vis-scan" || name == "vis-scan-empty") {
    add({{"plate_start", 0.0}, {"plate_length", 100.0}, {"workspace_limit", 200.0}});
  } else if (name == "gentle-grasp" || name == "gentle-grasp-empty") {
    add({{"object_width", 30.0}, {"contact_stiffness", 0.5}});
  } else if (name == "descend") {
    add({{"start_height", 200.0}, {"ground_clearance", 120.0}, {"ground_stiffness", 0.5}});
  }
  return d;
}

std::map<std::string, double> merged_scenario_params(const std::string& name,
                                                     const std::map<std::string, double>& params) {
  auto values = scenario_defaults(name);
  for (const auto& [k, v] : params) {
    if (!values.count(k)) {
      std::vector<std::string> known;
      for (const auto& [kk, vv] : values) known.push_back(kk);
      throw Error("invalid_argument", "scenario " + name + ": unknown parameter '" + k +
                                          "' (known: " + join(known) + ")");
    }
    values[k] = v;
  }
  return values;
}

std::vector<Vec3> followme_profile_for(const std::string& name, const std::map<std::string, double>& p) {
  const bool push = name.find("push") != std::string::npos;
  return followme_profile(followme_axis(name), push ? -1.0 : 1.0, p.at("k_human"), p.at("speed"),
                          p.at("rest_s"), p.at("move_s"), p.at("hold_s"));
}

Json vec3_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

}  // namespace

// ---------------------------------------------------------------------------
// Registry

const std::vector<ScenarioInfo>& scenario_registry() {
  static const std::vector<ScenarioInfo> registry = [] {
    std::vector<ScenarioInfo> r{
        {"static-hold", "none", 300, "constant wrench on a held object", {}},
        {"handover", "handover", 200, "object slides in, is pressed and held", {}},
        {"stuck-pen", "in-hand-rot", 400, "light pen whose stiction stalls it near 60 deg", {}},
        {"heavy-stick", "in-hand-rot", 400, "heavy stick pivoting freely", {}},
        {"arm-rot", "arm-rot", 300, "gravity-loaded stick turned by the arm", {}},
        {"arm-rot-stuck", "arm-rot", 300, "arm rotation with stiction in the grip", {}},
        {"vis-scan", "vis-scan", 2000, "plate scanned along x", {}},
        {"vis-scan-empty", "vis-scan", 2000, "scan with no plate in view", {}},
        {"gentle-grasp", "gentle-grasp", 2000, "slow closing on a 30 mm object", {}},
        {"gentle-grasp-empty", "gentle-grasp", 2000, "slow closing on nothing", {}},
        {"descend", "descend", 600, "column lowered until ground contact", {}},
    };
    for (const char* dir : {"pull", "push"}) {
      for (const char* axis : {"x", "y", "z"}) {
        const std::string name = std::string("followme-") + dir + "-" + axis;
        r.push_back({name, "force-track", 0, std::string("human ") + dir + "s the object along " + axis, {}});
      }
    }
    for (auto& info : r) {
      for (const auto& [k, v] : scenario_defaults(info.name)) info.params.push_back(k);
      if (is_followme(info.name)) {
        info.default_frames = static_cast<int>(
            followme_profile_for(info.name, scenario_defaults(info.name)).size());
      }
    }
    return r;
  }();
  return registry;
}

const ScenarioInfo& scenario_info(const std::string& name) {
  for (const auto& info : scenario_registry()) {
    if (info.name == name) return info;
  }
  std::vector<std::string> known;
  for (const auto& info : scenario_registry()) known.push_back(info.name);
  throw Error("invalid_argument", "unknown scenario '" + name + "' (known: " + join(known) + ")");
}

const std::vector<std::string>& runnable_skill_names() {
  static const std::vector<std::string> names = [] {
    auto n = skill_names();
    n.push_back("none");
    return n;
  }();
  return names;
}

std::vector<std::string> skill_param_names(const std::string& skill) {
  SkillConfigs c;
  return skill_table(skill, c).names();
}

std::string RunConfig::resolved_skill() const {
  return skill.empty() ? scenario_info(scenario).default_skill : skill;
}

void RunConfig::validate() const {
  scenario_info(scenario);
  SkillConfigs c;
  skill_table(resolved_skill(), c).apply(resolved_skill(), skill_params);
  merged_scenario_params(scenario, scenario_params);
  if (frames && *frames < 0) throw Error("invalid_argument", "frames must be >= 0");
}

std::unique_ptr<Skill> make_skill(const std::string& name, const std::map<std::string, double>& params,
                                  const SkillContext& ctx) {
  SkillConfigs c;
  // Context-dependent defaults, overridable by explicit parameters.
  c.object_track.m_eps = ctx.rest_area > 0.0 ? 0.99 * ctx.rest_area : c.object_track.m_eps;
  if (ctx.scenario.rfind("arm-rot", 0) == 0) c.expected_rotation = std::numbers::pi / 2.0;
  // The object enters from the image edge along the pull axis (x for z pulls),
  // so the area term has to drive that axis.
  if (is_followme(ctx.scenario)) c.tracking_axis = followme_axis(ctx.scenario) == Axis::Y ? 1 : 0;

  skill_table(name, c).apply(name, params);

  if (name == "none") return nullptr;
  if (name == "force-track") return std::make_unique<ForceTrackSkill>(c.force_track);
  if (name == "object-track") {
    if (c.tracking_axis == 0) c.object_track.tracking_axis = Axis::X;
    else if (c.tracking_axis == 1) c.object_track.tracking_axis = Axis::Y;
    else throw Error("invalid_argument", "object-track: tracking_axis must be 0 (x) or 1 (y)");
    return std::make_unique<ObjectTrackSkill>(c.object_track);
  }
  if (name == "arm-rot") {
    if (std::isfinite(c.expected_rotation)) c.arm_rot.expected_rotation = c.expected_rotation;
    return std::make_unique<ArmRotSkill>(c.arm_rot);
  }
  if (name == "handover") return std::make_unique<HandoverSkill>(c.handover);
  if (name == "in-hand-rot") {
    if (c.in_hand_mode != 0 && c.in_hand_mode != 1) {
      throw Error("invalid_argument", "in-hand-rot: mode must be 0 (torque) or 1 (slip)");
    }
    c.in_hand.mode = c.in_hand_mode == 0 ? InHandMode::Torque : InHandMode::Slip;
    return std::make_unique<InHandRotSkill>(c.in_hand);
  }
  if (name == "vis-scan") {
    if (std::isfinite(c.area_floor)) c.vis_scan.area_floor = c.area_floor;
    return std::make_unique<VisScanSkill>(c.vis_scan, ctx.image_area);
  }
  if (name == "gentle-grasp") return std::make_unique<GentleGraspSkill>(c.grasp);
  if (name == "hold") return std::make_unique<HoldSkill>(c.hold);
  return std::make_unique<DescendSkill>(c.descend);
}

std::unique_ptr<Scenario> make_scenario(const std::string& name, const std::map<std::string, double>& params) {
  scenario_info(name);
  const auto p = merged_scenario_params(name, params);
  if (name == "static-hold") {
    AppliedWrench w;
    w.f = Vec3(p.at("fx"), p.at("fy"), p.at("fz"));
    w.tau_z = p.at("tau");
    return make_static_hold(w);
  }
  if (is_followme(name)) {
    return std::make_unique<FollowMeScenario>(followme_profile_for(name, p), followme_axis(name),
                                              p.at("k_human"));
  }
  if (name == "handover") return std::make_unique<HandoverScenario>();
  if (name == "stuck-pen") return scenario_stuck_pen(p.at("stiction"), p.at("gravity_torque"));
  if (name == "heavy-stick") return make_heavy_stick(p.at("gravity_torque"));
  if (name == "arm-rot" || name == "arm-rot-stuck") {
    return std::make_unique<ArmRotScenario>(p.at("gravity_torque"), p.at("stiction"), p.at("initial_angle"));
  }
  if (name == "vis-scan" || name == "vis-scan-empty") {
    return std::make_unique<PlateScanScenario>(p.at("plate_start"), p.at("plate_length"), 400.0, 10.0,
                                               name == "vis-scan", p.at("workspace_limit"));
  }
  if (name == "gentle-grasp" || name == "gentle-grasp-empty") {
    return std::make_unique<GraspScenario>(p.at("object_width"), p.at("contact_stiffness"),
                                           name == "gentle-grasp");
  }
  return std::make_unique<DescendScenario>(p.at("start_height"), p.at("ground_clearance"),
                                           p.at("ground_stiffness"));
}

// ---------------------------------------------------------------------------
// Episodes

Json frame_record(std::int64_t frame, const Pipeline& pipeline, const SkillCommand& cmd, const Skill* skill) {
  Json r = to_json(pipeline.percepts());
  r["frame"] = frame;
  r["command"] = {{"ee_velocity", vec3_json(cmd.ee_velocity)},
                  {"ee_rot_velocity", cmd.ee_rot_velocity},
                  {"gripper_target", cmd.gripper_target ? Json(*cmd.gripper_target) : Json(nullptr)}};
  const auto& plant = pipeline.plant();
  r["plant"] = {{"ee_position", vec3_json(plant.ee_position)},
                {"ee_rotation", plant.ee_rotation},
                {"gripper_opening", plant.gripper_opening},
                {"contact", plant.contact}};
  r["skill"] = skill ? skill->name() : "none";
  r["state"] = skill ? Json(skill->state()) : Json::object();
  r["status"] = skill ? std::string(status_name(skill->status())) : "running";
  r["flags"] = skill ? Json(skill->flags()) : Json::array();
  const auto& truth = pipeline.output().truth;
  r["truth"] = {{"wrench", {truth.wrench.f.x(), truth.wrench.f.y(), truth.wrench.f.z(), truth.wrench.tau_z}},
                {"contact", truth.contact},
                {"channels", truth.channels}};
  const auto markers = summarize_markers(pipeline.tracker());
  r["markers"] = {{"raw_mean", markers.raw_mean ? vec3_json(*markers.raw_mean) : Json(nullptr)},
                  {"filt_mean", vec3_json(markers.filt_mean)},
                  {"missing", markers.missing}};
  return r;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.empty()) return 0.0;
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa <= 0.0 || sbb <= 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

Json RunResult::summary() const {
  return {{"schema_version", kSchemaVersion},
          {"outcome", outcome},
          {"exit_code", exit_code},
          {"frames", frames},
          {"skill", skill},
          {"skill_status", skill_status},
          {"flags", flags},
          {"error_code", error_code},
          {"message", message},
          {"metrics", metrics}};
}

RunResult run_scenario(const RunConfig& cfg) {
  cfg.validate();
  const auto& info = scenario_info(cfg.scenario);
  const std::string skill_name = cfg.resolved_skill();
  const auto sp = merged_scenario_params(cfg.scenario, cfg.scenario_params);

  auto scenario = make_scenario(cfg.scenario, cfg.scenario_params);
  int frames = cfg.frames.value_or(info.default_frames);
  if (!cfg.frames && is_followme(cfg.scenario)) {
    frames = static_cast<int>(static_cast<FollowMeScenario&>(*scenario).profile().size());
  }

  PipelineConfig pc;
  pc.skin.noise_sigma = sp.at("noise_sigma");
  Pipeline pipeline(*scenario, cfg.seed, pc);
  pipeline.calibrate();

  SkillContext ctx;
  ctx.rest_area = pipeline.rest_area();
  ctx.image_area = static_cast<double>(pc.geometry.image_width) * pc.geometry.image_height;
  ctx.scenario = cfg.scenario;
  auto skill = make_skill(skill_name, cfg.skill_params, ctx);

  RunResult res;
  res.skill = skill_name;
  std::ostringstream csv;
  DisplacementCsv disp(csv);
  if (!cfg.out_dir.empty()) {
    std::filesystem::create_directories(cfg.out_dir);
    if (cfg.save_frames) std::filesystem::create_directories(cfg.out_dir / "frames");
  }

  // Channels collected for the scenario metrics.
  std::vector<double> residual, command, human;
  std::vector<int> active;
  const int axis = is_followme(cfg.scenario) ? static_cast<int>(followme_axis(cfg.scenario)) : 0;
  double initial_skin_torque = kNaN;

  try {
    for (int i = 0; i < frames; ++i) {
      const auto& percepts = pipeline.sense();
      const auto plant_before = pipeline.plant();
      SkillCommand cmd = skill ? skill->step(percepts, plant_before) : SkillCommand{};
      Json rec = frame_record(i, pipeline, cmd, skill.get());
      rec["scenario"] = cfg.scenario;
      res.log.push_back(std::move(rec));
      disp.write(i, pipeline.tracker());
      if (cfg.save_frames) {
        std::ostringstream name;
        name << "frame_" << std::setw(6) << std::setfill('0') << i << ".pgm";
        write_pgm(pipeline.output().frame.image, (cfg.out_dir / "frames" / name.str()).string());
      }

      const auto& ch = pipeline.output().truth.channels;
      if (is_followme(cfg.scenario)) {
        const std::string a(1, "xyz"[axis]);
        residual.push_back(ch.at("residual_" + a));
        human.push_back(ch.at("human_" + a));
        command.push_back(cmd.ee_velocity(axis));
        active.push_back(ch.at("active") > 0.0 ? 1 : 0);
      }
      if (ch.count("skin_torque") && std::isnan(initial_skin_torque)) initial_skin_torque = ch.at("skin_torque");

      pipeline.apply(cmd);
      res.frames = i + 1;
      if (skill && skill->status() != SkillStatus::Running) break;
    }
  } catch (const Error& e) {
    res.outcome = "failure";
    res.exit_code = kExitFailure;
    res.error_code = e.code();
    res.message = e.what();
  }

  if (skill) {
    res.skill_status = std::string(status_name(skill->status()));
    res.flags = skill->flags();
  }

  // Scenario metrics.
  auto& m = res.metrics;
  const auto& plant = pipeline.plant();
  if (is_followme(cfg.scenario) && !residual.empty()) {
    std::vector<double> r_act, c_act;
    int nonzero = 0;
    double max_res = 0.0, max_h = 0.0;
    for (std::size_t i = 0; i < residual.size(); ++i) {
      max_res = std::max(max_res, std::abs(residual[i]));
      max_h = std::max(max_h, std::abs(human[i]));
      if (!active[i]) continue;
      r_act.push_back(residual[i]);
      c_act.push_back(command[i]);
      if (command[i] != 0.0) ++nonzero;
    }
    m["active_frames"] = static_cast<double>(r_act.size());
    m["nonzero_fraction"] = r_act.empty() ? 0.0 : static_cast<double>(nonzero) / r_act.size();
    m["correlation"] = pearson(r_act, c_act);
    m["max_residual"] = max_res;
    m["max_human_force"] = max_h;
  }
  if (auto* pivot = dynamic_cast<PivotScenario*>(scenario.get())) {
    m["final_angle"] = pivot->angle();
  }
  if (auto* arm = dynamic_cast<ArmRotScenario*>(scenario.get())) {
    m["final_rotation"] = plant.ee_rotation;
    m["initial_skin_torque"] = initial_skin_torque;
    m["final_skin_torque"] = arm->skin_torque(plant);
  }
  if (auto* scan = dynamic_cast<VisScanSkill*>(skill.get())) {
    m["entry"] = scan->result().entry;
    m["boundary"] = scan->result().boundary;
    m["extent"] = scan->result().extent;
  }
  if (auto* grasp = dynamic_cast<GentleGraspSkill*>(skill.get())) {
    m["final_opening"] = grasp->final_opening();
    m["final_force"] = grasp->final_force();
  }
  if (auto* g = dynamic_cast<GraspScenario*>(scenario.get())) m["true_force"] = g->normal_force(plant);
  if (auto* d = dynamic_cast<DescendSkill*>(skill.get())) m["contact_height"] = d->contact_height();
  if (auto* d = dynamic_cast<DescendScenario*>(scenario.get())) m["true_contact_height"] = d->contact_height();
  m["final_gripper_opening"] = plant.gripper_opening;

  if (res.exit_code == kExitSuccess) {
    static const std::set<std::string> stall_flags{"possible_stall", "timeout", "cannot_hold",
                                                   "at_workspace_limit"};
    const bool flagged = std::any_of(res.flags.begin(), res.flags.end(),
                                     [](const std::string& f) { return stall_flags.count(f) > 0; });
    if (skill && skill->status() == SkillStatus::Failed) {
      res.outcome = "failure";
      res.exit_code = kExitFailure;
    } else if (flagged) {
      res.outcome = "stall";
      res.exit_code = kExitFailure;
    } else if (skill && is_terminating(skill_name) && skill->status() == SkillStatus::Running) {
      res.outcome = "timeout";
      res.exit_code = kExitFailure;
    } else if (is_followme(cfg.scenario) && m.count("max_residual") &&
               m["max_residual"] > 0.6 * m["max_human_force"]) {
      // The robot did not follow: the human ended up carrying most of the load.
      res.outcome = "stall";
      res.exit_code = kExitFailure;
    }
  }

  if (!cfg.out_dir.empty()) {
    std::ofstream log(cfg.out_dir / "episode.jsonl");
    for (const auto& r : res.log) write_jsonl(log, r);
    std::ofstream(cfg.out_dir / "displacement.csv") << csv.str();
    Json summary = res.summary();
    summary["scenario"] = cfg.scenario;
    summary["seed"] = cfg.seed;
    write_json(cfg.out_dir / "summary.json", summary);
  }
  return res;
}

// ---------------------------------------------------------------------------
// Load probing

ProbeResult probe_max_load(const ProbeStream& stream, int window) {
  const int n = static_cast<int>(stream.samples.size());
  if (window < 1 || window % 2 == 0) throw Error("invalid_argument", "window must be odd and >= 1");
  if (n < window) throw Error("invalid_argument", "fewer samples than the window length");
  if (stream.degenerate) throw Error("no_unique_maximum", "load profile has no unique maximum");

  ProbeResult res;
  res.moving_average.assign(static_cast<std::size_t>(n), kNaN);
  const int h = window / 2;
  for (int i = h; i < n - h; ++i) {
    double s = 0.0;
    for (int k = i - h; k <= i + h; ++k) s += stream.samples[static_cast<std::size_t>(k)].reading;
    res.moving_average[static_cast<std::size_t>(i)] = s / window;
  }
  double hi = -std::numeric_limits<double>::infinity();
  double lo = std::numeric_limits<double>::infinity();
  for (int i = h; i < n - h; ++i) {
    hi = std::max(hi, res.moving_average[static_cast<std::size_t>(i)]);
    lo = std::min(lo, res.moving_average[static_cast<std::size_t>(i)]);
  }
  const double tol = 1e-12 * std::max(1.0, std::abs(hi));
  if (hi - lo <= tol) throw Error("no_unique_maximum", "smoothed load is flat");

  const double mid = 0.5 * (stream.samples.front().position + stream.samples.back().position);
  std::optional<int> best;
  bool tie = false;
  for (int i = h; i < n - h; ++i) {
    if (hi - res.moving_average[static_cast<std::size_t>(i)] > tol) continue;
    if (!best) {
      best = i;
      continue;
    }
    const double d_new = std::abs(stream.samples[static_cast<std::size_t>(i)].position - mid);
    const double d_old = std::abs(stream.samples[static_cast<std::size_t>(*best)].position - mid);
    if (d_new < d_old) {
      best = i;
      tie = false;
    } else if (d_new == d_old) {
      tie = true;
    }
  }
  if (tie) throw Error("no_unique_maximum", "maxima symmetric about the span midpoint");
  res.index = static_cast<std::size_t>(*best);
  res.position = stream.samples[res.index].position;
  res.smoothed = res.moving_average[res.index];
  return res;
}

// ---------------------------------------------------------------------------
// Assembly

const std::vector<std::string>& assembly_phases() {
  static const std::vector<std::string> phases{"locate",  "vis_scan",   "gentle_grasp", "arm_rot",
                                               "descend", "load_probe", "place"};
  return phases;
}

Json AssemblyReport::to_json() const {
  Json phases_json = Json::array();
  for (const auto& p : phases) {
    phases_json.push_back({{"name", p.name},
                           {"success", p.success},
                           {"frames", p.frames},
                           {"duration_s", p.duration_s},
                           {"status", p.status},
                           {"flags", p.flags},
                           {"measurements", p.measurements},
                           {"error_code", p.error_code},
                           {"message", p.message}});
  }
  return {{"schema_version", kSchemaVersion},
          {"success", success},
          {"failed_phase", failed_phase},
          {"error_code", error_code},
          {"phases", phases_json}};
}

namespace {

class AssemblyRun {
 public:
  explicit AssemblyRun(const AssemblyConfig& cfg) : cfg_(cfg), master_(cfg.seed) {}

  AssemblyReport run() {
    const auto& names = assembly_phases();
    for (std::size_t i = 0; i < names.size(); ++i) {
      PhaseReport phase;
      phase.name = names[i];
      const std::size_t start = report_.log.size();
      phase_seed_ = master_.fork(i).next_u64();
      try {
        run_phase(phase);
        phase.success = phase.status == "done";
      } catch (const Error& e) {
        phase.success = false;
        phase.status = "failed";
        phase.error_code = e.code();
        phase.message = e.what();
        if (report_.log.size() > start) report_.log.back()["status"] = "failed";
      }
      phase.frames = static_cast<int>(report_.log.size() - start);
      phase.duration_s = phase.frames / kDefaultFrameRateHz;
      report_.phases.push_back(phase);
      if (!phase.success) {
        report_.failed_phase = phase.name;
        report_.error_code = phase.error_code.empty() ? "phase_failed" : phase.error_code;
        return finish();
      }
    }
    report_.success = true;
    return finish();
  }

 private:
  AssemblyReport finish() {
    if (!cfg_.out_dir.empty()) {
      std::filesystem::create_directories(cfg_.out_dir);
      std::ofstream log(cfg_.out_dir / "assembly.jsonl");
      for (const auto& r : report_.log) write_jsonl(log, r);
      write_json(cfg_.out_dir / "assembly_report.json", report_.to_json());
    }
    return std::move(report_);
  }

  void record(const std::string& phase, const Pipeline& p, const SkillCommand& cmd, const Skill* skill,
              const std::optional<std::string>& status = std::nullopt) {
    Json r = frame_record(static_cast<std::int64_t>(report_.log.size()), p, cmd, skill);
    r["phase"] = phase;
    if (status) r["status"] = *status;
    report_.log.push_back(std::move(r));
  }

  // Drives a skill until it leaves Running or max_frames pass.
  void drive(const std::string& phase, Pipeline& p, Skill& skill, int max_frames) {
    for (int i = 0; i < max_frames; ++i) {
      const auto& percepts = p.sense();
      const SkillCommand cmd = skill.step(percepts, p.plant());
      record(phase, p, cmd, &skill);
      p.apply(cmd);
      if (skill.status() != SkillStatus::Running) return;
    }
  }

  void run_phase(PhaseReport& phase) {
    const std::string& name = phase.name;
    auto status = [](const Skill& s) { return std::string(status_name(s.status())); };
    if (name == "locate") {
      PlateScanScenario scene(0.0, 100.0, 400.0, 10.0, cfg_.variant != "absent");
      Pipeline p(scene, phase_seed_);
      const auto& percepts = p.sense();
      const bool found = percepts.object.present;
      record(name, p, {}, nullptr, found ? "done" : "failed");
      if (!found) throw Error("nothing_to_scan", "no object in view at the start position");
      phase.status = "done";
      phase.measurements = {{"object_area", percepts.object.area},
                            {"object_x", percepts.object.x},
                            {"object_y", percepts.object.y}};
    } else if (name == "vis_scan") {
      PlateScanScenario scene(0.0, 100.0, 400.0, 10.0, cfg_.variant != "absent");
      Pipeline p(scene, phase_seed_);
      const auto& g = p.config().geometry;
      VisScanSkill skill({}, static_cast<double>(g.image_width) * g.image_height);
      drive(name, p, skill, 2000);
      phase.status = status(skill);
      phase.flags = skill.flags();
      if (skill.result().at_workspace_limit) phase.status = "failed";
      phase.measurements = {{"extent", skill.result().extent},
                            {"entry", skill.result().entry},
                            {"boundary", skill.result().boundary},
                            {"true_extent", scene.plate_length()}};
    } else if (name == "gentle_grasp") {
      GraspScenario scene(30.0, 0.5);
      Pipeline p(scene, phase_seed_);
      GentleGraspSkill skill;
      drive(name, p, skill, 2000);
      phase.status = status(skill);
      phase.measurements = {{"grasp_force", skill.final_force()},
                            {"opening", p.plant().gripper_opening},
                            {"true_force", scene.normal_force(p.plant())}};
    } else if (name == "arm_rot") {
      ArmRotScenario scene(2.0, cfg_.variant == "stuck" ? 1.0 : 0.0);
      Pipeline p(scene, phase_seed_);
      ArmRotSkillConfig c;
      c.expected_rotation = std::numbers::pi / 2.0;
      ArmRotSkill skill(c);
      const double tau0 = scene.skin_torque(p.plant());
      drive(name, p, skill, 300);
      phase.status = status(skill);
      // A stall is reported but does not stop the sequence.
      phase.flags = skill.flags();
      phase.measurements = {{"final_rotation", p.plant().ee_rotation},
                            {"initial_skin_torque", tau0},
                            {"final_skin_torque", scene.skin_torque(p.plant())}};
    } else if (name == "descend") {
      DescendScenario scene;
      Pipeline p(scene, phase_seed_);
      DescendSkill skill;
      drive(name, p, skill, 600);
      phase.status = status(skill);
      phase.measurements = {{"contact_height", skill.contact_height()},
                            {"true_contact_height", scene.contact_height()}};
    } else if (name == "load_probe") {
      Rng rng(phase_seed_);
      const PipelineConfig pc;
      const auto stream = scenario_plate_load(parabolic_profile(cfg_.load_peak_position), cfg_.probe_samples,
                                              cfg_.probe_noise, rng, pc.geometry, pc.skin, pc.z_gain);
      for (std::size_t k = 0; k < stream.samples.size(); ++k) {
        const auto& s = stream.samples[k];
        report_.log.push_back({{"schema_version", kSchemaVersion},
                               {"frame", report_.log.size()},
                               {"phase", name},
                               {"probe", {{"position", s.position}, {"reading", s.reading}}},
                               {"truth", {{"channels", {{"load", s.true_force}}}}},
                               {"status", "running"}});
      }
      const auto best = probe_max_load(stream, cfg_.probe_window);
      report_.log.back()["status"] = "done";
      phase.status = "done";
      const double step = 1.0 / (cfg_.probe_samples - 1);
      phase.measurements = {{"chosen_position", best.position},
                            {"true_position", stream.true_argmax},
                            {"index_error", std::abs(best.position - stream.true_argmax) / step}};
    } else if (name == "place") {
      // Release the column: open through the leaky integrator until the grip
      // channel has dropped and the fingers are clear of the object.
      GraspScenario scene(30.0, 0.5);
      Pipeline p(scene, phase_seed_);
      p.plant().gripper_opening = 26.0;
      const LeakyConfig leaky{0.8, 0.0, 80.0};
      double x = p.plant().gripper_opening;
      for (int i = 0; i < 100; ++i) {
        const auto& percepts = p.sense();
        x = leaky_step(x, -40.0, leaky);
        SkillCommand cmd;
        cmd.gripper_target = x;
        const bool released = percepts.force.f.z() < 0.3 && p.plant().gripper_opening > 32.0;
        record(name, p, cmd, nullptr, released ? "done" : "running");
        p.apply(cmd);
        if (released) {
          phase.status = "done";
          break;
        }
      }
      if (phase.status != "done") phase.status = "timeout";
      phase.measurements = {{"opening", p.plant().gripper_opening}};
    }
  }

  AssemblyConfig cfg_;
  Rng master_;
  std::uint64_t phase_seed_ = 0;
  AssemblyReport report_;
};

}  // namespace

AssemblyReport run_assembly(const AssemblyConfig& cfg) {
  if (cfg.variant != "default" && cfg.variant != "absent" && cfg.variant != "stuck") {
    throw Error("invalid_argument", "unknown assembly variant '" + cfg.variant +
                                        "' (known: default, absent, stuck)");
  }
  return AssemblyRun(cfg).run();
}

std::vector<std::string> replay_assembly(const std::vector<Json>& log, const Json& report) {
  std::vector<std::string> issues;
  const auto& names = assembly_phases();
  auto phase_index = [&](const std::string& n) {
    return static_cast<int>(std::find(names.begin(), names.end(), n) - names.begin());
  };

  std::map<std::string, std::vector<const Json*>> by_phase;
  int last_phase = -1;
  for (std::size_t i = 0; i < log.size(); ++i) {
    const auto& r = log[i];
    if (!r.contains("frame") || r["frame"].get<std::int64_t>() != static_cast<std::int64_t>(i)) {
      issues.push_back("frame index " + std::to_string(i) + " out of sequence");
    }
    const std::string phase = r.value("phase", "");
    const int idx = phase_index(phase);
    if (idx >= static_cast<int>(names.size())) {
      issues.push_back("record " + std::to_string(i) + " has unknown phase '" + phase + "'");
      continue;
    }
    if (idx < last_phase) issues.push_back("phase " + phase + " resumes after a later phase");
    last_phase = idx;
    by_phase[phase].push_back(&r);
  }

  const auto& phases = report.at("phases");
  for (std::size_t i = 0; i < phases.size(); ++i) {
    const auto& p = phases[i];
    const std::string name = p.at("name");
    if (i >= names.size() || name != names[i]) {
      issues.push_back("report phase " + std::to_string(i) + " is " + name + ", expected " +
                       (i < names.size() ? names[i] : std::string("none")));
      continue;
    }
    const auto& recs = by_phase[name];
    if (static_cast<int>(recs.size()) != p.at("frames").get<int>()) {
      issues.push_back(name + ": report lists " + std::to_string(p.at("frames").get<int>()) +
                       " frames, log has " + std::to_string(recs.size()));
    }
    const bool done = !recs.empty() && recs.back()->value("status", "") == "done";
    if (p.at("success").get<bool>() && !done) issues.push_back(name + ": success without a final done record");
    if (!p.at("success").get<bool>() && done) issues.push_back(name + ": failure but the log ends done");
  }
  if (report.at("success").get<bool>()) {
    if (phases.size() != names.size()) issues.push_back("success reported with missing phases");
    for (const auto& p : phases) {
      if (!p.at("success").get<bool>()) issues.push_back("success reported with a failed phase");
    }
  }
  for (const auto& [phase, recs] : by_phase) {
    bool listed = false;
    for (const auto& p : phases) listed = listed || p.at("name") == phase;
    if (!listed) issues.push_back("log contains phase " + phase + " missing from the report");
  }
  return issues;
}

// ---------------------------------------------------------------------------
// Plot data

namespace {

std::string cell(const Json* v) {
  if (!v || v->is_null()) return "";
  if (v->is_boolean()) return v->get<bool>() ? "1" : "0";
  if (v->is_number_integer()) return v->dump();
  if (v->is_number()) return format_number(v->get<double>());
  if (v->is_string()) return v->get<std::string>();
  return v->dump();
}

const Json* lookup(const Json& r, const std::string& path) {
  const Json* cur = &r;
  std::stringstream ss(path);
  std::string part;
  while (std::getline(ss, part, '.')) {
    if (cur->is_object()) {
      auto it = cur->find(part);
      if (it == cur->end()) return nullptr;
      cur = &*it;
    } else if (cur->is_array()) {
      if (part.empty() || part.find_first_not_of("0123456789") != std::string::npos) return nullptr;
      const auto idx = std::stoul(part);
      if (idx >= cur->size()) return nullptr;
      cur = &(*cur)[idx];
    } else {
      return nullptr;
    }
  }
  return cur;
}

void collect_paths(const Json& j, const std::string& prefix, std::set<std::string>& out) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      collect_paths(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
    }
  } else if (j.is_array() && !j.empty() && !j.front().is_structured()) {
    for (std::size_t i = 0; i < j.size(); ++i) out.insert(prefix + "." + std::to_string(i));
  } else if (!j.is_structured()) {
    out.insert(prefix);
  }
}

std::optional<double> number_at(const Json& r, const std::string& path) {
  const Json* v = lookup(r, path);
  if (!v || !v->is_number()) return std::nullopt;
  return v->get<double>();
}

std::string num(std::optional<double> v) { return v ? format_number(*v) : ""; }

}  // namespace

void PlotTable::write_csv(std::ostream& out) const {
  out << join(header, ",") << '\n';
  for (const auto& r : rows) out << join(r, ",") << '\n';
}

const std::vector<std::string>& plot_views() {
  static const std::vector<std::string> views{"displacement", "followme", "handover", "rotation", "force-fit"};
  return views;
}

PlotTable plot_view(const std::vector<Json>& log, const std::string& view, const PlotOptions& options) {
  PlotTable t;
  auto columns = [&](std::vector<std::pair<std::string, std::string>> cols) {
    t.header.clear();
    for (const auto& c : cols) t.header.push_back(c.first);
    for (const auto& r : log) {
      std::vector<std::string> row;
      for (const auto& c : cols) row.push_back(cell(lookup(r, c.second)));
      t.rows.push_back(std::move(row));
    }
  };
  if (view == "displacement") {
    columns({{"frame", "frame"},
             {"raw_x", "markers.raw_mean.0"},
             {"raw_y", "markers.raw_mean.1"},
             {"raw_s", "markers.raw_mean.2"},
             {"filt_x", "markers.filt_mean.0"},
             {"filt_y", "markers.filt_mean.1"},
             {"filt_s", "markers.filt_mean.2"},
             {"missing", "markers.missing"}});
  } else if (view == "followme") {
    columns({{"frame", "frame"},
             {"force_x", "force.0"},
             {"force_y", "force.1"},
             {"force_z", "force.2"},
             {"object_x", "object.x"},
             {"object_y", "object.y"},
             {"object_area", "object.area"},
             {"human_x", "truth.channels.human_x"},
             {"human_y", "truth.channels.human_y"},
             {"human_z", "truth.channels.human_z"},
             {"command_x", "command.ee_velocity.0"},
             {"command_y", "command.ee_velocity.1"},
             {"command_z", "command.ee_velocity.2"}});
  } else if (view == "handover") {
    t.header = {"frame", "slip_flow", "slip_active", "force_norm", "force_active", "trigger", "gripper_opening"};
    bool force_on = false;
    for (const auto& r : log) {
      const auto flow = number_at(r, "slip.flow");
      std::optional<double> norm;
      if (auto fx = number_at(r, "force.0"), fy = number_at(r, "force.1"), fz = number_at(r, "force.2");
          fx && fy && fz) {
        norm = std::sqrt(*fx * *fx + *fy * *fy + *fz * *fz);
      }
      const bool slip_on = flow && *flow > options.slip_threshold;
      if (norm) {
        if (force_on) {
          if (*norm <= options.force_threshold) force_on = false;
        } else if (*norm > (1.0 + options.hysteresis) * options.force_threshold) {
          force_on = true;
        }
      }
      t.rows.push_back({cell(lookup(r, "frame")), num(flow), slip_on ? "1" : "0", num(norm),
                        force_on ? "1" : "0", slip_on && force_on ? "1" : "0",
                        cell(lookup(r, "plant.gripper_opening"))});
    }
  } else if (view == "rotation") {
    columns({{"frame", "frame"},
             {"torque", "torque"},
             {"angle", "truth.channels.angle"},
             {"skin_torque", "truth.channels.skin_torque"},
             {"orientation", "object.theta"},
             {"gripper_opening", "plant.gripper_opening"},
             {"ee_rotation", "plant.ee_rotation"}});
  } else if (view == "force-fit") {
    columns({{"frame", "frame"},
             {"episode", "episode"},
             {"measured", "force_true"},
             {"predicted", "force_pred"}});
  } else {
    throw Error("invalid_argument", "unknown view '" + view + "' (available: " + join(plot_views()) + ")");
  }
  return t;
}

std::vector<std::string> available_channels(const std::vector<Json>& log) {
  std::set<std::string> paths;
  for (const auto& r : log) collect_paths(r, "", paths);
  return {paths.begin(), paths.end()};
}

PlotTable plot_channels(const std::vector<Json>& log, const std::vector<std::string>& channels) {
  if (!log.empty()) {
    const auto known = available_channels(log);
    for (const auto& c : channels) {
      if (!std::binary_search(known.begin(), known.end(), c)) {
        throw Error("invalid_argument", "unknown channel '" + c + "' (available: " + join(known) + ")");
      }
    }
  }
  PlotTable t;
  t.header.push_back("frame");
  t.header.insert(t.header.end(), channels.begin(), channels.end());
  for (const auto& r : log) {
    std::vector<std::string> row{cell(lookup(r, "frame"))};
    for (const auto& c : channels) row.push_back(cell(lookup(r, c)));
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace fvt
