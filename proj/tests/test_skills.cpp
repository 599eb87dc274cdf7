#include "fvtactile/harness.hpp"
#include "fvtactile/skills.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace fvt;

namespace {

ForceEstimate force(double x, double y = 0.0, double z = 0.0) {
  ForceEstimate f;
  f.f = Vec3(x, y, z);
  return f;
}

ForceTrackConfig hand_cfg() {
  ForceTrackConfig c;
  c.f_min = 0.1;
  c.f_max = 1.1;
  c.v_min = 0.0;
  c.v_max = 20.0;
  c.eps = 0.2;
  return c;
}

ObjectPercept object_at(double x, double y, double area) {
  ObjectPercept p;
  p.present = true;
  p.x = x;
  p.y = y;
  p.area = area;
  return p;
}

SlipSignal slip(bool active) {
  SlipSignal s;
  s.active = active;
  s.flow_magnitude = active ? 2.0 : 0.0;
  return s;
}

}  // namespace

TEST_SUITE("skills") {

TEST_CASE("force_track_step: dead zone, hand-evaluated speed and sign symmetry") {
  const ForceTrackConfig c = hand_cfg();
  CHECK(c.alpha() == 20.0);
  CHECK(force_track_step(force(0.1), c).ee_velocity == Vec3::Zero());
  CHECK(force_track_step(force(0.5), c).ee_velocity.x() == doctest::Approx(8.0).epsilon(1e-12));
  CHECK(force_track_step(force(-0.5), c).ee_velocity.x() == doctest::Approx(-8.0).epsilon(1e-12));
  CHECK(force_track_step(force(0.5, -0.5, 0.05), c).ee_velocity.y() ==
        doctest::Approx(-8.0).epsilon(1e-12));
  CHECK(force_track_step(force(0.5, -0.5, 0.05), c).ee_velocity.z() == 0.0);
}

TEST_CASE("force_track_step: speed is clamped to [v_min, v_max]") {
  ForceTrackConfig c = hand_cfg();
  c.v_min = 2.0;
  c.eps = 0.12;
  CHECK(force_track_step(force(5.0), c).ee_velocity.x() == 20.0);
  CHECK(force_track_step(force(0.15), c).ee_velocity.x() == 2.0);
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const double m = rng.uniform(c.f_min, c.f_max);
    const double v = std::abs(force_track_step(force(m), c).ee_velocity.x());
    if (m > c.eps) {
      CHECK(v >= c.v_min);
      CHECK(v <= c.v_max);
    }
  }
}

TEST_CASE("force_track_step is odd in f and zero inside the dead zone") {
  const ForceTrackConfig c;
  Rng rng(4);
  for (int i = 0; i < 1000; ++i) {
    const ForceEstimate f = force(rng.uniform(-4, 4), rng.uniform(-4, 4), rng.uniform(-4, 4));
    const Vec3 a = force_track_step(f, c).ee_velocity;
    const Vec3 b = force_track_step(force(-f.f.x(), -f.f.y(), -f.f.z()), c).ee_velocity;
    CHECK(a == -b);
    for (int k = 0; k < 3; ++k)
      if (std::abs(f.f(k)) <= c.eps) CHECK(a(k) == 0.0);
  }
}

TEST_CASE("force_track config invariants") {
  ForceTrackConfig c;
  c.f_max = c.f_min;
  CHECK_THROWS_AS(c.validate(), Error);
  c = ForceTrackConfig{};
  c.eps = 0.0;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("object_track: area term retreats above M_eps and advances below") {
  ObjectTrackConfig c;
  c.m_eps = 1000.0;
  const Vec2 big = object_track_increment(object_at(160, 120, 2000), c);
  CHECK(big.x() == 0.0);
  CHECK(big.y() == -c.delta);
  const Vec2 small = object_track_increment(object_at(160, 120, 500), c);
  CHECK(small.y() == +c.delta);
  CHECK(object_track_increment(object_at(160, 120, 1000), c).y() == +c.delta);
}

TEST_CASE("object_track: centroid dead zone and sign-preserving clamp") {
  ObjectTrackConfig c;
  CHECK(object_track_increment(object_at(160 + c.xbar_eps, 120, 2000), c).x() == 0.0);
  CHECK(object_track_increment(object_at(160 + 10, 120, 2000), c).x() == doctest::Approx(1.0));
  CHECK(object_track_increment(object_at(160 - 10, 120, 2000), c).x() == doctest::Approx(-1.0));
  CHECK(object_track_increment(object_at(160 + 100, 120, 2000), c).x() == c.x_max);
  CHECK(object_track_increment(object_at(160 - 100, 120, 2000), c).x() == -c.x_max);
}

TEST_CASE("object_track: x tracking swaps the roles of the axes") {
  ObjectTrackConfig c;
  c.tracking_axis = Axis::X;
  const Vec2 inc = object_track_increment(object_at(300, 120 + 10, 2000), c);
  CHECK(inc.x() == -c.delta);
  CHECK(inc.y() == doctest::Approx(1.0));
}

TEST_CASE("object_track: the area command only takes the values +-delta") {
  ObjectTrackConfig c;
  Rng rng(5);
  for (int i = 0; i < 500; ++i) {
    const Vec2 inc = object_track_increment(
        object_at(rng.uniform(0, 320), rng.uniform(0, 240), rng.uniform(1, 5000)), c);
    CHECK(std::abs(inc.y()) == c.delta);
  }
}

TEST_CASE("object_track_step: velocity is the increment over dt; absent object is lost") {
  ObjectTrackConfig c;
  const SkillCommand cmd = object_track_step(object_at(160, 120, 2000), c);
  CHECK(cmd.ee_velocity.y() == doctest::Approx(-c.delta / c.dt));
  const SkillCommand lost = object_track_step(ObjectPercept{}, c);
  CHECK(lost.lost_object);
  CHECK(lost.is_zero_motion());
}

TEST_CASE("arm_rot_step: proportional law with a dead zone") {
  ArmRotConfig c;
  c.k_tau = 0.5;
  c.eps_tau = 0.1;
  TorqueEstimate t;
  const SkillCommand zero = arm_rot_step(t, c);
  CHECK(zero.ee_rot_velocity == 0.0);
  CHECK(zero.converged);
  t.tau_z = 0.4;
  const SkillCommand cmd = arm_rot_step(t, c);
  CHECK(cmd.ee_rot_velocity == doctest::Approx(-0.2).epsilon(1e-15));
  CHECK_FALSE(cmd.converged);
  t.tau_z = -0.4;
  CHECK(arm_rot_step(t, c).ee_rot_velocity == doctest::Approx(0.2).epsilon(1e-15));
}

TEST_CASE("leaky_step: fixed point, 44-step bound and contraction") {
  LeakyConfig c;
  c.leak_alpha = 0.9;
  c.min_opening = -100.0;
  c.max_opening = 100.0;
  CHECK(leaky_step(7.0, -7.0, c) == doctest::Approx(7.0).epsilon(1e-15));

  double x = 0.0;
  int first = -1;
  for (int t = 1; t <= 60; ++t) {
    x = leaky_step(x, -1.0, c);
    if (first < 0 && x >= 0.99) first = t;
  }
  CHECK(first == 44);

  Rng rng(6);
  for (int i = 0; i < 200; ++i) {
    const double L = rng.uniform(-50, 50), xp = rng.uniform(-50, 50);
    const double xn = leaky_step(xp, L, c);
    CHECK(std::abs(xn + L) == doctest::Approx(c.leak_alpha * std::abs(xp + L)).epsilon(1e-12));
  }

  c.leak_alpha = 1e-12;
  CHECK(leaky_step(30.0, -12.0, c) == doctest::Approx(12.0).epsilon(1e-9));
  c.leak_alpha = 1.0;
  CHECK_THROWS_AS(leaky_step(0.0, 0.0, c), Error);
}

TEST_CASE("leaky_step clamps to the gripper range") {
  LeakyConfig c;
  CHECK(leaky_step(1.0, 500.0, c) == 0.0);
  CHECK(leaky_step(79.0, -500.0, c) == 80.0);
}

TEST_CASE("handover trigger: closes only on slip AND force") {
  HandoverConfig cfg;
  HandoverTrigger t(cfg);
  CHECK(t.step(slip(true), force(2.0)) == -cfg.close_opening);
  HandoverTrigger t2(cfg);
  CHECK(t2.step(slip(true), force(0.2)) == -cfg.open_opening);
  HandoverTrigger t3(cfg);
  CHECK(t3.step(slip(false), force(0.2)) == -cfg.open_opening);
  HandoverTrigger t4(cfg);
  CHECK(t4.step(slip(false), force(2.0)) == -cfg.open_opening);
}

TEST_CASE("handover trigger: hysteresis band around the force threshold") {
  HandoverConfig cfg;
  HandoverTrigger t(cfg);
  t.step(slip(false), force(1.05));
  CHECK_FALSE(t.force_active());
  t.step(slip(false), force(1.11));
  CHECK(t.force_active());
  t.step(slip(false), force(1.02));
  CHECK(t.force_active());
  t.step(slip(false), force(1.0));
  CHECK_FALSE(t.force_active());
}

TEST_CASE("handover trigger: no false closures over an adversarial schedule") {
  HandoverConfig cfg;
  HandoverTrigger t(cfg);
  Rng rng(99);
  int closures = 0;
  for (int i = 0; i < 1000; ++i) {
    // Force magnitudes concentrated around the threshold and its band.
    const double m = cfg.force_threshold * rng.uniform(0.8, 1.3);
    const bool s = rng.uniform() < 0.5;
    const double L = t.step(slip(s), force(m));
    if (L == -cfg.close_opening) {
      ++closures;
      CHECK(s);
      CHECK(m > cfg.force_threshold);
    }
  }
  CHECK(closures > 0);
}

TEST_CASE("in-hand-rot: already-converged start regrips after 5 frames") {
  InHandRotSkill s;
  PerceptBundle p;
  PlantState plant;
  plant.gripper_opening = 8.0;
  int frames = 0;
  while (s.status() == SkillStatus::Running && frames < 50) {
    s.step(p, plant);
    ++frames;
  }
  CHECK(frames == 5);
  CHECK(s.status() == SkillStatus::Done);
  CHECK(s.frames() == 5);
}

TEST_CASE("in-hand-rot: opens while torque persists and times out") {
  InHandRotConfig cfg;
  cfg.max_frames = 30;
  InHandRotSkill s(cfg);
  PerceptBundle p;
  p.torque.tau_z = 50.0;
  PlantState plant;
  plant.gripper_opening = 8.0;
  double prev = 8.0;
  for (int i = 0; i < 30; ++i) {
    const SkillCommand c = s.step(p, plant);
    REQUIRE(c.gripper_target);
    CHECK(*c.gripper_target >= prev);
    prev = *c.gripper_target;
  }
  CHECK(s.status() == SkillStatus::Failed);
  CHECK(s.has_flag("timeout"));
}

TEST_CASE("hold: constant opening without slip, tightening during a burst") {
  HoldSkill s;
  PlantState plant;
  plant.gripper_opening = 3.0;
  PerceptBundle still;
  for (int i = 0; i < 5; ++i) CHECK(*s.step(still, plant).gripper_target == 3.0);
  PerceptBundle slipping;
  slipping.slip = slip(true);
  double prev = 3.0;
  for (int i = 0; i < 4; ++i) {
    const double o = *s.step(slipping, plant).gripper_target;
    CHECK(o < prev);
    prev = o;
  }
  CHECK_FALSE(s.has_flag("cannot_hold"));
  for (int i = 0; i < 10; ++i) s.step(slipping, plant);
  CHECK(s.opening() == 0.0);
  CHECK(s.has_flag("cannot_hold"));
}

TEST_CASE("vis-scan: nothing in view is an error") {
  VisScanSkill s;
  PerceptBundle p;
  try {
    s.step(p, PlantState{});
    FAIL("expected nothing_to_scan");
  } catch (const Error& e) {
    CHECK(e.code() == "nothing_to_scan");
  }
}

TEST_CASE("vis-scan: zero floor runs to the workspace limit") {
  VisScanConfig cfg;
  cfg.area_floor = 0.0;
  cfg.workspace_limit = 30.0;
  VisScanSkill s(cfg);
  PerceptBundle p;
  p.object = object_at(160, 120, 100);
  ScriptedWrenchScenario sc("scan", {AppliedWrench{}});
  PlantState plant;
  for (int i = 0; i < 1000 && s.status() == SkillStatus::Running; ++i) {
    plant = step_plant(plant, s.step(p, plant), sc);
  }
  CHECK(s.status() == SkillStatus::Done);
  CHECK(s.result().at_workspace_limit);
  CHECK(s.has_flag("at_workspace_limit"));
  CHECK(s.result().boundary >= 30.0);
}

TEST_CASE("gentle-grasp: target 0 stops at the first contact frame") {
  GentleGraspConfig cfg;
  cfg.grip_force_target = 0.0;
  GentleGraspSkill s(cfg);
  PlantState plant;
  plant.gripper_opening = 40.0;
  PerceptBundle p;
  int frames = 0;
  for (; frames < 100; ++frames) {
    if (frames == 10) p.force = force(0.0, 0.0, 0.5);
    s.step(p, plant);
    if (s.status() != SkillStatus::Running) break;
  }
  CHECK(frames == 10);
  CHECK(s.status() == SkillStatus::Done);
}

TEST_CASE("gentle-grasp: closing on nothing raises no_object") {
  GentleGraspSkill s;
  PlantState plant;
  plant.gripper_opening = 10.0;
  PerceptBundle p;
  bool thrown = false;
  for (int i = 0; i < 5000 && !thrown; ++i) {
    try {
      const SkillCommand c = s.step(p, plant);
      plant.gripper_opening = *c.gripper_target;
    } catch (const Error& e) {
      CHECK(e.code() == "no_object");
      thrown = true;
    }
  }
  CHECK(thrown);
}

TEST_CASE("descend: contact after the debounce window") {
  DescendSkill s;
  PlantState plant;
  plant.ee_position.z() = 50.0;
  PerceptBundle p;
  for (int i = 0; i < 10; ++i) {
    if (i == 4) {
      p.force = force(0, 0, 2.0);
      plant.ee_position.z() = 42.0;
    }
    s.step(p, plant);
  }
  CHECK(s.status() == SkillStatus::Done);
  CHECK(s.contact_height() == 42.0);
}

TEST_CASE("skill factory rejects unknown names and parameters") {
  CHECK(make_skill("none", {}) == nullptr);
  CHECK(make_skill("force-track", {{"f_min", 0.2}})->name() == "force-track");
  CHECK_THROWS_AS(make_skill("teleport", {}), Error);
  CHECK_THROWS_AS(make_skill("force-track", {{"gain", 1.0}}), Error);
  for (const auto& n : skill_names()) CHECK(make_skill(n, {}) != nullptr);
}

}  // TEST_SUITE
