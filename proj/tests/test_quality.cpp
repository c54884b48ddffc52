#include <doctest.h>

#include <cmath>
#include <random>

#include "funcgrasp/quality.hpp"
#include "funcgrasp/synthesis.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace funcgrasp;
namespace ft = funcgrasp::testing;

namespace {

// Contacts on a sphere of radius r with inward cone axes, jittered so they
// are not exactly normal.
ContactSet sphere_contacts(std::mt19937_64& rng, int n, double r) {
  std::normal_distribution<double> g(0.0, 1.0);
  ContactSet cs;
  for (int i = 0; i < n; ++i) {
    const Vec3 d = Vec3(g(rng), g(rng), g(rng)).normalized();
    cs.points.push_back(r * d);
    cs.cone_axes.push_back((-d + 0.2 * Vec3(g(rng), g(rng), g(rng))).normalized());
  }
  return cs;
}

bool oracle_feasible(const ContactSet& cs, const Wrench& w, const WrenchSettings& s) {
  std::vector<std::vector<Vec3>> edges;
  for (const Vec3& axis : cs.cone_axes) edges.push_back(friction_cone_edges(axis, s.friction_mu, s.cone_facets));
  return oracle::wrench_feasible(cs.points, edges, w, s.max_normal_force, 1e-7);
}

}  // namespace

TEST_CASE("filter thresholds") {
  const FilterThresholds t;
  CHECK(t.max_dg == 0.02);
  CHECK(t.max_df == 0.002);
  CHECK(t.max_dip == 0.002);
  CHECK(t.max_dsp == 0.002);

  CHECK(violated_thresholds({0.01, 0.001, 0.001, 0.001, false}, t).empty());
  CHECK(violated_thresholds({0.02, 0.002, 0.002, 0.002, false}, t).empty());
  CHECK(violated_thresholds({0.01, 0.001, 0.003, 0.001, false}, t) == std::vector<std::string>{"d_IP"});
  CHECK(violated_thresholds({0.02 + 1e-6, 0.002, 0.002, 0.002, false}, t) == std::vector<std::string>{"d_G"});
  CHECK(violated_thresholds({0.02, 0.002 + 1e-6, 0.002, 0.002, false}, t) == std::vector<std::string>{"d_F"});
  CHECK(violated_thresholds({0.02, 0.002, 0.002 + 1e-6, 0.002, false}, t) == std::vector<std::string>{"d_IP"});
  CHECK(violated_thresholds({0.02, 0.002, 0.002, 0.002 + 1e-6, false}, t) == std::vector<std::string>{"d_SP"});
  CHECK(violated_thresholds({1, 1, 1, 1, false}, t) == std::vector<std::string>{"d_G", "d_F", "d_IP", "d_SP"});
}

TEST_CASE("filtering is idempotent") {
  std::mt19937_64 rng(53);
  std::uniform_real_distribution<double> u(0.0, 0.004);
  std::vector<GraspMetrics> metrics;
  for (int i = 0; i < 200; ++i) metrics.push_back({10 * u(rng), u(rng), u(rng), u(rng), false});
  const FilterResult first = filter_grasps(metrics, {});
  CHECK(first.kept.size() + first.rejected.size() == metrics.size());
  std::vector<GraspMetrics> kept;
  for (std::size_t i : first.kept) kept.push_back(metrics[i]);
  const FilterResult second = filter_grasps(kept, {});
  CHECK(second.kept.size() == kept.size());
  CHECK(second.rejected.empty());
  for (const Rejection& r : first.rejected) CHECK(!r.violated.empty());
}

TEST_CASE("d_F takes the best candidate finger") {
  const HandModel hand = parse_hand(ft::two_finger_hand_json(0.03));
  const GraspConfiguration c = GraspConfiguration::identity(2);
  const FkResult fk = forward_kinematics(hand, c);
  const Vec3 pi = fk.link_poses[hand.link_index("index")] * Vec3(0, 0.03, 0.008);
  const Vec3 pm = fk.link_poses[hand.link_index("middle")] * Vec3(0, 0.03, 0.008);
  const Vec3 q = pi + Vec3(0.004, 0.0, 0.01);
  const AffordanceObject obj = ft::custom_object(ft::cube_mesh(0.02), {q, Vec3(0.5, 0.5, 0.5)},
                                                 {Vec3::UnitZ(), Vec3::UnitZ()}, {0}, {1});
  const double di = oracle::chamfer({pi}, {q});
  const double dm = oracle::chamfer({pm}, {q});
  REQUIRE(di < dm);
  const std::vector<Part> index_only{Part::kIndex}, both{Part::kIndex, Part::kMiddle}, middle_only{Part::kMiddle};
  CHECK(metric_df(hand, c, obj, index_only) == doctest::Approx(di).epsilon(1e-12));
  CHECK(metric_df(hand, c, obj, middle_only) == doctest::Approx(dm).epsilon(1e-12));
  CHECK(metric_df(hand, c, obj, both) == metric_df(hand, c, obj, index_only));
  CHECK_THROWS_AS(metric_df(hand, c, obj, std::vector<Part>{}), std::invalid_argument);

  const Vec3 pg = fk.link_poses[hand.root_link()] * Vec3(0, 0, 0.03);
  CHECK(metric_dg(hand, c, obj) == doctest::Approx(oracle::chamfer({pg}, {Vec3(0.5, 0.5, 0.5)})).epsilon(1e-12));
}

TEST_CASE("d_IP is the deepest hand point inside the object") {
  const HandModel hand = parse_hand(ft::chain_hand_json());
  const GraspConfiguration c = GraspConfiguration::identity(1);
  // Palm point (0, 0, 0.01) sits 7 mm above the bottom face of a 2 cm cube;
  // the other palm points are outside it.
  TriangleMesh cube = ft::cube_mesh(0.02);
  for (Vec3& v : cube.vertices) v.z() += 0.013;
  const AffordanceObject obj = ft::custom_object(cube, {Vec3(0, 0, 0.023), Vec3(0, 0.01, 0.013)},
                                                 {Vec3::UnitZ(), Vec3::UnitY()}, {0}, {1});
  CHECK(metric_dip(hand, c, obj) == doctest::Approx(0.007).epsilon(1e-12));

  GraspConfiguration away = c;
  away.translation = Vec3(0, 0, -0.5);
  CHECK(metric_dip(hand, away, obj) == 0.0);
}

TEST_CASE("d_SP of two overlapping finger capsules") {
  const HandModel pair = parse_hand(ft::two_finger_hand_json());
  CHECK(metric_dsp(pair, GraspConfiguration::identity(2)) == doctest::Approx(0.004).epsilon(1e-12));
  const HandModel apart = parse_hand(ft::two_finger_hand_json(0.03));
  CHECK(metric_dsp(apart, GraspConfiguration::identity(2)) == 0.0);
  for (const char* id : {"hand16", "hand22"}) {
    const HandModel hand = load_hand(ft::hand_file(id));
    CHECK(metric_dsp(hand, GraspConfiguration::identity(hand.dof())) == 0.0);
  }
}

TEST_CASE("metrics are invariant under a common rigid transform") {
  const HandModel hand = load_hand(ft::hand_file("hand16"));
  const AffordanceObject obj = load_object(ft::object_file("drill"));
  GraspConfiguration c = axis_align_init(hand, obj, {Part::kIndex, {}}, OptimizerSettings{});
  Eigen::VectorXd d = Eigen::VectorXd::Zero(hand.tangent_dim());
  d[1] = -0.004;
  d[9] = 0.3;
  c = retract(c, d);

  Transform t = Transform::Identity();
  t.linear() = exp_so3(Vec3(-0.4, 0.9, 0.2));
  t.translation() = Vec3(0.3, -0.1, 0.2);
  AffordanceObject moved = obj;
  for (Vec3& v : moved.mesh.vertices) v = t * v;
  for (Vec3& p : moved.surface.points) p = t * p;
  for (Vec3& n : moved.surface.normals) n = t.linear() * n;
  moved.query = std::make_shared<const MeshQuery>(moved.mesh);
  GraspConfiguration mc = c;
  mc.translation = t * c.translation;
  mc.rotation = Eigen::Quaterniond(t.linear()) * c.rotation;

  const std::vector<Part> cands{Part::kIndex};
  const GraspMetrics a = evaluate_metrics(hand, c, obj, cands);
  const GraspMetrics b = evaluate_metrics(hand, mc, moved, cands);
  CHECK(std::abs(a.d_g - b.d_g) <= 1e-9);
  CHECK(std::abs(a.d_f - b.d_f) <= 1e-9);
  CHECK(std::abs(a.d_ip - b.d_ip) <= 1e-9);
  CHECK(std::abs(a.d_sp - b.d_sp) <= 1e-9);
}

TEST_CASE("wrench check examples") {
  WrenchSettings s;
  s.friction_mu = 0.5;
  s.max_normal_force = 20.0;
  ContactSet pinch;
  pinch.points = {{0.025, 0, 0}, {-0.025, 0, 0}};
  pinch.cone_axes = {{-1, 0, 0}, {1, 0, 0}};
  Wrench gravity = Wrench::Zero();
  gravity[2] = -9.81;
  const std::vector<Wrench> g{gravity};
  CHECK(wrench_resistance_check(pinch, s, g));
  CHECK(oracle_feasible(pinch, gravity, s));

  ContactSet single;
  single.points = {{0, 0, -0.025}};
  single.cone_axes = {{0, 0, 1}};
  WrenchSettings frictionless = s;
  frictionless.friction_mu = 0.0;
  Wrench push = Wrench::Zero();
  push[0] = 10.0;
  CHECK_FALSE(wrench_resistance_check(single, frictionless, std::vector<Wrench>{push}));
  CHECK(wrench_resistance_check(single, frictionless, std::vector<Wrench>{}));

  const auto defaults = default_external_wrenches();
  REQUIRE(defaults.size() == 7);
  for (int i = 0; i < 6; ++i) CHECK(defaults[i].head<3>().norm() == doctest::Approx(10.0));
  CHECK(defaults[6][2] == doctest::Approx(-9.81));
}

TEST_CASE("friction cone edges") {
  const Vec3 axis = Vec3(0.3, -0.5, 0.8).normalized();
  const auto edges = friction_cone_edges(axis, 0.7, 8);
  REQUIRE(edges.size() == 8);
  Vec3 mean = Vec3::Zero();
  for (const Vec3& e : edges) {
    CHECK(e.dot(axis) == doctest::Approx(1.0));
    CHECK((e - axis).norm() == doctest::Approx(0.7));
    mean += e;
  }
  CHECK((mean / 8.0 - axis).norm() <= 1e-12);
}

TEST_CASE("wrench feasibility agrees with the LP oracle") {
  std::mt19937_64 rng(59);
  std::uniform_int_distribution<int> count(1, 5);
  std::uniform_real_distribution<double> mu(0.2, 1.0);
  std::normal_distribution<double> g(0.0, 1.0);
  int feasible = 0, total = 0;
  for (int trial = 0; trial < 40; ++trial) {
    WrenchSettings s;
    s.friction_mu = mu(rng);
    const ContactSet cs = sphere_contacts(rng, count(rng), 0.04);
    std::vector<Wrench> wrenches = default_external_wrenches();
    Wrench w;
    for (int k = 0; k < 6; ++k) w[k] = g(rng) * (k < 3 ? 5.0 : 0.1);
    wrenches.push_back(w);
    for (const Wrench& ext : wrenches) {
      const bool lib = wrench_residual(cs, ext, s) <= s.residual_tolerance;
      const bool ref = oracle_feasible(cs, ext, s);
      CHECK(lib == ref);
      feasible += ref ? 1 : 0;
      ++total;
    }
    // Monotone in mu.
    WrenchSettings wider = s;
    wider.friction_mu = 1.5 * s.friction_mu;
    if (wrench_resistance_check(cs, s, wrenches)) CHECK(wrench_resistance_check(cs, wider, wrenches));
  }
  // Both outcomes are exercised.
  CHECK(feasible > total / 10);
  CHECK(feasible < total - total / 10);
}

TEST_CASE("nnls") {
  Eigen::MatrixXd a(3, 2);
  a << 1, 0, 0, 1, 1, 1;
  Eigen::VectorXd b(3);
  b << 1, -1, 0;
  const Eigen::VectorXd x = nnls(a, b);
  CHECK(x.minCoeff() >= 0.0);
  // Unconstrained optimum has x2 < 0; the constrained one is x = (0.5, 0).
  CHECK(x[0] == doctest::Approx(0.5));
  CHECK(x[1] == doctest::Approx(0.0));
}
