// Generates the bundled hand descriptions and annotated object meshes.
//   make_fixtures <data_dir>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "funcgrasp/affordance.hpp"
#include "funcgrasp/geometry.hpp"
#include "funcgrasp/mesh_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using funcgrasp::Vec3;

namespace {

constexpr double kPi = std::numbers::pi;

json vec(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

// ---------------------------------------------------------------------------
// Hands. Palm frame: fingers along +y, palm normal (grasping side) +z.

constexpr double kPalmHalfX = 0.045;
constexpr double kPalmHalfY = 0.05;
constexpr double kPalmHalfZ = 0.012;

struct FingerSpec {
  std::string part;
  double x = 0.0;
  double radius = 0.0085;
  std::array<double, 3> lengths{};
  bool arch_joint = false;  // extra metacarpal joint (little finger)
};

struct HandBuilder {
  json links = json::array();
  json joints = json::array();
  json functional = json::object();
  json grasping = json::array();

  void link(const std::string& name, const std::string& part, json prims, const std::vector<Vec3>& pts) {
    json p = json::array();
    for (const Vec3& v : pts) p.push_back(vec(v));
    links.push_back({{"name", name}, {"part", part}, {"primitives", std::move(prims)}, {"surface_points", p}});
  }

  void joint(const std::string& name, const std::string& parent, const std::string& child, const Vec3& axis,
             const Vec3& xyz, const Vec3& rpy, double lo, double hi, bool flexion) {
    joints.push_back({{"name", name},
                      {"parent", parent},
                      {"child", child},
                      {"axis", vec(axis)},
                      {"origin", {{"xyz", vec(xyz)}, {"rpy", vec(rpy)}}},
                      {"limits", {lo, hi}},
                      {"flexion", flexion}});
  }
};

json sphere(const Vec3& c, double r) { return {{"type", "sphere"}, {"center", vec(c)}, {"radius", r}}; }
json capsule(const Vec3& a, const Vec3& b, double r) {
  return {{"type", "capsule"}, {"a", vec(a)}, {"b", vec(b)}, {"radius", r}};
}

// Rings of points around a segment along local +y.
std::vector<Vec3> capsule_points(double length, double r, bool tip) {
  std::vector<Vec3> out;
  for (double t : {0.25, 0.5, 0.75}) {
    for (int k = 0; k < 8; ++k) {
      const double a = 2.0 * kPi * k / 8.0;
      out.emplace_back(r * std::cos(a), t * length, r * std::sin(a));
    }
  }
  if (tip) {
    for (int k = 0; k < 8; ++k) {
      const double a = 2.0 * kPi * k / 8.0;
      const double e = kPi / 4.0;
      out.emplace_back(r * std::cos(e) * std::cos(a), length + r * std::sin(e), r * std::cos(e) * std::sin(a));
    }
    out.emplace_back(0.0, length + r, 0.0);
  }
  return out;
}

std::vector<Vec3> palm_points() {
  std::vector<Vec3> out;
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) {
      const double x = -kPalmHalfX + 2.0 * kPalmHalfX * (i + 0.5) / 5.0;
      const double y = -kPalmHalfY + 2.0 * kPalmHalfY * (j + 0.5) / 5.0;
      out.emplace_back(x, y, kPalmHalfZ);
    }
  }
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      const double x = -kPalmHalfX + 2.0 * kPalmHalfX * (i + 0.5) / 4.0;
      const double y = -kPalmHalfY + 2.0 * kPalmHalfY * (j + 0.5) / 4.0;
      out.emplace_back(x, y, -kPalmHalfZ);
    }
  }
  for (int j = 0; j < 4; ++j) {
    const double y = -kPalmHalfY + 2.0 * kPalmHalfY * (j + 0.5) / 4.0;
    out.emplace_back(kPalmHalfX, y, 0.0);
    out.emplace_back(-kPalmHalfX, y, 0.0);
  }
  for (int i = 0; i < 4; ++i) {
    const double x = -kPalmHalfX + 2.0 * kPalmHalfX * (i + 0.5) / 4.0;
    out.emplace_back(x, kPalmHalfY, 0.0);
    out.emplace_back(x, -kPalmHalfY, 0.0);
  }
  return out;
}

// Finger chain rooted at `base_xyz` with local +y along `base_rpy`.
void add_finger(HandBuilder& h, const FingerSpec& f, const Vec3& base_xyz, const Vec3& base_rpy,
                int twist_joints, const std::array<double, 2>& abd_limits) {
  const std::string& p = f.part;
  const double r = f.radius;
  std::string parent = "palm";
  Vec3 xyz = base_xyz;
  Vec3 rpy = base_rpy;
  auto knuckle = [&](const std::string& name) {
    h.link(name, p, json::array({sphere(Vec3::Zero(), r)}), {});
  };
  for (int k = 0; k < twist_joints; ++k) {
    const std::string name = p + "_twist" + std::to_string(k);
    knuckle(name);
    h.joint(name, parent, name, Vec3::UnitY(), xyz, rpy, 0.0, 0.4, false);
    parent = name;
    xyz = Vec3::Zero();
    rpy = Vec3::Zero();
  }
  const std::string base = p + "_base";
  knuckle(base);
  h.joint(p + "_abd", parent, base, Vec3::UnitZ(), xyz, rpy, abd_limits[0], abd_limits[1], false);

  const char* names[3] = {"_proximal", "_middle", "_distal"};
  const char* joint_names[3] = {"_mcp", "_pip", "_dip"};
  const double upper[3] = {1.6, 1.7, 1.5};
  std::string prev = base;
  Vec3 origin = Vec3::Zero();
  for (int s = 0; s < 3; ++s) {
    const std::string name = p + names[s];
    const double len = f.lengths[s];
    h.link(name, p, json::array({capsule(Vec3::Zero(), Vec3(0, len, 0), r)}), capsule_points(len, r, s == 2));
    h.joint(p + joint_names[s], prev, name, Vec3::UnitX(), origin, Vec3::Zero(), s == 0 ? -0.2 : 0.0, upper[s], true);
    prev = name;
    origin = Vec3(0, len, 0);
  }
  // Distal pad and tip.
  const double ld = f.lengths[2];
  h.functional[p] = json::array({
      {{"link", p + "_distal"}, {"position", vec(Vec3(0, 0.4 * ld, r))}},
      {{"link", p + "_distal"}, {"position", vec(Vec3(0, 0.75 * ld, r))}},
      {{"link", p + "_distal"}, {"position", vec(Vec3(0, ld + 0.5 * r, 0.866 * r))}},
  });
  for (int s = 0; s < 2; ++s) {
    h.grasping.push_back({{"link", p + names[s]}, {"position", vec(Vec3(0, 0.5 * f.lengths[s], r))}});
  }
}

json build_hand(const std::string& id, bool five_fingers) {
  HandBuilder h;
  json palm_box = {{"type", "box"},
                   {"center", vec(Vec3::Zero())},
                   {"half_extents", vec(Vec3(kPalmHalfX, kPalmHalfY, kPalmHalfZ))}};
  h.link("palm", "palm", json::array({palm_box}), palm_points());
  for (double x : {-0.025, 0.0, 0.025}) {
    for (double y : {-0.03, 0.0, 0.03}) h.grasping.push_back({{"link", "palm"}, {"position", vec(Vec3(x, y, kPalmHalfZ))}});
  }

  std::vector<FingerSpec> fingers;
  if (five_fingers) {
    fingers = {{"index", 0.033, 0.0085, {0.045, 0.027, 0.022}},
               {"middle", 0.011, 0.0085, {0.048, 0.030, 0.024}},
               {"ring", -0.011, 0.0085, {0.045, 0.028, 0.022}},
               {"little", -0.033, 0.0075, {0.036, 0.022, 0.020}, true}};
  } else {
    fingers = {{"index", 0.03, 0.009, {0.045, 0.027, 0.022}},
               {"middle", 0.0, 0.009, {0.048, 0.030, 0.024}},
               {"ring", -0.03, 0.009, {0.045, 0.028, 0.022}}};
  }
  for (const FingerSpec& f : fingers) {
    const Vec3 base(f.x, kPalmHalfY + f.radius + 0.002, 0.0);
    add_finger(h, f, base, Vec3::Zero(), f.arch_joint ? 1 : 0, {-0.3, 0.3});
  }

  const FingerSpec thumb{"thumb", 0.0, 0.0095, {0.040, 0.032, 0.028}};
  const Vec3 thumb_base(kPalmHalfX + thumb.radius + 0.002, -0.02, 0.0);
  // Local +y points along (0.6, 0.8, 0) in the palm plane.
  const Vec3 thumb_rpy(0.0, 0.0, -std::atan2(0.6, 0.8));
  add_finger(h, thumb, thumb_base, thumb_rpy, five_fingers ? 1 : 0, {-0.5, 0.5});

  json press = json::object();
  for (const FingerSpec& f : fingers) press[f.part] = vec(Vec3::UnitZ());
  const Vec3 along(0.6, 0.8, 0.0);
  json thumb_gf = json::array({
      {{"name", "tip-press"}, {"gf", vec(Vec3(0.6, 0.8, 0.3).normalized())}, {"fa", vec(Vec3::UnitZ())}},
      {{"name", "pad-press"}, {"gf", vec(along)}, {"fa", vec(Vec3::UnitZ())}},
      {{"name", "lateral"}, {"gf", vec(along)}, {"fa", vec(Vec3(0.8, -0.6, 0.0))}},
  });
  return {{"id", id},
          {"links", h.links},
          {"joints", h.joints},
          {"anchors", {{"functional", h.functional}, {"grasping", h.grasping}}},
          {"axes", {{"press", press}, {"thumb_gf", thumb_gf}}}};
}

// ---------------------------------------------------------------------------
// Objects

using funcgrasp::TriangleMesh;

// Surface of revolution about +z from a (radius, z) profile running bottom
// to top; the first and last profile points must lie on the axis.
TriangleMesh lathe(const std::vector<std::pair<double, double>>& profile, int segments) {
  TriangleMesh m;
  const int n = static_cast<int>(profile.size());
  m.vertices.emplace_back(0.0, 0.0, profile.front().second);
  std::vector<int> ring_start;
  for (int i = 1; i < n - 1; ++i) {
    ring_start.push_back(static_cast<int>(m.vertices.size()));
    for (int k = 0; k < segments; ++k) {
      const double a = 2.0 * kPi * k / segments;
      m.vertices.emplace_back(profile[i].first * std::cos(a), profile[i].first * std::sin(a), profile[i].second);
    }
  }
  const int top = static_cast<int>(m.vertices.size());
  m.vertices.emplace_back(0.0, 0.0, profile.back().second);
  for (int k = 0; k < segments; ++k) {
    const int k1 = (k + 1) % segments;
    m.triangles.push_back({0, ring_start.front() + k1, ring_start.front() + k});
    m.triangles.push_back({top, ring_start.back() + k, ring_start.back() + k1});
  }
  for (std::size_t r = 0; r + 1 < ring_start.size(); ++r) {
    for (int k = 0; k < segments; ++k) {
      const int k1 = (k + 1) % segments;
      const int a = ring_start[r] + k, b = ring_start[r] + k1;
      const int c = ring_start[r + 1] + k, d = ring_start[r + 1] + k1;
      m.triangles.push_back({a, b, d});
      m.triangles.push_back({a, d, c});
    }
  }
  return m;
}

double cross2(const Eigen::Vector2d& a, const Eigen::Vector2d& b) { return a.x() * b.y() - a.y() * b.x(); }

// Ear clipping of a simple counter-clockwise polygon.
std::vector<std::array<int, 3>> triangulate(const std::vector<Eigen::Vector2d>& poly) {
  std::vector<int> idx(poly.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
  std::vector<std::array<int, 3>> out;
  while (idx.size() > 3) {
    bool clipped = false;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const int a = idx[(i + idx.size() - 1) % idx.size()], b = idx[i], c = idx[(i + 1) % idx.size()];
      if (cross2(poly[b] - poly[a], poly[c] - poly[b]) <= 1e-12) continue;
      bool empty = true;
      for (int j : idx) {
        if (j == a || j == b || j == c) continue;
        const auto& p = poly[j];
        if (cross2(poly[b] - poly[a], p - poly[a]) >= 0 && cross2(poly[c] - poly[b], p - poly[b]) >= 0 &&
            cross2(poly[a] - poly[c], p - poly[c]) >= 0) {
          empty = false;
          break;
        }
      }
      if (!empty) continue;
      out.push_back({a, b, c});
      idx.erase(idx.begin() + static_cast<long>(i));
      clipped = true;
      break;
    }
    if (!clipped) throw std::runtime_error("polygon is not simple");
  }
  out.push_back({idx[0], idx[1], idx[2]});
  return out;
}

// Extrudes a counter-clockwise (x, z) profile along y over [-w/2, w/2].
TriangleMesh extrude(const std::vector<Eigen::Vector2d>& poly, double width) {
  TriangleMesh m;
  const int n = static_cast<int>(poly.size());
  for (double y : {-0.5 * width, 0.5 * width}) {
    for (const auto& p : poly) m.vertices.emplace_back(p.x(), y, p.y());
  }
  // Profile is CCW in (x, z); seen from -y that is the outward orientation.
  for (const auto& t : triangulate(poly)) {
    m.triangles.push_back({t[0], t[1], t[2]});
    m.triangles.push_back({n + t[0], n + t[2], n + t[1]});
  }
  for (int i = 0; i < n; ++i) {
    const int j = (i + 1) % n;
    m.triangles.push_back({i, n + i, n + j});
    m.triangles.push_back({i, n + j, j});
  }
  return m;
}

// Orientation check: the divergence theorem gives a positive volume for
// outward-facing triangles.
double volume(const TriangleMesh& m) {
  double v = 0.0;
  for (const auto& t : m.triangles) v += m.vertices[t[0]].dot(m.vertices[t[1]].cross(m.vertices[t[2]])) / 6.0;
  return v;
}

using Predicate = std::function<bool(const Vec3& p, const Vec3& n)>;

void write_object(const fs::path& dir, const std::string& name, const std::string& category, TriangleMesh mesh,
                  std::uint64_t seed, const Predicate& functional, const Predicate& grasping,
                  std::vector<funcgrasp::Part> fingers, std::optional<funcgrasp::ObjectAxes> axes) {
  if (volume(mesh) <= 0.0) throw std::runtime_error(name + ": mesh is inside out");
  const fs::path mesh_path = dir / (name + ".obj");
  funcgrasp::save_obj(mesh_path, mesh);
  const TriangleMesh reloaded = funcgrasp::load_mesh(mesh_path);
  funcgrasp::Annotation a;
  a.category = category;
  a.mesh = name + ".obj";
  a.seed = seed;
  a.n_points = 2048;
  const funcgrasp::PointCloud cloud = funcgrasp::sample_surface_points(reloaded, a.n_points, seed);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (functional(cloud.points[i], cloud.normals[i])) a.functional_indices.push_back(static_cast<int>(i));
    if (grasping(cloud.points[i], cloud.normals[i])) a.grasping_indices.push_back(static_cast<int>(i));
  }
  a.native_scale = funcgrasp::oriented_bounding_box(cloud).max_extent();
  a.functional_fingers = std::move(fingers);
  a.axes = axes;
  funcgrasp::write_annotation(dir / (name + ".json"), a);
  std::cout << name << ": " << reloaded.triangles.size() << " triangles, " << a.functional_indices.size()
            << " functional / " << a.grasping_indices.size() << " grasping points, scale " << a.native_scale
            << "\n";
}

void build_objects(const fs::path& dir) {
  using funcgrasp::Part;
  // Functional patches sit off the main axis, which would tilt the derived
  // GF; pin both axes to the object's upright frame instead.
  const funcgrasp::ObjectAxes upright{Vec3::UnitZ(), -Vec3::UnitX()};
  // Cylinder with a button patch on the side near the top.
  {
    std::vector<std::pair<double, double>> profile{{0.0, -0.1}};
    for (int i = 0; i <= 10; ++i) profile.emplace_back(0.025, -0.1 + 0.02 * i);
    profile.emplace_back(0.0, 0.1);
    write_object(
        dir, "cylinder", "cylinder", lathe(profile, 32), 11,
        [](const Vec3& p, const Vec3& n) { return p.z() > 0.06 && p.z() < 0.09 && n.x() > 0.8; },
        [](const Vec3& p, const Vec3& n) { return p.z() > -0.08 && p.z() < 0.03 && std::abs(n.z()) < 0.5; },
        {Part::kIndex, Part::kThumb}, upright);
  }
  // Spray bottle: body, shoulder, neck and head; trigger patch on the head.
  {
    std::vector<std::pair<double, double>> profile{{0.0, 0.0}};
    for (int i = 0; i <= 7; ++i) profile.emplace_back(0.035, 0.02 * i);
    profile.emplace_back(0.015, 0.16);
    profile.emplace_back(0.015, 0.175);
    profile.emplace_back(0.022, 0.18);
    profile.emplace_back(0.022, 0.2);
    profile.emplace_back(0.022, 0.22);
    profile.emplace_back(0.0, 0.22);
    write_object(
        dir, "spray_bottle", "spray_bottle", lathe(profile, 32), 12,
        [](const Vec3& p, const Vec3& n) { return p.z() > 0.182 && p.z() < 0.218 && n.x() > 0.8; },
        [](const Vec3& p, const Vec3& n) { return p.z() > 0.02 && p.z() < 0.12 && std::abs(n.z()) < 0.5; },
        {Part::kIndex}, upright);
  }
  // Pistol drill: handle below a horizontal body, trigger on the handle front.
  {
    const std::vector<Eigen::Vector2d> poly{{-0.015, 0.0},  {0.015, 0.0},  {0.015, 0.06}, {0.015, 0.12},
                                            {0.12, 0.12},   {0.12, 0.17},  {-0.06, 0.17}, {-0.06, 0.12},
                                            {-0.015, 0.12}, {-0.015, 0.06}};
    write_object(
        dir, "drill", "drill", extrude(poly, 0.05), 13,
        [](const Vec3& p, const Vec3& n) { return p.z() > 0.085 && p.z() < 0.118 && n.x() > 0.9 && p.x() < 0.02; },
        [](const Vec3& p, const Vec3&) { return p.x() < 0.02 && p.z() > 0.005 && p.z() < 0.08; },
        {Part::kIndex}, upright);
  }
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_fixtures <data_dir>\n";
    return 1;
  }
  const fs::path root = argv[1];
  fs::create_directories(root / "hands");
  fs::create_directories(root / "objects");
  try {
    for (auto [id, five] : {std::pair{"hand16", false}, std::pair{"hand22", true}}) {
      std::ofstream(root / "hands" / (std::string(id) + ".json")) << build_hand(id, five).dump(1) << "\n";
    }
    build_objects(root / "objects");
  } catch (const std::exception& e) {
    std::cerr << "make_fixtures: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
