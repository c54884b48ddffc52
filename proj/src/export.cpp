#include "funcgrasp/export.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace funcgrasp {

namespace {

void append(TriangleMesh& dst, const TriangleMesh& src) {
  const int offset = static_cast<int>(dst.vertices.size());
  dst.vertices.insert(dst.vertices.end(), src.vertices.begin(), src.vertices.end());
  for (const auto& t : src.triangles) dst.triangles.push_back({t[0] + offset, t[1] + offset, t[2] + offset});
}

// Latitude/longitude sphere stretched along z: rings in the upper half sit
// at z = length + r cos(theta), the lower half at z = r cos(theta). With
// length 0 this is a plain sphere.
TriangleMesh capsule_mesh(double radius, double length, int segments) {
  const int half = std::max(2, segments / 2);
  TriangleMesh m;
  m.vertices.push_back({0.0, 0.0, length + radius});
  // (polar angle, z offset) per ring; the equator is doubled for a capsule.
  std::vector<std::pair<double, double>> rings;
  for (int i = 1; i <= half; ++i) rings.emplace_back(0.5 * std::numbers::pi * i / half, length);
  if (length > 0.0) rings.emplace_back(0.5 * std::numbers::pi, 0.0);
  for (int i = half + 1; i < 2 * half; ++i) rings.emplace_back(0.5 * std::numbers::pi * i / half, 0.0);
  for (const auto& [th, offset] : rings) {
    for (int k = 0; k < segments; ++k) {
      const double phi = 2.0 * std::numbers::pi * k / segments;
      m.vertices.push_back(
          {radius * std::sin(th) * std::cos(phi), radius * std::sin(th) * std::sin(phi), offset + radius * std::cos(th)});
    }
  }
  m.vertices.push_back({0.0, 0.0, -radius});
  const int n_rings = static_cast<int>(rings.size());
  const int bottom = static_cast<int>(m.vertices.size()) - 1;
  auto idx = [segments](int ring, int k) { return 1 + ring * segments + (k % segments); };
  for (int k = 0; k < segments; ++k) m.triangles.push_back({0, idx(0, k), idx(0, k + 1)});
  for (int r = 0; r + 1 < n_rings; ++r) {
    for (int k = 0; k < segments; ++k) {
      m.triangles.push_back({idx(r, k), idx(r + 1, k), idx(r + 1, k + 1)});
      m.triangles.push_back({idx(r, k), idx(r + 1, k + 1), idx(r, k + 1)});
    }
  }
  for (int k = 0; k < segments; ++k) m.triangles.push_back({bottom, idx(n_rings - 1, k + 1), idx(n_rings - 1, k)});
  return m;
}

TriangleMesh box_mesh(const Vec3& h) {
  TriangleMesh m;
  for (int i = 0; i < 8; ++i) {
    m.vertices.push_back({(i & 1) ? h.x() : -h.x(), (i & 2) ? h.y() : -h.y(), (i & 4) ? h.z() : -h.z()});
  }
  m.triangles = {{0, 2, 1}, {1, 2, 3}, {4, 5, 6}, {5, 7, 6}, {0, 1, 4}, {1, 5, 4},
                 {2, 6, 3}, {3, 6, 7}, {0, 4, 2}, {2, 4, 6}, {1, 3, 5}, {3, 7, 5}};
  return m;
}

}  // namespace

TriangleMesh tessellate(const ConvexPrimitive& prim, int segments) {
  if (segments < 3) throw std::invalid_argument("tessellation needs at least 3 segments");
  prim.validate();
  TriangleMesh m;
  switch (prim.kind) {
    case ConvexPrimitive::Kind::kSphere:
      m = capsule_mesh(prim.radius, 0.0, segments);
      break;
    case ConvexPrimitive::Kind::kCapsule:
      m = capsule_mesh(prim.radius, prim.length, segments);
      break;
    case ConvexPrimitive::Kind::kBox:
      m = box_mesh(prim.half_extents);
      break;
  }
  for (Vec3& v : m.vertices) v = prim.pose * v;
  return m;
}

Rgb part_color(Part part) {
  switch (part) {
    case Part::kPalm:
      return {200, 170, 140};
    case Part::kThumb:
      return {230, 120, 40};
    case Part::kIndex:
      return {50, 110, 220};
    case Part::kMiddle:
      return {60, 180, 200};
    case Part::kRing:
      return {150, 90, 200};
    case Part::kLittle:
      return {220, 80, 160};
  }
  return kUnlabeledColor;
}

ColoredMesh posed_hand_mesh(const HandModel& hand, const GraspConfiguration& config, int segments) {
  const FkResult fk = forward_kinematics(hand, config);
  ColoredMesh out;
  for (const PosedPrimitive& p : posed_primitives(hand, fk)) {
    const TriangleMesh m = tessellate(p.shape, segments);
    out.colors.insert(out.colors.end(), m.vertices.size(), part_color(p.part));
    append(out.mesh, m);
  }
  return out;
}

ColoredMesh object_point_cloud(const AffordanceObject& obj) {
  ColoredMesh out;
  out.mesh.vertices = obj.surface.points;
  out.colors.assign(obj.surface.size(), kUnlabeledColor);
  for (int i : obj.grasping_part) out.colors[static_cast<std::size_t>(i)] = kGraspingColor;
  for (int i : obj.functional_part) out.colors[static_cast<std::size_t>(i)] = kFunctionalColor;
  return out;
}

void export_grasp(const std::filesystem::path& dir, const HandModel& hand, const GraspConfiguration& config,
                  const AffordanceObject& obj) {
  std::filesystem::create_directories(dir);
  save_ply(dir / "object_mesh.ply", obj.mesh);
  const ColoredMesh cloud = object_point_cloud(obj);
  save_ply(dir / "object_points.ply", cloud.mesh, cloud.colors);
  const ColoredMesh h = posed_hand_mesh(hand, config);
  save_ply(dir / "hand.ply", h.mesh, h.colors);
}

}  // namespace funcgrasp
