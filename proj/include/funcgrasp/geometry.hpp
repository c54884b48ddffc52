#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace funcgrasp {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Transform = Eigen::Isometry3d;

struct PointCloud {
  std::vector<Vec3> points;
  // Either empty or the same length as points.
  std::vector<Vec3> normals;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_normals() const { return !normals.empty(); }

  // Throws std::invalid_argument when normals are present with the wrong
  // length or are not unit length within 1e-6.
  void validate() const;

  PointCloud subset(std::span<const int> indices) const;
};

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;

  bool empty() const { return triangles.empty(); }
  double triangle_area(std::size_t t) const;
  Vec3 triangle_normal(std::size_t t) const;
};

// Minimum triangle area kept by remove_degenerate_triangles (m^2).
inline constexpr double kDegenerateArea = 1e-12;

// Drops triangles with out-of-range indices or area below kDegenerateArea.
// Returns the number of triangles removed.
std::size_t remove_degenerate_triangles(TriangleMesh& mesh);

// Analytic convex shapes used as hand collision geometry. The shape is
// defined in its own local frame and placed by `pose` in the parent frame:
//   sphere   centered at the local origin
//   capsule  segment from local (0,0,0) to (0,0,length), inflated by radius
//   box      centered at the local origin with the given half extents
struct ConvexPrimitive {
  enum class Kind { kSphere, kCapsule, kBox };

  Kind kind = Kind::kSphere;
  double radius = 0.0;
  double length = 0.0;
  Vec3 half_extents = Vec3::Zero();
  Transform pose = Transform::Identity();

  static ConvexPrimitive sphere(const Vec3& center, double radius);
  // Capsule whose axis runs from a to b.
  static ConvexPrimitive capsule(const Vec3& a, const Vec3& b, double radius);
  static ConvexPrimitive box(const Transform& pose, const Vec3& half_extents);

  void validate() const;

  // Radius of a sphere around pose.translation() that encloses the shape.
  double bounding_radius() const;
};

const char* to_string(ConvexPrimitive::Kind kind);

// Signed distance and its gradient with respect to the query point, both in
// the primitive's parent frame. `branch` identifies the closest feature
// (e.g. which box face, capsule cap or side) so callers can tell when two
// queries lie on the same smooth piece of the distance function.
struct SignedDistance {
  double distance = 0.0;
  Vec3 gradient = Vec3::Zero();
  int branch = 0;
};

SignedDistance primitive_signed_distance(const ConvexPrimitive& prim, const Vec3& p);
std::vector<double> primitive_signed_distance(const ConvexPrimitive& prim,
                                              const PointCloud& points);

// Symmetric Chamfer distance: mean squared nearest-neighbour distance from P
// to Q plus the same from Q to P. Units are squared input units.
double chamfer_distance(std::span<const Vec3> p, std::span<const Vec3> q);
double chamfer_distance(const PointCloud& p, const PointCloud& q);

// Chamfer distance together with the nearest-neighbour assignment in each
// direction, which is what differentiation needs.
struct ChamferResult {
  double value = 0.0;
  std::vector<int> nearest_in_q;  // for each p
  std::vector<int> nearest_in_p;  // for each q
};
ChamferResult chamfer_with_correspondences(std::span<const Vec3> p, std::span<const Vec3> q);

struct OrientedBoundingBox {
  Vec3 center = Vec3::Zero();
  Mat3 axes = Mat3::Identity();  // columns are the box axes
  Vec3 half_extents = Vec3::Zero();

  // Largest full side length, i.e. twice the largest half extent.
  double max_extent() const { return 2.0 * half_extents.maxCoeff(); }
  bool contains(const Vec3& p, double slack = 1e-6) const;
};

// PCA box: eigenvectors of the point covariance, then min/max along them.
OrientedBoundingBox oriented_bounding_box(std::span<const Vec3> points);
OrientedBoundingBox oriented_bounding_box(const PointCloud& cloud);

// Area-uniform samples with the normal of the triangle each point lies on.
PointCloud sample_surface_points(const TriangleMesh& mesh, std::size_t n, std::uint64_t seed);

class Bvh;

// Closest point on a triangle mesh. `feature` tells which part of the
// triangle was closest; the outward normal is the angle-weighted
// pseudo-normal of that feature.
struct SurfacePoint {
  enum class Feature { kFace, kEdge, kVertex };

  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
  double distance = 0.0;
  int triangle = -1;
  Feature feature = Feature::kFace;
  // For kEdge, the unit edge direction; for kVertex, the vertex index.
  Vec3 edge_direction = Vec3::Zero();
  int vertex = -1;
};

// Immutable query structure over a mesh: BVH for closest points, pseudo
// normals, and generalized winding numbers for inside/outside.
class MeshQuery {
 public:
  explicit MeshQuery(TriangleMesh mesh);
  ~MeshQuery();
  MeshQuery(MeshQuery&&) noexcept;
  MeshQuery& operator=(MeshQuery&&) noexcept;
  MeshQuery(const MeshQuery&) = delete;
  MeshQuery& operator=(const MeshQuery&) = delete;

  const TriangleMesh& mesh() const { return mesh_; }
  // Axis-aligned bounds of the vertices; every inside point lies within.
  const Eigen::AlignedBox3d& bounds() const { return bounds_; }

  SurfacePoint closest_point(const Vec3& p) const;
  double winding_number(const Vec3& p) const;
  bool inside(const Vec3& p) const { return winding_number(p) > 0.5; }
  double signed_distance(const Vec3& p) const;
  std::vector<double> signed_distance(std::span<const Vec3> points) const;

 private:
  TriangleMesh mesh_;
  std::vector<Vec3> face_normals_;
  std::vector<Vec3> vertex_normals_;
  // Keyed by (min vertex, max vertex).
  std::vector<std::pair<std::uint64_t, Vec3>> edge_normals_;
  std::unique_ptr<Bvh> bvh_;
  Eigen::AlignedBox3d bounds_;

  Vec3 edge_normal(int a, int b) const;
};

// Free-function forms of the mesh queries. Each builds a MeshQuery, so code
// that issues many queries should hold a MeshQuery instead.
std::vector<double> mesh_signed_distance(const TriangleMesh& mesh, const PointCloud& points);
SurfacePoint nearest_surface_point(const TriangleMesh& mesh, const Vec3& p);

// Ray parity inside test (+x ray). Independent of the winding-number path.
bool ray_parity_inside(const TriangleMesh& mesh, const Vec3& p);

Mat3 skew(const Vec3& v);
// Rotation by the axis-angle vector w.
Mat3 exp_so3(const Vec3& w);
// Smallest rotation taking unit vector a onto unit vector b.
Mat3 rotation_between(const Vec3& a, const Vec3& b);

}  // namespace funcgrasp
