#include "funcgrasp/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Eigenvalues>

namespace funcgrasp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_non_empty(std::size_t n, const char* what) {
  if (n == 0) {
    throw std::invalid_argument(std::string(what) + " must not be empty");
  }
}

std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

// Region codes returned by closest_on_triangle.
enum Region { kRegionFace = 0, kEdgeAB, kEdgeBC, kEdgeCA, kVertA, kVertB, kVertC };

// Ericson, Real-Time Collision Detection, 5.1.5.
Vec3 closest_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c,
                         int& region) {
  const Vec3 ab = b - a;
  const Vec3 ac = c - a;
  const Vec3 ap = p - a;
  const double d1 = ab.dot(ap);
  const double d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) {
    region = kVertA;
    return a;
  }
  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp);
  const double d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) {
    region = kVertB;
    return b;
  }
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    region = kEdgeAB;
    return a + (d1 / (d1 - d3)) * ab;
  }
  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp);
  const double d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) {
    region = kVertC;
    return c;
  }
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    region = kEdgeCA;
    return a + (d2 / (d2 - d6)) * ac;
  }
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    region = kEdgeBC;
    return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
  }
  const double denom = 1.0 / (va + vb + vc);
  region = kRegionFace;
  return a + ab * (vb * denom) + ac * (vc * denom);
}

}  // namespace

void PointCloud::validate() const {
  if (normals.empty()) return;
  if (normals.size() != points.size()) {
    throw std::invalid_argument("point cloud normals length " + std::to_string(normals.size()) +
                                " does not match points length " +
                                std::to_string(points.size()));
  }
  for (std::size_t i = 0; i < normals.size(); ++i) {
    if (std::abs(normals[i].norm() - 1.0) > 1e-6) {
      throw std::invalid_argument("normal " + std::to_string(i) + " is not unit length");
    }
  }
}

PointCloud PointCloud::subset(std::span<const int> indices) const {
  PointCloud out;
  out.points.reserve(indices.size());
  for (int i : indices) out.points.push_back(points.at(static_cast<std::size_t>(i)));
  if (has_normals()) {
    out.normals.reserve(indices.size());
    for (int i : indices) out.normals.push_back(normals.at(static_cast<std::size_t>(i)));
  }
  return out;
}

double TriangleMesh::triangle_area(std::size_t t) const {
  const auto& tri = triangles[t];
  const Vec3& a = vertices[tri[0]];
  const Vec3& b = vertices[tri[1]];
  const Vec3& c = vertices[tri[2]];
  return 0.5 * (b - a).cross(c - a).norm();
}

Vec3 TriangleMesh::triangle_normal(std::size_t t) const {
  const auto& tri = triangles[t];
  const Vec3& a = vertices[tri[0]];
  const Vec3& b = vertices[tri[1]];
  const Vec3& c = vertices[tri[2]];
  return (b - a).cross(c - a).normalized();
}

std::size_t remove_degenerate_triangles(TriangleMesh& mesh) {
  const int nv = static_cast<int>(mesh.vertices.size());
  std::vector<std::array<int, 3>> kept;
  kept.reserve(mesh.triangles.size());
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    const bool in_range = std::all_of(tri.begin(), tri.end(), [nv](int i) { return i >= 0 && i < nv; });
    if (in_range && mesh.triangle_area(t) >= kDegenerateArea) kept.push_back(tri);
  }
  const std::size_t removed = mesh.triangles.size() - kept.size();
  mesh.triangles = std::move(kept);
  return removed;
}

// ---------------------------------------------------------------------------
// Convex primitives

ConvexPrimitive ConvexPrimitive::sphere(const Vec3& center, double radius) {
  ConvexPrimitive p;
  p.kind = Kind::kSphere;
  p.radius = radius;
  p.pose.translation() = center;
  return p;
}

ConvexPrimitive ConvexPrimitive::capsule(const Vec3& a, const Vec3& b, double radius) {
  ConvexPrimitive p;
  p.kind = Kind::kCapsule;
  p.radius = radius;
  const Vec3 axis = b - a;
  p.length = axis.norm();
  p.pose.translation() = a;
  if (p.length > 0.0) p.pose.linear() = rotation_between(Vec3::UnitZ(), axis / p.length);
  return p;
}

ConvexPrimitive ConvexPrimitive::box(const Transform& pose, const Vec3& half_extents) {
  ConvexPrimitive p;
  p.kind = Kind::kBox;
  p.half_extents = half_extents;
  p.pose = pose;
  return p;
}

void ConvexPrimitive::validate() const {
  switch (kind) {
    case Kind::kSphere:
      if (!(radius > 0.0)) throw std::invalid_argument("sphere radius must be positive");
      break;
    case Kind::kCapsule:
      if (!(radius > 0.0) || !(length > 0.0)) {
        throw std::invalid_argument("capsule radius and length must be positive");
      }
      break;
    case Kind::kBox:
      if (!(half_extents.minCoeff() > 0.0)) {
        throw std::invalid_argument("box half extents must be positive");
      }
      break;
  }
}

double ConvexPrimitive::bounding_radius() const {
  switch (kind) {
    case Kind::kSphere: return radius;
    case Kind::kCapsule: return length + radius;
    case Kind::kBox: return half_extents.norm();
  }
  return 0.0;
}

const char* to_string(ConvexPrimitive::Kind kind) {
  switch (kind) {
    case ConvexPrimitive::Kind::kSphere: return "sphere";
    case ConvexPrimitive::Kind::kCapsule: return "capsule";
    case ConvexPrimitive::Kind::kBox: return "box";
  }
  return "unknown";
}

SignedDistance primitive_signed_distance(const ConvexPrimitive& prim, const Vec3& p) {
  SignedDistance out;
  const Mat3 rot = prim.pose.linear();
  const Vec3 local = rot.transpose() * (p - prim.pose.translation());
  switch (prim.kind) {
    case ConvexPrimitive::Kind::kSphere: {
      const double n = local.norm();
      out.distance = n - prim.radius;
      out.gradient = n > 0.0 ? Vec3(local / n) : Vec3::UnitZ();
      break;
    }
    case ConvexPrimitive::Kind::kCapsule: {
      double t = local.z();
      if (t <= 0.0) {
        t = 0.0;
        out.branch = 0;
      } else if (t >= prim.length) {
        t = prim.length;
        out.branch = 2;
      } else {
        out.branch = 1;
      }
      const Vec3 v = local - Vec3(0.0, 0.0, t);
      const double n = v.norm();
      out.distance = n - prim.radius;
      out.gradient = n > 0.0 ? Vec3(v / n) : Vec3::UnitX();
      break;
    }
    case ConvexPrimitive::Kind::kBox: {
      const Vec3 d = local.cwiseAbs() - prim.half_extents;
      const Vec3 sign = local.unaryExpr([](double x) { return x < 0.0 ? -1.0 : 1.0; });
      if (d.maxCoeff() > 0.0) {
        const Vec3 pos = d.cwiseMax(0.0);
        const double n = pos.norm();
        out.distance = n;
        out.gradient = sign.cwiseProduct(pos) / n;
        int code = 0;
        for (int k = 0; k < 3; ++k) {
          code = code * 3 + (pos[k] > 0.0 ? (sign[k] > 0 ? 2 : 1) : 0);
        }
        out.branch = 100 + code;
      } else {
        int axis = 0;
        d.maxCoeff(&axis);
        out.distance = d[axis];
        out.gradient = Vec3::Zero();
        out.gradient[axis] = sign[axis];
        out.branch = axis * 2 + (sign[axis] > 0 ? 1 : 0);
      }
      break;
    }
  }
  out.gradient = rot * out.gradient;
  return out;
}

std::vector<double> primitive_signed_distance(const ConvexPrimitive& prim,
                                              const PointCloud& points) {
  prim.validate();
  std::vector<double> out;
  out.reserve(points.size());
  for (const Vec3& p : points.points) out.push_back(primitive_signed_distance(prim, p).distance);
  return out;
}

// ---------------------------------------------------------------------------
// Chamfer distance

ChamferResult chamfer_with_correspondences(std::span<const Vec3> p, std::span<const Vec3> q) {
  require_non_empty(p.size(), "chamfer input P");
  require_non_empty(q.size(), "chamfer input Q");
  ChamferResult out;
  out.nearest_in_q.assign(p.size(), 0);
  out.nearest_in_p.assign(q.size(), 0);
  std::vector<double> best_q(q.size(), kInf);
  double sum_p = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    double best = kInf;
    int arg = 0;
    for (std::size_t j = 0; j < q.size(); ++j) {
      const double d = (p[i] - q[j]).squaredNorm();
      if (d < best) {
        best = d;
        arg = static_cast<int>(j);
      }
      if (d < best_q[j]) {
        best_q[j] = d;
        out.nearest_in_p[j] = static_cast<int>(i);
      }
    }
    out.nearest_in_q[i] = arg;
    sum_p += best;
  }
  double sum_q = 0.0;
  for (double d : best_q) sum_q += d;
  out.value = sum_p / static_cast<double>(p.size()) + sum_q / static_cast<double>(q.size());
  return out;
}

double chamfer_distance(std::span<const Vec3> p, std::span<const Vec3> q) {
  return chamfer_with_correspondences(p, q).value;
}

double chamfer_distance(const PointCloud& p, const PointCloud& q) {
  return chamfer_distance(std::span<const Vec3>(p.points), std::span<const Vec3>(q.points));
}

// ---------------------------------------------------------------------------
// Oriented bounding box

bool OrientedBoundingBox::contains(const Vec3& p, double slack) const {
  const Vec3 local = axes.transpose() * (p - center);
  return (local.cwiseAbs() - half_extents).maxCoeff() <= slack;
}

OrientedBoundingBox oriented_bounding_box(std::span<const Vec3> points) {
  require_non_empty(points.size(), "bounding box input");
  Vec3 mean = Vec3::Zero();
  for (const Vec3& p : points) mean += p;
  mean /= static_cast<double>(points.size());
  Mat3 cov = Mat3::Zero();
  for (const Vec3& p : points) {
    const Vec3 d = p - mean;
    cov += d * d.transpose();
  }
  cov /= static_cast<double>(points.size());

  OrientedBoundingBox box;
  Eigen::SelfAdjointEigenSolver<Mat3> solver(cov);
  box.axes = solver.eigenvectors();
  box.axes.col(2) = box.axes.col(0).cross(box.axes.col(1));

  Vec3 lo = Vec3::Constant(kInf);
  Vec3 hi = Vec3::Constant(-kInf);
  for (const Vec3& p : points) {
    const Vec3 local = box.axes.transpose() * (p - mean);
    lo = lo.cwiseMin(local);
    hi = hi.cwiseMax(local);
  }
  box.half_extents = 0.5 * (hi - lo);
  box.center = mean + box.axes * (0.5 * (hi + lo));
  return box;
}

OrientedBoundingBox oriented_bounding_box(const PointCloud& cloud) {
  return oriented_bounding_box(std::span<const Vec3>(cloud.points));
}

// ---------------------------------------------------------------------------
// Surface sampling

PointCloud sample_surface_points(const TriangleMesh& mesh, std::size_t n, std::uint64_t seed) {
  require_non_empty(mesh.triangles.size(), "mesh");
  if (n == 0) throw std::invalid_argument("sample count must be at least 1");
  std::vector<double> cumulative(mesh.triangles.size());
  double total = 0.0;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    total += mesh.triangle_area(t);
    cumulative[t] = total;
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  PointCloud out;
  out.points.reserve(n);
  out.normals.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double pick = uniform(rng) * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), pick);
    if (it == cumulative.end()) --it;
    const auto t = static_cast<std::size_t>(it - cumulative.begin());
    const double r1 = std::sqrt(uniform(rng));
    const double r2 = uniform(rng);
    const auto& tri = mesh.triangles[t];
    const Vec3& a = mesh.vertices[tri[0]];
    const Vec3& b = mesh.vertices[tri[1]];
    const Vec3& c = mesh.vertices[tri[2]];
    out.points.push_back((1.0 - r1) * a + r1 * (1.0 - r2) * b + r1 * r2 * c);
    out.normals.push_back(mesh.triangle_normal(t));
  }
  return out;
}

// ---------------------------------------------------------------------------
// BVH over triangles

class Bvh {
 public:
  struct Node {
    Eigen::AlignedBox3d box;
    int left = -1;
    int right = -1;
    int first = 0;
    int count = 0;
  };

  explicit Bvh(const TriangleMesh& mesh) {
    order_.resize(mesh.triangles.size());
    centroids_.resize(mesh.triangles.size());
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
      order_[t] = static_cast<int>(t);
      const auto& tri = mesh.triangles[t];
      centroids_[t] = (mesh.vertices[tri[0]] + mesh.vertices[tri[1]] + mesh.vertices[tri[2]]) / 3.0;
    }
    nodes_.reserve(2 * mesh.triangles.size());
    build(mesh, 0, static_cast<int>(order_.size()));
  }

  // Closest point over all triangles; ties resolved toward the lowest
  // triangle index so the answer does not depend on traversal order.
  SurfacePoint closest(const TriangleMesh& mesh_, const Vec3& p, int& region_out) const {
    double best = kInf;
    int best_tri = -1;
    int best_region = kRegionFace;
    Vec3 best_point = Vec3::Zero();
    int stack[128];
    int top = 0;
    stack[top++] = 0;
    while (top > 0) {
      const Node& node = nodes_[stack[--top]];
      if (node.box.squaredExteriorDistance(p) > best) continue;
      if (node.count > 0) {
        for (int k = node.first; k < node.first + node.count; ++k) {
          const int t = order_[k];
          const auto& tri = mesh_.triangles[t];
          int region = 0;
          const Vec3 c = closest_on_triangle(p, mesh_.vertices[tri[0]], mesh_.vertices[tri[1]],
                                             mesh_.vertices[tri[2]], region);
          const double d = (c - p).squaredNorm();
          if (d < best || (d == best && t < best_tri)) {
            best = d;
            best_tri = t;
            best_region = region;
            best_point = c;
          }
        }
        continue;
      }
      const double dl = nodes_[node.left].box.squaredExteriorDistance(p);
      const double dr = nodes_[node.right].box.squaredExteriorDistance(p);
      if (dl <= dr) {
        stack[top++] = node.right;
        stack[top++] = node.left;
      } else {
        stack[top++] = node.left;
        stack[top++] = node.right;
      }
    }
    SurfacePoint out;
    out.point = best_point;
    out.distance = std::sqrt(best);
    out.triangle = best_tri;
    region_out = best_region;
    return out;
  }

 private:
  std::vector<int> order_;
  std::vector<Vec3> centroids_;
  std::vector<Node> nodes_;

  int build(const TriangleMesh& mesh_, int first, int count) {
    const int index = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    Eigen::AlignedBox3d box;
    Eigen::AlignedBox3d centroid_box;
    for (int k = first; k < first + count; ++k) {
      const auto& tri = mesh_.triangles[order_[k]];
      for (int v : tri) box.extend(mesh_.vertices[v]);
      centroid_box.extend(centroids_[order_[k]]);
    }
    nodes_[index].box = box;
    if (count <= 4) {
      nodes_[index].first = first;
      nodes_[index].count = count;
      return index;
    }
    int axis = 0;
    centroid_box.sizes().maxCoeff(&axis);
    const int mid = first + count / 2;
    std::nth_element(order_.begin() + first, order_.begin() + mid, order_.begin() + first + count,
                     [&](int a, int b) {
                       const double ca = centroids_[a][axis];
                       const double cb = centroids_[b][axis];
                       return ca < cb || (ca == cb && a < b);
                     });
    const int left = build(mesh_, first, mid - first);
    const int right = build(mesh_, mid, first + count - mid);
    nodes_[index].left = left;
    nodes_[index].right = right;
    return index;
  }
};

// ---------------------------------------------------------------------------
// Mesh queries

MeshQuery::MeshQuery(TriangleMesh mesh) : mesh_(std::move(mesh)) {
  require_non_empty(mesh_.triangles.size(), "mesh");
  const std::size_t nt = mesh_.triangles.size();
  face_normals_.resize(nt);
  vertex_normals_.assign(mesh_.vertices.size(), Vec3::Zero());
  edge_normals_.reserve(3 * nt);
  for (std::size_t t = 0; t < nt; ++t) {
    const auto& tri = mesh_.triangles[t];
    const Vec3 n = mesh_.triangle_normal(t);
    face_normals_[t] = n;
    for (int k = 0; k < 3; ++k) {
      const int i = tri[k];
      const Vec3 e1 = (mesh_.vertices[tri[(k + 1) % 3]] - mesh_.vertices[i]).normalized();
      const Vec3 e2 = (mesh_.vertices[tri[(k + 2) % 3]] - mesh_.vertices[i]).normalized();
      const double angle = std::acos(std::clamp(e1.dot(e2), -1.0, 1.0));
      vertex_normals_[i] += angle * n;
      edge_normals_.emplace_back(edge_key(tri[k], tri[(k + 1) % 3]), n);
    }
  }
  for (Vec3& n : vertex_normals_) {
    if (n.squaredNorm() > 0.0) n.normalize();
  }
  std::sort(edge_normals_.begin(), edge_normals_.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::pair<std::uint64_t, Vec3>> merged;
  for (const auto& [key, n] : edge_normals_) {
    if (!merged.empty() && merged.back().first == key) {
      merged.back().second += n;
    } else {
      merged.emplace_back(key, n);
    }
  }
  for (auto& [key, n] : merged) {
    if (n.squaredNorm() > 0.0) n.normalize();
  }
  edge_normals_ = std::move(merged);
  bvh_ = std::make_unique<Bvh>(mesh_);
  for (const Vec3& v : mesh_.vertices) bounds_.extend(v);
}

MeshQuery::~MeshQuery() = default;
MeshQuery::MeshQuery(MeshQuery&& other) noexcept = default;
MeshQuery& MeshQuery::operator=(MeshQuery&& other) noexcept = default;

Vec3 MeshQuery::edge_normal(int a, int b) const {
  const std::uint64_t key = edge_key(a, b);
  auto it = std::lower_bound(edge_normals_.begin(), edge_normals_.end(), key,
                             [](const auto& e, std::uint64_t k) { return e.first < k; });
  if (it == edge_normals_.end() || it->first != key) return Vec3::Zero();
  return it->second;
}

SurfacePoint MeshQuery::closest_point(const Vec3& p) const {
  int region = 0;
  SurfacePoint out = bvh_->closest(mesh_, p, region);
  const auto& tri = mesh_.triangles[out.triangle];
  auto set_edge = [&](int a, int b) {
    out.feature = SurfacePoint::Feature::kEdge;
    out.normal = edge_normal(a, b);
    out.edge_direction = (mesh_.vertices[b] - mesh_.vertices[a]).normalized();
  };
  auto set_vertex = [&](int v) {
    out.feature = SurfacePoint::Feature::kVertex;
    out.normal = vertex_normals_[v];
    out.vertex = v;
  };
  switch (region) {
    case kEdgeAB: set_edge(tri[0], tri[1]); break;
    case kEdgeBC: set_edge(tri[1], tri[2]); break;
    case kEdgeCA: set_edge(tri[2], tri[0]); break;
    case kVertA: set_vertex(tri[0]); break;
    case kVertB: set_vertex(tri[1]); break;
    case kVertC: set_vertex(tri[2]); break;
    default:
      out.feature = SurfacePoint::Feature::kFace;
      out.normal = face_normals_[out.triangle];
      break;
  }
  if (out.normal.squaredNorm() == 0.0) out.normal = face_normals_[out.triangle];
  return out;
}

double MeshQuery::winding_number(const Vec3& p) const {
  // Van Oosterom and Strackee solid angle per triangle.
  double total = 0.0;
  for (const auto& tri : mesh_.triangles) {
    const Vec3 a = mesh_.vertices[tri[0]] - p;
    const Vec3 b = mesh_.vertices[tri[1]] - p;
    const Vec3 c = mesh_.vertices[tri[2]] - p;
    const double la = a.norm();
    const double lb = b.norm();
    const double lc = c.norm();
    const double num = a.dot(b.cross(c));
    const double den = la * lb * lc + a.dot(b) * lc + a.dot(c) * lb + b.dot(c) * la;
    total += 2.0 * std::atan2(num, den);
  }
  return total / (4.0 * std::numbers::pi);
}

double MeshQuery::signed_distance(const Vec3& p) const {
  const double d = closest_point(p).distance;
  if (d == 0.0) return 0.0;
  return inside(p) ? -d : d;
}

std::vector<double> MeshQuery::signed_distance(std::span<const Vec3> points) const {
  std::vector<double> out;
  out.reserve(points.size());
  for (const Vec3& p : points) out.push_back(signed_distance(p));
  return out;
}

std::vector<double> mesh_signed_distance(const TriangleMesh& mesh, const PointCloud& points) {
  require_non_empty(mesh.triangles.size(), "mesh");
  const MeshQuery query(mesh);
  return query.signed_distance(std::span<const Vec3>(points.points));
}

SurfacePoint nearest_surface_point(const TriangleMesh& mesh, const Vec3& p) {
  const MeshQuery query(mesh);
  return query.closest_point(p);
}

bool ray_parity_inside(const TriangleMesh& mesh, const Vec3& p) {
  const Vec3 dir = Vec3(1.0, 1e-3 * std::numbers::sqrt2, 1e-3 * std::numbers::sqrt3).normalized();
  int crossings = 0;
  for (const auto& tri : mesh.triangles) {
    // Moller-Trumbore.
    const Vec3& v0 = mesh.vertices[tri[0]];
    const Vec3 e1 = mesh.vertices[tri[1]] - v0;
    const Vec3 e2 = mesh.vertices[tri[2]] - v0;
    const Vec3 h = dir.cross(e2);
    const double det = e1.dot(h);
    if (std::abs(det) < 1e-300) continue;
    const double inv = 1.0 / det;
    const Vec3 s = p - v0;
    const double u = inv * s.dot(h);
    if (u < 0.0 || u > 1.0) continue;
    const Vec3 q = s.cross(e1);
    const double v = inv * dir.dot(q);
    if (v < 0.0 || u + v > 1.0) continue;
    if (inv * e2.dot(q) > 0.0) ++crossings;
  }
  return (crossings % 2) == 1;
}

// ---------------------------------------------------------------------------
// Rotations

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

Mat3 exp_so3(const Vec3& w) {
  const double theta = w.norm();
  if (theta < 1e-12) return Mat3::Identity() + skew(w);
  return Eigen::AngleAxisd(theta, w / theta).toRotationMatrix();
}

Mat3 rotation_between(const Vec3& a, const Vec3& b) {
  return Eigen::Quaterniond::FromTwoVectors(a, b).toRotationMatrix();
}

}  // namespace funcgrasp
