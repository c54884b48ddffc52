#include "funcgrasp/affordance.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "funcgrasp/mesh_io.hpp"

namespace funcgrasp {

using nlohmann::json;

namespace {

Vec3 centroid_of(const std::vector<Vec3>& pts) {
  Vec3 c = Vec3::Zero();
  for (const Vec3& p : pts) c += p;
  return c / static_cast<double>(pts.size());
}

void check_indices(const std::vector<int>& indices, std::size_t n, const std::string& name) {
  if (indices.empty()) throw ObjectLoadError(name + " is empty");
  for (int i : indices) {
    if (i < 0 || static_cast<std::size_t>(i) >= n) {
      throw ObjectLoadError(name + " contains out-of-range index " + std::to_string(i) +
                            " (surface has " + std::to_string(n) + " points)");
    }
  }
}

ObjectAxes orthonormalize(ObjectAxes axes) {
  if (axes.gf.norm() < 1e-9) throw DegenerateGeometryError("GF axis override is zero");
  axes.gf.normalize();
  axes.fa -= axes.fa.dot(axes.gf) * axes.gf;
  if (axes.fa.norm() < 1e-9) throw DegenerateGeometryError("FA axis override is parallel to GF");
  axes.fa.normalize();
  return axes;
}

}  // namespace

std::vector<Vec3> AffordanceObject::functional_points() const {
  std::vector<Vec3> out;
  out.reserve(functional_part.size());
  for (int i : functional_part) out.push_back(surface.points[i]);
  return out;
}

std::vector<Vec3> AffordanceObject::grasping_points() const {
  std::vector<Vec3> out;
  out.reserve(grasping_part.size());
  for (int i : grasping_part) out.push_back(surface.points[i]);
  return out;
}

Vec3 AffordanceObject::centroid() const { return centroid_of(surface.points); }

void CategoryScaleRange::validate() const {
  if (!(s_low > 0.0) || !(s_low < s_high)) {
    throw std::invalid_argument("scale range for '" + category + "' needs 0 < s_low < s_high");
  }
  if (n_scales < 1) throw std::invalid_argument("scale range for '" + category + "' needs n_scales >= 1");
}

Annotation read_annotation(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ObjectLoadError("cannot open annotation " + path.string());
  Annotation a;
  try {
    const json doc = json::parse(in);
    a.category = doc.at("category").get<std::string>();
    a.mesh = doc.value("mesh", std::string());
    a.seed = doc.at("seed").get<std::uint64_t>();
    a.n_points = doc.at("n_points").get<std::size_t>();
    a.native_scale = doc.value("native_scale", 0.0);
    if (doc.contains("labels")) {
      labels_to_indices(doc.at("labels").get<std::vector<int>>(), a.functional_indices,
                        a.grasping_indices);
    } else {
      a.functional_indices = doc.at("functional_indices").get<std::vector<int>>();
      a.grasping_indices = doc.at("grasping_indices").get<std::vector<int>>();
    }
    if (doc.contains("axes")) {
      const auto gf = doc.at("axes").at("gf").get<std::vector<double>>();
      const auto fa = doc.at("axes").at("fa").get<std::vector<double>>();
      if (gf.size() != 3 || fa.size() != 3) throw ObjectLoadError("axes.gf and axes.fa need 3 components");
      a.axes = ObjectAxes{Vec3(gf[0], gf[1], gf[2]), Vec3(fa[0], fa[1], fa[2])};
    }
    if (doc.contains("functional_fingers")) {
      a.functional_fingers.clear();
      for (const auto& f : doc.at("functional_fingers")) a.functional_fingers.push_back(parse_part(f.get<std::string>()));
    }
  } catch (const json::exception& e) {
    throw ObjectLoadError(path.string() + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw ObjectLoadError(path.string() + ": " + e.what());
  }
  return a;
}

void write_annotation(const std::filesystem::path& path, const Annotation& a) {
  json doc;
  doc["category"] = a.category;
  if (!a.mesh.empty()) doc["mesh"] = a.mesh;
  doc["seed"] = a.seed;
  doc["n_points"] = a.n_points;
  doc["native_scale"] = a.native_scale;
  doc["functional_indices"] = a.functional_indices;
  doc["grasping_indices"] = a.grasping_indices;
  if (a.axes) {
    doc["axes"] = {{"gf", {a.axes->gf.x(), a.axes->gf.y(), a.axes->gf.z()}},
                   {"fa", {a.axes->fa.x(), a.axes->fa.y(), a.axes->fa.z()}}};
  }
  json fingers = json::array();
  for (Part p : a.functional_fingers) fingers.push_back(to_string(p));
  doc["functional_fingers"] = fingers;
  std::ofstream out(path);
  if (!out) throw ObjectLoadError("cannot write " + path.string());
  out << doc.dump(1) << '\n';
}

void labels_to_indices(const std::vector<int>& labels, std::vector<int>& functional,
                       std::vector<int>& grasping) {
  functional.clear();
  grasping.clear();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] & kFunctionalLabel) functional.push_back(static_cast<int>(i));
    if (labels[i] & kGraspingLabel) grasping.push_back(static_cast<int>(i));
  }
}

AffordanceObject make_object(std::string id, TriangleMesh mesh, const Annotation& annotation) {
  AffordanceObject obj;
  obj.id = std::move(id);
  obj.category = annotation.category;
  obj.seed = annotation.seed;
  obj.surface = sample_surface_points(mesh, annotation.n_points, annotation.seed);
  check_indices(annotation.functional_indices, obj.surface.size(), "functional part");
  check_indices(annotation.grasping_indices, obj.surface.size(), "grasping part");
  obj.functional_part = annotation.functional_indices;
  obj.grasping_part = annotation.grasping_indices;
  obj.axes_override = annotation.axes;
  obj.functional_fingers = annotation.functional_fingers;
  if (obj.functional_fingers.empty()) throw ObjectLoadError("functional_fingers is empty");
  obj.mesh = std::move(mesh);
  obj.query = std::make_shared<const MeshQuery>(obj.mesh);
  obj.scale = oriented_bounding_box(obj.surface).max_extent();
  return obj;
}

AffordanceObject load_object(const std::filesystem::path& mesh_path,
                             const std::filesystem::path& annotation_path) {
  const Annotation annotation = read_annotation(annotation_path);
  TriangleMesh mesh;
  try {
    mesh = load_mesh(mesh_path);
  } catch (const MeshIoError& e) {
    throw ObjectLoadError(e.what());
  }
  try {
    return make_object(annotation_path.stem().string(), std::move(mesh), annotation);
  } catch (const ObjectLoadError& e) {
    throw ObjectLoadError(annotation_path.string() + ": " + e.what());
  }
}

AffordanceObject load_object(const std::filesystem::path& annotation_path) {
  const Annotation annotation = read_annotation(annotation_path);
  if (annotation.mesh.empty()) {
    throw ObjectLoadError(annotation_path.string() + ": annotation does not name a mesh");
  }
  return load_object(annotation_path.parent_path() / annotation.mesh, annotation_path);
}

AffordanceObject rescale_object(const AffordanceObject& obj, double target_scale) {
  if (!(target_scale > 0.0)) throw std::invalid_argument("target scale must be positive");
  const double factor = target_scale / obj.scale;
  const Vec3 c = obj.centroid();
  AffordanceObject out = obj;
  for (Vec3& p : out.surface.points) p = c + factor * (p - c);
  for (Vec3& v : out.mesh.vertices) v = c + factor * (v - c);
  out.query = std::make_shared<const MeshQuery>(out.mesh);
  out.scale = oriented_bounding_box(out.surface).max_extent();
  return out;
}

std::vector<double> sample_scales(const CategoryScaleRange& range) {
  range.validate();
  std::vector<double> out;
  if (range.n_scales == 1) return {range.s_low};
  const double step = (range.s_high - range.s_low) / (range.n_scales - 1);
  for (int i = 0; i < range.n_scales; ++i) out.push_back(range.s_low + step * i);
  out.back() = range.s_high;
  return out;
}

ObjectAxes object_axes(const AffordanceObject& obj) {
  if (obj.axes_override) return orthonormalize(*obj.axes_override);
  if (obj.functional_part.empty() || obj.grasping_part.empty()) {
    throw std::invalid_argument("object axes need non-empty functional and grasping parts");
  }
  const Vec3 gf = centroid_of(obj.functional_points()) - centroid_of(obj.grasping_points());
  if (gf.norm() < 1e-6) {
    throw DegenerateGeometryError("object '" + obj.id +
                                  "': functional and grasping centroids coincide; GF is undefined");
  }
  ObjectAxes axes;
  axes.gf = gf.normalized();
  Vec3 mean_normal = Vec3::Zero();
  for (int i : obj.functional_part) mean_normal += obj.surface.normals[i];
  Vec3 fa = -mean_normal;
  fa -= fa.dot(axes.gf) * axes.gf;
  if (fa.norm() < 1e-6 * std::max(1.0, mean_normal.norm())) {
    throw DegenerateGeometryError("object '" + obj.id +
                                  "': mean functional normal is parallel to GF; add an axes "
                                  "override to the annotation file");
  }
  axes.fa = fa.normalized();
  return axes;
}

}  // namespace funcgrasp
