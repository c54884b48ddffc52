#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "funcgrasp/geometry.hpp"
#include "funcgrasp/hand_model.hpp"

namespace funcgrasp {

class ObjectLoadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegenerateGeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ObjectAxes {
  Vec3 gf = Vec3::UnitZ();
  Vec3 fa = Vec3::UnitX();
};

struct AffordanceObject {
  std::string id;
  std::string category;
  TriangleMesh mesh;
  std::shared_ptr<const MeshQuery> query;  // built over `mesh`
  PointCloud surface;                      // object cloud with outward normals
  std::vector<int> functional_part;        // indices into surface
  std::vector<int> grasping_part;          // indices into surface
  double scale = 0.0;                      // OBB max extent of surface (m)
  std::uint64_t seed = 0;
  std::optional<ObjectAxes> axes_override;
  // Fingers allowed to act on the functional part.
  std::vector<Part> functional_fingers{Part::kIndex};

  std::vector<Vec3> functional_points() const;
  std::vector<Vec3> grasping_points() const;
  Vec3 centroid() const;
};

struct CategoryScaleRange {
  std::string category;
  double s_low = 0.0;
  double s_high = 0.0;
  int n_scales = 15;

  void validate() const;
};

// Annotation document fields; see docs/formats.md.
struct Annotation {
  std::string category;
  std::string mesh;  // relative to the annotation file
  std::uint64_t seed = 0;
  std::size_t n_points = 2048;
  std::vector<int> functional_indices;
  std::vector<int> grasping_indices;
  double native_scale = 0.0;
  std::optional<ObjectAxes> axes;
  std::vector<Part> functional_fingers{Part::kIndex};
};

Annotation read_annotation(const std::filesystem::path& path);
void write_annotation(const std::filesystem::path& path, const Annotation& annotation);

// Per-point label painting to canonical index sets. Bit 1 marks the
// functional part, bit 2 the grasping part.
inline constexpr int kFunctionalLabel = 1;
inline constexpr int kGraspingLabel = 2;
void labels_to_indices(const std::vector<int>& labels, std::vector<int>& functional,
                       std::vector<int>& grasping);

AffordanceObject load_object(const std::filesystem::path& mesh_path,
                             const std::filesystem::path& annotation_path);
// Reads the mesh path from the annotation.
AffordanceObject load_object(const std::filesystem::path& annotation_path);
AffordanceObject make_object(std::string id, TriangleMesh mesh, const Annotation& annotation);

AffordanceObject rescale_object(const AffordanceObject& obj, double target_scale);

std::vector<double> sample_scales(const CategoryScaleRange& range);

ObjectAxes object_axes(const AffordanceObject& obj);

}  // namespace funcgrasp
