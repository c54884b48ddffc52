#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "funcgrasp/geometry.hpp"

namespace funcgrasp {

enum class Part { kPalm, kThumb, kIndex, kMiddle, kRing, kLittle };

const char* to_string(Part part);
// Throws std::invalid_argument for unknown names.
Part parse_part(const std::string& name);

// Thrown by load_hand; the message starts with the JSON field path.
class HandLoadError : public std::runtime_error {
 public:
  HandLoadError(const std::string& field_path, const std::string& message)
      : std::runtime_error(field_path + ": " + message), field_path_(field_path) {}
  const std::string& field_path() const { return field_path_; }

 private:
  std::string field_path_;
};

struct Joint {
  std::string name;
  int parent_link = -1;
  int child_link = -1;
  Vec3 axis = Vec3::UnitZ();  // unit, in the joint frame
  Transform origin = Transform::Identity();  // joint frame in the parent link frame
  double lower = 0.0;
  double upper = 0.0;
  // Bends the finger toward the palm; these are the joints the initializer flexes.
  bool flexion = false;
};

struct Link {
  std::string name;
  Part part = Part::kPalm;
  std::vector<ConvexPrimitive> primitives;  // link frame
  PointCloud surface_points;                // link frame
};

struct Anchor {
  int link = 0;
  Vec3 position = Vec3::Zero();  // link frame
};

// Thumb Grasp-to-Functional variant: GF direction and press direction in
// the palm frame.
struct ThumbAxis {
  std::string name;
  Vec3 gf = Vec3::UnitY();
  Vec3 fa = Vec3::UnitZ();
};

struct GraspConfiguration {
  Vec3 translation = Vec3::Zero();
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
  Eigen::VectorXd joint_angles;

  static GraspConfiguration identity(int dof) {
    GraspConfiguration c;
    c.joint_angles = Eigen::VectorXd::Zero(dof);
    return c;
  }
  Transform root_pose() const;
};

// Pose of every link plus the world-frame joint axes and origins, which is
// everything the point Jacobians need.
struct FkResult {
  Transform root = Transform::Identity();
  std::vector<Transform> link_poses;
  std::vector<Vec3> joint_axes;
  std::vector<Vec3> joint_origins;
};

class HandModel {
 public:
  std::string id;
  std::vector<Link> links;
  // Topologically sorted: a joint's parent link is the root or the child of
  // an earlier joint.
  std::vector<Joint> joints;
  std::map<Part, std::vector<Anchor>> functional_anchors;
  std::vector<Anchor> grasping_anchors;
  Vec3 grasp_center = Vec3::Zero();  // palm frame
  std::map<Part, Vec3> press_directions;  // palm frame
  std::array<ThumbAxis, 3> thumb_axes;

  int root_link() const { return root_link_; }
  int dof() const { return static_cast<int>(joints.size()); }
  // 6 + dof: translation, rotation increment, joint angles.
  int tangent_dim() const { return 6 + dof(); }

  // Joints between the root and the link, root first.
  const std::vector<int>& ancestor_joints(int link) const { return ancestors_[link]; }
  int link_index(const std::string& name) const;

  std::vector<Part> parts() const;
  std::vector<int> links_of_part(Part part) const;

  // Rebuilds root/ancestor tables and validates structure; load_hand calls it.
  void finalize();

  void check_config(const GraspConfiguration& config) const;
  void project_to_limits(GraspConfiguration& config) const;
  bool within_limits(const GraspConfiguration& config, double slack = 0.0) const;

  // Flattened link surface clouds in link order together with the owning link.
  std::size_t surface_point_count() const { return surface_links_.size(); }
  const std::vector<int>& surface_point_links() const { return surface_links_; }
  const std::vector<Vec3>& surface_points_local() const { return surface_local_; }

 private:
  int root_link_ = 0;
  std::vector<std::vector<int>> ancestors_;
  std::vector<int> surface_links_;
  std::vector<Vec3> surface_local_;
};

HandModel load_hand(const std::filesystem::path& path);
HandModel parse_hand(const std::string& json_text);

FkResult forward_kinematics(const HandModel& hand, const GraspConfiguration& config);

PointCloud hand_surface_points(const HandModel& hand, const GraspConfiguration& config);
std::vector<Vec3> hand_surface_points(const HandModel& hand, const FkResult& fk);

// A link primitive moved into the world frame.
struct PosedPrimitive {
  ConvexPrimitive shape;
  int link = 0;
  Part part = Part::kPalm;
  double bound = 0.0;  // enclosing sphere radius around shape.pose.translation()
};

std::vector<PosedPrimitive> posed_primitives(const HandModel& hand, const FkResult& fk);

// Which anchor set to place: the functional anchors of one finger, or the
// grasping set.
struct AnchorSet {
  enum class Kind { kFunctional, kGrasping };
  Kind kind = Kind::kGrasping;
  Part finger = Part::kIndex;

  static AnchorSet functional(Part finger) { return {Kind::kFunctional, finger}; }
  static AnchorSet grasping() { return {Kind::kGrasping, Part::kPalm}; }
};

const std::vector<Anchor>& anchors(const HandModel& hand, AnchorSet set);
PointCloud anchor_positions(const HandModel& hand, const GraspConfiguration& config, AnchorSet set);
std::vector<Vec3> anchor_positions(const std::vector<Anchor>& anchors, const FkResult& fk);

struct HandAxes {
  Vec3 gf = Vec3::UnitY();
  Vec3 fa = Vec3::UnitZ();
};

// thumb_variant is 1-based and must be given exactly when finger is the thumb.
HandAxes hand_axes(const HandModel& hand, const GraspConfiguration& config, Part finger,
                   std::optional<int> thumb_variant);

// Adds dL/dx (for a point x rigidly attached to `link`) into the gradient
// over the tangent parameters (translation, world rotation increment,
// joint angles).
void accumulate_point_gradient(const HandModel& hand, const FkResult& fk, int link,
                               const Vec3& x, const Vec3& dl_dx, Eigen::VectorXd& grad);

// 3 x tangent_dim Jacobian of a point attached to `link`.
Eigen::Matrix<double, 3, Eigen::Dynamic> point_jacobian(const HandModel& hand, const FkResult& fk,
                                                        int link, const Vec3& x);

// Applies a tangent-space step: translation += d[0:3], rotation <-
// exp(d[3:6]) * rotation, joints += d[6:].
GraspConfiguration retract(const GraspConfiguration& config, const Eigen::VectorXd& delta);

}  // namespace funcgrasp
