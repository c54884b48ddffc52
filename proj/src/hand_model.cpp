#include "funcgrasp/hand_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace funcgrasp {

using nlohmann::json;

namespace {

const std::array<std::pair<Part, const char*>, 6> kPartNames = {{
    {Part::kPalm, "palm"},
    {Part::kThumb, "thumb"},
    {Part::kIndex, "index"},
    {Part::kMiddle, "middle"},
    {Part::kRing, "ring"},
    {Part::kLittle, "little"},
}};

// JSON helpers that report the offending field path.
const json& field(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object() || !obj.contains(key)) throw HandLoadError(path + "." + key, "missing field");
  return obj.at(key);
}

double number(const json& v, const std::string& path) {
  if (!v.is_number()) throw HandLoadError(path, "expected a number");
  return v.get<double>();
}

Vec3 vec3(const json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 3) throw HandLoadError(path, "expected an array of 3 numbers");
  return {number(v[0], path + "[0]"), number(v[1], path + "[1]"), number(v[2], path + "[2]")};
}

Vec3 unit_vec3(const json& v, const std::string& path) {
  const Vec3 a = vec3(v, path);
  if (a.norm() < 1e-9) throw HandLoadError(path, "direction must be non-zero");
  return a.normalized();
}

Mat3 rpy_matrix(const Vec3& rpy) {
  return (Eigen::AngleAxisd(rpy.z(), Vec3::UnitZ()) * Eigen::AngleAxisd(rpy.y(), Vec3::UnitY()) *
          Eigen::AngleAxisd(rpy.x(), Vec3::UnitX()))
      .toRotationMatrix();
}

Transform parse_origin(const json& obj, const std::string& path) {
  Transform t = Transform::Identity();
  if (obj.contains("xyz")) t.translation() = vec3(obj.at("xyz"), path + ".xyz");
  if (obj.contains("rpy")) t.linear() = rpy_matrix(vec3(obj.at("rpy"), path + ".rpy"));
  return t;
}

ConvexPrimitive parse_primitive(const json& obj, const std::string& path) {
  const std::string type = field(obj, "type", path).get<std::string>();
  ConvexPrimitive prim;
  if (type == "sphere") {
    prim = ConvexPrimitive::sphere(vec3(field(obj, "center", path), path + ".center"),
                                   number(field(obj, "radius", path), path + ".radius"));
  } else if (type == "capsule") {
    prim = ConvexPrimitive::capsule(vec3(field(obj, "a", path), path + ".a"),
                                    vec3(field(obj, "b", path), path + ".b"),
                                    number(field(obj, "radius", path), path + ".radius"));
  } else if (type == "box") {
    Transform pose = Transform::Identity();
    pose.translation() = vec3(field(obj, "center", path), path + ".center");
    if (obj.contains("rpy")) pose.linear() = rpy_matrix(vec3(obj.at("rpy"), path + ".rpy"));
    prim = ConvexPrimitive::box(pose, vec3(field(obj, "half_extents", path), path + ".half_extents"));
  } else {
    throw HandLoadError(path + ".type", "unknown primitive type '" + type + "'");
  }
  try {
    prim.validate();
  } catch (const std::invalid_argument& e) {
    throw HandLoadError(path, e.what());
  }
  return prim;
}

Anchor parse_anchor(const HandModel& hand, const json& obj, const std::string& path) {
  Anchor a;
  const std::string link = field(obj, "link", path).get<std::string>();
  a.link = hand.link_index(link);
  if (a.link < 0) throw HandLoadError(path + ".link", "unknown link '" + link + "'");
  a.position = vec3(field(obj, "position", path), path + ".position");
  return a;
}

}  // namespace

const char* to_string(Part part) {
  for (const auto& [p, name] : kPartNames) {
    if (p == part) return name;
  }
  return "unknown";
}

Part parse_part(const std::string& name) {
  for (const auto& [p, n] : kPartNames) {
    if (name == n) return p;
  }
  throw std::invalid_argument("unknown hand part '" + name + "'");
}

Transform GraspConfiguration::root_pose() const {
  Transform t = Transform::Identity();
  t.linear() = rotation.normalized().toRotationMatrix();
  t.translation() = translation;
  return t;
}

int HandModel::link_index(const std::string& name) const {
  for (std::size_t i = 0; i < links.size(); ++i) {
    if (links[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

std::vector<Part> HandModel::parts() const {
  std::vector<Part> out;
  for (const Link& l : links) {
    if (std::find(out.begin(), out.end(), l.part) == out.end()) out.push_back(l.part);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> HandModel::links_of_part(Part part) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < links.size(); ++i) {
    if (links[i].part == part) out.push_back(static_cast<int>(i));
  }
  return out;
}

void HandModel::finalize() {
  const int n = static_cast<int>(links.size());
  if (n == 0) throw HandLoadError("links", "hand has no links");
  std::vector<int> parent_joint(n, -1);
  for (std::size_t j = 0; j < joints.size(); ++j) {
    const Joint& joint = joints[j];
    const std::string path = "joints[" + std::to_string(j) + "]";
    if (joint.parent_link < 0 || joint.parent_link >= n || joint.child_link < 0 ||
        joint.child_link >= n) {
      throw HandLoadError(path, "joint '" + joint.name + "' references a missing link");
    }
    if (joint.parent_link == joint.child_link) {
      throw HandLoadError(path, "joint '" + joint.name + "' connects a link to itself (cycle)");
    }
    if (parent_joint[joint.child_link] >= 0) {
      throw HandLoadError(path, "link '" + links[joint.child_link].name +
                                    "' has more than one parent joint (cycle)");
    }
    parent_joint[joint.child_link] = static_cast<int>(j);
  }
  std::vector<int> roots;
  for (int i = 0; i < n; ++i) {
    if (parent_joint[i] < 0) roots.push_back(i);
  }
  if (roots.size() != 1) {
    throw HandLoadError("joints", "joint graph must be a tree with one root; found " +
                                      std::to_string(roots.size()) + " roots (cycle)");
  }
  root_link_ = roots.front();
  if (links[root_link_].part != Part::kPalm) {
    throw HandLoadError("links", "root link '" + links[root_link_].name + "' must be the palm");
  }

  // Breadth-first order from the root; links never reached sit on a cycle.
  std::vector<int> order;
  std::vector<char> seen(n, 0);
  std::vector<int> queue{root_link_};
  seen[root_link_] = 1;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const int link = queue[head];
    for (std::size_t j = 0; j < joints.size(); ++j) {
      if (joints[j].parent_link == link && !seen[joints[j].child_link]) {
        seen[joints[j].child_link] = 1;
        order.push_back(static_cast<int>(j));
        queue.push_back(joints[j].child_link);
      }
    }
  }
  if (static_cast<int>(queue.size()) != n) {
    throw HandLoadError("joints", "joint graph contains a cycle");
  }
  std::vector<Joint> sorted;
  sorted.reserve(joints.size());
  for (int j : order) sorted.push_back(joints[j]);
  joints = std::move(sorted);

  ancestors_.assign(n, {});
  for (std::size_t j = 0; j < joints.size(); ++j) {
    auto chain = ancestors_[joints[j].parent_link];
    chain.push_back(static_cast<int>(j));
    ancestors_[joints[j].child_link] = std::move(chain);
  }

  surface_links_.clear();
  surface_local_.clear();
  for (int i = 0; i < n; ++i) {
    for (const Vec3& p : links[i].surface_points.points) {
      surface_links_.push_back(i);
      surface_local_.push_back(p);
    }
  }
}

void HandModel::check_config(const GraspConfiguration& config) const {
  if (config.joint_angles.size() != dof()) {
    throw std::invalid_argument("configuration has " + std::to_string(config.joint_angles.size()) +
                                " joint angles, hand '" + id + "' has " + std::to_string(dof()));
  }
}

void HandModel::project_to_limits(GraspConfiguration& config) const {
  check_config(config);
  for (int j = 0; j < dof(); ++j) {
    config.joint_angles[j] = std::clamp(config.joint_angles[j], joints[j].lower, joints[j].upper);
  }
}

bool HandModel::within_limits(const GraspConfiguration& config, double slack) const {
  for (int j = 0; j < dof(); ++j) {
    if (config.joint_angles[j] < joints[j].lower - slack ||
        config.joint_angles[j] > joints[j].upper + slack) {
      return false;
    }
  }
  return true;
}

namespace {

HandModel parse_hand_document(const json& doc) {
  HandModel hand;
  hand.id = field(doc, "id", "$").get<std::string>();

  const json& links = field(doc, "links", "$");
  if (!links.is_array() || links.empty()) throw HandLoadError("links", "expected a non-empty array");
  for (std::size_t i = 0; i < links.size(); ++i) {
    const std::string path = "links[" + std::to_string(i) + "]";
    const json& obj = links[i];
    Link link;
    link.name = field(obj, "name", path).get<std::string>();
    if (hand.link_index(link.name) >= 0) {
      throw HandLoadError(path + ".name", "duplicate link name '" + link.name + "'");
    }
    try {
      link.part = parse_part(field(obj, "part", path).get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw HandLoadError(path + ".part", e.what());
    }
    const json& prims = field(obj, "primitives", path);
    if (!prims.is_array() || prims.empty()) {
      throw HandLoadError(path + ".primitives", "every link needs at least one primitive");
    }
    for (std::size_t k = 0; k < prims.size(); ++k) {
      link.primitives.push_back(parse_primitive(prims[k], path + ".primitives[" + std::to_string(k) + "]"));
    }
    if (obj.contains("surface_points")) {
      const json& pts = obj.at("surface_points");
      for (std::size_t k = 0; k < pts.size(); ++k) {
        link.surface_points.points.push_back(
            vec3(pts[k], path + ".surface_points[" + std::to_string(k) + "]"));
      }
    }
    hand.links.push_back(std::move(link));
  }

  const json& joints = field(doc, "joints", "$");
  for (std::size_t j = 0; j < joints.size(); ++j) {
    const std::string path = "joints[" + std::to_string(j) + "]";
    const json& obj = joints[j];
    Joint joint;
    joint.name = field(obj, "name", path).get<std::string>();
    const std::string parent = field(obj, "parent", path).get<std::string>();
    const std::string child = field(obj, "child", path).get<std::string>();
    joint.parent_link = hand.link_index(parent);
    joint.child_link = hand.link_index(child);
    if (joint.parent_link < 0) throw HandLoadError(path + ".parent", "unknown link '" + parent + "'");
    if (joint.child_link < 0) throw HandLoadError(path + ".child", "unknown link '" + child + "'");
    joint.axis = unit_vec3(field(obj, "axis", path), path + ".axis");
    if (obj.contains("origin")) joint.origin = parse_origin(obj.at("origin"), path + ".origin");
    const json& limits = field(obj, "limits", path);
    if (!limits.is_array() || limits.size() != 2) {
      throw HandLoadError(path + ".limits", "expected [lower, upper]");
    }
    joint.lower = number(limits[0], path + ".limits[0]");
    joint.upper = number(limits[1], path + ".limits[1]");
    if (joint.lower > joint.upper) {
      throw HandLoadError(path + ".limits", "lower limit exceeds upper limit for joint '" + joint.name + "'");
    }
    joint.flexion = obj.value("flexion", false);
    hand.joints.push_back(joint);
  }

  hand.finalize();

  const json& anchors = field(doc, "anchors", "$");
  const json& functional = field(anchors, "functional", "anchors");
  for (auto it = functional.begin(); it != functional.end(); ++it) {
    const std::string path = "anchors.functional." + it.key();
    Part finger;
    try {
      finger = parse_part(it.key());
    } catch (const std::invalid_argument& e) {
      throw HandLoadError(path, e.what());
    }
    std::vector<Anchor> list;
    for (std::size_t k = 0; k < it.value().size(); ++k) {
      list.push_back(parse_anchor(hand, it.value()[k], path + "[" + std::to_string(k) + "]"));
    }
    if (list.empty()) throw HandLoadError(path, "functional anchor list is empty");
    hand.functional_anchors[finger] = std::move(list);
  }
  const json& grasping = field(anchors, "grasping", "anchors");
  for (std::size_t k = 0; k < grasping.size(); ++k) {
    hand.grasping_anchors.push_back(
        parse_anchor(hand, grasping[k], "anchors.grasping[" + std::to_string(k) + "]"));
  }
  if (hand.grasping_anchors.empty()) throw HandLoadError("anchors.grasping", "grasping anchor list is empty");

  if (doc.contains("grasp_center")) {
    hand.grasp_center = vec3(doc.at("grasp_center"), "grasp_center");
  } else {
    // Centroid of the grasping anchors at rest, expressed in the palm frame.
    const FkResult fk = forward_kinematics(hand, GraspConfiguration::identity(hand.dof()));
    Vec3 c = Vec3::Zero();
    for (const Vec3& p : anchor_positions(hand.grasping_anchors, fk)) c += p;
    hand.grasp_center = c / static_cast<double>(hand.grasping_anchors.size());
  }

  const json& axes = field(doc, "axes", "$");
  const json& press = field(axes, "press", "axes");
  for (auto it = press.begin(); it != press.end(); ++it) {
    const std::string path = "axes.press." + it.key();
    Part finger;
    try {
      finger = parse_part(it.key());
    } catch (const std::invalid_argument& e) {
      throw HandLoadError(path, e.what());
    }
    hand.press_directions[finger] = unit_vec3(it.value(), path);
  }
  for (const auto& [finger, list] : hand.functional_anchors) {
    if (finger != Part::kThumb && !hand.press_directions.count(finger)) {
      throw HandLoadError("axes.press." + std::string(to_string(finger)),
                          "functional finger has no press direction");
    }
  }
  const json& thumb = field(axes, "thumb_gf", "axes");
  if (!thumb.is_array() || thumb.size() != 3) {
    throw HandLoadError("axes.thumb_gf", "the thumb requires exactly 3 GF axis definitions, got " +
                                             std::to_string(thumb.is_array() ? thumb.size() : 0));
  }
  for (std::size_t k = 0; k < 3; ++k) {
    const std::string path = "axes.thumb_gf[" + std::to_string(k) + "]";
    hand.thumb_axes[k].name = thumb[k].value("name", "variant" + std::to_string(k + 1));
    hand.thumb_axes[k].gf = unit_vec3(field(thumb[k], "gf", path), path + ".gf");
    hand.thumb_axes[k].fa = unit_vec3(field(thumb[k], "fa", path), path + ".fa");
  }
  return hand;
}

}  // namespace

HandModel parse_hand(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw HandLoadError("$", std::string("invalid JSON: ") + e.what());
  }
  try {
    return parse_hand_document(doc);
  } catch (const json::exception& e) {
    throw HandLoadError("$", std::string("malformed hand description: ") + e.what());
  }
}

HandModel load_hand(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw HandLoadError(path.string(), "cannot open hand description");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_hand(ss.str());
}

FkResult forward_kinematics(const HandModel& hand, const GraspConfiguration& config) {
  hand.check_config(config);
  FkResult fk;
  fk.root = config.root_pose();
  fk.link_poses.assign(hand.links.size(), Transform::Identity());
  fk.link_poses[hand.root_link()] = fk.root;
  fk.joint_axes.resize(hand.joints.size());
  fk.joint_origins.resize(hand.joints.size());
  for (std::size_t j = 0; j < hand.joints.size(); ++j) {
    const Joint& joint = hand.joints[j];
    const Transform frame = fk.link_poses[joint.parent_link] * joint.origin;
    fk.joint_axes[j] = frame.linear() * joint.axis;
    fk.joint_origins[j] = frame.translation();
    Transform rot = Transform::Identity();
    rot.linear() = Eigen::AngleAxisd(config.joint_angles[j], joint.axis).toRotationMatrix();
    fk.link_poses[joint.child_link] = frame * rot;
  }
  return fk;
}

std::vector<Vec3> hand_surface_points(const HandModel& hand, const FkResult& fk) {
  const auto& links = hand.surface_point_links();
  const auto& local = hand.surface_points_local();
  std::vector<Vec3> out(local.size());
  for (std::size_t i = 0; i < local.size(); ++i) out[i] = fk.link_poses[links[i]] * local[i];
  return out;
}

PointCloud hand_surface_points(const HandModel& hand, const GraspConfiguration& config) {
  PointCloud out;
  out.points = hand_surface_points(hand, forward_kinematics(hand, config));
  return out;
}

std::vector<PosedPrimitive> posed_primitives(const HandModel& hand, const FkResult& fk) {
  std::vector<PosedPrimitive> out;
  for (std::size_t l = 0; l < hand.links.size(); ++l) {
    for (const ConvexPrimitive& prim : hand.links[l].primitives) {
      PosedPrimitive p;
      p.shape = prim;
      p.shape.pose = fk.link_poses[l] * prim.pose;
      p.link = static_cast<int>(l);
      p.part = hand.links[l].part;
      p.bound = prim.bounding_radius();
      out.push_back(p);
    }
  }
  return out;
}

const std::vector<Anchor>& anchors(const HandModel& hand, AnchorSet set) {
  if (set.kind == AnchorSet::Kind::kGrasping) return hand.grasping_anchors;
  auto it = hand.functional_anchors.find(set.finger);
  if (it == hand.functional_anchors.end()) {
    throw std::invalid_argument("hand '" + hand.id + "' has no functional anchors for finger '" +
                                to_string(set.finger) + "'");
  }
  return it->second;
}

std::vector<Vec3> anchor_positions(const std::vector<Anchor>& list, const FkResult& fk) {
  std::vector<Vec3> out;
  out.reserve(list.size());
  for (const Anchor& a : list) out.push_back(fk.link_poses[a.link] * a.position);
  return out;
}

PointCloud anchor_positions(const HandModel& hand, const GraspConfiguration& config, AnchorSet set) {
  const auto& list = anchors(hand, set);
  PointCloud out;
  out.points = anchor_positions(list, forward_kinematics(hand, config));
  return out;
}

HandAxes hand_axes(const HandModel& hand, const GraspConfiguration& config, Part finger,
                   std::optional<int> thumb_variant) {
  const FkResult fk = forward_kinematics(hand, config);
  const Mat3 palm_rot = fk.link_poses[hand.root_link()].linear();
  HandAxes axes;
  Vec3 fa;
  if (finger == Part::kThumb) {
    if (!thumb_variant) throw std::invalid_argument("thumb functional finger requires a thumb variant (1..3)");
    if (*thumb_variant < 1 || *thumb_variant > 3) {
      throw std::invalid_argument("thumb variant must be 1, 2 or 3");
    }
    const ThumbAxis& t = hand.thumb_axes[*thumb_variant - 1];
    axes.gf = (palm_rot * t.gf).normalized();
    fa = palm_rot * t.fa;
  } else {
    if (thumb_variant) throw std::invalid_argument("thumb variant given for a non-thumb finger");
    const auto pts = anchor_positions(anchors(hand, AnchorSet::functional(finger)), fk);
    Vec3 centroid = Vec3::Zero();
    for (const Vec3& p : pts) centroid += p;
    centroid /= static_cast<double>(pts.size());
    const Vec3 center = fk.link_poses[hand.root_link()] * hand.grasp_center;
    axes.gf = (centroid - center).normalized();
    fa = palm_rot * hand.press_directions.at(finger);
  }
  fa -= fa.dot(axes.gf) * axes.gf;
  if (fa.norm() < 1e-9) throw std::invalid_argument("press direction is parallel to the GF axis");
  axes.fa = fa.normalized();
  return axes;
}

void accumulate_point_gradient(const HandModel& hand, const FkResult& fk, int link, const Vec3& x,
                               const Vec3& dl_dx, Eigen::VectorXd& grad) {
  grad.segment<3>(0) += dl_dx;
  // d x / d w = -[x - t]x, so dL/dw = (x - t) x dL/dx.
  grad.segment<3>(3) += (x - fk.root.translation()).cross(dl_dx);
  for (int j : hand.ancestor_joints(link)) {
    grad[6 + j] += fk.joint_axes[j].cross(x - fk.joint_origins[j]).dot(dl_dx);
  }
}

Eigen::Matrix<double, 3, Eigen::Dynamic> point_jacobian(const HandModel& hand, const FkResult& fk,
                                                        int link, const Vec3& x) {
  Eigen::Matrix<double, 3, Eigen::Dynamic> jac =
      Eigen::Matrix<double, 3, Eigen::Dynamic>::Zero(3, hand.tangent_dim());
  jac.block<3, 3>(0, 0).setIdentity();
  jac.block<3, 3>(0, 3) = -skew(x - fk.root.translation());
  for (int j : hand.ancestor_joints(link)) {
    jac.col(6 + j) = fk.joint_axes[j].cross(x - fk.joint_origins[j]);
  }
  return jac;
}

GraspConfiguration retract(const GraspConfiguration& config, const Eigen::VectorXd& delta) {
  GraspConfiguration out = config;
  out.translation += delta.segment<3>(0);
  const Eigen::Quaterniond inc(exp_so3(delta.segment<3>(3)));
  out.rotation = (inc * config.rotation).normalized();
  out.joint_angles += delta.tail(config.joint_angles.size());
  return out;
}

}  // namespace funcgrasp
