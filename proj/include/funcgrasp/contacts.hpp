#pragma once

#include <vector>

#include "funcgrasp/affordance.hpp"
#include "funcgrasp/geometry.hpp"
#include "funcgrasp/hand_model.hpp"

namespace funcgrasp {

// Contact points on the object with their friction-cone axes (inward
// surface normals).
struct ContactSet {
  std::vector<Vec3> points;
  std::vector<Vec3> cone_axes;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

// Every anchor the hand exposes: the grasping set followed by each
// finger's functional set, in part order.
std::vector<Anchor> all_anchors(const HandModel& hand);

// One detected contact with the bookkeeping needed to differentiate it.
struct DetectedContact {
  int anchor = -1;  // index into all_anchors(hand)
  Vec3 anchor_position = Vec3::Zero();
  SurfacePoint surface;
};

std::vector<DetectedContact> detect_contacts_detailed(const HandModel& hand, const FkResult& fk,
                                                      const AffordanceObject& obj,
                                                      const std::vector<Anchor>& anchor_list,
                                                      double threshold);

// Anchors within `threshold` of the object surface; x_i is the closest
// surface point and c_i the inward normal there. Points are expressed
// relative to the object's surface centroid.
ContactSet detect_contacts(const HandModel& hand, const GraspConfiguration& config,
                           const AffordanceObject& obj, double threshold);

}  // namespace funcgrasp
