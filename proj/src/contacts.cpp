#include "funcgrasp/contacts.hpp"

#include <stdexcept>

namespace funcgrasp {

std::vector<Anchor> all_anchors(const HandModel& hand) {
  std::vector<Anchor> out = hand.grasping_anchors;
  for (const auto& [finger, list] : hand.functional_anchors) {
    out.insert(out.end(), list.begin(), list.end());
  }
  return out;
}

std::vector<DetectedContact> detect_contacts_detailed(const HandModel& hand, const FkResult& fk,
                                                      const AffordanceObject& obj,
                                                      const std::vector<Anchor>& anchor_list,
                                                      double threshold) {
  (void)hand;
  if (!(threshold > 0.0)) throw std::invalid_argument("contact threshold must be positive");
  std::vector<DetectedContact> out;
  for (std::size_t a = 0; a < anchor_list.size(); ++a) {
    const Vec3 x = fk.link_poses[anchor_list[a].link] * anchor_list[a].position;
    SurfacePoint sp = obj.query->closest_point(x);
    if (sp.distance <= threshold) {
      out.push_back({static_cast<int>(a), x, sp});
    }
  }
  return out;
}

ContactSet detect_contacts(const HandModel& hand, const GraspConfiguration& config,
                           const AffordanceObject& obj, double threshold) {
  const FkResult fk = forward_kinematics(hand, config);
  const Vec3 origin = obj.centroid();
  ContactSet out;
  for (const DetectedContact& c : detect_contacts_detailed(hand, fk, obj, all_anchors(hand), threshold)) {
    out.points.push_back(c.surface.point - origin);
    out.cone_axes.push_back(-c.surface.normal);
  }
  return out;
}

}  // namespace funcgrasp
