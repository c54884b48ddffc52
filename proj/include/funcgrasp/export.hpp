#pragma once

#include <filesystem>
#include <vector>

#include "funcgrasp/affordance.hpp"
#include "funcgrasp/hand_model.hpp"
#include "funcgrasp/mesh_io.hpp"

namespace funcgrasp {

// Triangle mesh of a primitive in its parent frame. Every vertex lies on the
// primitive's surface.
TriangleMesh tessellate(const ConvexPrimitive& prim, int segments = 16);

struct ColoredMesh {
  TriangleMesh mesh;
  std::vector<Rgb> colors;  // one per vertex
};

Rgb part_color(Part part);

// All hand primitives posed by forward kinematics, colored by part.
ColoredMesh posed_hand_mesh(const HandModel& hand, const GraspConfiguration& config, int segments = 16);

inline constexpr Rgb kFunctionalColor{220, 40, 40};
inline constexpr Rgb kGraspingColor{40, 170, 60};
inline constexpr Rgb kUnlabeledColor{170, 170, 170};

// Object surface cloud as vertices only, colored functional / grasping /
// unlabeled. A point in both parts takes the functional color.
ColoredMesh object_point_cloud(const AffordanceObject& obj);

// Writes object_mesh.ply, object_points.ply and hand.ply into `dir`.
void export_grasp(const std::filesystem::path& dir, const HandModel& hand, const GraspConfiguration& config,
                  const AffordanceObject& obj);

}  // namespace funcgrasp
