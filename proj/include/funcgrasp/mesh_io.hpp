#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "funcgrasp/geometry.hpp"

namespace funcgrasp {

class MeshIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MeshLoadReport {
  std::size_t degenerate_removed = 0;
};

// Loads .obj or .ply (ascii or binary_little_endian). Polygons are fan
// triangulated; degenerate triangles are dropped and counted in `report`.
TriangleMesh load_mesh(const std::filesystem::path& path, MeshLoadReport* report = nullptr);
TriangleMesh load_obj(const std::filesystem::path& path);
TriangleMesh load_ply(const std::filesystem::path& path);

void save_obj(const std::filesystem::path& path, const TriangleMesh& mesh);

using Rgb = std::array<std::uint8_t, 3>;

// ASCII PLY with optional per-vertex colors (empty or one per vertex).
void save_ply(const std::filesystem::path& path, const TriangleMesh& mesh,
              const std::vector<Rgb>& colors = {});

}  // namespace funcgrasp
