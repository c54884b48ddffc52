#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "funcgrasp/dataset.hpp"

namespace funcgrasp {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitNoResults = 2;

struct SynthesizeOptions {
  std::filesystem::path hand_file;
  std::filesystem::path object_dir;
  std::filesystem::path config_file;  // empty: built-in defaults
  std::filesystem::path out_path;
  int n = 16;
  std::uint64_t seed = 0;
  std::optional<int> scale_count;    // overrides the category's count
  std::vector<double> scale_values;  // explicit scales, overrides the range
  std::vector<std::string> objects;  // object ids; empty means all
  // Per-step loss terms of every run as CSV; empty to skip.
  std::filesystem::path trajectory_csv;
};

struct FilterOptions {
  std::filesystem::path in_path;
  std::filesystem::path out_path;
  std::filesystem::path config_file;
  std::optional<std::array<double, 4>> thresholds;  // d_G, d_F, d_IP, d_SP
};

struct EvalOptions {
  std::filesystem::path in_path;
};

struct TrainOptions {
  std::filesystem::path dataset_path;
  std::filesystem::path hand_file;
  std::filesystem::path settings_file;  // config file; network and training sections are used
  std::filesystem::path checkpoint_out;
  std::filesystem::path curve_path;  // empty: <checkpoint_out>.loss.csv
  std::filesystem::path object_dir;  // empty: taken from the dataset header
};

struct SampleOptions {
  std::filesystem::path checkpoint;
  std::filesystem::path object_file;  // annotation
  std::filesystem::path hand_file;
  std::filesystem::path out_path;
  std::filesystem::path config_file;
  int n = 64;
  std::uint64_t seed = 0;
  std::optional<double> scale;
};

struct ExportOptions {
  std::filesystem::path record_file;
  std::size_t index = 0;
  std::filesystem::path out_dir;
  std::filesystem::path hand_file;   // empty: taken from the dataset header
  std::filesystem::path object_dir;  // empty: taken from the dataset header
};

// Each command reports progress and tables on `out`, problems on `err`, and
// returns an exit code.
int cmd_synthesize(const SynthesizeOptions& opts, std::ostream& out, std::ostream& err);
int cmd_filter(const FilterOptions& opts, std::ostream& out, std::ostream& err);
int cmd_eval(const EvalOptions& opts, std::ostream& out, std::ostream& err);
int cmd_train(const TrainOptions& opts, std::ostream& out, std::ostream& err);
int cmd_sample(const SampleOptions& opts, std::ostream& out, std::ostream& err);
int cmd_export(const ExportOptions& opts, std::ostream& out, std::ostream& err);

// Meters to the centimeter string used in tables: 0.016734 -> "1.673".
std::string format_cm(double meters);

// Annotation files (*.json) in a directory, sorted by file name.
std::vector<std::filesystem::path> list_annotations(const std::filesystem::path& dir);

}  // namespace funcgrasp
