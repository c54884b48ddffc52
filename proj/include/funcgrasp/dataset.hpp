#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "funcgrasp/affordance.hpp"
#include "funcgrasp/grasp_net.hpp"
#include "funcgrasp/hand_model.hpp"
#include "funcgrasp/quality.hpp"
#include "funcgrasp/synthesis.hpp"

namespace funcgrasp {

inline constexpr int kDatasetSchemaVersion = 1;

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Provenance { kSynthesized, kSampled };
const char* to_string(Provenance p);
Provenance parse_provenance(const std::string& name);

struct GraspRecord {
  std::string object_id;
  std::string category;
  double scale = 0.0;
  std::string hand_id;
  FunctionalTarget target;
  GraspConfiguration config;
  GraspMetrics metrics;
  LossTerms loss_terms;
  std::uint64_t seed = 0;
  Provenance provenance = Provenance::kSynthesized;
};

// First line of a record file.
struct DatasetHeader {
  int schema_version = kDatasetSchemaVersion;
  std::string hand_id;
  std::string hand_file;   // as given on the command line, may be empty
  std::string object_dir;  // annotation directory, may be empty
};

std::string header_to_line(const DatasetHeader& header);
DatasetHeader header_from_line(const std::string& line);
std::string record_to_line(const GraspRecord& record);
// Throws DatasetError on malformed lines.
GraspRecord record_from_line(const std::string& line);

struct Dataset {
  bool has_header = false;  // false only for an empty file
  DatasetHeader header;
  std::vector<GraspRecord> records;
  // Malformed record lines skipped by read_dataset, as "line N: reason".
  std::vector<std::string> warnings;
};

// A missing or malformed header throws; malformed records are skipped and
// reported in `warnings`. An empty file yields an empty dataset.
Dataset read_dataset(const std::filesystem::path& path);
void write_dataset(const std::filesystem::path& path, const DatasetHeader& header,
                   const std::vector<GraspRecord>& records);

// Everything a pipeline run can be configured with. Missing keys keep their
// defaults; unknown keys are rejected.
struct PipelineConfig {
  LossWeights weights;
  OptimizerSettings optimizer;
  FilterThresholds thresholds;
  MetricSettings metrics;
  std::map<std::string, CategoryScaleRange> scale_ranges;
  NetConfig network;
  TrainSettings training;

  void validate() const;
  // Range for a category; throws ConfigError when none is configured.
  const CategoryScaleRange& scale_range(const std::string& category) const;
};

PipelineConfig default_config();
PipelineConfig parse_config(const std::string& json_text);
PipelineConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const PipelineConfig& config);

}  // namespace funcgrasp
