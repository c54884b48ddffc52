#include "funcgrasp/dataset.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace funcgrasp {

namespace {

using ojson = nlohmann::ordered_json;
using nlohmann::json;

ojson vec_json(const Eigen::VectorXd& v) {
  ojson a = ojson::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Eigen::VectorXd vec_from(const json& a) {
  const auto v = a.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Vec3 vec3_from(const json& a) {
  const auto v = a.get<std::vector<double>>();
  if (v.size() != 3) throw DatasetError("expected a 3-vector");
  return {v[0], v[1], v[2]};
}

// Rejects keys outside `allowed` so that typos in config files surface.
void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <typename T>
void read_if(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

}  // namespace

const char* to_string(Provenance p) { return p == Provenance::kSampled ? "sampled" : "synthesized"; }

Provenance parse_provenance(const std::string& name) {
  if (name == "synthesized") return Provenance::kSynthesized;
  if (name == "sampled") return Provenance::kSampled;
  throw DatasetError("unknown provenance '" + name + "'");
}

std::string header_to_line(const DatasetHeader& header) {
  ojson j;
  j["schema_version"] = header.schema_version;
  j["hand_id"] = header.hand_id;
  j["hand_file"] = header.hand_file;
  j["object_dir"] = header.object_dir;
  return j.dump();
}

DatasetHeader header_from_line(const std::string& line) {
  try {
    const json j = json::parse(line);
    DatasetHeader h;
    h.schema_version = j.at("schema_version").get<int>();
    if (h.schema_version != kDatasetSchemaVersion) {
      throw DatasetError("record file schema version " + std::to_string(h.schema_version) +
                         " is not supported (expected " + std::to_string(kDatasetSchemaVersion) + ")");
    }
    h.hand_id = j.at("hand_id").get<std::string>();
    read_if(j, "hand_file", h.hand_file);
    read_if(j, "object_dir", h.object_dir);
    return h;
  } catch (const json::exception& e) {
    throw DatasetError(std::string("malformed header: ") + e.what());
  }
}

std::string record_to_line(const GraspRecord& r) {
  ojson j;
  j["object_id"] = r.object_id;
  j["category"] = r.category;
  j["scale"] = r.scale;
  j["hand_id"] = r.hand_id;
  j["finger"] = to_string(r.target.finger);
  if (r.target.thumb_variant) j["thumb_variant"] = *r.target.thumb_variant;
  const Eigen::Quaterniond& q = r.config.rotation;
  j["config"] = {{"translation", {r.config.translation.x(), r.config.translation.y(), r.config.translation.z()}},
                 {"rotation_wxyz", {q.w(), q.x(), q.y(), q.z()}},
                 {"joints", vec_json(r.config.joint_angles)}};
  j["metrics"] = {{"d_g", r.metrics.d_g},
                  {"d_f", r.metrics.d_f},
                  {"d_ip", r.metrics.d_ip},
                  {"d_sp", r.metrics.d_sp},
                  {"wrench_resistant", r.metrics.wrench_resistant}};
  j["loss_terms"] = {{"functional", r.loss_terms.functional},
                     {"grasping", r.loss_terms.grasping},
                     {"force_closure", r.loss_terms.force_closure},
                     {"interpenetration", r.loss_terms.interpenetration},
                     {"self_penetration", r.loss_terms.self_penetration},
                     {"total", r.loss_terms.total}};
  j["seed"] = r.seed;
  j["provenance"] = to_string(r.provenance);
  return j.dump();
}

GraspRecord record_from_line(const std::string& line) {
  try {
    const json j = json::parse(line);
    GraspRecord r;
    r.object_id = j.at("object_id").get<std::string>();
    r.category = j.at("category").get<std::string>();
    r.scale = j.at("scale").get<double>();
    r.hand_id = j.at("hand_id").get<std::string>();
    r.target.finger = parse_part(j.at("finger").get<std::string>());
    if (j.contains("thumb_variant")) r.target.thumb_variant = j.at("thumb_variant").get<int>();
    const json& c = j.at("config");
    r.config.translation = vec3_from(c.at("translation"));
    const auto q = c.at("rotation_wxyz").get<std::vector<double>>();
    if (q.size() != 4) throw DatasetError("rotation_wxyz must have 4 entries");
    r.config.rotation = Eigen::Quaterniond(q[0], q[1], q[2], q[3]);
    r.config.joint_angles = vec_from(c.at("joints"));
    const json& m = j.at("metrics");
    r.metrics.d_g = m.at("d_g").get<double>();
    r.metrics.d_f = m.at("d_f").get<double>();
    r.metrics.d_ip = m.at("d_ip").get<double>();
    r.metrics.d_sp = m.at("d_sp").get<double>();
    r.metrics.wrench_resistant = m.at("wrench_resistant").get<bool>();
    const json& l = j.at("loss_terms");
    r.loss_terms.functional = l.at("functional").get<double>();
    r.loss_terms.grasping = l.at("grasping").get<double>();
    r.loss_terms.force_closure = l.at("force_closure").get<double>();
    r.loss_terms.interpenetration = l.at("interpenetration").get<double>();
    r.loss_terms.self_penetration = l.at("self_penetration").get<double>();
    r.loss_terms.total = l.at("total").get<double>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.provenance = parse_provenance(j.at("provenance").get<std::string>());
    return r;
  } catch (const json::exception& e) {
    throw DatasetError(e.what());
  } catch (const std::invalid_argument& e) {
    throw DatasetError(e.what());
  }
}

Dataset read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open record file " + path.string());
  Dataset ds;
  std::string line;
  if (!std::getline(in, line)) return ds;
  ds.header = header_from_line(line);
  ds.has_header = true;
  int number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    try {
      ds.records.push_back(record_from_line(line));
    } catch (const DatasetError& e) {
      ds.warnings.push_back("line " + std::to_string(number) + ": " + e.what());
    }
  }
  return ds;
}

void write_dataset(const std::filesystem::path& path, const DatasetHeader& header,
                   const std::vector<GraspRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DatasetError("cannot write record file " + path.string());
  out << header_to_line(header) << '\n';
  for (const GraspRecord& r : records) out << record_to_line(r) << '\n';
  if (!out) throw DatasetError("failed writing " + path.string());
}

// ---------------------------------------------------------------------------
// Configuration

void PipelineConfig::validate() const {
  weights.validate();
  optimizer.validate();
  thresholds.validate();
  if (!(metrics.contact_threshold > 0.0)) throw ConfigError("metrics.contact_threshold must be positive");
  for (const auto& [name, range] : scale_ranges) range.validate();
  network.validate();
  training.validate();
  if (training.latent_dim != network.latent_dim) throw ConfigError("training.latent_dim must equal network.latent_dim");
}

const CategoryScaleRange& PipelineConfig::scale_range(const std::string& category) const {
  const auto it = scale_ranges.find(category);
  if (it == scale_ranges.end()) throw ConfigError("no scale range configured for category '" + category + "'");
  return it->second;
}

PipelineConfig default_config() {
  PipelineConfig c;
  for (const CategoryScaleRange& r : {CategoryScaleRange{"cylinder", 0.12, 0.30, 15},
                                      CategoryScaleRange{"spray_bottle", 0.15, 0.30, 15},
                                      CategoryScaleRange{"drill", 0.15, 0.35, 15}}) {
    c.scale_ranges[r.category] = r;
  }
  return c;
}

PipelineConfig parse_config(const std::string& json_text) {
  PipelineConfig c = default_config();
  try {
    const json j = json::parse(json_text);
    check_keys(j, {"weights", "optimizer", "thresholds", "metrics", "scale_ranges", "network", "training"}, "$");
    if (j.contains("weights")) {
      const json& w = j["weights"];
      check_keys(w, {"functional", "grasping", "force_closure", "interpenetration", "self_penetration"}, "weights");
      read_if(w, "functional", c.weights.functional);
      read_if(w, "grasping", c.weights.grasping);
      read_if(w, "force_closure", c.weights.force_closure);
      read_if(w, "interpenetration", c.weights.interpenetration);
      read_if(w, "self_penetration", c.weights.self_penetration);
    }
    if (j.contains("optimizer")) {
      const json& o = j["optimizer"];
      check_keys(o,
                 {"step_size", "max_steps", "beta1", "beta2", "epsilon", "translation_step_scale",
                  "contact_threshold", "init_flex", "empty_contact_penalty", "convergence_tolerance", "patience"},
                 "optimizer");
      read_if(o, "step_size", c.optimizer.step_size);
      read_if(o, "max_steps", c.optimizer.max_steps);
      read_if(o, "beta1", c.optimizer.beta1);
      read_if(o, "beta2", c.optimizer.beta2);
      read_if(o, "epsilon", c.optimizer.epsilon);
      read_if(o, "translation_step_scale", c.optimizer.translation_step_scale);
      read_if(o, "contact_threshold", c.optimizer.contact_threshold);
      read_if(o, "init_flex", c.optimizer.init_flex);
      read_if(o, "empty_contact_penalty", c.optimizer.empty_contact_penalty);
      read_if(o, "convergence_tolerance", c.optimizer.convergence_tolerance);
      read_if(o, "patience", c.optimizer.patience);
    }
    if (j.contains("thresholds")) {
      const json& t = j["thresholds"];
      check_keys(t, {"max_dg", "max_df", "max_dip", "max_dsp"}, "thresholds");
      read_if(t, "max_dg", c.thresholds.max_dg);
      read_if(t, "max_df", c.thresholds.max_df);
      read_if(t, "max_dip", c.thresholds.max_dip);
      read_if(t, "max_dsp", c.thresholds.max_dsp);
    }
    if (j.contains("metrics")) {
      const json& m = j["metrics"];
      check_keys(m, {"contact_threshold", "friction_mu", "cone_facets", "max_normal_force", "residual_tolerance"},
                 "metrics");
      read_if(m, "contact_threshold", c.metrics.contact_threshold);
      read_if(m, "friction_mu", c.metrics.wrench.friction_mu);
      read_if(m, "cone_facets", c.metrics.wrench.cone_facets);
      read_if(m, "max_normal_force", c.metrics.wrench.max_normal_force);
      read_if(m, "residual_tolerance", c.metrics.wrench.residual_tolerance);
    }
    if (j.contains("scale_ranges")) {
      const json& s = j["scale_ranges"];
      if (!s.is_object()) throw ConfigError("scale_ranges: expected an object");
      for (const auto& [name, value] : s.items()) {
        check_keys(value, {"low", "high", "count"}, "scale_ranges." + name);
        CategoryScaleRange r{name, value.at("low").get<double>(), value.at("high").get<double>(), 15};
        read_if(value, "count", r.n_scales);
        c.scale_ranges[name] = r;
      }
    }
    if (j.contains("network")) {
      const json& n = j["network"];
      check_keys(n, {"point_widths", "encoder_widths", "decoder_widths", "latent_dim", "n_points", "extra_channels"},
                 "network");
      read_if(n, "point_widths", c.network.point_widths);
      read_if(n, "encoder_widths", c.network.encoder_widths);
      read_if(n, "decoder_widths", c.network.decoder_widths);
      read_if(n, "latent_dim", c.network.latent_dim);
      read_if(n, "n_points", c.network.n_points);
      read_if(n, "extra_channels", c.network.extra_channels);
      c.training.latent_dim = c.network.latent_dim;
    }
    if (j.contains("training")) {
      const json& t = j["training"];
      check_keys(t, {"epochs", "batch_size", "step_size", "kld_weight", "seed", "init_output_bias"}, "training");
      read_if(t, "epochs", c.training.epochs);
      read_if(t, "batch_size", c.training.batch_size);
      read_if(t, "step_size", c.training.step_size);
      read_if(t, "kld_weight", c.training.kld_weight);
      read_if(t, "seed", c.training.seed);
      read_if(t, "init_output_bias", c.training.init_output_bias);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string config_to_json(const PipelineConfig& c) {
  ojson j;
  j["weights"] = {{"functional", c.weights.functional},
                  {"grasping", c.weights.grasping},
                  {"force_closure", c.weights.force_closure},
                  {"interpenetration", c.weights.interpenetration},
                  {"self_penetration", c.weights.self_penetration}};
  const OptimizerSettings& o = c.optimizer;
  j["optimizer"] = {{"step_size", o.step_size},
                    {"max_steps", o.max_steps},
                    {"beta1", o.beta1},
                    {"beta2", o.beta2},
                    {"epsilon", o.epsilon},
                    {"translation_step_scale", o.translation_step_scale},
                    {"contact_threshold", o.contact_threshold},
                    {"init_flex", o.init_flex},
                    {"empty_contact_penalty", o.empty_contact_penalty},
                    {"convergence_tolerance", o.convergence_tolerance},
                    {"patience", o.patience}};
  j["thresholds"] = {{"max_dg", c.thresholds.max_dg},
                     {"max_df", c.thresholds.max_df},
                     {"max_dip", c.thresholds.max_dip},
                     {"max_dsp", c.thresholds.max_dsp}};
  j["metrics"] = {{"contact_threshold", c.metrics.contact_threshold},
                  {"friction_mu", c.metrics.wrench.friction_mu},
                  {"cone_facets", c.metrics.wrench.cone_facets},
                  {"max_normal_force", c.metrics.wrench.max_normal_force},
                  {"residual_tolerance", c.metrics.wrench.residual_tolerance}};
  ojson ranges = ojson::object();
  for (const auto& [name, r] : c.scale_ranges) ranges[name] = {{"low", r.s_low}, {"high", r.s_high}, {"count", r.n_scales}};
  j["scale_ranges"] = ranges;
  j["network"] = {{"point_widths", c.network.point_widths},
                  {"encoder_widths", c.network.encoder_widths},
                  {"decoder_widths", c.network.decoder_widths},
                  {"latent_dim", c.network.latent_dim},
                  {"n_points", c.network.n_points},
                  {"extra_channels", c.network.extra_channels}};
  j["training"] = {{"epochs", c.training.epochs},
                   {"batch_size", c.training.batch_size},
                   {"step_size", c.training.step_size},
                   {"kld_weight", c.training.kld_weight},
                   {"seed", c.training.seed},
                   {"init_output_bias", c.training.init_output_bias}};
  return j.dump(2) + "\n";
}

}  // namespace funcgrasp
