#include "funcgrasp/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>

#include "funcgrasp/export.hpp"
#include "funcgrasp/grasp_net.hpp"

namespace funcgrasp {

namespace {

PipelineConfig config_or_default(const std::filesystem::path& path) {
  return path.empty() ? default_config() : load_config(path);
}

std::filesystem::path annotation_path(const std::filesystem::path& dir, const std::string& object_id) {
  return dir / (object_id + ".json");
}

// Objects keyed by id, loaded on first use.
class ObjectCache {
 public:
  explicit ObjectCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

  const AffordanceObject& get(const std::string& id) {
    auto it = objects_.find(id);
    if (it == objects_.end()) it = objects_.emplace(id, load_object(annotation_path(dir_, id))).first;
    return it->second;
  }

 private:
  std::filesystem::path dir_;
  std::map<std::string, AffordanceObject> objects_;
};

// The functional finger whose anchors sit closest to the functional part.
FunctionalTarget closest_target(const HandModel& hand, const GraspConfiguration& config,
                                const AffordanceObject& obj) {
  FunctionalTarget best;
  double best_value = std::numeric_limits<double>::infinity();
  for (Part finger : candidate_fingers(hand, obj)) {
    const double v = loss_functional(hand, config, obj, finger);
    if (v < best_value) {
      best_value = v;
      best.finger = finger;
    }
  }
  if (best.finger == Part::kThumb) best.thumb_variant = 1;
  return best;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

}  // namespace

std::string format_cm(double meters) { return fixed(meters * 100.0, 3); }

std::vector<std::filesystem::path> list_annotations(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw ObjectLoadError("object directory not found: " + dir.string());
  std::vector<std::filesystem::path> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

int cmd_synthesize(const SynthesizeOptions& opts, std::ostream& out, std::ostream& err) {
  HandModel hand;
  PipelineConfig config;
  std::vector<AffordanceObject> objects;
  try {
    if (opts.n < 1) throw std::invalid_argument("--n must be >= 1");
    if (opts.scale_count && *opts.scale_count < 1) throw std::invalid_argument("--scales must be >= 1");
    hand = load_hand(opts.hand_file);
    config = config_or_default(opts.config_file);
    for (const auto& path : list_annotations(opts.object_dir)) {
      const std::string id = path.stem().string();
      if (!opts.objects.empty() && std::find(opts.objects.begin(), opts.objects.end(), id) == opts.objects.end()) {
        continue;
      }
      objects.push_back(load_object(path));
    }
    for (const std::string& id : opts.objects) {
      const bool found = std::any_of(objects.begin(), objects.end(), [&](const auto& o) { return o.id == id; });
      if (!found) throw ObjectLoadError("object '" + id + "' not found in " + opts.object_dir.string());
    }
    if (objects.empty()) throw ObjectLoadError("no objects in " + opts.object_dir.string());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }

  std::ofstream trajectories;
  if (!opts.trajectory_csv.empty()) {
    trajectories.open(opts.trajectory_csv);
    if (!trajectories) {
      err << "error: cannot write " << opts.trajectory_csv.string() << "\n";
      return kExitError;
    }
    trajectories << "object_id,scale,run,step,L_F,L_G,L_FC,L_IP,L_SP,total\n";
    trajectories.precision(17);
  }

  std::vector<GraspRecord> records;
  std::uint64_t job = 0;
  int failures = 0;
  for (const AffordanceObject& base : objects) {
    std::vector<double> scales = opts.scale_values;
    if (scales.empty()) {
      try {
        CategoryScaleRange range = config.scale_range(base.category);
        if (opts.scale_count) range.n_scales = *opts.scale_count;
        scales = sample_scales(range);
      } catch (const std::exception& e) {
        err << "error: " << base.id << ": " << e.what() << "\n";
        return kExitError;
      }
    }
    for (double scale : scales) {
      const AffordanceObject obj = rescale_object(base, scale);
      OptimizerSettings settings = config.optimizer;
      settings.seed = derive_seed(opts.seed, job++);
      const auto runs = synthesize_batch(hand, obj, opts.n, config.weights, settings, config.metrics);
      if (trajectories.is_open()) {
        for (std::size_t i = 0; i < runs.size(); ++i) {
          for (std::size_t step = 0; step < runs[i].trajectory.size(); ++step) {
            const LossTerms& t = runs[i].trajectory[step];
            trajectories << obj.id << ',' << scale << ',' << i << ',' << step << ',' << t.functional << ','
                         << t.grasping << ',' << t.force_closure << ',' << t.interpenetration << ','
                         << t.self_penetration << ',' << t.total << "\n";
          }
        }
      }
      int ok = 0;
      for (const SynthesisRun& run : runs) {
        if (!run.ok) {
          ++failures;
          err << "warning: " << obj.id << " scale " << fixed(scale, 4) << " seed " << run.seed << ": " << run.error
              << "\n";
          continue;
        }
        ++ok;
        GraspRecord r;
        r.object_id = obj.id;
        r.category = obj.category;
        r.scale = scale;
        r.hand_id = hand.id;
        r.target = run.target;
        r.config = run.config;
        r.metrics = run.metrics;
        r.loss_terms = run.terms;
        r.seed = run.seed;
        r.provenance = Provenance::kSynthesized;
        records.push_back(std::move(r));
      }
      out << obj.id << " scale " << fixed(scale, 4) << ": " << ok << "/" << runs.size() << " runs succeeded\n";
    }
  }

  DatasetHeader header;
  header.hand_id = hand.id;
  header.hand_file = opts.hand_file.string();
  header.object_dir = opts.object_dir.string();
  try {
    write_dataset(opts.out_path, header, records);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
  out << "wrote " << records.size() << " records to " << opts.out_path.string();
  if (failures > 0) out << " (" << failures << " runs failed)";
  out << "\n";
  return records.empty() ? kExitNoResults : kExitOk;
}

int cmd_filter(const FilterOptions& opts, std::ostream& out, std::ostream& err) {
  Dataset ds;
  FilterThresholds thresholds;
  try {
    thresholds = config_or_default(opts.config_file).thresholds;
    if (opts.thresholds) {
      const auto& t = *opts.thresholds;
      thresholds = {t[0], t[1], t[2], t[3]};
      thresholds.validate();
    }
    ds = read_dataset(opts.in_path);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
  for (const std::string& w : ds.warnings) err << "warning: skipped malformed record, " << w << "\n";

  std::vector<GraspMetrics> metrics;
  for (const GraspRecord& r : ds.records) metrics.push_back(r.metrics);
  const FilterResult result = filter_grasps(metrics, thresholds);
  std::vector<GraspRecord> kept;
  for (std::size_t i : result.kept) kept.push_back(ds.records[i]);
  try {
    if (ds.has_header) {
      write_dataset(opts.out_path, ds.header, kept);
    } else {
      std::ofstream empty(opts.out_path, std::ios::binary | std::ios::trunc);
      if (!empty) throw DatasetError("cannot write record file " + opts.out_path.string());
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }

  std::map<std::string, int> counts{{"d_G", 0}, {"d_F", 0}, {"d_IP", 0}, {"d_SP", 0}};
  for (const Rejection& r : result.rejected) {
    for (const std::string& name : r.violated) ++counts[name];
  }
  out << "records   " << ds.records.size() << "\n";
  out << "kept      " << kept.size() << "\n";
  out << "rejected  " << result.rejected.size() << "\n";
  for (const char* name : {"d_G", "d_F", "d_IP", "d_SP"}) {
    std::string label = std::string("  ") + name;
    label.resize(10, ' ');
    out << label << counts[name] << "\n";
  }
  if (!ds.warnings.empty()) err << "warnings: " << ds.warnings.size() << "\n";
  return kExitOk;
}

int cmd_eval(const EvalOptions& opts, std::ostream& out, std::ostream& err) {
  Dataset ds;
  try {
    ds = read_dataset(opts.in_path);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
  for (const std::string& w : ds.warnings) err << "warning: skipped malformed record, " << w << "\n";
  if (ds.records.empty()) {
    err << "error: no records in " << opts.in_path.string() << "\n";
    return kExitError;
  }
  struct Sums {
    std::size_t n = 0;
    double dg = 0, df = 0, dip = 0, dsp = 0, wr = 0;
  };
  std::map<std::string, Sums> by_category;
  for (const GraspRecord& r : ds.records) {
    Sums& s = by_category[r.category];
    ++s.n;
    s.dg += r.metrics.d_g;
    s.df += r.metrics.d_f;
    s.dip += r.metrics.d_ip;
    s.dsp += r.metrics.d_sp;
    s.wr += r.metrics.wrench_resistant ? 1.0 : 0.0;
  }
  out << "category,n,d_G_cm,d_F_cm,d_IP_cm,d_SP_cm,wrench_rate\n";
  for (const auto& [category, s] : by_category) {
    const double n = static_cast<double>(s.n);
    out << category << ',' << s.n << ',' << format_cm(s.dg / n) << ',' << format_cm(s.df / n) << ','
        << format_cm(s.dip / n) << ',' << format_cm(s.dsp / n) << ',' << fixed(s.wr / n, 3) << "\n";
  }
  return kExitOk;
}

int cmd_train(const TrainOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    const Dataset ds = read_dataset(opts.dataset_path);
    for (const std::string& w : ds.warnings) err << "warning: skipped malformed record, " << w << "\n";
    if (ds.records.empty()) throw std::invalid_argument("dataset has no records");
    const HandModel hand = load_hand(opts.hand_file);
    if (ds.header.hand_id != hand.id) {
      err << "error: dataset is for hand '" << ds.header.hand_id << "', hand file is '" << hand.id << "'\n";
      return kExitError;
    }
    const PipelineConfig config = config_or_default(opts.settings_file);
    const std::filesystem::path object_dir = opts.object_dir.empty() ? std::filesystem::path(ds.header.object_dir) : opts.object_dir;

    ObjectCache objects(object_dir);
    std::map<std::pair<std::string, double>, std::shared_ptr<const ObjectInput>> inputs;
    std::vector<TrainingExample> data;
    for (const GraspRecord& r : ds.records) {
      const auto key = std::make_pair(r.object_id, r.scale);
      auto it = inputs.find(key);
      if (it == inputs.end()) {
        const AffordanceObject obj = rescale_object(objects.get(r.object_id), r.scale);
        const std::uint64_t seed = derive_seed(config.training.seed, inputs.size());
        it = inputs.emplace(key, std::make_shared<const ObjectInput>(
                                     make_object_input(obj, config.network.n_points, seed)))
                 .first;
      }
      data.push_back({it->second, r.config, r.hand_id});
    }

    GraspNet net(hand, config.network, config.training.seed);
    const auto curve = train(net, data, hand, config.training);
    net.save(opts.checkpoint_out);

    const std::filesystem::path curve_path =
        opts.curve_path.empty() ? std::filesystem::path(opts.checkpoint_out.string() + ".loss.csv") : opts.curve_path;
    std::ofstream csv(curve_path);
    if (!csv) throw std::runtime_error("cannot write " + curve_path.string());
    csv << "epoch,loss,rec,kld\n";
    csv.precision(17);
    for (const EpochStats& s : curve) csv << s.epoch << ',' << s.loss << ',' << s.rec << ',' << s.kld << "\n";

    out << "trained on " << data.size() << " records from " << inputs.size() << " object inputs for "
        << curve.size() << " epochs\n";
    if (!curve.empty()) out << "final rec " << curve.back().rec << " kld " << curve.back().kld << "\n";
    out << "wrote " << opts.checkpoint_out.string() << " and " << curve_path.string() << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
}

int cmd_sample(const SampleOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    if (opts.n < 0) throw std::invalid_argument("--n must be >= 0");
    const GraspNet net = GraspNet::load(opts.checkpoint);
    const HandModel hand = load_hand(opts.hand_file);
    if (net.hand_id() != hand.id) {
      err << "error: checkpoint is for hand '" << net.hand_id() << "', hand file is '" << hand.id << "'\n";
      return kExitError;
    }
    const PipelineConfig config = config_or_default(opts.config_file);
    AffordanceObject obj = load_object(opts.object_file);
    if (opts.scale) obj = rescale_object(obj, *opts.scale);

    const ObjectInput input = make_object_input(obj, net.config().n_points, opts.seed);
    const auto configs = sample(net, input, opts.n, opts.seed);
    const auto fingers = candidate_fingers(hand, obj);
    std::vector<GraspRecord> records;
    for (std::size_t i = 0; i < configs.size(); ++i) {
      GraspRecord r;
      r.object_id = obj.id;
      r.category = obj.category;
      r.scale = obj.scale;
      r.hand_id = hand.id;
      r.config = configs[i];
      r.target = closest_target(hand, r.config, obj);
      r.metrics = evaluate_metrics(hand, r.config, obj, fingers, config.metrics);
      r.loss_terms = total_loss(hand, r.config, obj, r.target, config.weights, config.optimizer);
      r.seed = derive_seed(opts.seed, i);
      r.provenance = Provenance::kSampled;
      records.push_back(std::move(r));
    }
    DatasetHeader header;
    header.hand_id = hand.id;
    header.hand_file = opts.hand_file.string();
    header.object_dir = opts.object_file.parent_path().string();
    write_dataset(opts.out_path, header, records);
    const FilterResult kept = [&] {
      std::vector<GraspMetrics> m;
      for (const GraspRecord& r : records) m.push_back(r.metrics);
      return filter_grasps(m, config.thresholds);
    }();
    out << "wrote " << records.size() << " sampled records to " << opts.out_path.string() << " (" << kept.kept.size()
        << " pass the filter)\n";
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
}

int cmd_export(const ExportOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    const Dataset ds = read_dataset(opts.record_file);
    if (opts.index >= ds.records.size()) {
      err << "error: index " << opts.index << " out of range (" << ds.records.size() << " records)\n";
      return kExitError;
    }
    const GraspRecord& r = ds.records[opts.index];
    const std::filesystem::path hand_file = opts.hand_file.empty() ? std::filesystem::path(ds.header.hand_file) : opts.hand_file;
    const std::filesystem::path object_dir = opts.object_dir.empty() ? std::filesystem::path(ds.header.object_dir) : opts.object_dir;
    const HandModel hand = load_hand(hand_file);
    if (hand.id != r.hand_id) {
      err << "error: record is for hand '" << r.hand_id << "', hand file is '" << hand.id << "'\n";
      return kExitError;
    }
    const AffordanceObject obj = rescale_object(load_object(annotation_path(object_dir, r.object_id)), r.scale);
    export_grasp(opts.out_dir, hand, r.config, obj);
    out << "wrote object_mesh.ply, object_points.ply, hand.ply to " << opts.out_dir.string() << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
}

}  // namespace funcgrasp
