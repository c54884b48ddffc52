#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "funcgrasp/commands.hpp"

namespace {

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    out.push_back(std::stod(item, &used));
    if (used != item.size()) throw CLI::ValidationError("not a number: " + item);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace funcgrasp;
  CLI::App app{"Functional dexterous grasp synthesis"};
  app.require_subcommand(1);

  SynthesizeOptions syn;
  std::string scale_list;
  auto* synthesize = app.add_subcommand("synthesize", "optimize grasps for every object and scale");
  synthesize->add_option("hand_file", syn.hand_file, "hand description (JSON)")->required();
  synthesize->add_option("object_dir", syn.object_dir, "directory of object annotations")->required();
  synthesize->add_option("config_file", syn.config_file, "pipeline config (JSON)")->required();
  synthesize->add_option("out_path", syn.out_path, "record file to write")->required();
  synthesize->add_option("--n", syn.n, "runs per object and scale")->capture_default_str();
  synthesize->add_option("--seed", syn.seed, "master seed")->capture_default_str();
  synthesize->add_option("--scales", syn.scale_count, "number of scales per category (default from config)");
  synthesize->add_option("--scale-list", scale_list, "explicit comma-separated scales in meters");
  synthesize->add_option("--objects", syn.objects, "object ids to include")->delimiter(',');
  synthesize->add_option("--trajectories", syn.trajectory_csv, "write per-step loss terms of every run as CSV");

  FilterOptions fil;
  std::string thresholds;
  auto* filter = app.add_subcommand("filter", "keep records within the metric thresholds");
  filter->add_option("in_path", fil.in_path)->required();
  filter->add_option("out_path", fil.out_path)->required();
  filter->add_option("--thresholds", thresholds, "d_G,d_F,d_IP,d_SP in meters");
  filter->add_option("--config", fil.config_file, "read thresholds from a config file");

  EvalOptions ev;
  auto* eval = app.add_subcommand("eval", "per-category metric means (cm)");
  eval->add_option("in_path", ev.in_path)->required();

  TrainOptions tr;
  auto* train = app.add_subcommand("train", "train the grasp network on a record file");
  train->add_option("dataset_path", tr.dataset_path)->required();
  train->add_option("hand_file", tr.hand_file)->required();
  train->add_option("settings_file", tr.settings_file, "config file with network and training sections")->required();
  train->add_option("checkpoint_out", tr.checkpoint_out)->required();
  train->add_option("--curve", tr.curve_path, "loss curve CSV (default <checkpoint>.loss.csv)");
  train->add_option("--object-dir", tr.object_dir, "annotation directory (default from the dataset header)");

  SampleOptions sa;
  auto* sample = app.add_subcommand("sample", "sample grasps from a trained network");
  sample->add_option("checkpoint", sa.checkpoint)->required();
  sample->add_option("object_file", sa.object_file, "object annotation")->required();
  sample->add_option("out_path", sa.out_path)->required();
  sample->add_option("--hand", sa.hand_file, "hand description used for metrics")->required();
  sample->add_option("--n", sa.n)->capture_default_str();
  sample->add_option("--seed", sa.seed)->capture_default_str();
  sample->add_option("--scale", sa.scale, "rescale the object to this OBB extent (m)");
  sample->add_option("--config", sa.config_file, "pipeline config for metric settings");

  ExportOptions ex;
  auto* exp = app.add_subcommand("export", "write PLY files for one record");
  exp->add_option("record_file", ex.record_file)->required();
  exp->add_option("index", ex.index)->required();
  exp->add_option("out_dir", ex.out_dir)->required();
  exp->add_option("--hand", ex.hand_file, "hand description (default from the dataset header)");
  exp->add_option("--object-dir", ex.object_dir, "annotation directory (default from the dataset header)");

  try {
    app.parse(argc, argv);
    if (!scale_list.empty()) syn.scale_values = parse_list(scale_list);
    if (!thresholds.empty()) {
      const auto t = parse_list(thresholds);
      if (t.size() != 4) throw CLI::ValidationError("--thresholds needs four values");
      fil.thresholds = std::array<double, 4>{t[0], t[1], t[2], t[3]};
    }
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }

  if (*synthesize) return cmd_synthesize(syn, std::cout, std::cerr);
  if (*filter) return cmd_filter(fil, std::cout, std::cerr);
  if (*eval) return cmd_eval(ev, std::cout, std::cerr);
  if (*train) return cmd_train(tr, std::cout, std::cerr);
  if (*sample) return cmd_sample(sa, std::cout, std::cerr);
  return cmd_export(ex, std::cout, std::cerr);
}
