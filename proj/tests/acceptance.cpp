// Acceptance criteria 1-10. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "funcgrasp/commands.hpp"
#include "funcgrasp/dataset.hpp"
#include "funcgrasp/grasp_net.hpp"
#include "funcgrasp/quality.hpp"
#include "funcgrasp/synthesis.hpp"
#include "gradient_check.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace funcgrasp;
namespace ft = funcgrasp::testing;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances and bounds.
constexpr double kThresholdDg = 0.02;
constexpr double kThresholdOther = 0.002;
constexpr double kThresholdNudge = 1e-6;
constexpr double kGradientRelTol = 1e-4;
constexpr int kGradientConfigs = 20;
constexpr double kGradientSeconds = 60.0;
constexpr double kForceClosureTol = 1e-10;
constexpr int kForceClosureSets = 100;
constexpr double kInitDipMax = 1e-4;
constexpr double kInitCosineMin = 0.999;
constexpr int kSynthesisRuns = 32;
constexpr int kSynthesisMaxSteps = 200;
constexpr double kSynthesisPassRate = 0.60;
constexpr double kUnitOracleTol = 1e-9;
constexpr int kWrenchSets = 50;
constexpr double kWrenchResidualTol = 1e-6;
constexpr double kOverfitRecMax = 1e-4;
constexpr double kPermutationTol = 1e-6;
constexpr int kTrainGraspsMin = 500;
constexpr int kTrainSynthesized = 640;
constexpr int kSamples = 64;
constexpr double kSamplePassRate = 0.50;
constexpr double kScaleRatioMax = 2.0;
constexpr int kScaleSweepRuns = 16;

const char* const kObjects[] = {"cylinder", "spray_bottle", "drill"};
const char* const kHands[] = {"hand16", "hand22"};

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
  std::printf("criterion %2d %s: %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void criterion1() {
  const FilterThresholds t;
  bool ok = t.max_dg == kThresholdDg && t.max_df == kThresholdOther && t.max_dip == kThresholdOther &&
            t.max_dsp == kThresholdOther;
  const GraspMetrics edge{kThresholdDg, kThresholdOther, kThresholdOther, kThresholdOther, false};
  ok = ok && violated_thresholds(edge, t).empty();
  const char* names[] = {"d_G", "d_F", "d_IP", "d_SP"};
  for (int k = 0; k < 4; ++k) {
    GraspMetrics m = edge;
    double* field[] = {&m.d_g, &m.d_f, &m.d_ip, &m.d_sp};
    *field[k] += kThresholdNudge;
    ok = ok && violated_thresholds(m, t) == std::vector<std::string>{names[k]};
  }
  report(1, ok, "boundary record kept; each metric +1e-6 rejected alone");
}

void criterion2() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  int checked = 0, resampled = 0;
  bool all_found = true;
  for (const char* h : kHands) {
    const HandModel hand = load_hand(ft::hand_file(h));
    for (const char* o : kObjects) {
      const AffordanceObject obj = load_object(ft::object_file(o));
      for (int i = 0; i < kGradientConfigs; ++i) {
        const auto r = ft::check_gradient_once(hand, obj, rng);
        resampled += r.resampled;
        if (!r.found) {
          all_found = false;
          continue;
        }
        ++checked;
        worst = std::max(worst, r.relative_error);
      }
    }
  }
  const double secs = seconds_since(t0);
  const bool ok = all_found && worst <= kGradientRelTol && secs < kGradientSeconds;
  report(2, ok,
         std::to_string(checked) + " configs, worst relative error " + fmt("%.2e", worst) + ", " +
             std::to_string(resampled) + " kink resamples, " + fmt("%.1f s", secs));
}

void criterion3() {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_int_distribution<int> count(1, 10);
  double worst = 0.0;
  double worst_antipodal = 0.0;
  for (int trial = 0; trial < kForceClosureSets; ++trial) {
    ContactSet cs;
    const int n = count(rng);
    for (int i = 0; i < n; ++i) {
      cs.points.push_back(0.1 * Vec3(g(rng), g(rng), g(rng)));
      cs.cone_axes.push_back(Vec3(g(rng), g(rng), g(rng)).normalized());
    }
    worst = std::max(worst, std::abs(loss_force_closure(cs) - oracle::force_closure(cs.points, cs.cone_axes)));

    // Axis-aligned antipodal pairs.
    ContactSet anti;
    for (int i = 0; i < n; ++i) {
      const int axis = i % 3;
      const double r = 0.01 + 0.1 * std::abs(g(rng));
      Vec3 x = Vec3::Zero();
      x[axis] = r;
      anti.points.push_back(x);
      anti.cone_axes.push_back(-x.normalized());
      anti.points.push_back(-x);
      anti.cone_axes.push_back(x.normalized());
    }
    worst_antipodal = std::max(worst_antipodal, loss_force_closure(anti));
  }
  ContactSet example;
  example.points = {{1, 0, 0}, {-1, 0, 0}};
  example.cone_axes = {{-1, 0, 0}, {1, 0, 0}};
  const bool ok = worst <= kForceClosureTol && worst_antipodal == 0.0 && loss_force_closure(example) == 0.0;
  report(3, ok,
         "max |L_FC - G c| " + fmt("%.2e", worst) + " over 100 sets; antipodal max " + fmt("%.1e", worst_antipodal));
}

void criterion4() {
  const PipelineConfig config = default_config();
  double worst_dip = 0.0, worst_cos = 1.0;
  int count = 0, failed = 0;
  for (const char* h : kHands) {
    const HandModel hand = load_hand(ft::hand_file(h));
    for (const char* o : kObjects) {
      const AffordanceObject base = load_object(ft::object_file(o));
      for (double s : sample_scales(config.scale_range(base.category))) {
        const AffordanceObject obj = rescale_object(base, s);
        ++count;
        try {
          const GraspConfiguration c = axis_align_init(hand, obj, {Part::kIndex, {}}, config.optimizer);
          worst_dip = std::max(worst_dip, metric_dip(hand, c, obj));
          worst_cos = std::min(worst_cos, hand_axes(hand, c, Part::kIndex, std::nullopt).gf.dot(object_axes(obj).gf));
        } catch (const std::exception&) {
          ++failed;
        }
      }
    }
  }
  const bool ok = failed == 0 && worst_dip <= kInitDipMax && worst_cos >= kInitCosineMin;
  report(4, ok,
         std::to_string(count) + " inits (2 hands x 3 objects x 15 scales), " + std::to_string(failed) +
             " failures, max d_IP " + fmt("%.2e m", worst_dip) + ", min GF cosine " + fmt("%.6f", worst_cos));
}

void criterion5() {
  const HandModel hand = load_hand(ft::hand_file("hand16"));
  const AffordanceObject obj = load_object(ft::object_file("cylinder"));
  const PipelineConfig config = default_config();
  OptimizerSettings settings = config.optimizer;
  settings.seed = 5;
  const auto runs = synthesize_batch(hand, obj, kSynthesisRuns, config.weights, settings, config.metrics);
  int pass = 0, within = 0, max_steps = 0;
  for (const SynthesisRun& r : runs) {
    if (r.ok && r.steps <= kSynthesisMaxSteps) ++within;
    max_steps = std::max(max_steps, r.steps);
    if (r.ok && violated_thresholds(r.metrics, config.thresholds).empty()) ++pass;
  }
  const double rate = static_cast<double>(pass) / kSynthesisRuns;
  const bool ok = within == kSynthesisRuns && rate >= kSynthesisPassRate;
  report(5, ok,
         std::to_string(pass) + "/" + std::to_string(kSynthesisRuns) + " pass all thresholds (" +
             fmt("%.0f%%", 100 * rate) + ", bound 60%), max steps " + std::to_string(max_steps));
}

void criterion6() {
  double err = 0.0;
  err = std::max(err, std::abs(chamfer_distance(std::vector<Vec3>{{0, 0, 0}, {1, 1, 1}},
                                                std::vector<Vec3>{{0, 0, 0}, {1, 1, 1}})));
  err = std::max(err, std::abs(chamfer_distance(std::vector<Vec3>{{0, 0, 0}},
                                                std::vector<Vec3>{{0, 0, 0}, {1, 0, 0}}) - 0.5));
  err = std::max(err, std::abs(chamfer_distance(std::vector<Vec3>{{0, 0, 0}}, std::vector<Vec3>{{0, 3, 4}}) - 50.0));
  err = std::max(err, std::abs(loss_kld({Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1)})));
  err = std::max(err, std::abs(loss_kld({Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1)}) - 0.5));
  const double kld2 = loss_kld({Eigen::VectorXd::Zero(1), Eigen::VectorXd::Constant(1, 2.0)});
  err = std::max(err, std::abs(kld2 - oracle::kld({0.0}, {2.0})));
  const bool ok = err <= kUnitOracleTol && std::abs(kld2 - 0.8069) < 5e-5;
  report(6, ok, "chamfer 0/0.5/50 and KLD 0/0.5/" + fmt("%.6f", kld2) + ", max error " + fmt("%.1e", err));
}

void criterion7() {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_int_distribution<int> count(1, 5);
  std::uniform_real_distribution<double> mu(0.2, 1.0);
  const auto defaults = default_external_wrenches();
  int agree = 0, total = 0, feasible = 0, set_agree = 0;
  for (int trial = 0; trial < kWrenchSets; ++trial) {
    WrenchSettings s;
    s.friction_mu = mu(rng);
    s.cone_facets = 8;
    s.residual_tolerance = kWrenchResidualTol;
    ContactSet cs;
    const int n = count(rng);
    for (int i = 0; i < n; ++i) {
      const Vec3 d = Vec3(g(rng), g(rng), g(rng)).normalized();
      cs.points.push_back(0.04 * d);
      cs.cone_axes.push_back((-d + 0.2 * Vec3(g(rng), g(rng), g(rng))).normalized());
    }
    std::vector<std::vector<Vec3>> edges;
    for (const Vec3& a : cs.cone_axes) edges.push_back(friction_cone_edges(a, s.friction_mu, s.cone_facets));
    bool all_ref = true;
    for (const Wrench& w : defaults) {
      const bool lib = wrench_residual(cs, w, s) <= s.residual_tolerance;
      const bool ref = oracle::wrench_feasible(cs.points, edges, w, s.max_normal_force, 1e-7);
      all_ref = all_ref && ref;
      agree += lib == ref ? 1 : 0;
      feasible += ref ? 1 : 0;
      ++total;
    }
    set_agree += wrench_resistance_check(cs, s, defaults) == all_ref ? 1 : 0;
  }
  const bool ok = agree == total && set_agree == kWrenchSets;
  report(7, ok,
         std::to_string(agree) + "/" + std::to_string(total) + " per-wrench decisions and " +
             std::to_string(set_agree) + "/50 set decisions agree with the simplex oracle (" +
             std::to_string(feasible) + " feasible)");
}

void criterion8() {
  const auto t0 = std::chrono::steady_clock::now();
  const HandModel hand = load_hand(ft::hand_file("hand16"));
  const AffordanceObject obj = load_object(ft::object_file("cylinder"));
  const PipelineConfig config = default_config();
  const auto input = std::make_shared<const ObjectInput>(make_object_input(obj, config.network.n_points, 1));

  // Overfit one grasp.
  OptimizerSettings os = config.optimizer;
  os.seed = 8;
  const GraspConfiguration one = axis_align_init(hand, obj, {Part::kIndex, {}}, os);
  GraspNet solo(hand, config.network, 3);
  TrainSettings ts = config.training;
  ts.epochs = 300;
  ts.batch_size = 1;
  ts.seed = 9;
  train(solo, {{input, one, hand.id}}, hand, ts);
  const LatentDistribution d = solo.encode(*input, one);
  const double overfit = loss_rec(solo.decode(d.mu, solo.embed(*input), input->origin), one, hand);

  // Permutation invariance with random weights in every layer, heads included.
  GraspNet probe(hand, config.network, 4);
  std::mt19937_64 wr(11);
  std::normal_distribution<double> g(0.0, 0.2);
  for (auto& w : probe.weights()) {
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = g(wr);
  }
  ObjectInput shuffled = *input;
  std::vector<int> perm(input->features.rows());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int>(i);
  std::shuffle(perm.begin(), perm.end(), wr);
  for (std::size_t i = 0; i < perm.size(); ++i) shuffled.features.row(i) = input->features.row(perm[i]);
  const LatentDistribution pa = probe.encode(*input, one), pb = probe.encode(shuffled, one);
  const double perm_err =
      std::max((pa.mu - pb.mu).cwiseAbs().maxCoeff(), (pa.sigma - pb.sigma).cwiseAbs().maxCoeff());

  // Train on filtered synthesized grasps, then sample.
  const auto runs = synthesize_batch(hand, obj, kTrainSynthesized, config.weights, os, config.metrics);
  std::vector<TrainingExample> data;
  for (const SynthesisRun& r : runs) {
    if (r.ok && violated_thresholds(r.metrics, config.thresholds).empty()) data.push_back({input, r.config, hand.id});
  }
  int pass = 0;
  if (static_cast<int>(data.size()) >= kTrainGraspsMin) {
    GraspNet net(hand, config.network, 3);
    TrainSettings full = config.training;
    full.seed = 9;
    train(net, data, hand, full);
    const auto cands = candidate_fingers(hand, obj);
    for (const GraspConfiguration& s : sample(net, *input, kSamples, 77)) {
      if (violated_thresholds(evaluate_metrics(hand, s, obj, cands, config.metrics), config.thresholds).empty()) ++pass;
    }
  }
  const double rate = static_cast<double>(pass) / kSamples;
  const bool ok = overfit < kOverfitRecMax && perm_err <= kPermutationTol &&
                  static_cast<int>(data.size()) >= kTrainGraspsMin && rate >= kSamplePassRate;
  report(8, ok,
         "overfit loss_rec " + fmt("%.2e", overfit) + ", permutation error " + fmt("%.1e", perm_err) + ", trained on " +
             std::to_string(data.size()) + " grasps, " + std::to_string(pass) + "/64 samples pass (" +
             fmt("%.0f%%", 100 * rate) + ", bound 50%), " + fmt("%.0f s", seconds_since(t0)));
}

void criterion9() {
  const fs::path dir = fs::temp_directory_path() / "funcgrasp_acceptance_c9";
  fs::remove_all(dir);
  fs::create_directories(dir);
  SynthesizeOptions s;
  s.hand_file = ft::hand_file("hand16");
  s.object_dir = ft::data_dir() / "objects";
  s.out_path = dir / "a.jsonl";
  s.n = 4;
  s.seed = 42;
  s.scale_count = 2;
  std::ostringstream sink;
  const int ca = cmd_synthesize(s, sink, sink);
  SynthesizeOptions again = s;
  again.out_path = dir / "b.jsonl";
  const int cb = cmd_synthesize(again, sink, sink);
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  const std::string a = slurp(s.out_path), b = slurp(again.out_path);
  const std::size_t records = read_dataset(s.out_path).records.size();
  fs::remove_all(dir);
  const bool ok = ca == kExitOk && cb == kExitOk && !a.empty() && a == b;
  report(9, ok, std::to_string(records) + " records, " + std::to_string(a.size()) + " bytes, files identical: " +
                    (a == b ? "yes" : "no"));
}

void criterion10() {
  const HandModel hand = load_hand(ft::hand_file("hand16"));
  const PipelineConfig config = default_config();
  bool ok = true;
  std::string detail;
  for (const char* o : kObjects) {
    const AffordanceObject base = load_object(ft::object_file(o));
    double dg_min = INFINITY, dg_max = 0.0, df_min = INFINITY, df_max = 0.0;
    int empty_scales = 0;
    std::uint64_t job = 0;
    for (double s : sample_scales(config.scale_range(base.category))) {
      const AffordanceObject obj = rescale_object(base, s);
      OptimizerSettings os = config.optimizer;
      os.seed = derive_seed(10, job++);
      double dg = 0.0, df = 0.0;
      int kept = 0;
      for (const SynthesisRun& r : synthesize_batch(hand, obj, kScaleSweepRuns, config.weights, os, config.metrics)) {
        if (!r.ok || !violated_thresholds(r.metrics, config.thresholds).empty()) continue;
        dg += r.metrics.d_g;
        df += r.metrics.d_f;
        ++kept;
      }
      if (kept == 0) {
        ++empty_scales;
        continue;
      }
      dg /= kept;
      df /= kept;
      dg_min = std::min(dg_min, dg);
      dg_max = std::max(dg_max, dg);
      df_min = std::min(df_min, df);
      df_max = std::max(df_max, df);
    }
    const double rg = dg_max / dg_min, rf = df_max / df_min;
    const bool obj_ok = empty_scales == 0 && rg < kScaleRatioMax && rf < kScaleRatioMax;
    ok = ok && obj_ok;
    char buf[200];
    std::snprintf(buf, sizeof buf, "%s%s d_G ratio %.2f, d_F ratio %.2f, %d empty scales", detail.empty() ? "" : "; ",
                  o, rg, rf, empty_scales);
    detail += buf;
  }
  report(10, ok, detail + " (bound < 2)");
}

}  // namespace

int main() {
  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criterion5();
  criterion6();
  criterion7();
  criterion8();
  criterion9();
  criterion10();
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
