#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "funcgrasp/commands.hpp"
#include "funcgrasp/dataset.hpp"
#include "funcgrasp/export.hpp"
#include "test_support.hpp"

using namespace funcgrasp;
namespace ft = funcgrasp::testing;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

GraspRecord sample_record(double d_f) {
  GraspRecord r;
  r.object_id = "cylinder";
  r.category = "cylinder";
  r.scale = 0.2;
  r.hand_id = "hand16";
  r.target = {Part::kThumb, 2};
  r.config = GraspConfiguration::identity(16);
  r.config.translation = Vec3(0.1, -0.025, 1.0 / 3.0);
  r.config.rotation = Eigen::Quaterniond(exp_so3(Vec3(0.1, 0.2, 0.3)));
  for (int j = 0; j < 16; ++j) r.config.joint_angles[j] = 0.01 * j + 1e-17;
  r.metrics = {0.0123456789, d_f, 0.0005, 0.0, true};
  r.loss_terms = {0.1, 0.2, 0.3, 0.4, 0.5, 1.5};
  r.seed = 18446744073709551557ull;
  return r;
}

fs::path fast_config(const fs::path& dir) {
  PipelineConfig c = default_config();
  c.optimizer.max_steps = 20;
  const fs::path p = dir / "fast.json";
  std::ofstream(p) << config_to_json(c);
  return p;
}

}  // namespace

TEST_CASE("record lines round trip byte for byte") {
  TempDir tmp("funcgrasp_records");
  DatasetHeader h;
  h.hand_id = "hand16";
  h.hand_file = "data/hands/hand16.json";
  h.object_dir = "data/objects";
  std::vector<GraspRecord> records{sample_record(0.001), sample_record(0.003)};
  records[1].target = {Part::kIndex, std::nullopt};
  records[1].provenance = Provenance::kSampled;
  write_dataset(tmp.path / "a.jsonl", h, records);
  const Dataset d = read_dataset(tmp.path / "a.jsonl");
  REQUIRE(d.records.size() == 2);
  CHECK(d.warnings.empty());
  CHECK(d.header.hand_file == h.hand_file);
  CHECK(d.records[0].target.thumb_variant == 2);
  CHECK(!d.records[1].target.thumb_variant);
  CHECK(d.records[1].provenance == Provenance::kSampled);
  CHECK(d.records[0].config.translation == records[0].config.translation);
  CHECK(d.records[0].seed == records[0].seed);
  write_dataset(tmp.path / "b.jsonl", d.header, d.records);
  CHECK(slurp(tmp.path / "a.jsonl") == slurp(tmp.path / "b.jsonl"));

  CHECK_THROWS_AS(record_from_line("{\"object_id\": 3}"), DatasetError);
  CHECK_THROWS_AS(header_from_line("{\"schema_version\": 99, \"hand_id\": \"x\"}"), DatasetError);
}

TEST_CASE("malformed record lines are skipped with a warning") {
  TempDir tmp("funcgrasp_malformed");
  write_dataset(tmp.path / "a.jsonl", {1, "hand16", "", ""}, {sample_record(0.001)});
  std::ofstream(tmp.path / "a.jsonl", std::ios::app) << "not json\n";
  const Dataset d = read_dataset(tmp.path / "a.jsonl");
  CHECK(d.records.size() == 1);
  REQUIRE(d.warnings.size() == 1);
  CHECK(d.warnings[0].rfind("line 3", 0) == 0);
}

TEST_CASE("config parsing") {
  const PipelineConfig d = default_config();
  CHECK_NOTHROW(d.validate());
  CHECK(d.scale_range("cylinder").n_scales == 15);
  CHECK_THROWS_AS(d.scale_range("teapot"), ConfigError);
  const PipelineConfig back = parse_config(config_to_json(d));
  CHECK(config_to_json(back) == config_to_json(d));
  CHECK(parse_config(R"({"weights": {"functional": 7}})").weights.functional == 7.0);
  CHECK_THROWS_AS(parse_config(R"({"weights": {"functionl": 7}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"thresholds": {"max_dg": -1}})"), ConfigError);
  CHECK(load_config(ft::data_dir() / ".." / "config" / "default.json").optimizer.max_steps == 200);
}

TEST_CASE("centimeter formatting") {
  CHECK(format_cm(0.016734) == "1.673");
  CHECK(format_cm(0.0) == "0.000");
  CHECK(format_cm(0.02) == "2.000");
}

TEST_CASE("synthesize, filter and eval") {
  TempDir tmp("funcgrasp_pipeline");
  SynthesizeOptions s;
  s.hand_file = ft::hand_file("hand16");
  s.object_dir = ft::data_dir() / "objects";
  s.config_file = fast_config(tmp.path);
  s.out_path = tmp.path / "syn.jsonl";
  s.n = 4;
  s.seed = 11;
  s.objects = {"cylinder"};
  s.scale_values = {0.15, 0.25};
  std::ostringstream out, err;
  REQUIRE(cmd_synthesize(s, out, err) == kExitOk);
  const Dataset d = read_dataset(s.out_path);
  CHECK(d.records.size() == 8);
  CHECK(d.header.hand_id == "hand16");
  for (const GraspRecord& r : d.records) {
    CHECK(r.provenance == Provenance::kSynthesized);
    CHECK((r.scale == doctest::Approx(0.15) || r.scale == doctest::Approx(0.25)));
  }

  // Same seed, same bytes.
  SynthesizeOptions again = s;
  again.out_path = tmp.path / "syn2.jsonl";
  REQUIRE(cmd_synthesize(again, out, err) == kExitOk);
  CHECK(slurp(s.out_path) == slurp(again.out_path));

  // Default scale count comes from the config.
  SynthesizeOptions counted = s;
  counted.scale_values.clear();
  counted.scale_count = 3;
  counted.n = 1;
  counted.out_path = tmp.path / "syn3.jsonl";
  REQUIRE(cmd_synthesize(counted, out, err) == kExitOk);
  CHECK(read_dataset(counted.out_path).records.size() == 3);

  // Filtering with loose thresholds keeps everything unchanged.
  FilterOptions loose{s.out_path, tmp.path / "all.jsonl", {}, std::array<double, 4>{1, 1, 1, 1}};
  REQUIRE(cmd_filter(loose, out, err) == kExitOk);
  CHECK(slurp(loose.out_path) == slurp(s.out_path));

  std::ostringstream eval_out;
  REQUIRE(cmd_eval({s.out_path}, eval_out, err) == kExitOk);
  CHECK(eval_out.str().find("category,n,d_G_cm,d_F_cm,d_IP_cm,d_SP_cm,wrench_rate") != std::string::npos);
  CHECK(eval_out.str().find("cylinder,8,") != std::string::npos);

  SynthesizeOptions missing = s;
  missing.hand_file = tmp.path / "nope.json";
  CHECK(cmd_synthesize(missing, out, err) == kExitError);
}

TEST_CASE("filter rejects d_F above threshold") {
  TempDir tmp("funcgrasp_filter");
  write_dataset(tmp.path / "in.jsonl", {1, "hand16", "", ""}, {sample_record(0.001), sample_record(0.003)});
  std::ostringstream out, err;
  REQUIRE(cmd_filter({tmp.path / "in.jsonl", tmp.path / "out.jsonl", {}, {}}, out, err) == kExitOk);
  const Dataset kept = read_dataset(tmp.path / "out.jsonl");
  REQUIRE(kept.records.size() == 1);
  CHECK(kept.records[0].metrics.d_f == 0.001);
  CHECK(out.str().find("d_F") != std::string::npos);

  std::ofstream(tmp.path / "empty.jsonl").close();
  REQUIRE(cmd_filter({tmp.path / "empty.jsonl", tmp.path / "empty_out.jsonl", {}, {}}, out, err) == kExitOk);
  CHECK(slurp(tmp.path / "empty_out.jsonl").empty());
  CHECK(cmd_eval({tmp.path / "empty.jsonl"}, out, err) == kExitError);
}

TEST_CASE("eval of a single record reports its metrics") {
  TempDir tmp("funcgrasp_eval");
  GraspRecord r = sample_record(0.016734);
  write_dataset(tmp.path / "in.jsonl", {1, "hand16", "", ""}, {r});
  std::ostringstream out, err;
  REQUIRE(cmd_eval({tmp.path / "in.jsonl"}, out, err) == kExitOk);
  CHECK(out.str().find("cylinder,1," + format_cm(r.metrics.d_g) + ",1.673,") != std::string::npos);
}

TEST_CASE("export writes posed geometry") {
  TempDir tmp("funcgrasp_export");
  const HandModel hand = load_hand(ft::hand_file("hand16"));
  const AffordanceObject obj = load_object(ft::object_file("cylinder"));
  GraspRecord r = sample_record(0.001);
  r.config = axis_align_init(hand, obj, {Part::kIndex, {}}, OptimizerSettings{});
  r.scale = obj.scale;
  DatasetHeader h{1, "hand16", ft::hand_file("hand16").string(), (ft::data_dir() / "objects").string()};
  write_dataset(tmp.path / "in.jsonl", h, {r});

  std::ostringstream out, err;
  REQUIRE(cmd_export({tmp.path / "in.jsonl", 0, tmp.path / "ply", {}, {}}, out, err) == kExitOk);
  CHECK(cmd_export({tmp.path / "in.jsonl", 1, tmp.path / "ply", {}, {}}, out, err) == kExitError);
  for (const char* f : {"object_mesh.ply", "object_points.ply", "hand.ply"}) {
    const std::string text = slurp(tmp.path / "ply" / f);
    INFO(f);
    CHECK(text.rfind("ply\nformat ascii 1.0\n", 0) == 0);
    CHECK(text.find("end_header\n") != std::string::npos);
  }

  // Every exported hand vertex lies on the surface of an FK-posed primitive.
  const TriangleMesh hand_mesh = load_ply(tmp.path / "ply" / "hand.ply");
  const auto prims = posed_primitives(hand, forward_kinematics(hand, r.config));
  REQUIRE(!hand_mesh.vertices.empty());
  for (const Vec3& v : hand_mesh.vertices) {
    double best = INFINITY;
    for (const PosedPrimitive& p : prims) best = std::min(best, std::abs(primitive_signed_distance(p.shape, v).distance));
    CHECK(best <= 1e-6);
  }

  const ColoredMesh cloud = object_point_cloud(obj);
  REQUIRE(cloud.colors.size() == obj.surface.size());
  std::vector<bool> in_f(obj.surface.size()), in_g(obj.surface.size());
  for (int i : obj.functional_part) in_f[i] = true;
  for (int i : obj.grasping_part) in_g[i] = true;
  for (std::size_t i = 0; i < cloud.colors.size(); ++i) {
    const Rgb expect = in_f[i] ? kFunctionalColor : in_g[i] ? kGraspingColor : kUnlabeledColor;
    CHECK(cloud.colors[i] == expect);
  }
}

TEST_CASE("train and sample round trip") {
  TempDir tmp("funcgrasp_train");
  PipelineConfig c = default_config();
  c.optimizer.max_steps = 20;
  c.network.point_widths = {8, 16};
  c.network.encoder_widths = {16};
  c.network.decoder_widths = {16};
  c.network.latent_dim = 4;
  c.network.n_points = 32;
  c.training.epochs = 3;
  c.training.latent_dim = 4;
  std::ofstream(tmp.path / "cfg.json") << config_to_json(c);

  SynthesizeOptions s;
  s.hand_file = ft::hand_file("hand16");
  s.object_dir = ft::data_dir() / "objects";
  s.config_file = tmp.path / "cfg.json";
  s.out_path = tmp.path / "syn.jsonl";
  s.n = 2;
  s.objects = {"cylinder"};
  s.scale_values = {0.2};
  std::ostringstream out, err;
  REQUIRE(cmd_synthesize(s, out, err) == kExitOk);

  TrainOptions t{s.out_path, s.hand_file, s.config_file, tmp.path / "net.bin", {}, {}};
  REQUIRE(cmd_train(t, out, err) == kExitOk);
  CHECK(fs::exists(tmp.path / "net.bin"));
  const std::string curve = slurp(tmp.path / "net.bin.loss.csv");
  CHECK(curve.rfind("epoch,loss,rec,kld\n", 0) == 0);

  SampleOptions sa;
  sa.checkpoint = tmp.path / "net.bin";
  sa.object_file = ft::object_file("cylinder");
  sa.hand_file = s.hand_file;
  sa.out_path = tmp.path / "sampled.jsonl";
  sa.config_file = s.config_file;
  sa.n = 4;
  sa.seed = 3;
  REQUIRE(cmd_sample(sa, out, err) == kExitOk);
  const Dataset d = read_dataset(sa.out_path);
  REQUIRE(d.records.size() == 4);
  for (const GraspRecord& r : d.records) CHECK(r.provenance == Provenance::kSampled);
  CHECK(cmd_eval({sa.out_path}, out, err) == kExitOk);

  SampleOptions again = sa;
  again.out_path = tmp.path / "sampled2.jsonl";
  REQUIRE(cmd_sample(again, out, err) == kExitOk);
  CHECK(slurp(sa.out_path) == slurp(again.out_path));

  SampleOptions other_hand = sa;
  other_hand.hand_file = ft::hand_file("hand22");
  CHECK(cmd_sample(other_hand, out, err) == kExitError);
}
