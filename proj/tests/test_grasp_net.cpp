#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "funcgrasp/autodiff.hpp"
#include "funcgrasp/grasp_net.hpp"
#include "funcgrasp/synthesis.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace funcgrasp;
namespace ft = funcgrasp::testing;

namespace {

NetConfig tiny_config() {
  NetConfig c;
  c.point_widths = {8, 16};
  c.encoder_widths = {16};
  c.decoder_widths = {16};
  c.latent_dim = 4;
  c.n_points = 32;
  return c;
}

void randomize(GraspNet& net, std::uint64_t seed, double scale = 0.3) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, scale);
  for (auto& w : net.weights()) {
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = g(rng);
  }
}

Eigen::VectorXd random_vector(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = g(rng);
  return v;
}

// Central-difference check of d(sum(f(x) .* weights))/dx for a tape op.
double op_gradient_error(const std::function<ad::Var(ad::Tape&, ad::Var)>& f, const Eigen::MatrixXd& x0,
                         std::uint64_t seed) {
  ad::Tape probe;
  const Eigen::MatrixXd shape = f(probe, probe.constant(x0)).value();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd w(shape.rows(), shape.cols());
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = g(rng);

  auto value = [&](const Eigen::MatrixXd& x) {
    ad::Tape t;
    return f(t, t.constant(x)).value().cwiseProduct(w).sum();
  };
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(x0.rows(), x0.cols());
  ad::Tape t;
  const ad::Var x = t.parameter(x0, &grad);
  const ad::Var out = ad::sum(ad::mul(f(t, x), t.constant(w)));
  t.backward(out);

  Eigen::MatrixXd fd(x0.rows(), x0.cols());
  const double h = 1e-6;
  for (Eigen::Index i = 0; i < x0.size(); ++i) {
    Eigen::MatrixXd xp = x0, xm = x0;
    xp.data()[i] += h;
    xm.data()[i] -= h;
    fd.data()[i] = (value(xp) - value(xm)) / (2 * h);
  }
  return (grad - fd).norm() / std::max(fd.norm(), 1e-12);
}

}  // namespace

TEST_CASE("KLD examples") {
  CHECK(std::abs(loss_kld({Eigen::VectorXd::Zero(4), Eigen::VectorXd::Ones(4)})) <= 1e-12);
  CHECK(std::abs(loss_kld({Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1)}) - 0.5) <= 1e-9);
  const double expect = 0.5 * (4.0 - std::log(4.0) - 1.0);
  CHECK(std::abs(loss_kld({Eigen::VectorXd::Zero(1), Eigen::VectorXd::Constant(1, 2.0)}) - expect) <= 1e-9);
  CHECK(expect == doctest::Approx(0.8069).epsilon(1e-4));

  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> u(0.1, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    LatentDistribution d{random_vector(rng, 5), Eigen::VectorXd(5)};
    for (int i = 0; i < 5; ++i) d.sigma[i] = u(rng);
    const std::vector<double> mu(d.mu.data(), d.mu.data() + 5), sigma(d.sigma.data(), d.sigma.data() + 5);
    CHECK(loss_kld(d) == doctest::Approx(oracle::kld(mu, sigma)).epsilon(1e-12));
    CHECK(loss_kld(d) > 0.0);
  }
}

TEST_CASE("reparameterize") {
  std::mt19937_64 rng(67);
  const Eigen::VectorXd mu = random_vector(rng, 6), noise = random_vector(rng, 6);
  const Eigen::VectorXd sigma = random_vector(rng, 6).cwiseAbs();
  CHECK(reparameterize({mu, sigma}, Eigen::VectorXd::Zero(6)) == mu);
  CHECK((reparameterize({mu, sigma}, noise) - (mu + sigma.cwiseProduct(noise))).norm() <= 1e-15);
  CHECK(reparameterize({Eigen::VectorXd::Zero(6), Eigen::VectorXd::Ones(6)}, noise) == noise);
  CHECK((reparameterize({mu, Eigen::VectorXd::Zero(6)}, noise) - mu).norm() <= 1e-5);
  CHECK_THROWS_AS(reparameterize({mu, sigma}, Eigen::VectorXd::Zero(5)), std::invalid_argument);
}

TEST_CASE("tape op gradients") {
  std::mt19937_64 rng(71);
  Eigen::MatrixXd a(1, 6);
  a << 0.9, 0.2, -0.1, 0.3, 1.1, 0.4;
  CHECK(op_gradient_error([](ad::Tape&, ad::Var x) { return ad::gram_schmidt(x); }, a, 1) <= 1e-6);
  Eigen::MatrixXd m = Eigen::MatrixXd::Random(5, 3);
  CHECK(op_gradient_error([](ad::Tape&, ad::Var x) { return ad::sigmoid(x); }, m, 2) <= 1e-6);
  CHECK(op_gradient_error([](ad::Tape&, ad::Var x) { return ad::max_rows(x); }, m, 3) <= 1e-6);
  CHECK(op_gradient_error([](ad::Tape&, ad::Var x) { return ad::exp(x); }, m, 4) <= 1e-6);
  const Eigen::MatrixXd w = Eigen::MatrixXd::Random(3, 4), b = Eigen::MatrixXd::Random(1, 4);
  CHECK(op_gradient_error([&](ad::Tape& t, ad::Var x) { return ad::relu(ad::affine(x, t.constant(w), t.constant(b))); },
                          m, 5) <= 1e-6);

  ad::Tape t;
  const Eigen::MatrixXd r = ad::gram_schmidt(t.constant(a)).value();
  CHECK((r.transpose() * r - Eigen::Matrix3d::Identity()).norm() <= 1e-12);
  CHECK(r.determinant() == doctest::Approx(1.0));
}

TEST_CASE("encoder") {
  const HandModel hand = load_hand(ft::hand_file("hand16"));
  const AffordanceObject obj = load_object(ft::object_file("cylinder"));
  GraspNet net(hand, tiny_config(), 5);
  const ObjectInput in = make_object_input(obj, 32, 9);
  CHECK(in.features.rows() == 32);
  CHECK(in.features.cols() == 6);
  const GraspConfiguration g = axis_align_init(hand, obj, {Part::kIndex, {}}, OptimizerSettings{});

  // Freshly built heads are zero.
  const LatentDistribution d0 = net.encode(in, g);
  CHECK(d0.mu.size() == 4);
  CHECK(d0.mu.norm() == 0.0);
  CHECK((d0.sigma - Eigen::VectorXd::Ones(4)).norm() == 0.0);

  randomize(net, 13);
  const LatentDistribution d = net.encode(in, g);
  ObjectInput shuffled = in;
  std::mt19937_64 rng(3);
  std::vector<int> perm(32);
  for (int i = 0; i < 32; ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), rng);
  for (int i = 0; i < 32; ++i) shuffled.features.row(i) = in.features.row(perm[i]);
  const LatentDistribution ds = net.encode(shuffled, g);
  CHECK((d.mu - ds.mu).cwiseAbs().maxCoeff() <= 1e-6);
  CHECK((d.sigma - ds.sigma).cwiseAbs().maxCoeff() <= 1e-6);
  CHECK(d.sigma.minCoeff() > 0.0);

  GraspConfiguration other = g;
  other.joint_angles[3] += 0.2;
  CHECK((net.encode(in, other).mu - d.mu).norm() > 1e-9);

  ObjectInput wrong = in;
  wrong.features.conservativeResize(32, 5);
  CHECK_THROWS_AS(net.encode(wrong, g), std::invalid_argument);
}

TEST_CASE("decoder contracts") {
  const HandModel hand = load_hand(ft::hand_file("hand22"));
  const AffordanceObject obj = load_object(ft::object_file("drill"));
  GraspNet net(hand, tiny_config(), 7);
  randomize(net, 17, 2.0);  // large weights push the joint head into saturation
  const ObjectInput in = make_object_input(obj, 32, 1);
  const Eigen::RowVectorXd emb = net.embed(in);
  std::mt19937_64 rng(73);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::VectorXd z = 3.0 * random_vector(rng, 4);
    const GraspConfiguration c = net.decode(z, emb, in.origin);
    const Mat3 r = c.rotation.toRotationMatrix();
    CHECK((r.transpose() * r - Mat3::Identity()).norm() <= 1e-5);
    CHECK(hand.within_limits(c));
    const GraspConfiguration again = net.decode(z, emb, in.origin);
    CHECK(again.joint_angles == c.joint_angles);
    CHECK(again.translation == c.translation);
  }
}

TEST_CASE("output_for inverts the decoder head") {
  const HandModel hand = load_hand(ft::hand_file("hand16"));
  const AffordanceObject obj = load_object(ft::object_file("cylinder"));
  const GraspNet net(hand, tiny_config(), 1);
  GraspConfiguration g = axis_align_init(hand, obj, {Part::kIndex, {}}, OptimizerSettings{});
  for (int j = 0; j < hand.dof(); ++j) {
    g.joint_angles[j] = hand.joints[j].lower + 0.3 * (hand.joints[j].upper - hand.joints[j].lower);
  }
  const Vec3 origin = obj.centroid();
  const GraspConfiguration back = net.to_config(net.output_for(g, origin), origin);
  CHECK((back.translation - g.translation).norm() <= 1e-12);
  CHECK((back.rotation.toRotationMatrix() - g.rotation.toRotationMatrix()).norm() <= 1e-12);
  CHECK((back.joint_angles - g.joint_angles).norm() <= 1e-10);
}

TEST_CASE("reconstruction loss") {
  const HandModel hand = load_hand(ft::hand_file("hand16"));
  const AffordanceObject obj = load_object(ft::object_file("cylinder"));
  const GraspConfiguration g = axis_align_init(hand, obj, {Part::kIndex, {}}, OptimizerSettings{});
  CHECK(loss_rec(g, g, hand) == 0.0);

  GraspConfiguration shifted = g;
  const Vec3 t(3e-5, -2e-5, 1e-5);
  shifted.translation += t;
  // Shifts below the point spacing keep every nearest neighbour: CD = 2 |t|^2.
  CHECK(loss_rec(shifted, g, hand) == doctest::Approx(2.0 * t.squaredNorm()).epsilon(1e-6));
  GraspConfiguration twice = g;
  twice.translation += 2.0 * t;
  CHECK(loss_rec(twice, g, hand) == doctest::Approx(4.0 * loss_rec(shifted, g, hand)).epsilon(1e-6));

  GraspConfiguration bent = g;
  bent.joint_angles[5] += 0.3;
  bent.translation += Vec3(0.01, 0, 0);
  CHECK(loss_rec(bent, g, hand) ==
        doctest::Approx(oracle::chamfer(hand_surface_points(hand, bent).points, hand_surface_points(hand, g).points))
            .epsilon(1e-12));
}

TEST_CASE("decoder parameter gradients match finite differences") {
  const HandModel hand = load_hand(ft::hand_file("hand16"));
  const AffordanceObject obj = load_object(ft::object_file("cylinder"));
  GraspNet net(hand, tiny_config(), 19);
  randomize(net, 23, 0.2);
  const ObjectInput in = make_object_input(obj, 32, 4);
  const GraspConfiguration gt = axis_align_init(hand, obj, {Part::kIndex, {}}, OptimizerSettings{});
  const std::vector<Vec3> target = hand_surface_points(hand, gt).points;
  std::mt19937_64 rng(79);
  const Eigen::VectorXd z = random_vector(rng, 4);

  auto rec_value = [&](const GraspNet& n) {
    return loss_rec(n.decode(z, n.embed(in), in.origin), gt, hand);
  };
  std::vector<Eigen::MatrixXd> grads;
  for (const auto& w : net.weights()) grads.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
  {
    ad::Tape tape;
    const GraspNet::Params p = net.bind(tape, &grads);
    const ad::Var emb = net.embed(tape, p, in);
    const ad::Var out = net.decode(tape, p, tape.constant(z.transpose()), emb);
    const DecodedGrasp dg = split_decoded(tape, net, out, in.origin);
    const ad::Var pts = hand_points(tape, hand, dg.translation, dg.rotation, dg.joints);
    const ad::Var loss = chamfer(tape, pts, target);
    CHECK(loss.value()(0, 0) == doctest::Approx(rec_value(net)).epsilon(1e-9));
    tape.backward(loss);
  }

  std::vector<double> analytic, numeric;
  const double h = 1e-6;
  for (std::size_t k = 0; k < net.weights().size(); ++k) {
    const std::string& name = net.weight_names()[k];
    if (name.rfind("decoder", 0) != 0 && name.rfind("out", 0) != 0) continue;
    std::uniform_int_distribution<Eigen::Index> pick(0, net.weights()[k].size() - 1);
    for (int s = 0; s < 6; ++s) {
      const Eigen::Index i = pick(rng);
      GraspNet plus = net, minus = net;
      plus.weights()[k].data()[i] += h;
      minus.weights()[k].data()[i] -= h;
      numeric.push_back((rec_value(plus) - rec_value(minus)) / (2 * h));
      analytic.push_back(grads[k].data()[i]);
    }
  }
  const Eigen::Map<Eigen::VectorXd> a(analytic.data(), analytic.size()), n(numeric.data(), numeric.size());
  CHECK(n.norm() > 0.0);
  CHECK((a - n).norm() / n.norm() <= 1e-3);
}

TEST_CASE("zero KLD weight removes the KLD gradient") {
  const HandModel hand = load_hand(ft::hand_file("hand16"));
  const AffordanceObject obj = load_object(ft::object_file("cylinder"));
  GraspNet net(hand, tiny_config(), 29);
  randomize(net, 31, 0.2);
  const ObjectInput in = make_object_input(obj, 32, 2);
  const GraspConfiguration gt = axis_align_init(hand, obj, {Part::kIndex, {}}, OptimizerSettings{});
  const std::vector<Vec3> target = hand_surface_points(hand, gt).points;
  std::mt19937_64 rng(83);
  const Eigen::VectorXd noise = random_vector(rng, 4);

  auto encoder_grad_norm = [&](double beta, bool with_kld) {
    std::vector<Eigen::MatrixXd> grads;
    for (const auto& w : net.weights()) grads.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
    ad::Tape tape;
    const GraspNet::Params p = net.bind(tape, &grads);
    const ad::Var emb = net.embed(tape, p, in);
    const auto [mu, log_sigma] = net.encode(tape, p, emb, net.grasp_vector(gt, in.origin));
    const ad::Var sigma = ad::exp(log_sigma);
    const ad::Var z = ad::add(mu, ad::mul(sigma, tape.constant(noise.transpose())));
    const DecodedGrasp dg = split_decoded(tape, net, net.decode(tape, p, z, emb), in.origin);
    ad::Var loss = chamfer(tape, hand_points(tape, hand, dg.translation, dg.rotation, dg.joints), target);
    if (with_kld) {
      const ad::Var kld = ad::sum(ad::sub(ad::add(ad::square(mu), ad::square(sigma)), ad::scale(log_sigma, 2.0)));
      loss = ad::add(loss, ad::scale(kld, 0.5 * beta));
    }
    tape.backward(loss);
    double total = 0.0;
    for (std::size_t k = 0; k < grads.size(); ++k) {
      if (net.weight_names()[k].rfind("mu", 0) == 0 || net.weight_names()[k].rfind("log_sigma", 0) == 0) {
        total += grads[k].squaredNorm();
      }
    }
    return std::sqrt(total);
  };
  const double rec_only = encoder_grad_norm(0.0, false);
  CHECK(encoder_grad_norm(0.0, true) == rec_only);
  CHECK(std::abs(encoder_grad_norm(1.0, true) - rec_only) > 1e-6 * rec_only);
}

TEST_CASE("training") {
  const HandModel hand = load_hand(ft::hand_file("hand16"));
  const AffordanceObject obj = load_object(ft::object_file("cylinder"));
  const auto input = std::make_shared<const ObjectInput>(make_object_input(obj, 32, 3));
  const GraspConfiguration g = axis_align_init(hand, obj, {Part::kIndex, {}}, OptimizerSettings{});
  const std::vector<TrainingExample> data{{input, g, hand.id}};
  TrainSettings s;
  s.epochs = 100;
  s.batch_size = 1;
  s.latent_dim = 4;
  s.seed = 5;

  SUBCASE("single-example overfit") {
    GraspNet net(hand, tiny_config(), 37);
    const auto curve = train(net, data, hand, s);
    REQUIRE(curve.size() == 100);
    for (const EpochStats& e : curve) CHECK(std::isfinite(e.loss));
    const Eigen::VectorXd z = Eigen::VectorXd::Zero(4);
    CHECK(loss_rec(net.decode(z, net.embed(*input), input->origin), g, hand) < 1e-4);
  }
  SUBCASE("reproducible") {
    GraspNet a(hand, tiny_config(), 37), b(hand, tiny_config(), 37);
    s.epochs = 5;
    const auto ca = train(a, data, hand, s);
    const auto cb = train(b, data, hand, s);
    for (std::size_t e = 0; e < ca.size(); ++e) CHECK(ca[e].loss == cb[e].loss);
    for (std::size_t k = 0; k < a.weights().size(); ++k) CHECK(a.weights()[k] == b.weights()[k]);
  }
  SUBCASE("zero KLD weight reports reconstruction only") {
    GraspNet net(hand, tiny_config(), 37);
    s.epochs = 3;
    s.kld_weight = 0.0;
    for (const EpochStats& e : train(net, data, hand, s)) CHECK(e.loss == e.rec);
  }
  SUBCASE("mixed hands are rejected") {
    GraspNet net(hand, tiny_config(), 37);
    std::vector<TrainingExample> mixed = data;
    mixed.push_back({input, g, "hand22"});
    CHECK_THROWS_AS(train(net, mixed, hand, s), std::invalid_argument);
  }
}

TEST_CASE("sampling") {
  const HandModel hand = load_hand(ft::hand_file("hand16"));
  const AffordanceObject obj = load_object(ft::object_file("spray_bottle"));
  GraspNet net(hand, tiny_config(), 41);
  randomize(net, 43, 0.3);
  const ObjectInput in = make_object_input(obj, 32, 6);
  CHECK(sample(net, in, 0, 1).empty());
  const auto a = sample(net, in, 5, 99);
  const auto b = sample(net, in, 5, 99);
  const auto c = sample(net, in, 5, 100);
  REQUIRE(a.size() == 5);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].joint_angles == b[i].joint_angles);
    CHECK(a[i].translation == b[i].translation);
    CHECK(hand.within_limits(a[i]));
  }
  CHECK(a[0].translation != c[0].translation);
  // Latent i depends only on (seed, i).
  const auto longer = sample(net, in, 8, 99);
  CHECK(longer[4].joint_angles == a[4].joint_angles);
}

TEST_CASE("checkpoint round trip") {
  const HandModel hand = load_hand(ft::hand_file("hand16"));
  GraspNet net(hand, tiny_config(), 47);
  randomize(net, 53);
  const auto dir = std::filesystem::temp_directory_path() / "funcgrasp_ckpt_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "net.bin";
  net.save(path);
  const GraspNet back = GraspNet::load(path);
  CHECK(back.hand_id() == "hand16");
  CHECK(back.config().point_widths == net.config().point_widths);
  CHECK(back.config().latent_dim == 4);
  CHECK(back.lower() == net.lower());
  REQUIRE(back.weights().size() == net.weights().size());
  for (std::size_t k = 0; k < net.weights().size(); ++k) {
    CHECK(back.weight_names()[k] == net.weight_names()[k]);
    CHECK(back.weights()[k] == net.weights()[k].cast<float>().cast<double>());
  }

  std::string bytes;
  {
    std::ifstream in(path, std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(in), {});
  }
  auto write = [&](const std::string& content) {
    std::ofstream out(dir / "bad.bin", std::ios::binary);
    out << content;
  };
  std::string bumped = bytes;
  bumped[8] = static_cast<char>(kCheckpointSchemaVersion + 1);
  write(bumped);
  CHECK_THROWS_AS(GraspNet::load(dir / "bad.bin"), CheckpointError);
  write(bytes.substr(0, bytes.size() / 2));
  CHECK_THROWS_AS(GraspNet::load(dir / "bad.bin"), CheckpointError);
  std::string magic = bytes;
  magic[0] = 'X';
  write(magic);
  CHECK_THROWS_AS(GraspNet::load(dir / "bad.bin"), CheckpointError);
  CHECK_THROWS_AS(GraspNet::load(dir / "missing.bin"), CheckpointError);
  std::filesystem::remove_all(dir);
}
