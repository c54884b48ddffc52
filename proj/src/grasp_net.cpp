#include "funcgrasp/grasp_net.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numbers>
#include <random>

#include <Eigen/Geometry>
#include <Eigen/SVD>
#include <json.hpp>

#include "funcgrasp/synthesis.hpp"

namespace funcgrasp {

namespace {

using ad::Tape;
using ad::Var;
using Eigen::MatrixXd;

// Network-side translation unit (m). Keeps translation outputs on the same
// order as the rotation and joint outputs.
constexpr double kTranslationUnit = 0.1;

constexpr char kMagic[8] = {'F', 'G', 'C', 'V', 'A', 'E', '\0', '\0'};

// Portable draws from a 64-bit engine, so weights and noise depend only on
// the seed and not on the standard library's distribution code.
double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double standard_normal(std::mt19937_64& rng) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Eigen::VectorXd normal_vector(std::mt19937_64& rng, int n) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = standard_normal(rng);
  return v;
}

std::vector<Vec3> rows_to_points(const MatrixXd& m) {
  std::vector<Vec3> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) out[i] = m.row(i).transpose();
  return out;
}

}  // namespace

void NetConfig::validate() const {
  if (point_widths.empty()) throw std::invalid_argument("point_widths must not be empty");
  for (const auto* widths : {&point_widths, &encoder_widths, &decoder_widths}) {
    for (int w : *widths) {
      if (w < 1) throw std::invalid_argument("layer widths must be >= 1");
    }
  }
  if (latent_dim < 1) throw std::invalid_argument("latent_dim must be >= 1");
  if (n_points < 1) throw std::invalid_argument("n_points must be >= 1");
  if (extra_channels < 0) throw std::invalid_argument("extra_channels must be >= 0");
}

void TrainSettings::validate() const {
  if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (!(step_size > 0.0)) throw std::invalid_argument("step_size must be positive");
  if (!(kld_weight >= 0.0)) throw std::invalid_argument("kld weight must be >= 0");
  if (latent_dim < 1) throw std::invalid_argument("latent_dim must be >= 1");
}

double loss_kld(const LatentDistribution& dist) {
  if (dist.mu.size() != dist.sigma.size()) throw std::invalid_argument("mu and sigma lengths differ");
  double total = 0.0;
  for (Eigen::Index i = 0; i < dist.mu.size(); ++i) {
    const double s2 = dist.sigma[i] * dist.sigma[i];
    total += dist.mu[i] * dist.mu[i] + s2 - std::log(s2) - 1.0;
  }
  return 0.5 * total;
}

Eigen::VectorXd reparameterize(const LatentDistribution& dist, const Eigen::VectorXd& noise) {
  if (noise.size() != dist.mu.size() || dist.sigma.size() != dist.mu.size()) {
    throw std::invalid_argument("noise length must equal the latent size");
  }
  return dist.mu + dist.sigma.cwiseMax(kMinSigma).cwiseProduct(noise);
}

ObjectInput make_object_input(const AffordanceObject& obj, int n_points, std::uint64_t seed) {
  if (n_points < 1) throw std::invalid_argument("n_points must be >= 1");
  const PointCloud& cloud = obj.surface;
  if (cloud.empty() || !cloud.has_normals()) throw std::invalid_argument("object cloud needs points and normals");
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> idx;
  const std::size_t n = static_cast<std::size_t>(n_points);
  if (cloud.size() >= n) {
    std::vector<std::size_t> all(cloud.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(uniform01(rng) * static_cast<double>(all.size() - i));
      std::swap(all[i], all[std::min(j, all.size() - 1)]);
    }
    idx.assign(all.begin(), all.begin() + static_cast<long>(n));
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      idx.push_back(std::min(cloud.size() - 1, static_cast<std::size_t>(uniform01(rng) * cloud.size())));
    }
  }
  ObjectInput out;
  out.origin = obj.centroid();
  out.features.resize(n_points, 6);
  for (std::size_t i = 0; i < n; ++i) {
    out.features.block<1, 3>(i, 0) = (cloud.points[idx[i]] - out.origin).transpose();
    out.features.block<1, 3>(i, 3) = cloud.normals[idx[i]].transpose();
  }
  return out;
}

double loss_rec(const GraspConfiguration& predicted, const GraspConfiguration& ground_truth,
                const HandModel& hand) {
  return chamfer_distance(hand_surface_points(hand, predicted).points,
                          hand_surface_points(hand, ground_truth).points);
}

// ---------------------------------------------------------------------------
// Tape nodes for the hand

Var hand_points(Tape& tape, const HandModel& hand, Var translation, Var rotation, Var joints) {
  if (translation.rows() != 1 || translation.cols() != 3) throw std::invalid_argument("translation must be 1x3");
  if (rotation.rows() != 3 || rotation.cols() != 3) throw std::invalid_argument("rotation must be 3x3");
  if (joints.rows() != 1 || joints.cols() != hand.dof()) throw std::invalid_argument("joints must be 1 x dof");
  GraspConfiguration cfg;
  cfg.translation = translation.value().row(0).transpose();
  const Mat3 r = rotation.value();
  cfg.rotation = Eigen::Quaterniond(r).normalized();
  cfg.joint_angles = joints.value().row(0).transpose();
  auto fk = std::make_shared<FkResult>(forward_kinematics(hand, cfg));
  const auto pts = hand_surface_points(hand, *fk);
  MatrixXd value(static_cast<Eigen::Index>(pts.size()), 3);
  for (std::size_t i = 0; i < pts.size(); ++i) value.row(i) = pts[i].transpose();
  return tape.record(std::move(value), [&hand, translation, rotation, joints, fk](Tape& t, int self) {
    const MatrixXd& g = t.grad(self);
    const MatrixXd& x = t.value(self);
    const Vec3 origin = translation.value().row(0).transpose();
    const Mat3 r = rotation.value();
    const auto& owners = hand.surface_point_links();
    Eigen::RowVector3d gt = Eigen::RowVector3d::Zero();
    Mat3 gr = Mat3::Zero();
    MatrixXd& gq = t.grad(joints.id);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const Vec3 gi = g.row(i).transpose();
      if (gi.isZero(0.0)) continue;
      const Vec3 xi = x.row(i).transpose();
      gt += gi.transpose();
      gr += gi * (r.transpose() * (xi - origin)).transpose();
      for (int j : hand.ancestor_joints(owners[i])) {
        gq(0, j) += fk->joint_axes[j].cross(xi - fk->joint_origins[j]).dot(gi);
      }
    }
    t.grad(translation.id) += gt;
    t.grad(rotation.id) += gr;
  });
}

Var chamfer(Tape& tape, Var points, const std::vector<Vec3>& target) {
  const auto p = rows_to_points(points.value());
  auto cr = std::make_shared<ChamferResult>(chamfer_with_correspondences(p, target));
  MatrixXd value(1, 1);
  value(0, 0) = cr->value;
  return tape.record(std::move(value), [points, &target, cr](Tape& t, int self) {
    const double up = t.grad(self)(0, 0);
    const MatrixXd& pv = points.value();
    MatrixXd& gp = t.grad(points.id);
    const double wp = 2.0 * up / static_cast<double>(pv.rows());
    const double wq = 2.0 * up / static_cast<double>(target.size());
    for (Eigen::Index i = 0; i < pv.rows(); ++i) {
      gp.row(i) += wp * (pv.row(i) - target[cr->nearest_in_q[i]].transpose());
    }
    for (std::size_t j = 0; j < target.size(); ++j) {
      const int i = cr->nearest_in_p[j];
      gp.row(i) += wq * (pv.row(i) - target[j].transpose());
    }
  });
}

// ---------------------------------------------------------------------------
// Network

int GraspNet::add_layer(const std::string& name, int in, int out, double init_scale, std::uint64_t& rng_state) {
  std::mt19937_64 rng(rng_state);
  rng_state = rng();
  const double bound = init_scale * std::sqrt(6.0 / in);
  MatrixXd w(in, out);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = bound * (2.0 * uniform01(rng) - 1.0);
  weights_.push_back(std::move(w));
  names_.push_back(name + ".weight");
  weights_.push_back(MatrixXd::Zero(1, out));
  names_.push_back(name + ".bias");
  return static_cast<int>(weights_.size()) - 2;
}

void GraspNet::build(std::uint64_t seed) {
  config_.validate();
  weights_.clear();
  names_.clear();
  point_layers_.clear();
  encoder_layers_.clear();
  decoder_layers_.clear();
  std::uint64_t state = seed;

  int in = config_.point_channels();
  for (std::size_t k = 0; k < config_.point_widths.size(); ++k) {
    point_layers_.push_back(add_layer("point" + std::to_string(k), in, config_.point_widths[k], 1.0, state));
    in = config_.point_widths[k];
  }
  const int emb = config_.embedding_size();

  in = emb + grasp_size();
  for (std::size_t k = 0; k < config_.encoder_widths.size(); ++k) {
    encoder_layers_.push_back(add_layer("encoder" + std::to_string(k), in, config_.encoder_widths[k], 1.0, state));
    in = config_.encoder_widths[k];
  }
  mu_head_ = add_layer("mu", in, config_.latent_dim, 0.0, state);
  log_sigma_head_ = add_layer("log_sigma", in, config_.latent_dim, 0.0, state);

  in = config_.latent_dim + emb;
  for (std::size_t k = 0; k < config_.decoder_widths.size(); ++k) {
    decoder_layers_.push_back(add_layer("decoder" + std::to_string(k), in, config_.decoder_widths[k], 1.0, state));
    in = config_.decoder_widths[k];
  }
  out_head_ = add_layer("out", in, grasp_size(), 0.01, state);
  // Start the rotation head at the identity's first two columns.
  MatrixXd& bias = weights_[out_head_ + 1];
  bias(0, 3) = 1.0;
  bias(0, 7) = 1.0;
}

GraspNet::GraspNet(const HandModel& hand, NetConfig config, std::uint64_t seed) : config_(std::move(config)) {
  hand_id_ = hand.id;
  lower_.resize(hand.dof());
  upper_.resize(hand.dof());
  for (int j = 0; j < hand.dof(); ++j) {
    lower_[j] = hand.joints[j].lower;
    upper_[j] = hand.joints[j].upper;
  }
  build(seed);
}

GraspNet::Params GraspNet::bind(Tape& tape, std::vector<MatrixXd>* grads) const {
  Params p;
  p.vars.reserve(weights_.size());
  for (std::size_t k = 0; k < weights_.size(); ++k) {
    p.vars.push_back(grads ? tape.parameter(weights_[k], &(*grads)[k]) : tape.constant(weights_[k]));
  }
  return p;
}

Var GraspNet::embed(Tape& tape, const Params& p, const ObjectInput& obj) const {
  if (obj.features.cols() != config_.point_channels()) {
    throw std::invalid_argument("object input has " + std::to_string(obj.features.cols()) + " channels, expected " +
                                std::to_string(config_.point_channels()));
  }
  if (obj.features.rows() != config_.n_points) {
    throw std::invalid_argument("object input has " + std::to_string(obj.features.rows()) + " points, expected " +
                                std::to_string(config_.n_points));
  }
  Var h = tape.constant(obj.features);
  for (int l : point_layers_) h = ad::relu(ad::affine(h, p.vars[l], p.vars[l + 1]));
  return ad::max_rows(h);
}

std::pair<Var, Var> GraspNet::encode(Tape& tape, const Params& p, Var embedding,
                                     const Eigen::RowVectorXd& grasp) const {
  if (grasp.size() != grasp_size()) throw std::invalid_argument("grasp vector has the wrong length");
  Var h = ad::concat_cols(embedding, tape.constant(grasp));
  for (int l : encoder_layers_) h = ad::relu(ad::affine(h, p.vars[l], p.vars[l + 1]));
  Var mu = ad::affine(h, p.vars[mu_head_], p.vars[mu_head_ + 1]);
  Var log_sigma = ad::affine(h, p.vars[log_sigma_head_], p.vars[log_sigma_head_ + 1]);
  return {mu, log_sigma};
}

Var GraspNet::decode(Tape&, const Params& p, Var z, Var embedding) const {
  if (z.rows() != 1 || z.cols() != config_.latent_dim) throw std::invalid_argument("latent has the wrong size");
  Var h = ad::concat_cols(z, embedding);
  for (int l : decoder_layers_) h = ad::relu(ad::affine(h, p.vars[l], p.vars[l + 1]));
  return ad::affine(h, p.vars[out_head_], p.vars[out_head_ + 1]);
}

Eigen::RowVectorXd GraspNet::grasp_vector(const GraspConfiguration& grasp, const Vec3& origin) const {
  if (grasp.joint_angles.size() != dof()) throw std::invalid_argument("grasp has the wrong number of joints");
  Eigen::RowVectorXd v(grasp_size());
  const Mat3 r = grasp.rotation.normalized().toRotationMatrix();
  v.segment<3>(0) = (grasp.translation - origin).transpose() / kTranslationUnit;
  v.segment<3>(3) = r.col(0).transpose();
  v.segment<3>(6) = r.col(1).transpose();
  for (int j = 0; j < dof(); ++j) {
    const double range = upper_[j] - lower_[j];
    v[9 + j] = range > 0.0 ? 2.0 * (grasp.joint_angles[j] - lower_[j]) / range - 1.0 : 0.0;
  }
  return v;
}

Eigen::RowVectorXd GraspNet::output_for(const GraspConfiguration& grasp, const Vec3& origin) const {
  Eigen::RowVectorXd v = grasp_vector(grasp, origin);
  for (int j = 0; j < dof(); ++j) {
    const double s = std::clamp(0.5 * (v[9 + j] + 1.0), 0.01, 0.99);
    v[9 + j] = std::log(s / (1.0 - s));
  }
  return v;
}

GraspConfiguration GraspNet::to_config(const Eigen::RowVectorXd& out, const Vec3& origin) const {
  Tape tape;
  const DecodedGrasp d = split_decoded(tape, *this, tape.constant(out), origin);
  GraspConfiguration cfg;
  cfg.translation = d.translation.value().row(0).transpose();
  const Mat3 r = d.rotation.value();
  cfg.rotation = Eigen::Quaterniond(r).normalized();
  cfg.joint_angles = d.joints.value().row(0).transpose();
  for (int j = 0; j < dof(); ++j) cfg.joint_angles[j] = std::clamp(cfg.joint_angles[j], lower_[j], upper_[j]);
  return cfg;
}

DecodedGrasp split_decoded(Tape& tape, const GraspNet& net, Var out, const Vec3& origin) {
  const int dof = net.dof();
  if (out.rows() != 1 || out.cols() != net.grasp_size()) throw std::invalid_argument("decoder output has the wrong size");
  MatrixXd o(1, 3);
  o.row(0) = origin.transpose();
  DecodedGrasp d;
  d.translation = ad::add(ad::scale(ad::slice_cols(out, 0, 3), kTranslationUnit), tape.constant(o));
  d.rotation = ad::gram_schmidt(ad::slice_cols(out, 3, 6));
  const MatrixXd lower = net.lower().transpose();
  const MatrixXd range = (net.upper() - net.lower()).transpose();
  d.joints = ad::add(tape.constant(lower), ad::mul(tape.constant(range), ad::sigmoid(ad::slice_cols(out, 9, dof))));
  return d;
}

Eigen::RowVectorXd GraspNet::embed(const ObjectInput& obj) const {
  Tape tape;
  const Params p = bind(tape, nullptr);
  return embed(tape, p, obj).value();
}

LatentDistribution GraspNet::encode(const ObjectInput& obj, const GraspConfiguration& grasp) const {
  Tape tape;
  const Params p = bind(tape, nullptr);
  const auto [mu, log_sigma] = encode(tape, p, embed(tape, p, obj), grasp_vector(grasp, obj.origin));
  LatentDistribution d;
  d.mu = mu.value().row(0).transpose();
  d.sigma = log_sigma.value().row(0).transpose().array().exp();
  return d;
}

GraspConfiguration GraspNet::decode(const Eigen::VectorXd& z, const Eigen::RowVectorXd& embedding,
                                    const Vec3& origin) const {
  if (embedding.size() != config_.embedding_size()) throw std::invalid_argument("embedding has the wrong size");
  Tape tape;
  const Params p = bind(tape, nullptr);
  const Var out = decode(tape, p, tape.constant(z.transpose()), tape.constant(embedding));
  return to_config(out.value(), origin);
}

// ---------------------------------------------------------------------------
// Training and sampling

std::vector<EpochStats> train(GraspNet& net, const std::vector<TrainingExample>& data, const HandModel& hand,
                              const TrainSettings& settings) {
  settings.validate();
  if (data.empty()) throw std::invalid_argument("training dataset is empty");
  if (net.hand_id() != hand.id) {
    throw std::invalid_argument("model was built for hand '" + net.hand_id() + "', not '" + hand.id + "'");
  }
  if (settings.latent_dim != net.config().latent_dim) {
    throw std::invalid_argument("train settings latent_dim does not match the model");
  }
  for (const TrainingExample& ex : data) {
    if (ex.hand_id != hand.id) {
      throw std::invalid_argument("mixed-hand dataset: record for hand '" + ex.hand_id + "', training hand '" +
                                  hand.id + "'");
    }
    if (!ex.object) throw std::invalid_argument("training example without an object");
  }

  std::vector<std::vector<Vec3>> targets;
  targets.reserve(data.size());
  for (const TrainingExample& ex : data) targets.push_back(hand_surface_points(hand, ex.config).points);

  auto& weights = net.weights();
  std::vector<MatrixXd> grads(weights.size()), m(weights.size()), v(weights.size());
  for (std::size_t k = 0; k < weights.size(); ++k) {
    m[k] = MatrixXd::Zero(weights[k].rows(), weights[k].cols());
    v[k] = m[k];
  }
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;

  if (settings.init_output_bias) {
    // Chordal mean of the rotations, plain means elsewhere.
    Mat3 rsum = Mat3::Zero();
    Vec3 tsum = Vec3::Zero();
    Eigen::VectorXd qsum = Eigen::VectorXd::Zero(net.dof());
    for (const TrainingExample& ex : data) {
      rsum += ex.config.rotation.normalized().toRotationMatrix();
      tsum += ex.config.translation - ex.object->origin;
      qsum += ex.config.joint_angles;
    }
    const double n = static_cast<double>(data.size());
    Eigen::JacobiSVD<Mat3> svd(rsum, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 r = svd.matrixU() * svd.matrixV().transpose();
    if (r.determinant() < 0.0) {
      Mat3 u = svd.matrixU();
      u.col(2) *= -1.0;
      r = u * svd.matrixV().transpose();
    }
    GraspConfiguration mean;
    mean.translation = tsum / n;
    mean.rotation = Eigen::Quaterniond(r).normalized();
    mean.joint_angles = qsum / n;
    const auto& names = net.weight_names();
    const auto it = std::find(names.begin(), names.end(), "out.bias");
    weights[static_cast<std::size_t>(it - names.begin())] = net.output_for(mean, Vec3::Zero());
  }

  std::mt19937_64 rng(settings.seed);
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  const int nz = net.config().latent_dim;
  long step = 0;
  std::vector<EpochStats> curve;
  Tape tape;
  for (int epoch = 0; epoch < settings.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      const std::size_t j = std::min(i - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i)));
      std::swap(order[i - 1], order[j]);
    }
    EpochStats stats;
    stats.epoch = epoch;
    for (std::size_t start = 0; start < order.size(); start += settings.batch_size) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(settings.batch_size));
      const double inv_batch = 1.0 / static_cast<double>(end - start);
      for (std::size_t k = 0; k < weights.size(); ++k) grads[k].setZero(weights[k].rows(), weights[k].cols());
      tape.clear();
      const GraspNet::Params p = net.bind(tape, &grads);
      std::map<const ObjectInput*, Var> embeddings;
      std::vector<Var> terms;
      for (std::size_t b = start; b < end; ++b) {
        const TrainingExample& ex = data[order[b]];
        auto it = embeddings.find(ex.object.get());
        if (it == embeddings.end()) it = embeddings.emplace(ex.object.get(), net.embed(tape, p, *ex.object)).first;
        const Var emb = it->second;
        const auto [mu, log_sigma] = net.encode(tape, p, emb, net.grasp_vector(ex.config, ex.object->origin));
        const Var sigma = ad::exp(log_sigma);
        MatrixXd noise(1, nz);
        noise.row(0) = normal_vector(rng, nz).transpose();
        const Var z = ad::add(mu, ad::mul(sigma, tape.constant(noise)));
        const Var out = net.decode(tape, p, z, emb);
        const DecodedGrasp d = split_decoded(tape, net, out, ex.object->origin);
        const Var rec = chamfer(tape, hand_points(tape, hand, d.translation, d.rotation, d.joints), targets[order[b]]);
        // 0.5 * sum(mu^2 + sigma^2 - 2 log sigma - 1)
        const Var kld_sum = ad::sum(ad::sub(ad::add(ad::square(mu), ad::square(sigma)), ad::scale(log_sigma, 2.0)));
        const double kld = 0.5 * (kld_sum.value()(0, 0) - nz);
        stats.rec += rec.value()(0, 0);
        stats.kld += kld;
        terms.push_back(settings.kld_weight > 0.0 ? ad::add(rec, ad::scale(kld_sum, 0.5 * settings.kld_weight)) : rec);
      }
      Var total = terms.front();
      for (std::size_t k = 1; k < terms.size(); ++k) total = ad::add(total, terms[k]);
      tape.backward(ad::scale(total, inv_batch));

      ++step;
      const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
      for (std::size_t k = 0; k < weights.size(); ++k) {
        m[k] = kBeta1 * m[k] + (1.0 - kBeta1) * grads[k];
        v[k] = kBeta2 * v[k] + (1.0 - kBeta2) * grads[k].cwiseAbs2();
        weights[k].array() -=
            settings.step_size * (m[k].array() / bc1) / ((v[k].array() / bc2).sqrt() + kEps);
      }
    }
    const double n = static_cast<double>(data.size());
    stats.rec /= n;
    stats.kld /= n;
    stats.loss = stats.rec + settings.kld_weight * stats.kld;
    if (!std::isfinite(stats.loss)) throw std::runtime_error("training diverged at epoch " + std::to_string(epoch));
    curve.push_back(stats);
  }
  return curve;
}

std::vector<GraspConfiguration> sample(const GraspNet& net, const ObjectInput& obj, int n, std::uint64_t seed) {
  if (n < 0) throw std::invalid_argument("sample count must be >= 0");
  std::vector<GraspConfiguration> out;
  if (n == 0) return out;
  const Eigen::RowVectorXd emb = net.embed(obj);
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    out.push_back(net.decode(normal_vector(rng, net.config().latent_dim), emb, obj.origin));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw CheckpointError("truncated checkpoint");
  return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
         static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
}

void put_string(std::ostream& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in, std::uint32_t limit = 1u << 24) {
  const std::uint32_t n = get_u32(in);
  if (n > limit) throw CheckpointError("corrupt checkpoint string length");
  std::string s(n, '\0');
  if (!in.read(s.data(), n)) throw CheckpointError("truncated checkpoint");
  return s;
}

}  // namespace

void GraspNet::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write " + path.string());
  nlohmann::json meta;
  meta["hand_id"] = hand_id_;
  meta["lower"] = std::vector<double>(lower_.data(), lower_.data() + lower_.size());
  meta["upper"] = std::vector<double>(upper_.data(), upper_.data() + upper_.size());
  meta["point_widths"] = config_.point_widths;
  meta["encoder_widths"] = config_.encoder_widths;
  meta["decoder_widths"] = config_.decoder_widths;
  meta["latent_dim"] = config_.latent_dim;
  meta["n_points"] = config_.n_points;
  meta["extra_channels"] = config_.extra_channels;

  out.write(kMagic, sizeof(kMagic));
  put_u32(out, kCheckpointSchemaVersion);
  put_string(out, meta.dump());
  put_u32(out, static_cast<std::uint32_t>(weights_.size()));
  for (std::size_t k = 0; k < weights_.size(); ++k) {
    put_string(out, names_[k]);
    put_u32(out, static_cast<std::uint32_t>(weights_[k].rows()));
    put_u32(out, static_cast<std::uint32_t>(weights_[k].cols()));
  }
  for (const MatrixXd& w : weights_) {
    // Row-major float32 little endian.
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(w(r, c))));
    }
  }
  if (!out) throw CheckpointError("failed writing " + path.string());
}

GraspNet GraspNet::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  char magic[sizeof(kMagic)];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw CheckpointError(path.string() + " is not a grasp model checkpoint");
  }
  const std::uint32_t version = get_u32(in);
  if (version != kCheckpointSchemaVersion) {
    throw CheckpointError("checkpoint schema version " + std::to_string(version) + " is not supported (expected " +
                          std::to_string(kCheckpointSchemaVersion) + ")");
  }
  GraspNet net;
  try {
    const auto meta = nlohmann::json::parse(get_string(in));
    net.hand_id_ = meta.at("hand_id").get<std::string>();
    const auto lower = meta.at("lower").get<std::vector<double>>();
    const auto upper = meta.at("upper").get<std::vector<double>>();
    if (lower.size() != upper.size()) throw CheckpointError("joint limit tables differ in length");
    net.lower_ = Eigen::Map<const Eigen::VectorXd>(lower.data(), static_cast<Eigen::Index>(lower.size()));
    net.upper_ = Eigen::Map<const Eigen::VectorXd>(upper.data(), static_cast<Eigen::Index>(upper.size()));
    net.config_.point_widths = meta.at("point_widths").get<std::vector<int>>();
    net.config_.encoder_widths = meta.at("encoder_widths").get<std::vector<int>>();
    net.config_.decoder_widths = meta.at("decoder_widths").get<std::vector<int>>();
    net.config_.latent_dim = meta.at("latent_dim").get<int>();
    net.config_.n_points = meta.at("n_points").get<int>();
    net.config_.extra_channels = meta.at("extra_channels").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("corrupt checkpoint metadata: ") + e.what());
  }
  net.build(0);
  const std::uint32_t count = get_u32(in);
  if (count != net.weights_.size()) throw CheckpointError("checkpoint tensor count does not match its metadata");
  for (std::size_t k = 0; k < count; ++k) {
    const std::string name = get_string(in);
    const std::uint32_t rows = get_u32(in);
    const std::uint32_t cols = get_u32(in);
    if (name != net.names_[k] || rows != net.weights_[k].rows() || cols != net.weights_[k].cols()) {
      throw CheckpointError("checkpoint tensor '" + name + "' does not match the architecture");
    }
  }
  for (MatrixXd& w : net.weights_) {
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = std::bit_cast<float>(get_u32(in));
    }
  }
  return net;
}

}  // namespace funcgrasp
