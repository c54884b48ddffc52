#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "funcgrasp/affordance.hpp"
#include "funcgrasp/autodiff.hpp"
#include "funcgrasp/hand_model.hpp"

namespace funcgrasp {

struct NetConfig {
  std::vector<int> point_widths{64, 128};  // per-point layers; the last is the embedding size
  std::vector<int> encoder_widths{128};    // after concatenating embedding and grasp
  std::vector<int> decoder_widths{128, 128};
  int latent_dim = 32;
  int n_points = 512;
  // Per-point channels beyond xyz + normal (e.g. precomputed features).
  int extra_channels = 0;

  int embedding_size() const { return point_widths.back(); }
  int point_channels() const { return 6 + extra_channels; }
  void validate() const;
};

struct TrainSettings {
  int epochs = 300;
  int batch_size = 32;
  double step_size = 1e-3;
  double kld_weight = 1e-3;
  std::uint64_t seed = 0;
  int latent_dim = 32;
  // Sets the decoder output bias to the dataset's mean grasp before the
  // first epoch.
  bool init_output_bias = true;

  void validate() const;
};

struct LatentDistribution {
  Eigen::VectorXd mu;
  Eigen::VectorXd sigma;
};

// Minimum sigma used by reparameterize.
inline constexpr double kMinSigma = 1e-6;

double loss_kld(const LatentDistribution& dist);
Eigen::VectorXd reparameterize(const LatentDistribution& dist, const Eigen::VectorXd& noise);

// Network conditioning input for one object: points centered on `origin`
// with their normals (and optional extra channels), one row per point.
struct ObjectInput {
  Eigen::MatrixXd features;
  Vec3 origin = Vec3::Zero();
};

// Resamples the object's surface cloud to n points (deterministic in seed).
ObjectInput make_object_input(const AffordanceObject& obj, int n_points, std::uint64_t seed);

// Chamfer distance between the hand surface clouds of two configurations.
double loss_rec(const GraspConfiguration& predicted, const GraspConfiguration& ground_truth,
                const HandModel& hand);

struct TrainingExample {
  std::shared_ptr<const ObjectInput> object;
  GraspConfiguration config;
  std::string hand_id;
};

struct EpochStats {
  int epoch = 0;
  double loss = 0.0;
  double rec = 0.0;
  double kld = 0.0;
};

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Conditional VAE over grasp configurations. The object condition is a
// max-pooled per-point MLP embedding; the encoder sees the embedding and the
// grasp, the decoder sees the embedding and a latent code.
class GraspNet {
 public:
  GraspNet(const HandModel& hand, NetConfig config, std::uint64_t seed);

  const NetConfig& config() const { return config_; }
  const std::string& hand_id() const { return hand_id_; }
  int dof() const { return static_cast<int>(lower_.size()); }
  int grasp_size() const { return 9 + dof(); }
  const Eigen::VectorXd& lower() const { return lower_; }
  const Eigen::VectorXd& upper() const { return upper_; }

  Eigen::RowVectorXd embed(const ObjectInput& obj) const;
  LatentDistribution encode(const ObjectInput& obj, const GraspConfiguration& grasp) const;
  GraspConfiguration decode(const Eigen::VectorXd& z, const Eigen::RowVectorXd& embedding,
                            const Vec3& origin) const;

  // Grasp as the network sees it: translation relative to origin, the first
  // two rotation columns, joint angles.
  Eigen::RowVectorXd grasp_vector(const GraspConfiguration& grasp, const Vec3& origin) const;

  // Tape-building forms used by training and gradient checks.
  struct Params;
  ad::Var embed(ad::Tape& tape, const Params& p, const ObjectInput& obj) const;
  std::pair<ad::Var, ad::Var> encode(ad::Tape& tape, const Params& p, ad::Var embedding,
                                     const Eigen::RowVectorXd& grasp) const;  // mu, log sigma
  ad::Var decode(ad::Tape& tape, const Params& p, ad::Var z, ad::Var embedding) const;  // 1 x (9 + dof)

  std::vector<Eigen::MatrixXd>& weights() { return weights_; }
  const std::vector<Eigen::MatrixXd>& weights() const { return weights_; }
  const std::vector<std::string>& weight_names() const { return names_; }

  // Parameter vars bound to a tape, with adjoints written into `grads`.
  struct Params {
    std::vector<ad::Var> vars;
  };
  Params bind(ad::Tape& tape, std::vector<Eigen::MatrixXd>* grads) const;

  // Decoder output row that maps back to `grasp` (joints strictly inside
  // their limits are reproduced; joints at a limit land just inside it).
  Eigen::RowVectorXd output_for(const GraspConfiguration& grasp, const Vec3& origin) const;

  // Splits a decoder output row into a configuration.
  GraspConfiguration to_config(const Eigen::RowVectorXd& out, const Vec3& origin) const;

  void save(const std::filesystem::path& path) const;
  static GraspNet load(const std::filesystem::path& path);

 private:
  GraspNet() = default;

  NetConfig config_;
  std::string hand_id_;
  Eigen::VectorXd lower_, upper_;
  std::vector<Eigen::MatrixXd> weights_;
  std::vector<std::string> names_;
  // Index ranges into weights_ (weight, bias pairs).
  std::vector<int> point_layers_, encoder_layers_, decoder_layers_;
  int mu_head_ = 0, log_sigma_head_ = 0, out_head_ = 0;

  int add_layer(const std::string& name, int in, int out, double init_scale, std::uint64_t& rng_state);
  void build(std::uint64_t seed);
};

// Tape node for the posed hand surface cloud: inputs translation (1x3,
// world), rotation (3x3) and joints (1 x dof); output (n x 3).
ad::Var hand_points(ad::Tape& tape, const HandModel& hand, ad::Var translation, ad::Var rotation, ad::Var joints);

// Chamfer distance from a tape cloud to a fixed cloud.
ad::Var chamfer(ad::Tape& tape, ad::Var points, const std::vector<Vec3>& target);

// Decoder output row to (world translation, rotation, joints) vars.
struct DecodedGrasp {
  ad::Var translation, rotation, joints;
};
DecodedGrasp split_decoded(ad::Tape& tape, const GraspNet& net, ad::Var out, const Vec3& origin);

std::vector<EpochStats> train(GraspNet& net, const std::vector<TrainingExample>& data, const HandModel& hand,
                              const TrainSettings& settings);

// n decodes of standard-normal latents conditioned on the object. Latent i
// is drawn from derive_seed(seed, i).
std::vector<GraspConfiguration> sample(const GraspNet& net, const ObjectInput& obj, int n, std::uint64_t seed);

inline constexpr std::uint32_t kCheckpointSchemaVersion = 1;

}  // namespace funcgrasp
