#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "funcgrasp/affordance.hpp"
#include "funcgrasp/contacts.hpp"
#include "funcgrasp/hand_model.hpp"
#include "funcgrasp/quality.hpp"

namespace funcgrasp {

struct LossWeights {
  double functional = 100.0;
  double grasping = 10.0;
  double force_closure = 1.0;
  double interpenetration = 500.0;
  double self_penetration = 500.0;

  void validate() const;
};

struct OptimizerSettings {
  double step_size = 0.005;
  int max_steps = 200;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // Metres per unit of step for the translation block; the other blocks
  // are in radians.
  double translation_step_scale = 0.1;
  double contact_threshold = 0.005;  // m
  double init_flex = 0.2;            // rad
  double empty_contact_penalty = 1.0;
  // Early stop once the best loss improves by less than this relative
  // amount over `patience` steps.
  double convergence_tolerance = 1e-4;
  int patience = 25;
  std::uint64_t seed = 0;

  void validate() const;
};

// Functional finger plus thumb variant (1..3, thumb only).
struct FunctionalTarget {
  Part finger = Part::kIndex;
  std::optional<int> thumb_variant;
};

struct LossTerms {
  double functional = 0.0;
  double grasping = 0.0;
  double force_closure = 0.0;
  double interpenetration = 0.0;
  double self_penetration = 0.0;
  double total = 0.0;
};

// The five-term objective for one hand, object and functional finger.
// Evaluates the loss and, on request, its gradient over the tangent
// parameterization (translation, world-frame rotation increment, joints).
class GraspObjective {
 public:
  GraspObjective(const HandModel& hand, const AffordanceObject& obj, FunctionalTarget target,
                 LossWeights weights, OptimizerSettings settings = {});

  LossTerms evaluate(const GraspConfiguration& config, Eigen::VectorXd* gradient = nullptr) const;

  // Identifies the smooth piece of the loss a configuration sits on:
  // nearest-neighbour assignments, contact features, and which primitive
  // each penetrating point is inside. Equal signatures at nearby
  // configurations mean finite differences between them are meaningful.
  std::vector<std::int64_t> signature(const GraspConfiguration& config) const;

  double functional_loss(const FkResult& fk, Eigen::VectorXd* grad) const;
  double grasping_loss(const FkResult& fk, Eigen::VectorXd* grad) const;
  double force_closure_loss(const FkResult& fk, Eigen::VectorXd* grad) const;
  double interpenetration_loss(const FkResult& fk, Eigen::VectorXd* grad) const;
  double self_penetration_loss(const FkResult& fk, Eigen::VectorXd* grad) const;

  const HandModel& hand() const { return hand_; }
  const AffordanceObject& object() const { return obj_; }
  const FunctionalTarget& target() const { return target_; }
  const LossWeights& weights() const { return weights_; }

 private:
  const HandModel& hand_;
  const AffordanceObject& obj_;
  FunctionalTarget target_;
  LossWeights weights_;
  OptimizerSettings settings_;
  std::vector<Anchor> functional_anchors_;
  std::vector<Anchor> contact_anchors_;
  std::vector<Vec3> functional_points_;
  std::vector<Vec3> grasping_points_;
  Vec3 object_origin_ = Vec3::Zero();

  double chamfer_term(const std::vector<Anchor>& anchors, const std::vector<Vec3>& target,
                      const FkResult& fk, Eigen::VectorXd* grad) const;
};

// Force-closure residual ||G c||: norm of (sum c_i, sum x_i x c_i).
double loss_force_closure(const ContactSet& contacts, double empty_penalty = 1.0);

double loss_functional(const HandModel& hand, const GraspConfiguration& config,
                       const AffordanceObject& obj, Part finger);
double loss_grasping(const HandModel& hand, const GraspConfiguration& config, const AffordanceObject& obj);
double loss_interpenetration(const HandModel& hand, const GraspConfiguration& config,
                             const AffordanceObject& obj);
double loss_self_penetration(const HandModel& hand, const GraspConfiguration& config);

LossTerms total_loss(const HandModel& hand, const GraspConfiguration& config, const AffordanceObject& obj,
                     FunctionalTarget target, const LossWeights& weights,
                     const OptimizerSettings& settings = {});

Eigen::VectorXd loss_gradient(const HandModel& hand, const GraspConfiguration& config,
                              const AffordanceObject& obj, FunctionalTarget target,
                              const LossWeights& weights, const OptimizerSettings& settings = {});

class InitFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Per-run variation applied by the batch driver before contact search.
struct InitPerturbation {
  double fa_roll = 0.0;               // rad about the object GF axis
  Eigen::VectorXd flex_offsets;       // added to flexion joints; empty for none
};

GraspConfiguration axis_align_init(const HandModel& hand, const AffordanceObject& obj,
                                   FunctionalTarget target, const OptimizerSettings& settings,
                                   const InitPerturbation& perturbation = {},
                                   const LossWeights& weights = {});

struct OptimizationResult {
  GraspConfiguration config;
  LossTerms terms;
  std::vector<LossTerms> trajectory;  // one entry per evaluated step
  int steps = 0;
  bool converged = false;
};

OptimizationResult optimize_grasp(const HandModel& hand, const AffordanceObject& obj,
                                  const GraspConfiguration& init, FunctionalTarget target,
                                  const LossWeights& weights, const OptimizerSettings& settings);

struct SynthesisRun {
  std::uint64_t seed = 0;
  FunctionalTarget target;
  bool ok = false;
  std::string error;
  GraspConfiguration config;
  LossTerms terms;
  GraspMetrics metrics;
  int steps = 0;
  bool converged = false;
  std::vector<LossTerms> trajectory;
};

// Seed for run `index` derived from a master seed (splitmix64 of the sum).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

// Parallelism cap read from FUNCGRASP_WORKERS, else hardware concurrency.
int worker_count();

// Single synthesis run from its own seed: choose target and perturbation,
// initialize, optimize, and score.
SynthesisRun synthesize_one(const HandModel& hand, const AffordanceObject& obj, std::uint64_t seed,
                            const LossWeights& weights, const OptimizerSettings& settings,
                            const MetricSettings& metric_settings = {});

// n independent runs seeded by derive_seed(settings.seed, i); results are in
// run order regardless of scheduling.
std::vector<SynthesisRun> synthesize_batch(const HandModel& hand, const AffordanceObject& obj, int n,
                                           const LossWeights& weights, const OptimizerSettings& settings,
                                           const MetricSettings& metric_settings = {});

// Fingers the object accepts that the hand can supply.
std::vector<Part> candidate_fingers(const HandModel& hand, const AffordanceObject& obj);

}  // namespace funcgrasp
