#include "funcgrasp/synthesis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <random>
#include <stdexcept>
#include <thread>

namespace funcgrasp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Penetration allowed at the end of the initial contact search (m).
constexpr double kInitPenetrationTolerance = 1e-4;
// Contact is declared once every hand point is this close or farther (m).
constexpr double kContactDistance = 1e-5;
constexpr double kMaxApproachTravel = 1.0;

Vec3 centroid_of(const std::vector<Vec3>& pts) {
  Vec3 c = Vec3::Zero();
  for (const Vec3& p : pts) c += p;
  return c / static_cast<double>(pts.size());
}

bool finite(const LossTerms& t) {
  return std::isfinite(t.functional) && std::isfinite(t.grasping) && std::isfinite(t.force_closure) &&
         std::isfinite(t.interpenetration) && std::isfinite(t.self_penetration) && std::isfinite(t.total);
}

// World-space bounds of all posed primitives, for cheap rejection.
Eigen::AlignedBox3d primitive_bounds(const std::vector<PosedPrimitive>& prims) {
  Eigen::AlignedBox3d box;
  for (const PosedPrimitive& p : prims) {
    const Vec3 c = p.shape.pose.translation();
    box.extend(c - Vec3::Constant(p.bound));
    box.extend(c + Vec3::Constant(p.bound));
  }
  return box;
}

// Deepest penetration of x into the union of the primitives of one part.
// Returns the primitive index (or -1 when x is outside all of them).
int deepest_primitive(const std::vector<PosedPrimitive>& prims, const std::vector<int>& part_prims,
                      const Vec3& x, SignedDistance& out) {
  int best = -1;
  out.distance = 0.0;
  for (int k : part_prims) {
    const PosedPrimitive& prim = prims[k];
    if ((x - prim.shape.pose.translation()).squaredNorm() >= prim.bound * prim.bound) continue;
    const SignedDistance sd = primitive_signed_distance(prim.shape, x);
    if (sd.distance < out.distance) {
      out = sd;
      best = k;
    }
  }
  return best;
}

std::map<Part, std::vector<int>> group_by_part(const std::vector<PosedPrimitive>& prims) {
  std::map<Part, std::vector<int>> out;
  for (std::size_t k = 0; k < prims.size(); ++k) out[prims[k].part].push_back(static_cast<int>(k));
  return out;
}

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

void LossWeights::validate() const {
  for (double w : {functional, grasping, force_closure, interpenetration, self_penetration}) {
    if (!std::isfinite(w) || w < 0.0) throw std::invalid_argument("loss weights must be finite and >= 0");
  }
}

void OptimizerSettings::validate() const {
  if (max_steps < 1) throw std::invalid_argument("max_steps must be >= 1");
  if (!(contact_threshold > 0.0)) throw std::invalid_argument("contact_threshold must be positive");
  if (!(step_size > 0.0)) throw std::invalid_argument("step_size must be positive");
}

// ---------------------------------------------------------------------------
// Objective

GraspObjective::GraspObjective(const HandModel& hand, const AffordanceObject& obj, FunctionalTarget target,
                               LossWeights weights, OptimizerSettings settings)
    : hand_(hand), obj_(obj), target_(target), weights_(weights), settings_(settings) {
  weights_.validate();
  settings_.validate();
  functional_anchors_ = anchors(hand, AnchorSet::functional(target.finger));
  contact_anchors_ = all_anchors(hand);
  functional_points_ = obj.functional_points();
  grasping_points_ = obj.grasping_points();
  if (functional_points_.empty() || grasping_points_.empty()) {
    throw std::invalid_argument("object parts must be non-empty");
  }
  object_origin_ = obj.centroid();
}

double GraspObjective::chamfer_term(const std::vector<Anchor>& list, const std::vector<Vec3>& target,
                                    const FkResult& fk, Eigen::VectorXd* grad) const {
  const auto pts = anchor_positions(list, fk);
  const ChamferResult cr = chamfer_with_correspondences(pts, target);
  if (grad) {
    const double wp = 2.0 / static_cast<double>(pts.size());
    const double wq = 2.0 / static_cast<double>(target.size());
    std::vector<Vec3> g(pts.size(), Vec3::Zero());
    for (std::size_t i = 0; i < pts.size(); ++i) g[i] += wp * (pts[i] - target[cr.nearest_in_q[i]]);
    for (std::size_t j = 0; j < target.size(); ++j) {
      const int i = cr.nearest_in_p[j];
      g[i] += wq * (pts[i] - target[j]);
    }
    for (std::size_t i = 0; i < pts.size(); ++i) {
      accumulate_point_gradient(hand_, fk, list[i].link, pts[i], g[i], *grad);
    }
  }
  return cr.value;
}

double GraspObjective::functional_loss(const FkResult& fk, Eigen::VectorXd* grad) const {
  return chamfer_term(functional_anchors_, functional_points_, fk, grad);
}

double GraspObjective::grasping_loss(const FkResult& fk, Eigen::VectorXd* grad) const {
  return chamfer_term(hand_.grasping_anchors, grasping_points_, fk, grad);
}

double GraspObjective::force_closure_loss(const FkResult& fk, Eigen::VectorXd* grad) const {
  const auto contacts =
      detect_contacts_detailed(hand_, fk, obj_, contact_anchors_, settings_.contact_threshold);
  if (contacts.empty()) return settings_.empty_contact_penalty;
  Vec3 force = Vec3::Zero();
  Vec3 torque = Vec3::Zero();
  for (const DetectedContact& c : contacts) {
    const Vec3 axis = -c.surface.normal;
    force += axis;
    torque += (c.surface.point - object_origin_).cross(axis);
  }
  const double value = std::sqrt(force.squaredNorm() + torque.squaredNorm());
  if (grad && value > 0.0) {
    const Vec3 g_torque = torque / value;
    for (const DetectedContact& c : contacts) {
      const Vec3 axis = -c.surface.normal;
      const Vec3 dl_dx = axis.cross(g_torque);
      Vec3 dl_da = Vec3::Zero();
      switch (c.surface.feature) {
        case SurfacePoint::Feature::kFace: {
          const Vec3& n = c.surface.normal;
          dl_da = dl_dx - n.dot(dl_dx) * n;
          break;
        }
        case SurfacePoint::Feature::kEdge: {
          const Vec3& e = c.surface.edge_direction;
          dl_da = e.dot(dl_dx) * e;
          break;
        }
        case SurfacePoint::Feature::kVertex:
          break;
      }
      accumulate_point_gradient(hand_, fk, contact_anchors_[c.anchor].link, c.anchor_position, dl_da, *grad);
    }
  }
  return value;
}

double GraspObjective::interpenetration_loss(const FkResult& fk, Eigen::VectorXd* grad) const {
  const auto prims = posed_primitives(hand_, fk);
  const auto by_part = group_by_part(prims);
  const Eigen::AlignedBox3d bounds = primitive_bounds(prims);
  double total = 0.0;
  for (const Vec3& x : obj_.surface.points) {
    if (!bounds.contains(x)) continue;
    for (const auto& [part, list] : by_part) {
      SignedDistance sd;
      const int k = deepest_primitive(prims, list, x, sd);
      if (k < 0) continue;
      total -= sd.distance;
      if (grad) accumulate_point_gradient(hand_, fk, prims[k].link, x, sd.gradient, *grad);
    }
  }
  return total;
}

double GraspObjective::self_penetration_loss(const FkResult& fk, Eigen::VectorXd* grad) const {
  const auto prims = posed_primitives(hand_, fk);
  const auto by_part = group_by_part(prims);
  const auto pts = hand_surface_points(hand_, fk);
  const auto& owners = hand_.surface_point_links();
  double total = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const int owner = owners[i];
    const Part own_part = hand_.links[owner].part;
    for (const auto& [part, list] : by_part) {
      if (part == own_part) continue;
      SignedDistance sd;
      const int k = deepest_primitive(prims, list, pts[i], sd);
      if (k < 0) continue;
      total -= sd.distance;
      if (grad) {
        accumulate_point_gradient(hand_, fk, owner, pts[i], -sd.gradient, *grad);
        accumulate_point_gradient(hand_, fk, prims[k].link, pts[i], sd.gradient, *grad);
      }
    }
  }
  return total;
}

LossTerms GraspObjective::evaluate(const GraspConfiguration& config, Eigen::VectorXd* gradient) const {
  const FkResult fk = forward_kinematics(hand_, config);
  const int dim = hand_.tangent_dim();
  if (gradient) gradient->setZero(dim);
  Eigen::VectorXd g(dim);
  LossTerms t;
  auto term = [&](double weight, auto&& fn) {
    const bool want = gradient != nullptr && weight != 0.0;
    if (want) g.setZero();
    const double value = fn(want ? &g : nullptr);
    if (want) *gradient += weight * g;
    return value;
  };
  t.functional = term(weights_.functional, [&](Eigen::VectorXd* p) { return functional_loss(fk, p); });
  t.grasping = term(weights_.grasping, [&](Eigen::VectorXd* p) { return grasping_loss(fk, p); });
  t.force_closure = term(weights_.force_closure, [&](Eigen::VectorXd* p) { return force_closure_loss(fk, p); });
  t.interpenetration =
      term(weights_.interpenetration, [&](Eigen::VectorXd* p) { return interpenetration_loss(fk, p); });
  t.self_penetration =
      term(weights_.self_penetration, [&](Eigen::VectorXd* p) { return self_penetration_loss(fk, p); });
  t.total = weights_.functional * t.functional + weights_.grasping * t.grasping +
            weights_.force_closure * t.force_closure + weights_.interpenetration * t.interpenetration +
            weights_.self_penetration * t.self_penetration;
  return t;
}

std::vector<std::int64_t> GraspObjective::signature(const GraspConfiguration& config) const {
  const FkResult fk = forward_kinematics(hand_, config);
  std::vector<std::int64_t> sig;
  auto push_chamfer = [&](const std::vector<Anchor>& list, const std::vector<Vec3>& target) {
    const ChamferResult cr = chamfer_with_correspondences(anchor_positions(list, fk), target);
    sig.insert(sig.end(), cr.nearest_in_q.begin(), cr.nearest_in_q.end());
    sig.insert(sig.end(), cr.nearest_in_p.begin(), cr.nearest_in_p.end());
    sig.push_back(-1);
  };
  push_chamfer(functional_anchors_, functional_points_);
  push_chamfer(hand_.grasping_anchors, grasping_points_);
  for (const DetectedContact& c :
       detect_contacts_detailed(hand_, fk, obj_, contact_anchors_, settings_.contact_threshold)) {
    sig.push_back(c.anchor);
    sig.push_back(c.surface.triangle);
    sig.push_back(static_cast<int>(c.surface.feature));
    sig.push_back(c.surface.vertex);
  }
  sig.push_back(-2);
  const auto prims = posed_primitives(hand_, fk);
  const auto by_part = group_by_part(prims);
  for (std::size_t i = 0; i < obj_.surface.points.size(); ++i) {
    for (const auto& [part, list] : by_part) {
      SignedDistance sd;
      const int k = deepest_primitive(prims, list, obj_.surface.points[i], sd);
      if (k < 0) continue;
      sig.push_back(static_cast<std::int64_t>(i));
      sig.push_back(k);
      sig.push_back(sd.branch);
    }
  }
  sig.push_back(-3);
  const auto pts = hand_surface_points(hand_, fk);
  const auto& owners = hand_.surface_point_links();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (const auto& [part, list] : by_part) {
      if (part == hand_.links[owners[i]].part) continue;
      SignedDistance sd;
      const int k = deepest_primitive(prims, list, pts[i], sd);
      if (k < 0) continue;
      sig.push_back(static_cast<std::int64_t>(i));
      sig.push_back(k);
      sig.push_back(sd.branch);
    }
  }
  return sig;
}

// ---------------------------------------------------------------------------
// Free-function loss terms

double loss_force_closure(const ContactSet& contacts, double empty_penalty) {
  if (contacts.empty()) return empty_penalty;
  Vec3 force = Vec3::Zero();
  Vec3 torque = Vec3::Zero();
  for (std::size_t i = 0; i < contacts.size(); ++i) {
    force += contacts.cone_axes[i];
    torque += contacts.points[i].cross(contacts.cone_axes[i]);
  }
  return std::sqrt(force.squaredNorm() + torque.squaredNorm());
}

double loss_functional(const HandModel& hand, const GraspConfiguration& config, const AffordanceObject& obj,
                       Part finger) {
  const FkResult fk = forward_kinematics(hand, config);
  const auto pts = anchor_positions(anchors(hand, AnchorSet::functional(finger)), fk);
  const auto part = obj.functional_points();
  if (part.empty()) throw std::invalid_argument("object functional part is empty");
  return chamfer_distance(pts, part);
}

double loss_grasping(const HandModel& hand, const GraspConfiguration& config, const AffordanceObject& obj) {
  const FkResult fk = forward_kinematics(hand, config);
  const auto part = obj.grasping_points();
  if (part.empty()) throw std::invalid_argument("object grasping part is empty");
  return chamfer_distance(anchor_positions(hand.grasping_anchors, fk), part);
}

double loss_interpenetration(const HandModel& hand, const GraspConfiguration& config,
                             const AffordanceObject& obj) {
  const FunctionalTarget target{hand.functional_anchors.begin()->first,
                                hand.functional_anchors.begin()->first == Part::kThumb
                                    ? std::optional<int>(1)
                                    : std::nullopt};
  const GraspObjective objective(hand, obj, target, LossWeights{});
  return objective.interpenetration_loss(forward_kinematics(hand, config), nullptr);
}

double loss_self_penetration(const HandModel& hand, const GraspConfiguration& config) {
  const FkResult fk = forward_kinematics(hand, config);
  const auto prims = posed_primitives(hand, fk);
  const auto by_part = group_by_part(prims);
  const auto pts = hand_surface_points(hand, fk);
  const auto& owners = hand.surface_point_links();
  double total = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (const auto& [part, list] : by_part) {
      if (part == hand.links[owners[i]].part) continue;
      SignedDistance sd;
      if (deepest_primitive(prims, list, pts[i], sd) >= 0) total -= sd.distance;
    }
  }
  return total;
}

LossTerms total_loss(const HandModel& hand, const GraspConfiguration& config, const AffordanceObject& obj,
                     FunctionalTarget target, const LossWeights& weights, const OptimizerSettings& settings) {
  const GraspObjective objective(hand, obj, target, weights, settings);
  return objective.evaluate(config);
}

Eigen::VectorXd loss_gradient(const HandModel& hand, const GraspConfiguration& config,
                              const AffordanceObject& obj, FunctionalTarget target, const LossWeights& weights,
                              const OptimizerSettings& settings) {
  const GraspObjective objective(hand, obj, target, weights, settings);
  Eigen::VectorXd g;
  objective.evaluate(config, &g);
  return g;
}

// ---------------------------------------------------------------------------
// Initialization

namespace {

// Advances the hand along `direction` from a pose known to be clear of the
// object until it first touches it. Each step moves by the smallest of two
// clearances: hand surface points to the mesh, and object surface points to
// the hand primitives. Neither set can cross the other surface mid-step.
GraspConfiguration approach_until_contact(const HandModel& hand, const AffordanceObject& obj,
                                          GraspConfiguration config, const Vec3& direction) {
  const auto& local = hand.surface_points_local();
  const auto& owners = hand.surface_point_links();
  double travel = 0.0;
  for (int iter = 0; iter < 10000; ++iter) {
    const FkResult fk = forward_kinematics(hand, config);
    double nearest = kInf;
    for (std::size_t i = 0; i < local.size(); ++i) {
      const Vec3 p = fk.link_poses[owners[i]] * local[i];
      nearest = std::min(nearest, obj.query->closest_point(p).distance);
    }
    for (const PosedPrimitive& prim : posed_primitives(hand, fk)) {
      for (const Vec3& x : obj.surface.points) {
        nearest = std::min(nearest, primitive_signed_distance(prim.shape, x).distance);
      }
    }
    if (nearest <= kContactDistance) return config;
    travel += nearest;
    if (travel > kMaxApproachTravel) break;
    config.translation += nearest * direction;
  }
  throw InitFailure("no contact found within " + std::to_string(kMaxApproachTravel) + " m of travel");
}

double min_hand_sdf(const HandModel& hand, const GraspConfiguration& config, const AffordanceObject& obj) {
  return -metric_dip(hand, config, obj);
}

}  // namespace

GraspConfiguration axis_align_init(const HandModel& hand, const AffordanceObject& obj, FunctionalTarget target,
                                   const OptimizerSettings& settings, const InitPerturbation& perturbation,
                                   const LossWeights& weights) {
  settings.validate();
  const ObjectAxes obj_axes = object_axes(obj);

  GraspConfiguration base = GraspConfiguration::identity(hand.dof());
  for (int j = 0; j < hand.dof(); ++j) {
    if (!hand.joints[j].flexion) continue;
    double angle = settings.init_flex;
    if (perturbation.flex_offsets.size() == hand.dof()) angle += perturbation.flex_offsets[j];
    base.joint_angles[j] = angle;
  }
  hand.project_to_limits(base);

  const HandAxes hand_ax = hand_axes(hand, base, target.finger, target.thumb_variant);
  const Mat3 align_gf = rotation_between(hand_ax.gf, obj_axes.gf);
  const FkResult rest_fk = forward_kinematics(hand, base);
  const Vec3 hand_functional = centroid_of(anchor_positions(anchors(hand, AnchorSet::functional(target.finger)), rest_fk));
  const Vec3 obj_functional = centroid_of(obj.functional_points());

  double hand_radius = 0.0;
  for (const Vec3& p : hand_surface_points(hand, rest_fk)) {
    hand_radius = std::max(hand_radius, (p - hand_functional).norm());
  }
  double obj_radius = 0.0;
  for (const Vec3& v : obj.mesh.vertices) obj_radius = std::max(obj_radius, (v - obj_functional).norm());
  const double standoff = hand_radius + obj_radius + 0.01;

  const GraspObjective objective(hand, obj, target, weights, settings);
  std::optional<GraspConfiguration> best;
  double best_loss = kInf;
  std::string last_error;
  for (double sign : {1.0, -1.0}) {
    const Vec3 press =
        Eigen::AngleAxisd(perturbation.fa_roll, obj_axes.gf) * (sign * obj_axes.fa);
    const Vec3 fa_aligned = align_gf * hand_ax.fa;
    const double angle = std::atan2(obj_axes.gf.dot(fa_aligned.cross(press)), fa_aligned.dot(press));
    const Mat3 rot = Eigen::AngleAxisd(angle, obj_axes.gf).toRotationMatrix() * align_gf;

    GraspConfiguration candidate = base;
    candidate.rotation = Eigen::Quaterniond(rot).normalized();
    candidate.translation = obj_functional - rot * hand_functional - standoff * press;
    try {
      candidate = approach_until_contact(hand, obj, candidate, press);
    } catch (const InitFailure& e) {
      last_error = e.what();
      continue;
    }
    if (min_hand_sdf(hand, candidate, obj) < -kInitPenetrationTolerance) {
      last_error = "initial contact search ended in penetration";
      continue;
    }
    const double loss = objective.evaluate(candidate).total;
    if (loss < best_loss) {
      best_loss = loss;
      best = candidate;
    }
  }
  if (!best) throw InitFailure(last_error);
  return *best;
}

// ---------------------------------------------------------------------------
// Optimization

OptimizationResult optimize_grasp(const HandModel& hand, const AffordanceObject& obj,
                                  const GraspConfiguration& init, FunctionalTarget target,
                                  const LossWeights& weights, const OptimizerSettings& settings) {
  const GraspObjective objective(hand, obj, target, weights, settings);
  GraspConfiguration x = init;
  hand.project_to_limits(x);

  const int dim = hand.tangent_dim();
  Eigen::VectorXd m = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd g(dim);

  OptimizationResult out;
  std::vector<double> best_history;
  double best_total = kInf;
  for (int step = 0; step < settings.max_steps; ++step) {
    const LossTerms terms = objective.evaluate(x, &g);
    if (!finite(terms) || !g.allFinite()) {
      if (step == 0) throw std::runtime_error("non-finite loss at the initial configuration");
      break;
    }
    out.trajectory.push_back(terms);
    if (terms.total < best_total) {
      best_total = terms.total;
      out.config = x;
      out.terms = terms;
    }
    best_history.push_back(best_total);
    out.steps = step + 1;

    if (step >= settings.patience) {
      const double before = best_history[step - settings.patience];
      if (before - best_total <= settings.convergence_tolerance * std::max(std::abs(before), 1e-12)) {
        out.converged = true;
        break;
      }
    }

    m = settings.beta1 * m + (1.0 - settings.beta1) * g;
    v = settings.beta2 * v + (1.0 - settings.beta2) * g.cwiseAbs2();
    const double bc1 = 1.0 - std::pow(settings.beta1, step + 1);
    const double bc2 = 1.0 - std::pow(settings.beta2, step + 1);
    Eigen::VectorXd delta =
        -settings.step_size * (m / bc1).cwiseQuotient(((v / bc2).cwiseSqrt().array() + settings.epsilon).matrix());
    delta.head<3>() *= settings.translation_step_scale;
    x = retract(x, delta);
    hand.project_to_limits(x);
  }
  if (!out.converged && out.steps >= settings.patience + 1) {
    const double before = best_history[out.steps - 1 - settings.patience];
    out.converged = before - best_total <= settings.convergence_tolerance * std::max(std::abs(before), 1e-12);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Batch synthesis

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(master ^ splitmix64(index));
}

int worker_count() {
  if (const char* env = std::getenv("FUNCGRASP_WORKERS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<Part> candidate_fingers(const HandModel& hand, const AffordanceObject& obj) {
  std::vector<Part> out;
  for (Part p : obj.functional_fingers) {
    if (hand.functional_anchors.count(p)) out.push_back(p);
  }
  if (out.empty()) {
    throw std::invalid_argument("hand '" + hand.id + "' has none of the functional fingers object '" + obj.id +
                                "' requires");
  }
  return out;
}

SynthesisRun synthesize_one(const HandModel& hand, const AffordanceObject& obj, std::uint64_t seed,
                            const LossWeights& weights, const OptimizerSettings& settings,
                            const MetricSettings& metric_settings) {
  SynthesisRun run;
  run.seed = seed;
  try {
    const auto fingers = candidate_fingers(hand, obj);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    run.target.finger = fingers[static_cast<std::size_t>(unit(rng) * fingers.size()) % fingers.size()];
    if (run.target.finger == Part::kThumb) run.target.thumb_variant = 1 + static_cast<int>(unit(rng) * 3.0) % 3;

    InitPerturbation perturbation;
    perturbation.fa_roll = 0.3 * (unit(rng) - 0.5);
    perturbation.flex_offsets = Eigen::VectorXd::Zero(hand.dof());
    for (int j = 0; j < hand.dof(); ++j) perturbation.flex_offsets[j] = 0.1 * (unit(rng) - 0.5);

    const GraspConfiguration init = axis_align_init(hand, obj, run.target, settings, perturbation, weights);
    OptimizationResult opt = optimize_grasp(hand, obj, init, run.target, weights, settings);
    run.config = opt.config;
    run.terms = opt.terms;
    run.steps = opt.steps;
    run.converged = opt.converged;
    run.trajectory = std::move(opt.trajectory);
    run.metrics = evaluate_metrics(hand, run.config, obj, fingers, metric_settings);
    run.ok = true;
  } catch (const std::exception& e) {
    run.ok = false;
    run.error = e.what();
  }
  return run;
}

std::vector<SynthesisRun> synthesize_batch(const HandModel& hand, const AffordanceObject& obj, int n,
                                           const LossWeights& weights, const OptimizerSettings& settings,
                                           const MetricSettings& metric_settings) {
  if (n < 1) throw std::invalid_argument("batch size must be >= 1");
  std::vector<SynthesisRun> runs(static_cast<std::size_t>(n));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < n; i = next++) {
      runs[i] = synthesize_one(hand, obj, derive_seed(settings.seed, static_cast<std::uint64_t>(i)), weights,
                               settings, metric_settings);
    }
  };
  const int threads = std::min(worker_count(), n);
  if (threads <= 1) {
    worker();
    return runs;
  }
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  return runs;
}

}  // namespace funcgrasp
