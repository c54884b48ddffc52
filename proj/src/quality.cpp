#include "funcgrasp/quality.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <Eigen/QR>

namespace funcgrasp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Vec3 any_perpendicular(const Vec3& n) {
  int axis = 0;
  n.cwiseAbs().minCoeff(&axis);
  return n.cross(Vec3::Unit(axis)).normalized();
}

}  // namespace

void FilterThresholds::validate() const {
  if (!(max_dg > 0.0 && max_df > 0.0 && max_dip > 0.0 && max_dsp > 0.0)) {
    throw std::invalid_argument("filter thresholds must be positive");
  }
}

double metric_dg(const HandModel& hand, const GraspConfiguration& config, const AffordanceObject& obj) {
  const FkResult fk = forward_kinematics(hand, config);
  const auto hand_pts = anchor_positions(hand.grasping_anchors, fk);
  const auto obj_pts = obj.grasping_points();
  return chamfer_distance(hand_pts, obj_pts);
}

double metric_df(const HandModel& hand, const GraspConfiguration& config, const AffordanceObject& obj,
                 std::span<const Part> candidates) {
  if (candidates.empty()) throw std::invalid_argument("d_F needs at least one candidate finger");
  const FkResult fk = forward_kinematics(hand, config);
  const auto obj_pts = obj.functional_points();
  double best = kInf;
  for (Part finger : candidates) {
    const auto pts = anchor_positions(anchors(hand, AnchorSet::functional(finger)), fk);
    best = std::min(best, chamfer_distance(pts, obj_pts));
  }
  return best;
}

double metric_dip(const HandModel& hand, const GraspConfiguration& config, const AffordanceObject& obj) {
  const FkResult fk = forward_kinematics(hand, config);
  const Eigen::AlignedBox3d bounds = obj.query->bounds();
  double deepest = 0.0;
  for (const Vec3& p : hand_surface_points(hand, fk)) {
    if (!bounds.contains(p)) continue;
    deepest = std::min(deepest, obj.query->signed_distance(p));
  }
  return -deepest;
}

double metric_dsp(const HandModel& hand, const GraspConfiguration& config) {
  const FkResult fk = forward_kinematics(hand, config);
  const auto prims = posed_primitives(hand, fk);
  const auto pts = hand_surface_points(hand, fk);
  const auto& owners = hand.surface_point_links();
  double deepest = 0.0;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const Part part = hand.links[owners[k]].part;
    for (const PosedPrimitive& prim : prims) {
      if (prim.part == part) continue;
      if ((pts[k] - prim.shape.pose.translation()).norm() >= prim.bound) continue;
      deepest = std::min(deepest, primitive_signed_distance(prim.shape, pts[k]).distance);
    }
  }
  return -deepest;
}

std::vector<std::string> violated_thresholds(const GraspMetrics& m, const FilterThresholds& t) {
  std::vector<std::string> out;
  if (!(m.d_g <= t.max_dg)) out.emplace_back("d_G");
  if (!(m.d_f <= t.max_df)) out.emplace_back("d_F");
  if (!(m.d_ip <= t.max_dip)) out.emplace_back("d_IP");
  if (!(m.d_sp <= t.max_dsp)) out.emplace_back("d_SP");
  return out;
}

FilterResult filter_grasps(std::span<const GraspMetrics> metrics, const FilterThresholds& thresholds) {
  thresholds.validate();
  FilterResult out;
  for (std::size_t i = 0; i < metrics.size(); ++i) {
    auto violated = violated_thresholds(metrics[i], thresholds);
    if (violated.empty()) {
      out.kept.push_back(i);
    } else {
      out.rejected.push_back({i, std::move(violated)});
    }
  }
  return out;
}

std::vector<Wrench> default_external_wrenches() {
  std::vector<Wrench> out;
  for (int axis = 0; axis < 3; ++axis) {
    for (double sign : {1.0, -1.0}) {
      Wrench w = Wrench::Zero();
      w[axis] = 10.0 * sign;
      out.push_back(w);
    }
  }
  Wrench gravity = Wrench::Zero();
  gravity[2] = -9.81;
  out.push_back(gravity);
  return out;
}

std::vector<Vec3> friction_cone_edges(const Vec3& axis, double mu, int facets) {
  const Vec3 n = axis.normalized();
  const Vec3 t1 = any_perpendicular(n);
  const Vec3 t2 = n.cross(t1);
  std::vector<Vec3> out;
  out.reserve(facets);
  for (int k = 0; k < facets; ++k) {
    const double phi = 2.0 * std::numbers::pi * k / facets;
    out.push_back(n + mu * (std::cos(phi) * t1 + std::sin(phi) * t2));
  }
  return out;
}

Eigen::MatrixXd contact_wrench_basis(const ContactSet& contacts, double mu, int facets) {
  Eigen::MatrixXd w(6, static_cast<Eigen::Index>(contacts.size()) * facets);
  for (std::size_t i = 0; i < contacts.size(); ++i) {
    const auto edges = friction_cone_edges(contacts.cone_axes[i], mu, facets);
    for (int k = 0; k < facets; ++k) {
      const Eigen::Index col = static_cast<Eigen::Index>(i) * facets + k;
      w.block<3, 1>(0, col) = edges[k];
      w.block<3, 1>(3, col) = contacts.points[i].cross(edges[k]);
    }
  }
  return w;
}

Eigen::VectorXd nnls(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, int max_iterations) {
  const Eigen::Index n = a.cols();
  if (max_iterations <= 0) max_iterations = static_cast<int>(3 * n + 10);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  std::vector<char> passive(n, 0);
  const double tol = 10.0 * std::numeric_limits<double>::epsilon() * a.cwiseAbs().maxCoeff() *
                     static_cast<double>(std::max(a.rows(), n));

  auto solve_passive = [&](Eigen::VectorXd& s) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (passive[j]) idx.push_back(j);
    }
    Eigen::MatrixXd ap(a.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) ap.col(static_cast<Eigen::Index>(k)) = a.col(idx[k]);
    const Eigen::VectorXd sp = ap.colPivHouseholderQr().solve(b);
    s.setZero(n);
    for (std::size_t k = 0; k < idx.size(); ++k) s[idx[k]] = sp[static_cast<Eigen::Index>(k)];
  };

  Eigen::VectorXd w = a.transpose() * (b - a * x);
  for (int outer = 0; outer < max_iterations; ++outer) {
    Eigen::Index best = -1;
    double best_w = tol;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!passive[j] && w[j] > best_w) {
        best_w = w[j];
        best = j;
      }
    }
    if (best < 0) break;
    passive[best] = 1;
    Eigen::VectorXd s;
    for (int inner = 0; inner < max_iterations; ++inner) {
      solve_passive(s);
      double alpha = kInf;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (passive[j] && s[j] <= tol) alpha = std::min(alpha, x[j] / (x[j] - s[j]));
      }
      if (alpha == kInf) break;
      x += alpha * (s - x);
      for (Eigen::Index j = 0; j < n; ++j) {
        if (passive[j] && x[j] <= tol) {
          passive[j] = 0;
          x[j] = 0.0;
        }
      }
    }
    x = s;
    w = a.transpose() * (b - a * x);
  }
  return x;
}

double wrench_residual(const ContactSet& contacts, const Wrench& external, const WrenchSettings& settings) {
  const Eigen::Index nc = static_cast<Eigen::Index>(contacts.size());
  const int facets = settings.cone_facets;
  const Eigen::MatrixXd basis = contact_wrench_basis(contacts, settings.friction_mu, facets);
  const Eigen::Index nf = basis.cols();
  // Unknowns: facet coefficients then one cap slack per contact.
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(6 + nc, nf + nc);
  Eigen::VectorXd b(6 + nc);
  a.topLeftCorner(6, nf) = basis;
  b.head<6>() = -external;
  for (Eigen::Index i = 0; i < nc; ++i) {
    a.block(6 + i, i * facets, 1, facets).setOnes();
    a(6 + i, nf + i) = 1.0;
    b[6 + i] = settings.max_normal_force;
  }
  const Eigen::VectorXd x = nnls(a, b);
  return (a * x - b).norm();
}

bool wrench_resistance_check(const ContactSet& contacts, const WrenchSettings& settings,
                             std::span<const Wrench> external_wrenches) {
  if (!(settings.friction_mu >= 0.0)) throw std::invalid_argument("friction coefficient must be non-negative");
  if (settings.cone_facets < 3) throw std::invalid_argument("friction cone needs at least 3 facets");
  for (const Wrench& w : external_wrenches) {
    if (contacts.empty()) {
      if (w.norm() > settings.residual_tolerance) return false;
      continue;
    }
    if (wrench_residual(contacts, w, settings) > settings.residual_tolerance) return false;
  }
  return true;
}

GraspMetrics evaluate_metrics(const HandModel& hand, const GraspConfiguration& config,
                              const AffordanceObject& obj, std::span<const Part> df_candidates,
                              const MetricSettings& settings) {
  GraspMetrics m;
  m.d_g = metric_dg(hand, config, obj);
  m.d_f = metric_df(hand, config, obj, df_candidates);
  m.d_ip = metric_dip(hand, config, obj);
  m.d_sp = metric_dsp(hand, config);
  const ContactSet contacts = detect_contacts(hand, config, obj, settings.contact_threshold);
  const auto wrenches = default_external_wrenches();
  m.wrench_resistant = !contacts.empty() && wrench_resistance_check(contacts, settings.wrench, wrenches);
  return m;
}

}  // namespace funcgrasp
