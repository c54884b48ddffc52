#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "funcgrasp/affordance.hpp"
#include "funcgrasp/contacts.hpp"
#include "funcgrasp/hand_model.hpp"

namespace funcgrasp {

// All distances in meters. d_g and d_f are raw Chamfer values (m^2 in the
// strict sense) compared against thresholds quoted in meters.
struct GraspMetrics {
  double d_g = 0.0;
  double d_f = 0.0;
  double d_ip = 0.0;
  double d_sp = 0.0;
  bool wrench_resistant = false;
};

struct FilterThresholds {
  double max_dg = 0.02;
  double max_df = 0.002;
  double max_dip = 0.002;
  double max_dsp = 0.002;

  void validate() const;
};

double metric_dg(const HandModel& hand, const GraspConfiguration& config, const AffordanceObject& obj);
// Minimum over the candidate fingers of CD(functional anchors, functional part).
double metric_df(const HandModel& hand, const GraspConfiguration& config, const AffordanceObject& obj,
                 std::span<const Part> candidates);
// Deepest penetration of any hand surface point into the object mesh.
double metric_dip(const HandModel& hand, const GraspConfiguration& config, const AffordanceObject& obj);
// Deepest penetration of one part's surface points into another part's primitives.
double metric_dsp(const HandModel& hand, const GraspConfiguration& config);

// Names of violated metrics ("d_G", "d_F", "d_IP", "d_SP"); empty means kept.
std::vector<std::string> violated_thresholds(const GraspMetrics& metrics, const FilterThresholds& thresholds);

struct Rejection {
  std::size_t index = 0;
  std::vector<std::string> violated;
};

struct FilterResult {
  std::vector<std::size_t> kept;
  std::vector<Rejection> rejected;
};

FilterResult filter_grasps(std::span<const GraspMetrics> metrics, const FilterThresholds& thresholds);

using Wrench = Eigen::Matrix<double, 6, 1>;

struct WrenchSettings {
  double friction_mu = 0.5;
  int cone_facets = 8;
  double max_normal_force = 20.0;  // N per contact
  double residual_tolerance = 1e-6;
};

// Six 10 N forces along +-x, +-y, +-z and the weight of a 1 kg object, all
// applied at the object origin.
std::vector<Wrench> default_external_wrenches();

// Edge directions of the linearized friction cone around `axis`; each has
// unit component along the axis.
std::vector<Vec3> friction_cone_edges(const Vec3& axis, double mu, int facets);

// 6 x (facets * n) map from facet coefficients to net contact wrench.
Eigen::MatrixXd contact_wrench_basis(const ContactSet& contacts, double mu, int facets);

// Smallest residual of W a = -w over a >= 0 with per-contact normal force
// capped at max_normal_force, solved as a non-negative least-squares problem
// with slack variables for the caps.
double wrench_residual(const ContactSet& contacts, const Wrench& external, const WrenchSettings& settings);

bool wrench_resistance_check(const ContactSet& contacts, const WrenchSettings& settings,
                             std::span<const Wrench> external_wrenches);

// Lawson-Hanson non-negative least squares: argmin ||A x - b|| s.t. x >= 0.
Eigen::VectorXd nnls(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, int max_iterations = 0);

struct MetricSettings {
  double contact_threshold = 0.005;
  WrenchSettings wrench;
};

GraspMetrics evaluate_metrics(const HandModel& hand, const GraspConfiguration& config,
                              const AffordanceObject& obj, std::span<const Part> df_candidates,
                              const MetricSettings& settings = {});

}  // namespace funcgrasp
