#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "bipedest/biped_model.hpp"

namespace bipedest {

/// A true (noise-free) state and a constant IMU input realizing one singular
/// case of the local observability analysis. All feet are in contact.
struct ScenarioSpec {
  std::string name;
  std::string table;      ///< "I", "II" or "III"
  std::string condition;  ///< row condition in words
  FootModel model = FootModel::Point;
  FilterState state;
  ImuSample input;
  Eigen::Vector3d gravity{0.0, 0.0, -9.81};
  int expected_rank_loss = 0;

  int n_feet() const { return static_cast<int>(state.feet.size()); }
  ErrorLayout layout() const { return {model, n_feet()}; }
  /// World acceleration implied by the input: C^T (f - b_f) + g.
  Eigen::Vector3d acceleration() const;
};

enum class ObservabilityConstruction {
  /// Stacks H(t) Phi(t, 0) sampled along the noise-free trajectory driven by
  /// the constant input. Spans the gradients of all Lie derivatives of the
  /// measurement map along the drift.
  Trajectory,
  /// Stacks [H; H Fc; ...; H Fc^(order-1)] with H and Fc frozen at the
  /// scenario state.
  Frozen,
};

struct ObservabilityOptions {
  ObservabilityConstruction construction = ObservabilityConstruction::Trajectory;
  double horizon = 2.0;    ///< s, trajectory construction
  int samples = 40;        ///< sample instants after t = 0
  double step = 1e-3;      ///< RK4 step, s
  int order = 0;           ///< frozen construction; 0 means the error dimension
};

Eigen::MatrixXd build_observability_matrix(const ScenarioSpec& spec,
                                           const ObservabilityOptions& options = {});

struct RankReport {
  std::string name;
  int dim = 0;
  int rank = 0;
  int rank_loss = 0;  ///< dim - rank - nominal
  int expected_rank_loss = 0;
  Eigen::VectorXd singular_values;
  Eigen::MatrixXd nullspace;  ///< dim x (dim - rank)
  double threshold = 0.0;
  double max_null_residual = 0.0;  ///< max ||O v|| / ||v|| over nullspace columns
  bool ambiguous = false;          ///< a singular value lies within 10x of the threshold
  bool pass = false;
};

/// Position (3) and yaw (1) are unobservable in every configuration.
inline constexpr int kNominalUnobservable = 4;

/// Numerical rank with threshold max(rows, cols) * sigma_max * rel_tol.
RankReport rank_loss(const Eigen::MatrixXd& O, double rel_tol = 1e-10,
                     int nominal = kNominalUnobservable);

RankReport analyze(const ScenarioSpec& spec, const ObservabilityOptions& options = {});

/// One scenario per row of the single point foot, two point feet and flat
/// foot rank-deficiency tables.
std::vector<ScenarioSpec> scenario_suite();

/// Error-state direction of a common translation of base and feet.
Eigen::VectorXd translation_direction(const ErrorLayout& layout, int axis);

/// Error-state direction of a small rotation of the whole configuration
/// about the world vertical axis.
Eigen::VectorXd yaw_direction(const FilterState& x, const ErrorLayout& layout);

}  // namespace bipedest
