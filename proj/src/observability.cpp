#include "bipedest/observability.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/SVD>

namespace bipedest {

Eigen::Vector3d ScenarioSpec::acceleration() const {
  return state.q.rotation_matrix().transpose() * (input.f - state.b_f) + gravity;
}

namespace {

Eigen::MatrixXd stacked_measurement_jacobian(const FilterState& x, const ErrorLayout& layout) {
  const int md = layout.meas_dim();
  Eigen::MatrixXd H(md * layout.n_feet(), layout.dim());
  for (int i = 0; i < layout.n_feet(); ++i) {
    H.middleRows(md * i, md) = measurement_jacobian(x, i, layout);
  }
  return H;
}

Eigen::MatrixXd frozen_matrix(const ScenarioSpec& spec, const ObservabilityOptions& opt) {
  const ErrorLayout layout = spec.layout();
  const int n = layout.dim();
  const int order = opt.order > 0 ? opt.order : n;
  const Eigen::MatrixXd H = stacked_measurement_jacobian(spec.state, layout);
  const Eigen::MatrixXd F = prediction_jacobian_continuous(spec.state, spec.input, layout);

  Eigen::MatrixXd O(H.rows() * order, n);
  Eigen::MatrixXd block = H;
  for (int k = 0; k < order; ++k) {
    O.middleRows(H.rows() * k, H.rows()) = block;
    block = block * F;
  }
  return O;
}

// Integrates the noise-free nonlinear state together with the transition
// matrix of the linearized error dynamics, Phi' = Fc(x(t), u) Phi, using RK4.
// The attitude has a closed form under a constant angular rate.
Eigen::MatrixXd trajectory_matrix(const ScenarioSpec& spec, const ObservabilityOptions& opt) {
  if (!(opt.horizon > 0.0) || opt.samples < 1 || !(opt.step > 0.0)) {
    throw std::invalid_argument("build_observability_matrix: invalid trajectory options");
  }
  const ErrorLayout layout = spec.layout();
  const int n = layout.dim();
  const FilterState& x0 = spec.state;
  const Eigen::Vector3d w_hat = spec.input.w - x0.b_w;
  const Eigen::Vector3d f_hat = spec.input.f - x0.b_f;

  auto state_at = [&](double t, const Eigen::Vector3d& r, const Eigen::Vector3d& v) {
    FilterState x = x0;
    x.r = r;
    x.v = v;
    x.q = quat_exp(w_hat * t) * x0.q;
    return x;
  };

  struct Deriv {
    Eigen::Vector3d r, v;
    Eigen::MatrixXd Phi;
  };
  auto deriv = [&](double t, const Eigen::Vector3d& r, const Eigen::Vector3d& v,
                   const Eigen::MatrixXd& Phi) {
    const FilterState x = state_at(t, r, v);
    const Eigen::MatrixXd F = prediction_jacobian_continuous(x, spec.input, layout);
    return Deriv{v, x.q.rotation_matrix().transpose() * f_hat + spec.gravity, F * Phi};
  };

  const int md = layout.meas_dim() * layout.n_feet();
  Eigen::MatrixXd O((opt.samples + 1) * md, n);

  Eigen::Vector3d r = x0.r;
  Eigen::Vector3d v = x0.v;
  Eigen::MatrixXd Phi = Eigen::MatrixXd::Identity(n, n);
  double t = 0.0;
  O.topRows(md) = stacked_measurement_jacobian(x0, layout);

  const double interval = opt.horizon / opt.samples;
  const int sub = std::max(1, static_cast<int>(std::ceil(interval / opt.step)));
  const double h = interval / sub;
  for (int j = 1; j <= opt.samples; ++j) {
    for (int s = 0; s < sub; ++s) {
      const Deriv k1 = deriv(t, r, v, Phi);
      const Deriv k2 = deriv(t + h / 2, r + h / 2 * k1.r, v + h / 2 * k1.v, Phi + h / 2 * k1.Phi);
      const Deriv k3 = deriv(t + h / 2, r + h / 2 * k2.r, v + h / 2 * k2.v, Phi + h / 2 * k2.Phi);
      const Deriv k4 = deriv(t + h, r + h * k3.r, v + h * k3.v, Phi + h * k3.Phi);
      r += h / 6 * (k1.r + 2 * k2.r + 2 * k3.r + k4.r);
      v += h / 6 * (k1.v + 2 * k2.v + 2 * k3.v + k4.v);
      Phi += h / 6 * (k1.Phi + 2 * k2.Phi + 2 * k3.Phi + k4.Phi);
      t += h;
    }
    O.middleRows(j * md, md) = stacked_measurement_jacobian(state_at(t, r, v), layout) * Phi;
  }
  return O;
}

}  // namespace

Eigen::MatrixXd build_observability_matrix(const ScenarioSpec& spec,
                                           const ObservabilityOptions& options) {
  if (spec.n_feet() < 1) {
    throw std::invalid_argument("build_observability_matrix: scenario has no feet");
  }
  Eigen::MatrixXd O = options.construction == ObservabilityConstruction::Frozen
                          ? frozen_matrix(spec, options)
                          : trajectory_matrix(spec, options);
  if (!O.allFinite()) {
    throw std::runtime_error("build_observability_matrix: non-finite Jacobians in scenario '" +
                             spec.name + "'");
  }
  return O;
}

RankReport rank_loss(const Eigen::MatrixXd& O, double rel_tol, int nominal) {
  RankReport rep;
  rep.dim = static_cast<int>(O.cols());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(O, Eigen::ComputeFullV);
  rep.singular_values = svd.singularValues();
  const double smax = rep.singular_values.size() > 0 ? rep.singular_values(0) : 0.0;
  rep.threshold = static_cast<double>(std::max(O.rows(), O.cols())) * smax * rel_tol;

  rep.rank = 0;
  for (Eigen::Index i = 0; i < rep.singular_values.size(); ++i) {
    const double s = rep.singular_values(i);
    if (s > rep.threshold) {
      ++rep.rank;
    }
    if (s > rep.threshold / 10.0 && s < rep.threshold * 10.0) {
      rep.ambiguous = true;
    }
  }
  rep.rank_loss = rep.dim - rep.rank - nominal;
  rep.nullspace = svd.matrixV().rightCols(rep.dim - rep.rank);
  for (Eigen::Index k = 0; k < rep.nullspace.cols(); ++k) {
    const Eigen::VectorXd v = rep.nullspace.col(k);
    rep.max_null_residual = std::max(rep.max_null_residual, (O * v).norm() / v.norm());
  }
  return rep;
}

RankReport analyze(const ScenarioSpec& spec, const ObservabilityOptions& options) {
  RankReport rep = rank_loss(build_observability_matrix(spec, options));
  rep.name = spec.name;
  rep.expected_rank_loss = spec.expected_rank_loss;
  rep.pass = !rep.ambiguous && rep.rank_loss == spec.expected_rank_loss &&
             rep.max_null_residual < 1e-8;
  return rep;
}

Eigen::VectorXd translation_direction(const ErrorLayout& layout, int axis) {
  Eigen::VectorXd d = Eigen::VectorXd::Zero(layout.dim());
  d(layout.r() + axis) = 1.0;
  for (int i = 0; i < layout.n_feet(); ++i) {
    d(layout.p(i) + axis) = 1.0;
  }
  return d;
}

Eigen::VectorXd yaw_direction(const FilterState& x, const ErrorLayout& layout) {
  const Eigen::Vector3d ez = Eigen::Vector3d::UnitZ();
  Eigen::VectorXd d = Eigen::VectorXd::Zero(layout.dim());
  d.segment<3>(layout.r()) = ez.cross(x.r);
  d.segment<3>(layout.v()) = ez.cross(x.v);
  d.segment<3>(layout.phi()) = x.q.rotation_matrix() * ez;
  for (int i = 0; i < layout.n_feet(); ++i) {
    d.segment<3>(layout.p(i)) = ez.cross(x.feet[i].p);
    if (layout.model() == FootModel::Flat) {
      d.segment<3>(layout.theta(i)) = x.feet[i].z.rotation_matrix() * ez;
    }
  }
  return d;
}

// ---------------------------------------------------------------------------
// Scenario construction

namespace {

const Eigen::Vector3d kGravity(0.0, 0.0, -9.81);

struct Motion {
  Eigen::Vector3d r{0.05, -0.02, 0.9};
  Eigen::Vector3d v{0.12, -0.07, 0.04};
  Eigen::Vector3d a{0.3, -0.2, 0.5};
  Quaternion q = from_euler_zyx(0.1, -0.15, 0.4);
  Eigen::Vector3d w = Eigen::Vector3d::Zero();  ///< body frame
};

ScenarioSpec make(std::string name, std::string table, std::string condition, FootModel model,
                  const Motion& m, const std::vector<Eigen::Vector3d>& feet, int expected) {
  ScenarioSpec s;
  s.name = std::move(name);
  s.table = std::move(table);
  s.condition = std::move(condition);
  s.model = model;
  s.gravity = kGravity;
  s.state.r = m.r;
  s.state.v = m.v;
  s.state.q = m.q;
  const Quaternion foot_orientations[] = {from_euler_zyx(0.02, -0.03, 0.35),
                                          from_euler_zyx(-0.04, 0.01, 0.5)};
  for (std::size_t i = 0; i < feet.size(); ++i) {
    s.state.feet.push_back({feet[i], foot_orientations[i % 2], true});
  }
  s.input.f = m.q.rotation_matrix() * (m.a - kGravity);
  s.input.w = m.w;
  s.expected_rank_loss = expected;
  return s;
}

// Body-frame unit vector along gravity.
Eigen::Vector3d body_gravity_axis(const Quaternion& q) {
  return (q.rotation_matrix() * kGravity).normalized();
}

Eigen::Vector3d rate_perpendicular_to_gravity(const Quaternion& q) {
  const Eigen::Vector3d c = body_gravity_axis(q);
  return 0.6 * c.cross(Eigen::Vector3d(1.0, 0.3, -0.2)).normalized();
}

Eigen::Vector3d rate_parallel_to_gravity(const Quaternion& q) {
  return 0.6 * body_gravity_axis(q);
}

Eigen::Vector3d rate_generic() { return {0.3, -0.45, 0.25}; }

}  // namespace

std::vector<ScenarioSpec> scenario_suite() {
  using FM = FootModel;
  std::vector<ScenarioSpec> out;
  const Eigen::Vector3d p1(0.1, 0.15, 0.0);
  const Eigen::Vector3d p2(-0.05, -0.15, 0.02);

  // Single point foot.
  {
    Motion m;
    m.a = -0.5 * kGravity;
    out.push_back(make("point1_w0_a_half_g", "I", "w = 0, a = -1/2 g", FM::Point, m, {p1}, 5));
  }
  {
    Motion m;
    out.push_back(make("point1_w0_a_generic", "I", "w = 0, a != -1/2 g", FM::Point, m, {p1}, 3));
  }
  {
    Motion m;
    m.w = rate_perpendicular_to_gravity(m.q);
    out.push_back(make("point1_w_perp_Cg", "I", "w perp Cg", FM::Point, m, {p1}, 1));
  }
  {
    // Rotation about the vertical axis through the contact with the IMU
    // directly above it: v = 0, a = 0.
    Motion m;
    m.w = rate_parallel_to_gravity(m.q);
    m.r = p1 + Eigen::Vector3d(0.0, 0.0, 0.85);
    m.v.setZero();
    m.a.setZero();
    out.push_back(make("point1_w_par_Cg_axis_through_foot_r_above_p", "I",
                       "w par Cg, a = (C^T w) x v, v = (C^T w) x (r - p), (r - p) par g",
                       FM::Point, m, {p1}, 3));
  }
  {
    Motion m;
    m.w = rate_parallel_to_gravity(m.q);
    const Eigen::Vector3d w_world = m.q.rotation_matrix().transpose() * m.w;
    m.v = w_world.cross(m.r - p1);
    m.a = w_world.cross(m.v);
    out.push_back(make("point1_w_par_Cg_axis_through_foot", "I",
                       "w par Cg, a = (C^T w) x v, v = (C^T w) x (r - p), (r - p) not par g",
                       FM::Point, m, {p1}, 2));
  }
  {
    Motion m;
    m.w = rate_parallel_to_gravity(m.q);
    out.push_back(make("point1_w_par_Cg_generic_motion", "I",
                       "w par Cg, a != (C^T w) x v or v != (C^T w) x (r - p)", FM::Point, m,
                       {p1}, 1));
  }
  {
    Motion m;
    m.w = rate_generic();
    out.push_back(make("point1_generic", "I", "w not perp Cg, w not par Cg", FM::Point, m, {p1}, 0));
  }

  // Two point feet.
  {
    Motion m;
    const Eigen::Vector3d dp = p2 - p1;
    m.a = 0.5 * (0.8 * dp - kGravity);  // 2a + g = 0.8 dp
    out.push_back(make("point2_w0_2a_plus_g_par_dp", "II", "w = 0, 2a + g par dp", FM::Point, m,
                       {p1, p2}, 3));
  }
  {
    Motion m;
    out.push_back(make("point2_w0_generic", "II", "w = 0, 2a + g not par dp", FM::Point, m,
                       {p1, p2}, 2));
  }
  {
    Motion m;
    m.w = rate_perpendicular_to_gravity(m.q);
    out.push_back(make("point2_w_perp_Cg", "II", "w perp Cg", FM::Point, m, {p1, p2}, 1));
  }
  {
    Motion m;
    m.w = rate_parallel_to_gravity(m.q);
    const Eigen::Vector3d p2_above = p1 + Eigen::Vector3d(0.0, 0.0, 0.3);
    out.push_back(make("point2_w_par_Cg_dp_par_g", "II", "w par Cg, g par dp", FM::Point, m,
                       {p1, p2_above}, 1));
  }
  {
    Motion m;
    m.w = rate_parallel_to_gravity(m.q);
    out.push_back(make("point2_w_par_Cg_generic", "II", "w par Cg, g not par dp", FM::Point, m,
                       {p1, p2}, 0));
  }
  {
    Motion m;
    m.w = rate_generic();
    out.push_back(make("point2_generic", "II", "w not perp Cg, w not par Cg", FM::Point, m,
                       {p1, p2}, 0));
  }

  // Flat feet.
  {
    Motion m;
    out.push_back(make("flat_w0", "III", "w = 0", FM::Flat, m, {p1}, 2));
  }
  {
    Motion m;
    m.w = rate_perpendicular_to_gravity(m.q);
    out.push_back(make("flat_w_perp_Cg", "III", "w perp Cg", FM::Flat, m, {p1}, 1));
  }
  {
    Motion m;
    m.w = rate_generic();
    out.push_back(make("flat_w_not_perp_Cg", "III", "w not perp Cg", FM::Flat, m, {p1}, 0));
  }
  return out;
}

}  // namespace bipedest
