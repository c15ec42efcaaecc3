#include <random>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "bipedest/biped_filter.hpp"
#include "bipedest/contact_manager.hpp"
#include "oracles.hpp"

using namespace bipedest;

namespace {

KinMeasurement exact_kinematics(const FilterState& x, int foot) {
  const Eigen::Matrix3d C = x.q.rotation_matrix();
  KinMeasurement m;
  m.foot = foot;
  m.s_p = C * (x.feet[foot].p - x.r);
  m.s_z = x.q * x.feet[foot].z.inverse();
  return m;
}

Eigen::MatrixXd random_spd(std::mt19937_64& rng, int n, double scale) {
  std::normal_distribution<double> nd;
  Eigen::MatrixXd A(n, n);
  for (int i = 0; i < n * n; ++i) A.data()[i] = nd(rng);
  return scale * (A * A.transpose() / n + 0.1 * Eigen::MatrixXd::Identity(n, n));
}

BipedFilter make_filter(FootModel model, std::mt19937_64& rng) {
  FilterConfig cfg;
  cfg.model = model;
  const ErrorLayout L(model, 2);
  return BipedFilter(cfg, oracle::random_state(rng, 2), random_spd(rng, L.dim(), 1e-3));
}

std::vector<int> foot_indices(const ErrorLayout& L, int foot) {
  std::vector<int> idx;
  for (int k = 0; k < 3; ++k) idx.push_back(L.p(foot) + k);
  if (L.model() == FootModel::Flat) {
    for (int k = 0; k < 3; ++k) idx.push_back(L.theta(foot) + k);
  }
  return idx;
}

}  // namespace

TEST(contact_manager, detects_events) {
  const auto ev = detect_contact_events({true, true}, {false, true}, 1.5);
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_EQ(ev[0].foot, 0);
  EXPECT_EQ(ev[0].kind, ContactKind::Liftoff);
  EXPECT_DOUBLE_EQ(ev[0].t, 1.5);
  const auto both = detect_contact_events({false, true}, {true, false}, 0.0);
  ASSERT_EQ(both.size(), 2u);
  EXPECT_EQ(both[0].kind, ContactKind::Touchdown);
  EXPECT_EQ(both[1].kind, ContactKind::Liftoff);
  EXPECT_TRUE(detect_contact_events({true}, {true}, 0.0).empty());
}

TEST(contact_manager, touchdown_inverts_noiseless_kinematics) {
  std::mt19937_64 rng(3);
  for (FootModel model : {FootModel::Point, FootModel::Flat}) {
    const ErrorLayout L(model, 2);
    for (int i = 0; i < 100; ++i) {
      const FilterState truth = oracle::random_state(rng, 2);
      FilterState x = truth;
      x.feet[1].p += Eigen::Vector3d(0.3, -0.2, 0.1);
      x.feet[1].z = oracle::random_rotation(rng);
      x.feet[1].in_contact = false;
      Eigen::MatrixXd P = Eigen::MatrixXd::Identity(L.dim(), L.dim()) * 1e-4;
      touchdown_reset(x, P, exact_kinematics(truth, 1), L,
                      Eigen::MatrixXd::Identity(L.meas_dim(), L.meas_dim()) * 1e-4,
                      TouchdownCovariance::Correlated);
      EXPECT_TRUE(x.feet[1].in_contact);
      EXPECT_LT((x.feet[1].p - truth.feet[1].p).norm(), 1e-14);
      if (model == FootModel::Flat) {
        EXPECT_LT(quat_log(x.feet[1].z * truth.feet[1].z.inverse()).norm(), 1e-14);
      }
      EXPECT_EQ(x.r, truth.r);
      EXPECT_EQ(x.feet[0].p, truth.feet[0].p);
    }
  }
}

TEST(contact_manager, correlated_reset_covariance_matches_linearized_map) {
  // Oracle: differentiate the reset map numerically with respect to the full
  // error state and the measurement noise, then push blockdiag(P, R) through.
  std::mt19937_64 rng(4);
  for (FootModel model : {FootModel::Point, FootModel::Flat}) {
    const ErrorLayout L(model, 2);
    const int n = L.dim(), m = L.meas_dim();
    for (int trial = 0; trial < 10; ++trial) {
      const FilterState x0 = oracle::random_state(rng, 2);
      const KinMeasurement meas0 = exact_kinematics(oracle::random_state(rng, 2), 0);
      const Eigen::MatrixXd P = random_spd(rng, n, 1e-2);
      const Eigen::MatrixXd R = random_spd(rng, m, 1e-3);

      auto reset = [&](const Eigen::VectorXd& z) {
        FilterState x = retract(x0, z.head(n), L);
        KinMeasurement meas = meas0;
        meas.s_p += z.segment<3>(n);
        if (m == 6) meas.s_z = quat_exp(z.segment<3>(n + 3)) * meas.s_z;
        Eigen::MatrixXd dummy = Eigen::MatrixXd::Identity(n, n);
        touchdown_reset(x, dummy, meas, L, Eigen::MatrixXd::Identity(m, m),
                        TouchdownCovariance::Correlated);
        return x;
      };
      const FilterState xr = reset(Eigen::VectorXd::Zero(n + m));
      Eigen::MatrixXd T(n, n + m);
      const double eps = 1e-6;
      for (int c = 0; c < n + m; ++c) {
        Eigen::VectorXd d = Eigen::VectorXd::Zero(n + m);
        d[c] = eps;
        T.col(c) = (local_difference(reset(d), xr, L) - local_difference(reset(-d), xr, L)) /
                   (2.0 * eps);
      }
      Eigen::MatrixXd PR = Eigen::MatrixXd::Zero(n + m, n + m);
      PR.topLeftCorner(n, n) = P;
      PR.bottomRightCorner(m, m) = R;
      const Eigen::MatrixXd expected = T * PR * T.transpose();

      FilterState x = x0;
      Eigen::MatrixXd Pn = P;
      touchdown_reset(x, Pn, meas0, L, R, TouchdownCovariance::Correlated);
      EXPECT_LT((Pn - expected).norm(), 1e-7 * expected.norm());
    }
  }
}

TEST(contact_manager, decoupled_reset_zeroes_cross_terms) {
  std::mt19937_64 rng(5);
  const ErrorLayout L(FootModel::Flat, 2);
  FilterState x = oracle::random_state(rng, 2);
  Eigen::MatrixXd P = random_spd(rng, L.dim(), 1e-2);
  const Eigen::MatrixXd R = Eigen::MatrixXd::Identity(6, 6) * 1e-4;
  touchdown_reset(x, P, exact_kinematics(x, 0), L, R, TouchdownCovariance::Decoupled);
  EXPECT_TRUE(P.block(L.p(0), 0, 3, L.p(0)).isZero(0.0));
  EXPECT_TRUE(P.block(L.theta(0), 0, 3, L.theta(0)).isZero(0.0));
  const Eigen::Matrix3d Ct = x.q.rotation_matrix().transpose();
  EXPECT_LT((P.block<3, 3>(L.p(0), L.p(0)) - Ct * R.topLeftCorner<3, 3>() * Ct.transpose()).norm(),
            1e-18);
  EXPECT_TRUE(covariance_health(P).ok());
}

TEST(contact_manager, touchdown_rejects_bad_foot) {
  const ErrorLayout L(FootModel::Point, 1);
  FilterState x;
  x.feet.resize(1);
  Eigen::MatrixXd P = Eigen::MatrixXd::Identity(L.dim(), L.dim());
  KinMeasurement m;
  m.foot = 3;
  EXPECT_THROW(touchdown_reset(x, P, m, L, Eigen::Matrix3d::Identity(),
                               TouchdownCovariance::Correlated),
               std::out_of_range);
}

TEST(biped_filter, liftoff_inflates_only_the_lifted_foot) {
  std::mt19937_64 rng(6);
  for (FootModel model : {FootModel::Point, FootModel::Flat}) {
    for (int trial = 0; trial < 10; ++trial) {
      BipedFilter a = make_filter(model, rng);
      BipedFilter b = a;
      ASSERT_TRUE(b.on_liftoff(1));
      EXPECT_FALSE(b.on_liftoff(1));
      EXPECT_TRUE(b.inflated(1));
      EXPECT_FALSE(b.inflated(0));
      const ImuSample u = oracle::random_imu(rng);
      a.predict(u, 1e-3);
      b.predict(u, 1e-3);

      const ErrorLayout& L = a.layout();
      const std::vector<int> idx = foot_indices(L, 1);
      Eigen::MatrixXd D = b.covariance() - a.covariance();
      Eigen::MatrixXd block(idx.size(), idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i) {
        for (std::size_t j = 0; j < idx.size(); ++j) {
          block(i, j) = D(idx[i], idx[j]);
          D(idx[i], idx[j]) = 0.0;
        }
      }
      EXPECT_TRUE(D.isZero(0.0));
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(block);
      EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
      EXPECT_EQ(a.state().r, b.state().r);
    }
  }
}

TEST(biped_filter, lifted_foot_is_not_measured) {
  std::mt19937_64 rng(7);
  BipedFilter f = make_filter(FootModel::Flat, rng);
  ASSERT_TRUE(f.on_liftoff(0));
  ASSERT_TRUE(f.on_liftoff(1));
  const Eigen::MatrixXd P0 = f.covariance();
  std::vector<KinMeasurement> m{exact_kinematics(oracle::random_state(rng, 2), 0)};
  const UpdateResult r = f.update(m);
  EXPECT_TRUE(r.accepted);
  EXPECT_TRUE(r.correction.isZero(0.0));
  EXPECT_EQ(f.covariance(), P0);
}

TEST(biped_filter, touchdown_restores_nominal_noise) {
  std::mt19937_64 rng(8);
  BipedFilter f = make_filter(FootModel::Flat, rng);
  EXPECT_FALSE(f.on_touchdown(0, exact_kinematics(f.state(), 0)));  // already in contact
  ASSERT_TRUE(f.on_liftoff(0));
  EXPECT_FALSE(f.on_touchdown(0, std::nullopt));
  EXPECT_FALSE(f.on_touchdown(0, exact_kinematics(f.state(), 1)));  // wrong foot
  ASSERT_TRUE(f.on_touchdown(0, exact_kinematics(f.state(), 0)));
  EXPECT_FALSE(f.inflated(0));
  EXPECT_TRUE(f.state().feet[0].in_contact);
}

TEST(biped_filter, exact_measurement_leaves_state_unchanged) {
  std::mt19937_64 rng(9);
  BipedFilter f = make_filter(FootModel::Flat, rng);
  const FilterState x0 = f.state();
  std::vector<KinMeasurement> m{exact_kinematics(x0, 0), exact_kinematics(x0, 1)};
  const UpdateResult r = f.update(m);
  ASSERT_TRUE(r.accepted);
  EXPECT_LT(r.correction.norm(), 1e-12);
  EXPECT_LT(f.covariance().trace(), make_filter(FootModel::Flat, rng).covariance().trace() + 1.0);
}

TEST(biped_filter, update_reduces_uncertainty) {
  std::mt19937_64 rng(10);
  BipedFilter f = make_filter(FootModel::Point, rng);
  const Eigen::MatrixXd P0 = f.covariance();
  KinMeasurement m;
  m.foot = 0;
  m.s_p = predict_measurements(f.state(), 0, FootModel::Point)->s_p;
  std::vector<KinMeasurement> ms{m};
  ASSERT_TRUE(f.update(ms).accepted);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(P0 - f.covariance());
  EXPECT_GT(es.eigenvalues().minCoeff(), -1e-15);
}

TEST(biped_filter, constructor_checks_shapes) {
  FilterConfig cfg;
  cfg.model = FootModel::Point;
  FilterState x;
  x.feet.resize(2);
  EXPECT_THROW(BipedFilter(cfg, x, Eigen::MatrixXd::Identity(18, 18)), std::invalid_argument);
  x.feet.resize(1);
  EXPECT_THROW(BipedFilter(cfg, x, Eigen::MatrixXd::Identity(18, 18)), std::invalid_argument);
  cfg.n_feet = 1;
  EXPECT_NO_THROW(BipedFilter(cfg, x, Eigen::MatrixXd::Identity(18, 18)));
  cfg.inflation = 0.5;
  EXPECT_THROW(BipedFilter(cfg, x, Eigen::MatrixXd::Identity(18, 18)), std::invalid_argument);
}
