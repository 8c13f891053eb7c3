#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "proprio/errors.hpp"
#include "proprio/kalman.hpp"

using namespace proprio;
using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

namespace {

Mat random_psd(Eigen::Index n, std::mt19937_64& rng, double floor = 0.0) {
  std::normal_distribution<double> g(0.0, 1.0);
  Mat a(n, n);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = g(rng);
  return a * a.transpose() / static_cast<double>(n) + floor * Mat::Identity(n, n);
}

KalmanConfig<double> scalar_config(double p0, double q, double h1, double h2, double r1, double r2) {
  KalmanConfig<double> cfg;
  cfg.A = Mat::Identity(1, 1);
  cfg.B = Mat::Zero(1, 0);
  cfg.H = Mat(2, 1);
  cfg.H << h1, h2;
  cfg.Q = Mat::Constant(1, 1, q);
  cfg.R = Mat::Zero(2, 2);
  cfg.R(0, 0) = r1;
  cfg.R(1, 1) = r2;
  cfg.P0 = Mat::Constant(1, 1, p0);
  return cfg;
}

Mat steady_state_P(const KalmanConfig<double>& cfg, int steps = 400) {
  auto s = initial_state(cfg, Vec::Zero(cfg.state_dim()).eval());
  const Vec z = Vec::Zero(cfg.measurement_dim());
  for (int i = 0; i < steps; ++i) s = update(predict(std::move(s), cfg), cfg, z);
  return s.P;
}

}  // namespace

TEST(Predict, IdentityPropagation) {
  std::mt19937_64 rng(1);
  auto cfg = KalmanConfig<double>::two_sensor(3, Mat::Zero(3, 3), Mat::Identity(3, 3), Mat::Identity(3, 3));
  KalmanState<double> s{Vec::Constant(3, 0.4), random_psd(3, rng, 0.1), 0};
  const auto same = predict(s, cfg);
  EXPECT_EQ(same.x, s.x);
  EXPECT_LE((same.P - s.P).cwiseAbs().maxCoeff(), 1e-15);

  cfg.Q = 0.25 * Mat::Identity(3, 3);
  const auto grown = predict(s, cfg);
  EXPECT_LE((grown.P - s.P - cfg.Q).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Predict, RandomTransitionKeepsPSD) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    KalmanConfig<double> cfg;
    cfg.A = Mat(4, 4);
    for (Eigen::Index i = 0; i < 16; ++i) cfg.A.data()[i] = g(rng);
    cfg.B = Mat::Zero(4, 0);
    cfg.H = Mat::Identity(4, 4);
    cfg.Q = random_psd(4, rng);
    cfg.R = Mat::Identity(4, 4);
    cfg.P0 = random_psd(4, rng);
    const auto s = predict(initial_state(cfg, Vec::Zero(4).eval()), cfg);
    EXPECT_TRUE(detail::is_symmetric(s.P, 0.0));
    EXPECT_GE(detail::min_eigenvalue(s.P), -1e-10 * std::max(1.0, s.P.norm()));
  }
}

TEST(Predict, Control) {
  auto cfg = KalmanConfig<double>::two_sensor(2, Mat::Zero(2, 2), Mat::Identity(2, 2), Mat::Identity(2, 2));
  cfg.B = Mat::Identity(2, 2);
  const Vec u = Vec::Constant(2, 0.5);
  const auto s = predict(initial_state(cfg, Vec::Zero(2).eval()), cfg, &u);
  EXPECT_EQ(s.x, u);
  const Vec bad = Vec::Zero(3);
  EXPECT_THROW(predict(s, cfg, &bad), InvalidInput);
}

TEST(Update, HandComputedScalar) {
  const auto cfg = scalar_config(1.0, 0.0, 1.0, 1.0, 1.0, 1.0);
  const auto K = kalman_gain(cfg.P0, cfg);
  EXPECT_NEAR(K(0, 0), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(K(0, 1), 1.0 / 3.0, 1e-15);
  Vec z(2);
  z << 0.3, 0.6;
  const auto s = update(initial_state(cfg, Vec::Zero(1).eval()), cfg, z);
  EXPECT_NEAR(s.P(0, 0), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(s.x(0), 0.3, 1e-15);
}

TEST(Update, ScalarClosedFormRandom) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> pos(0.01, 10.0), gain(-3.0, 3.0);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const double p = pos(rng), r1 = pos(rng), r2 = pos(rng), h1 = gain(rng), h2 = gain(rng);
    const auto cfg = scalar_config(p, 0.0, h1, h2, r1, r2);
    Vec z(2);
    z << gain(rng), gain(rng);
    const auto s = update(initial_state(cfg, Vec::Zero(1).eval()), cfg, z);
    const double info = 1.0 / p + h1 * h1 / r1 + h2 * h2 / r2;
    const double post = 1.0 / info;
    const double mean = post * (h1 * z(0) / r1 + h2 * z(1) / r2);
    worst = std::max({worst, std::abs(s.P(0, 0) - post), std::abs(s.x(0) - mean)});
  }
  EXPECT_LE(worst, 1e-12);
}

TEST(Update, UninformativeAndExactSensors) {
  const Eigen::Index n = 3;
  Vec z(2 * n);
  z << 0.1, 0.2, 0.3, 1.0, 2.0, 3.0;
  auto vague = KalmanConfig<double>::two_sensor(n, Mat::Zero(n, n), 1e12 * Mat::Identity(n, n),
                                                1e12 * Mat::Identity(n, n));
  vague.P0 = Mat::Identity(n, n);
  const auto s = update(initial_state(vague, Vec::Zero(n).eval()), vague, z);
  EXPECT_LE(s.x.cwiseAbs().maxCoeff(), 1e-11);

  auto exact = KalmanConfig<double>::two_sensor(n, Mat::Zero(n, n), 1e-14 * Mat::Identity(n, n),
                                                Mat::Identity(n, n));
  exact.P0 = Mat::Identity(n, n);
  const auto e = update(initial_state(exact, Vec::Zero(n).eval()), exact, z);
  EXPECT_LE((e.x - z.head(n)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Update, SingularInnovationThrows) {
  KalmanConfig<double> cfg = scalar_config(0.0, 0.0, 1.0, 1.0, 1.0, 1.0);
  cfg.R.setZero();
  Vec z = Vec::Zero(2);
  KalmanState<double> s{Vec::Zero(1), Mat::Zero(1, 1), 0};
  EXPECT_THROW(update(s, cfg, z), NumericalError);
  EXPECT_THROW(update(s, scalar_config(1, 0, 1, 1, 1, 1), Vec::Zero(3).eval()), InvalidInput);
}

TEST(Update, CovarianceStaysPSDOverManyCycles) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> scale(-6.0, 2.0);
  const Eigen::Index n = 3;
  double worst = 0.0;
  for (int run = 0; run < 100; ++run) {
    KalmanConfig<double> cfg;
    cfg.A = Mat::Identity(n, n);
    cfg.B = Mat::Zero(n, 0);
    cfg.H = Mat(2 * n, n);
    for (Eigen::Index i = 0; i < cfg.H.size(); ++i) cfg.H.data()[i] = g(rng);
    cfg.Q = std::pow(10.0, scale(rng)) * random_psd(n, rng);
    cfg.R = std::pow(10.0, scale(rng)) * random_psd(2 * n, rng, 1e-3);
    cfg.P0 = random_psd(n, rng);
    auto s = initial_state(cfg, Vec::Zero(n).eval());
    for (int k = 0; k < 1000; ++k) {
      Vec z(2 * n);
      for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = g(rng);
      s = update(predict(std::move(s), cfg), cfg, z);
      ASSERT_TRUE(detail::is_symmetric(s.P, 0.0));
      worst = std::min(worst, detail::min_eigenvalue(s.P) / std::max(1.0, s.P.norm()));
    }
  }
  EXPECT_GE(worst, -1e-10);
}

TEST(Update, InformationOrdering) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> pos(0.01, 4.0);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index n = 3;
    Vec q(n), rb(n), ri(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      q(i) = pos(rng);
      rb(i) = pos(rng);
      ri(i) = pos(rng);
    }
    auto both = KalmanConfig<double>::two_sensor(n, q.asDiagonal(), rb.asDiagonal(), ri.asDiagonal());
    auto only = [&](const Vec& r) {
      KalmanConfig<double> c;
      c.A = Mat::Identity(n, n);
      c.B = Mat::Zero(n, 0);
      c.H = Mat::Identity(n, n);
      c.Q = q.asDiagonal();
      c.R = r.asDiagonal();
      c.P0 = Mat::Identity(n, n);
      return c;
    };
    const Mat fused = steady_state_P(both);
    const Mat pb = steady_state_P(only(rb));
    const Mat pi = steady_state_P(only(ri));
    for (Eigen::Index i = 0; i < n; ++i) EXPECT_LE(fused(i, i), std::min(pb(i, i), pi(i, i)) + 1e-15);
  }
}

TEST(Update, RiccatiScaleEquivariance) {
  std::mt19937_64 rng(6);
  const Eigen::Index n = 2;
  auto base = KalmanConfig<double>::two_sensor(n, random_psd(n, rng, 0.01), random_psd(n, rng, 0.1),
                                               random_psd(n, rng, 0.1));
  base.P0 = random_psd(n, rng, 0.1);
  auto scaled = base;
  scaled.Q *= 2.0;
  scaled.R *= 2.0;
  scaled.P0 *= 2.0;
  auto r_only = base;
  r_only.R *= 2.0;

  auto gain_after = [](const KalmanConfig<double>& cfg, int steps) {
    Mat P = cfg.P0;
    for (int i = 0; i < steps; ++i) {
      KalmanState<double> s{Vec::Zero(cfg.state_dim()), P, 0};
      s = update(predict(std::move(s), cfg), cfg, Vec::Zero(cfg.measurement_dim()).eval());
      P = s.P;
    }
    return kalman_gain<double>(cfg.A * P * cfg.A.transpose() + cfg.Q, cfg);
  };
  for (int steps : {0, 1, 5, 200}) {
    EXPECT_LE((gain_after(base, steps) - gain_after(scaled, steps)).cwiseAbs().maxCoeff(), 1e-12);
  }
  EXPECT_GT((gain_after(base, 200) - gain_after(r_only, 200)).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(KalmanConfig, Validation) {
  auto cfg = KalmanConfig<double>::two_sensor(2, Mat::Identity(2, 2), Mat::Identity(2, 2), Mat::Identity(2, 2));
  EXPECT_NO_THROW(cfg.validate());
  auto bad_r = cfg;
  bad_r.R(0, 0) = 0.0;
  EXPECT_THROW(bad_r.validate(), InvalidInput);
  auto bad_q = cfg;
  bad_q.Q(0, 1) = 5.0;
  EXPECT_THROW(bad_q.validate(), InvalidInput);
  auto bad_dim = cfg;
  bad_dim.H = Mat::Identity(3, 2);
  EXPECT_THROW(bad_dim.validate(), InvalidInput);
}
