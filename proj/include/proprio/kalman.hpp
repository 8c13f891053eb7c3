#pragma once

// Linear Kalman filter over dense matrices.
//
//   predict:  x <- A x + B u,          P <- A P A^T + Q
//   update:   K  = P H^T (H P H^T + R)^-1
//             x <- x + K (z - H x),    P <- (I - K H) P (I - K H)^T + K R K^T
//
// The covariance update uses the Joseph form followed by explicit
// symmetrization so P stays symmetric PSD for arbitrary (tuned) H, Q, R.

#include <cmath>
#include <string>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "proprio/errors.hpp"

namespace proprio {

template <typename Scalar = double>
struct KalmanConfig {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  Matrix A;   // n x n
  Matrix B;   // n x p (p may be 0)
  Matrix H;   // m x n
  Matrix Q;   // n x n
  Matrix R;   // m x m
  Matrix P0;  // n x n

  Eigen::Index state_dim() const { return A.rows(); }
  Eigen::Index measurement_dim() const { return H.rows(); }

  /// A = I, B = 0, H = [I; I] for two sensors observing the same n-vector.
  static KalmanConfig two_sensor(Eigen::Index n, const Matrix& Q, const Matrix& R_first,
                                 const Matrix& R_second);

  void validate() const;
};

template <typename Scalar = double>
struct KalmanState {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> x;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> P;
  long step = 0;
};

namespace detail {

template <typename Derived>
bool is_symmetric(const Eigen::MatrixBase<Derived>& m, double tol) {
  return m.rows() == m.cols() && (m - m.transpose()).cwiseAbs().maxCoeff() <=
                                     tol * (1.0 + m.cwiseAbs().maxCoeff());
}

template <typename Derived>
double min_eigenvalue(const Eigen::MatrixBase<Derived>& m) {
  using Matrix = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Matrix sym = (m + m.transpose()) / 2;
  return static_cast<double>(Eigen::SelfAdjointEigenSolver<Matrix>(sym, Eigen::EigenvaluesOnly)
                                 .eigenvalues()
                                 .minCoeff());
}

}  // namespace detail

template <typename Scalar>
KalmanConfig<Scalar> KalmanConfig<Scalar>::two_sensor(Eigen::Index n, const Matrix& Q,
                                                      const Matrix& R_first,
                                                      const Matrix& R_second) {
  KalmanConfig cfg;
  cfg.A = Matrix::Identity(n, n);
  cfg.B = Matrix::Zero(n, 0);
  cfg.H.resize(2 * n, n);
  cfg.H << Matrix::Identity(n, n), Matrix::Identity(n, n);
  cfg.Q = Q;
  cfg.R = Matrix::Zero(2 * n, 2 * n);
  cfg.R.topLeftCorner(n, n) = R_first;
  cfg.R.bottomRightCorner(n, n) = R_second;
  cfg.P0 = R_first;
  return cfg;
}

template <typename Scalar>
void KalmanConfig<Scalar>::validate() const {
  const Eigen::Index n = A.rows();
  const Eigen::Index m = H.rows();
  auto dims = [](const Matrix& mat) { return fmt::format("{}x{}", mat.rows(), mat.cols()); };
  if (n == 0 || A.cols() != n) throw InvalidInput("KalmanConfig: A must be square, got " + dims(A));
  if (B.rows() != n) throw InvalidInput("KalmanConfig: B has wrong row count, got " + dims(B));
  if (H.cols() != n || m == 0) throw InvalidInput("KalmanConfig: H must be m x n, got " + dims(H));
  if (Q.rows() != n || Q.cols() != n) throw InvalidInput("KalmanConfig: Q must be n x n, got " + dims(Q));
  if (P0.rows() != n || P0.cols() != n) throw InvalidInput("KalmanConfig: P0 must be n x n, got " + dims(P0));
  if (R.rows() != m || R.cols() != m) throw InvalidInput("KalmanConfig: R must be m x m, got " + dims(R));
  for (const auto* mat : {&A, &B, &H, &Q, &R, &P0})
    if (!mat->allFinite()) throw InvalidInput("KalmanConfig: non-finite entry");
  constexpr double kTol = 1e-9;
  if (!detail::is_symmetric(Q, kTol) || detail::min_eigenvalue(Q) < -kTol)
    throw InvalidInput("KalmanConfig: Q must be symmetric PSD");
  if (!detail::is_symmetric(P0, kTol) || detail::min_eigenvalue(P0) < -kTol)
    throw InvalidInput("KalmanConfig: P0 must be symmetric PSD");
  if (!detail::is_symmetric(R, kTol) || !(detail::min_eigenvalue(R) > 0.0))
    throw InvalidInput("KalmanConfig: R must be symmetric positive definite");
}

/// State with x0 and the configured initial covariance.
template <typename Scalar>
KalmanState<Scalar> initial_state(const KalmanConfig<Scalar>& cfg,
                                  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& x0) {
  if (x0.size() != cfg.state_dim()) throw InvalidInput("initial state has wrong dimension");
  return {x0, cfg.P0, 0};
}

template <typename Scalar>
KalmanState<Scalar> predict(KalmanState<Scalar> state, const KalmanConfig<Scalar>& cfg,
                            const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>* control = nullptr) {
  const Eigen::Index n = cfg.state_dim();
  if (state.x.size() != n || state.P.rows() != n || state.P.cols() != n)
    throw InvalidInput(fmt::format("predict: state dimension {} does not match config {}",
                                   state.x.size(), n));
  state.x = cfg.A * state.x;
  if (control != nullptr && control->size() > 0) {
    if (control->size() != cfg.B.cols()) throw InvalidInput("predict: control has wrong dimension");
    state.x += cfg.B * (*control);
  }
  state.P = cfg.A * state.P * cfg.A.transpose() + cfg.Q;
  state.P = (state.P + state.P.transpose()).eval() / Scalar(2);
  return state;
}

template <typename Scalar>
KalmanState<Scalar> update(KalmanState<Scalar> state, const KalmanConfig<Scalar>& cfg,
                           const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& z) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Eigen::Index n = cfg.state_dim();
  const Eigen::Index m = cfg.measurement_dim();
  if (state.x.size() != n || state.P.rows() != n)
    throw InvalidInput(fmt::format("update: state dimension {} does not match config {}",
                                   state.x.size(), n));
  if (z.size() != m)
    throw InvalidInput(fmt::format("update: measurement dimension {} != {}", z.size(), m));

  const Matrix PHt = state.P * cfg.H.transpose();
  const Matrix S = cfg.H * PHt + cfg.R;
  const Eigen::LDLT<Matrix> ldlt(S);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      !(ldlt.vectorD().minCoeff() > Scalar(0))) {
    throw NumericalError(fmt::format(
        "update: innovation covariance is singular (step {}, m={}, min pivot {:.3e}, max |S| {:.3e})",
        state.step, m, static_cast<double>(ldlt.vectorD().minCoeff()),
        static_cast<double>(S.cwiseAbs().maxCoeff())));
  }
  // K = P H^T S^-1, computed as (S^-1 H P)^T since S and P are symmetric.
  const Matrix K = ldlt.solve(PHt.transpose()).transpose();
  state.x += K * (z - cfg.H * state.x);

  const Matrix IKH = Matrix::Identity(n, n) - K * cfg.H;
  state.P = IKH * state.P * IKH.transpose() + K * cfg.R * K.transpose();
  state.P = (state.P + state.P.transpose()).eval() / Scalar(2);
  ++state.step;
  if (!state.x.allFinite() || !state.P.allFinite())
    throw NumericalError(fmt::format("update: non-finite state at step {}", state.step));
  return state;
}

/// Kalman gain for the given prior covariance, without touching the state.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> kalman_gain(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& P,
    const KalmanConfig<Scalar>& cfg) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Matrix PHt = P * cfg.H.transpose();
  const Matrix S = cfg.H * PHt + cfg.R;
  return Eigen::LDLT<Matrix>(S).solve(PHt.transpose()).transpose();
}

}  // namespace proprio
