#include "commlink/errors.hpp"
#include "commlink/firmath.hpp"
#include "commlink/qispace.hpp"

namespace commlink {
namespace {

// X (I + sign G22 X)^{-1} truncated to delays 1..horizon, X strictly proper.
FirTM feedback_series(const PlantModel& plant, const FirTM& X, double sign,
                      int horizon) {
  if (X.t_min() < 1) {
    throw PreconditionError("controller recovery needs a strictly proper FIR");
  }
  if (X.rows() != plant.p2() || X.cols() != plant.q2()) {
    throw PreconditionError("controller recovery: FIR must be p2 x q2");
  }
  if (horizon < 1) throw PreconditionError("controller recovery: horizon < 1");
  const int q2 = plant.q2();
  const auto g22 = markov_params(plant, PlantBlock::k22, 1, horizon);

  // M = I + sign G22 X; M^(t) for t >= 1 (M^(0) = I because G22^(0) = 0).
  std::vector<Eigen::MatrixXd> M(horizon + 1, Eigen::MatrixXd::Zero(q2, q2));
  for (int t = 2; t <= horizon; ++t) {
    for (int b = X.t_min(); b <= std::min(X.t_max(), t - 1); ++b) {
      M[t].noalias() += g22[t - b - 1] * X.at(b);
    }
    M[t] *= sign;
  }
  // W = M^{-1}: W^(0) = I, W^(t) = -sum_{s=1}^{t} M^(s) W^(t-s).
  std::vector<Eigen::MatrixXd> W(horizon + 1);
  W[0] = Eigen::MatrixXd::Identity(q2, q2);
  for (int t = 1; t <= horizon; ++t) {
    W[t] = Eigen::MatrixXd::Zero(q2, q2);
    for (int s = 2; s <= t; ++s) W[t].noalias() -= M[s] * W[t - s];
  }
  FirTM out(plant.p2(), q2, 1, horizon);
  for (int t = 1; t <= horizon; ++t) {
    for (int a = X.t_min(); a <= std::min(X.t_max(), t); ++a) {
      out.at(t).noalias() += X.at(a) * W[t - a];
    }
  }
  return out;
}

}  // namespace

FirTM recover_controller(const PlantModel& plant, const FirTM& R, int horizon) {
  require_stable(plant);
  return feedback_series(plant, R, +1.0, horizon);
}

FirTM controller_to_parameter(const PlantModel& plant, const FirTM& K,
                              int horizon) {
  return feedback_series(plant, K, -1.0, horizon);
}

bool implementability_check(const FirTM& K, const Graph& g,
                            const Partition& part, double tolZero) {
  if (K.t_min() < 1) {
    throw PreconditionError("implementability_check: K must start at t = 1");
  }
  BinaryMatrix power = bool_power(g.adj, K.t_min() - 1);
  for (int t = K.t_min(); t <= K.t_max(); ++t) {
    const BinaryMatrix allowed = inflate_block_mask(power, part);
    if (allowed.rows() != K.rows() || allowed.cols() != K.cols()) {
      throw PreconditionError("implementability_check: shape mismatch");
    }
    if ((!allowed && (K.at(t).array().abs() > tolZero)).any()) return false;
    power = bool_product(power, g.adj);
  }
  return true;
}

}  // namespace commlink
