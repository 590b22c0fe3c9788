#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "commlink/commgraph.hpp"
#include "commlink/fir.hpp"
#include "commlink/sysmodel.hpp"

namespace commlink {

inline constexpr double kDefaultTolTail = 1e-10;

struct TruncationHorizon {
  int tMax = 0;
  /// Bound on the closed-loop energy beyond tMax for any R whose
  /// coefficients have Frobenius norm at most 1.
  double epsTail = 0.0;
  /// Inflated decay-rate estimate used by the envelope (0 for nilpotent A).
  double rhoHat = 0.0;
};

/// Smallest horizon T >= N + 2 whose geometric tail bound is at most
/// tolTail * min(1, open-loop energy). Requires rho(A) < 1.
TruncationHorizon truncation_horizon(const PlantModel& plant, int N,
                                     double tolTail = kDefaultTolTail);

struct ObjectiveValue {
  /// sum_{t=0}^{T_max} ||T^(t)||_F^2
  double value = 0.0;
  /// Upper bound on the neglected energy for t > T_max.
  double tailBound = 0.0;
};

/// Quadratic H2 model-matching cost J(R) = ||G11 - G12 R G21||^2 for an FIR
/// parameter R = sum_{t=1}^{N} R^(t) z^{-t}, truncated at T_max.
///
/// The linear part R -> -G12 R G21 and its adjoint are evaluated with
/// state-space recursions, O(T_max) per call. Immutable after construction
/// and safe to share between threads.
class ObjectiveOracle {
 public:
  ObjectiveOracle(PlantModel plant, int N, double tolTail = kDefaultTolTail);
  /// Fixed truncation horizon (no tail certificate; tailBound reports 0).
  ObjectiveOracle(PlantModel plant, int N, int tMax);

  const PlantModel& plant() const { return plant_; }
  int N() const { return N_; }
  int t_max() const { return tMax_; }
  double eps_tail() const { return epsTail_; }
  int param_rows() const { return plant_.p2(); }
  int param_cols() const { return plant_.q2(); }
  int param_size() const { return N_ * param_rows() * param_cols(); }

  /// G11^(t), t = 0..T_max.
  const std::vector<Eigen::MatrixXd>& target() const { return g11_; }

  FirTM zero_parameter() const;

  /// Closed-loop coefficients T^(t) = G11^(t) - (G12 R G21)^(t), t = 0..T_max.
  std::vector<Eigen::MatrixXd> apply(const FirTM& R) const;
  /// apply(R) - apply(0).
  std::vector<Eigen::MatrixXd> apply_linear(const FirTM& R) const;
  /// Adjoint of apply_linear, returned with horizon N.
  FirTM adjoint(const std::vector<Eigen::MatrixXd>& seq) const;

  ObjectiveValue objective(const FirTM& R) const;
  /// dJ/dR = 2 adjoint(apply(R)).
  FirTM gradient(const FirTM& R) const;
  double tail_bound(const FirTM& R) const;

  /// Vectorized helpers (FirTM::vectorize layout, horizon N).
  Eigen::VectorXd normal_apply(const Eigen::VectorXd& r) const;
  Eigen::VectorXd gradient_vec(const Eigen::VectorXd& r) const;
  double objective_vec(const Eigen::VectorXd& r) const;
  FirTM unvectorize(const Eigen::VectorXd& r) const;

 private:
  void check_parameter(const FirTM& R) const;
  std::vector<Eigen::MatrixXd> run_forward(const FirTM& R, bool addTarget) const;

  PlantModel plant_;
  int N_ = 0;
  int tMax_ = 0;
  double epsTail_ = 0.0;
  std::vector<Eigen::MatrixXd> g11_;
  // Tail envelope e(t) = a(t) + r b(t); suffix sums over t > T_max.
  double tailAA_ = 0.0;
  double tailAB_ = 0.0;
  double tailBB_ = 0.0;
};

/// Power-iteration estimate of the Lipschitz constant of grad J, i.e.
/// 2 lambda_max(adjoint o apply_linear), inflated by 2%.
double lipschitz(const ObjectiveOracle& oracle, int iters = 200,
                 std::uint64_t seed = 0);

/// K = R (I + G22 R)^{-1} by power-series inversion, K^(1..horizon).
FirTM recover_controller(const PlantModel& plant, const FirTM& R, int horizon);

/// R = K (I - G22 K)^{-1}, the inverse map of recover_controller.
FirTM controller_to_parameter(const PlantModel& plant, const FirTM& K,
                              int horizon);

/// bsupp(K^(t)) inside supp(G^(t-1)) for every stored t, entries up to
/// tolZero in magnitude count as zero.
bool implementability_check(const FirTM& K, const Graph& g,
                            const Partition& part,
                            double tolZero = kDefaultTolZero);

}  // namespace commlink
