#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace commlink {

/// Discrete-time generalized plant
///
///   x+ = A x + B1 w + B2 u
///   z  = C1 x        + D12 u
///   y  = C2 x + D21 w
///
/// with D11 = 0 and D22 = 0 implied by the realization.
struct PlantModel {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B1;
  Eigen::MatrixXd B2;
  Eigen::MatrixXd C1;
  Eigen::MatrixXd C2;
  Eigen::MatrixXd D12;
  Eigen::MatrixXd D21;

  int states() const { return static_cast<int>(A.rows()); }
  int p1() const { return static_cast<int>(B1.cols()); }
  int p2() const { return static_cast<int>(B2.cols()); }
  int q1() const { return static_cast<int>(C1.rows()); }
  int q2() const { return static_cast<int>(C2.rows()); }

  bool operator==(const PlantModel&) const = default;
};

/// Assignment of control inputs, measurements and (optionally) states to the
/// n sub-controllers. Blocks are contiguous and ordered.
struct Partition {
  int n = 0;
  std::vector<int> uSizes;
  std::vector<int> ySizes;
  /// Explicit state attribution; empty means an equal contiguous split.
  std::vector<int> xSizes;

  /// Offsets of each block (size n + 1, last entry is the total).
  std::vector<int> u_offsets() const;
  std::vector<int> y_offsets() const;
  /// State offsets for `states` states; throws PreconditionError when no
  /// explicit split is given and `states` is not divisible by n.
  std::vector<int> x_offsets(int states) const;

  bool operator==(const Partition&) const = default;
};

struct ValidationReport {
  bool stable = false;
  bool b2BlockDiag = false;
  bool c2BlockDiag = false;
  bool baseStronglyConnected = false;
  /// ||D12'D12 - I||, ||D21 D21' - I||, ||C1'D12||, ||B1 D21'|| (Frobenius).
  std::array<double, 4> paramAssumptionResiduals{};
  double spectralRadius = 0.0;
  std::vector<std::string> warnings;
};

enum class PlantBlock { k11, k12, k21, k22 };

inline constexpr double kDefaultTolZero = 1e-9;

/// Throws InputError naming the first non-conformant field.
void check_dimensions(const PlantModel& plant, const Partition& part);

ValidationReport validate_plant(const PlantModel& plant, const Partition& part,
                                double tolZero = kDefaultTolZero);

double spectral_radius(const Eigen::MatrixXd& A);

/// Impulse-response coefficients G^(t) for t in [tFrom, tTo].
std::vector<Eigen::MatrixXd> markov_params(const PlantModel& plant,
                                           PlantBlock block, int tFrom,
                                           int tTo);

/// Chain of n scalar subsystems with tridiagonal A. Diagonal entries are
/// drawn uniformly from [0.3, 0.6], off-diagonals equal `couple`, and A is
/// rescaled so that rho(A) <= 0.95. B2 = C2 = I and the disturbance and
/// performance channels are orthogonal to the control channels.
std::pair<PlantModel, Partition> gen_chain_plant(int n, double couple,
                                                 std::uint64_t seed);

/// Throws PreconditionError when rho(A) >= 1.
void require_stable(const PlantModel& plant);

}  // namespace commlink
