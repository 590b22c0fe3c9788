#pragma once

#include <vector>

#include <Eigen/Dense>

namespace commlink {

/// Finite impulse response transfer matrix
///   X = sum_{t = tMin}^{tMax} X^(t) z^{-t}.
/// Controller-side objects (R, K, group variables) use tMin = 1.
class FirTM {
 public:
  FirTM() = default;
  /// Zero FIR with coefficients tMin..tMax.
  FirTM(int rows, int cols, int tMin, int tMax);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int t_min() const { return tMin_; }
  int t_max() const { return tMax_; }
  int length() const { return tMax_ - tMin_ + 1; }

  /// Coefficient at delay t; t outside [tMin, tMax] is an error.
  Eigen::MatrixXd& at(int t);
  const Eigen::MatrixXd& at(int t) const;
  /// Coefficient at delay t, zero outside the stored range.
  Eigen::MatrixXd coeff(int t) const;

  const std::vector<Eigen::MatrixXd>& coeffs() const { return coeffs_; }

  /// Column-major per coefficient, coefficients in increasing t.
  Eigen::VectorXd vectorize() const;
  static FirTM from_vector(const Eigen::VectorXd& v, int rows, int cols,
                           int tMin, int tMax);

  double squared_norm() const;

  FirTM& operator+=(const FirTM& other);
  FirTM& operator-=(const FirTM& other);
  FirTM& operator*=(double s);

  bool operator==(const FirTM& other) const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  int tMin_ = 1;
  int tMax_ = 0;
  std::vector<Eigen::MatrixXd> coeffs_;
};

FirTM operator+(FirTM a, const FirTM& b);
FirTM operator-(FirTM a, const FirTM& b);
FirTM operator*(double s, FirTM a);

/// sqrt(sum_t ||X^(t)||_F^2).
double fir_h2_norm(const FirTM& X);

/// Frobenius inner product summed over delays (ranges may differ).
double fir_inner(const FirTM& a, const FirTM& b);

}  // namespace commlink
