#include "commlink/fir.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "commlink/errors.hpp"

namespace commlink {

FirTM::FirTM(int rows, int cols, int tMin, int tMax)
    : rows_(rows), cols_(cols), tMin_(tMin), tMax_(tMax) {
  if (rows < 0 || cols < 0 || tMin < 0 || tMax < tMin - 1) {
    throw PreconditionError("FirTM: invalid shape or delay range");
  }
  coeffs_.assign(std::max(0, tMax - tMin + 1),
                 Eigen::MatrixXd::Zero(rows, cols));
}

Eigen::MatrixXd& FirTM::at(int t) {
  if (t < tMin_ || t > tMax_) {
    std::ostringstream os;
    os << "FirTM: delay " << t << " outside [" << tMin_ << ", " << tMax_ << "]";
    throw PreconditionError(os.str());
  }
  return coeffs_[t - tMin_];
}

const Eigen::MatrixXd& FirTM::at(int t) const {
  return const_cast<FirTM*>(this)->at(t);
}

Eigen::MatrixXd FirTM::coeff(int t) const {
  if (t < tMin_ || t > tMax_) return Eigen::MatrixXd::Zero(rows_, cols_);
  return coeffs_[t - tMin_];
}

Eigen::VectorXd FirTM::vectorize() const {
  const Eigen::Index block = static_cast<Eigen::Index>(rows_) * cols_;
  Eigen::VectorXd v(block * length());
  for (int k = 0; k < length(); ++k) {
    v.segment(k * block, block) =
        Eigen::Map<const Eigen::VectorXd>(coeffs_[k].data(), block);
  }
  return v;
}

FirTM FirTM::from_vector(const Eigen::VectorXd& v, int rows, int cols,
                         int tMin, int tMax) {
  FirTM out(rows, cols, tMin, tMax);
  const Eigen::Index block = static_cast<Eigen::Index>(rows) * cols;
  if (v.size() != block * out.length()) {
    throw PreconditionError("FirTM::from_vector: size mismatch");
  }
  for (int k = 0; k < out.length(); ++k) {
    out.coeffs_[k] = Eigen::Map<const Eigen::MatrixXd>(v.data() + k * block,
                                                       rows, cols);
  }
  return out;
}

double FirTM::squared_norm() const {
  double s = 0.0;
  for (const auto& c : coeffs_) s += c.squaredNorm();
  return s;
}

namespace {

void require_same_shape(const FirTM& a, const FirTM& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols() || a.t_min() != b.t_min() ||
      a.t_max() != b.t_max()) {
    throw PreconditionError("FirTM: operands have different shapes");
  }
}

}  // namespace

FirTM& FirTM::operator+=(const FirTM& other) {
  require_same_shape(*this, other);
  for (std::size_t k = 0; k < coeffs_.size(); ++k) coeffs_[k] += other.coeffs_[k];
  return *this;
}

FirTM& FirTM::operator-=(const FirTM& other) {
  require_same_shape(*this, other);
  for (std::size_t k = 0; k < coeffs_.size(); ++k) coeffs_[k] -= other.coeffs_[k];
  return *this;
}

FirTM& FirTM::operator*=(double s) {
  for (auto& c : coeffs_) c *= s;
  return *this;
}

bool FirTM::operator==(const FirTM& other) const {
  if (rows_ != other.rows_ || cols_ != other.cols_ || tMin_ != other.tMin_ ||
      tMax_ != other.tMax_) {
    return false;
  }
  for (std::size_t k = 0; k < coeffs_.size(); ++k) {
    if (coeffs_[k] != other.coeffs_[k]) return false;
  }
  return true;
}

FirTM operator+(FirTM a, const FirTM& b) { return a += b; }
FirTM operator-(FirTM a, const FirTM& b) { return a -= b; }
FirTM operator*(double s, FirTM a) { return a *= s; }

double fir_h2_norm(const FirTM& X) { return std::sqrt(X.squared_norm()); }

double fir_inner(const FirTM& a, const FirTM& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw PreconditionError("fir_inner: coefficient shapes differ");
  }
  double s = 0.0;
  const int lo = std::max(a.t_min(), b.t_min());
  const int hi = std::min(a.t_max(), b.t_max());
  for (int t = lo; t <= hi; ++t) s += a.at(t).cwiseProduct(b.at(t)).sum();
  return s;
}

}  // namespace commlink
