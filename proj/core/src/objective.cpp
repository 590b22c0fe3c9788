#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "commlink/errors.hpp"
#include "commlink/firmath.hpp"

namespace commlink {
namespace {

// Smallest k <= s with A^k == 0 exactly, or 0 if A is not (exactly) nilpotent.
int nilpotency_index(const Eigen::MatrixXd& A) {
  Eigen::MatrixXd P = A;
  for (int k = 1; k <= A.rows(); ++k) {
    if ((P.array() == 0.0).all()) return k;
    P = A * P;
  }
  return 0;
}

// Closed-loop coefficient envelope for t > N:
//   ||T^(t)||_F <= a(t) + r b(t),  r = max_b ||R^(b)||_F,
// with ||G^(t)||_F <= C rhoHat^t for every Markov block of G11, G12, G21.
struct TailSums {
  std::vector<double> aa, ab, bb;  // suffix sums indexed by t - (N + 1)
  int first = 0;                   // t of index 0
  double at(const std::vector<double>& s, int t) const {
    const int k = t - first;
    if (k < 0) return s.front();
    if (k >= static_cast<int>(s.size())) return 0.0;
    return s[k];
  }
};

TailSums tail_sums(int N, double rhoHat, double C) {
  std::vector<double> a, b;
  constexpr int kMaxTerms = 5'000'000;
  double total = 0.0;
  double prevB = std::numeric_limits<double>::infinity();
  for (int t = N + 1; t < N + 1 + kMaxTerms; ++t) {
    const double at = C * std::pow(rhoHat, t);
    double bt = 0.0;
    for (int lag = 1; lag <= N; ++lag) {
      bt += static_cast<double>(t - lag + 1) * std::pow(rhoHat, t - lag);
    }
    bt *= C * C;
    a.push_back(at);
    b.push_back(bt);
    const double term = (at + bt) * (at + bt);
    total += term;
    if (t > N + 10 && bt <= prevB && term <= 1e-32 * std::max(1.0, total)) break;
    prevB = bt;
  }
  TailSums s;
  s.first = N + 1;
  const std::size_t L = a.size();
  s.aa.assign(L + 1, 0.0);
  s.ab.assign(L + 1, 0.0);
  s.bb.assign(L + 1, 0.0);
  for (std::size_t k = L; k-- > 0;) {
    s.aa[k] = s.aa[k + 1] + a[k] * a[k];
    s.ab[k] = s.ab[k + 1] + a[k] * b[k];
    s.bb[k] = s.bb[k + 1] + b[k] * b[k];
  }
  return s;
}

struct Envelope {
  double rhoHat = 0.0;
  double C = 0.0;
  double headEnergy = 0.0;
};

Envelope envelope(const PlantModel& P, int N) {
  constexpr double kInflation = 1.05;
  Envelope env;
  env.rhoHat = kInflation * spectral_radius(P.A);
  if (!(env.rhoHat < 1.0)) {
    std::ostringstream os;
    os << "truncation_horizon: inflated spectral radius " << env.rhoHat
       << " >= 1";
    throw PreconditionError(os.str());
  }
  const int window = std::max({64, 4 * P.states(), 2 * N});
  const double logRho = std::log(env.rhoHat);
  double logC = std::log(std::max({P.D12.norm(), P.D21.norm(), 1e-300}));
  Eigen::MatrixXd AkB1 = P.B1, AkB2 = P.B2;  // A^{t-1} B
  for (int t = 1; t <= window; ++t) {
    const Eigen::MatrixXd g11 = P.C1 * AkB1;
    const double norms[] = {g11.norm(), (P.C1 * AkB2).norm(),
                            (P.C2 * AkB1).norm()};
    env.headEnergy += g11.squaredNorm();
    for (double nrm : norms) {
      if (nrm > 0.0) logC = std::max(logC, std::log(nrm) - t * logRho);
    }
    AkB1 = P.A * AkB1;
    AkB2 = P.A * AkB2;
  }
  env.C = std::exp(logC);
  return env;
}

}  // namespace

TruncationHorizon truncation_horizon(const PlantModel& plant, int N,
                                     double tolTail) {
  if (N < 1) throw PreconditionError("truncation_horizon: N >= 1 required");
  if (!(tolTail > 0.0)) {
    throw PreconditionError("truncation_horizon: tolTail must be positive");
  }
  require_stable(plant);
  TruncationHorizon out;
  if (const int k = nilpotency_index(plant.A); k > 0) {
    // All Markov parameters vanish beyond delay k.
    out.tMax = N + 2 * k;
    return out;
  }
  const Envelope env = envelope(plant, N);
  const TailSums sums = tail_sums(N, env.rhoHat, env.C);
  const double budget = tolTail * std::min(1.0, env.headEnergy);
  int T = N + 2;
  auto tailAt = [&](int T) {
    return sums.at(sums.aa, T + 1) + 2.0 * sums.at(sums.ab, T + 1) +
           sums.at(sums.bb, T + 1);
  };
  while (tailAt(T) > budget) ++T;
  out.tMax = T;
  out.epsTail = tailAt(T);
  out.rhoHat = env.rhoHat;
  return out;
}

ObjectiveOracle::ObjectiveOracle(PlantModel plant, int N, double tolTail)
    : plant_(std::move(plant)), N_(N) {
  const TruncationHorizon th = truncation_horizon(plant_, N_, tolTail);
  tMax_ = th.tMax;
  epsTail_ = th.epsTail;
  if (th.rhoHat > 0.0) {
    const Envelope env = envelope(plant_, N_);
    const TailSums sums = tail_sums(N_, env.rhoHat, env.C);
    tailAA_ = sums.at(sums.aa, tMax_ + 1);
    tailAB_ = sums.at(sums.ab, tMax_ + 1);
    tailBB_ = sums.at(sums.bb, tMax_ + 1);
  }
  g11_ = markov_params(plant_, PlantBlock::k11, 0, tMax_);
}

ObjectiveOracle::ObjectiveOracle(PlantModel plant, int N, int tMax)
    : plant_(std::move(plant)), N_(N), tMax_(tMax) {
  if (N < 1 || tMax < N + 2) {
    throw PreconditionError("ObjectiveOracle: need N >= 1 and tMax >= N + 2");
  }
  g11_ = markov_params(plant_, PlantBlock::k11, 0, tMax_);
}

FirTM ObjectiveOracle::zero_parameter() const {
  return FirTM(param_rows(), param_cols(), 1, N_);
}

void ObjectiveOracle::check_parameter(const FirTM& R) const {
  if (R.rows() != param_rows() || R.cols() != param_cols()) {
    throw PreconditionError("ObjectiveOracle: parameter must be p2 x q2");
  }
  if (R.t_min() < 1 || R.t_max() > N_) {
    std::ostringstream os;
    os << "ObjectiveOracle: parameter delays [" << R.t_min() << ", "
       << R.t_max() << "] outside [1, " << N_ << "]";
    throw PreconditionError(os.str());
  }
}

std::vector<Eigen::MatrixXd> ObjectiveOracle::run_forward(const FirTM& R,
                                                          bool addTarget) const {
  check_parameter(R);
  const PlantModel& P = plant_;
  const int s = P.states();
  std::vector<Eigen::MatrixXd> out(tMax_ + 1);
  out[0] = addTarget ? g11_[0] : Eigen::MatrixXd::Zero(P.q1(), P.p1());

  // Y = R * G21:  Y^(m) = R^(m) D21 + xi_m B1,  xi_{m+1} = xi_m A + R^(m) C2.
  // Z = G12 * Y:  Z^(t) = D12 Y^(t) + C1 x_t,   x_{t+1} = A x_t + B2 Y^(t).
  Eigen::MatrixXd xi = Eigen::MatrixXd::Zero(P.p2(), s);
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(s, P.p1());
  Eigen::MatrixXd Y(P.p2(), P.p1());
  for (int m = 1; m <= tMax_; ++m) {
    const bool hasR = m >= R.t_min() && m <= R.t_max();
    Y.noalias() = xi * P.B1;
    if (hasR) Y.noalias() += R.at(m) * P.D21;

    Eigen::MatrixXd& Tm = out[m];
    Tm.noalias() = -(P.C1 * x);
    Tm.noalias() -= P.D12 * Y;
    if (addTarget) Tm += g11_[m];

    x = P.A * x;
    x.noalias() += P.B2 * Y;
    xi = xi * P.A;
    if (hasR) xi.noalias() += R.at(m) * P.C2;
  }
  return out;
}

std::vector<Eigen::MatrixXd> ObjectiveOracle::apply(const FirTM& R) const {
  return run_forward(R, true);
}

std::vector<Eigen::MatrixXd> ObjectiveOracle::apply_linear(const FirTM& R) const {
  return run_forward(R, false);
}

FirTM ObjectiveOracle::adjoint(const std::vector<Eigen::MatrixXd>& seq) const {
  if (static_cast<int>(seq.size()) != tMax_ + 1) {
    std::ostringstream os;
    os << "ObjectiveOracle::adjoint: expected " << tMax_ + 1
       << " coefficients, got " << seq.size();
    throw PreconditionError(os.str());
  }
  const PlantModel& P = plant_;
  const int s = P.states();
  FirTM out = zero_parameter();

  // U^(m)   = D12' S^(m) + B2' eta_m,   eta_{m-1} = A' eta_m + C1' S^(m)
  // G^(b)   = U^(b) D21' + zeta_b C2',  zeta_{b-1} = U^(b) B1' + zeta_b A'
  // adjoint = -G, both recursions run backwards from T_max with zero state.
  Eigen::MatrixXd eta = Eigen::MatrixXd::Zero(s, P.p1());
  Eigen::MatrixXd zeta = Eigen::MatrixXd::Zero(P.p2(), s);
  Eigen::MatrixXd U(P.p2(), P.p1());
  for (int m = tMax_; m >= 1; --m) {
    const Eigen::MatrixXd& S = seq[m];
    U.noalias() = P.D12.transpose() * S;
    U.noalias() += P.B2.transpose() * eta;
    if (m <= N_) {
      Eigen::MatrixXd& G = out.at(m);
      G.noalias() = -(U * P.D21.transpose());
      G.noalias() -= zeta * P.C2.transpose();
    }
    eta = P.A.transpose() * eta;
    eta.noalias() += P.C1.transpose() * S;
    zeta = zeta * P.A.transpose();
    zeta.noalias() += U * P.B1.transpose();
  }
  return out;
}

double ObjectiveOracle::tail_bound(const FirTM& R) const {
  double r = 0.0;
  for (const auto& c : R.coeffs()) r = std::max(r, c.norm());
  return tailAA_ + 2.0 * r * tailAB_ + r * r * tailBB_;
}

ObjectiveValue ObjectiveOracle::objective(const FirTM& R) const {
  ObjectiveValue v;
  for (const auto& c : apply(R)) v.value += c.squaredNorm();
  v.tailBound = tail_bound(R);
  return v;
}

FirTM ObjectiveOracle::gradient(const FirTM& R) const {
  FirTM g = adjoint(apply(R));
  g *= 2.0;
  return g;
}

FirTM ObjectiveOracle::unvectorize(const Eigen::VectorXd& r) const {
  return FirTM::from_vector(r, param_rows(), param_cols(), 1, N_);
}

Eigen::VectorXd ObjectiveOracle::normal_apply(const Eigen::VectorXd& r) const {
  return adjoint(apply_linear(unvectorize(r))).vectorize();
}

Eigen::VectorXd ObjectiveOracle::gradient_vec(const Eigen::VectorXd& r) const {
  return gradient(unvectorize(r)).vectorize();
}

double ObjectiveOracle::objective_vec(const Eigen::VectorXd& r) const {
  return objective(unvectorize(r)).value;
}

double lipschitz(const ObjectiveOracle& oracle, int iters, std::uint64_t seed) {
  if (iters < 10) throw PreconditionError("lipschitz: iters >= 10 required");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::VectorXd v(oracle.param_size());
  for (Eigen::Index k = 0; k < v.size(); ++k) v[k] = normal(rng);
  v.normalize();
  double estimate = 0.0;
  for (int k = 0; k < iters; ++k) {
    Eigen::VectorXd w = oracle.normal_apply(v);
    const double nrm = w.norm();
    if (nrm == 0.0) return 0.0;
    estimate = v.dot(w);
    v = w / nrm;
  }
  // Rayleigh quotient of the final iterate.
  estimate = std::max(estimate, v.dot(oracle.normal_apply(v)));
  constexpr double kInflation = 1.02;
  return 2.0 * estimate * kInflation;
}

}  // namespace commlink
