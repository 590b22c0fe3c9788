#include <gtest/gtest.h>

#include <cmath>

#include <Eigen/Eigenvalues>

#include "commlink/errors.hpp"
#include "commlink/firmath.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

namespace commlink {
namespace {

double seq_inner(const std::vector<Eigen::MatrixXd>& a,
                 const std::vector<Eigen::MatrixXd>& b) {
  double s = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t) s += a[t].cwiseProduct(b[t]).sum();
  return s;
}

std::vector<Eigen::MatrixXd> random_seq(const ObjectiveOracle& o, std::uint64_t seed) {
  const FirTM X = testing::random_fir(o.plant().q1(), o.plant().p1(), 0, o.t_max(), seed);
  return X.coeffs();
}

// x+ = a x + w, z = [x; 2u], y = w: G12 = [0; 2], G21 = 1, both static.
PlantModel static_channel_plant(double a) {
  PlantModel P;
  P.A = Eigen::MatrixXd::Constant(1, 1, a);
  P.B1 = Eigen::MatrixXd::Ones(1, 1);
  P.B2 = Eigen::MatrixXd::Zero(1, 1);
  P.C1 = (Eigen::MatrixXd(2, 1) << 1.0, 0.0).finished();
  P.D12 = (Eigen::MatrixXd(2, 1) << 0.0, 2.0).finished();
  P.C2 = Eigen::MatrixXd::Zero(1, 1);
  P.D21 = Eigen::MatrixXd::Ones(1, 1);
  return P;
}

TEST(ClosedLoopApply, ZeroParameterGivesTarget) {
  const testing::Instance inst = testing::chain3();
  const ObjectiveOracle o(inst.plant, 8);
  const auto seq = o.apply(o.zero_parameter());
  const auto g11 = markov_params(inst.plant, PlantBlock::k11, 0, o.t_max());
  ASSERT_EQ(seq.size(), g11.size());
  for (std::size_t t = 0; t < seq.size(); ++t) EXPECT_EQ(seq[t], g11[t]);
  double open = 0.0;
  for (const auto& g : g11) open += g.squaredNorm();
  EXPECT_NEAR(o.objective(o.zero_parameter()).value, open, 1e-14 * open);
}

TEST(ClosedLoopApply, StaticChannels) {
  const ObjectiveOracle o(static_channel_plant(0.5), 3);
  FirTM R = o.zero_parameter();
  R.at(1)(0, 0) = 0.7;
  const auto seq = o.apply(R);
  EXPECT_DOUBLE_EQ(seq[1](0, 0), 1.0);
  EXPECT_DOUBLE_EQ(seq[1](1, 0), -2.0 * 0.7);
  EXPECT_DOUBLE_EQ(seq[2](0, 0), 0.5);
  EXPECT_DOUBLE_EQ(seq[2](1, 0), 0.0);
}

TEST(ClosedLoopApply, MatchesConvolutionOracle) {
  for (std::uint64_t seed : {1u, 3u, 5u}) {
    const testing::Instance inst = testing::chain_instance(4, 0.2, seed);
    const ObjectiveOracle o(inst.plant, 6);
    const FirTM R = testing::random_fir(4, 4, 1, 6, seed + 10);
    const auto fast = o.apply(R);
    const auto slow = testing::convolution_closed_loop(inst.plant, R, o.t_max());
    for (int t = 0; t <= o.t_max(); ++t) {
      EXPECT_LE((fast[t] - slow[t]).norm(), 1e-12 * (1.0 + slow[t].norm())) << t;
    }
  }
}

TEST(ClosedLoopApply, MatchesDenseToeplitzOperator) {
  const testing::Instance inst = testing::chain3();
  const ObjectiveOracle o(inst.plant, 4);
  const Eigen::MatrixXd M = testing::dense_operator(inst.plant, 4, o.t_max());
  const FirTM R = testing::random_fir(3, 3, 1, 4, 9);
  const Eigen::VectorXd dense = M * R.vectorize();
  const Eigen::VectorXd fast = testing::stack(o.apply_linear(R));
  EXPECT_LE((dense - fast).norm(), 1e-12 * dense.norm());
}

TEST(ClosedLoopApply, RejectsWrongHorizon) {
  const ObjectiveOracle o(testing::chain3().plant, 4);
  EXPECT_THROW(o.apply(FirTM(3, 3, 1, 5)), PreconditionError);
  EXPECT_THROW(o.apply(FirTM(2, 3, 1, 4)), PreconditionError);
}

TEST(ClosedLoopAdjoint, DefiningIdentity) {
  const testing::Instance inst = testing::chain_instance(4, 0.2, 5);
  const ObjectiveOracle o(inst.plant, 7);
  for (std::uint64_t k = 0; k < 20; ++k) {
    const FirTM R = testing::random_fir(4, 4, 1, 7, 100 + k);
    const auto S = random_seq(o, 200 + k);
    const double lhs = seq_inner(o.apply_linear(R), S);
    const double rhs = fir_inner(R, o.adjoint(S));
    EXPECT_LE(std::abs(lhs - rhs), 1e-12 * std::max(std::abs(lhs), 1.0)) << k;
  }
}

TEST(ClosedLoopAdjoint, ZeroSequence) {
  const ObjectiveOracle o(testing::chain3().plant, 5);
  std::vector<Eigen::MatrixXd> zero(o.t_max() + 1, Eigen::MatrixXd::Zero(6, 6));
  EXPECT_EQ(o.adjoint(zero), o.zero_parameter());
  zero.pop_back();
  EXPECT_THROW(o.adjoint(zero), PreconditionError);
}

TEST(Objective, GradientMatchesCentralDifferences) {
  const testing::Instance inst = testing::chain3();
  const ObjectiveOracle o(inst.plant, 8);
  const FirTM R = testing::random_fir(3, 3, 1, 8, 1);
  const FirTM g = o.gradient(R);
  constexpr double h = 1e-6;
  for (std::uint64_t k = 0; k < 20; ++k) {
    FirTM D = testing::random_fir(3, 3, 1, 8, 50 + k);
    D *= 1.0 / fir_h2_norm(D);
    const double fd = (o.objective(R + h * D).value - o.objective(R - h * D).value) / (2 * h);
    const double exact = fir_inner(g, D);
    EXPECT_LE(std::abs(fd - exact), 1e-6 * std::max(std::abs(exact), 1.0)) << k;
  }
}

TEST(Objective, ExactFitOnDeadbeatPlant) {
  // A = 0, G11 = z^-1, G12 = 2, G21 = 0.5: R0 = z^-1 deconvolves exactly.
  PlantModel P;
  P.A = Eigen::MatrixXd::Zero(1, 1);
  P.B1 = Eigen::MatrixXd::Ones(1, 1);
  P.C1 = Eigen::MatrixXd::Ones(1, 1);
  P.B2 = Eigen::MatrixXd::Zero(1, 1);
  P.C2 = Eigen::MatrixXd::Zero(1, 1);
  P.D12 = Eigen::MatrixXd::Constant(1, 1, 2.0);
  P.D21 = Eigen::MatrixXd::Constant(1, 1, 0.5);
  const ObjectiveOracle o(P, 3);
  FirTM R0 = o.zero_parameter();
  R0.at(1)(0, 0) = 1.0;
  EXPECT_EQ(o.objective(R0).value, 0.0);
  EXPECT_EQ(o.objective(o.zero_parameter()).value, 1.0);
}

TEST(Objective, Convexity) {
  const ObjectiveOracle o(testing::chain3().plant, 6);
  for (std::uint64_t k = 0; k < 10; ++k) {
    const FirTM a = testing::random_fir(3, 3, 1, 6, k);
    const FirTM b = testing::random_fir(3, 3, 1, 6, k + 100);
    const double mid = o.objective(0.5 * (a + b)).value;
    EXPECT_LE(mid, 0.5 * o.objective(a).value + 0.5 * o.objective(b).value + 1e-12);
  }
}

TEST(Objective, QuadraticExpansion) {
  const ObjectiveOracle o(testing::chain_instance(4, 0.2, 3).plant, 6);
  for (std::uint64_t k = 0; k < 10; ++k) {
    const FirTM R = testing::random_fir(4, 4, 1, 6, k);
    const auto lin = o.apply_linear(R);
    const double j0 = o.objective(o.zero_parameter()).value;
    const double expanded = j0 + 2.0 * seq_inner(lin, o.target()) + seq_inner(lin, lin);
    const double direct = o.objective(R).value;
    EXPECT_LE(std::abs(expanded - direct), 1e-12 * direct);
  }
}

TEST(TruncationHorizon, DeadbeatPlant) {
  PlantModel P = static_channel_plant(0.0);
  const TruncationHorizon th = truncation_horizon(P, 5);
  EXPECT_EQ(th.tMax, 7);
  EXPECT_EQ(th.epsTail, 0.0);
}

TEST(TruncationHorizon, MonotoneInTolerance) {
  const PlantModel P = testing::chain3().plant;
  int prev = 0;
  for (double tol = 1e-4; tol >= 1e-14; tol *= 0.5) {
    const TruncationHorizon th = truncation_horizon(P, 8, tol);
    EXPECT_GE(th.tMax, prev);
    EXPECT_GE(th.tMax, 10);
    EXPECT_LE(th.epsTail, tol);
    prev = th.tMax;
  }
}

TEST(TruncationHorizon, UnstablePlantRejected) {
  PlantModel P = static_channel_plant(1.2);
  EXPECT_THROW(truncation_horizon(P, 3), PreconditionError);
  EXPECT_THROW(truncation_horizon(static_channel_plant(0.5), 0), PreconditionError);
}

TEST(TruncationHorizon, ThreeChainRecomputation) {
  const testing::Instance inst = testing::chain3();
  const ObjectiveOracle o(inst.plant, 8, 1e-10);
  const ObjectiveOracle twice(inst.plant, 8, 2 * o.t_max());
  const FirTM zero = o.zero_parameter();
  EXPECT_LE(std::abs(o.objective(zero).value - twice.objective(zero).value), 1e-9);
}

// Tail certificate on seeded plants, for R = 0 and unit-scale random R.
TEST(TruncationHorizon, TailCertificateOnSeededPlants) {
  for (const testing::Instance& inst : testing::seeded_instances()) {
    const int n = inst.part.n;
    const int N = 2 * *graph_delay(inst.base) + 4;
    const ObjectiveOracle o(inst.plant, N);
    const ObjectiveOracle twice(inst.plant, N, 2 * o.t_max());
    EXPECT_LE(o.eps_tail(), kDefaultTolTail);
    for (std::uint64_t k = 0; k < 4; ++k) {
      FirTM R = k == 0 ? o.zero_parameter() : testing::random_fir(n, n, 1, N, k);
      double worst = 0.0;
      for (const auto& c : R.coeffs()) worst = std::max(worst, c.norm());
      if (worst > 0.0) R *= 1.0 / worst;
      const double diff = std::abs(o.objective(R).value - twice.objective(R).value);
      EXPECT_LE(diff, o.eps_tail());
      EXPECT_LE(diff, o.tail_bound(R));
    }
  }
}

TEST(Lipschitz, ZeroCouplings) {
  PlantModel P = static_channel_plant(0.5);
  P.D12.setZero();
  const ObjectiveOracle o(P, 3);
  EXPECT_EQ(lipschitz(o), 0.0);
}

TEST(Lipschitz, BoundsRayleighQuotients) {
  const ObjectiveOracle o(testing::chain3().plant, 6);
  const double L = lipschitz(o, 200, 3);
  EXPECT_EQ(L, lipschitz(o, 200, 3));
  for (std::uint64_t k = 0; k < 10; ++k) {
    const FirTM e = testing::random_fir(3, 3, 1, 6, k);
    double num = 0.0;
    for (const auto& c : o.apply_linear(e)) num += c.squaredNorm();
    EXPECT_GE(L, 2.0 * num / e.squared_norm());
  }
  EXPECT_THROW(lipschitz(o, 5), PreconditionError);
}

TEST(Lipschitz, MatchesDenseEigenvalue) {
  const testing::Instance inst = testing::chain3();
  const ObjectiveOracle o(inst.plant, 8);
  const Eigen::MatrixXd M = testing::dense_operator(inst.plant, 8, o.t_max());
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M.transpose() * M);
  const double exact = 2.0 * es.eigenvalues().maxCoeff();
  const double L = lipschitz(o);
  EXPECT_GE(L, exact * (1.0 - 1e-9));
  EXPECT_LE(std::abs(L - exact), 0.02 * exact + 1e-12);
}

}  // namespace
}  // namespace commlink
