#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "commlink/firmath.hpp"
#include "commlink/qispace.hpp"

namespace commlink {

/// Indexing of an FIR parameter with coefficients t = 1..N, each rows x cols,
/// matching FirTM::vectorize.
struct ParamShape {
  int rows = 0;
  int cols = 0;
  int N = 0;

  int size() const { return rows * cols * N; }
  int index(int t, int r, int c) const {
    return (t - 1) * rows * cols + c * rows + r;
  }
};

/// Sorted coordinates allowed by `mask` for t <= mask.d plus every entry
/// with freeTailFrom <= t <= N. Pass freeTailFrom > N for no tail.
std::vector<int> mask_coordinates(const TemporalMask& mask, int freeTailFrom,
                                  const ParamShape& shape);

/// Unpenalized base subspace, penalized link subspaces, and a free tail.
struct GroupSpec {
  TemporalMask baseMask;
  std::vector<LinkSubspace> groups;
  int freeTailFrom = 1;
  int N = 0;
};

/// F(base), one link subspace per edge, free tail from d(base) + 1.
GroupSpec make_group_spec(const Graph& base, const EdgeSet& edges,
                          const Partition& part, int N);

/// Throws PreconditionError on inconsistent masks or horizons.
void validate_group_spec(const GroupSpec& spec, const ObjectiveOracle& oracle);

struct CgOptions {
  double tolCg = 1e-10;
  int maxIters = 10000;
};

struct RestrictedLsResult {
  Eigen::VectorXd r;  // full parameter vector
  int iters = 0;
  double relResidual = 0.0;
  bool converged = false;
};

/// Minimizes J(fixed + P v) over v, where P embeds `coords`, by conjugate
/// gradients on the normal equations. Throws SolverError on breakdown.
RestrictedLsResult solve_restricted_ls(const ObjectiveOracle& oracle,
                                       const std::vector<int>& coords,
                                       const Eigen::VectorXd& fixed,
                                       const CgOptions& opts = {});

struct PolishResult {
  FirTM R;
  double nu = 0.0;  // sqrt(J(R))
  int iters = 0;
  double relResidual = 0.0;
};

/// min J(R) s.t. R in the mask for t <= mask.d, free for freeTailFrom..N.
/// Throws SolverError on breakdown or when CG does not reach tolCg.
PolishResult polish_qp(const ObjectiveOracle& oracle, const TemporalMask& mask,
                       int freeTailFrom, const CgOptions& opts = {});

struct FistaOptions {
  double tolGap = 1e-6;  // relative duality gap
  int maxIters = 50000;
  int gapEvery = 10;
  int lipschitzIters = 200;
  std::uint64_t seed = 0;
  /// CG settings for the projections used by the gap certificate.
  CgOptions cg{1e-12, 10000};
  bool recordTrace = false;
};

struct TraceRow {
  int iter = 0;
  double objective = 0.0;
  double gap = 0.0;
  double maxGroupNorm = 0.0;
};

struct GroupSolution {
  FirTM Abase;
  std::vector<FirTM> Aij;
  FirTM tail;
  FirTM R;
  std::vector<double> groupNorms;
  /// J(R) + lambda * sum of group norms.
  double objective = 0.0;
  /// J(R) alone.
  double fidelity = 0.0;
  /// Objective minus the best dual value seen during the run.
  double gap = 0.0;
  double relGap = 0.0;
  int iters = 0;
  bool converged = false;
  std::vector<std::string> warnings;
  std::vector<TraceRow> trace;
};

/// Overlapping (latent) group lasso
///   min J(Abase + sum Aij + tail) + lambda sum ||Aij||_H2
/// by FISTA with function-value restart, certified by duality_gap.
/// `warm`, if given, supplies the starting point (same spec).
GroupSolution group_lasso_fista(const ObjectiveOracle& oracle,
                                const GroupSpec& spec, double lambda,
                                const FistaOptions& opts = {},
                                const GroupSolution* warm = nullptr);

/// Primal minus dual objective at `state`, using a dual point built from
/// the residual with the unpenalized directions projected out.
double duality_gap(const ObjectiveOracle& oracle, const GroupSpec& spec,
                   double lambda, const GroupSolution& state,
                   const CgOptions& cg = {1e-12, 10000});

/// Smallest lambda at which every group is zero at the optimum.
double lambda_max(const ObjectiveOracle& oracle, const GroupSpec& spec,
                  const CgOptions& opts = {});

struct CommNormOptions {
  double tolZero = kDefaultTolZero;
  double tolRes = 1e-8;
  int maxIters = 200000;
  double rho = 1.0;
  double relaxation = 1.5;
};

struct CommNormResult {
  bool infinite = false;
  double value = 0.0;
  std::vector<FirTM> parts;  // one per group, empty when infinite
  int iters = 0;
  double primalResidual = 0.0;
  double dualResidual = 0.0;
};

/// Communication link norm of X (horizon <= d(base)): the least total H2
/// norm of link-subspace components that, together with an element of the
/// base subspace, add up to X. Infinite when no such decomposition exists.
/// Throws SolverError if the splitting iteration does not converge.
CommNormResult comm_link_norm(const FirTM& X, const GroupSpec& spec,
                              const CommNormOptions& opts = {});

}  // namespace commlink
