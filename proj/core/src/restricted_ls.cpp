#include <cmath>
#include <sstream>

#include "commlink/errors.hpp"
#include "commlink/solvers.hpp"

namespace commlink {

std::vector<int> mask_coordinates(const TemporalMask& mask, int freeTailFrom,
                                  const ParamShape& shape) {
  if (mask.d > shape.N) {
    throw PreconditionError("mask horizon exceeds the parameter horizon");
  }
  std::vector<int> coords;
  for (int t = 1; t <= shape.N; ++t) {
    const bool tail = t >= freeTailFrom;
    const bool masked = t <= mask.d;
    if (!tail && !masked) continue;
    if (masked && !tail &&
        (mask.entry(t).rows() != shape.rows ||
         mask.entry(t).cols() != shape.cols)) {
      throw PreconditionError("mask entry shape differs from the parameter");
    }
    for (int c = 0; c < shape.cols; ++c) {
      for (int r = 0; r < shape.rows; ++r) {
        if (tail || mask.entry(t)(r, c)) coords.push_back(shape.index(t, r, c));
      }
    }
  }
  return coords;
}

RestrictedLsResult solve_restricted_ls(const ObjectiveOracle& oracle,
                                       const std::vector<int>& coords,
                                       const Eigen::VectorXd& fixed,
                                       const CgOptions& opts) {
  if (fixed.size() != oracle.param_size()) {
    throw PreconditionError("solve_restricted_ls: fixed part has wrong size");
  }
  const auto n = static_cast<Eigen::Index>(coords.size());
  auto gather = [&](const Eigen::VectorXd& full) {
    Eigen::VectorXd v(n);
    for (Eigen::Index k = 0; k < n; ++k) v[k] = full[coords[k]];
    return v;
  };
  auto scatter = [&](const Eigen::VectorXd& v) {
    Eigen::VectorXd full = Eigen::VectorXd::Zero(oracle.param_size());
    for (Eigen::Index k = 0; k < n; ++k) full[coords[k]] = v[k];
    return full;
  };
  auto H = [&](const Eigen::VectorXd& v) {
    return gather(oracle.normal_apply(scatter(v)));
  };

  RestrictedLsResult out;
  out.r = fixed;
  if (n == 0) {
    out.converged = true;
    return out;
  }
  const Eigen::VectorXd b =
      -gather(oracle.adjoint(oracle.apply(oracle.unvectorize(fixed))).vectorize());
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    out.converged = true;
    return out;
  }

  Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd r = b;
  Eigen::VectorXd p = r;
  double rr = r.squaredNorm();
  int iter = 0;
  for (; iter < opts.maxIters; ++iter) {
    if (std::sqrt(rr) <= opts.tolCg * bnorm) break;
    const Eigen::VectorXd q = H(p);
    const double pq = p.dot(q);
    if (!(pq > 0.0)) {
      std::ostringstream os;
      os << "conjugate gradient breakdown at iteration " << iter
         << " (p'Hp = " << pq << ", relative residual "
         << std::sqrt(rr) / bnorm << ")";
      throw SolverError(os.str());
    }
    const double alpha = rr / pq;
    v += alpha * p;
    r -= alpha * q;
    const double rrNew = r.squaredNorm();
    p = r + (rrNew / rr) * p;
    rr = rrNew;
  }
  out.iters = iter;
  out.relResidual = std::sqrt(rr) / bnorm;
  out.converged = out.relResidual <= opts.tolCg;
  out.r = fixed + scatter(v);
  return out;
}

PolishResult polish_qp(const ObjectiveOracle& oracle, const TemporalMask& mask,
                       int freeTailFrom, const CgOptions& opts) {
  if (freeTailFrom <= mask.d) {
    throw PreconditionError("polish_qp: freeTailFrom must exceed the mask horizon");
  }
  const ParamShape shape{oracle.param_rows(), oracle.param_cols(), oracle.N()};
  const std::vector<int> coords = mask_coordinates(mask, freeTailFrom, shape);
  const RestrictedLsResult ls = solve_restricted_ls(
      oracle, coords, Eigen::VectorXd::Zero(oracle.param_size()), opts);
  if (!ls.converged) {
    std::ostringstream os;
    os << "polish_qp: conjugate gradient stopped at relative residual "
       << ls.relResidual << " after " << ls.iters << " iterations";
    throw SolverError(os.str());
  }
  PolishResult out;
  out.R = oracle.unvectorize(ls.r);
  out.nu = std::sqrt(oracle.objective(out.R).value);
  out.iters = ls.iters;
  out.relResidual = ls.relResidual;
  return out;
}

}  // namespace commlink
