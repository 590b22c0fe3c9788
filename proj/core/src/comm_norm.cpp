#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "commlink/errors.hpp"
#include "commlink/solvers.hpp"

namespace commlink {

CommNormResult comm_link_norm(const FirTM& X, const GroupSpec& spec,
                              const CommNormOptions& opts) {
  if (X.t_min() < 0) throw PreconditionError("comm_link_norm: negative delay");
  if (!(opts.rho > 0.0) || !(opts.relaxation > 0.0 && opts.relaxation < 2.0) ||
      !(opts.tolRes > 0.0) || opts.maxIters < 1) {
    throw PreconditionError("comm_link_norm: invalid options");
  }
  const int d = spec.baseMask.d;
  for (int t = 1; t <= d; ++t) {
    if (spec.baseMask.entry(t).rows() != X.rows() ||
        spec.baseMask.entry(t).cols() != X.cols()) {
      throw PreconditionError("comm_link_norm: X and mask shapes differ");
    }
  }
  for (const auto& g : spec.groups) {
    if (g.mask.d != d) {
      throw PreconditionError("comm_link_norm: group horizon differs from base");
    }
  }

  CommNormResult out;
  // Coefficients past the base horizon lie in the free tail; t = 0 lies in
  // no subspace.
  if (X.t_min() == 0 && (X.at(0).array().abs() > opts.tolZero).any()) {
    out.infinite = true;
    out.value = std::numeric_limits<double>::infinity();
    return out;
  }

  // Penalized coordinates (t, r, c) with t <= d outside the base mask.
  const ParamShape shape{static_cast<int>(X.rows()), static_cast<int>(X.cols()), d};
  const std::size_t G = spec.groups.size();
  std::vector<std::vector<int>> coords(G);
  for (std::size_t g = 0; g < G; ++g) {
    coords[g] = mask_coordinates(spec.groups[g].mask, d + 1, shape);
  }
  FirTM head(shape.rows, shape.cols, 1, d);
  for (int t = 1; t <= d; ++t) head.at(t) = X.coeff(t);
  const Eigen::VectorXd x = head.vectorize();
  std::vector<std::vector<std::pair<std::size_t, int>>> owners(shape.size());
  for (std::size_t g = 0; g < G; ++g) {
    for (std::size_t k = 0; k < coords[g].size(); ++k) {
      owners[coords[g][k]].emplace_back(g, static_cast<int>(k));
    }
  }
  for (int t = 1; t <= d; ++t) {
    for (int c = 0; c < shape.cols; ++c) {
      for (int r = 0; r < shape.rows; ++r) {
        const int k = shape.index(t, r, c);
        if (!spec.baseMask.entry(t)(r, c) && owners[k].empty() &&
            std::abs(x[k]) > opts.tolZero) {
          out.infinite = true;
          out.value = std::numeric_limits<double>::infinity();
          return out;
        }
      }
    }
  }

  // Sharing ADMM on u_g = v_g, f(u) = sum ||u_g||, v constrained to
  // sum_g v_g = x on each penalized coordinate.
  std::vector<Eigen::VectorXd> u(G), v(G), w(G), vOld(G);
  for (std::size_t g = 0; g < G; ++g) {
    u[g] = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(coords[g].size()));
    w[g] = u[g];
    v[g] = u[g];
  }
  const double scale = std::max(1.0, x.norm());
  const double kappa = 1.0 / opts.rho;
  const double alpha = opts.relaxation;
  int iter = 0;
  bool converged = G == 0;
  for (iter = 1; iter <= opts.maxIters && !converged; ++iter) {
    for (std::size_t g = 0; g < G; ++g) {
      const Eigen::VectorXd q = v[g] - w[g];
      const double nrm = q.norm();
      u[g] = nrm <= kappa ? Eigen::VectorXd::Zero(q.size())
                          : Eigen::VectorXd((1.0 - kappa / nrm) * q);
      vOld[g] = v[g];
      // Over-relaxed u, stored in v until projected.
      v[g] = alpha * u[g] + (1.0 - alpha) * vOld[g] + w[g];
    }
    for (std::size_t k = 0; k < owners.size(); ++k) {
      if (owners[k].empty()) continue;
      double sum = 0.0;
      for (const auto& [g, local] : owners[k]) sum += v[g][local];
      const double shift = (sum - x[static_cast<Eigen::Index>(k)]) /
                           static_cast<double>(owners[k].size());
      for (const auto& [g, local] : owners[k]) v[g][local] -= shift;
    }
    double primal = 0.0;
    double dual = 0.0;
    for (std::size_t g = 0; g < G; ++g) {
      const Eigen::VectorXd uHat = alpha * u[g] + (1.0 - alpha) * vOld[g];
      w[g] += uHat - v[g];
      primal += (u[g] - v[g]).squaredNorm();
      dual += (v[g] - vOld[g]).squaredNorm();
    }
    out.primalResidual = std::sqrt(primal);
    out.dualResidual = opts.rho * std::sqrt(dual);
    converged = out.primalResidual <= opts.tolRes * scale &&
                out.dualResidual <= opts.tolRes * scale;
  }
  out.iters = G == 0 ? 0 : iter - 1;
  if (!converged) {
    std::ostringstream os;
    os << "comm_link_norm: splitting iteration did not converge in "
       << opts.maxIters << " iterations (primal " << out.primalResidual
       << ", dual " << out.dualResidual << ")";
    throw SolverError(os.str());
  }
  out.value = 0.0;
  for (std::size_t g = 0; g < G; ++g) {
    out.value += v[g].norm();
    Eigen::VectorXd full = Eigen::VectorXd::Zero(shape.size());
    for (std::size_t k = 0; k < coords[g].size(); ++k) {
      full[coords[g][k]] = v[g][static_cast<Eigen::Index>(k)];
    }
    out.parts.push_back(FirTM::from_vector(full, shape.rows, shape.cols, 1, d));
  }
  return out;
}

}  // namespace commlink
