#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "commlink/errors.hpp"
#include "commlink/solvers.hpp"

namespace commlink {
namespace {

constexpr double kSnapToZero = 1e-12;

// Latent-variable layout z = [unpenalized; group 0; group 1; ...].
struct Layout {
  ParamShape shape;
  std::vector<int> unpenalized;
  std::vector<std::vector<int>> groups;
  std::vector<Eigen::Index> offsets;  // start of each group block in z
  Eigen::Index size = 0;
  int maxOverlap = 1;

  Layout(const ObjectiveOracle& oracle, const GroupSpec& spec) {
    shape = {oracle.param_rows(), oracle.param_cols(), oracle.N()};
    unpenalized = mask_coordinates(spec.baseMask, spec.freeTailFrom, shape);
    size = static_cast<Eigen::Index>(unpenalized.size());
    for (const auto& g : spec.groups) {
      groups.push_back(mask_coordinates(g.mask, shape.N + 1, shape));
      offsets.push_back(size);
      size += static_cast<Eigen::Index>(groups.back().size());
    }
    std::vector<int> count(shape.size(), 0);
    for (int k : unpenalized) ++count[k];
    for (const auto& g : groups) {
      for (int k : g) ++count[k];
    }
    maxOverlap = std::max(1, *std::max_element(count.begin(), count.end()));
  }

  Eigen::VectorXd to_param(const Eigen::VectorXd& z) const {
    Eigen::VectorXd r = Eigen::VectorXd::Zero(shape.size());
    for (std::size_t k = 0; k < unpenalized.size(); ++k) {
      r[unpenalized[k]] += z[static_cast<Eigen::Index>(k)];
    }
    for (std::size_t g = 0; g < groups.size(); ++g) {
      for (std::size_t k = 0; k < groups[g].size(); ++k) {
        r[groups[g][k]] += z[offsets[g] + static_cast<Eigen::Index>(k)];
      }
    }
    return r;
  }

  Eigen::VectorXd to_latent(const Eigen::VectorXd& grad) const {
    Eigen::VectorXd out(size);
    for (std::size_t k = 0; k < unpenalized.size(); ++k) {
      out[static_cast<Eigen::Index>(k)] = grad[unpenalized[k]];
    }
    for (std::size_t g = 0; g < groups.size(); ++g) {
      for (std::size_t k = 0; k < groups[g].size(); ++k) {
        out[offsets[g] + static_cast<Eigen::Index>(k)] = grad[groups[g][k]];
      }
    }
    return out;
  }

  Eigen::Index group_size(std::size_t g) const {
    return static_cast<Eigen::Index>(groups[g].size());
  }

  double group_norm(const Eigen::VectorXd& z, std::size_t g) const {
    return z.segment(offsets[g], group_size(g)).norm();
  }

  double penalty(const Eigen::VectorXd& z) const {
    double s = 0.0;
    for (std::size_t g = 0; g < groups.size(); ++g) s += group_norm(z, g);
    return s;
  }

  // Gradient of J restricted to each group, as norms.
  std::vector<double> group_grad_norms(const Eigen::VectorXd& grad) const {
    std::vector<double> out;
    out.reserve(groups.size());
    for (const auto& g : groups) {
      double s = 0.0;
      for (int k : g) s += grad[k] * grad[k];
      out.push_back(std::sqrt(s));
    }
    return out;
  }
};

FirTM param_from_coords(const ObjectiveOracle& oracle, const Eigen::VectorXd& z,
                        const std::vector<int>& coords, Eigen::Index offset) {
  Eigen::VectorXd r = Eigen::VectorXd::Zero(oracle.param_size());
  for (std::size_t k = 0; k < coords.size(); ++k) {
    r[coords[k]] = z[offset + static_cast<Eigen::Index>(k)];
  }
  return oracle.unvectorize(r);
}

Eigen::VectorXd latent_from_solution(const Layout& layout,
                                     const GroupSolution& s) {
  const Eigen::VectorXd base = s.Abase.vectorize() + s.tail.vectorize();
  Eigen::VectorXd z(layout.size);
  for (std::size_t k = 0; k < layout.unpenalized.size(); ++k) {
    z[static_cast<Eigen::Index>(k)] = base[layout.unpenalized[k]];
  }
  for (std::size_t g = 0; g < layout.groups.size(); ++g) {
    const Eigen::VectorXd a = s.Aij[g].vectorize();
    for (std::size_t k = 0; k < layout.groups[g].size(); ++k) {
      z[layout.offsets[g] + static_cast<Eigen::Index>(k)] = a[layout.groups[g][k]];
    }
  }
  return z;
}

void fill_solution(const ObjectiveOracle& oracle, const GroupSpec& spec,
                   const Layout& layout, const Eigen::VectorXd& z,
                   double lambda, GroupSolution& out) {
  const Eigen::Index nu = static_cast<Eigen::Index>(layout.unpenalized.size());
  std::vector<int> baseCoords;
  std::vector<int> tailCoords;
  std::vector<Eigen::Index> basePos;
  std::vector<Eigen::Index> tailPos;
  const int tailStart = (spec.freeTailFrom - 1) * layout.shape.rows * layout.shape.cols;
  for (Eigen::Index k = 0; k < nu; ++k) {
    if (layout.unpenalized[k] >= tailStart) {
      tailCoords.push_back(layout.unpenalized[k]);
      tailPos.push_back(k);
    } else {
      baseCoords.push_back(layout.unpenalized[k]);
      basePos.push_back(k);
    }
  }
  Eigen::VectorXd base = Eigen::VectorXd::Zero(oracle.param_size());
  Eigen::VectorXd tail = Eigen::VectorXd::Zero(oracle.param_size());
  for (std::size_t k = 0; k < baseCoords.size(); ++k) base[baseCoords[k]] = z[basePos[k]];
  for (std::size_t k = 0; k < tailCoords.size(); ++k) tail[tailCoords[k]] = z[tailPos[k]];
  out.Abase = oracle.unvectorize(base);
  out.tail = oracle.unvectorize(tail);
  out.Aij.clear();
  out.groupNorms.clear();
  for (std::size_t g = 0; g < layout.groups.size(); ++g) {
    out.Aij.push_back(param_from_coords(oracle, z, layout.groups[g], layout.offsets[g]));
    out.groupNorms.push_back(layout.group_norm(z, g));
  }
  out.R = oracle.unvectorize(layout.to_param(z));
  out.fidelity = oracle.objective(out.R).value;
  out.objective = out.fidelity + lambda * layout.penalty(z);
}

void snap_small_groups(const Layout& layout, Eigen::VectorXd& z) {
  for (std::size_t g = 0; g < layout.groups.size(); ++g) {
    if (layout.group_norm(z, g) < kSnapToZero) {
      z.segment(layout.offsets[g], layout.group_size(g)).setZero();
    }
  }
}

}  // namespace

GroupSpec make_group_spec(const Graph& base, const EdgeSet& edges,
                          const Partition& part, int N) {
  validate_edges(base, edges);
  GroupSpec spec;
  spec.baseMask = subspace_masks(base, part);
  if (N < spec.baseMask.d) {
    std::ostringstream os;
    os << "make_group_spec: horizon N = " << N
       << " is shorter than the base graph delay " << spec.baseMask.d;
    throw PreconditionError(os.str());
  }
  spec.N = N;
  spec.freeTailFrom = spec.baseMask.d + 1;
  for (const Edge& e : edges.edges) {
    spec.groups.push_back(link_subspace(base, e, part));
  }
  return spec;
}

void validate_group_spec(const GroupSpec& spec, const ObjectiveOracle& oracle) {
  if (spec.N != oracle.N()) {
    throw PreconditionError("group spec horizon differs from the oracle horizon");
  }
  if (spec.baseMask.d > spec.N) {
    throw PreconditionError("base mask horizon exceeds N");
  }
  if (spec.freeTailFrom <= spec.baseMask.d) {
    throw PreconditionError("free tail overlaps the base mask");
  }
  const auto check_shape = [&](const TemporalMask& m) {
    for (int t = 1; t <= m.d; ++t) {
      if (m.entry(t).rows() != oracle.param_rows() ||
          m.entry(t).cols() != oracle.param_cols()) {
        throw PreconditionError("mask entry shape differs from the parameter");
      }
    }
  };
  check_shape(spec.baseMask);
  for (const auto& g : spec.groups) {
    if (g.mask.d != spec.baseMask.d) {
      throw PreconditionError("link subspace horizon differs from the base mask");
    }
    check_shape(g.mask);
    for (int t = 1; t <= g.mask.d; ++t) {
      if ((g.mask.entry(t) && spec.baseMask.entry(t)).any()) {
        throw PreconditionError("link subspace overlaps the base subspace");
      }
    }
  }
}

namespace {

// Dual objective at the point built from the residual of `R` after its
// component in the unpenalized range is projected out.
double dual_value(const ObjectiveOracle& oracle, const Layout& layout,
                  double lambda, const FirTM& R, const CgOptions& cg) {
  std::vector<int> unpen = layout.unpenalized;
  if (lambda == 0.0) {
    for (const auto& g : layout.groups) unpen.insert(unpen.end(), g.begin(), g.end());
    std::sort(unpen.begin(), unpen.end());
    unpen.erase(std::unique(unpen.begin(), unpen.end()), unpen.end());
  }
  const RestrictedLsResult ls = solve_restricted_ls(oracle, unpen, R.vectorize(), cg);
  const FirTM rp = oracle.unvectorize(ls.r);
  const std::vector<Eigen::MatrixXd> w = oracle.apply(rp);
  double scale = 1.0;
  if (lambda > 0.0 && !layout.groups.empty()) {
    const std::vector<double> norms =
        layout.group_grad_norms(oracle.gradient(rp).vectorize());
    const double worst = *std::max_element(norms.begin(), norms.end());
    if (worst > lambda) scale = lambda / worst;
  }
  double wc = 0.0;
  double ww = 0.0;
  const auto& c = oracle.target();
  for (std::size_t t = 0; t < w.size(); ++t) {
    wc += w[t].cwiseProduct(c[t]).sum();
    ww += w[t].squaredNorm();
  }
  return 2.0 * scale * wc - scale * scale * ww;
}

}  // namespace

double duality_gap(const ObjectiveOracle& oracle, const GroupSpec& spec,
                   double lambda, const GroupSolution& state,
                   const CgOptions& cg) {
  const Layout layout(oracle, spec);
  const double primal =
      oracle.objective(state.R).value +
      lambda * std::accumulate(state.groupNorms.begin(), state.groupNorms.end(), 0.0);
  return primal - dual_value(oracle, layout, lambda, state.R, cg);
}

double lambda_max(const ObjectiveOracle& oracle, const GroupSpec& spec,
                  const CgOptions& opts) {
  validate_group_spec(spec, oracle);
  const Layout layout(oracle, spec);
  if (layout.groups.empty()) return 0.0;
  const RestrictedLsResult ls = solve_restricted_ls(
      oracle, layout.unpenalized, Eigen::VectorXd::Zero(oracle.param_size()),
      opts);
  const std::vector<double> norms =
      layout.group_grad_norms(oracle.gradient_vec(ls.r));
  return *std::max_element(norms.begin(), norms.end());
}

GroupSolution group_lasso_fista(const ObjectiveOracle& oracle,
                                const GroupSpec& spec, double lambda,
                                const FistaOptions& opts,
                                const GroupSolution* warm) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw PreconditionError("group_lasso_fista: lambda must be finite and >= 0");
  }
  if (opts.gapEvery < 1 || opts.maxIters < 1 || !(opts.tolGap > 0.0)) {
    throw PreconditionError("group_lasso_fista: invalid options");
  }
  validate_group_spec(spec, oracle);
  const Layout layout(oracle, spec);

  GroupSolution out;
  Eigen::VectorXd z = Eigen::VectorXd::Zero(layout.size);
  if (warm != nullptr) {
    if (warm->Aij.size() != layout.groups.size()) {
      throw PreconditionError("group_lasso_fista: warm start has wrong groups");
    }
    z = latent_from_solution(layout, *warm);
  } else {
    // Start from the solution with every group at zero.
    const RestrictedLsResult ls = solve_restricted_ls(
        oracle, layout.unpenalized, Eigen::VectorXd::Zero(oracle.param_size()),
        opts.cg);
    for (std::size_t k = 0; k < layout.unpenalized.size(); ++k) {
      z[static_cast<Eigen::Index>(k)] = ls.r[layout.unpenalized[k]];
    }
  }

  const double L = lipschitz(oracle, opts.lipschitzIters, opts.seed);
  if (L == 0.0) {
    z.setZero();
    fill_solution(oracle, spec, layout, z, lambda, out);
    out.converged = true;
    out.warnings.push_back(
        "closed-loop map is identically zero; returning R = 0");
    return out;
  }
  const double step = 1.0 / (L * layout.maxOverlap);

  auto prox = [&](Eigen::VectorXd& v) {
    const double thr = step * lambda;
    for (std::size_t g = 0; g < layout.groups.size(); ++g) {
      auto seg = v.segment(layout.offsets[g], layout.group_size(g));
      const double nrm = seg.norm();
      if (nrm <= thr) {
        seg.setZero();
      } else {
        seg *= 1.0 - thr / nrm;
      }
    }
  };
  auto composite = [&](const Eigen::VectorXd& v) {
    return oracle.objective_vec(layout.to_param(v)) + lambda * layout.penalty(v);
  };

  // Every dual point bounds the optimum, so the best one seen so far gives a
  // certificate that only tightens as the primal objective decreases.
  double bestDual = -std::numeric_limits<double>::infinity();
  auto certify = [&] {
    bestDual = std::max(bestDual, dual_value(oracle, layout, lambda, out.R, opts.cg));
    out.gap = out.objective - bestDual;
    out.relGap = out.gap / std::max(std::abs(out.objective), 1e-12);
  };

  Eigen::VectorXd y = z;
  double theta = 1.0;
  double fz = composite(z);
  int iter = 0;
  for (iter = 1; iter <= opts.maxIters; ++iter) {
    const Eigen::VectorXd grad =
        layout.to_latent(oracle.gradient_vec(layout.to_param(y)));
    Eigen::VectorXd zNew = y - step * grad;
    prox(zNew);
    const double fNew = composite(zNew);
    const double thetaNew = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
    if (fNew > fz && theta > 1.0) {
      // Function-value restart: drop momentum and retry from z.
      theta = 1.0;
      y = z;
    } else {
      y = zNew + ((theta - 1.0) / thetaNew) * (zNew - z);
      theta = thetaNew;
      z = std::move(zNew);
      fz = fNew;
    }

    if (iter % opts.gapEvery == 0 || iter == opts.maxIters) {
      fill_solution(oracle, spec, layout, z, lambda, out);
      certify();
      if (opts.recordTrace) {
        const double maxNorm =
            out.groupNorms.empty()
                ? 0.0
                : *std::max_element(out.groupNorms.begin(), out.groupNorms.end());
        out.trace.push_back({iter, out.objective, out.gap, maxNorm});
      }
      if (out.relGap <= opts.tolGap) {
        out.converged = true;
        break;
      }
    }
  }
  out.iters = std::min(iter, opts.maxIters);
  snap_small_groups(layout, z);
  fill_solution(oracle, spec, layout, z, lambda, out);
  certify();
  if (!out.converged) {
    out.converged = out.relGap <= opts.tolGap;
  }
  if (!out.converged) {
    std::ostringstream os;
    os << "FISTA stopped after " << out.iters
       << " iterations with relative duality gap " << out.relGap;
    out.warnings.push_back(os.str());
  }
  return out;
}

}  // namespace commlink
