#include "commlink/codesign.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "commlink/errors.hpp"
#include "commlink/io.hpp"
#include "commlink/parallel.hpp"

namespace commlink {
namespace {

constexpr CgOptions kLambdaMaxCg{1e-12, 10000};

int resolve_horizon(const CodesignConfig& cfg, int baseDelay) {
  const int N = cfg.N == 0 ? 2 * baseDelay + 4 : cfg.N;
  if (N < std::max(1, baseDelay)) {
    std::ostringstream os;
    os << "horizon N = " << N << " is shorter than the base graph delay "
       << baseDelay;
    throw PreconditionError(os.str());
  }
  return N;
}

// Validates everything the constructor depends on and returns d(base).
int check_inputs(const PlantModel& plant, const Partition& part,
                 const Graph& base, const EdgeSet& edges,
                 const CodesignConfig& cfg) {
  validate_config(cfg);
  check_dimensions(plant, part);
  require_stable(plant);
  if (base.n() != part.n) {
    throw PreconditionError("base graph size differs from the partition");
  }
  validate_edges(base, edges);
  const std::optional<int> d = graph_delay(base);
  if (!d) {
    throw PreconditionError("base graph has infinite graph delay");
  }
  const QiCertificate cert = graph_certificate(plant, part, base, cfg.tolZero);
  if (!cert.ok) {
    throw PreconditionError("base graph fails the QI delay certificate: " +
                            describe_violations(cert));
  }
  return *d;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

// Entries of R outside the base mask and the selected link subspaces.
bool support_disagrees(const FirTM& R, const GroupSpec& spec,
                       const std::vector<bool>& selected, double threshold) {
  for (int t = 1; t <= spec.baseMask.d; ++t) {
    BinaryMatrix allowed = spec.baseMask.entry(t);
    for (std::size_t g = 0; g < spec.groups.size(); ++g) {
      if (selected[g]) allowed = allowed || spec.groups[g].mask.entry(t);
    }
    if ((!allowed && (R.at(t).array().abs() > threshold)).any()) return true;
  }
  return false;
}

}  // namespace

void validate_config(const CodesignConfig& cfg) {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw PreconditionError(std::string("config: ") + name + " must be > 0");
    }
  };
  positive(cfg.tolTail, "tolTail");
  positive(cfg.tolGap, "tolGap");
  positive(cfg.tolCg, "tolCg");
  positive(cfg.edgeSelectEps, "edgeSelectEps");
  positive(cfg.tolZero, "tolZero");
  if (cfg.N < 0) throw PreconditionError("config: N must be >= 0");
  if (cfg.checkHorizon < 0) {
    throw PreconditionError("config: checkHorizon must be >= 0");
  }
  if (cfg.maxIters < 1) throw PreconditionError("config: maxIters must be >= 1");
  if (cfg.autoGridPoints < 1) {
    throw PreconditionError("config: autoGridPoints must be >= 1");
  }
  if (!(cfg.autoGridRatio > 0.0 && cfg.autoGridRatio < 1.0)) {
    throw PreconditionError("config: autoGridRatio must lie in (0, 1)");
  }
  for (double l : cfg.lambdaGrid) {
    if (!(l >= 0.0) || !std::isfinite(l)) {
      throw PreconditionError("config: lambda values must be finite and >= 0");
    }
  }
}

PropagationDelays plant_propagation_delays(const PlantModel& plant,
                                           const Partition& part,
                                           double tolZero, int horizon) {
  try {
    return propagation_delays(plant, part, PropagationMode::kStructural, tolZero);
  } catch (const PreconditionError&) {
    return propagation_delays(plant, part, PropagationMode::kNumerical, tolZero,
                              horizon);
  }
}

QiCertificate graph_certificate(const PlantModel& plant, const Partition& part,
                                const Graph& g, double tolZero) {
  const DelayMatrix c = comm_delays(g);
  if (!c.all_finite()) {
    throw PreconditionError("graph is not strongly connected");
  }
  return qi_delay_check(c, plant_propagation_delays(plant, part, tolZero).delays);
}

std::string describe_violations(const QiCertificate& cert) {
  std::ostringstream os;
  for (std::size_t k = 0; k < cert.violations.size(); ++k) {
    const QiViolation& v = cert.violations[k];
    if (k > 0) os << "; ";
    if (v.kind == QiViolation::Kind::kDelay) {
      os << "delay condition c(" << v.i + 1 << "," << v.j + 1
         << ") <= p(" << v.i + 1 << "," << v.j + 1 << ") + 1 violated";
    } else {
      os << "triangle inequality c(" << v.k + 1 << "," << v.j + 1 << ") <= c("
         << v.k + 1 << "," << v.i + 1 << ") + c(" << v.i + 1 << "," << v.j + 1
         << ") violated";
    }
  }
  return os.str();
}

CodesignProblem::CodesignProblem(PlantModel plant, Partition part, Graph base,
                                 EdgeSet edges, CodesignConfig cfg)
    : plant_(std::move(plant)),
      part_(std::move(part)),
      base_(std::move(base)),
      edges_(std::move(edges)),
      cfg_(std::move(cfg)),
      baseDelay_(check_inputs(plant_, part_, base_, edges_, cfg_)),
      oracle_(plant_, resolve_horizon(cfg_, baseDelay_), cfg_.tolTail),
      spec_(make_group_spec(base_, edges_, part_, oracle_.N())),
      lambdaMax_(commlink::lambda_max(oracle_, spec_, kLambdaMaxCg)) {}

int CodesignProblem::check_horizon() const {
  return cfg_.checkHorizon > 0 ? cfg_.checkHorizon : oracle_.t_max();
}

PolishResult CodesignProblem::polish_on(const Graph& g) const {
  const std::optional<int> d = graph_delay(g);
  if (!d) throw PreconditionError("polish_on: graph has infinite graph delay");
  if (*d > oracle_.N()) {
    throw PreconditionError("polish_on: graph delay exceeds the horizon N");
  }
  return polish_qp(oracle_, subspace_masks(g, part_), *d + 1,
                   CgOptions{cfg_.tolCg, 10000});
}

std::vector<double> CodesignProblem::lambda_grid() const {
  std::vector<double> grid = cfg_.lambdaGrid;
  if (grid.empty()) {
    const int n = cfg_.autoGridPoints;
    if (lambdaMax_ == 0.0 || n == 1) {
      grid.push_back(lambdaMax_);
    } else {
      const double logHi = std::log(lambdaMax_);
      const double logLo = std::log(lambdaMax_ * cfg_.autoGridRatio);
      for (int k = 0; k < n; ++k) {
        grid.push_back(k == 0 ? lambdaMax_
                              : std::exp(logHi + (logLo - logHi) * k / (n - 1)));
      }
    }
  }
  std::sort(grid.begin(), grid.end(), std::greater<>());
  return grid;
}

CodesignResult CodesignProblem::run(double lambda, bool recordTrace) const {
  FistaOptions opts;
  opts.tolGap = cfg_.tolGap;
  opts.maxIters = cfg_.maxIters;
  opts.seed = cfg_.seed;
  opts.recordTrace = recordTrace;
  const GroupSolution sol = group_lasso_fista(oracle_, spec_, lambda, opts);

  CodesignResult out;
  out.lambda = lambda;
  out.groupNorms = sol.groupNorms;
  out.regObjective = sol.objective;
  out.regFidelity = sol.fidelity;
  out.regularizedR = sol.R;
  out.trace = sol.trace;
  out.diagnostics = {sol.iters, sol.gap, sol.relGap, sol.converged, sol.warnings};

  const double threshold = cfg_.edgeSelectEps * std::max(1.0, fir_h2_norm(sol.R));
  std::vector<bool> selected(edges_.size(), false);
  std::uint64_t bitmask = 0;
  for (std::size_t g = 0; g < edges_.size(); ++g) {
    if (sol.groupNorms[g] > threshold) {
      selected[g] = true;
      bitmask |= std::uint64_t{1} << g;
      out.selectedEdges.edges.push_back(edges_.edges[g]);
    }
  }
  if (support_disagrees(sol.R, spec_, selected, threshold)) {
    out.diagnostics.warnings.push_back(
        "regularized parameter has entries outside the selected link subspaces");
  }
  out.gammaDes = with_edges(base_, edges_, bitmask);

  const PolishResult pol = polish_on(out.gammaDes);
  out.polishedR = pol.R;
  out.nuPolished = pol.nu;
  out.controller = recover_controller(plant_, pol.R, check_horizon());
  out.implementable =
      implementability_check(out.controller, out.gammaDes, part_, cfg_.tolZero);
  if (!out.implementable) {
    out.diagnostics.warnings.push_back(
        "recovered controller is not implementable on the designed graph");
  }
  return out;
}

CodesignResult run_codesign(const PlantModel& plant, const Partition& part,
                            const Graph& base, const EdgeSet& edges,
                            double lambda, const CodesignConfig& cfg) {
  const CodesignProblem problem(plant, part, base, edges, cfg);
  return problem.run(lambda);
}

std::vector<CodesignResult> lambda_sweep(const CodesignProblem& problem) {
  const std::vector<double> grid = problem.lambda_grid();
  std::vector<CodesignResult> out(grid.size());
  parallel_for(grid.size(), [&](std::size_t k) {
    try {
      out[k] = problem.run(grid[k]);
    } catch (const SolverError& e) {
      CodesignResult failed;
      failed.lambda = grid[k];
      failed.nuPolished = std::numeric_limits<double>::quiet_NaN();
      failed.regObjective = std::numeric_limits<double>::quiet_NaN();
      failed.diagnostics.converged = false;
      failed.diagnostics.warnings.push_back(e.what());
      out[k] = std::move(failed);
    }
  });
  return out;
}

std::vector<CodesignResult> lambda_sweep(const PlantModel& plant,
                                         const Partition& part,
                                         const Graph& base,
                                         const EdgeSet& edges,
                                         const CodesignConfig& cfg) {
  return lambda_sweep(CodesignProblem(plant, part, base, edges, cfg));
}

std::vector<EnumerationRow> enumerate_solve(const CodesignProblem& problem) {
  if (problem.edges().size() > kMaxEnumerationEdges) {
    std::ostringstream os;
    os << "enumeration is limited to " << kMaxEnumerationEdges
       << " candidate edges (got " << problem.edges().size() << ")";
    throw PreconditionError(os.str());
  }
  const std::vector<DesignGraph> graphs =
      enumerate_design_set(problem.base(), problem.edges());
  std::vector<EnumerationRow> rows(graphs.size());
  parallel_for(graphs.size(), [&](std::size_t k) {
    EnumerationRow& row = rows[k];
    row.bitmask = graphs[k].bitmask;
    for (std::size_t e = 0; e < problem.edges().size(); ++e) {
      if (row.bitmask & (std::uint64_t{1} << e)) {
        row.edges.edges.push_back(problem.edges().edges[e]);
      }
    }
    row.numExtraLinks = static_cast<int>(row.edges.size());
    row.nu = problem.polish_on(graphs[k].graph).nu;
  });
  return rows;
}

std::vector<EnumerationRow> enumerate_solve(const PlantModel& plant,
                                            const Partition& part,
                                            const Graph& base,
                                            const EdgeSet& edges,
                                            const CodesignConfig& cfg) {
  if (edges.size() > kMaxEnumerationEdges) {
    std::ostringstream os;
    os << "enumeration is limited to " << kMaxEnumerationEdges
       << " candidate edges (got " << edges.size() << ")";
    throw PreconditionError(os.str());
  }
  return enumerate_solve(CodesignProblem(plant, part, base, edges, cfg));
}

NestingReport nesting_report(const std::vector<EnumerationRow>& rows,
                             double tolerance) {
  NestingReport report;
  for (const auto& a : rows) {
    for (const auto& b : rows) {
      if (a.bitmask == b.bitmask || (a.bitmask & b.bitmask) != a.bitmask) {
        continue;
      }
      ++report.pairsChecked;
      const double excess = b.nu - a.nu;
      if (excess > tolerance) {
        report.violations.push_back({a.bitmask, b.bitmask, excess});
        report.maxViolation = std::max(report.maxViolation, excess);
      }
    }
  }
  return report;
}

std::string format_edges(const EdgeSet& edges) {
  std::string out;
  for (std::size_t k = 0; k < edges.size(); ++k) {
    if (k > 0) out += ';';
    out += std::to_string(edges.edges[k].first) + "<-" +
           std::to_string(edges.edges[k].second);
  }
  return out;
}

void write_sweep_csv(std::ostream& os, const std::vector<CodesignResult>& rows) {
  os << "lambda,num_extra_links,selected_edges,nu_polished,reg_objective,iters,"
        "gap,converged\r\n";
  for (const auto& r : rows) {
    os << format_double(r.lambda) << ',' << r.selectedEdges.size() << ','
       << csv_field(format_edges(r.selectedEdges)) << ','
       << format_double(r.nuPolished) << ',' << format_double(r.regObjective)
       << ',' << r.diagnostics.iters << ',' << format_double(r.diagnostics.gap)
       << ',' << (r.diagnostics.converged ? "true" : "false") << "\r\n";
  }
}

void write_enumeration_csv(std::ostream& os,
                           const std::vector<EnumerationRow>& rows) {
  os << "bitmask,num_extra_links,edges,nu\r\n";
  for (const auto& r : rows) {
    os << r.bitmask << ',' << r.numExtraLinks << ','
       << csv_field(format_edges(r.edges)) << ',' << format_double(r.nu)
       << "\r\n";
  }
}

void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& rows) {
  os << "iter,objective,gap,max_group_norm\r\n";
  for (const auto& r : rows) {
    os << r.iter << ',' << format_double(r.objective) << ','
       << format_double(r.gap) << ',' << format_double(r.maxGroupNorm) << "\r\n";
  }
}

void write_nesting_report(std::ostream& os, const NestingReport& report,
                          const std::vector<EnumerationRow>& rows) {
  os << "graphs: " << rows.size() << '\n';
  os << "nested pairs checked: " << report.pairsChecked << '\n';
  os << "violations: " << report.violations.size() << '\n';
  os << "max violation: " << format_double(report.maxViolation) << '\n';
  for (const auto& v : report.violations) {
    os << "  bitmask " << v.subset << " -> " << v.superset
       << ": nu increases by " << format_double(v.excess) << '\n';
  }
}

}  // namespace commlink
