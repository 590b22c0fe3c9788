#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "commlink/commgraph.hpp"
#include "commlink/firmath.hpp"
#include "commlink/qispace.hpp"
#include "commlink/solvers.hpp"
#include "commlink/sysmodel.hpp"

namespace commlink {

struct CodesignConfig {
  /// Explicit lambda values; empty selects the automatic grid.
  std::vector<double> lambdaGrid;
  int autoGridPoints = 12;
  double autoGridRatio = 1e-3;
  /// Parameter horizon; 0 selects 2 d(base) + 4.
  int N = 0;
  double tolTail = kDefaultTolTail;
  double tolGap = 1e-6;
  double tolCg = 1e-10;
  double edgeSelectEps = 1e-5;
  /// Horizon for controller recovery checks; 0 selects T_max.
  int checkHorizon = 0;
  int maxIters = 50000;
  double tolZero = kDefaultTolZero;
  std::uint64_t seed = 0;
};

/// Throws PreconditionError on non-positive tolerances or bad grid settings.
void validate_config(const CodesignConfig& cfg);

/// Structural propagation delays when B2 and C2 are block diagonal,
/// numerical ones (scanned up to `horizon`) otherwise.
PropagationDelays plant_propagation_delays(const PlantModel& plant,
                                           const Partition& part,
                                           double tolZero = kDefaultTolZero,
                                           int horizon = 64);

/// Delay certificate of `g` against the plant's propagation delays.
QiCertificate graph_certificate(const PlantModel& plant, const Partition& part,
                                const Graph& g, double tolZero = kDefaultTolZero);

/// Human-readable list of certificate violations (1-indexed nodes).
std::string describe_violations(const QiCertificate& cert);

struct CodesignDiagnostics {
  int iters = 0;
  double gap = 0.0;
  double relGap = 0.0;
  bool converged = false;
  std::vector<std::string> warnings;
};

struct CodesignResult {
  double lambda = 0.0;
  EdgeSet selectedEdges;
  Graph gammaDes;
  std::vector<double> groupNorms;
  double nuPolished = 0.0;
  /// J(R_reg) + lambda * sum of group norms at the regularized solution.
  double regObjective = 0.0;
  /// J(R_reg) alone.
  double regFidelity = 0.0;
  FirTM regularizedR;
  FirTM polishedR;
  FirTM controller;
  bool implementable = false;
  CodesignDiagnostics diagnostics;
  std::vector<TraceRow> trace;
};

/// Shared, immutable state for a family of co-design solves on one plant:
/// QI certificate of the base graph, objective oracle, group structure and
/// the polished performance of the base and maximal graphs.
class CodesignProblem {
 public:
  /// Throws PreconditionError if the base graph has infinite delay, fails
  /// the QI delay certificate, or the edges are invalid.
  CodesignProblem(PlantModel plant, Partition part, Graph base, EdgeSet edges,
                  CodesignConfig cfg);

  const PlantModel& plant() const { return plant_; }
  const Partition& partition() const { return part_; }
  const Graph& base() const { return base_; }
  const EdgeSet& edges() const { return edges_; }
  const CodesignConfig& config() const { return cfg_; }
  const ObjectiveOracle& oracle() const { return oracle_; }
  const GroupSpec& spec() const { return spec_; }
  int N() const { return oracle_.N(); }
  int base_delay() const { return baseDelay_; }
  int check_horizon() const;

  double lambda_max() const { return lambdaMax_; }

  /// Polished closed-loop H2 norm on graph g (must be strongly connected).
  PolishResult polish_on(const Graph& g) const;

  CodesignResult run(double lambda, bool recordTrace = false) const;
  /// Resolved grid, sorted in descending order.
  std::vector<double> lambda_grid() const;

 private:
  PlantModel plant_;
  Partition part_;
  Graph base_;
  EdgeSet edges_;
  CodesignConfig cfg_;
  int baseDelay_ = 0;
  ObjectiveOracle oracle_;
  GroupSpec spec_;
  double lambdaMax_ = 0.0;
};

CodesignResult run_codesign(const PlantModel& plant, const Partition& part,
                            const Graph& base, const EdgeSet& edges,
                            double lambda, const CodesignConfig& cfg);

/// One result per lambda, in descending lambda. Solves run in parallel.
std::vector<CodesignResult> lambda_sweep(const CodesignProblem& problem);
std::vector<CodesignResult> lambda_sweep(const PlantModel& plant,
                                         const Partition& part,
                                         const Graph& base,
                                         const EdgeSet& edges,
                                         const CodesignConfig& cfg);

struct EnumerationRow {
  std::uint64_t bitmask = 0;
  int numExtraLinks = 0;
  EdgeSet edges;
  double nu = 0.0;
};

inline constexpr std::size_t kMaxEnumerationEdges = 12;

/// Polished performance of every design-set graph, sorted by bitmask.
std::vector<EnumerationRow> enumerate_solve(const CodesignProblem& problem);
std::vector<EnumerationRow> enumerate_solve(const PlantModel& plant,
                                            const Partition& part,
                                            const Graph& base,
                                            const EdgeSet& edges,
                                            const CodesignConfig& cfg);

struct NestingViolation {
  std::uint64_t subset = 0;
  std::uint64_t superset = 0;
  double excess = 0.0;
};

struct NestingReport {
  std::vector<NestingViolation> violations;
  double maxViolation = 0.0;
  std::size_t pairsChecked = 0;
};

inline constexpr double kNestingTolerance = 1e-6;

/// Checks that nu never increases when links are added.
NestingReport nesting_report(const std::vector<EnumerationRow>& rows,
                             double tolerance = kNestingTolerance);

/// "i<-j" pairs joined by ';'.
std::string format_edges(const EdgeSet& edges);

void write_sweep_csv(std::ostream& os, const std::vector<CodesignResult>& rows);
void write_enumeration_csv(std::ostream& os,
                           const std::vector<EnumerationRow>& rows);
void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& rows);
void write_nesting_report(std::ostream& os, const NestingReport& report,
                          const std::vector<EnumerationRow>& rows);

}  // namespace commlink
