#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "commlink/sysmodel.hpp"

namespace commlink {

using BinaryMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Boolean matrix product: (a*b)(i,j) = OR_k a(i,k) AND b(k,j).
BinaryMatrix bool_product(const BinaryMatrix& a, const BinaryMatrix& b);
/// Boolean power with a^0 = I.
BinaryMatrix bool_power(const BinaryMatrix& a, int k);

/// Directed communication graph between sub-controllers. adj(i, j) is set
/// when there is a link FROM sub-controller j TO sub-controller i.
struct Graph {
  BinaryMatrix adj;

  Graph() = default;
  explicit Graph(BinaryMatrix a) : adj(std::move(a)) {}

  int n() const { return static_cast<int>(adj.rows()); }

  static Graph identity(int n);
  static Graph full(int n);
  /// Bidirectional chain with self-loops (tridiagonal adjacency).
  static Graph chain(int n);

  bool operator==(const Graph& other) const {
    return adj.rows() == other.adj.rows() && adj.cols() == other.adj.cols() &&
           (adj == other.adj).all();
  }
};

/// Delays are in time steps; kInfiniteDelay marks an unreachable pair.
inline constexpr int kInfiniteDelay = std::numeric_limits<int>::max();

inline bool is_finite_delay(int d) { return d != kInfiniteDelay; }

struct DelayMatrix {
  Eigen::MatrixXi entries;

  int n() const { return static_cast<int>(entries.rows()); }
  int operator()(int i, int j) const { return entries(i, j); }
  bool all_finite() const { return (entries.array() != kInfiniteDelay).all(); }
  bool operator==(const DelayMatrix& other) const {
    return entries == other.entries;
  }
};

/// A directed edge (i, j) meaning "link from j to i", 0-indexed.
using Edge = std::pair<int, int>;

struct EdgeSet {
  std::vector<Edge> edges;

  std::size_t size() const { return edges.size(); }
  bool empty() const { return edges.empty(); }
};

/// Throws PreconditionError unless edges are in range, non-self, free of
/// duplicates, and absent from `base`.
void validate_edges(const Graph& base, const EdgeSet& edges);

/// Shortest-path delays c(i, j) from j to i (BFS from every source).
DelayMatrix comm_delays(const Graph& g);

/// d(G) = sup{ tau >= 1 : G^(tau-1) has a zero entry }, or nullopt when the
/// adjacency matrix is not primitive. A single node with a self-loop has
/// delay 0.
std::optional<int> graph_delay(const Graph& g);

/// Gamma_base = bsupp(A) with states attributed by `part`.
Graph base_graph(const PlantModel& plant, const Partition& part,
                 double tolZero = kDefaultTolZero);

Graph max_graph(const Graph& base, const EdgeSet& edges);

/// Base graph with the edges selected by `bitmask` (bit k <-> edges[k]).
Graph with_edges(const Graph& base, const EdgeSet& edges, std::uint64_t bitmask);

bool is_physically_built(const Graph& g, const Graph& gmax);

/// Pairs (i, j) with comm_delays(base)(i, j) == distance, in row-major
/// order, truncated to the first maxEdges.
EdgeSet edges_at_distance(const Graph& base, int distance, std::size_t maxEdges);

inline constexpr std::size_t kMaxDesignSetEdges = 20;

struct DesignGraph {
  std::uint64_t bitmask = 0;
  Graph graph;
};

/// All 2^|edges| graphs between base and max, ordered by bitmask.
std::vector<DesignGraph> enumerate_design_set(const Graph& base,
                                              const EdgeSet& edges);

enum class PropagationMode { kStructural, kNumerical };

struct PropagationDelays {
  DelayMatrix delays;
  /// Numerical mode only: some block showed no response within the horizon.
  bool truncated = false;
};

/// p(i, j) = first t with a nonzero (i, j) block in G22^(t).
///
/// Structural mode uses the lower bound b + 1, b = comm_delays(base graph),
/// and requires block-diagonal B2 and C2. Numerical mode scans the Markov
/// parameters up to `horizon`.
PropagationDelays propagation_delays(const PlantModel& plant,
                                     const Partition& part,
                                     PropagationMode mode,
                                     double tolZero = kDefaultTolZero,
                                     int horizon = 64);

}  // namespace commlink
