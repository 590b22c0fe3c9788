#include "commlink/commgraph.hpp"

#include <deque>
#include <set>
#include <sstream>

#include "commlink/errors.hpp"

namespace commlink {

BinaryMatrix bool_product(const BinaryMatrix& a, const BinaryMatrix& b) {
  const Eigen::MatrixXi prod = a.cast<int>().matrix() * b.cast<int>().matrix();
  return prod.array() > 0;
}

BinaryMatrix bool_power(const BinaryMatrix& a, int k) {
  if (k < 0) throw PreconditionError("bool_power: negative exponent");
  BinaryMatrix result =
      Eigen::MatrixXi::Identity(a.rows(), a.cols()).array() > 0;
  for (int i = 0; i < k; ++i) result = bool_product(result, a);
  return result;
}

Graph Graph::identity(int n) {
  return Graph(Eigen::MatrixXi::Identity(n, n).array() > 0);
}

Graph Graph::full(int n) {
  return Graph(BinaryMatrix::Constant(n, n, true));
}

Graph Graph::chain(int n) {
  BinaryMatrix adj = BinaryMatrix::Constant(n, n, false);
  for (int i = 0; i < n; ++i) {
    adj(i, i) = true;
    if (i + 1 < n) adj(i, i + 1) = adj(i + 1, i) = true;
  }
  return Graph(std::move(adj));
}

void validate_edges(const Graph& base, const EdgeSet& edges) {
  std::set<Edge> seen;
  for (const auto& [i, j] : edges.edges) {
    std::ostringstream os;
    os << "edge (" << i << "," << j << ")";
    if (i < 0 || j < 0 || i >= base.n() || j >= base.n()) {
      throw PreconditionError(os.str() + " is out of range");
    }
    if (i == j) throw PreconditionError(os.str() + " is a self-loop");
    if (!seen.insert({i, j}).second) {
      throw PreconditionError(os.str() + " is listed twice");
    }
    if (base.adj(i, j)) {
      throw PreconditionError(os.str() + " is already in the base graph");
    }
  }
}

DelayMatrix comm_delays(const Graph& g) {
  const int n = g.n();
  DelayMatrix out{Eigen::MatrixXi::Constant(n, n, kInfiniteDelay)};
  // BFS from every source j over links j -> i (adj(i, j) set).
  for (int src = 0; src < n; ++src) {
    std::deque<int> frontier{src};
    out.entries(src, src) = 0;
    while (!frontier.empty()) {
      const int u = frontier.front();
      frontier.pop_front();
      for (int v = 0; v < n; ++v) {
        if (g.adj(v, u) && out.entries(v, src) == kInfiniteDelay) {
          out.entries(v, src) = out.entries(u, src) + 1;
          frontier.push_back(v);
        }
      }
    }
  }
  return out;
}

std::optional<int> graph_delay(const Graph& g) {
  const int n = g.n();
  if (n == 0) return 0;
  // Wielandt: a primitive n x n matrix has G^k > 0 for k >= n^2 - 2n + 2.
  const int wielandt = n * n - 2 * n + 2;
  BinaryMatrix power = bool_power(g.adj, 0);
  int lastWithZero = -1;
  for (int k = 0; k <= wielandt; ++k) {
    if (!power.all()) lastWithZero = k;
    if (k < wielandt) power = bool_product(power, g.adj);
  }
  if (lastWithZero == wielandt) return std::nullopt;
  // sup{ tau : G^(tau-1) has a zero } = lastWithZero + 1 (0 if none).
  return lastWithZero + 1;
}

Graph base_graph(const PlantModel& plant, const Partition& part,
                 double tolZero) {
  const std::vector<int> off = part.x_offsets(plant.states());
  const int n = part.n;
  BinaryMatrix adj = BinaryMatrix::Constant(n, n, false);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const int rows = off[i + 1] - off[i];
      const int cols = off[j + 1] - off[j];
      if (rows > 0 && cols > 0) {
        adj(i, j) = plant.A.block(off[i], off[j], rows, cols)
                        .cwiseAbs()
                        .maxCoeff() > tolZero;
      }
    }
  }
  return Graph(std::move(adj));
}

Graph max_graph(const Graph& base, const EdgeSet& edges) {
  validate_edges(base, edges);
  Graph out = base;
  for (const auto& [i, j] : edges.edges) out.adj(i, j) = true;
  return out;
}

Graph with_edges(const Graph& base, const EdgeSet& edges,
                 std::uint64_t bitmask) {
  Graph out = base;
  for (std::size_t k = 0; k < edges.size(); ++k) {
    if (bitmask & (std::uint64_t{1} << k)) {
      const auto& [i, j] = edges.edges[k];
      out.adj(i, j) = true;
    }
  }
  return out;
}

bool is_physically_built(const Graph& g, const Graph& gmax) {
  if (g.n() != gmax.n()) {
    throw PreconditionError("is_physically_built: graph sizes differ");
  }
  return (!g.adj || gmax.adj).all();
}

std::vector<DesignGraph> enumerate_design_set(const Graph& base,
                                              const EdgeSet& edges) {
  if (edges.size() > kMaxDesignSetEdges) {
    std::ostringstream os;
    os << "design set of " << edges.size() << " edges exceeds the guard of "
       << kMaxDesignSetEdges;
    throw PreconditionError(os.str());
  }
  validate_edges(base, edges);
  const std::uint64_t count = std::uint64_t{1} << edges.size();
  std::vector<DesignGraph> out;
  out.reserve(count);
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    out.push_back({mask, with_edges(base, edges, mask)});
  }
  return out;
}

namespace {

bool block_diagonal(const Eigen::MatrixXd& m, const std::vector<int>& rowOff,
                    const std::vector<int>& colOff, double tolZero) {
  const int n = static_cast<int>(rowOff.size()) - 1;
  for (int bi = 0; bi < n; ++bi) {
    for (int bj = 0; bj < n; ++bj) {
      if (bi == bj) continue;
      const int rows = rowOff[bi + 1] - rowOff[bi];
      const int cols = colOff[bj + 1] - colOff[bj];
      if (rows > 0 && cols > 0 &&
          m.block(rowOff[bi], colOff[bj], rows, cols).cwiseAbs().maxCoeff() >
              tolZero) {
        return false;
      }
    }
  }
  return true;
}

}  // namespace

EdgeSet edges_at_distance(const Graph& base, int distance,
                          std::size_t maxEdges) {
  if (distance < 2) {
    throw PreconditionError("edges_at_distance: distance >= 2 required");
  }
  const DelayMatrix c = comm_delays(base);
  EdgeSet out;
  for (int i = 0; i < base.n(); ++i) {
    for (int j = 0; j < base.n(); ++j) {
      if (out.size() < maxEdges && c(i, j) == distance) out.edges.emplace_back(i, j);
    }
  }
  return out;
}

PropagationDelays propagation_delays(const PlantModel& plant,
                                     const Partition& part,
                                     PropagationMode mode, double tolZero,
                                     int horizon) {
  const int n = part.n;
  PropagationDelays out;
  out.delays.entries = Eigen::MatrixXi::Constant(n, n, kInfiniteDelay);

  if (mode == PropagationMode::kStructural) {
    const std::vector<int> xOff = part.x_offsets(plant.states());
    if (!block_diagonal(plant.B2, xOff, part.u_offsets(), tolZero) ||
        !block_diagonal(plant.C2, part.y_offsets(), xOff, tolZero)) {
      throw PreconditionError(
          "structural propagation delays require block-diagonal B2 and C2");
    }
    const DelayMatrix b = comm_delays(base_graph(plant, part, tolZero));
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (is_finite_delay(b(i, j))) out.delays.entries(i, j) = b(i, j) + 1;
      }
    }
    return out;
  }

  if (horizon < 1) throw PreconditionError("propagation_delays: horizon < 1");
  const auto g22 = markov_params(plant, PlantBlock::k22, 1, horizon);
  const std::vector<int> yOff = part.y_offsets();
  const std::vector<int> uOff = part.u_offsets();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int t = 1; t <= horizon; ++t) {
        const auto blk = g22[t - 1].block(yOff[i], uOff[j], yOff[i + 1] - yOff[i],
                                          uOff[j + 1] - uOff[j]);
        if (blk.cwiseAbs().maxCoeff() > tolZero) {
          out.delays.entries(i, j) = t;
          break;
        }
      }
      if (!is_finite_delay(out.delays.entries(i, j))) out.truncated = true;
    }
  }
  return out;
}

}  // namespace commlink
