#pragma once

// Seeded problem instances shared by the unit and acceptance tests.

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "commlink/codesign.hpp"
#include "commlink/commgraph.hpp"
#include "commlink/sysmodel.hpp"

namespace commlink::testing {

struct Instance {
  PlantModel plant;
  Partition part;
  Graph base;
  EdgeSet edges;
};

/// gen_chain_plant(n, couple, seed) with the distance-2 candidate edges.
Instance chain_instance(int n, double couple, std::uint64_t seed,
                        std::size_t maxEdges = 6);

/// The reference 3-chain: seed 7, couple 0.2, edges {(0,2), (2,0)}.
Instance chain3();

/// Five seeded instances of increasing size used for solver cross-checks.
std::vector<Instance> seeded_instances();

Graph graph_from(std::initializer_list<std::initializer_list<int>> rows);

/// Random directed graph with self-loops and link probability `density`.
Graph random_graph(int n, double density, std::uint64_t seed);

/// Scalar-block plant with A = a I (n x n) and identity channels.
PlantModel diagonal_plant(int n, double a);

Partition scalar_partition(int n);

/// Unique directory under the system temp path, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const {
    return path_ / name;
  }

 private:
  std::filesystem::path path_;
};

std::string read_file(const std::filesystem::path& path);

}  // namespace commlink::testing
