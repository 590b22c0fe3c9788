#include "fixtures.hpp"

#include <atomic>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <unistd.h>

namespace commlink::testing {

Instance chain_instance(int n, double couple, std::uint64_t seed,
                        std::size_t maxEdges) {
  auto [plant, part] = gen_chain_plant(n, couple, seed);
  Graph base = base_graph(plant, part);
  EdgeSet edges = edges_at_distance(base, 2, maxEdges);
  return {std::move(plant), std::move(part), std::move(base), std::move(edges)};
}

Instance chain3() { return chain_instance(3, 0.2, 7); }

std::vector<Instance> seeded_instances() {
  return {chain_instance(3, 0.2, 7), chain_instance(3, 0.35, 1),
          chain_instance(4, 0.2, 1), chain_instance(4, 0.3, 1, 2),
          chain_instance(3, 0.1, 5)};
}

Graph graph_from(std::initializer_list<std::initializer_list<int>> rows) {
  const int n = static_cast<int>(rows.size());
  BinaryMatrix adj = BinaryMatrix::Zero(n, n);
  int i = 0;
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != n) throw std::invalid_argument("ragged graph");
    int j = 0;
    for (int v : row) adj(i, j++) = v != 0;
    ++i;
  }
  return Graph(adj);
}

Graph random_graph(int n, double density, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution link(density);
  BinaryMatrix adj(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) adj(i, j) = i == j || link(rng);
  }
  return Graph(adj);
}

PlantModel diagonal_plant(int n, double a) {
  PlantModel P;
  P.A = a * Eigen::MatrixXd::Identity(n, n);
  P.B2 = Eigen::MatrixXd::Identity(n, n);
  P.C1 = Eigen::MatrixXd::Zero(2 * n, n);
  P.C1.topRows(n).setIdentity();
  P.D12 = Eigen::MatrixXd::Zero(2 * n, n);
  P.D12.bottomRows(n).setIdentity();
  P.C2 = Eigen::MatrixXd::Identity(n, n);
  P.D21 = Eigen::MatrixXd::Zero(n, 2 * n);
  P.D21.rightCols(n).setIdentity();
  P.B1 = Eigen::MatrixXd::Zero(n, 2 * n);
  P.B1.leftCols(n).setIdentity();
  return P;
}

Partition scalar_partition(int n) {
  Partition part;
  part.n = n;
  part.uSizes.assign(n, 1);
  part.ySizes.assign(n, 1);
  return part;
}

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  const auto base = std::filesystem::temp_directory_path();
  for (;;) {
    path_ = base / ("commlink-test-" + std::to_string(::getpid()) + "-" +
                    std::to_string(counter++));
    if (std::filesystem::create_directories(path_)) break;
  }
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace commlink::testing
