#include <gtest/gtest.h>

#include "commlink/errors.hpp"
#include "commlink/io.hpp"
#include "commlink/qispace.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

namespace commlink {
namespace {

using testing::graph_from;
using testing::scalar_partition;

const Graph kChain3 = graph_from({{1, 1, 0}, {1, 1, 1}, {0, 1, 1}});

BinaryMatrix block_from(std::initializer_list<std::initializer_list<int>> rows) {
  return graph_from(rows).adj;
}

bool same(const BinaryMatrix& a, const BinaryMatrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a == b).all();
}

TEST(SubspaceMasks, ThreeChain) {
  const TemporalMask m = subspace_masks(kChain3, scalar_partition(3));
  ASSERT_EQ(m.d, 2);
  EXPECT_TRUE(same(m.block(1), block_from({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}})));
  EXPECT_TRUE(same(m.block(2), block_from({{1, 1, 0}, {1, 1, 1}, {0, 1, 1}})));
  EXPECT_EQ(m.entry_count(), 3 + 7);
}

TEST(SubspaceMasks, FullGraphAndIdentityFirstBlock) {
  const TemporalMask full = subspace_masks(Graph::full(4), scalar_partition(4));
  ASSERT_EQ(full.d, 1);
  EXPECT_TRUE(same(full.block(1), Graph::identity(4).adj));
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Graph g = testing::random_graph(5, 0.4, seed);
    if (!graph_delay(g)) continue;
    EXPECT_TRUE(same(subspace_masks(g, scalar_partition(5)).block(1),
                     Graph::identity(5).adj));
  }
}

TEST(SubspaceMasks, EntryMasksInflateBlocks) {
  Partition part;
  part.n = 3;
  part.uSizes = {1, 2, 1};
  part.ySizes = {2, 1, 1};
  const TemporalMask m = subspace_masks(kChain3, part);
  ASSERT_EQ(m.entry(1).rows(), 4);
  ASSERT_EQ(m.entry(1).cols(), 4);
  // Block (1, 1) covers u rows 1..2 and y column 2.
  EXPECT_TRUE(m.entry(1)(1, 2));
  EXPECT_TRUE(m.entry(1)(2, 2));
  EXPECT_FALSE(m.entry(1)(1, 0));
  EXPECT_EQ(m.entry_count(), (2 + 2 + 1) + (2 + 1 + 4 + 2 + 2 + 1 + 1));
}

TEST(SubspaceMasks, InfiniteDelayThrows) {
  EXPECT_THROW(subspace_masks(Graph::identity(2), scalar_partition(2)), PreconditionError);
  EXPECT_THROW(perp_masks(Graph::identity(2), scalar_partition(2)), PreconditionError);
}

TEST(PerpMasks, Examples) {
  const TemporalMask p = perp_masks(kChain3, scalar_partition(3));
  EXPECT_TRUE(same(p.block(2), block_from({{0, 0, 1}, {0, 0, 0}, {1, 0, 0}})));
  const TemporalMask pf = perp_masks(Graph::full(3), scalar_partition(3));
  EXPECT_TRUE(same(pf.block(1), !Graph::identity(3).adj));
  const TemporalMask s = subspace_masks(kChain3, scalar_partition(3));
  for (int t = 1; t <= 2; ++t) {
    EXPECT_TRUE((s.entry(t) || p.entry(t)).all());
    EXPECT_FALSE((s.entry(t) && p.entry(t)).any());
  }
}

TEST(LinkSubspace, ThreeChainFollowsDefinition) {
  const Partition part = scalar_partition(3);
  const LinkSubspace e02 = link_subspace(kChain3, {0, 2}, part);
  ASSERT_EQ(e02.mask.d, 2);
  EXPECT_FALSE(e02.mask.block(1).any());
  EXPECT_TRUE(same(e02.mask.block(2), block_from({{0, 0, 1}, {0, 0, 0}, {0, 0, 0}})));
  const LinkSubspace e20 = link_subspace(kChain3, {2, 0}, part);
  EXPECT_TRUE(same(e20.mask.block(2), block_from({{0, 0, 0}, {0, 0, 0}, {1, 0, 0}})));
}

TEST(LinkSubspace, MatchesSetIntersectionOracle) {
  // E_ij = complement of F(base) intersected with F(base + E_ij), with the
  // augmented graph unconstrained beyond its own delay.
  const Graph base = graph_from(
      {{1, 1, 0, 0, 0}, {1, 1, 1, 0, 0}, {0, 1, 1, 1, 0}, {0, 0, 1, 1, 1}, {0, 0, 0, 1, 1}});
  const Partition part = scalar_partition(5);
  const TemporalMask fb = subspace_masks(base, part);
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) {
      if (base.adj(i, j)) {
        EXPECT_THROW(link_subspace(base, {i, j}, part), PreconditionError);
        continue;
      }
      Graph aug = base;
      aug.adj(i, j) = true;
      const int da = *graph_delay(aug);
      const LinkSubspace ls = link_subspace(base, {i, j}, part);
      ASSERT_EQ(ls.mask.d, fb.d);
      for (int t = 1; t <= fb.d; ++t) {
        const BinaryMatrix pw = bool_power(aug.adj, t - 1);
        for (int a = 0; a < 5; ++a) {
          for (int b = 0; b < 5; ++b) {
            const bool inAug = t > da || pw(a, b);
            EXPECT_EQ(ls.mask.block(t)(a, b), inAug && !fb.block(t)(a, b));
          }
        }
      }
      // Disjoint from the base subspace, never empty for a valid edge.
      EXPECT_FALSE(mask_intersection(ls.mask, fb).entry_count() > 0);
      EXPECT_GT(ls.mask.entry_count(), 0);
    }
  }
}

TEST(LinkSubspace, CoveredByMaximalGraph) {
  const testing::Instance inst = testing::chain_instance(5, 0.2, 3);
  const TemporalMask fb = subspace_masks(inst.base, inst.part);
  TemporalMask cover = fb;
  for (const Edge& e : inst.edges.edges) {
    cover = mask_union(cover, link_subspace(inst.base, e, inst.part).mask);
  }
  const TemporalMask fmax = subspace_masks(max_graph(inst.base, inst.edges), inst.part);
  EXPECT_TRUE(mask_subset(cover, fmax));
}

TEST(MaskNesting, SubgraphMasksAreNested) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const Graph g1 = testing::random_graph(5, 0.35, seed);
    if (!graph_delay(g1)) continue;
    Graph g2 = g1;
    g2.adj = g1.adj || testing::random_graph(5, 0.2, seed + 77).adj;
    const Partition part = scalar_partition(5);
    const TemporalMask m1 = subspace_masks(g1, part);
    const TemporalMask m2 = subspace_masks(g2, part);
    EXPECT_LE(m2.d, m1.d);
    EXPECT_TRUE(mask_subset(m1, m2)) << seed;
  }
}

DelayMatrix constant_delays(int n, int v) {
  DelayMatrix d;
  d.entries = Eigen::MatrixXi::Constant(n, n, v);
  d.entries.diagonal().setZero();
  return d;
}

TEST(QiDelayCheck, ThreeChainPasses) {
  const testing::Instance inst = testing::chain3();
  const QiCertificate cert = qi_delay_check(
      comm_delays(inst.base),
      propagation_delays(inst.plant, inst.part, PropagationMode::kStructural).delays);
  EXPECT_TRUE(cert.ok);
  EXPECT_TRUE(cert.violations.empty());
}

TEST(QiDelayCheck, ReportsDelayViolation) {
  DelayMatrix c = constant_delays(3, 1);
  DelayMatrix p = constant_delays(3, 1);
  c.entries(0, 2) = 5;
  c.entries(1, 2) = 4;
  c.entries(0, 1) = 1;
  p.entries(0, 2) = 2;
  p.entries(1, 2) = 5;
  const QiCertificate cert = qi_delay_check(c, p);
  EXPECT_FALSE(cert.ok);
  bool found = false;
  for (const auto& v : cert.violations) {
    if (v.kind == QiViolation::Kind::kDelay) {
      EXPECT_EQ(v.i, 0);
      EXPECT_EQ(v.j, 2);
      found = true;
    }
  }
  EXPECT_TRUE(found);
}

TEST(QiDelayCheck, ShortestPathDelaysSatisfyTriangle) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const Graph g = testing::random_graph(6, 0.3, seed);
    const DelayMatrix c = comm_delays(g);
    if (!c.all_finite()) continue;
    const QiCertificate cert = qi_delay_check(c, c);
    for (const auto& v : cert.violations) EXPECT_NE(v.kind, QiViolation::Kind::kTriangle);
  }
}

TEST(QiDelayCheck, InfiniteCommunicationDelayThrows) {
  EXPECT_THROW(qi_delay_check(comm_delays(Graph::identity(2)), constant_delays(2, 1)),
               PreconditionError);
}

TEST(QiDelayCheck, WholeDesignSetPasses) {
  const testing::Instance inst = testing::chain_instance(5, 0.2, 4);
  const DelayMatrix p =
      propagation_delays(inst.plant, inst.part, PropagationMode::kStructural).delays;
  for (const auto& dg : enumerate_design_set(inst.base, inst.edges)) {
    EXPECT_TRUE(qi_delay_check(comm_delays(dg.graph), p).ok) << dg.bitmask;
  }
}

TEST(QiProductCheck, DesignSetMembersAreQuadraticallyInvariant) {
  const testing::Instance inst = testing::chain3();
  for (const auto& dg : enumerate_design_set(inst.base, inst.edges)) {
    EXPECT_TRUE(qi_product_check(dg.graph, inst.plant, inst.part, 8)) << dg.bitmask;
  }
}

TEST(QiProductCheck, DisconnectedMasksWithCoupledPlant) {
  const Partition part = scalar_partition(2);
  const TemporalMask diag =
      make_mask({Graph::identity(2).adj, Graph::identity(2).adj, Graph::identity(2).adj}, part);
  const std::vector<BinaryMatrix> coupled(3, BinaryMatrix::Constant(2, 2, true));
  EXPECT_FALSE(qi_product_check(diag, coupled));
  const std::vector<BinaryMatrix> decoupled(3, Graph::identity(2).adj);
  EXPECT_TRUE(qi_product_check(diag, decoupled));
}

TEST(QiProductCheck, BlockDiagonalPlantAnyGraph) {
  const PlantModel P = testing::diagonal_plant(4, 0.5);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Graph g = testing::random_graph(4, 0.3, seed);
    if (!graph_delay(g)) continue;
    EXPECT_TRUE(qi_product_check(g, P, scalar_partition(4), 10)) << seed;
  }
}

TEST(Project, IdempotentAndOrthogonal) {
  const Partition part = scalar_partition(3);
  const TemporalMask m = subspace_masks(kChain3, part);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const FirTM X = testing::random_fir(3, 3, 1, 5, seed);
    const FirTM P = project(X, m, 4);
    EXPECT_EQ(project(P, m, 4), P);
    const FirTM R = X - P;
    EXPECT_NEAR(X.squared_norm(), P.squared_norm() + R.squared_norm(),
                1e-12 * X.squared_norm());
    EXPECT_NEAR(fir_inner(P, R), 0.0, 1e-12);
    // Delay 3 lies between the mask and the tail and is zeroed.
    EXPECT_TRUE(P.at(3).isZero(0.0));
    EXPECT_EQ(P.at(4), X.at(4));
    EXPECT_EQ(P.at(1)(0, 1), 0.0);
    EXPECT_EQ(P.at(2)(0, 1), X.at(2)(0, 1));
  }
}

TEST(Project, MembersAreFixed) {
  const Partition part = scalar_partition(3);
  const TemporalMask m = subspace_masks(kChain3, part);
  FirTM X = testing::random_fir(3, 3, 1, 4, 3);
  X = project(X, m, 3);
  EXPECT_EQ(project(X, m, 3), X);
  EXPECT_THROW(project(X, m, 2), PreconditionError);
}

TEST(MaskSerialization, GoldenDump) {
  const TemporalMask m = subspace_masks(kChain3, scalar_partition(3));
  const Json doc = save_mask(m);
  EXPECT_EQ(doc.dump(),
            R"({"blockMasks":[[[1,0,0],[0,1,0],[0,0,1]],[[1,1,0],[1,1,1],[0,1,1]]],"d":2})");
  const auto blocks = load_block_masks(doc);
  EXPECT_EQ(make_mask(blocks, scalar_partition(3)), m);
}

}  // namespace
}  // namespace commlink
