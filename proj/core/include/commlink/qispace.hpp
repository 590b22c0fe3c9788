#pragma once

#include <vector>

#include "commlink/commgraph.hpp"
#include "commlink/fir.hpp"

namespace commlink {

/// Coordinate subspace of FIR controllers with horizon d, described by one
/// n x n block mask per delay t = 1..d and its p2 x q2 entry-level inflation.
struct TemporalMask {
  int d = 0;
  std::vector<BinaryMatrix> blockMasks;
  std::vector<BinaryMatrix> entryMasks;

  int horizon() const { return d; }
  const BinaryMatrix& block(int t) const { return blockMasks.at(t - 1); }
  const BinaryMatrix& entry(int t) const { return entryMasks.at(t - 1); }

  /// Number of allowed scalar entries over all delays.
  int entry_count() const;
  bool empty() const { return entry_count() == 0; }

  bool operator==(const TemporalMask& other) const;
};

/// Builds the entry masks of `blocks` from the partition block sizes.
TemporalMask make_mask(std::vector<BinaryMatrix> blocks, const Partition& part);

BinaryMatrix inflate_block_mask(const BinaryMatrix& block, const Partition& part);

/// Entrywise OR / AND / (a AND NOT b) over a common horizon.
TemporalMask mask_union(const TemporalMask& a, const TemporalMask& b);
TemporalMask mask_intersection(const TemporalMask& a, const TemporalMask& b);
TemporalMask mask_difference(const TemporalMask& a, const TemporalMask& b);
/// Every entry of `a` is set in `b` over a's horizon (b may be longer;
/// delays of a beyond b's horizon are treated as unconstrained in b).
bool mask_subset(const TemporalMask& a, const TemporalMask& b);

/// F(G): block mask supp(G^(t-1)) for t = 1..d(G).
TemporalMask subspace_masks(const Graph& g, const Partition& part);

/// Complement of F(G) within the first d(G) delays.
TemporalMask perp_masks(const Graph& g, const Partition& part);

/// Controller entries unlocked relative to `base` solely by adding `edge`.
struct LinkSubspace {
  Edge edge;
  TemporalMask mask;
};

LinkSubspace link_subspace(const Graph& base, Edge edge, const Partition& part);

struct QiViolation {
  enum class Kind { kDelay, kTriangle };
  Kind kind = Kind::kDelay;
  /// kDelay: pair (i, j). kTriangle: triple with c(k,i) + c(i,j) < c(k,j).
  int i = 0;
  int j = 0;
  int k = 0;
};

struct QiCertificate {
  bool ok = true;
  std::vector<QiViolation> violations;
};

/// Sufficient delay condition c(i,j) <= p(i,j) + 1 together with the
/// triangle inequality on c.
QiCertificate qi_delay_check(const DelayMatrix& c, const DelayMatrix& p);

/// Structural check that K G22 K stays in S for every K in S, where S is
/// described by `mask` (unconstrained beyond its horizon) and
/// g22Support[tau - 1] is the block support of G22^(tau).
bool qi_product_check(const TemporalMask& mask,
                      const std::vector<BinaryMatrix>& g22Support);

/// Same check for S(g) with the structural G22 support of `plant`
/// (numerical block supports when B2 or C2 is not block diagonal).
bool qi_product_check(const Graph& g, const PlantModel& plant,
                      const Partition& part, int horizon,
                      double tolZero = kDefaultTolZero);

/// Orthogonal projection onto S: coefficients at t <= m.d are masked,
/// t >= freeTailFrom pass through, anything in between is zeroed.
FirTM project(const FirTM& X, const TemporalMask& m, int freeTailFrom);

}  // namespace commlink
