#include "commlink/qispace.hpp"

#include <algorithm>
#include <sstream>

#include "commlink/errors.hpp"

namespace commlink {
namespace {

int require_finite_delay(const Graph& g, const char* op) {
  const std::optional<int> d = graph_delay(g);
  if (!d) {
    throw PreconditionError(std::string(op) +
                            ": graph has infinite delay (not primitive)");
  }
  return *d;
}

void require_same_shape(const TemporalMask& a, const TemporalMask& b) {
  if (a.d != b.d || (a.d > 0 && (a.entry(1).rows() != b.entry(1).rows() ||
                                 a.entry(1).cols() != b.entry(1).cols()))) {
    throw PreconditionError("temporal masks have different shapes");
  }
}

template <typename Op>
TemporalMask combine(const TemporalMask& a, const TemporalMask& b, Op op) {
  require_same_shape(a, b);
  TemporalMask out = a;
  for (int t = 0; t < a.d; ++t) {
    out.blockMasks[t] = op(a.blockMasks[t], b.blockMasks[t]);
    out.entryMasks[t] = op(a.entryMasks[t], b.entryMasks[t]);
  }
  return out;
}

// Block support of G22^(tau), tau = 1..horizon: structural when B2 and C2
// are block diagonal, numerical otherwise.
std::vector<BinaryMatrix> structural_g22_support(const PlantModel& plant,
                                                 const Partition& part,
                                                 int horizon, double tolZero) {
  std::vector<BinaryMatrix> support;
  support.reserve(horizon);
  try {
    const DelayMatrix p =
        propagation_delays(plant, part, PropagationMode::kStructural, tolZero)
            .delays;
    for (int tau = 1; tau <= horizon; ++tau) {
      BinaryMatrix s(part.n, part.n);
      for (int i = 0; i < part.n; ++i) {
        for (int j = 0; j < part.n; ++j) {
          s(i, j) = is_finite_delay(p(i, j)) && tau >= p(i, j);
        }
      }
      support.push_back(std::move(s));
    }
    return support;
  } catch (const PreconditionError&) {
    // B2 or C2 not block diagonal: fall back to numerical supports.
  }
  const auto g22 = markov_params(plant, PlantBlock::k22, 1, horizon);
  const auto yOff = part.y_offsets();
  const auto uOff = part.u_offsets();
  for (int tau = 1; tau <= horizon; ++tau) {
    BinaryMatrix s(part.n, part.n);
    for (int i = 0; i < part.n; ++i) {
      for (int j = 0; j < part.n; ++j) {
        s(i, j) = g22[tau - 1]
                      .block(yOff[i], uOff[j], yOff[i + 1] - yOff[i],
                             uOff[j + 1] - uOff[j])
                      .cwiseAbs()
                      .maxCoeff() > tolZero;
      }
    }
    support.push_back(std::move(s));
  }
  return support;
}

}  // namespace

int TemporalMask::entry_count() const {
  int count = 0;
  for (const auto& m : entryMasks) count += static_cast<int>(m.count());
  return count;
}

bool TemporalMask::operator==(const TemporalMask& other) const {
  if (d != other.d) return false;
  for (int t = 0; t < d; ++t) {
    if (blockMasks[t].rows() != other.blockMasks[t].rows() ||
        blockMasks[t].cols() != other.blockMasks[t].cols() ||
        !(blockMasks[t] == other.blockMasks[t]).all()) {
      return false;
    }
  }
  return true;
}

BinaryMatrix inflate_block_mask(const BinaryMatrix& block,
                                const Partition& part) {
  if (block.rows() != part.n || block.cols() != part.n) {
    throw PreconditionError("block mask does not match the partition size");
  }
  const auto uOff = part.u_offsets();
  const auto yOff = part.y_offsets();
  BinaryMatrix out = BinaryMatrix::Constant(uOff.back(), yOff.back(), false);
  for (int i = 0; i < part.n; ++i) {
    for (int j = 0; j < part.n; ++j) {
      if (block(i, j)) {
        out.block(uOff[i], yOff[j], uOff[i + 1] - uOff[i],
                  yOff[j + 1] - yOff[j])
            .setConstant(true);
      }
    }
  }
  return out;
}

TemporalMask make_mask(std::vector<BinaryMatrix> blocks, const Partition& part) {
  TemporalMask m;
  m.d = static_cast<int>(blocks.size());
  m.entryMasks.reserve(blocks.size());
  for (const auto& b : blocks) m.entryMasks.push_back(inflate_block_mask(b, part));
  m.blockMasks = std::move(blocks);
  return m;
}

TemporalMask mask_union(const TemporalMask& a, const TemporalMask& b) {
  return combine(a, b, [](const BinaryMatrix& x, const BinaryMatrix& y) {
    return BinaryMatrix(x || y);
  });
}

TemporalMask mask_intersection(const TemporalMask& a, const TemporalMask& b) {
  return combine(a, b, [](const BinaryMatrix& x, const BinaryMatrix& y) {
    return BinaryMatrix(x && y);
  });
}

TemporalMask mask_difference(const TemporalMask& a, const TemporalMask& b) {
  return combine(a, b, [](const BinaryMatrix& x, const BinaryMatrix& y) {
    return BinaryMatrix(x && !y);
  });
}

bool mask_subset(const TemporalMask& a, const TemporalMask& b) {
  for (int t = 1; t <= a.d; ++t) {
    if (t > b.d) continue;
    if (!(!a.entry(t) || b.entry(t)).all()) return false;
  }
  return true;
}

TemporalMask subspace_masks(const Graph& g, const Partition& part) {
  const int d = require_finite_delay(g, "subspace_masks");
  std::vector<BinaryMatrix> blocks;
  blocks.reserve(d);
  BinaryMatrix power = bool_power(g.adj, 0);
  for (int t = 1; t <= d; ++t) {
    blocks.push_back(power);
    power = bool_product(power, g.adj);
  }
  return make_mask(std::move(blocks), part);
}

TemporalMask perp_masks(const Graph& g, const Partition& part) {
  TemporalMask m = subspace_masks(g, part);
  for (int t = 0; t < m.d; ++t) {
    m.blockMasks[t] = !m.blockMasks[t];
    m.entryMasks[t] = !m.entryMasks[t];
  }
  return m;
}

LinkSubspace link_subspace(const Graph& base, Edge edge, const Partition& part) {
  const auto [i, j] = edge;
  if (i < 0 || j < 0 || i >= base.n() || j >= base.n()) {
    throw PreconditionError("link_subspace: edge out of range");
  }
  if (base.adj(i, j)) {
    std::ostringstream os;
    os << "link_subspace: edge (" << i << "," << j
       << ") is already in the base graph";
    throw PreconditionError(os.str());
  }
  const TemporalMask baseMask = subspace_masks(base, part);
  Graph augmented = base;
  augmented.adj(i, j) = true;
  const TemporalMask augMask = subspace_masks(augmented, part);

  std::vector<BinaryMatrix> blocks;
  blocks.reserve(baseMask.d);
  for (int t = 1; t <= baseMask.d; ++t) {
    const BinaryMatrix allowed =
        t <= augMask.d ? augMask.block(t)
                       : BinaryMatrix::Constant(base.n(), base.n(), true);
    blocks.push_back(allowed && !baseMask.block(t));
  }
  return {edge, make_mask(std::move(blocks), part)};
}

QiCertificate qi_delay_check(const DelayMatrix& c, const DelayMatrix& p) {
  const int n = c.n();
  if (p.n() != n) throw PreconditionError("qi_delay_check: size mismatch");
  if (!c.all_finite()) {
    throw PreconditionError("qi_delay_check: infinite communication delay");
  }
  QiCertificate cert;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (is_finite_delay(p(i, j)) && c(i, j) > p(i, j) + 1) {
        cert.violations.push_back({QiViolation::Kind::kDelay, i, j, 0});
      }
    }
  }
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (c(k, i) + c(i, j) < c(k, j)) {
          cert.violations.push_back({QiViolation::Kind::kTriangle, i, j, k});
        }
      }
    }
  }
  cert.ok = cert.violations.empty();
  return cert;
}

bool qi_product_check(const TemporalMask& mask,
                      const std::vector<BinaryMatrix>& g22Support) {
  const int d = mask.d;
  // (K G22 K)^(t) = sum_{a + tau + b = t} K^(a) G22^(tau) K^(b); only
  // t <= d is constrained.
  for (int a = 1; a <= d; ++a) {
    for (int b = 1; a + b + 1 <= d; ++b) {
      for (int tau = 1; a + tau + b <= d; ++tau) {
        if (tau > static_cast<int>(g22Support.size())) break;
        const BinaryMatrix prod = bool_product(
            bool_product(mask.block(a), g22Support[tau - 1]), mask.block(b));
        if (!(!prod || mask.block(a + tau + b)).all()) return false;
      }
    }
  }
  return true;
}

bool qi_product_check(const Graph& g, const PlantModel& plant,
                      const Partition& part, int horizon, double tolZero) {
  const TemporalMask mask = subspace_masks(g, part);
  const int needed = std::max({1, horizon, mask.d});
  return qi_product_check(mask,
                          structural_g22_support(plant, part, needed, tolZero));
}

FirTM project(const FirTM& X, const TemporalMask& m, int freeTailFrom) {
  if (freeTailFrom <= m.d) {
    throw PreconditionError("project: freeTailFrom must exceed the mask horizon");
  }
  if (X.t_max() < m.d) {
    throw PreconditionError("project: FIR horizon shorter than the mask");
  }
  FirTM out = X;
  for (int t = X.t_min(); t <= X.t_max(); ++t) {
    if (t >= freeTailFrom) continue;
    if (t >= 1 && t <= m.d) {
      if (m.entry(t).rows() != X.rows() || m.entry(t).cols() != X.cols()) {
        throw PreconditionError("project: mask and FIR shapes differ");
      }
      out.at(t) = m.entry(t).select(X.at(t), 0.0);
    } else {
      out.at(t).setZero();
    }
  }
  return out;
}

}  // namespace commlink
