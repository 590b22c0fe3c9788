#include "commlink/sysmodel.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "commlink/commgraph.hpp"
#include "commlink/errors.hpp"

namespace commlink {
namespace {

std::vector<int> offsets_of(const std::vector<int>& sizes) {
  std::vector<int> out(sizes.size() + 1, 0);
  std::partial_sum(sizes.begin(), sizes.end(), out.begin() + 1);
  return out;
}

std::string dims(const Eigen::MatrixXd& m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols();
  return os.str();
}

void expect_shape(const Eigen::MatrixXd& m, Eigen::Index rows,
                  Eigen::Index cols, const char* field) {
  if (m.rows() != rows || m.cols() != cols) {
    std::ostringstream os;
    os << "dimension mismatch in " << field << ": expected " << rows << "x"
       << cols << ", got " << dims(m);
    throw InputError(field, os.str());
  }
}

void check_sizes(const std::vector<int>& sizes, int n, int total,
                 const char* field) {
  if (static_cast<int>(sizes.size()) != n) {
    throw InputError(field, std::string("partition.") + field +
                                " must list one size per sub-controller");
  }
  for (int s : sizes) {
    if (s <= 0) {
      throw InputError(field, std::string("partition.") + field +
                                  " sizes must be positive");
    }
  }
  if (std::accumulate(sizes.begin(), sizes.end(), 0) != total) {
    std::ostringstream os;
    os << "dimension mismatch in partition." << field << ": sizes sum to "
       << std::accumulate(sizes.begin(), sizes.end(), 0) << ", expected "
       << total;
    throw InputError(field, os.str());
  }
}

// Largest |entry| outside the diagonal blocks given by row/col offsets.
double off_block_max(const Eigen::MatrixXd& m, const std::vector<int>& rowOff,
                     const std::vector<int>& colOff) {
  double worst = 0.0;
  const int n = static_cast<int>(rowOff.size()) - 1;
  for (int bi = 0; bi < n; ++bi) {
    for (int bj = 0; bj < n; ++bj) {
      if (bi == bj) continue;
      const int r0 = rowOff[bi], r1 = rowOff[bi + 1];
      const int c0 = colOff[bj], c1 = colOff[bj + 1];
      if (r1 > r0 && c1 > c0) {
        worst = std::max(
            worst, m.block(r0, c0, r1 - r0, c1 - c0).cwiseAbs().maxCoeff());
      }
    }
  }
  return worst;
}

}  // namespace

std::vector<int> Partition::u_offsets() const { return offsets_of(uSizes); }
std::vector<int> Partition::y_offsets() const { return offsets_of(ySizes); }

std::vector<int> Partition::x_offsets(int states) const {
  if (!xSizes.empty()) return offsets_of(xSizes);
  if (n <= 0 || states % n != 0) {
    std::ostringstream os;
    os << "cannot split " << states << " states evenly across " << n
       << " sub-systems; give an explicit state partition";
    throw PreconditionError(os.str());
  }
  return offsets_of(std::vector<int>(n, states / n));
}

void check_dimensions(const PlantModel& P, const Partition& part) {
  const Eigen::Index s = P.A.rows();
  if (s == 0 || P.A.cols() != s) {
    throw InputError("A", "dimension mismatch in A: expected a nonempty "
                          "square matrix, got " + dims(P.A));
  }
  expect_shape(P.B1, s, P.B1.cols(), "B1");
  expect_shape(P.B2, s, P.B2.cols(), "B2");
  expect_shape(P.C1, P.C1.rows(), s, "C1");
  expect_shape(P.C2, P.C2.rows(), s, "C2");
  for (const auto& [m, field] : {std::pair{&P.B1, "B1"}, std::pair{&P.B2, "B2"},
                                 std::pair{&P.C1, "C1"}, std::pair{&P.C2, "C2"}}) {
    if (m->size() == 0) {
      throw InputError(field, std::string("dimension mismatch in ") + field +
                                  ": matrix is empty");
    }
  }
  // Control and measurement widths are fixed by the partition when it is
  // well formed, so a disagreement is blamed on B2 / C2 rather than D12 / D21.
  if (part.n >= 1 && static_cast<int>(part.uSizes.size()) == part.n) {
    const int u = std::accumulate(part.uSizes.begin(), part.uSizes.end(), 0);
    expect_shape(P.B2, s, u, "B2");
  }
  if (part.n >= 1 && static_cast<int>(part.ySizes.size()) == part.n) {
    const int y = std::accumulate(part.ySizes.begin(), part.ySizes.end(), 0);
    expect_shape(P.C2, y, s, "C2");
  }
  expect_shape(P.D12, P.C1.rows(), P.B2.cols(), "D12");
  expect_shape(P.D21, P.C2.rows(), P.B1.cols(), "D21");

  if (part.n < 1) throw InputError("partition", "partition requires n >= 1");
  check_sizes(part.uSizes, part.n, P.p2(), "u");
  check_sizes(part.ySizes, part.n, P.q2(), "y");
  if (!part.xSizes.empty()) check_sizes(part.xSizes, part.n, P.states(), "x");
}

double spectral_radius(const Eigen::MatrixXd& A) {
  if (A.size() == 0) return 0.0;
  Eigen::EigenSolver<Eigen::MatrixXd> es(A, /*computeEigenvectors=*/false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

void require_stable(const PlantModel& plant) {
  const double rho = spectral_radius(plant.A);
  if (!(rho < 1.0)) {
    std::ostringstream os;
    os << "plant is not open-loop stable (spectral radius " << rho << ")";
    throw PreconditionError(os.str());
  }
}

ValidationReport validate_plant(const PlantModel& P, const Partition& part,
                                double tolZero) {
  check_dimensions(P, part);
  ValidationReport report;
  report.spectralRadius = spectral_radius(P.A);
  report.stable = report.spectralRadius < 1.0 - tolZero;
  if (!report.stable) {
    report.warnings.push_back("A is not Schur stable; synthesis is refused");
  }

  std::vector<int> xOff;
  bool haveStateSplit = true;
  try {
    xOff = part.x_offsets(P.states());
  } catch (const PreconditionError& e) {
    haveStateSplit = false;
    report.warnings.push_back(e.what());
  }
  if (haveStateSplit) {
    report.b2BlockDiag = off_block_max(P.B2, xOff, part.u_offsets()) <= tolZero;
    report.c2BlockDiag = off_block_max(P.C2, part.y_offsets(), xOff) <= tolZero;
    if (!report.b2BlockDiag) report.warnings.push_back("B2 is not block diagonal");
    if (!report.c2BlockDiag) report.warnings.push_back("C2 is not block diagonal");
    report.baseStronglyConnected =
        graph_delay(base_graph(P, part, tolZero)).has_value();
    if (!report.baseStronglyConnected) {
      report.warnings.push_back(
          "base graph bsupp(A) has infinite delay (not primitive)");
    }
  }

  const auto eye = [](Eigen::Index k) {
    return Eigen::MatrixXd::Identity(k, k);
  };
  report.paramAssumptionResiduals = {
      (P.D12.transpose() * P.D12 - eye(P.p2())).norm(),
      (P.D21 * P.D21.transpose() - eye(P.q2())).norm(),
      (P.C1.transpose() * P.D12).norm(),
      (P.B1 * P.D21.transpose()).norm(),
  };
  static constexpr const char* kNames[] = {"D12'D12 = I", "D21 D21' = I",
                                           "C1'D12 = 0", "B1 D21' = 0"};
  for (std::size_t k = 0; k < 4; ++k) {
    if (report.paramAssumptionResiduals[k] > tolZero) {
      std::ostringstream os;
      os << "assumption " << kNames[k] << " violated (residual "
         << report.paramAssumptionResiduals[k] << ")";
      report.warnings.push_back(os.str());
    }
  }
  return report;
}

std::vector<Eigen::MatrixXd> markov_params(const PlantModel& P,
                                           PlantBlock block, int tFrom,
                                           int tTo) {
  if (tFrom < 0 || tTo < tFrom) {
    throw PreconditionError("markov_params: need 0 <= tFrom <= tTo");
  }
  const Eigen::MatrixXd* C = nullptr;
  const Eigen::MatrixXd* B = nullptr;
  Eigen::MatrixXd D;
  switch (block) {
    case PlantBlock::k11:
      C = &P.C1, B = &P.B1, D = Eigen::MatrixXd::Zero(P.q1(), P.p1());
      break;
    case PlantBlock::k12:
      C = &P.C1, B = &P.B2, D = P.D12;
      break;
    case PlantBlock::k21:
      C = &P.C2, B = &P.B1, D = P.D21;
      break;
    case PlantBlock::k22:
      C = &P.C2, B = &P.B2, D = Eigen::MatrixXd::Zero(P.q2(), P.p2());
      break;
  }

  std::vector<Eigen::MatrixXd> out;
  out.reserve(tTo - tFrom + 1);
  // AkB = A^{t-1} B for the current t >= 1.
  Eigen::MatrixXd AkB = *B;
  for (int t = 0; t <= tTo; ++t) {
    if (t >= 1 && t >= tFrom) out.push_back(*C * AkB);
    if (t == 0 && tFrom == 0) out.push_back(D);
    if (t >= 1) AkB = P.A * AkB;
  }
  return out;
}

std::pair<PlantModel, Partition> gen_chain_plant(int n, double couple,
                                                 std::uint64_t seed) {
  if (n < 2) throw PreconditionError("gen_chain_plant: n >= 2 required");
  if (!(couple >= 0.0) || !std::isfinite(couple)) {
    throw PreconditionError("gen_chain_plant: couple must be nonnegative");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> diag(0.3, 0.6);

  PlantModel P;
  P.A = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    P.A(i, i) = diag(rng);
    if (i + 1 < n) {
      P.A(i, i + 1) = couple;
      P.A(i + 1, i) = couple;
    }
  }
  constexpr double kRhoTarget = 0.95;
  const double rho = spectral_radius(P.A);
  if (rho > kRhoTarget) P.A *= kRhoTarget / rho;
  if (!(spectral_radius(P.A) < 1.0)) {
    throw std::logic_error("gen_chain_plant: rescaled A is not stable");
  }

  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(n, n);
  P.B2 = I;
  P.C2 = I;
  // w = [process noise; sensor noise], z = [state; control effort].
  P.B1.resize(n, 2 * n);
  P.B1 << I, Z;
  P.D21.resize(n, 2 * n);
  P.D21 << Z, I;
  P.C1.resize(2 * n, n);
  P.C1 << I, Z;
  P.D12.resize(2 * n, n);
  P.D12 << Z, I;

  Partition part;
  part.n = n;
  part.uSizes.assign(n, 1);
  part.ySizes.assign(n, 1);
  return {std::move(P), std::move(part)};
}

}  // namespace commlink
