#pragma once

// Quantum horse lotteries: m prizes, quantum dimension n, stored as the m
// diagonal blocks Q_1..Q_m of an element of D^m (x) H^n. The last prize is
// the worst outcome z.

#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "qdt/hermitian.hpp"
#include "qdt/random.hpp"

namespace qdt {

class PrizeSpace {
 public:
  explicit PrizeSpace(std::size_t m) : PrizeSpace(default_labels(m)) {}
  explicit PrizeSpace(std::vector<std::string> labels) : labels_(std::move(labels)) {
    if (labels_.size() < 2) throw Error(ErrorCode::InvalidArgument, "a prize space needs at least two prizes");
  }

  std::size_t size() const { return labels_.size(); }
  const std::vector<std::string>& labels() const { return labels_; }
  /// Index of the worst prize z, always the last one.
  std::size_t worst_index() const { return labels_.size() - 1; }

 private:
  static std::vector<std::string> default_labels(std::size_t m) {
    std::vector<std::string> l;
    for (std::size_t i = 0; i < m; ++i) l.push_back("x" + std::to_string(i + 1));
    return l;
  }
  std::vector<std::string> labels_;
};

class PrizePmf {
 public:
  static constexpr double kNegTol = 1e-12;
  static constexpr double kSumTol = 1e-9;

  explicit PrizePmf(std::vector<double> w) : w_(std::move(w)) {
    double s = 0.0;
    for (std::size_t i = 0; i < w_.size(); ++i) {
      if (!(w_[i] >= -kNegTol)) {
        std::ostringstream os;
        os << "pmf entry " << i << " is " << w_[i];
        throw Error(ErrorCode::InvalidArgument, os.str());
      }
      s += w_[i];
    }
    if (std::abs(s - 1.0) > kSumTol) {
      std::ostringstream os;
      os << "pmf sums to " << s;
      throw Error(ErrorCode::InvalidArgument, os.str());
    }
  }

  /// Clamps floating-point dust from measurement arithmetic: tiny negatives
  /// become zero, and the vector is renormalized if the sum drifted.
  static PrizePmf from_measurement(std::vector<double> w) {
    double s = 0.0;
    for (auto& x : w) {
      if (x < 0.0 && x >= -PrizePmf::kSumTol) x = 0.0;
      s += x;
    }
    if (std::abs(s - 1.0) > kNegTol && s > 0.0 && std::abs(s - 1.0) <= kSumTol) {
      for (auto& x : w) x /= s;
    }
    return PrizePmf(std::move(w));
  }

  static PrizePmf point(std::size_t m, std::size_t k) {
    std::vector<double> w(m, 0.0);
    w.at(k) = 1.0;
    return PrizePmf(std::move(w));
  }

  static PrizePmf uniform(std::size_t m) { return PrizePmf(std::vector<double>(m, 1.0 / static_cast<double>(m))); }

  std::size_t size() const { return w_.size(); }
  double operator[](std::size_t i) const { return w_[i]; }
  const std::vector<double>& weights() const { return w_; }

 private:
  std::vector<double> w_;
};

class QHLottery;

struct LotteryViolation {
  enum class Kind { NegativeBlock, SumResidual };
  Kind kind;
  std::size_t block = 0;       // failing block (NegativeBlock)
  double value = 0.0;          // its smallest eigenvalue, or the sum residual
  std::string message;
};

using LotteryCheck = std::variant<QHLottery, LotteryViolation>;

/// The block list of a quantum horse lottery: every Q_j is PSD and
/// sum_j Q_j = I_n.
class QHLottery {
 public:
  static constexpr double kTol = 1e-9;

  std::size_t m() const { return q_.num_blocks(); }
  Index n() const { return q_.block_dim(); }
  const BlockHermitian& blocks() const { return q_; }
  const HermitianMatrix& operator[](std::size_t j) const { return q_[j]; }

  friend bool operator==(const QHLottery& a, const QHLottery& b) {
    if (a.m() != b.m() || a.n() != b.n()) return false;
    return (a.q_ - b.q_).max_abs() == 0.0;
  }

  /// For blocks that are known to be valid by construction.
  static QHLottery trusted(BlockHermitian q) { return QHLottery(std::move(q)); }

  /// Validating constructor; throws InvalidLottery with the violation text.
  static QHLottery from_blocks(std::vector<HermitianMatrix> blocks);

 private:
  explicit QHLottery(BlockHermitian q) : q_(std::move(q)) {}
  BlockHermitian q_;
};

inline LotteryCheck validate_qh_lottery(const std::vector<HermitianMatrix>& blocks, double tol = QHLottery::kTol) {
  if (blocks.size() < 2) throw Error(ErrorCode::DimensionMismatch, "a lottery needs m >= 2 blocks");
  const Index n = blocks.front().dim();
  for (const auto& b : blocks) {
    if (b.dim() != n) throw Error(ErrorCode::DimensionMismatch, "lottery blocks differ in dimension");
  }
  for (std::size_t j = 0; j < blocks.size(); ++j) {
    const double lmin = eigenvalues(blocks[j])(0);
    if (lmin < -tol) {
      std::ostringstream os;
      os << "block " << j + 1 << " has eigenvalue " << lmin;
      return LotteryViolation{LotteryViolation::Kind::NegativeBlock, j, lmin, os.str()};
    }
  }
  MatrixXcd sum = -MatrixXcd::Identity(n, n);
  for (const auto& b : blocks) sum += b.matrix();
  const double residual = sum.cwiseAbs().maxCoeff();
  if (residual > tol) {
    std::ostringstream os;
    os << "blocks sum to the identity only within " << residual;
    return LotteryViolation{LotteryViolation::Kind::SumResidual, 0, residual, os.str()};
  }
  return QHLottery::trusted(BlockHermitian(blocks));
}

inline QHLottery QHLottery::from_blocks(std::vector<HermitianMatrix> blocks) {
  auto v = validate_qh_lottery(blocks);
  if (auto* bad = std::get_if<LotteryViolation>(&v)) throw Error(ErrorCode::InvalidLottery, bad->message);
  return std::get<QHLottery>(std::move(v));
}

/// Q = sum_j q_j (x) V_j for pmfs q_j and an orthogonal decomposition V.
inline QHLottery make_simple_lottery(const std::vector<PrizePmf>& pmfs, const OrthogonalDecomposition& od) {
  if (pmfs.size() != od.size()) throw Error(ErrorCode::DimensionMismatch, "need one pmf per projector");
  const std::size_t m = pmfs.front().size();
  if (m < 2) throw Error(ErrorCode::DimensionMismatch, "a lottery needs m >= 2 prizes");
  const Index n = od.dim();
  std::vector<MatrixXcd> q(m, MatrixXcd::Zero(n, n));
  for (std::size_t j = 0; j < pmfs.size(); ++j) {
    if (pmfs[j].size() != m) throw Error(ErrorCode::DimensionMismatch, "pmfs differ in length");
    const MatrixXcd v = od[j].vector() * od[j].vector().adjoint();
    for (std::size_t k = 0; k < m; ++k) q[k] += pmfs[j][k] * v;
  }
  std::vector<HermitianMatrix> blocks;
  for (auto& b : q) blocks.push_back(HermitianMatrix::from_trusted(b));
  return QHLottery::trusted(BlockHermitian(std::move(blocks)));
}

/// p(k) = pi^dagger Q_k pi: the prize distribution once pi is observed.
inline PrizePmf measure_lottery(const QHLottery& q, const Projector& pi) {
  if (pi.dim() != q.n()) throw Error(ErrorCode::DimensionMismatch, "projector and lottery differ in dimension");
  std::vector<double> p;
  for (const auto& b : q.blocks().blocks()) p.push_back(pi.expectation(b));
  return PrizePmf::from_measurement(std::move(p));
}

/// A lottery from a random POVM (generically full rank in every block).
inline QHLottery random_lottery(std::size_t m, Index n, Rng& rng) {
  return QHLottery::trusted(BlockHermitian(random_povm(m, n, rng)));
}

/// Z: the worst prize with certainty.
inline QHLottery worst_lottery(std::size_t m, Index n) {
  if (m < 2 || n < 1) throw Error(ErrorCode::DimensionMismatch, "need m >= 2 and n >= 1");
  std::vector<HermitianMatrix> b(m, HermitianMatrix::zero(n));
  b.back() = HermitianMatrix::identity(n);
  return QHLottery::trusted(BlockHermitian(std::move(b)));
}

/// U: every block equal to I/m.
inline QHLottery uniform_lottery(std::size_t m, Index n) {
  if (m < 2 || n < 1) throw Error(ErrorCode::DimensionMismatch, "need m >= 2 and n >= 1");
  return QHLottery::trusted(BlockHermitian::identity(m, n) * (1.0 / static_cast<double>(m)));
}

/// a P + (1 - a) R.
inline QHLottery mixture(double a, const QHLottery& p, const QHLottery& r) {
  if (!(a >= 0.0 && a <= 1.0)) {
    std::ostringstream os;
    os << "mixture weight " << a << " outside [0, 1]";
    throw Error(ErrorCode::RangeError, os.str());
  }
  if (p.m() != r.m() || p.n() != r.n()) throw Error(ErrorCode::DimensionMismatch, "lotteries differ in shape");
  return QHLottery::trusted(a * p.blocks() + (1.0 - a) * r.blocks());
}

/// Diagonal lottery from a column-stochastic m x n table: column w is the
/// prize distribution in state w.
inline QHLottery classical_lottery(const MatrixXd& table) {
  const Index m = table.rows();
  const Index n = table.cols();
  if (m < 2 || n < 1) throw Error(ErrorCode::DimensionMismatch, "table must be m x n with m >= 2");
  for (Index w = 0; w < n; ++w) {
    const double s = table.col(w).sum();
    if (table.col(w).minCoeff() < -PrizePmf::kNegTol || std::abs(s - 1.0) > PrizePmf::kSumTol) {
      std::ostringstream os;
      os << "column " << w << " is not a pmf (sum " << s << ", min " << table.col(w).minCoeff() << ")";
      throw Error(ErrorCode::NotColumnStochastic, os.str());
    }
  }
  std::vector<HermitianMatrix> blocks;
  for (Index k = 0; k < m; ++k) {
    const VectorXd row = table.row(k).transpose();
    blocks.push_back(HermitianMatrix::diagonal(std::span<const double>(row.data(), static_cast<std::size_t>(n))));
  }
  return QHLottery::trusted(BlockHermitian(std::move(blocks)));
}

/// A gamble on D^{m-1} (x) H^n: a lottery or difference with the z-block
/// dropped.
using ProjectedGamble = BlockHermitian;

/// lambda (P - Q), kept with its provenance when known.
class LotteryDifference {
 public:
  struct Provenance {
    double lambda;
    QHLottery p;
    QHLottery q;
  };

  static constexpr double kBalanceTol = 1e-9;

  static LotteryDifference of(const QHLottery& p, const QHLottery& q, double lambda = 1.0) {
    if (p.m() != q.m() || p.n() != q.n()) throw Error(ErrorCode::DimensionMismatch, "lotteries differ in shape");
    if (!(lambda > 0.0)) throw Error(ErrorCode::RangeError, "difference scale must be positive");
    return LotteryDifference(lambda * (p.blocks() - q.blocks()), Provenance{lambda, p, q});
  }

  /// Any block list whose blocks sum to zero.
  static LotteryDifference from_blocks(BlockHermitian d) {
    MatrixXcd sum = MatrixXcd::Zero(d.block_dim(), d.block_dim());
    for (const auto& b : d.blocks()) sum += b.matrix();
    const double tol = kBalanceTol * std::max(1.0, d.max_abs());
    if (sum.cwiseAbs().maxCoeff() > tol) throw Error(ErrorCode::InvalidArgument, "difference blocks do not sum to zero");
    return LotteryDifference(std::move(d), std::nullopt);
  }

  std::size_t m() const { return d_.num_blocks(); }
  Index n() const { return d_.block_dim(); }
  const BlockHermitian& blocks() const { return d_; }
  const std::optional<Provenance>& provenance() const { return prov_; }

  friend LotteryDifference operator+(const LotteryDifference& a, const LotteryDifference& b) {
    return LotteryDifference(a.d_ + b.d_, std::nullopt);
  }
  friend LotteryDifference operator*(double s, const LotteryDifference& a) {
    return LotteryDifference(s * a.d_, std::nullopt);
  }

 private:
  LotteryDifference(BlockHermitian d, std::optional<Provenance> prov) : d_(std::move(d)), prov_(std::move(prov)) {}
  BlockHermitian d_;
  std::optional<Provenance> prov_;
};

namespace detail {
inline ProjectedGamble drop_last_block(const BlockHermitian& b) {
  std::vector<HermitianMatrix> out(b.blocks().begin(), b.blocks().end() - 1);
  return BlockHermitian(std::move(out));
}
}  // namespace detail

/// Diag(Q_1, ..., Q_{m-1}).
inline ProjectedGamble project(const QHLottery& q) { return detail::drop_last_block(q.blocks()); }
inline ProjectedGamble project(const LotteryDifference& d) { return detail::drop_last_block(d.blocks()); }

struct LiftedGamble {
  double lambda;
  QHLottery p;
  QHLottery q;
};

/// Writes W = Proj(lambda (P - Q)) by splitting every block into positive
/// and negative parts W_j = W_j^+ - W_j^-, with
///   lambda = (m-1) (max_j lambda_max(W_j^+) + max_j lambda_max(W_j^-)),
///   P = (W^+_1/lambda, ..., I - sum_j W^+_j/lambda), Q likewise with W^-.
inline LiftedGamble lift_gamble(const ProjectedGamble& w) {
  const std::size_t m = w.num_blocks() + 1;
  const Index n = w.block_dim();
  std::vector<HermitianMatrix> plus, minus;
  double top_plus = 0.0, top_minus = 0.0;
  for (const auto& b : w.blocks()) {
    const auto es = eig_decompose(b);
    const VectorXd pos = es.values.cwiseMax(0.0);
    const VectorXd neg = (-es.values).cwiseMax(0.0);
    plus.push_back(HermitianMatrix::from_trusted(es.vectors * pos.cast<cdouble>().asDiagonal() * es.vectors.adjoint()));
    minus.push_back(HermitianMatrix::from_trusted(es.vectors * neg.cast<cdouble>().asDiagonal() * es.vectors.adjoint()));
    top_plus = std::max(top_plus, pos.maxCoeff());
    top_minus = std::max(top_minus, neg.maxCoeff());
  }
  const double lambda = static_cast<double>(m - 1) * (top_plus + top_minus);
  if (!(lambda > 0.0)) throw Error(ErrorCode::ZeroGamble, "cannot lift the zero gamble");

  auto build = [&](const std::vector<HermitianMatrix>& parts) {
    std::vector<HermitianMatrix> blocks;
    HermitianMatrix rest = HermitianMatrix::identity(n);
    for (const auto& part : parts) {
      blocks.push_back(part * (1.0 / lambda));
      rest -= blocks.back();
    }
    blocks.push_back(rest);
    return QHLottery::trusted(BlockHermitian(std::move(blocks)));
  };
  return {lambda, build(plus), build(minus)};
}

}  // namespace qdt
