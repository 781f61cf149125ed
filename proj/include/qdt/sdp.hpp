#pragma once

// Primal-dual interior-point solver for small semidefinite programs over a
// product of real symmetric PSD blocks and a nonnegative orthant:
//
//   primal   min <C, X>   s.t.  A(X) = b,  X in K
//   dual     max b'y      s.t.  C - A*(y) = S in K
//
// The iterates follow the simplified homogeneous self-dual embedding
//
//   A(X) - b tau = 0,  A*(y) + S - C tau = 0,  <C,X> - b'y + kappa = 0,
//
// so infeasible problems come out with a certificate instead of diverging.
// Search directions are HKM with Mehrotra predictor-corrector.

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <vector>

#include <Eigen/Dense>

#include "qdt/eigensolver.hpp"
#include "qdt/error.hpp"

namespace qdt::sdp {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Element of the ambient space: one symmetric matrix per PSD block plus the
/// orthant coordinates.
struct BlockVector {
  std::vector<MatrixXd> psd;
  VectorXd lp;
};

struct Problem {
  std::vector<Index> psd_sizes;
  Index lp_size = 0;
  BlockVector c;
  /// a_psd[j][k] is the block-k coefficient of constraint j; a 0x0 matrix
  /// stands for a zero block.
  std::vector<std::vector<MatrixXd>> a_psd;
  /// Orthant coefficients, one row per constraint.
  MatrixXd a_lp;
  VectorXd b;

  Index num_constraints() const { return b.size(); }

  /// Empty problem over the given cone with p constraints (all data zero).
  static Problem over(std::vector<Index> psd_sizes, Index lp_size, Index constraints) {
    Problem p;
    p.psd_sizes = std::move(psd_sizes);
    p.lp_size = lp_size;
    for (Index s : p.psd_sizes) p.c.psd.push_back(MatrixXd::Zero(s, s));
    p.c.lp = VectorXd::Zero(lp_size);
    p.a_psd.assign(static_cast<std::size_t>(constraints), std::vector<MatrixXd>(p.psd_sizes.size()));
    p.a_lp = MatrixXd::Zero(constraints, lp_size);
    p.b = VectorXd::Zero(constraints);
    return p;
  }
};

struct Options {
  int max_iterations = 200;
  /// Target accuracy; the solver stops as soon as it is met.
  double feasibility_tol = 1e-9;
  double gap_tol = 1e-9;
  /// Accepted accuracy when progress stalls before the target is reached:
  /// the best iterate seen is returned if its gap is within fallback_tol
  /// and its residuals within fallback_residual_tol.
  double fallback_tol = 1e-8;
  double fallback_residual_tol = 1e-7;
  /// Iterations without improvement that count as a stall.
  int stall_iterations = 8;
  double infeasibility_tol = 1e-9;
  double step_fraction = 0.98;
  /// When set, one line per iteration: "iter, gap, primal-res, dual-res".
  std::ostream* trace = nullptr;
};

enum class Status { Optimal, PrimalInfeasible, DualInfeasible };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::Optimal: return "optimal";
    case Status::PrimalInfeasible: return "primal_infeasible";
    case Status::DualInfeasible: return "dual_infeasible";
  }
  return "?";
}

struct Solution {
  Status status = Status::Optimal;
  /// For Optimal these are the recovered (X, y, S); for PrimalInfeasible y
  /// is a Farkas certificate (b'y = 1, -A*(y) in K); for DualInfeasible X
  /// is a ray (<C,X> = -1, A(X) = 0).
  BlockVector x;
  VectorXd y;
  BlockVector s;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double gap = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  int iterations = 0;
};

namespace detail {

inline double inner(const BlockVector& u, const BlockVector& v) {
  double s = u.lp.dot(v.lp);
  for (std::size_t k = 0; k < u.psd.size(); ++k) s += u.psd[k].cwiseProduct(v.psd[k]).sum();
  return s;
}

inline double norm(const BlockVector& u) { return std::sqrt(inner(u, u)); }

inline void axpy(double a, const BlockVector& x, BlockVector& y) {
  y.lp += a * x.lp;
  for (std::size_t k = 0; k < x.psd.size(); ++k) y.psd[k] += a * x.psd[k];
}

inline BlockVector scaled(const BlockVector& x, double a) {
  BlockVector out = x;
  out.lp *= a;
  for (auto& m : out.psd) m *= a;
  return out;
}

inline BlockVector identity_like(const Problem& p) {
  BlockVector out;
  for (Index s : p.psd_sizes) out.psd.push_back(MatrixXd::Identity(s, s));
  out.lp = VectorXd::Ones(p.lp_size);
  return out;
}

class Operator {
 public:
  explicit Operator(const Problem& p) : p_(p) {}

  VectorXd apply(const BlockVector& x) const {
    VectorXd out = p_.a_lp * x.lp;
    for (Index j = 0; j < p_.num_constraints(); ++j) {
      const auto& row = p_.a_psd[static_cast<std::size_t>(j)];
      for (std::size_t k = 0; k < row.size(); ++k) {
        if (row[k].size() != 0) out(j) += row[k].cwiseProduct(x.psd[k]).sum();
      }
    }
    return out;
  }

  BlockVector adjoint(const VectorXd& y) const {
    BlockVector out;
    for (Index s : p_.psd_sizes) out.psd.push_back(MatrixXd::Zero(s, s));
    out.lp = p_.a_lp.transpose() * y;
    for (Index j = 0; j < p_.num_constraints(); ++j) {
      if (y(j) == 0.0) continue;
      const auto& row = p_.a_psd[static_cast<std::size_t>(j)];
      for (std::size_t k = 0; k < row.size(); ++k) {
        if (row[k].size() != 0) out.psd[k] += y(j) * row[k];
      }
    }
    return out;
  }

 private:
  const Problem& p_;
};

// Largest alpha with x + alpha*dx in the cone (capped at `cap`).
inline double max_step(const BlockVector& x, const BlockVector& dx, double cap) {
  double alpha = cap;
  for (Index i = 0; i < x.lp.size(); ++i) {
    if (dx.lp(i) < 0.0) alpha = std::min(alpha, -x.lp(i) / dx.lp(i));
  }
  for (std::size_t k = 0; k < x.psd.size(); ++k) {
    Eigen::LLT<MatrixXd> llt(x.psd[k]);
    if (llt.info() != Eigen::Success) return 0.0;
    const MatrixXd linv_dx = llt.matrixL().solve(dx.psd[k]);
    MatrixXd w = llt.matrixL().solve(linv_dx.transpose());
    w = 0.5 * (w + w.transpose()).eval();
    if (!w.allFinite()) return 0.0;
    const double lmin = self_adjoint_eigenvalues(w).minCoeff();
    if (lmin < 0.0) alpha = std::min(alpha, -1.0 / lmin);
  }
  return alpha;
}

inline bool finite(const BlockVector& v) {
  if (!v.lp.allFinite()) return false;
  for (const auto& m : v.psd)
    if (!m.allFinite()) return false;
  return true;
}

}  // namespace detail

/// Solves the primal/dual pair. Throws SolverError (IterationLimit or
/// SolverNumericalFailure) when neither optimality nor an infeasibility
/// certificate is reached.
inline Solution solve(const Problem& p, const Options& opt = {}) {

  const Index m = p.num_constraints();
  const std::size_t nblocks = p.psd_sizes.size();
  if (p.a_psd.size() != static_cast<std::size_t>(m) || p.a_lp.rows() != m || p.a_lp.cols() != p.lp_size ||
      p.c.psd.size() != nblocks || p.c.lp.size() != p.lp_size) {
    throw Error(ErrorCode::DimensionMismatch, "inconsistent SDP problem data");
  }
  Index cone_order = p.lp_size;
  for (Index s : p.psd_sizes) cone_order += s;

  const detail::Operator a(p);
  const double bnorm = std::max(1.0, p.b.norm());
  const double cnorm = std::max(1.0, detail::norm(p.c));

  BlockVector x = detail::identity_like(p);
  BlockVector s = detail::identity_like(p);
  VectorXd y = VectorXd::Zero(m);
  double tau = 1.0;
  double kappa = 1.0;

  struct Metrics {
    double pres, dres, pobj, dobj, relgap, pinf, dinf;
  };

  auto metrics = [&]() {
    Metrics mt{};
    const VectorXd rp = a.apply(x) - p.b * tau;
    BlockVector rd = a.adjoint(y);
    detail::axpy(1.0, s, rd);
    detail::axpy(-tau, p.c, rd);
    const double cx = detail::inner(p.c, x);
    const double by = p.b.dot(y);
    mt.pres = rp.norm() / tau / bnorm;
    mt.dres = detail::norm(rd) / tau / cnorm;
    mt.pobj = cx / tau;
    mt.dobj = by / tau;
    const double comp = detail::inner(x, s) / (tau * tau);
    mt.relgap = std::max(comp, std::abs(mt.pobj - mt.dobj)) / (1.0 + std::abs(mt.pobj));
    // Farkas-type residuals, normalized by the certificate's objective.
    BlockVector ys = a.adjoint(y);
    detail::axpy(1.0, s, ys);
    mt.pinf = by > 0.0 ? detail::norm(ys) / by / cnorm : std::numeric_limits<double>::infinity();
    mt.dinf = cx < 0.0 ? a.apply(x).norm() / (-cx) / bnorm : std::numeric_limits<double>::infinity();
    return mt;
  };

  auto finish_optimal = [&](const Metrics& mt, int iter) {
    Solution sol;
    sol.status = Status::Optimal;
    sol.x = detail::scaled(x, 1.0 / tau);
    sol.s = detail::scaled(s, 1.0 / tau);
    sol.y = y / tau;
    sol.primal_objective = mt.pobj;
    sol.dual_objective = mt.dobj;
    sol.gap = mt.relgap;
    sol.primal_residual = mt.pres;
    sol.dual_residual = mt.dres;
    sol.iterations = iter;
    return sol;
  };

  auto finish_infeasible = [&](Status st, const Metrics& mt, int iter) {
    Solution sol;
    sol.status = st;
    if (st == Status::PrimalInfeasible) {
      const double by = p.b.dot(y);
      sol.y = y / by;
      sol.s = detail::scaled(s, 1.0 / by);
      sol.x = detail::scaled(x, 0.0);
    } else {
      const double cx = -detail::inner(p.c, x);
      sol.x = detail::scaled(x, 1.0 / cx);
      sol.y = VectorXd::Zero(m);
      sol.s = detail::scaled(s, 0.0);
    }
    sol.primal_residual = mt.pres;
    sol.dual_residual = mt.dres;
    sol.gap = mt.relgap;
    sol.iterations = iter;
    return sol;
  };

  Metrics mt = metrics();

  // Late iterations can lose accuracy to rounding; the best iterate is kept.
  struct Saved {
    BlockVector x, s;
    VectorXd y;
    double tau = 1.0, kappa = 1.0;
    Metrics mt{};
    double score = std::numeric_limits<double>::infinity();
  } best;
  int since_best = 0;
  auto restore_best = [&]() {
    x = best.x;
    s = best.s;
    y = best.y;
    tau = best.tau;
    kappa = best.kappa;
    mt = best.mt;
  };

  for (int iter = 0;; ++iter) {
    if (opt.trace) {
      *opt.trace << iter << ", " << mt.relgap << ", " << mt.pres << ", " << mt.dres << "\n";
    }
    if (mt.pres <= opt.feasibility_tol && mt.dres <= opt.feasibility_tol && mt.relgap <= opt.gap_tol) {
      return finish_optimal(mt, iter);
    }
    if (mt.pinf <= opt.infeasibility_tol) return finish_infeasible(Status::PrimalInfeasible, mt, iter);
    if (mt.dinf <= opt.infeasibility_tol) return finish_infeasible(Status::DualInfeasible, mt, iter);

    const double score = std::max({mt.pres, mt.dres, mt.relgap});
    if (score < best.score) {
      best = Saved{x, s, y, tau, kappa, mt, score};
      since_best = 0;
    } else {
      ++since_best;
    }
    const bool best_acceptable = best.mt.relgap <= opt.fallback_tol &&
                                 std::max(best.mt.pres, best.mt.dres) <= opt.fallback_residual_tol;
    if (best_acceptable && since_best >= opt.stall_iterations) {
      restore_best();
      return finish_optimal(mt, iter);
    }

    auto stalled = [&](const char* why) -> Solution {
      if (best_acceptable) {
        restore_best();
        return finish_optimal(mt, iter);
      }
      if (mt.pinf <= 1e3 * opt.infeasibility_tol) return finish_infeasible(Status::PrimalInfeasible, mt, iter);
      if (mt.dinf <= 1e3 * opt.infeasibility_tol) return finish_infeasible(Status::DualInfeasible, mt, iter);
      std::ostringstream os;
      os << why << " (primal residual " << mt.pres << ", dual residual " << mt.dres << ", gap " << mt.relgap
         << ")";
      throw SolverError(ErrorCode::SolverNumericalFailure, os.str(), mt.pres, mt.dres, mt.relgap, iter);
    };

    if (iter >= opt.max_iterations) {
      if (best_acceptable) {
        restore_best();
        return finish_optimal(mt, iter);
      }
      std::ostringstream os;
      os << "iteration limit " << opt.max_iterations << " reached";
      throw SolverError(ErrorCode::IterationLimit, os.str(), mt.pres, mt.dres, mt.relgap, iter);
    }

    // Residuals of the embedding.
    const VectorXd r_p = a.apply(x) - p.b * tau;
    BlockVector r_d = a.adjoint(y);
    detail::axpy(1.0, s, r_d);
    detail::axpy(-tau, p.c, r_d);
    const double r_g = detail::inner(p.c, x) - p.b.dot(y) + kappa;
    const double mu = (detail::inner(x, s) + tau * kappa) / static_cast<double>(cone_order + 1);

    // Scaling data: S^{-1} per block, x/s on the orthant, and Cholesky
    // factors X = Lx Lx', S = Ls Ls'.
    std::vector<MatrixXd> s_inv(nblocks), lx(nblocks), ls(nblocks);
    bool broken = false;
    for (std::size_t k = 0; k < nblocks; ++k) {
      Eigen::LLT<MatrixXd> llt(s.psd[k]);
      Eigen::LLT<MatrixXd> xllt(x.psd[k]);
      if (llt.info() != Eigen::Success || xllt.info() != Eigen::Success) {
        broken = true;
        break;
      }
      ls[k] = llt.matrixL();
      lx[k] = xllt.matrixL();
      s_inv[k] = llt.solve(MatrixXd::Identity(p.psd_sizes[k], p.psd_sizes[k]));
      s_inv[k] = 0.5 * (s_inv[k] + s_inv[k].transpose()).eval();
    }
    if (broken) return stalled("iterate lost definiteness");
    const VectorXd lp_ratio = x.lp.cwiseQuotient(s.lp);

    // L(D) = sym(X D S^{-1}) on blocks, (x/s) .* d on the orthant.
    auto apply_l = [&](const BlockVector& d) {
      BlockVector out;
      out.lp = lp_ratio.cwiseProduct(d.lp);
      out.psd.resize(nblocks);
      for (std::size_t k = 0; k < nblocks; ++k) {
        const MatrixXd t = x.psd[k] * d.psd[k] * s_inv[k];
        out.psd[k] = 0.5 * (t + t.transpose());
      }
      return out;
    };

    // The Schur complement M_ij = <A_i, L(A_j)> = <B_i, B_j> with
    // B_i = Lx' A_i Ls^{-T} (and sqrt(x/s) on the orthant). M is never
    // formed: a pivoted QR of B' keeps the small eigenvalues that nearly
    // dependent constraints produce, which the explicit product loses.
    Index rows = p.lp_size;
    for (Index sz : p.psd_sizes) rows += sz * sz;
    MatrixXd bt = MatrixXd::Zero(rows, m);
    const VectorXd lp_sqrt = lp_ratio.cwiseSqrt();
    for (Index i = 0; i < m; ++i) {
      Index off = 0;
      for (std::size_t k = 0; k < nblocks; ++k) {
        const Index sz = p.psd_sizes[k];
        const auto& ai = p.a_psd[static_cast<std::size_t>(i)][k];
        if (ai.size() != 0) {
          const MatrixXd t = lx[k].transpose() * ai;
          const MatrixXd bi = ls[k].triangularView<Eigen::Lower>().solve(t.transpose()).transpose();
          bt.col(i).segment(off, sz * sz) = Eigen::Map<const VectorXd>(bi.data(), sz * sz);
        }
        off += sz * sz;
      }
      if (p.lp_size > 0) bt.col(i).tail(p.lp_size) = p.a_lp.row(i).transpose().cwiseProduct(lp_sqrt);
    }
    const Eigen::ColPivHouseholderQR<MatrixXd> qr(bt);
    const Index rk = std::min(rows, m);
    if (rows < m || !qr.matrixR().topLeftCorner(rk, rk).diagonal().allFinite() ||
        qr.matrixR()(rk - 1, rk - 1) == 0.0) {
      return stalled("Schur complement is singular");
    }
    const MatrixXd r_fac = qr.matrixR().topLeftCorner(m, m).triangularView<Eigen::Upper>();
    auto msolve = [&](const VectorXd& rhs) -> VectorXd {
      VectorXd z = qr.colsPermutation().transpose() * rhs;
      z = r_fac.transpose().triangularView<Eigen::Lower>().solve(z);
      z = r_fac.triangularView<Eigen::Upper>().solve(z);
      return qr.colsPermutation() * z;
    };

    const BlockVector l_c = apply_l(p.c);
    const VectorXd g = a.apply(l_c);
    const BlockVector l_rd = apply_l(r_d);
    const VectorXd a_lrd = a.apply(l_rd);
    const double c_lrd = detail::inner(p.c, l_rd);

    // The bordered system [M, -(g+b); (g-b)', -(<C,L(C)> + kappa/tau)] is
    // eliminated through M. Its pivot is a sum of nonnegative terms; the
    // first, <C,L(C)> - g'M^{-1}g, is formed as <C~,L(C~)> with
    // C~ = C - A*(M^{-1}g) because the difference cancels catastrophically
    // near optimality.
    const VectorXd w_g = msolve(g);
    const VectorXd w_b = msolve(p.b);
    BlockVector c_tilde = a.adjoint(w_g);
    c_tilde = detail::scaled(c_tilde, -1.0);
    detail::axpy(1.0, p.c, c_tilde);
    const double pivot =
        -(std::max(0.0, detail::inner(c_tilde, apply_l(c_tilde))) + std::max(0.0, p.b.dot(w_b)) + kappa / tau);
    const VectorXd w_gb = w_g + w_b;

    struct Direction {
      BlockVector dx, ds;
      VectorXd dy;
      double dtau = 0.0, dkappa = 0.0;
    };

    // Direction for centering sigma and the second-order terms of `corr`.
    auto direction = [&](double sigma, const Direction* corr) {
      const double eta = 1.0 - sigma;
      BlockVector h;
      h.lp = sigma * mu * s.lp.cwiseInverse() - x.lp;
      if (corr) h.lp -= corr->dx.lp.cwiseProduct(corr->ds.lp).cwiseQuotient(s.lp);
      h.psd.resize(nblocks);
      for (std::size_t k = 0; k < nblocks; ++k) {
        MatrixXd t = sigma * mu * s_inv[k] - x.psd[k];
        if (corr) {
          const MatrixXd q = corr->dx.psd[k] * corr->ds.psd[k] * s_inv[k];
          t -= 0.5 * (q + q.transpose());
        }
        h.psd[k] = t;
      }
      double comp_tk = sigma * mu - tau * kappa;
      if (corr) comp_tk -= corr->dtau * corr->dkappa;

      const VectorXd r1 = -eta * r_p - a.apply(h) - eta * a_lrd;
      const double r2 = -eta * r_g - detail::inner(p.c, h) - eta * c_lrd - comp_tk / tau;
      const VectorXd v = msolve(r1);

      Direction d;
      d.dtau = (r2 - (g - p.b).dot(v)) / pivot;
      d.dy = v + w_gb * d.dtau;
      d.ds = detail::scaled(r_d, -eta);
      detail::axpy(-1.0, a.adjoint(d.dy), d.ds);
      detail::axpy(d.dtau, p.c, d.ds);
      d.dx = h;
      detail::axpy(-1.0, apply_l(d.ds), d.dx);
      d.dkappa = (comp_tk - kappa * d.dtau) / tau;

      // The other three equations hold by construction; the two solved
      // through M are refined against their true residuals.
      auto residual = [&](const Direction& dd, VectorXd& ep) {
        ep = -eta * r_p - (a.apply(dd.dx) - p.b * dd.dtau);
        return -eta * r_g - (detail::inner(p.c, dd.dx) - p.b.dot(dd.dy) + dd.dkappa);
      };
      VectorXd ep;
      double eg = residual(d, ep);
      for (int round = 0; round < 2; ++round) {
        const double before = ep.norm() + std::abs(eg);
        if (!(before > 0.0)) break;
        const VectorXd v2 = msolve(ep);
        Direction c = d;
        const double t2 = (eg - (g - p.b).dot(v2)) / pivot;
        const VectorXd y2 = v2 + w_gb * t2;
        BlockVector s2 = a.adjoint(y2);
        s2 = detail::scaled(s2, -1.0);
        detail::axpy(t2, p.c, s2);
        c.dtau += t2;
        c.dy += y2;
        detail::axpy(1.0, s2, c.ds);
        detail::axpy(-1.0, apply_l(s2), c.dx);
        c.dkappa -= kappa * t2 / tau;
        VectorXd ep2;
        const double eg2 = residual(c, ep2);
        if (!(ep2.norm() + std::abs(eg2) < before)) break;
        d = std::move(c);
        ep = std::move(ep2);
        eg = eg2;
      }
      return d;
    };

    auto step_length = [&](const Direction& d) {
      double alpha = std::min(detail::max_step(x, d.dx, 1e30), detail::max_step(s, d.ds, 1e30));
      if (d.dtau < 0.0) alpha = std::min(alpha, -tau / d.dtau);
      if (d.dkappa < 0.0) alpha = std::min(alpha, -kappa / d.dkappa);
      return alpha;
    };

    const Direction aff = direction(0.0, nullptr);
    if (!detail::finite(aff.dx) || !detail::finite(aff.ds) || !std::isfinite(aff.dtau)) {
      return stalled("non-finite predictor direction");
    }
    const double alpha_aff = std::min(1.0, step_length(aff));
    const double sigma = std::clamp(std::pow(1.0 - alpha_aff, 3.0), 0.0, 1.0);
    const Direction d = direction(sigma, &aff);

    if (!detail::finite(d.dx) || !detail::finite(d.ds) || !d.dy.allFinite() || !std::isfinite(d.dtau) ||
        !std::isfinite(d.dkappa)) {
      return stalled("non-finite search direction");
    }
    const double alpha = std::min(1.0, opt.step_fraction * step_length(d));
    if (!(alpha > 1e-12)) return stalled("step length collapsed");

    detail::axpy(alpha, d.dx, x);
    detail::axpy(alpha, d.ds, s);
    y += alpha * d.dy;
    tau += alpha * d.dtau;
    kappa += alpha * d.dkappa;
    for (auto& blk : x.psd) blk = 0.5 * (blk + blk.transpose()).eval();
    for (auto& blk : s.psd) blk = 0.5 * (blk + blk.transpose()).eval();

    const Metrics next = metrics();
    if (!std::isfinite(next.pres) || !std::isfinite(next.dres)) return stalled("iterate became non-finite");
    mt = next;
  }
}

}  // namespace qdt::sdp
