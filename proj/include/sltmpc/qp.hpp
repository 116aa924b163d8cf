#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <vector>

#include "sltmpc/common.hpp"

namespace sltmpc {

/// Convex quadratic program
///   min 1/2 x'Px + q'x   s.t.  Aeq x = beq,  Ain x <= hin,
/// with P symmetric PSD given as triplets of the full matrix. P may be empty (LP).
struct QPData {
  int n = 0;
  std::vector<Triplet> P;
  Vec q;
  std::vector<Triplet> Aeq;
  Vec beq;
  std::vector<Triplet> Ain;
  Vec hin;

  int eq_rows() const { return static_cast<int>(beq.size()); }
  int ineq_rows() const { return static_cast<int>(hin.size()); }
};

enum class SolveStatus { Optimal, Infeasible, NumericalFailure, IterationLimit };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "Optimal";
    case SolveStatus::Infeasible: return "Infeasible";
    case SolveStatus::NumericalFailure: return "NumericalFailure";
    case SolveStatus::IterationLimit: return "IterationLimit";
  }
  return "?";
}

struct QPSettings {
  double tol_feas = 1e-8;
  double tol_gap = 1e-8;
  int max_iter = 120;
  double static_reg = 1e-9;
  // Phase-1 mode: objective is a single violation variable; allows early exit
  // as soon as feasibility or infeasibility of the original rows is decided.
  bool phase1 = false;
  int phase1_tvar = -1;
  double phase1_tol = 1e-7;
};

struct QPResult {
  SolveStatus status = SolveStatus::NumericalFailure;
  Vec x;
  Vec y;   // equality multipliers
  Vec z;   // inequality multipliers (>= 0)
  double objective = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  double solve_time = 0.0;
  double primal_residual = std::numeric_limits<double>::infinity();
  double dual_residual = std::numeric_limits<double>::infinity();
  double gap = std::numeric_limits<double>::infinity();
};

namespace detail {

inline double inf_norm(const Vec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

// Max step alpha in [0,1] such that v + alpha*dv >= (1-tau-ish) boundary.
inline double max_step(const Vec& v, const Vec& dv, double tau) {
  double a = 1.0;
  for (int i = 0; i < v.size(); ++i) {
    if (dv[i] < 0.0) a = std::min(a, -tau * v[i] / dv[i]);
  }
  return a;
}

}  // namespace detail

/// Sparse Mehrotra predictor-corrector interior point method for QPs and LPs.
/// The KKT system is factored with a regularized LDLT whose pattern is
/// analyzed once; only the slack/dual diagonal changes between iterations.
class IpmSolver {
 public:
  explicit IpmSolver(QPSettings settings = {}) : settings_(settings) {}

  QPResult solve(const QPData& qp) const {
    const auto t0 = std::chrono::steady_clock::now();
    QPResult res = solve_impl(qp);
    res.solve_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
  }

  const QPSettings& settings() const { return settings_; }
  QPSettings& settings() { return settings_; }

 private:
  QPSettings settings_;

  QPResult solve_impl(const QPData& qp) const {
    const int n = qp.n;
    const int me = qp.eq_rows();
    const int mi = qp.ineq_rows();
    QPResult res;
    if (n == 0) {
      res.status = SolveStatus::Optimal;
      res.objective = 0.0;
      return res;
    }

    SpMat P(n, n), A(me, n), G(mi, n);
    P.setFromTriplets(qp.P.begin(), qp.P.end());
    A.setFromTriplets(qp.Aeq.begin(), qp.Aeq.end());
    G.setFromTriplets(qp.Ain.begin(), qp.Ain.end());
    P = SpMat(0.5 * (P + SpMat(P.transpose())));
    SpMat At = A.transpose();
    SpMat Gt = G.transpose();

    const int dim = n + me + mi;
    const double delta = settings_.static_reg;

    // Lower-triangle KKT pattern with explicit diagonal everywhere.
    std::vector<Triplet> kt;
    kt.reserve(qp.P.size() + qp.Aeq.size() + qp.Ain.size() + dim);
    for (int k = 0; k < P.outerSize(); ++k)
      for (SpMat::InnerIterator it(P, k); it; ++it)
        if (it.row() > it.col()) kt.emplace_back(it.row(), it.col(), it.value());
    for (int i = 0; i < dim; ++i) kt.emplace_back(i, i, 0.0);
    for (int k = 0; k < P.outerSize(); ++k)
      for (SpMat::InnerIterator it(P, k); it; ++it)
        if (it.row() == it.col()) kt.emplace_back(it.row(), it.col(), it.value());
    for (const auto& t : qp.Aeq) kt.emplace_back(n + t.row(), t.col(), t.value());
    for (const auto& t : qp.Ain) kt.emplace_back(n + me + t.row(), t.col(), t.value());
    SpMat K(dim, dim);
    K.setFromTriplets(kt.begin(), kt.end());
    K.makeCompressed();

    // Locate diagonal slots in the compressed storage for fast updates.
    std::vector<int> diag_idx(dim, -1);
    {
      const int* outer = K.outerIndexPtr();
      const int* inner = K.innerIndexPtr();
      for (int c = 0; c < dim; ++c) {
        for (int p = outer[c]; p < outer[c + 1]; ++p) {
          if (inner[p] == c) {
            diag_idx[c] = p;
            break;
          }
        }
      }
    }
    double* kv = K.valuePtr();
    std::vector<double> diag_base(dim, 0.0);
    for (int i = 0; i < dim; ++i) diag_base[i] = kv[diag_idx[i]];

    Eigen::SimplicialLDLT<SpMat, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt;
    ldlt.analyzePattern(K);

    auto set_diag = [&](const Vec& dz, double reg) {
      for (int i = 0; i < n; ++i) kv[diag_idx[i]] = diag_base[i] + reg;
      for (int i = 0; i < me; ++i) kv[diag_idx[n + i]] = -reg;
      for (int i = 0; i < mi; ++i) kv[diag_idx[n + me + i]] = -(dz[i] + reg);
    };

    auto factorize = [&](const Vec& dz) -> bool {
      double reg = delta;
      for (int attempt = 0; attempt < 6; ++attempt) {
        set_diag(dz, reg);
        ldlt.factorize(K);
        if (ldlt.info() == Eigen::Success) return true;
        reg *= 100.0;
      }
      return false;
    };

    auto kkt_solve = [&](const Vec& rhs) -> Vec {
      Vec d = ldlt.solve(rhs);
      // one step of iterative refinement
      Vec r2 = rhs - K.selfadjointView<Eigen::Lower>() * d;
      d += ldlt.solve(r2);
      return d;
    };

    // Starting point (standard initialization: solve with unit slack scaling).
    Vec x(n), y(me), z(mi), s(mi);
    {
      Vec ones = Vec::Ones(std::max(mi, 1));
      if (!factorize(ones.head(mi))) {
        res.status = SolveStatus::NumericalFailure;
        return res;
      }
      Vec rhs(dim);
      rhs.head(n) = -qp.q;
      rhs.segment(n, me) = qp.beq;
      rhs.tail(mi) = qp.hin;
      Vec d = kkt_solve(rhs);
      x = d.head(n);
      y = d.segment(n, me);
      Vec zt = -d.tail(mi);
      if (mi > 0) {
        Vec s_raw = qp.hin - G * x;
        double smin = mi ? s_raw.minCoeff() : 1.0;
        s = (smin > 0) ? s_raw : Vec(s_raw.array() + (1.0 - smin));
        double zmin = mi ? zt.minCoeff() : 1.0;
        z = (zmin > 0) ? zt : Vec(zt.array() + (1.0 - zmin));
        // guard against tiny starting products
        for (int i = 0; i < mi; ++i) {
          s[i] = std::max(s[i], 1e-4);
          z[i] = std::max(z[i], 1e-4);
        }
      }
    }

    if (mi == 0) {
      // Equality-constrained QP: the first solve is already the optimum.
      res.x = x;
      res.y = y;
      res.z = Vec(0);
      Vec rd = P * x + qp.q + At * y;
      Vec rp = A * x - qp.beq;
      res.dual_residual = detail::inf_norm(rd);
      res.primal_residual = detail::inf_norm(rp);
      res.gap = 0.0;
      res.objective = 0.5 * x.dot(P * x) + qp.q.dot(x);
      res.status = (res.primal_residual < 1e-6 && res.dual_residual < 1e-6)
                       ? SolveStatus::Optimal
                       : SolveStatus::NumericalFailure;
      return res;
    }

    const double q_norm = 1.0 + detail::inf_norm(qp.q);
    const double b_norm = 1.0 + std::max(detail::inf_norm(qp.beq), detail::inf_norm(qp.hin));

    Vec rd(n), rp_eq(me), rp_in(mi);
    for (int iter = 0; iter < settings_.max_iter; ++iter) {
      res.iterations = iter + 1;
      rd = P * x + qp.q + At * y + Gt * z;
      rp_eq = A * x - qp.beq;
      rp_in = G * x + s - qp.hin;
      double mu = s.dot(z) / mi;
      double obj = 0.5 * x.dot(P * x) + qp.q.dot(x);

      double rel_d = detail::inf_norm(rd) / q_norm;
      double rel_p = std::max(detail::inf_norm(rp_eq), detail::inf_norm(rp_in)) / b_norm;
      double rel_g = mu * mi / std::max(1.0, std::abs(obj));

      res.primal_residual = rel_p;
      res.dual_residual = rel_d;
      res.gap = rel_g;

      if (!std::isfinite(rel_d) || !std::isfinite(rel_p) || !std::isfinite(mu)) {
        res.status = SolveStatus::NumericalFailure;
        return res;
      }

      if (rel_d <= settings_.tol_feas && rel_p <= settings_.tol_feas &&
          rel_g <= settings_.tol_gap) {
        res.status = SolveStatus::Optimal;
        break;
      }

      if (settings_.phase1 && settings_.phase1_tvar >= 0) {
        double tval = x[settings_.phase1_tvar];
        // Current iterate strictly satisfies the original rows: feasible.
        if (rel_p <= settings_.tol_feas && rel_d <= 1e-6 && tval < -10 * settings_.phase1_tol) {
          res.status = SolveStatus::Optimal;
          break;
        }
        // Certified lower bound on min t exceeds the tolerance: infeasible.
        if (rel_p <= settings_.tol_feas && rel_d <= 1e-8 && obj - mu * mi > 10 * settings_.phase1_tol) {
          res.status = SolveStatus::Optimal;
          break;
        }
      }

      // Primal infeasibility heuristic: the dual iterate blows up while acting
      // as a Farkas certificate.
      {
        double ynorm = std::max(detail::inf_norm(y), detail::inf_norm(z));
        if (ynorm > 1e8) {
          Vec cert = At * y + Gt * z;
          double c1 = detail::inf_norm(cert);
          double c2 = qp.beq.dot(y) + qp.hin.dot(z);
          if (c2 < 0 && c1 < 1e-6 * std::abs(c2)) {
            res.status = SolveStatus::Infeasible;
            return res;
          }
        }
      }

      Vec dz_diag = (s.array() / z.array()).matrix();
      if (!factorize(dz_diag)) {
        res.status = SolveStatus::NumericalFailure;
        return res;
      }

      // Affine (predictor) direction.
      Vec rhs(dim);
      rhs.head(n) = -rd;
      rhs.segment(n, me) = -rp_eq;
      rhs.tail(mi) = -rp_in + s;
      Vec d = kkt_solve(rhs);
      Vec dx_a = d.head(n), dy_a = d.segment(n, me), dz_a = d.tail(mi);
      Vec ds_a = -(s.array() + (s.array() / z.array()) * dz_a.array()).matrix();

      double ap = detail::max_step(s, ds_a, 1.0);
      double ad = detail::max_step(z, dz_a, 1.0);
      double mu_aff = (s + ap * ds_a).dot(z + ad * dz_a) / mi;
      double sigma = std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3);

      // Corrector direction (reuses the factorization).
      Vec rc = (s.array() * z.array() - sigma * mu + ds_a.array() * dz_a.array()).matrix();
      rhs.tail(mi) = -rp_in + (rc.array() / z.array()).matrix();
      d = kkt_solve(rhs);
      Vec dx = d.head(n), dy = d.segment(n, me), dz = d.tail(mi);
      Vec ds = -((rc.array() + s.array() * dz.array()) / z.array()).matrix();

      const double tau = 0.99;
      double alpha_p = detail::max_step(s, ds, tau);
      double alpha_d = detail::max_step(z, dz, tau);

      x += alpha_p * dx;
      s += alpha_p * ds;
      y += alpha_d * dy;
      z += alpha_d * dz;

      if (iter + 1 == settings_.max_iter) res.status = SolveStatus::IterationLimit;
    }

    res.x = x;
    res.y = y;
    res.z = z;
    res.objective = 0.5 * x.dot(P * x) + qp.q.dot(x);
    if (res.status != SolveStatus::Optimal && res.status != SolveStatus::Infeasible) {
      // Accept slightly looser solutions before giving up.
      if (res.primal_residual < 1e-6 && res.dual_residual < 1e-6 && res.gap < 1e-6)
        res.status = SolveStatus::Optimal;
      else if (res.status != SolveStatus::IterationLimit)
        res.status = SolveStatus::NumericalFailure;
    }
    return res;
  }
};

/// Feasibility of {Aeq x = beq, Ain x <= hin} decided through the phase-1
/// program min t s.t. Ain x <= hin + t, t >= -1. Feasible iff min t <= tol.
struct FeasibilityReport {
  bool feasible = false;
  double violation = std::numeric_limits<double>::infinity();
  SolveStatus status = SolveStatus::NumericalFailure;
  Vec x;
};

inline FeasibilityReport check_feasibility(const QPData& qp, double tol = 1e-7,
                                           const QPSettings& base = {}) {
  QPData ph;
  ph.n = qp.n + 1;
  const int tvar = qp.n;
  ph.q = Vec::Zero(ph.n);
  ph.q[tvar] = 1.0;
  ph.Aeq = qp.Aeq;
  ph.beq = qp.beq;
  ph.Ain = qp.Ain;
  for (int r = 0; r < qp.ineq_rows(); ++r) ph.Ain.emplace_back(r, tvar, -1.0);
  ph.hin = Vec(qp.ineq_rows() + 1);
  ph.hin.head(qp.ineq_rows()) = qp.hin;
  ph.Ain.emplace_back(qp.ineq_rows(), tvar, -1.0);
  ph.hin[qp.ineq_rows()] = 1.0;

  QPSettings st = base;
  st.phase1 = true;
  st.phase1_tvar = tvar;
  st.phase1_tol = tol;
  IpmSolver solver(st);
  QPResult r = solver.solve(ph);

  FeasibilityReport rep;
  rep.status = r.status;
  if (r.status == SolveStatus::Optimal) {
    rep.violation = r.x[tvar];
    rep.feasible = rep.violation <= tol;
    rep.x = r.x.head(qp.n);
  }
  return rep;
}

/// Text export of a QP in sparse triplet form (documented in the README):
/// column-major triplets for the cost matrix P and the stacked constraint
/// matrix A with lower/upper row bounds l, u.
inline void write_qp_text(const QPData& qp, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path);
  const int me = qp.eq_rows(), mi = qp.ineq_rows();
  os << "# sltmpc qp export: n m followed by P/q and A/l/u blocks\n";
  os << qp.n << " " << (me + mi) << "\n";
  auto sorted = [](std::vector<Triplet> t) {
    std::sort(t.begin(), t.end(), [](const Triplet& a, const Triplet& b) {
      return a.col() != b.col() ? a.col() < b.col() : a.row() < b.row();
    });
    return t;
  };
  auto pt = sorted(qp.P);
  os << "P " << pt.size() << "\n";
  char buf[96];
  for (const auto& t : pt) {
    std::snprintf(buf, sizeof buf, "%d %d %.17g\n", t.row(), t.col(), t.value());
    os << buf;
  }
  os << "q\n";
  for (int i = 0; i < qp.n; ++i) {
    std::snprintf(buf, sizeof buf, "%.17g\n", qp.q[i]);
    os << buf;
  }
  std::vector<Triplet> at = qp.Aeq;
  for (const auto& t : qp.Ain) at.emplace_back(me + t.row(), t.col(), t.value());
  at = sorted(at);
  os << "A " << at.size() << "\n";
  for (const auto& t : at) {
    std::snprintf(buf, sizeof buf, "%d %d %.17g\n", t.row(), t.col(), t.value());
    os << buf;
  }
  os << "l u\n";
  for (int i = 0; i < me; ++i) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g\n", qp.beq[i], qp.beq[i]);
    os << buf;
  }
  for (int i = 0; i < mi; ++i) {
    std::snprintf(buf, sizeof buf, "-inf %.17g\n", qp.hin[i]);
    os << buf;
  }
}

}  // namespace sltmpc
