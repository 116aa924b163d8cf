#pragma once

#include <filesystem>

#include "sltmpc/jsonio.hpp"
#include "sltmpc/polytope.hpp"
#include "sltmpc/riccati.hpp"
#include "sltmpc/sysmodel.hpp"

namespace sltmpc {

struct EmptyInvariantSet : Error {
  explicit EmptyInvariantSet(const std::string& msg) : Error("empty invariant set: " + msg) {}
};

struct TerminalIngredients {
  Mat K_f;
  Mat P_f;
  Polytope Z_f;
  int iterations = 0;
  bool converged = false;
};

/// LQR terminal gain and Riccati weight for (A, B, Q, R); rho(A + B K_f) < 1.
inline std::pair<Mat, Mat> lqr_gain(const Mat& A, const Mat& B, const Mat& Q, const Mat& R) {
  DareResult d = solve_dare(A, B, Q, R);
  if (spectral_radius(A + B * d.K) >= 1.0)
    throw NotStabilizable("closed loop not contractive");
  return {d.K, d.P};
}

namespace detail {

inline Polytope stack_rows(const Mat& H1, const Vec& h1, const Mat& H2, const Vec& h2) {
  Mat H(H1.rows() + H2.rows(), H1.cols());
  Vec h(H1.rows() + H2.rows());
  H << H1, H2;
  h << h1, h2;
  return Polytope(std::move(H), std::move(h));
}

/// Is Q contained in P? Checked by support LPs of Q against P's facets.
inline bool set_contains(const Polytope& P, const Polytope& Q, double tol) {
  for (int r = 0; r < P.facets(); ++r)
    if (support(Q, P.H.row(r).transpose()) > P.h[r] + tol) return false;
  return true;
}

}  // namespace detail

/// Maximal robust positively invariant subset of X_kf for x+ = A_cl x + wbar,
/// computed by the backward recursion  Omega <- Pre(Omega) /\ X_kf  with the
/// Pre-set obtained by per-facet support tightening. Terminates on set
/// equality (facet offsets stable to 1e-9) or the iteration cap.
inline Polytope max_rpi(const Mat& A_cl, const Polytope& Wbar, const Polytope& X_kf,
                        int cap = 500, int* iterations_out = nullptr) {
  if (spectral_radius(A_cl) >= 1.0) throw NotStabilizable("max_rpi: rho(A_cl) >= 1");
  Polytope omega = prune_redundant(X_kf);
  for (int it = 0; it < cap; ++it) {
    Vec tight(omega.facets());
    for (int r = 0; r < omega.facets(); ++r)
      tight[r] = support(Wbar, omega.H.row(r).transpose());
    Mat Hp = omega.H * A_cl;
    Vec hp = omega.h - tight;
    // drop rows whose normal collapses under the map
    std::vector<int> keep;
    for (int r = 0; r < Hp.rows(); ++r)
      if (Hp.row(r).norm() > 1e-12) keep.push_back(r);
    Mat Hk(keep.size(), Hp.cols());
    Vec hk(keep.size());
    for (std::size_t i = 0; i < keep.size(); ++i) {
      Hk.row(i) = Hp.row(keep[i]);
      hk[i] = hp[keep[i]];
    }
    Polytope next = detail::stack_rows(Hk, hk, X_kf.H, X_kf.h);
    if (is_empty(next)) throw EmptyInvariantSet("max_rpi: disturbance too large for X_kf");
    next = prune_redundant(next);
    if (detail::set_contains(next, omega, 1e-9) && detail::set_contains(omega, next, 1e-9)) {
      if (iterations_out) *iterations_out = it + 1;
      return next;
    }
    omega = std::move(next);
  }
  throw NotConverged("max_rpi hit the iteration cap");
}

namespace detail {

struct ProjectionResult {
  Mat H;
  Vec h;
  bool infeasible = false;
};

/// Fourier-Motzkin elimination of the last `drop` columns of {v | Hv <= h}.
/// Sets `infeasible` when a contradictory constant row 0 <= -c appears.
inline ProjectionResult fourier_motzkin(Mat H, Vec h, int drop, double prune_tol = 1e-9) {
  for (int pass = 0; pass < drop; ++pass) {
    const int col = static_cast<int>(H.cols()) - 1;
    std::vector<int> pos, neg, zer;
    for (int r = 0; r < H.rows(); ++r) {
      double c = H(r, col);
      if (c > 1e-11)
        pos.push_back(r);
      else if (c < -1e-11)
        neg.push_back(r);
      else
        zer.push_back(r);
    }
    std::vector<Vec> rows;
    std::vector<double> offs;
    for (int r : zer) {
      rows.push_back(H.row(r).head(col).transpose());
      offs.push_back(h[r]);
    }
    for (int p : pos)
      for (int n : neg) {
        double cp = H(p, col), cn = -H(n, col);
        Vec comb = (H.row(p).head(col) / cp + H.row(n).head(col) / cn).transpose();
        double off = h[p] / cp + h[n] / cn;
        double nrm = comb.norm();
        if (nrm < 1e-11) {
          if (off < -1e-9) return {Mat(0, col), Vec(0), true};
          continue;
        }
        rows.push_back(comb / nrm);
        offs.push_back(off / nrm);
      }
    // dedup near-identical rows, keep the tightest offset
    std::vector<Vec> urows;
    std::vector<double> uoffs;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      bool merged = false;
      for (std::size_t j = 0; j < urows.size(); ++j) {
        if ((rows[i] - urows[j]).norm() < 1e-9) {
          uoffs[j] = std::min(uoffs[j], offs[i]);
          merged = true;
          break;
        }
      }
      if (!merged) {
        urows.push_back(rows[i]);
        uoffs.push_back(offs[i]);
      }
    }
    if (urows.empty()) return {Mat(0, col), Vec(0), false};
    Mat Hn(urows.size(), col);
    Vec hn(urows.size());
    for (std::size_t i = 0; i < urows.size(); ++i) {
      Hn.row(i) = urows[i].transpose();
      hn[i] = uoffs[i];
    }
    Polytope pruned = prune_redundant(Polytope(Hn, hn), prune_tol);
    H = pruned.H;
    h = pruned.h;
  }
  return {H, h, false};
}

}  // namespace detail

/// Maximal robust control invariant subset of X for the true uncertain
/// dynamics, for small systems (n <= 3, m <= 2). The one-step existential
/// input is eliminated by Fourier-Motzkin projection of the (x, u) system.
inline Polytope max_rci(const UncertainLTI& sys, int cap = 200,
                        int* iterations_out = nullptr) {
  const int n = sys.n(), m = sys.m();
  if (n > 3) throw DimensionTooHigh("max_rci limited to n <= 3");
  if (m > 2) throw DimensionTooHigh("max_rci limited to m <= 2");
  Polytope omega = prune_redundant(sys.X);
  for (int it = 0; it < cap; ++it) {
    const int nf = omega.facets();
    Vec cw(nf);
    for (int r = 0; r < nf; ++r) cw[r] = support(sys.W, omega.H.row(r).transpose());
    const int rows = nf * sys.nD() + sys.U.facets();
    Mat Hxu(rows, n + m);
    Vec hxu(rows);
    int row = 0;
    for (int d = 0; d < sys.nD(); ++d) {
      const auto& [dA, dB] = sys.delta_vertices[d];
      Mat Ad = sys.A + dA, Bd = sys.B + dB;
      Hxu.block(row, 0, nf, n) = omega.H * Ad;
      Hxu.block(row, n, nf, m) = omega.H * Bd;
      hxu.segment(row, nf) = omega.h - cw;
      row += nf;
    }
    Hxu.block(row, 0, sys.U.facets(), n).setZero();
    Hxu.block(row, n, sys.U.facets(), m) = sys.U.H;
    hxu.segment(row, sys.U.facets()) = sys.U.h;

    auto proj = detail::fourier_motzkin(Hxu, hxu, m);
    if (proj.infeasible) throw EmptyInvariantSet("max_rci: no admissible input exists");
    Polytope next = detail::stack_rows(proj.H, proj.h, omega.H, omega.h);
    if (is_empty(next)) throw EmptyInvariantSet("max_rci recursion emptied");
    next = prune_redundant(next);
    if (detail::set_contains(next, omega, 1e-7) && detail::set_contains(omega, next, 1e-7)) {
      if (iterations_out) *iterations_out = it + 1;
      return next;
    }
    omega = std::move(next);
  }
  throw NotConverged("max_rci hit the iteration cap");
}

/// State set on which the terminal control law u = K_f x is admissible.
inline Polytope kf_admissible_states(const Polytope& X, const Polytope& U, const Mat& K_f) {
  return detail::stack_rows(X.H, X.h, U.H * K_f, U.h);
}

/// Terminal gain, weight, and maximal RPI set for the auxiliary dynamics.
inline TerminalIngredients make_terminal_ingredients(const UncertainLTI& sys,
                                                     const CostSpec& cost, int cap = 500) {
  TerminalIngredients t;
  std::tie(t.K_f, t.P_f) = lqr_gain(sys.A, sys.B, cost.Q, cost.R);
  Mat A_cl = sys.A + sys.B * t.K_f;
  Polytope X_kf = kf_admissible_states(sys.X, sys.U, t.K_f);
  t.Z_f = max_rpi(A_cl, sys.Wbar, X_kf, cap, &t.iterations);
  t.converged = true;
  return t;
}

// --- disk cache -------------------------------------------------------------

inline std::string system_content_hash(const UncertainLTI& sys, const CostSpec& cost,
                                       const std::string& tag) {
  nlohmann::json j;
  j["tag"] = tag;
  j["A"] = json_mat(sys.A);
  j["B"] = json_mat(sys.B);
  auto& dv = j["delta"] = nlohmann::json::array();
  for (const auto& [dA, dB] : sys.delta_vertices) dv.push_back({json_mat(dA), json_mat(dB)});
  j["W"] = sys.W.to_json();
  j["Wbar"] = sys.Wbar.to_json();
  j["X"] = sys.X.to_json();
  j["U"] = sys.U.to_json();
  j["Q"] = json_mat(cost.Q);
  j["R"] = json_mat(cost.R);
  return hex64(fnv1a(j.dump()));
}

/// Terminal ingredients cached under a content hash of (system, parameters);
/// `recompute` bypasses the cache.
inline TerminalIngredients terminal_ingredients_cached(const UncertainLTI& sys,
                                                       const CostSpec& cost,
                                                       const std::string& cache_dir,
                                                       bool recompute = false) {
  namespace fs = std::filesystem;
  const std::string key = system_content_hash(sys, cost, "terminal");
  const fs::path path = fs::path(cache_dir) / ("terminal_" + key + ".json");
  if (!recompute && fs::exists(path)) {
    nlohmann::json j = read_json_file(path.string());
    TerminalIngredients t;
    t.K_f = mat_from_json(j["K_f"]);
    t.P_f = mat_from_json(j["P_f"]);
    t.Z_f = Polytope::from_json(j["Z_f"]);
    t.iterations = j["iterations"];
    t.converged = j["converged"];
    return t;
  }
  TerminalIngredients t = make_terminal_ingredients(sys, cost);
  fs::create_directories(cache_dir);
  nlohmann::json j;
  j["K_f"] = json_mat(t.K_f);
  j["P_f"] = json_mat(t.P_f);
  j["Z_f"] = t.Z_f.to_json();
  j["iterations"] = t.iterations;
  j["converged"] = t.converged;
  write_json_file(j, path.string());
  return t;
}

inline Polytope max_rci_cached(const UncertainLTI& sys, const CostSpec& cost,
                               const std::string& cache_dir, bool recompute = false) {
  namespace fs = std::filesystem;
  const std::string key = system_content_hash(sys, cost, "rci");
  const fs::path path = fs::path(cache_dir) / ("rci_" + key + ".json");
  if (!recompute && fs::exists(path))
    return Polytope::from_json(read_json_file(path.string()));
  Polytope S = max_rci(sys);
  fs::create_directories(cache_dir);
  write_json_file(S.to_json(), path.string());
  return S;
}

}  // namespace sltmpc
