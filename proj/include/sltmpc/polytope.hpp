#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "nlohmann/json.hpp"
#include "sltmpc/common.hpp"
#include "sltmpc/program.hpp"
#include "sltmpc/qp.hpp"

namespace sltmpc {

/// Compact convex polytope in halfspace representation {x | Hx <= h}.
/// Facet rows are scaled to unit Euclidean norm on construction. Immutable
/// after construction; safe to share between workers.
class Polytope {
 public:
  Mat H;
  Vec h;
  /// Vertex description when supplied by the constructor (e.g. degenerate
  /// disturbance segments whose vertices are known exactly).
  std::vector<Vec> known_vertices;

  Polytope() = default;

  Polytope(Mat H_in, Vec h_in) : H(std::move(H_in)), h(std::move(h_in)) {
    if (H.rows() != h.size()) throw ShapeMismatch("Polytope H rows vs h size");
    for (int r = 0; r < H.rows(); ++r) {
      double nrm = H.row(r).norm();
      if (nrm < 1e-14) throw Error("Polytope: zero facet normal in row " + std::to_string(r));
      H.row(r) /= nrm;
      h[r] /= nrm;
    }
  }

  int dim() const { return static_cast<int>(H.cols()); }
  int facets() const { return static_cast<int>(H.rows()); }

  bool origin_interior(double tol = 1e-12) const { return h.minCoeff() > tol; }

  /// Axis-aligned box [lo, hi].
  static Polytope box(const Vec& lo, const Vec& hi) {
    const int n = static_cast<int>(lo.size());
    Mat H(2 * n, n);
    Vec h(2 * n);
    H.setZero();
    for (int i = 0; i < n; ++i) {
      H(2 * i, i) = 1.0;
      h[2 * i] = hi[i];
      H(2 * i + 1, i) = -1.0;
      h[2 * i + 1] = -lo[i];
    }
    return Polytope(std::move(H), std::move(h));
  }

  /// Infinity-norm ball of radius r ({0} when r == 0).
  static Polytope inf_ball(int n, double r) {
    return box(Vec::Constant(n, -r), Vec::Constant(n, r));
  }

  static Polytope from_vertices_segment(const Vec& a, const Vec& b);

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["h"] = std::vector<double>(h.data(), h.data() + h.size());
    auto& rows = j["H"] = nlohmann::json::array();
    for (int r = 0; r < H.rows(); ++r)
      rows.push_back(std::vector<double>(H.row(r).begin(), H.row(r).end()));
    return j;
  }

  static Polytope from_json(const nlohmann::json& j) {
    const auto& rows = j.at("H");
    const auto& hv = j.at("h");
    Mat H(rows.size(), rows.empty() ? 0 : rows[0].size());
    for (std::size_t r = 0; r < rows.size(); ++r)
      for (std::size_t c = 0; c < rows[r].size(); ++c) H(r, c) = rows[r][c];
    Vec h(hv.size());
    for (std::size_t i = 0; i < hv.size(); ++i) h[i] = hv[i];
    return Polytope(std::move(H), std::move(h));
  }
};

struct VertexSet {
  std::vector<Vec> vertices;
};

/// Two-sided bounds of an axis-aligned box description.
struct BoxBounds {
  Vec lo, hi;
};

/// Detects whether P is an axis-aligned box (every facet normal is +-e_k and
/// both signs are present for each coordinate).
inline std::optional<BoxBounds> as_box(const Polytope& P) {
  const int n = P.dim();
  Vec lo = Vec::Constant(n, std::numeric_limits<double>::infinity());
  Vec hi = Vec::Constant(n, std::numeric_limits<double>::infinity());
  for (int r = 0; r < P.facets(); ++r) {
    int nz = -1;
    for (int c = 0; c < n; ++c) {
      if (std::abs(P.H(r, c)) > 1e-12) {
        if (nz >= 0) return std::nullopt;
        nz = c;
      }
    }
    if (nz < 0 || std::abs(std::abs(P.H(r, nz)) - 1.0) > 1e-12) return std::nullopt;
    if (P.H(r, nz) > 0)
      hi[nz] = std::min(hi[nz], P.h[r]);
    else
      lo[nz] = std::min(lo[nz], P.h[r]);
  }
  for (int c = 0; c < n; ++c)
    if (!std::isfinite(lo[c]) || !std::isfinite(hi[c])) return std::nullopt;
  lo = -lo;
  for (int c = 0; c < n; ++c)
    if (lo[c] > hi[c]) return std::nullopt;
  return BoxBounds{lo, hi};
}

/// Support function h_P(xi) = sup {xi'a | a in P} (Definition of support
/// function; computed by a linear program, with closed forms for boxes and
/// vertex-described sets).
inline double support(const Polytope& P, const Vec& xi) {
  if (xi.size() != P.dim()) throw ShapeMismatch("support direction dimension");
  if (!P.known_vertices.empty()) {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& v : P.known_vertices) best = std::max(best, xi.dot(v));
    return best;
  }
  if (auto bb = as_box(P)) {
    double s = 0.0;
    for (int k = 0; k < P.dim(); ++k) s += std::max(bb->hi[k] * xi[k], bb->lo[k] * xi[k]);
    return s;
  }
  QPData lp;
  lp.n = P.dim();
  lp.q = -xi;
  lp.hin = P.h;
  for (int r = 0; r < P.facets(); ++r)
    for (int c = 0; c < P.dim(); ++c)
      if (P.H(r, c) != 0.0) lp.Ain.emplace_back(r, c, P.H(r, c));
  IpmSolver solver;
  QPResult res = solver.solve(lp);
  if (res.status != SolveStatus::Optimal || std::abs(res.objective) > 1e12) {
    FeasibilityReport rep = check_feasibility(lp, 1e-9);
    if (rep.status == SolveStatus::Optimal && !rep.feasible)
      throw EmptySetError("support of empty polytope");
    throw UnboundedError("support LP in given direction");
  }
  return -res.objective;
}

/// Stacked support values of P evaluated at the rows of D.
inline Vec support_rows(const Polytope& P, const Mat& D) {
  Vec out(D.rows());
  for (int r = 0; r < D.rows(); ++r) out[r] = support(P, D.row(r).transpose());
  return out;
}

/// Support of the linear image M*P: h_{MP}(xi) = h_P(M' xi).
inline double affine_image_support(const Mat& M, const Polytope& P, const Vec& xi) {
  return support(P, M.transpose() * xi);
}

inline bool contains_point(const Polytope& P, const Vec& x, double tol = 1e-9) {
  return ((P.H * x - P.h).array() <= tol).all();
}

inline Polytope scale(const Polytope& P, double s) {
  if (s < 0) throw Error("scale: negative factor");
  Polytope out = P;
  out.h = s * P.h;
  for (auto& v : out.known_vertices) v = s * v;
  return out;
}

inline bool is_empty(const Polytope& P, double tol = 1e-9) {
  QPData lp;
  lp.n = P.dim();
  lp.q = Vec::Zero(lp.n);
  lp.hin = P.h;
  for (int r = 0; r < P.facets(); ++r)
    for (int c = 0; c < P.dim(); ++c)
      if (P.H(r, c) != 0.0) lp.Ain.emplace_back(r, c, P.H(r, c));
  FeasibilityReport rep = check_feasibility(lp, tol);
  if (rep.status != SolveStatus::Optimal)
    throw Error("emptiness check failed to converge");
  return !rep.feasible;
}

inline bool is_bounded(const Polytope& P) {
  for (int k = 0; k < P.dim(); ++k) {
    Vec e = Vec::Zero(P.dim());
    for (double s : {1.0, -1.0}) {
      e[k] = s;
      try {
        support(P, e);
      } catch (const UnboundedError&) {
        return false;
      }
    }
  }
  return true;
}

/// Pontryagin difference against a Minkowski sum of linear images:
/// P (-) (Gamma_1 S_1 (+) ... (+) Gamma_J S_J), computed on P's facets as
/// h_r - sum_j h_{S_j}(Gamma_j' H_r'). Throws EmptyResult if the output is empty.
inline Polytope pontryagin_tighten(const Polytope& P,
                                   const std::vector<std::pair<Mat, Polytope>>& shapes) {
  Vec hh = P.h;
  for (const auto& [G, S] : shapes) {
    if (G.rows() != P.dim() || G.cols() != S.dim())
      throw ShapeMismatch("pontryagin_tighten shape term");
    for (int r = 0; r < P.facets(); ++r)
      hh[r] -= support(S, G.transpose() * P.H.row(r).transpose());
  }
  Polytope out = P;
  out.h = hh;
  out.known_vertices.clear();
  if (is_empty(out)) throw EmptyResult("pontryagin_tighten produced an empty set");
  return out;
}

/// All extreme points of P for dim <= 3 via facet-intersection enumeration,
/// deduplicated at 1e-9.
inline VertexSet enumerate_vertices(const Polytope& P) {
  const int n = P.dim();
  if (n > 3) throw DimensionTooHigh("enumerate_vertices limited to dim <= 3");
  const int m = P.facets();
  VertexSet vs;
  std::vector<int> idx(n);
  auto try_combo = [&](const std::vector<int>& rows) {
    Mat A(n, n);
    Vec b(n);
    for (int i = 0; i < n; ++i) {
      A.row(i) = P.H.row(rows[i]);
      b[i] = P.h[rows[i]];
    }
    Eigen::FullPivLU<Mat> lu(A);
    if (!lu.isInvertible()) return;
    Vec x = lu.solve(b);
    if (!contains_point(P, x, 1e-7)) return;
    for (const auto& v : vs.vertices)
      if ((v - x).norm() < 1e-9) return;
    vs.vertices.push_back(x);
  };
  // iterate over all n-subsets of facets
  std::vector<int> c(n);
  for (int i = 0; i < n; ++i) c[i] = i;
  if (m < n) {
    if (is_empty(P)) throw EmptySetError("enumerate_vertices of empty polytope");
    throw Error("enumerate_vertices: fewer facets than dimensions (unbounded)");
  }
  while (true) {
    try_combo(c);
    int i = n - 1;
    while (i >= 0 && c[i] == m - n + i) --i;
    if (i < 0) break;
    ++c[i];
    for (int j = i + 1; j < n; ++j) c[j] = c[j - 1] + 1;
  }
  if (vs.vertices.empty()) throw EmptySetError("enumerate_vertices found no vertices");
  return vs;
}

inline Polytope Polytope::from_vertices_segment(const Vec& a, const Vec& b) {
  // H-representation of the segment co{a, b}: equality rows for the orthogonal
  // complement plus two rows along the segment direction.
  const int n = static_cast<int>(a.size());
  Vec d = b - a;
  double len = d.norm();
  if (len < 1e-14) throw Error("degenerate segment");
  Vec u = d / len;
  std::vector<Vec> basis;
  for (int i = 0; i < n; ++i) {
    Vec e = Vec::Unit(n, i);
    Vec r = e - u * u.dot(e);
    for (const auto& bvec : basis) r -= bvec * bvec.dot(r);
    if (r.norm() > 1e-10) basis.push_back(r.normalized());
  }
  Mat H(2 * static_cast<int>(basis.size()) + 2, n);
  Vec h(H.rows());
  int row = 0;
  for (const auto& bvec : basis) {
    H.row(row) = bvec.transpose();
    h[row++] = bvec.dot(a);
    H.row(row) = -bvec.transpose();
    h[row++] = -bvec.dot(a);
  }
  H.row(row) = u.transpose();
  h[row++] = u.dot(b);
  H.row(row) = -u.transpose();
  h[row++] = -u.dot(a);
  Polytope P(std::move(H), std::move(h));
  P.known_vertices = {a, b};
  return P;
}

/// Removes facets whose removal does not change the set (per-facet support LP).
inline Polytope prune_redundant(const Polytope& P, double tol = 1e-9) {
  const int m = P.facets();
  std::vector<bool> keep(m, true);
  // exact duplicates first
  for (int r = 0; r < m; ++r) {
    if (!keep[r]) continue;
    for (int s = r + 1; s < m; ++s) {
      if (!keep[s]) continue;
      if ((P.H.row(r) - P.H.row(s)).norm() < 1e-12 && P.h[s] >= P.h[r] - 1e-12) keep[s] = false;
    }
  }
  for (int r = 0; r < m; ++r) {
    if (!keep[r]) continue;
    int rows = 0;
    for (int s = 0; s < m; ++s) rows += (keep[s] && s != r) ? 1 : 0;
    if (rows < P.dim()) continue;  // would become unbounded; keep facet
    Mat Ho(rows, P.dim());
    Vec ho(rows);
    int k = 0;
    for (int s = 0; s < m; ++s) {
      if (!keep[s] || s == r) continue;
      Ho.row(k) = P.H.row(s);
      ho[k++] = P.h[s];
    }
    Polytope other(std::move(Ho), std::move(ho));
    try {
      double sup = support(other, P.H.row(r).transpose());
      if (sup <= P.h[r] + tol) keep[r] = false;
    } catch (const UnboundedError&) {
      // facet is needed for boundedness
    }
  }
  int rows = 0;
  for (bool b : keep) rows += b ? 1 : 0;
  Mat Ho(rows, P.dim());
  Vec ho(rows);
  int k = 0;
  for (int r = 0; r < m; ++r) {
    if (!keep[r]) continue;
    Ho.row(k) = P.H.row(r);
    ho[k++] = P.h[r];
  }
  return Polytope(std::move(Ho), std::move(ho));
}

inline BoxBounds bounding_box(const Polytope& P) {
  const int n = P.dim();
  BoxBounds bb{Vec(n), Vec(n)};
  for (int k = 0; k < n; ++k) {
    Vec e = Vec::Unit(n, k);
    bb.hi[k] = support(P, e);
    bb.lo[k] = -support(P, -e);
  }
  return bb;
}

/// Affine combination of shared-shape facet offsets: the offsets of
/// (+)_m a_m X_m when all X_m share the facet matrix. Numeric overload.
inline Vec fused_offsets(const Vec& coeffs, const std::vector<Vec>& offsets) {
  if (coeffs.size() != static_cast<Eigen::Index>(offsets.size()))
    throw LengthMismatch("fused_offsets coeffs vs offsets");
  if (offsets.empty()) throw LengthMismatch("fused_offsets: no member sets");
  Vec out = Vec::Zero(offsets[0].size());
  for (std::size_t m = 0; m < offsets.size(); ++m) {
    if (offsets[m].size() != out.size()) throw SharedShapeViolation("fused_offsets row count");
    out += coeffs[m] * offsets[m];
  }
  return out;
}

/// Symbolic overload: coefficients are affine expressions (e.g. the memory
/// fusion weights); returns one affine expression per facet row.
inline std::vector<Lin> fused_offsets(const std::vector<Lin>& coeffs,
                                      const std::vector<Vec>& offsets) {
  if (coeffs.size() != offsets.size()) throw LengthMismatch("fused_offsets coeffs vs offsets");
  if (offsets.empty()) throw LengthMismatch("fused_offsets: no member sets");
  const auto rows = offsets[0].size();
  std::vector<Lin> out(rows);
  for (std::size_t m = 0; m < offsets.size(); ++m) {
    if (offsets[m].size() != rows) throw SharedShapeViolation("fused_offsets row count");
    for (Eigen::Index r = 0; r < rows; ++r) out[r] += coeffs[m] * offsets[m][r];
  }
  return out;
}

/// Handles of one emitted containment encoding.
struct ContainmentBlocks {
  struct LambdaBlock {
    int offset = 0;
    int rows = 0, cols = 0;
  };
  std::vector<LambdaBlock> lambda_vars;
  std::vector<int> eq_rows;
  std::vector<int> ineq_rows;
};

/// Support-term expressions h_Z(Gamma' H_y') for each row of H_y.
/// Constant Gamma evaluates the support directly; decision-variable Gamma uses
/// the vertex form H_y Gamma v <= t per vertex of Z (with the hyperrectangle
/// absolute-value specialization when Z is a box, which encodes the identical
/// support function with 2 rows per entry instead of 2^n vertex rows).
inline std::vector<Lin> support_term_rows(ProgramBuilder& pb, const Mat& Hy,
                                          const LinMat& Gamma, const Polytope& Z,
                                          ContainmentBlocks* blocks = nullptr) {
  const int ny = static_cast<int>(Hy.rows());
  std::vector<Lin> out(ny);
  if (Gamma.rows == 0) return out;  // Gamma absent: zero term
  if (Gamma.is_constant()) {
    Mat G = Gamma.constant_value();
    for (int r = 0; r < ny; ++r)
      out[r] = Lin(support(Z, G.transpose() * Hy.row(r).transpose()));
    return out;
  }
  LinMat HG = Hy * Gamma;  // ny x nz entries, affine in decision vars
  if (auto bb = as_box(Z)) {
    for (int r = 0; r < ny; ++r) {
      Lin sum;
      for (int k = 0; k < Z.dim(); ++k) {
        const Lin& entry = HG(r, k);
        int s = pb.add_vars("supp_abs", 1);
        int r1 = pb.add_ineq(bb->hi[k] * entry - Lin::var(s));
        int r2 = pb.add_ineq(bb->lo[k] * entry - Lin::var(s));
        if (blocks) {
          blocks->ineq_rows.push_back(r1);
          blocks->ineq_rows.push_back(r2);
        }
        sum += Lin::var(s);
      }
      out[r] = sum;
    }
    return out;
  }
  std::vector<Vec> verts = Z.known_vertices;
  if (verts.empty()) verts = enumerate_vertices(Z).vertices;
  for (int r = 0; r < ny; ++r) {
    int t = pb.add_vars("supp_epi", 1);
    for (const auto& v : verts) {
      Lin row;
      for (int k = 0; k < Z.dim(); ++k) row += v[k] * HG(r, k);
      int ri = pb.add_ineq(row - Lin::var(t));
      if (blocks) blocks->ineq_rows.push_back(ri);
    }
    out[r] = Lin::var(t);
  }
  return out;
}

/// Containment encoding (necessary and sufficient):
///   alpha A X <= beta Y (-) Gamma Z
/// as the linear blocks  Lambda >= 0,  Lambda H_x = alpha H_y A,
///   Lambda h_x <= beta h_y - h_Z(Gamma' H_y').
/// alpha/beta may be constants or affine expressions in declared variables.
inline ContainmentBlocks encode_affine_containment(ProgramBuilder& pb, const Lin& alpha,
                                                   const Mat& A, const Lin& beta,
                                                   const Polytope& Y, const LinMat& Gamma,
                                                   const Polytope& Z, const Polytope& X) {
  if (A.rows() != Y.dim() || A.cols() != X.dim())
    throw ShapeMismatch("encode_affine_containment A");
  ContainmentBlocks out;
  const int ny = Y.facets(), nx = X.facets();
  int lam = pb.add_vars("lambda", ny * nx);
  out.lambda_vars.push_back({lam, ny, nx});
  auto L = [&](int r, int c) { return Lin::var(lam + r * nx + c); };
  for (int r = 0; r < ny; ++r)
    for (int c = 0; c < nx; ++c) out.ineq_rows.push_back(pb.add_ineq(-L(r, c)));
  // Lambda H_x = alpha H_y A
  Mat HyA = Y.H * A;
  for (int r = 0; r < ny; ++r)
    for (int c = 0; c < X.dim(); ++c) {
      Lin lhs;
      for (int k = 0; k < nx; ++k)
        if (X.H(k, c) != 0.0) lhs += X.H(k, c) * L(r, k);
      out.eq_rows.push_back(pb.add_eq(lhs - HyA(r, c) * alpha));
    }
  // Lambda h_x <= beta h_y - h_Z(Gamma' H_y')
  std::vector<Lin> supp = support_term_rows(pb, Y.H, Gamma, Z, &out);
  for (int r = 0; r < ny; ++r) {
    Lin lhs;
    for (int k = 0; k < nx; ++k)
      if (X.h[k] != 0.0) lhs += X.h[k] * L(r, k);
    out.ineq_rows.push_back(pb.add_ineq(lhs - Y.h[r] * beta + supp[r]));
  }
  return out;
}

/// One Minkowski term A_i X_i of the sum-containment encoding; the map may be
/// a fixed matrix (wrapped as a constant LinMat) or affine in decision vars.
struct MinkTerm {
  LinMat A;
  Polytope X;
};

/// Containment encoding (necessary and sufficient):
///   {a} (+) (+)_i A_i X_i <= beta Y (-) Gamma Z
/// as per-term blocks Lambda_i >= 0, Lambda_i H_{x,i} = H_y A_i and the fused
/// row bound  sum_i Lambda_i h_{x,i} <= beta h_y - h_Z(Gamma' H_y') - H_y a.
inline ContainmentBlocks encode_minkowski_containment(ProgramBuilder& pb,
                                                      const std::vector<Lin>& a,
                                                      const std::vector<MinkTerm>& terms,
                                                      const Lin& beta, const Polytope& Y,
                                                      const LinMat& Gamma, const Polytope& Z) {
  const int ny = Y.facets();
  const int n = Y.dim();
  if (static_cast<int>(a.size()) != n) throw ShapeMismatch("encode_minkowski_containment a");
  ContainmentBlocks out;
  std::vector<std::vector<Lin>> lam_h(terms.size());  // per-term Lambda_i h_{x,i} rows
  for (std::size_t t = 0; t < terms.size(); ++t) {
    const auto& term = terms[t];
    if (term.A.rows != n || term.A.cols != term.X.dim())
      throw ShapeMismatch("encode_minkowski_containment term " + std::to_string(t));
    const int nx = term.X.facets();
    int lam = pb.add_vars("lambda", ny * nx);
    out.lambda_vars.push_back({lam, ny, nx});
    auto L = [&, lam, nx](int r, int c) { return Lin::var(lam + r * nx + c); };
    for (int r = 0; r < ny; ++r)
      for (int c = 0; c < nx; ++c) out.ineq_rows.push_back(pb.add_ineq(-L(r, c)));
    LinMat HyA = Y.H * term.A;
    for (int r = 0; r < ny; ++r)
      for (int c = 0; c < term.X.dim(); ++c) {
        Lin lhs;
        for (int k = 0; k < nx; ++k)
          if (term.X.H(k, c) != 0.0) lhs += term.X.H(k, c) * L(r, k);
        out.eq_rows.push_back(pb.add_eq(lhs - HyA(r, c)));
      }
    lam_h[t].resize(ny);
    for (int r = 0; r < ny; ++r) {
      Lin lhs;
      for (int k = 0; k < nx; ++k)
        if (term.X.h[k] != 0.0) lhs += term.X.h[k] * L(r, k);
      lam_h[t][r] = lhs;
    }
  }
  std::vector<Lin> supp = support_term_rows(pb, Y.H, Gamma, Z, &out);
  for (int r = 0; r < ny; ++r) {
    Lin lhs;
    for (const auto& lh : lam_h) lhs += lh[r];
    for (int c = 0; c < n; ++c)
      if (Y.H(r, c) != 0.0) lhs += Y.H(r, c) * a[c];
    out.ineq_rows.push_back(pb.add_ineq(lhs - Y.h[r] * beta + supp[r]));
  }
  return out;
}

}  // namespace sltmpc
