#pragma once

// Shared generators and vertex-enumeration oracles for the unit and
// acceptance suites. Everything here is independent of the encodings and
// program builders under test: containment questions are answered purely by
// enumerating vertices and evaluating facet inequalities.

#include <optional>
#include <random>
#include <vector>

#include "sltmpc/polytope.hpp"

namespace sltmpc::testutil {

using Rng = std::mt19937_64;

inline double uni(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

/// Bounded random polytope: a random box intersected with `extra` random
/// halfspaces at positive offset (origin stays inside).
inline Polytope random_polytope(Rng& rng, int n, int extra) {
  Vec lo(n), hi(n);
  for (int i = 0; i < n; ++i) {
    hi[i] = uni(rng, 0.4, 2.0);
    lo[i] = -uni(rng, 0.4, 2.0);
  }
  Polytope box = Polytope::box(lo, hi);
  Mat H(box.facets() + extra, n);
  Vec h(box.facets() + extra);
  H.topRows(box.facets()) = box.H;
  h.head(box.facets()) = box.h;
  for (int r = 0; r < extra; ++r) {
    Vec dir(n);
    double nrm = 0;
    do {
      for (int c = 0; c < n; ++c) dir[c] = uni(rng, -1, 1);
      nrm = dir.norm();
    } while (nrm < 1e-3);
    H.row(box.facets() + r) = dir.transpose() / nrm;
    h[box.facets() + r] = uni(rng, 0.3, 1.8);
  }
  return Polytope(std::move(H), std::move(h));
}

inline Mat random_matrix(Rng& rng, int rows, int cols, double scale) {
  Mat M(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) M(r, c) = uni(rng, -scale, scale);
  return M;
}

/// Vertices of the Minkowski sum of linearly mapped polytopes (+ offset a):
/// all combinations of mapped member vertices. The convex hull of the result
/// equals the sum, so containment checks may evaluate these points directly.
inline std::vector<Vec> minkowski_vertex_cloud(const Vec& a,
                                               const std::vector<std::pair<Mat, Polytope>>& terms) {
  std::vector<Vec> pts = {a};
  for (const auto& [A, X] : terms) {
    std::vector<Vec> vx = X.known_vertices.empty() ? enumerate_vertices(X).vertices
                                                   : X.known_vertices;
    std::vector<Vec> next;
    next.reserve(pts.size() * vx.size());
    for (const auto& p : pts)
      for (const auto& v : vx) next.push_back(p + A * v);
    pts = std::move(next);
  }
  return pts;
}

/// Largest facet violation of the point cloud against {x | Hx <= h}.
inline double worst_violation(const std::vector<Vec>& pts, const Mat& H, const Vec& h) {
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& p : pts) worst = std::max(worst, (H * p - h).maxCoeff());
  return worst;
}

/// Oracle answer for {a} (+) (+) A_i X_i <= beta*Y (-) Gamma*Z, decided by
/// enumeration. Returns nullopt when the instance is numerically borderline
/// (violation within the margin band), so the caller can resample.
inline std::optional<bool> oracle_minkowski_containment(
    const Vec& a, const std::vector<std::pair<Mat, Polytope>>& terms, double beta,
    const Polytope& Y, const Mat& Gamma, const Polytope& Z, double clear_in = 1e-9,
    double clear_out = 1e-6) {
  Vec rhs = beta * Y.h;
  if (Gamma.size() > 0)
    for (int r = 0; r < Y.facets(); ++r)
      rhs[r] -= support(Z, Gamma.transpose() * Y.H.row(r).transpose());
  double worst = worst_violation(minkowski_vertex_cloud(a, terms), Y.H, rhs);
  if (worst <= clear_in) return true;
  if (worst >= clear_out) return false;
  return std::nullopt;
}

}  // namespace sltmpc::testutil
