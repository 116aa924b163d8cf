#pragma once

#include <utility>
#include <vector>

#include "sltmpc/polytope.hpp"
#include "sltmpc/riccati.hpp"

namespace sltmpc {

/// Uncertain LTI system x+ = (A + dA) x + (B + dB) u + w with polytopic
/// vertex uncertainty (dA, dB) in co{delta_vertices} and w in W. Wbar is the
/// designer-chosen auxiliary disturbance set shaped online by the filter.
struct UncertainLTI {
  Mat A;
  Mat B;
  std::vector<std::pair<Mat, Mat>> delta_vertices;
  Polytope W;
  Polytope Wbar;
  Polytope X;
  Polytope U;

  int n() const { return static_cast<int>(A.rows()); }
  int m() const { return static_cast<int>(B.cols()); }
  int nD() const { return static_cast<int>(delta_vertices.size()); }

  void validate() const {
    if (A.rows() != A.cols() || B.rows() != A.rows()) throw ShapeMismatch("UncertainLTI A/B");
    if (delta_vertices.empty()) throw Error("UncertainLTI: need at least one uncertainty vertex");
    for (const auto& [dA, dB] : delta_vertices)
      if (dA.rows() != n() || dA.cols() != n() || dB.rows() != n() || dB.cols() != m())
        throw ShapeMismatch("UncertainLTI uncertainty vertex");
    if (W.dim() != n() || Wbar.dim() != n() || X.dim() != n() || U.dim() != m())
      throw ShapeMismatch("UncertainLTI set dimensions");
  }
};

/// Quadratic stage and terminal costs l(z,v) = z'Qz + v'Rv, l_f(z) = z'P_f z,
/// with P_f the Riccati solution so the terminal decrease condition holds.
/// lambda0_reg weighs the fallback-slot regularizer of the primary process.
struct CostSpec {
  Mat Q;
  Mat R;
  Mat P_f;
  double lambda0_reg = 1.0;

  double stage(const Vec& z, const Vec& v) const {
    return z.dot(Q * z) + v.dot(R * v);
  }
  double terminal(const Vec& z) const { return z.dot(P_f * z); }
};

/// Combined uncertainty eta = dA x + dB u + w for a given uncertainty
/// realization; w is checked against W.
inline Vec combined_uncertainty(const UncertainLTI& sys, const Mat& dA, const Mat& dB,
                                const Vec& x, const Vec& u, const Vec& w,
                                double tol = 1e-9) {
  if (!contains_point(sys.W, w, tol)) throw DisturbanceOutsideW("combined_uncertainty");
  return dA * x + dB * u + w;
}

inline Vec combined_uncertainty(const UncertainLTI& sys, int d_index, const Vec& x,
                                const Vec& u, const Vec& w, double tol = 1e-9) {
  const auto& [dA, dB] = sys.delta_vertices.at(d_index);
  return combined_uncertainty(sys, dA, dB, x, u, w, tol);
}

namespace detail {

inline std::vector<std::pair<Mat, Mat>> product_vertices(const std::vector<Mat>& As,
                                                         const std::vector<Mat>& Bs) {
  std::vector<std::pair<Mat, Mat>> out;
  for (const auto& a : As)
    for (const auto& b : Bs) out.emplace_back(a, b);
  return out;
}

}  // namespace detail

/// Double integrator benchmark. W is the sigma_w infinity-ball and Wbar = W.
inline std::pair<UncertainLTI, CostSpec> double_integrator(double eps_A, double eps_B,
                                                           double sigma_w) {
  if (eps_A < 0 || eps_B < 0 || sigma_w < 0) throw Error("double_integrator: negative parameter");
  UncertainLTI sys;
  sys.A = Mat(2, 2);
  sys.A << 1.0, 0.15, 0.1, 1.0;
  sys.B = Mat(2, 1);
  sys.B << 0.1, 1.1;

  std::vector<Mat> As, Bs;
  if (eps_A > 0) {
    Mat d = Mat::Zero(2, 2);
    d(0, 0) = eps_A;
    As = {d, -d};
  } else {
    As = {Mat::Zero(2, 2)};
  }
  if (eps_B > 0) {
    Mat d = Mat::Zero(2, 1);
    d(1, 0) = eps_B;
    Bs = {d, -d};
  } else {
    Bs = {Mat::Zero(2, 1)};
  }
  sys.delta_vertices = detail::product_vertices(As, Bs);

  sys.W = Polytope::inf_ball(2, sigma_w);
  sys.Wbar = sys.W;
  sys.X = Polytope::inf_ball(2, 8.0);
  sys.U = Polytope::inf_ball(1, 4.0);
  sys.validate();

  CostSpec cost;
  cost.Q = 10.0 * Mat::Identity(2, 2);
  cost.R = Mat::Identity(1, 1);
  cost.P_f = solve_dare(sys.A, sys.B, cost.Q, cost.R).P;
  return {sys, cost};
}

/// Variant of the double integrator with a skewed hexagonal disturbance set,
/// facet offsets (0.5, 1, 0.5, 0.5, 1, 0.5) * sigma_w at 60-degree normals.
/// Wbar defaults to W itself (general polytopic auxiliary set).
inline std::pair<UncertainLTI, CostSpec> double_integrator_skewed(double eps_A, double eps_B,
                                                                  double sigma_w) {
  auto [sys, cost] = double_integrator(eps_A, eps_B, sigma_w);
  Mat H(6, 2);
  Vec h(6);
  const double offs[6] = {0.5, 1.0, 0.5, 0.5, 1.0, 0.5};
  for (int r = 0; r < 6; ++r) {
    double th = M_PI * r / 3.0;
    H(r, 0) = std::cos(th);
    H(r, 1) = std::sin(th);
    h[r] = offs[r] * sigma_w;
  }
  sys.W = Polytope(H, h);
  sys.Wbar = sys.W;
  sys.validate();
  return {sys, cost};
}

/// Planar VTOL vehicle, state (px, vx, pz, vz, theta, omega), inputs (uz, utheta).
/// Nominal interaction parameters sit at the interval midpoints (4.0, 5.0);
/// the uncertainty vertices put them at the interval endpoints jointly.
inline std::pair<UncertainLTI, CostSpec> vtol() {
  const double dt = 0.075;
  const double inertia = 0.144;
  const double k1_lo = 3.33, k1_hi = 4.67, k2_lo = 4.33, k2_hi = 5.67;
  const double k1_nom = 0.5 * (k1_lo + k1_hi);
  const double k2_nom = 0.5 * (k2_lo + k2_hi);
  const double sigma_w = 0.05;

  UncertainLTI sys;
  sys.A = Mat::Zero(6, 6);
  sys.A << 1, dt, 0, 0, 0, 0,
      0, 1, 0, 0, dt * k1_nom, 0,
      0, 0, 1, dt, 0, 0,
      0, 0, 0, 1, 0, 0,
      0, 0, 0, 0, 1, dt,
      0, 0, 0, 0, dt * k2_nom, 1;
  sys.B = Mat::Zero(6, 2);
  sys.B(3, 0) = dt;
  sys.B(5, 1) = dt / inertia;

  Mat d_lo = Mat::Zero(6, 6), d_hi = Mat::Zero(6, 6);
  d_lo(1, 4) = dt * (k1_lo - k1_nom);
  d_lo(5, 4) = dt * (k2_lo - k2_nom);
  d_hi(1, 4) = dt * (k1_hi - k1_nom);
  d_hi(5, 4) = dt * (k2_hi - k2_nom);
  sys.delta_vertices = {{d_lo, Mat::Zero(6, 2)}, {d_hi, Mat::Zero(6, 2)}};

  Vec wa = Vec::Zero(6), wb = Vec::Zero(6);
  wa[1] = -sigma_w;
  wa[5] = -sigma_w;
  wb[1] = sigma_w;
  wb[5] = sigma_w;
  sys.W = Polytope::from_vertices_segment(wa, wb);
  sys.Wbar = Polytope::inf_ball(6, 0.075);

  Vec xlo(6), xhi(6);
  xlo << -15, -6, 0, -6, -20, -10;
  xhi << 15, 6, 15, 6, 20, 10;
  sys.X = Polytope::box(xlo, xhi);
  Vec ulo(2), uhi(2);
  ulo << -5, -25;
  uhi << 5, 25;
  sys.U = Polytope::box(ulo, uhi);
  sys.validate();

  CostSpec cost;
  cost.Q = Vec((Vec(6) << 10, 1, 10, 1, 1, 1).finished()).asDiagonal();
  cost.R = Mat::Identity(2, 2);
  cost.P_f = solve_dare(sys.A, sys.B, cost.Q, cost.R).P;
  return {sys, cost};
}

}  // namespace sltmpc
