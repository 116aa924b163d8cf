#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "sltmpc/invariant.hpp"
#include "test_util.hpp"

using namespace sltmpc;
using namespace sltmpc::testutil;

TEST_CASE("scalar DARE matches the closed-form root") {
  // A=0.5, B=1, Q=R=1: P^2 - 0.25 P - 1 = 0, positive root
  Mat A = Mat::Constant(1, 1, 0.5), B = Mat::Constant(1, 1, 1.0);
  Mat Q = Mat::Identity(1, 1), R = Mat::Identity(1, 1);
  auto [K, P] = lqr_gain(A, B, Q, R);
  double root = (0.25 + std::sqrt(0.0625 + 4.0)) / 2.0;
  CHECK(P(0, 0) == Catch::Approx(root).margin(1e-9));
  CHECK(K(0, 0) == Catch::Approx(-P(0, 0) * 0.5 / (1.0 + P(0, 0))).margin(1e-9));
}

TEST_CASE("zero dynamics gives K=0, P=Q") {
  Mat A = Mat::Zero(2, 2), B = Mat::Identity(2, 2);
  Mat Q = 3.0 * Mat::Identity(2, 2), R = Mat::Identity(2, 2);
  auto [K, P] = lqr_gain(A, B, Q, R);
  CHECK(K.cwiseAbs().maxCoeff() < 1e-12);
  CHECK((P - Q).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("double integrator LQR loop is contractive") {
  auto [sys, cost] = double_integrator(0.1, 0.1, 0.1);
  auto [K, P] = lqr_gain(sys.A, sys.B, cost.Q, cost.R);
  CHECK(spectral_radius(sys.A + sys.B * K) < 1.0);
}

TEST_CASE("max RPI for nilpotent dynamics and zero disturbance is X itself") {
  Polytope X = Polytope::inf_ball(2, 1.0);
  Polytope W0 = Polytope::inf_ball(2, 0.0);
  int iters = 0;
  Polytope Z = max_rpi(Mat::Zero(2, 2), W0, X, 500, &iters);
  CHECK(iters <= 2);
  for (int r = 0; r < X.facets(); ++r)
    CHECK(support(Z, X.H.row(r).transpose()) == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("max RPI hand recursion: contractive diagonal map keeps the unit box") {
  // A = 0.5 I, Wbar = 0.1 ball: 0.5*1 + 0.1 <= 1, the unit box is already invariant
  Polytope X = Polytope::inf_ball(2, 1.0);
  Polytope Wb = Polytope::inf_ball(2, 0.1);
  Polytope Z = max_rpi(0.5 * Mat::Identity(2, 2), Wb, X);
  auto verts = enumerate_vertices(Z).vertices;
  REQUIRE(verts.size() == 4);
  for (const auto& v : verts) CHECK(v.cwiseAbs().maxCoeff() == Catch::Approx(1.0).margin(1e-9));
}

namespace {

void check_rpi_vertices(const Polytope& Z, const Mat& A_cl, const Polytope& Wbar,
                        double tol = 1e-8) {
  auto zv = enumerate_vertices(Z).vertices;
  auto wv = Wbar.known_vertices.empty() ? enumerate_vertices(Wbar).vertices
                                        : Wbar.known_vertices;
  for (const auto& z : zv)
    for (const auto& w : wv) CHECK(contains_point(Z, A_cl * z + w, tol));
}

}  // namespace

TEST_CASE("max RPI of a shear map passes the vertex invariance oracle") {
  Mat A(2, 2);
  A << 0.5, 0.5, 0.0, 0.5;
  Polytope X = Polytope::inf_ball(2, 1.0);
  Polytope Wb = Polytope::inf_ball(2, 0.15);
  Polytope Z = max_rpi(A, Wb, X);
  check_rpi_vertices(Z, A, Wb);
  // maximality within the recursion family: one more Pre step changes nothing
  Polytope Z2 = max_rpi(A, Wb, Z);
  for (int r = 0; r < Z.facets(); ++r)
    CHECK(support(Z2, Z.H.row(r).transpose()) == Catch::Approx(Z.h[r]).margin(1e-7));
}

TEST_CASE("double integrator terminal ingredients are robustly invariant") {
  auto [sys, cost] = double_integrator(0.1, 0.1, 0.1);
  TerminalIngredients t = make_terminal_ingredients(sys, cost);
  REQUIRE(t.converged);
  Mat A_cl = sys.A + sys.B * t.K_f;
  check_rpi_vertices(t.Z_f, A_cl, sys.Wbar);
  // Z_f inside X, K_f Z_f inside U
  auto zv = enumerate_vertices(t.Z_f).vertices;
  for (const auto& z : zv) {
    CHECK(contains_point(sys.X, z, 1e-8));
    CHECK(contains_point(sys.U, t.K_f * z, 1e-8));
  }
  // RPI certificate through the containment encoding: A_cl Z_f <= Z_f (-) Wbar
  ProgramBuilder pb;
  encode_affine_containment(pb, Lin(1.0), A_cl, Lin(1.0), t.Z_f,
                            LinMat::constant(Mat::Identity(2, 2)), sys.Wbar, t.Z_f);
  auto rep = check_feasibility(pb.finalize());
  REQUIRE(rep.status == SolveStatus::Optimal);
  CHECK(rep.feasible);
}

TEST_CASE("max RCI without uncertainty and a stable map returns X") {
  UncertainLTI sys;
  sys.A = 0.5 * Mat::Identity(2, 2);
  sys.B = Mat::Identity(2, 2);
  sys.delta_vertices = {{Mat::Zero(2, 2), Mat::Zero(2, 2)}};
  sys.W = Polytope::inf_ball(2, 0.0);
  sys.Wbar = sys.W;
  sys.X = Polytope::inf_ball(2, 1.0);
  sys.U = Polytope::inf_ball(2, 10.0);
  Polytope S = max_rci(sys);
  for (int r = 0; r < sys.X.facets(); ++r)
    CHECK(support(S, sys.X.H.row(r).transpose()) == Catch::Approx(1.0).margin(1e-7));
}

namespace {

/// One-step robust feasibility of a state: exists u in U with all vertex
/// successors inside Omega for every W vertex (support-tightened).
bool one_step_feasible(const UncertainLTI& sys, const Polytope& omega, const Vec& x,
                       double tol = 1e-7) {
  QPData lp;
  lp.n = sys.m();
  lp.q = Vec::Zero(lp.n);
  std::vector<Triplet> rows;
  std::vector<double> rhs;
  int r = 0;
  for (int d = 0; d < sys.nD(); ++d) {
    const auto& [dA, dB] = sys.delta_vertices[d];
    Mat Ad = sys.A + dA, Bd = sys.B + dB;
    Mat HB = omega.H * Bd;
    Vec hx = omega.h - omega.H * Ad * x;
    for (int i = 0; i < omega.facets(); ++i) {
      double cw = support(sys.W, omega.H.row(i).transpose());
      for (int c = 0; c < sys.m(); ++c)
        if (HB(i, c) != 0.0) rows.emplace_back(r, c, HB(i, c));
      rhs.push_back(hx[i] - cw);
      ++r;
    }
  }
  for (int i = 0; i < sys.U.facets(); ++i) {
    for (int c = 0; c < sys.m(); ++c)
      if (sys.U.H(i, c) != 0.0) rows.emplace_back(r, c, sys.U.H(i, c));
    rhs.push_back(sys.U.h[i]);
    ++r;
  }
  lp.Ain = rows;
  lp.hin = Eigen::Map<const Vec>(rhs.data(), rhs.size());
  return check_feasibility(lp, tol).feasible;
}

}  // namespace

TEST_CASE("double integrator max RCI vertices admit robust one-step inputs") {
  auto [sys, cost] = double_integrator(0.1, 0.1, 0.1);
  Polytope S = max_rci(sys);
  auto verts = enumerate_vertices(S).vertices;
  REQUIRE(verts.size() >= 4);
  for (const auto& v : verts) CHECK(one_step_feasible(sys, S, v));
}

TEST_CASE("max RCI shrinks as the additive disturbance grows") {
  auto [sys_small, cost1] = double_integrator(0.1, 0.1, 0.1);
  auto [sys_large, cost2] = double_integrator(0.1, 0.1, 0.4);
  Polytope S_small = max_rci(sys_small);
  Polytope S_large = max_rci(sys_large);
  for (const auto& v : enumerate_vertices(S_large).vertices)
    CHECK(contains_point(S_small, v, 1e-7));
}

TEST_CASE("invariant cache round trips through disk") {
  namespace fs = std::filesystem;
  auto [sys, cost] = double_integrator(0.1, 0.1, 0.1);
  const std::string dir = "test_invariant_cache";
  fs::remove_all(dir);
  TerminalIngredients a = terminal_ingredients_cached(sys, cost, dir);
  TerminalIngredients b = terminal_ingredients_cached(sys, cost, dir);
  CHECK((a.K_f - b.K_f).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(a.Z_f.facets() == b.Z_f.facets());
  CHECK((a.Z_f.h - b.Z_f.h).cwiseAbs().maxCoeff() < 1e-12);
  // recompute bypasses but agrees
  TerminalIngredients c = terminal_ingredients_cached(sys, cost, dir, true);
  CHECK((a.Z_f.h - c.Z_f.h).cwiseAbs().maxCoeff() < 1e-9);
  fs::remove_all(dir);
}
