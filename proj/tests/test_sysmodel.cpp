#include <catch2/catch_amalgamated.hpp>

#include "sltmpc/sysmodel.hpp"
#include "test_util.hpp"

using namespace sltmpc;
using namespace sltmpc::testutil;

TEST_CASE("double integrator matches its published data") {
  auto [sys, cost] = double_integrator(0.1, 0.1, 0.1);
  CHECK(sys.A(0, 1) == Catch::Approx(0.15));
  CHECK(sys.A(1, 0) == Catch::Approx(0.1));
  CHECK(sys.B(1, 0) == Catch::Approx(1.1));
  CHECK(sys.nD() == 4);
  // W is the 0.1 infinity-ball
  CHECK(support(sys.W, Vec::Unit(2, 0)) == Catch::Approx(0.1));
  CHECK(support(sys.W, Vec::Unit(2, 1)) == Catch::Approx(0.1));
  CHECK(support(sys.X, Vec::Unit(2, 0)) == Catch::Approx(8.0));
  CHECK(support(sys.U, Vec::Unit(1, 0)) == Catch::Approx(4.0));
  CHECK(cost.Q(0, 0) == Catch::Approx(10.0));
  CHECK(cost.R(0, 0) == Catch::Approx(1.0));
  // Riccati residual of P_f
  Mat K = -(cost.R + sys.B.transpose() * cost.P_f * sys.B)
               .ldlt()
               .solve(sys.B.transpose() * cost.P_f * sys.A);
  Mat res = sys.A.transpose() * cost.P_f * (sys.A + sys.B * K) + cost.Q - cost.P_f;
  CHECK(res.cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("degenerate uncertainty collapses to a single zero vertex") {
  auto [sys, cost] = double_integrator(0.0, 0.0, 0.0);
  REQUIRE(sys.nD() == 1);
  CHECK(sys.delta_vertices[0].first.cwiseAbs().maxCoeff() == 0.0);
  CHECK(sys.delta_vertices[0].second.cwiseAbs().maxCoeff() == 0.0);
  CHECK(contains_point(sys.W, Vec::Zero(2)));
  CHECK_FALSE(contains_point(sys.W, Vec::Constant(2, 1e-3), 1e-9));
}

TEST_CASE("skewed disturbance variant carries the hexagon offsets") {
  auto [sys, cost] = double_integrator_skewed(0.1, 0.1, 0.2);
  REQUIRE(sys.W.facets() == 6);
  Vec expect(6);
  expect << 0.1, 0.2, 0.1, 0.1, 0.2, 0.1;
  CHECK((sys.W.h - expect).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(sys.W.origin_interior());
}

TEST_CASE("combined uncertainty evaluates the lumped term") {
  auto [sys, cost] = double_integrator(0.1, 0.1, 0.1);
  Vec x(2), u(1), w(2);
  x << 1, 0;
  u << 0;
  w << 0, 0;
  // vertex with +eps_A: eta = (0.1, 0)
  Vec eta = combined_uncertainty(sys, sys.delta_vertices[0].first, Mat::Zero(2, 1), x, u, w);
  CHECK(eta[0] == Catch::Approx(0.1));
  CHECK(eta[1] == Catch::Approx(0.0));

  Vec far = Vec::Constant(2, 5.0);
  CHECK_THROWS_AS(combined_uncertainty(sys, 0, x, u, far), DisturbanceOutsideW);
}

TEST_CASE("combined uncertainty is linear in the vertex weights") {
  auto [sys, cost] = double_integrator(0.2, 0.15, 0.1);
  Rng rng(77);
  for (int trial = 0; trial < 25; ++trial) {
    Vec x(2), u(1), w(2);
    x << uni(rng, -5, 5), uni(rng, -5, 5);
    u << uni(rng, -3, 3);
    w << uni(rng, -0.1, 0.1), uni(rng, -0.1, 0.1);
    Vec mu(sys.nD());
    double tot = 0;
    for (int d = 0; d < sys.nD(); ++d) {
      mu[d] = uni(rng, 0.01, 1.0);
      tot += mu[d];
    }
    mu /= tot;
    Mat dA = Mat::Zero(2, 2), dB = Mat::Zero(2, 1);
    Vec mix = Vec::Zero(2);
    for (int d = 0; d < sys.nD(); ++d) {
      dA += mu[d] * sys.delta_vertices[d].first;
      dB += mu[d] * sys.delta_vertices[d].second;
      mix += mu[d] * combined_uncertainty(sys, d, x, u, w);
    }
    Vec direct = combined_uncertainty(sys, dA, dB, x, u, w);
    CHECK((direct - mix).cwiseAbs().maxCoeff() < 1e-12);
    // independent arithmetic
    Vec ref = dA * x + dB * u + w;
    CHECK((direct - ref).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("vtol model reproduces its published entries") {
  auto [sys, cost] = vtol();
  CHECK(sys.n() == 6);
  CHECK(sys.m() == 2);
  CHECK(sys.A(1, 4) == Catch::Approx(0.075 * 4.0));        // dt * k1 nominal
  CHECK(sys.A(5, 4) == Catch::Approx(0.075 * 5.0));        // dt * k2 nominal
  CHECK(sys.B(5, 1) == Catch::Approx(0.075 / 0.144));      // dt / I
  CHECK(sys.B(3, 0) == Catch::Approx(0.075));
  CHECK(sys.nD() == 2);
  // vertices put k at the interval endpoints around the midpoint
  CHECK(sys.delta_vertices[0].first(1, 4) == Catch::Approx(0.075 * (3.33 - 4.0)));
  CHECK(sys.delta_vertices[1].first(5, 4) == Catch::Approx(0.075 * (5.67 - 5.0)));
  // constraint boxes
  CHECK(support(sys.U, Vec::Unit(2, 0)) == Catch::Approx(5.0));
  CHECK(support(sys.U, Vec::Unit(2, 1)) == Catch::Approx(25.0));
  CHECK(support(sys.X, Vec::Unit(6, 2)) == Catch::Approx(15.0));
  CHECK(support(sys.X, -Vec::Unit(6, 2)) == Catch::Approx(0.0).margin(1e-12));
  // disturbance structure: only vx and omega components, coupled
  CHECK(support(sys.W, Vec::Unit(6, 1)) == Catch::Approx(0.05));
  CHECK(support(sys.W, Vec::Unit(6, 0)) == Catch::Approx(0.0).margin(1e-12));
  CHECK(support(sys.Wbar, Vec::Unit(6, 3)) == Catch::Approx(0.075));
  // terminal weight solves the Riccati equation
  Mat K = -(cost.R + sys.B.transpose() * cost.P_f * sys.B)
               .ldlt()
               .solve(sys.B.transpose() * cost.P_f * sys.A);
  Mat res = sys.A.transpose() * cost.P_f * (sys.A + sys.B * K) + cost.Q - cost.P_f;
  CHECK(res.cwiseAbs().maxCoeff() < 1e-8);
  CHECK(spectral_radius(sys.A + sys.B * K) < 1.0);
}
