#pragma once

#include "sltmpc/common.hpp"

namespace sltmpc {

struct DareResult {
  Mat P;
  Mat K;  // u = K x
  int iterations = 0;
  double residual = std::numeric_limits<double>::infinity();
};

/// Discrete algebraic Riccati equation by fixed-point iteration.
/// Returns P with residual <= tol and the associated LQR gain K = -(R+B'PB)^-1 B'PA.
inline DareResult solve_dare(const Mat& A, const Mat& B, const Mat& Q, const Mat& R,
                             double tol = 1e-10, int max_iter = 10000) {
  DareResult out;
  Mat P = Q;
  for (int it = 0; it < max_iter; ++it) {
    Mat BtPB = R + B.transpose() * P * B;
    Mat K = -BtPB.ldlt().solve(B.transpose() * P * A);
    Mat Pn = Q + A.transpose() * P * (A + B * K);
    double change = (Pn - P).cwiseAbs().maxCoeff();
    P = Pn;
    out.iterations = it + 1;
    if (!P.allFinite() || P.cwiseAbs().maxCoeff() > 1e14)
      throw NotStabilizable("DARE iteration diverged");
    if (change <= tol) break;
  }
  Mat BtPB = R + B.transpose() * P * B;
  out.K = -BtPB.ldlt().solve(B.transpose() * P * A);
  out.P = P;
  Mat res = A.transpose() * P * (A + B * out.K) + Q - P;
  out.residual = res.cwiseAbs().maxCoeff();
  if (out.residual > 1e-8)
    throw NotStabilizable("DARE residual " + std::to_string(out.residual));
  return out;
}

}  // namespace sltmpc
