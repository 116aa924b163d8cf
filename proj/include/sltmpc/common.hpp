#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace sltmpc {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

/// Base class for all library errors.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct ShapeMismatch : Error {
  explicit ShapeMismatch(const std::string& msg) : Error("shape mismatch: " + msg) {}
};
struct LengthMismatch : Error {
  explicit LengthMismatch(const std::string& msg) : Error("length mismatch: " + msg) {}
};
struct SharedShapeViolation : Error {
  explicit SharedShapeViolation(const std::string& msg)
      : Error("shared facet matrix violation: " + msg) {}
};
struct DimensionTooHigh : Error {
  explicit DimensionTooHigh(const std::string& msg) : Error("dimension too high: " + msg) {}
};
struct EmptySetError : Error {
  explicit EmptySetError(const std::string& msg) : Error("empty set: " + msg) {}
};
struct UnboundedError : Error {
  explicit UnboundedError(const std::string& msg) : Error("unbounded: " + msg) {}
};
struct EmptyResult : Error {
  explicit EmptyResult(const std::string& msg) : Error("empty result: " + msg) {}
};
struct NotConverged : Error {
  explicit NotConverged(const std::string& msg) : Error("did not converge: " + msg) {}
};
struct NotStabilizable : Error {
  explicit NotStabilizable(const std::string& msg) : Error("not stabilizable: " + msg) {}
};
struct IncompatibleTerminalSet : Error {
  explicit IncompatibleTerminalSet(const std::string& msg)
      : Error("incompatible terminal set: " + msg) {}
};
struct DisturbanceOutsideW : Error {
  explicit DisturbanceOutsideW(const std::string& msg)
      : Error("disturbance outside W: " + msg) {}
};
struct WbarOutsideSet : Error {
  explicit WbarOutsideSet(const std::string& msg) : Error("wbar outside set: " + msg) {}
};
struct DegenerateSigma : Error {
  explicit DegenerateSigma(const std::string& msg) : Error("degenerate sigma: " + msg) {}
};
struct SecondaryInfeasible : Error {
  explicit SecondaryInfeasible(const std::string& msg)
      : Error("secondary process infeasible: " + msg) {}
};
struct EmptyMemory : Error {
  explicit EmptyMemory(const std::string& msg) : Error("empty memory: " + msg) {}
};
struct ConfigInvalid : Error {
  explicit ConfigInvalid(const std::string& msg) : Error("invalid config: " + msg) {}
};
struct AuditFailed : Error {
  explicit AuditFailed(const std::string& msg) : Error("audit failed: " + msg) {}
};
struct ControllerInfeasible : Error {
  explicit ControllerInfeasible(const std::string& msg)
      : Error("controller infeasible: " + msg) {}
};

/// FNV-1a over a byte view; used for cache keys and output manifests.
inline std::uint64_t fnv1a(const void* data, std::size_t len,
                           std::uint64_t seed = 14695981039346656037ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t fnv1a(const std::string& s, std::uint64_t seed = 14695981039346656037ull) {
  return fnv1a(s.data(), s.size(), seed);
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

inline double spectral_radius(const Mat& A) {
  return A.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace sltmpc
