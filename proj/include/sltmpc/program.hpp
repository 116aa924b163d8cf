#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "sltmpc/common.hpp"
#include "sltmpc/qp.hpp"

namespace sltmpc {

/// Affine scalar expression: sum of (variable, coefficient) terms plus a constant.
struct Lin {
  std::vector<std::pair<int, double>> terms;
  double constant = 0.0;

  Lin() = default;
  /*implicit*/ Lin(double c) : constant(c) {}

  static Lin var(int idx, double coeff = 1.0) {
    Lin l;
    l.terms.emplace_back(idx, coeff);
    return l;
  }

  Lin& operator+=(const Lin& o) {
    terms.insert(terms.end(), o.terms.begin(), o.terms.end());
    constant += o.constant;
    return *this;
  }
  Lin& operator-=(const Lin& o) {
    for (const auto& [i, c] : o.terms) terms.emplace_back(i, -c);
    constant -= o.constant;
    return *this;
  }
  Lin& operator*=(double s) {
    for (auto& [i, c] : terms) c *= s;
    constant *= s;
    return *this;
  }
  friend Lin operator+(Lin a, const Lin& b) { return a += b; }
  friend Lin operator-(Lin a, const Lin& b) { return a -= b; }
  friend Lin operator*(Lin a, double s) { return a *= s; }
  friend Lin operator*(double s, Lin a) { return a *= s; }
  friend Lin operator-(Lin a) { return a *= -1.0; }

  bool is_constant() const { return terms.empty(); }
};

/// Dense matrix of affine expressions, row-major.
struct LinMat {
  int rows = 0, cols = 0;
  std::vector<Lin> e;

  LinMat() = default;
  LinMat(int r, int c) : rows(r), cols(c), e(static_cast<std::size_t>(r) * c) {}

  Lin& operator()(int r, int c) { return e[static_cast<std::size_t>(r) * cols + c]; }
  const Lin& operator()(int r, int c) const {
    return e[static_cast<std::size_t>(r) * cols + c];
  }

  static LinMat constant(const Mat& M) {
    LinMat lm(static_cast<int>(M.rows()), static_cast<int>(M.cols()));
    for (int r = 0; r < lm.rows; ++r)
      for (int c = 0; c < lm.cols; ++c) lm(r, c) = Lin(M(r, c));
    return lm;
  }

  /// Matrix of decision variables starting at `offset`, stored row-major.
  static LinMat vars(int offset, int rows, int cols) {
    LinMat lm(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) lm(r, c) = Lin::var(offset + r * cols + c);
    return lm;
  }

  bool is_constant() const {
    for (const auto& l : e)
      if (!l.is_constant()) return false;
    return true;
  }

  Mat constant_value() const {
    Mat M(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) M(r, c) = (*this)(r, c).constant;
    return M;
  }

  friend LinMat operator+(const LinMat& a, const LinMat& b) {
    if (a.rows != b.rows || a.cols != b.cols) throw ShapeMismatch("LinMat +");
    LinMat out = a;
    for (std::size_t i = 0; i < out.e.size(); ++i) out.e[i] += b.e[i];
    return out;
  }
  friend LinMat operator-(const LinMat& a, const LinMat& b) {
    if (a.rows != b.rows || a.cols != b.cols) throw ShapeMismatch("LinMat -");
    LinMat out = a;
    for (std::size_t i = 0; i < out.e.size(); ++i) out.e[i] -= b.e[i];
    return out;
  }
  friend LinMat operator*(const Mat& M, const LinMat& x) {
    if (M.cols() != x.rows) throw ShapeMismatch("Mat * LinMat");
    LinMat out(static_cast<int>(M.rows()), x.cols);
    for (int r = 0; r < out.rows; ++r)
      for (int c = 0; c < out.cols; ++c) {
        Lin acc;
        for (int k = 0; k < x.rows; ++k) {
          double m = M(r, k);
          if (m == 0.0) continue;
          acc += m * x(k, c);
        }
        out(r, c) = acc;
      }
    return out;
  }
  friend LinMat operator*(double s, const LinMat& x) {
    LinMat out = x;
    for (auto& l : out.e) l *= s;
    return out;
  }
};

/// Incremental builder for sparse QPs with named variable segments.
/// Rows are canonicalized as expr == 0 / expr <= 0.
class ProgramBuilder {
 public:
  struct Segment {
    std::string name;
    int offset = 0;
    int count = 0;
  };

  int add_vars(const std::string& name, int count) {
    segments_.push_back({name, nvar_, count});
    int off = nvar_;
    nvar_ += count;
    return off;
  }
  int num_vars() const { return nvar_; }
  const std::vector<Segment>& segments() const { return segments_; }

  int add_eq(const Lin& expr) {
    int row = static_cast<int>(beq_.size());
    emit(expr, eq_t_, row);
    beq_.push_back(-expr.constant);
    return row;
  }
  /// expr <= 0
  int add_ineq(const Lin& expr) {
    int row = static_cast<int>(hin_.size());
    emit(expr, in_t_, row);
    hin_.push_back(-expr.constant);
    return row;
  }
  void add_eq(const Lin& lhs, const Lin& rhs) { add_eq(lhs - rhs); }
  /// lhs <= rhs
  void add_ineq(const Lin& lhs, const Lin& rhs) { add_ineq(lhs - rhs); }

  int eq_rows() const { return static_cast<int>(beq_.size()); }
  int ineq_rows() const { return static_cast<int>(hin_.size()); }

  /// objective += coeff * x_i * x_j
  void add_quad_cost(int i, int j, double coeff) {
    if (coeff == 0.0) return;
    if (i == j) {
      pt_.emplace_back(i, i, 2.0 * coeff);
    } else {
      pt_.emplace_back(i, j, coeff);
      pt_.emplace_back(j, i, coeff);
    }
  }
  /// objective += x_seg' W x_seg for a contiguous segment
  void add_quad_form(int offset, const Mat& W) {
    for (int r = 0; r < W.rows(); ++r)
      for (int c = r; c < W.cols(); ++c) {
        double v = (r == c) ? W(r, c) : W(r, c) + W(c, r);
        if (v != 0.0) add_quad_cost(offset + r, offset + c, (r == c) ? v : v / 2.0);
      }
  }
  void add_lin_cost(int i, double coeff) { lin_cost_[i] += coeff; }
  void add_lin_cost(const Lin& l) {
    for (const auto& [i, c] : l.terms) lin_cost_[i] += c;
  }

  /// New variable s with rows s >= expr, s >= -expr (so s >= |expr| at feasibility,
  /// s == |expr| whenever s is minimized or appears only in active tightenings).
  int abs_epigraph(const Lin& expr) {
    int s = add_vars("abs", 1);
    add_ineq(expr - Lin::var(s));
    add_ineq(-expr - Lin::var(s));
    return s;
  }

  QPData finalize() const {
    QPData qp;
    qp.n = nvar_;
    qp.P = pt_;
    qp.q = Vec::Zero(nvar_);
    for (const auto& [i, c] : lin_cost_) qp.q[i] += c;
    qp.Aeq = eq_t_;
    qp.beq = Eigen::Map<const Vec>(beq_.data(), beq_.size());
    qp.Ain = in_t_;
    qp.hin = Eigen::Map<const Vec>(hin_.data(), hin_.size());
    return qp;
  }

 private:
  void emit(const Lin& expr, std::vector<Triplet>& out, int row) {
    // merge duplicate variable indices within the row
    scratch_.clear();
    for (const auto& [i, c] : expr.terms) scratch_[i] += c;
    for (const auto& [i, c] : scratch_)
      if (c != 0.0) out.emplace_back(row, i, c);
  }

  int nvar_ = 0;
  std::vector<Segment> segments_;
  std::vector<Triplet> pt_, eq_t_, in_t_;
  std::vector<double> beq_, hin_;
  std::map<int, double> lin_cost_;
  std::map<int, double> scratch_;
};

/// Evaluate an affine expression at a full variable assignment.
inline double eval(const Lin& l, const Vec& x) {
  double v = l.constant;
  for (const auto& [i, c] : l.terms) v += c * x[i];
  return v;
}

inline Mat eval(const LinMat& m, const Vec& x) {
  Mat out(m.rows, m.cols);
  for (int r = 0; r < m.rows; ++r)
    for (int c = 0; c < m.cols; ++c) out(r, c) = eval(m(r, c), x);
  return out;
}

}  // namespace sltmpc
