#ifndef LAXFLOW_SERIES_HPP
#define LAXFLOW_SERIES_HPP

#include <vector>

#include "laxflow/numeric.hpp"

namespace laxflow {

// Truncated Laurent series in a local coordinate w about a point of the
// Riemann sphere. Coefficients are stored densely for exponents in
// [min_order, trunc_order); exponents below min_order are exactly zero and
// exponents at or above trunc_order are unknown. Every operation tracks the
// truncation order of its result exactly, so reading a coefficient that an
// operation could not determine raises TruncationTooShort instead of
// silently returning garbage.
class LaurentSeries {
 public:
  LaurentSeries() = default;
  LaurentSeries(SpherePoint center, int min_order, int trunc_order);
  static LaurentSeries constant(SpherePoint center, cplx value, int trunc_order);
  static LaurentSeries monomial(SpherePoint center, int exponent, cplx value, int trunc_order);

  const SpherePoint& center() const { return center_; }
  int min_order() const { return min_; }
  int trunc_order() const { return trunc_; }

  cplx coeff(int exponent) const;       // throws if exponent >= trunc_order
  void set_coeff(int exponent, cplx v); // exponent must lie in [min, trunc)

  LaurentSeries& operator+=(const LaurentSeries& o);
  LaurentSeries& operator-=(const LaurentSeries& o);
  friend LaurentSeries operator+(LaurentSeries a, const LaurentSeries& b) { return a += b; }
  friend LaurentSeries operator-(LaurentSeries a, const LaurentSeries& b) { return a -= b; }
  friend LaurentSeries operator*(const LaurentSeries& a, const LaurentSeries& b);
  LaurentSeries operator*(cplx s) const;

  // Multiplies by w^k (an exact shift of exponents).
  LaurentSeries shifted(int k) const;

  // Derivative with respect to the local coordinate w.
  LaurentSeries derivative() const;

  // Multiplicative inverse. The leading stored coefficient must be nonzero
  // relative to the series scale; the result is truncated to the order that
  // the input data actually determines.
  LaurentSeries inverse() const;

  // Integer power (exponent >= 0) by repeated multiplication.
  LaurentSeries pow(int exponent) const;

  // Coefficient of w^{-1}.
  cplx residue() const;

  // The sub-series of strictly negative exponents (zero-padded to order 0).
  LaurentSeries principal_part() const;

  // Drops all exponents >= new_trunc.
  LaurentSeries truncated(int new_trunc) const;

  // Strips leading stored coefficients that vanish relative to the largest
  // one, tightening min_order. Never removes nonzero data.
  LaurentSeries normalized(double rel_eps = 1e-14) const;

  double max_abs_coeff() const;
  double max_abs_below(int exponent) const;  // max |c_k| over k < exponent
  cplx evaluate(cplx w) const;
  bool empty() const { return c_.empty(); }

 private:
  void check_center(const LaurentSeries& o) const;

  SpherePoint center_;
  int min_ = 0;
  int trunc_ = 0;
  std::vector<cplx> c_;
};

// Same contract as LaurentSeries with square-matrix coefficients.
class MatrixLaurentSeries {
 public:
  MatrixLaurentSeries() = default;
  MatrixLaurentSeries(SpherePoint center, int dim, int min_order, int trunc_order);
  static MatrixLaurentSeries constant(SpherePoint center, const Mat& value, int trunc_order);
  static MatrixLaurentSeries monomial(SpherePoint center, int exponent, const Mat& value,
                                      int trunc_order);

  const SpherePoint& center() const { return center_; }
  int dim() const { return dim_; }
  int min_order() const { return min_; }
  int trunc_order() const { return trunc_; }

  Mat coeff(int exponent) const;              // throws if exponent >= trunc_order
  void set_coeff(int exponent, const Mat& v); // exponent must lie in [min, trunc)
  void add_to_coeff(int exponent, const Mat& v);

  MatrixLaurentSeries& operator+=(const MatrixLaurentSeries& o);
  MatrixLaurentSeries& operator-=(const MatrixLaurentSeries& o);
  friend MatrixLaurentSeries operator+(MatrixLaurentSeries a, const MatrixLaurentSeries& b) {
    return a += b;
  }
  friend MatrixLaurentSeries operator-(MatrixLaurentSeries a, const MatrixLaurentSeries& b) {
    return a -= b;
  }
  friend MatrixLaurentSeries operator*(const MatrixLaurentSeries& a, const MatrixLaurentSeries& b);
  MatrixLaurentSeries operator*(cplx s) const;

  // Scalar series times matrix series (and the commuting variant).
  friend MatrixLaurentSeries operator*(const LaurentSeries& s, const MatrixLaurentSeries& m);

  MatrixLaurentSeries left_mul(const Mat& a) const;   // a * this
  MatrixLaurentSeries right_mul(const Mat& a) const;  // this * a
  MatrixLaurentSeries transpose() const;

  MatrixLaurentSeries shifted(int k) const;
  MatrixLaurentSeries derivative() const;

  // Multiplicative inverse; requires the leading stored coefficient to be an
  // invertible matrix (relative condition check).
  MatrixLaurentSeries inverse() const;

  MatrixLaurentSeries pow(int exponent) const;

  LaurentSeries trace() const;
  Mat residue() const;
  MatrixLaurentSeries principal_part() const;
  MatrixLaurentSeries truncated(int new_trunc) const;
  MatrixLaurentSeries normalized(double rel_eps = 1e-14) const;

  double max_abs_coeff() const;
  double max_abs_below(int exponent) const;
  Mat evaluate(cplx w) const;
  bool empty() const { return c_.empty(); }

 private:
  void check_center(const MatrixLaurentSeries& o) const;

  SpherePoint center_;
  int dim_ = 0;
  int min_ = 0;
  int trunc_ = 0;
  std::vector<Mat> c_;
};

}  // namespace laxflow

#endif
