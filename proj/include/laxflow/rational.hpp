#ifndef LAXFLOW_RATIONAL_HPP
#define LAXFLOW_RATIONAL_HPP

#include <vector>

#include "laxflow/series.hpp"

namespace laxflow {

// Principal part of a matrix rational function at one finite point:
// sum over j of coeff[j-1] * (z - location)^{-j}.
struct PolePart {
  cplx location;
  std::vector<Mat> coeff;  // coeff[j-1] multiplies (z - location)^{-j}
  int order() const { return static_cast<int>(coeff.size()); }
};

// Matrix-valued rational function on the Riemann sphere, stored as the sum of
// finite principal parts plus a polynomial in z. A pole at infinity is the
// same thing as a nonconstant polynomial part (z^k = w^{-k} in w = 1/z).
//
// Sums and products are reconstructed from exact local expansions at the
// union of the poles and at infinity, so arithmetic stays closed over this
// representation with no sampling error. Pole lists are kept sorted by
// (Re, Im) of the location so all iteration orders are deterministic.
class RationalMatrixFunction {
 public:
  RationalMatrixFunction() = default;
  explicit RationalMatrixFunction(int dim);
  static RationalMatrixFunction constant(const Mat& value);

  int dim() const { return dim_; }
  const std::vector<PolePart>& poles() const { return poles_; }
  int poly_degree() const;  // degree of the polynomial part, -1 when zero
  Mat poly_coeff(int k) const;
  void set_poly_coeff(int k, const Mat& v);
  void add_poly_coeff(int k, const Mat& v);

  int pole_order_at(const SpherePoint& p) const;  // infinity means poly degree
  Mat pole_coeff(cplx location, int j) const;     // coefficient of (z-q)^{-j}
  void add_pole_coeff(cplx location, int j, const Mat& v);

  Mat evaluate(cplx z) const;

  // Laurent expansion in the local coordinate of p (w = z - p, or w = 1/z at
  // infinity), exact through the requested truncation order.
  MatrixLaurentSeries expand_at(const SpherePoint& p, int trunc_order) const;

  // Residue of (this)(z) dz at a point of the sphere; at infinity this is
  // minus the w^1 expansion coefficient.
  Mat residue_dz_at(const SpherePoint& p) const;

  RationalMatrixFunction& operator+=(const RationalMatrixFunction& o);
  RationalMatrixFunction& operator-=(const RationalMatrixFunction& o);
  friend RationalMatrixFunction operator+(RationalMatrixFunction a,
                                          const RationalMatrixFunction& b) {
    return a += b;
  }
  friend RationalMatrixFunction operator-(RationalMatrixFunction a,
                                          const RationalMatrixFunction& b) {
    return a -= b;
  }
  friend RationalMatrixFunction operator*(const RationalMatrixFunction& a,
                                          const RationalMatrixFunction& b);
  RationalMatrixFunction operator*(cplx s) const;
  RationalMatrixFunction left_mul(const Mat& a) const;
  RationalMatrixFunction right_mul(const Mat& a) const;
  RationalMatrixFunction transpose() const;
  RationalMatrixFunction trace() const;  // 1x1 result
  RationalMatrixFunction derivative() const;
  RationalMatrixFunction pow(int exponent) const;

  // Drops pole coefficients and trailing polynomial coefficients whose
  // magnitude is below rel_eps times the largest stored coefficient. Used to
  // clear roundoff residue left by cancellations; callers that must audit
  // cancellation junk read the raw coefficients instead.
  RationalMatrixFunction trimmed(double rel_eps = 1e-13) const;

  double max_abs_coeff() const;

  static RationalMatrixFunction commutator(const RationalMatrixFunction& a,
                                           const RationalMatrixFunction& b);

 private:
  PolePart& find_or_add_pole(cplx location);
  const PolePart* find_pole(cplx location) const;
  void check_compatible(const RationalMatrixFunction& o) const;

  int dim_ = 0;
  std::vector<PolePart> poles_;
  std::vector<Mat> poly_;
};

// Exact binomial coefficient as a double (arguments stay small enough that
// the value is exactly representable).
double binom(int n, int k);

}  // namespace laxflow

#endif
