#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "laxflow/series.hpp"

using namespace laxflow;

namespace {
const SpherePoint O = SpherePoint::finite(cplx(0, 0));

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected a laxflow::Error");
  return ErrorCode::InvalidArgument;
}
}  // namespace

TEST_CASE("product convolves coefficients and tracks truncation") {
  // a = 2 w^{-1} + 3 + 5 w known through w^1, b = 7 + w known through w^1.
  LaurentSeries a(O, -1, 2);
  a.set_coeff(-1, cplx(2, 0));
  a.set_coeff(0, cplx(3, 0));
  a.set_coeff(1, cplx(5, 0));
  LaurentSeries b(O, 0, 2);
  b.set_coeff(0, cplx(7, 0));
  b.set_coeff(1, cplx(1, 0));

  LaurentSeries p = a * b;
  CHECK(p.min_order() == -1);
  // b's unknown w^2 coefficient would feed the product's w^1 term through
  // a's w^{-1}, so the product is only determined through w^0.
  CHECK(p.trunc_order() == 1);
  CHECK(p.coeff(-1) == cplx(14, 0));
  CHECK(p.coeff(0) == cplx(23, 0));
  CHECK(p.coeff(-5) == cplx(0, 0));
  CHECK(code_of([&] { (void)p.coeff(1); }) == ErrorCode::TruncationTooShort);
}

TEST_CASE("sum aligns exponent windows") {
  LaurentSeries a(O, -2, 1);
  a.set_coeff(-2, cplx(1, 0));
  LaurentSeries b(O, 0, 3);
  b.set_coeff(2, cplx(4, 0));
  LaurentSeries s = a + b;
  CHECK(s.min_order() == -2);
  CHECK(s.trunc_order() == 1);
  CHECK(s.coeff(-2) == cplx(1, 0));
  CHECK(s.coeff(0) == cplx(0, 0));
}

TEST_CASE("inverse of 3w^2(1+w) matches the geometric series") {
  LaurentSeries x(O, 2, 6);
  x.set_coeff(2, cplx(3, 0));
  x.set_coeff(3, cplx(3, 0));
  LaurentSeries inv = x.inverse();
  CHECK(inv.min_order() == -2);
  CHECK(inv.trunc_order() == 2);
  CHECK(std::abs(inv.coeff(-2) - cplx(1.0 / 3.0, 0)) < 1e-15);
  CHECK(std::abs(inv.coeff(-1) + cplx(1.0 / 3.0, 0)) < 1e-15);
  CHECK(std::abs(inv.coeff(0) - cplx(1.0 / 3.0, 0)) < 1e-15);
  CHECK(std::abs(inv.coeff(1) + cplx(1.0 / 3.0, 0)) < 1e-15);

  LaurentSeries check = x * inv;
  CHECK(check.trunc_order() == 4);
  CHECK(std::abs(check.coeff(0) - cplx(1, 0)) < 1e-15);
  for (int k : {-1, 1, 2, 3})
    CHECK(std::abs(check.coeff(k)) < 1e-15);
}

TEST_CASE("inverse rejects a vanishing leading coefficient") {
  LaurentSeries zero(O, 0, 3);
  CHECK(code_of([&] { (void)zero.inverse(); }) == ErrorCode::NotInvertibleAtPoint);
}

TEST_CASE("derivative, shift and residue act on exponents") {
  LaurentSeries a(O, -1, 2);
  a.set_coeff(-1, cplx(2, 0));
  a.set_coeff(0, cplx(3, 0));
  a.set_coeff(1, cplx(5, 0));

  LaurentSeries d = a.derivative();
  CHECK(d.coeff(-2) == cplx(-2, 0));
  CHECK(d.coeff(-1) == cplx(0, 0));
  CHECK(d.coeff(0) == cplx(5, 0));

  CHECK(a.residue() == cplx(2, 0));
  LaurentSeries sh = a.shifted(3);
  CHECK(sh.min_order() == 2);
  CHECK(sh.coeff(2) == cplx(2, 0));
}

TEST_CASE("pow reproduces binomial coefficients and keeps precision") {
  LaurentSeries x(O, 0, 6);
  x.set_coeff(0, cplx(1, 0));
  x.set_coeff(1, cplx(1, 0));
  LaurentSeries c = x.pow(3);
  CHECK(c.coeff(0) == cplx(1, 0));
  CHECK(c.coeff(1) == cplx(3, 0));
  CHECK(c.coeff(2) == cplx(3, 0));
  CHECK(c.coeff(3) == cplx(1, 0));
  CHECK(c.trunc_order() >= 6);

  // A base with a pole: truncation must follow t + (n-1)*min.
  LaurentSeries y(O, -1, 3);
  y.set_coeff(-1, cplx(1, 0));
  y.set_coeff(0, cplx(1, 0));
  LaurentSeries y2 = y.pow(2);
  CHECK(y2.min_order() == -2);
  CHECK(y2.trunc_order() == 2);
  CHECK(y2.coeff(-2) == cplx(1, 0));
  CHECK(y2.coeff(-1) == cplx(2, 0));
  CHECK(y2.coeff(0) == cplx(1, 0));
}

TEST_CASE("principal part copies negative orders and demands them resolved") {
  LaurentSeries a(O, -2, 3);
  a.set_coeff(-2, cplx(4, 0));
  a.set_coeff(-1, cplx(5, 0));
  a.set_coeff(1, cplx(6, 0));
  LaurentSeries pp = a.principal_part();
  CHECK(pp.coeff(-2) == cplx(4, 0));
  CHECK(pp.coeff(-1) == cplx(5, 0));
  CHECK(pp.coeff(1) == cplx(0, 0));

  LaurentSeries unresolved(O, -3, -1);
  CHECK(code_of([&] { (void)unresolved.principal_part(); }) == ErrorCode::TruncationTooShort);
}

TEST_CASE("normalized strips negligible leading coefficients only") {
  LaurentSeries a(O, -2, 2);
  a.set_coeff(-2, cplx(1e-18, 0));
  a.set_coeff(0, cplx(1, 0));
  LaurentSeries n = a.normalized();
  CHECK(n.min_order() == 0);
  CHECK(n.coeff(-2) == cplx(0, 0));
  CHECK(n.coeff(0) == cplx(1, 0));
}

TEST_CASE("evaluate sums the Laurent tail") {
  LaurentSeries a(O, -1, 3);
  a.set_coeff(-1, cplx(2, 0));
  a.set_coeff(0, cplx(3, 0));
  a.set_coeff(2, cplx(1, 0));
  cplx w(0.5, 0.25);
  cplx expect = cplx(2, 0) / w + cplx(3, 0) + w * w;
  CHECK(std::abs(a.evaluate(w) - expect) < 1e-14);
}

TEST_CASE("series at different centers refuse to combine") {
  LaurentSeries a(O, 0, 2);
  LaurentSeries b(SpherePoint::finite(cplx(1, 0)), 0, 2);
  CHECK(code_of([&] { (void)(a + b); }) == ErrorCode::InvalidArgument);
  LaurentSeries c(SpherePoint::infinity(), 0, 2);
  CHECK(code_of([&] { (void)(a * c); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("matrix series multiply is noncommutative but trace-cyclic") {
  RandomStream rng(42);
  MatrixLaurentSeries A(O, 3, -1, 3);
  MatrixLaurentSeries B(O, 3, 0, 4);
  for (int k = -1; k < 3; ++k) A.set_coeff(k, rng.cgaussian_mat(3, 3));
  for (int k = 0; k < 4; ++k) B.set_coeff(k, rng.cgaussian_mat(3, 3));

  MatrixLaurentSeries AB = A * B;
  MatrixLaurentSeries BA = B * A;
  CHECK(AB.trunc_order() == BA.trunc_order());
  CHECK(max_abs(AB.coeff(0) - BA.coeff(0)) > 1e-3);
  for (int k = AB.min_order(); k < AB.trunc_order(); ++k)
    CHECK(std::abs(AB.coeff(k).trace() - BA.coeff(k).trace()) < 1e-12 * AB.max_abs_coeff());
}

TEST_CASE("matrix series inverse multiplies back to the identity") {
  RandomStream rng(7);
  MatrixLaurentSeries A(O, 3, -1, 4);
  for (int k = -1; k < 4; ++k) A.set_coeff(k, rng.cgaussian_mat(3, 3));
  MatrixLaurentSeries inv = A.inverse();
  CHECK(inv.min_order() == 1);
  CHECK(inv.trunc_order() == 6);

  MatrixLaurentSeries prod = A * inv;
  CHECK(prod.trunc_order() == 5);
  CHECK(max_abs(prod.coeff(0) - Mat::Identity(3, 3)) < 1e-12);
  for (int k = 1; k < 5; ++k) CHECK(max_abs(prod.coeff(k)) < 1e-11);
}

TEST_CASE("matrix trace and transpose distribute over coefficients") {
  RandomStream rng(3);
  MatrixLaurentSeries A(O, 2, -2, 2);
  for (int k = -2; k < 2; ++k) A.set_coeff(k, rng.cgaussian_mat(2, 2));
  LaurentSeries t = A.trace();
  MatrixLaurentSeries At = A.transpose();
  for (int k = -2; k < 2; ++k) {
    CHECK(t.coeff(k) == A.coeff(k).trace());
    CHECK(max_abs(At.coeff(k) - A.coeff(k).transpose().eval()) == 0.0);
  }
}

TEST_CASE("scalar series times matrix series respects truncation") {
  LaurentSeries s(O, -1, 2);
  s.set_coeff(-1, cplx(1, 0));
  s.set_coeff(0, cplx(2, 0));
  MatrixLaurentSeries A = MatrixLaurentSeries::monomial(O, 0, Mat::Identity(2, 2), 3);
  MatrixLaurentSeries p = s * A;
  CHECK(p.min_order() == -1);
  CHECK(p.trunc_order() == 2);
  CHECK(max_abs(p.coeff(-1) - Mat::Identity(2, 2)) == 0.0);
  CHECK(max_abs(p.coeff(0) - 2.0 * Mat::Identity(2, 2)) == 0.0);
}
