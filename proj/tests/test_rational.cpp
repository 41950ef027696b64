#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "laxflow/rational.hpp"

using namespace laxflow;

namespace {
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

Mat scalar(cplx v) {
  Mat m(1, 1);
  m(0, 0) = v;
  return m;
}

RationalMatrixFunction random_rational(RandomStream& rng, int dim) {
  RationalMatrixFunction f(dim);
  f.add_pole_coeff(cplx(0.3, 0.1), 1, rng.cgaussian_mat(dim, dim));
  f.add_pole_coeff(cplx(0.3, 0.1), 2, rng.cgaussian_mat(dim, dim));
  f.add_pole_coeff(cplx(-1.2, 0.0), 1, rng.cgaussian_mat(dim, dim));
  f.add_pole_coeff(cplx(-1.2, 0.0), 3, rng.cgaussian_mat(dim, dim));
  for (int k = 0; k <= 2; ++k) f.add_poly_coeff(k, rng.cgaussian_mat(dim, dim));
  return f;
}
}  // namespace

TEST_CASE("product reproduces the partial fraction split of 1/((z-1)(z-2))") {
  RationalMatrixFunction a(1), b(1);
  a.add_pole_coeff(cplx(1, 0), 1, scalar(cplx(1, 0)));
  b.add_pole_coeff(cplx(2, 0), 1, scalar(cplx(1, 0)));
  RationalMatrixFunction p = a * b;

  CHECK(std::abs(p.pole_coeff(cplx(1, 0), 1)(0, 0) - cplx(-1, 0)) < 1e-15);
  CHECK(std::abs(p.pole_coeff(cplx(2, 0), 1)(0, 0) - cplx(1, 0)) < 1e-15);
  CHECK(std::abs(p.pole_coeff(cplx(1, 0), 2)(0, 0)) < 1e-15);
  CHECK(max_abs(p.poly_coeff(0)) < 1e-15);
  CHECK(p.poly_degree() <= 0);

  cplx z(0.4, 1.7);
  cplx direct = cplx(1, 0) / ((z - cplx(1, 0)) * (z - cplx(2, 0)));
  CHECK(std::abs(p.evaluate(z)(0, 0) - direct) < 1e-14);
}

TEST_CASE("products agree with pointwise evaluation") {
  RandomStream rng(11);
  RationalMatrixFunction f = random_rational(rng, 3);
  RationalMatrixFunction g = random_rational(rng, 3);
  RationalMatrixFunction h = f * g;
  double scale = h.max_abs_coeff();
  for (cplx z : {cplx(0.9, 0.4), cplx(-0.5, 2.0), cplx(4.0, -3.0)}) {
    Mat expect = f.evaluate(z) * g.evaluate(z);
    CHECK(max_abs(h.evaluate(z) - expect) < 1e-11 * scale);
  }
}

TEST_CASE("residues over the whole sphere sum to zero") {
  RandomStream rng(23);
  RationalMatrixFunction f = random_rational(rng, 2);
  Mat total = f.residue_dz_at(SpherePoint::infinity());
  for (const auto& pp : f.poles()) total += f.residue_dz_at(SpherePoint::finite(pp.location));
  CHECK(max_abs(total) < 1e-13 * f.max_abs_coeff());

  RationalMatrixFunction h = f * f;
  total = h.residue_dz_at(SpherePoint::infinity());
  for (const auto& pp : h.poles()) total += h.residue_dz_at(SpherePoint::finite(pp.location));
  CHECK(max_abs(total) < 1e-12 * h.max_abs_coeff());
}

TEST_CASE("finite expansion evaluates back to the function") {
  RandomStream rng(5);
  RationalMatrixFunction f = random_rational(rng, 2);
  SpherePoint p = SpherePoint::finite(cplx(0.9, -0.2));
  MatrixLaurentSeries s = f.expand_at(p, 40);
  cplx w(0.05, 0.03);
  Mat expect = f.evaluate(p.z + w);
  CHECK(max_abs(s.evaluate(w) - expect) < 1e-12 * max_abs(expect));
}

TEST_CASE("expansion at a pole keeps the stored principal part") {
  RandomStream rng(6);
  RationalMatrixFunction f = random_rational(rng, 2);
  SpherePoint p = SpherePoint::finite(cplx(-1.2, 0.0));
  MatrixLaurentSeries s = f.expand_at(p, 4);
  CHECK(s.min_order() == -3);
  CHECK(max_abs(s.coeff(-3) - f.pole_coeff(p.z, 3)) == 0.0);
  CHECK(max_abs(s.coeff(-1) - f.pole_coeff(p.z, 1)) == 0.0);
  cplx w(0.01, -0.02);
  MatrixLaurentSeries deep = f.expand_at(p, 40);
  CHECK(max_abs(deep.evaluate(w) - f.evaluate(p.z + w)) <
        1e-11 * max_abs(f.evaluate(p.z + w)));
}

TEST_CASE("expansion at infinity evaluates back to the function") {
  RandomStream rng(8);
  RationalMatrixFunction f = random_rational(rng, 2);
  MatrixLaurentSeries s = f.expand_at(SpherePoint::infinity(), 30);
  CHECK(s.min_order() == -2);
  cplx w(0.04, 0.02);  // z = 1/w is far from every pole
  Mat expect = f.evaluate(cplx(1, 0) / w);
  CHECK(max_abs(s.evaluate(w) - expect) < 1e-12 * max_abs(expect));
}

TEST_CASE("derivative maps pole orders up and polynomial degrees down") {
  cplx q(1.5, -0.5);
  RationalMatrixFunction f(2);
  Mat c = Mat::Identity(2, 2) * cplx(4, 1);
  f.add_pole_coeff(q, 2, c);
  Mat p2 = Mat::Identity(2, 2) * cplx(3, 0);
  f.add_poly_coeff(2, p2);

  RationalMatrixFunction d = f.derivative();
  CHECK(max_abs(d.pole_coeff(q, 3) - c * cplx(-2, 0)) == 0.0);
  CHECK(max_abs(d.pole_coeff(q, 2)) == 0.0);
  CHECK(max_abs(d.poly_coeff(1) - p2 * cplx(2, 0)) == 0.0);
  CHECK(d.poly_degree() <= 1);
}

TEST_CASE("residue at infinity balances a simple pole") {
  RationalMatrixFunction f(1);
  f.add_poly_coeff(1, scalar(cplx(1, 0)));
  f.add_poly_coeff(0, scalar(cplx(5, 0)));
  f.add_pole_coeff(cplx(3, 0), 1, scalar(cplx(2, 0)));
  Mat r = f.residue_dz_at(SpherePoint::infinity());
  CHECK(std::abs(r(0, 0) - cplx(-2, 0)) < 1e-15);
  CHECK(std::abs(f.residue_dz_at(SpherePoint::finite(cplx(3, 0)))(0, 0) - cplx(2, 0)) < 1e-15);
}

TEST_CASE("trace and transpose commute with evaluation") {
  RandomStream rng(17);
  RationalMatrixFunction f = random_rational(rng, 3);
  cplx z(2.2, 0.7);
  CHECK(std::abs(f.trace().evaluate(z)(0, 0) - f.evaluate(z).trace()) <
        1e-13 * max_abs(f.evaluate(z)));
  CHECK(max_abs(f.transpose().evaluate(z) - f.evaluate(z).transpose().eval()) == 0.0);
}

TEST_CASE("commutator of a function with its square vanishes") {
  RandomStream rng(29);
  RationalMatrixFunction f = random_rational(rng, 2);
  RationalMatrixFunction c = RationalMatrixFunction::commutator(f, f * f);
  CHECK(c.max_abs_coeff() < 1e-11 * f.max_abs_coeff() * f.max_abs_coeff() * f.max_abs_coeff());
}

TEST_CASE("trimmed drops roundoff-size coefficients") {
  RationalMatrixFunction f(1);
  f.add_pole_coeff(cplx(0, 0), 1, scalar(cplx(1, 0)));
  f.add_pole_coeff(cplx(0, 0), 4, scalar(cplx(1e-20, 0)));
  f.add_pole_coeff(cplx(7, 0), 2, scalar(cplx(1e-19, 0)));
  f.add_poly_coeff(3, scalar(cplx(1e-18, 0)));
  RationalMatrixFunction t = f.trimmed();
  CHECK(t.pole_order_at(SpherePoint::finite(cplx(0, 0))) == 1);
  CHECK(t.pole_order_at(SpherePoint::finite(cplx(7, 0))) == 0);
  CHECK(t.poly_degree() <= 0);
}

TEST_CASE("nearby pole locations merge into one principal part") {
  RationalMatrixFunction f(1);
  f.add_pole_coeff(cplx(1, 0), 1, scalar(cplx(1, 0)));
  f.add_pole_coeff(cplx(1 + 1e-14, 0), 1, scalar(cplx(1, 0)));
  CHECK(f.poles().size() == 1);
  CHECK(std::abs(f.pole_coeff(cplx(1, 0), 1)(0, 0) - cplx(2, 0)) < 1e-15);
}

TEST_CASE("evaluation at a pole is rejected") {
  RationalMatrixFunction f(1);
  f.add_pole_coeff(cplx(1, 0), 1, scalar(cplx(1, 0)));
  CHECK(code_of([&] { (void)f.evaluate(cplx(1, 0)); }) == ErrorCode::NotInvertibleAtPoint);
}
