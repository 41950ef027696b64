#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "laxflow/hierarchy.hpp"

using namespace laxflow;

namespace {
const SpherePoint O = SpherePoint::finite(cplx(0, 0));
const SpherePoint INF = SpherePoint::infinity();

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

std::vector<PunctureSpec> two_punctures(int m0 = 1, int minf = 1) {
  return {{O, m0}, {INF, minf}};
}

Mat random_gl(int n, RandomStream& rng, AlgebraConfig& cfg) {
  cfg = algebra_config(Flavor::GL, n);
  return cfg.from_algebra_coords(rng.cgaussian_vec(cfg.dim()));
}

double coord_gap(const Vec& a, const Vec& b) { return (a - b).cwiseAbs().maxCoeff(); }

// Coefficients of det(A - lambda I) via the trace recursion, the dense
// oracle for isospectrality along trajectories.
std::vector<cplx> char_coeffs(const Mat& A) {
  const int n = static_cast<int>(A.rows());
  std::vector<cplx> a(static_cast<size_t>(n) + 1);
  a[0] = 1.0;
  Mat Mk = Mat::Identity(n, n);
  for (int k = 1; k <= n; ++k) {
    Mk = A * Mk;
    a[static_cast<size_t>(k)] = -(Mk.trace()) / static_cast<double>(k);
    Mk += a[static_cast<size_t>(k)] * Mat::Identity(n, n);
  }
  return a;
}

double spectral_drift(const Trajectory& tr, const std::vector<cplx>& zs) {
  std::vector<std::vector<cplx>> base;
  double worst = 0.0;
  for (std::size_t i = 0; i < tr.states.size(); ++i) {
    const LaxOperator L = tr.state_operator(i);
    for (std::size_t s = 0; s < zs.size(); ++s) {
      const std::vector<cplx> c = char_coeffs(L.value.evaluate(zs[s]));
      if (i == 0) {
        base.push_back(c);
      } else {
        for (std::size_t k = 0; k < c.size(); ++k)
          worst = std::max(worst, std::abs(c[k] - base[s][k]));
      }
    }
  }
  return worst;
}
}  // namespace

TEST_CASE("flow indices are range-checked") {
  RandomStream rng(21);
  AlgebraConfig cfg = algebra_config(Flavor::GL, 2);
  LaxOperator L = sample_lax(cfg, two_punctures(), 0, rng);

  CHECK(code_of([&] { require_flow(L, {2, 1, 0}); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] { require_flow(L, {-1, 1, 0}); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] { require_flow(L, {0, 0, 0}); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] { require_flow(L, {0, 1, -1}); }) == ErrorCode::InvalidArgument);
  require_flow(L, {0, 1, 0});
  require_flow(L, {1, 3, 2});

  AlgebraConfig so = algebra_config(Flavor::SO, 4);
  LaxOperator Ls = sample_lax(so, two_punctures(), 0, rng);
  CHECK(code_of([&] { build_m_operator(Ls, {0, 2, 0}); }) == ErrorCode::InvalidArgument);
  require_flow(Ls, {0, 3, 0});
}

TEST_CASE("single-pole operator: the (P,1,0) generator is the operator itself") {
  RandomStream rng(22);
  AlgebraConfig cfg;
  const Mat A = random_gl(2, rng, cfg);
  const cplx p(0.3, 0.1);

  LaxOperator L;
  L.config = cfg;
  L.punctures = normalize_punctures({{SpherePoint::finite(p), 1}});
  L.value = RationalMatrixFunction(2);
  L.value.add_pole_coeff(p, 1, A);

  const MOperator M = build_m_operator(L, {0, 1, 0});
  CHECK((M.value - L.value).max_abs_coeff() <= 1e-14);
  CHECK(M.puncture_defect <= 1e-14);

  const FlowTangent ft = lax_rhs(L, M);
  CHECK(ft.coords.cwiseAbs().maxCoeff() <= 1e-13);
  CHECK(ft.projection_defect <= 1e-13);

  Trajectory tr = integrate_flow(L, {0, 1, 0}, 0.5, 0.1);
  REQUIRE(tr.completed);
  CHECK(tr.states.size() == 6);
  CHECK(tr.times.back() == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(coord_gap(tr.states.back(), tr.states.front()) <= 1e-12);

  // Everything in this one-matrix world commutes, so the flows do too.
  CHECK(flow_commutativity_defect(L, {0, 1, 0}, {0, 2, 1}, 0.3, 0.1) <= 1e-12);
}

TEST_CASE("power flows of a single pole at the origin") {
  RandomStream rng(23);
  AlgebraConfig cfg;
  const Mat A = random_gl(2, rng, cfg);

  LaxOperator L;
  L.config = cfg;
  L.punctures = normalize_punctures({{O, 1}});
  L.value = RationalMatrixFunction(2);
  L.value.add_pole_coeff(cplx(0, 0), 1, A);

  const MOperator M = build_m_operator(L, {0, 2, 1});
  CHECK(max_abs(M.value.pole_coeff(cplx(0, 0), 3) - A * A) <= 1e-13);
  CHECK(max_abs(M.value.pole_coeff(cplx(0, 0), 2)) <= 1e-13);
  CHECK(max_abs(M.value.pole_coeff(cplx(0, 0), 1)) <= 1e-13);
  CHECK(M.value.poly_degree() == -1);
  CHECK(M.puncture_defect <= 1e-12);

  const FlowTangent ft = lax_rhs(L, M);
  CHECK(ft.coords.cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("negative chart exponents keep only the surviving singular part") {
  RandomStream rng(24);
  AlgebraConfig cfg;
  const Mat A = random_gl(2, rng, cfg);
  AlgebraConfig cfg2;
  const Mat B = random_gl(2, rng, cfg2);
  const cplx p(0.4, -0.2);

  LaxOperator L;
  L.config = cfg;
  L.punctures = normalize_punctures({{SpherePoint::finite(p), 2}});
  L.value = RationalMatrixFunction(2);
  L.value.add_pole_coeff(p, 2, A);
  L.value.add_pole_coeff(p, 1, B);

  // (z-p) * L has only the order-1 part A/(z-p) left below exponent 0.
  const MOperator M = build_m_operator(L, {0, 1, -1});
  CHECK(max_abs(M.value.pole_coeff(p, 1) - A) <= 1e-13);
  CHECK(M.value.pole_order_at(SpherePoint::finite(p)) == 1);
  CHECK(M.value.poly_degree() == -1);
  CHECK(M.puncture_defect <= 1e-13);
}

TEST_CASE("sampled generators carry the declared singularity structure") {
  struct Case {
    Flavor flavor;
    int n;
    int tyurin;
    FlowIndex flow;
  };
  const Case cases[] = {
      {Flavor::GL, 2, 1, {0, 1, 1}},
      {Flavor::GL, 2, 2, {1, 2, 0}},
      {Flavor::SL, 3, 1, {0, 2, 1}},
      {Flavor::SO, 4, 1, {0, 1, 1}},
      {Flavor::SP, 4, 1, {1, 3, 0}},
  };
  for (const Case& cs : cases) {
    CAPTURE(flavor_name(cs.flavor));
    CAPTURE(flow_label(cs.flow));
    AlgebraConfig cfg = algebra_config(cs.flavor, cs.n);
    RandomStream rng(501 + cs.n + 10 * static_cast<int>(cs.flavor));
    LaxOperator L = sample_lax(cfg, two_punctures(), cs.tyurin, rng);

    const MOperator M = build_m_operator(L, cs.flow);
    CHECK(M.puncture_defect <= 1e-9);
    CHECK(M.structure_defect <= 1e-9);
    REQUIRE(M.tyurin_aux.size() == L.tyurin.size());

    // Pole support: the flow's puncture plus the Tyurin points, nothing else.
    const SpherePoint fp = L.punctures[static_cast<size_t>(cs.flow.puncture)].point;
    for (const PolePart& pp : M.value.poles()) {
      bool known = (!fp.at_inf && std::abs(pp.location - fp.z) < 1e-9);
      for (const TyurinPoint& t : L.tyurin) known = known || std::abs(pp.location - t.z) < 1e-9;
      CHECK(known);
    }
    if (fp.at_inf) {
      // m = 0 for the infinity flows above, so the chart factor is trivial
      // and the generator must carry the constant term of L^n.
      REQUIRE(cs.flow.m == 0);
      const RationalMatrixFunction N = L.value.pow(cs.flow.n);
      CHECK(max_abs(M.value.poly_coeff(0) - N.poly_coeff(0)) <=
            1e-12 * std::max(1.0, N.max_abs_coeff()));
    } else {
      CHECK(M.value.poly_degree() == -1);
    }

    // The structured parts are exactly the stored (lambda, mu) data.
    for (std::size_t g = 0; g < L.tyurin.size(); ++g) {
      const TyurinPoint& t = L.tyurin[g];
      const Mat want2 = M.tyurin_aux[g].lambda * (t.alpha * t.alpha.transpose()) * cfg.sigma;
      const Mat want1 = (t.alpha * M.tyurin_aux[g].mu.transpose() +
                         cfg.eps * M.tyurin_aux[g].mu * t.alpha.transpose()) *
                        cfg.sigma;
      CHECK(max_abs(M.value.pole_coeff(t.z, 2) - want2) <= 1e-12);
      CHECK(max_abs(M.value.pole_coeff(t.z, 1) - want1) <= 1e-12);
    }
  }
}

TEST_CASE("tangent of a Tyurin-free flow is the raw commutator projection") {
  RandomStream rng(26);
  AlgebraConfig cfg = algebra_config(Flavor::GL, 2);
  LaxOperator L = sample_lax(cfg, two_punctures(2, 1), 0, rng);
  const MOperator M = build_m_operator(L, {0, 1, 1});
  const FlowTangent ft = lax_rhs(L, M);
  CHECK(ft.projection_defect <= 1e-10);

  const RationalMatrixFunction B = RationalMatrixFunction::commutator(L.value, M.value);
  Vec manual = Vec::Zero(phase_dim(L));
  int idx = 0;
  for (const PunctureSpec& P : L.punctures) {
    for (int k = 1; k <= P.order; ++k) {
      const Mat c = P.point.at_inf ? B.poly_coeff(k) : B.pole_coeff(P.point.z, k);
      manual.segment(idx, cfg.dim()) = cfg.algebra_coords(c);
      idx += cfg.dim();
    }
  }
  manual.segment(idx, cfg.dim()) = cfg.algebra_coords(B.poly_coeff(0));
  CHECK(coord_gap(ft.coords, manual) == 0.0);
}

TEST_CASE("tangent reassembles the commutator at the Tyurin points") {
  struct Case {
    Flavor flavor;
    int n;
    FlowIndex flow;
  };
  const Case cases[] = {
      {Flavor::GL, 2, {0, 1, 1}},
      {Flavor::SL, 3, {1, 2, 0}},
      {Flavor::SO, 4, {0, 3, 0}},
      {Flavor::SP, 4, {0, 1, 1}},
  };
  for (const Case& cs : cases) {
    CAPTURE(flavor_name(cs.flavor));
    AlgebraConfig cfg = algebra_config(cs.flavor, cs.n);
    RandomStream rng(701 + cs.n + 10 * static_cast<int>(cs.flavor));
    LaxOperator L = sample_lax(cfg, two_punctures(), 1, rng);
    const MOperator M = build_m_operator(L, cs.flow);
    const FlowTangent ft = lax_rhs(L, M);
    CHECK(ft.projection_defect <= 1e-8);

    // zdot comes solely from the stored mu: zeroing it freezes the position.
    MOperator frozen = M;
    for (MOperatorAux& aux : frozen.tyurin_aux) aux.mu = Vec::Zero(cfg.n);
    const FlowTangent still = lax_rhs(L, frozen);
    const PhaseLayout lay = phase_layout(L);
    for (const PhaseLayout::TyurinSlots& s : lay.tyurin) CHECK(still.coords(s.z) == cplx(0, 0));
  }
}

TEST_CASE("structure constraints hold along a GL(2) trajectory") {
  RandomStream rng(27);
  AlgebraConfig cfg = algebra_config(Flavor::GL, 2);
  LaxOperator L = sample_lax(cfg, two_punctures(), 1, rng);

  Trajectory tr = integrate_flow(L, {0, 1, 1}, 1.0, 0.01);
  REQUIRE(tr.completed);
  CHECK(tr.states.size() == 101);
  CHECK(tr.times[1] - tr.times[0] == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(tr.max_validation_defect <= 1e-6);
  CHECK(tr.max_projection_defect <= 1e-6);
  CHECK(tr.integrator_id == "rk4");
}

TEST_CASE("integrator self-convergence is fourth order") {
  RandomStream rng(28);
  AlgebraConfig cfg = algebra_config(Flavor::GL, 2);
  LaxOperator L = sample_lax(cfg, two_punctures(), 1, rng);
  const FlowIndex a{0, 1, 1};
  const double T = 0.2;

  const Vec ref = integrate_flow(L, a, T, T / 160.0).states.back();
  const double e1 = coord_gap(integrate_flow(L, a, T, T / 10.0).states.back(), ref);
  const double e2 = coord_gap(integrate_flow(L, a, T, T / 20.0).states.back(), ref);
  CAPTURE(e1);
  CAPTURE(e2);
  CHECK(e1 > 1e-13);  // above roundoff, so the ratio is meaningful
  CHECK(e1 / e2 >= 11.3);
}

TEST_CASE("distinct flows commute up to integrator error") {
  RandomStream rng(29);
  AlgebraConfig cfg = algebra_config(Flavor::GL, 2);
  LaxOperator L = sample_lax(cfg, two_punctures(), 0, rng);
  const FlowIndex a{0, 1, 1};
  const FlowIndex b{1, 2, 0};

  CHECK(flow_commutativity_defect(L, a, a, 0.05, 0.01) == 0.0);

  const double d1 = flow_commutativity_defect(L, a, b, 0.2, 0.04);
  const double d2 = flow_commutativity_defect(L, a, b, 0.2, 0.02);
  CAPTURE(d1);
  CAPTURE(d2);
  CHECK(d1 <= 1e-4);
  if (d1 > 1e-12) CHECK(d1 / d2 >= 8.0);

  CHECK(flow_commutativity_defect(L, a, b, 0.05, 2e-3) <= 1e-6);
}

TEST_CASE("symplectic moving-pole flows drift at the generator's linear-term rate") {
  AlgebraConfig cfg = algebra_config(Flavor::SP, 4);
  RandomStream rng(41);
  LaxOperator L = sample_lax(cfg, normalize_punctures(two_punctures()), 1, rng);
  const TyurinPoint& ty = L.tyurin[0];

  // The (0,1,0) generator drops a non-constant remainder, so its linear-term
  // obstruction is nonzero and the flow leaves the constraint set at the
  // predicted rate 2|kappa * a^t sigma M_1 a|, independent of the step.
  MOperator M = build_m_operator(L, {0, 1, 0});
  CHECK(M.linear_term_defect > 1e-3);
  const Mat m1 = M.value.expand_at(SpherePoint::finite(ty.z), 2).coeff(1);
  const cplx s = (ty.alpha.transpose() * cfg.sigma * m1 * ty.alpha)(0, 0);
  const double rate = std::abs(2.0 * ty.kappa * s);

  const double T = 0.002;
  Trajectory tr = integrate_flow(L, {0, 1, 0}, T, T / 4);
  REQUIRE(tr.completed);
  ValidationReport rep = validate_lax(tr.state_operator(tr.states.size() - 1));
  const CheckItem* lin = rep.find("tyurin.linear_term");
  REQUIRE(lin != nullptr);
  CHECK(lin->defect / T == doctest::Approx(rate).epsilon(0.02));

  Trajectory fine = integrate_flow(L, {0, 1, 0}, T, T / 16);
  ValidationReport repf = validate_lax(fine.state_operator(fine.states.size() - 1));
  CHECK(repf.find("tyurin.linear_term")->defect ==
        doctest::Approx(lin->defect).epsilon(0.02));

  // The (0,1,1) generator's remainder is constant: the obstruction vanishes
  // and the same system flows cleanly at fourth order.
  MOperator M2 = build_m_operator(L, {0, 1, 1});
  CHECK(M2.linear_term_defect <= 1e-12);
  Trajectory a = integrate_flow(L, {0, 1, 1}, 0.2, 0.01);
  Trajectory b = integrate_flow(L, {0, 1, 1}, 0.2, 0.005);
  REQUIRE(a.completed);
  REQUIRE(b.completed);
  CHECK(a.max_validation_defect <= 1e-8);
  CHECK(a.max_validation_defect / b.max_validation_defect >= 8.0);
}

TEST_CASE("orthogonal trajectories keep constraints at fourth order") {
  AlgebraConfig cfg = algebra_config(Flavor::SO, 4);
  RandomStream rng(43);
  LaxOperator L = sample_lax(cfg, normalize_punctures(two_punctures()), 1, rng);

  Trajectory a = integrate_flow(L, {0, 3, 0}, 0.1, 0.01);
  Trajectory b = integrate_flow(L, {0, 3, 0}, 0.1, 0.005);
  REQUIRE(a.completed);
  REQUIRE(b.completed);
  CHECK(b.max_validation_defect <= 1e-6);
  CHECK(a.max_validation_defect / b.max_validation_defect >= 12.0);
}

TEST_CASE("the two alpha velocity rules are gauge-equivalent") {
  AlgebraConfig cfg = algebra_config(Flavor::GL, 2);
  RandomStream rng(33);
  LaxOperator L = sample_lax(cfg, normalize_punctures(two_punctures()), 1, rng);

  Trajectory sh = integrate_flow(L, {0, 1, 1}, 0.5, 0.01, AlphaDotRule::Shifted);
  Trajectory pl = integrate_flow(L, {0, 1, 1}, 0.5, 0.01, AlphaDotRule::Plain);
  REQUIRE(sh.completed);
  REQUIRE(pl.completed);
  CHECK(sh.max_validation_defect <= 1e-6);
  CHECK(pl.max_validation_defect <= 1e-6);

  // Different coordinate paths for the Tyurin vectors...
  const PhaseLayout lay = phase_layout(L);
  const Vec& end_sh = sh.states.back();
  const Vec& end_pl = pl.states.back();
  double alpha_gap = 0.0;
  for (int k = 0; k < cfg.n; ++k)
    alpha_gap = std::max(alpha_gap, std::abs(end_sh[lay.tyurin[0].alpha + k] -
                                             end_pl[lay.tyurin[0].alpha + k]));
  CHECK(alpha_gap > 1e-3);

  // ...but the same operator-valued path.
  const LaxOperator Lsh = sh.state_operator(sh.states.size() - 1);
  const LaxOperator Lpl = pl.state_operator(pl.states.size() - 1);
  RandomStream probe(77);
  for (int k = 0; k < 5; ++k) {
    const cplx z = 3.0 * probe.cgaussian();
    CHECK(max_abs(Mat(Lsh.value.evaluate(z) - Lpl.value.evaluate(z))) <= 1e-7);
  }
}

TEST_CASE("the spectral data is conserved along flows") {
  RandomStream rng(30);
  AlgebraConfig cfg = algebra_config(Flavor::GL, 2);
  LaxOperator L = sample_lax(cfg, two_punctures(), 1, rng);
  const FlowIndex a{0, 1, 1};
  const std::vector<cplx> zs = {cplx(1.7, 0.4), cplx(-0.9, 1.3), cplx(0.2, -2.1)};

  const double drift1 = spectral_drift(integrate_flow(L, a, 0.2, 0.02), zs);
  const double drift2 = spectral_drift(integrate_flow(L, a, 0.2, 0.01), zs);
  CAPTURE(drift1);
  CAPTURE(drift2);
  CHECK(drift1 <= 1e-5);
  CHECK(drift1 > 1e-13);
  CHECK(drift1 / drift2 >= 8.0);
}
