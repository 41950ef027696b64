#include "laxflow/hierarchy.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace laxflow {

namespace {

long binomial(int n, int k) {
  long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// w^{-m} in the local chart of P (w = z - P, or w = 1/z at infinity) as a
// global rational scalar multiple of the identity.
RationalMatrixFunction chart_power(const SpherePoint& P, int m, int dim) {
  RationalMatrixFunction f(dim);
  const Mat id = Mat::Identity(dim, dim);
  if (P.at_inf) {
    if (m >= 0) {
      f.set_poly_coeff(m, id);
    } else {
      f.add_pole_coeff(cplx(0, 0), -m, id);
    }
    return f;
  }
  if (m > 0) {
    f.add_pole_coeff(P.z, m, id);
  } else {
    std::vector<cplx> pw(static_cast<size_t>(-m) + 1, cplx(1, 0));
    for (size_t i = 1; i < pw.size(); ++i) pw[i] = pw[i - 1] * (-P.z);
    for (int k = 0; k <= -m; ++k)
      f.add_poly_coeff(k, static_cast<double>(binomial(-m, k)) * pw[static_cast<size_t>(-m - k)] * id);
  }
  return f;
}

Mat pair_structure(const Vec& alpha, const Vec& u, double eps, const Mat& sigma) {
  return (alpha * u.transpose() + eps * u * alpha.transpose()) * sigma;
}

}  // namespace

std::string flow_label(const FlowIndex& a) {
  std::ostringstream os;
  os << "flow(P" << a.puncture << ", n=" << a.n << ", m=" << a.m << ")";
  return os.str();
}

void require_flow(const LaxOperator& L, const FlowIndex& a) {
  require(a.puncture >= 0 && a.puncture < static_cast<int>(L.punctures.size()),
          ErrorCode::InvalidArgument, "flow puncture index out of range");
  require(a.n >= 1, ErrorCode::InvalidArgument, "flow power must be positive");
  require(a.m > -L.punctures[static_cast<size_t>(a.puncture)].order, ErrorCode::InvalidArgument,
          "flow chart exponent must exceed minus the puncture order");
  if (L.config.eps != 0.0)
    require(a.n % 2 == 1, ErrorCode::InvalidArgument,
            "orthogonal/symplectic flows need odd matrix powers");
}

MOperator build_m_operator(const LaxOperator& L, const FlowIndex& a) {
  require_flow(L, a);
  const AlgebraConfig& cfg = L.config;
  const PunctureSpec& P = L.punctures[static_cast<size_t>(a.puncture)];
  const RationalMatrixFunction N = chart_power(P.point, a.m, cfg.n) * L.value.pow(a.n);
  const double scale = std::max(1.0, N.max_abs_coeff());

  MOperator M;
  M.flow = a;
  M.value = RationalMatrixFunction(cfg.n);
  if (P.point.at_inf) {
    // The polynomial projection keeps the chart constant: flows only commute
    // when every constant term is assigned to the infinity side of the
    // proper-rational / polynomial splitting.
    for (int k = 0; k <= std::max(N.poly_degree(), 0); ++k)
      M.value.add_poly_coeff(k, N.poly_coeff(k));
  } else {
    const int ord = N.pole_order_at(P.point);
    for (int j = 1; j <= ord; ++j) M.value.add_pole_coeff(P.point.z, j, N.pole_coeff(P.point.z, j));
  }

  for (const TyurinPoint& t : L.tyurin) {
    const Mat c2 = N.pole_coeff(t.z, 2);
    const Mat c1 = N.pole_coeff(t.z, 1);
    auto [lambda, r2] = fit_scaled_projector(c2, t.alpha, cfg.sigma);
    auto [mu, r1] = fit_pair_structure(c1, t.alpha, cfg.eps, cfg.sigma);
    M.structure_defect = std::max(M.structure_defect, std::max(r1, r2) / scale);
    for (int j = 3; j <= N.pole_order_at(SpherePoint::finite(t.z)); ++j)
      M.structure_defect = std::max(M.structure_defect, max_abs(N.pole_coeff(t.z, j)) / scale);

    const Mat pp2 = lambda * (t.alpha * t.alpha.transpose()) * cfg.sigma;
    const Mat pp1 = pair_structure(t.alpha, mu, cfg.eps, cfg.sigma);
    if (max_abs(pp2) > 1e-13 * scale) M.value.add_pole_coeff(t.z, 2, pp2);
    if (max_abs(pp1) > 1e-13 * scale) M.value.add_pole_coeff(t.z, 1, pp1);
    M.tyurin_aux.push_back(MOperatorAux{lambda, mu});
  }

  if (cfg.eps == 1) {
    for (const TyurinPoint& t : L.tyurin) {
      const Mat m1 = M.value.expand_at(SpherePoint::finite(t.z), 2).coeff(1);
      const cplx s = (t.alpha.transpose() * cfg.sigma * m1 * t.alpha)(0, 0);
      M.linear_term_defect = std::max(M.linear_term_defect, std::abs(s) / scale);
    }
  }

  const MatrixLaurentSeries gap = (M.value - N).expand_at(P.point, 1);
  M.puncture_defect = gap.max_abs_below(0) / scale;
  return M;
}

PhaseLayout phase_layout(const LaxOperator& templ) {
  const int dim = templ.config.dim();
  const int n = templ.config.n;
  PhaseLayout lay;
  int idx = 0;
  for (const PunctureSpec& P : templ.punctures) idx += P.order * dim;
  idx += dim;  // constant term
  lay.main_len = idx;
  for (size_t g = 0; g < templ.tyurin.size(); ++g) {
    PhaseLayout::TyurinSlots s;
    s.z = idx++;
    s.kappa = idx++;
    if (templ.config.nu_free) s.nu = idx++;
    s.alpha = idx;
    idx += n;
    s.beta = idx;
    idx += n;
    lay.tyurin.push_back(s);
  }
  lay.total = idx;
  require(lay.total == phase_dim(templ), ErrorCode::InvalidArgument,
          "phase layout does not match the coordinate dimension");
  return lay;
}

Vec constrained_tangent(const LaxOperator& L, const Vec& y, double fd_step) {
  const Vec u0 = to_coords(L);
  require(y.size() == u0.size(), ErrorCode::InvalidArgument,
          "tangent dimension does not match the phase dimension");
  if (L.tyurin.empty()) return y;
  require(fd_step > 0, ErrorCode::InvalidArgument, "fd_step must be positive");

  const PhaseLayout lay = phase_layout(L);
  const int rows = static_cast<int>(constraint_residuals(L).size());
  Mat J(rows, lay.total);
  for (int c = 0; c < lay.total; ++c) {
    Vec up = u0, um = u0;
    up(c) += fd_step;
    um(c) -= fd_step;
    J.col(c) = (constraint_residuals(from_coords(L, up)) -
                constraint_residuals(from_coords(L, um))) /
               (2.0 * fd_step);
  }
  const int tail = lay.total - lay.main_len;
  Vec out = y;
  out.tail(tail) += J.rightCols(tail).completeOrthogonalDecomposition().solve(Vec(-(J * y)));
  return out;
}

Vec sample_orbit_tangent(const LaxOperator& L, RandomStream& rng) {
  const AlgebraConfig& cfg = L.config;
  const PhaseLayout lay = phase_layout(L);
  const int D = cfg.dim();
  Vec y = Vec::Zero(lay.total);
  auto algebra_draw = [&]() { return cfg.from_algebra_coords(rng.cgaussian_vec(D)); };
  auto comm = [](const Mat& a, const Mat& b) { return Mat(a * b - b * a); };

  int at = 0;
  for (const PunctureSpec& p : L.punctures) {
    if (p.point.at_inf) continue;
    std::vector<Mat> b(static_cast<size_t>(p.order) + 1, Mat::Zero(cfg.n, cfg.n));
    for (int k = 1; k <= p.order; ++k) b[static_cast<size_t>(k)] = L.value.pole_coeff(p.point.z, k);
    std::vector<Mat> xi(static_cast<size_t>(p.order));
    for (Mat& m : xi) m = algebra_draw();
    for (int k = 1; k <= p.order; ++k) {
      Mat d = Mat::Zero(cfg.n, cfg.n);
      for (int j = 0; k + j <= p.order; ++j)
        d += comm(b[static_cast<size_t>(k + j)], xi[static_cast<size_t>(j)]);
      y.segment(at, D) = cfg.algebra_coords(d);
      at += D;
    }
  }
  int inf_order = 0;
  for (const PunctureSpec& p : L.punctures)
    if (p.point.at_inf) inf_order = p.order;
  {
    std::vector<Mat> c(static_cast<size_t>(inf_order) + 1);
    for (int k = 0; k <= inf_order; ++k) c[static_cast<size_t>(k)] = L.value.poly_coeff(k);
    std::vector<Mat> xi(static_cast<size_t>(inf_order) + 1);
    for (Mat& m : xi) m = algebra_draw();
    for (int k = 1; k <= inf_order; ++k) {
      Mat d = Mat::Zero(cfg.n, cfg.n);
      for (int j = 0; k + j <= inf_order; ++j)
        d += comm(c[static_cast<size_t>(k + j)], xi[static_cast<size_t>(j)]);
      y.segment(at, D) = cfg.algebra_coords(d);
      at += D;
    }
    Mat d0 = Mat::Zero(cfg.n, cfg.n);
    for (int j = 0; j <= inf_order; ++j)
      d0 += comm(c[static_cast<size_t>(j)], xi[static_cast<size_t>(j)]);
    y.segment(at, D) = cfg.algebra_coords(d0);
    at += D;
  }
  for (const PhaseLayout::TyurinSlots& s : lay.tyurin) {
    y(s.z) = rng.cgaussian();
    y(s.kappa) = rng.cgaussian();
    if (s.nu >= 0) y(s.nu) = rng.cgaussian();
    y.segment(s.alpha, cfg.n) = rng.cgaussian_vec(cfg.n);
    y.segment(s.beta, cfg.n) = rng.cgaussian_vec(cfg.n);
  }
  return constrained_tangent(L, y);
}

FlowTangent lax_rhs(const LaxOperator& L, const MOperator& M, AlphaDotRule rule) {
  const AlgebraConfig& cfg = L.config;
  const int dim = cfg.dim();
  const RationalMatrixFunction B = RationalMatrixFunction::commutator(L.value, M.value);
  const double bscale = std::max(1.0, B.max_abs_coeff());
  const PhaseLayout lay = phase_layout(L);

  FlowTangent out;
  out.coords = Vec::Zero(lay.total);
  int idx = 0;
  auto push_main = [&](const Mat& c) {
    out.coords.segment(idx, dim) = cfg.algebra_coords(c);
    idx += dim;
    out.projection_defect = std::max(out.projection_defect, cfg.off_algebra(c) / bscale);
  };
  for (const PunctureSpec& P : L.punctures) {
    if (P.point.at_inf) {
      for (int k = 1; k <= P.order; ++k) push_main(B.poly_coeff(k));
      for (int k = P.order + 1; k <= B.poly_degree(); ++k)
        out.projection_defect = std::max(out.projection_defect, max_abs(B.poly_coeff(k)) / bscale);
    } else {
      for (int j = 1; j <= P.order; ++j) push_main(B.pole_coeff(P.point.z, j));
      for (int j = P.order + 1; j <= B.pole_order_at(P.point); ++j)
        out.projection_defect =
            std::max(out.projection_defect, max_abs(B.pole_coeff(P.point.z, j)) / bscale);
    }
  }
  push_main(B.poly_coeff(0));
  if (!std::any_of(L.punctures.begin(), L.punctures.end(),
                   [](const PunctureSpec& P) { return P.point.at_inf; }))
    for (int k = 1; k <= B.poly_degree(); ++k)
      out.projection_defect = std::max(out.projection_defect, max_abs(B.poly_coeff(k)) / bscale);

  for (size_t g = 0; g < L.tyurin.size(); ++g) {
    const TyurinPoint& t = L.tyurin[g];
    const MOperatorAux& aux = M.tyurin_aux[g];
    const SpherePoint gp = SpherePoint::finite(t.z);
    const Mat id = Mat::Identity(cfg.n, cfg.n);

    const cplx zdot = -(aux.mu.transpose() * cfg.sigma * t.alpha)(0, 0);
    const Mat M0 = M.value.expand_at(gp, 1).coeff(0);
    Vec adot = -(M0 * t.alpha);
    if (rule == AlphaDotRule::Shifted) adot += t.kappa * t.alpha;

    const Mat Lm2 = L.value.pole_coeff(t.z, 2);
    const Mat Lm1 = L.value.pole_coeff(t.z, 1);
    const MatrixLaurentSeries SL = L.value.expand_at(gp, 2);
    const Mat L0c = SL.coeff(0);
    const Mat L1c = SL.coeff(1);

    // The commutator must carry the velocity of a moving double pole:
    // order -3 is 2*zdot*L_{-2}, order -2 is Ldot_{-2} + zdot*L_{-1},
    // order -1 is Ldot_{-1}, and the w^0 term is Ldot_0 - zdot*L_1.
    const Mat B3 = B.pole_coeff(t.z, 3);
    const Mat B2 = B.pole_coeff(t.z, 2);
    const Mat B1 = B.pole_coeff(t.z, 1);
    const Mat B0 = B.expand_at(gp, 1).coeff(0);
    for (int j = 4; j <= B.pole_order_at(gp); ++j)
      out.projection_defect = std::max(out.projection_defect, max_abs(B.pole_coeff(t.z, j)) / bscale);
    out.projection_defect =
        std::max(out.projection_defect, max_abs(B3 - 2.0 * zdot * Lm2) / bscale);

    const Mat Ldot_m2 = B2 - zdot * Lm1;
    cplx nudot(0, 0);
    if (cfg.nu_free) {
      const Mat rhs2 =
          Ldot_m2 - t.nu * (adot * t.alpha.transpose() + t.alpha * adot.transpose()) * cfg.sigma;
      auto [nd, r2] = fit_scaled_projector(rhs2, t.alpha, cfg.sigma);
      nudot = nd;
      out.projection_defect = std::max(out.projection_defect, r2 / bscale);
    } else {
      out.projection_defect = std::max(out.projection_defect, max_abs(Ldot_m2) / bscale);
    }

    const Mat rhs1 = B1 - pair_structure(adot, t.beta, cfg.eps, cfg.sigma);
    auto [bdot, r1] = fit_pair_structure(rhs1, t.alpha, cfg.eps, cfg.sigma);
    out.projection_defect = std::max(out.projection_defect, r1 / bscale);

    const Mat Ldot0 = B0 + zdot * L1c;
    const cplx kdot = (t.alpha.conjugate().transpose() *
                       (Ldot0 * t.alpha + (L0c - t.kappa * id) * adot))(0, 0) /
                      t.alpha.squaredNorm();

    const PhaseLayout::TyurinSlots& s = lay.tyurin[g];
    out.coords(s.z) = zdot;
    out.coords(s.kappa) = kdot;
    if (s.nu >= 0) out.coords(s.nu) = nudot;
    out.coords.segment(s.alpha, cfg.n) = adot;
    out.coords.segment(s.beta, cfg.n) = bdot;
  }
  return out;
}

LaxOperator Trajectory::state_operator(std::size_t i) const {
  require(i < states.size(), ErrorCode::InvalidArgument, "trajectory state index out of range");
  return from_coords(frame, states[i]);
}

Trajectory integrate_flow(const LaxOperator& L0, const FlowIndex& a, double t_end, double step,
                          AlphaDotRule rule) {
  require_flow(L0, a);
  require(step > 0.0, ErrorCode::InvalidArgument, "integration step must be positive");
  require(t_end >= 0.0, ErrorCode::InvalidArgument, "integration time must be nonnegative");

  Trajectory tr;
  tr.flow = a;
  tr.frame = L0;
  const long count = t_end > 0.0 ? std::max<long>(1, std::lround(t_end / step)) : 0;
  const double h = count > 0 ? t_end / static_cast<double>(count) : step;
  tr.step = h;

  Vec y = to_coords(L0);
  tr.times.push_back(0.0);
  tr.states.push_back(y);
  tr.max_validation_defect = validate_lax(L0).max_rel_defect();

  // Only the k1 stage sits at a recorded state; the interior stages are off
  // the solution curve by O(h^2) by construction, so their reassembly gap
  // says nothing about trajectory quality and is not folded into the metric.
  auto rhs = [&](const Vec& u, bool at_state) {
    const LaxOperator Lc = from_coords(L0, u);
    const MOperator Mc = build_m_operator(Lc, a);
    const FlowTangent ft = lax_rhs(Lc, Mc, rule);
    if (at_state)
      tr.max_projection_defect = std::max(tr.max_projection_defect, ft.projection_defect);
    return ft.coords;
  };

  for (long s = 0; s < count; ++s) {
    try {
      const Vec k1 = rhs(y, true);
      const Vec k2 = rhs(y + (h / 2) * k1, false);
      const Vec k3 = rhs(y + (h / 2) * k2, false);
      const Vec k4 = rhs(y + h * k3, false);
      y = y + (h / 6) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    } catch (const Error& e) {
      tr.completed = false;
      std::ostringstream os;
      os << flow_label(a) << " aborted at t=" << tr.times.back() << ": " << e.what();
      tr.diagnostic = os.str();
      break;
    }
    tr.times.push_back(h * static_cast<double>(s + 1));
    tr.states.push_back(y);
    tr.max_validation_defect =
        std::max(tr.max_validation_defect, validate_lax(from_coords(L0, y)).max_rel_defect());
  }
  if (tr.completed && count > 0) {
    try {
      rhs(y, true);
    } catch (const Error&) {
      // The final state is still part of the trajectory; its reassembly gap
      // is a diagnostic, not a reason to discard the integration.
    }
  }
  return tr;
}

double flow_commutativity_defect(const LaxOperator& L0, const FlowIndex& a, const FlowIndex& b,
                                 double t, double step, AlphaDotRule rule) {
  auto advance = [&](const LaxOperator& Ls, const FlowIndex& f) {
    Trajectory tr = integrate_flow(Ls, f, t, step, rule);
    require(tr.completed, ErrorCode::InvalidArgument, tr.diagnostic);
    return from_coords(Ls, tr.states.back());
  };
  const Vec ab = to_coords(advance(advance(L0, a), b));
  const Vec ba = to_coords(advance(advance(L0, b), a));
  return (ab - ba).cwiseAbs().maxCoeff();
}

}  // namespace laxflow
