#include "laxflow/algebra.hpp"

#include <algorithm>
#include <cmath>

namespace laxflow {

const char* flavor_name(Flavor f) {
  switch (f) {
    case Flavor::GL: return "gl";
    case Flavor::SL: return "sl";
    case Flavor::SO: return "so";
    case Flavor::SP: return "sp";
  }
  return "?";
}

Flavor flavor_from_name(const std::string& s) {
  if (s == "gl") return Flavor::GL;
  if (s == "sl") return Flavor::SL;
  if (s == "so") return Flavor::SO;
  if (s == "sp") return Flavor::SP;
  fail(ErrorCode::InvalidArgument, "unknown algebra flavor '" + s + "'");
}

namespace {
Mat unit_matrix(int n, int i, int j) {
  Mat m = Mat::Zero(n, n);
  m(i, j) = cplx(1, 0);
  return m;
}
}  // namespace

AlgebraConfig algebra_config(Flavor flavor, int n) {
  require(n >= 1, ErrorCode::InvalidArgument, "matrix dimension must be positive");
  AlgebraConfig cfg;
  cfg.flavor = flavor;
  cfg.n = n;
  cfg.sigma = Mat::Identity(n, n);
  cfg.sigma_inv = Mat::Identity(n, n);
  const double isq2 = 1.0 / std::sqrt(2.0);

  switch (flavor) {
    case Flavor::GL: {
      cfg.eps = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) cfg.basis.push_back(unit_matrix(n, i, j));
      break;
    }
    case Flavor::SL: {
      cfg.eps = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          if (i != j) cfg.basis.push_back(unit_matrix(n, i, j));
      for (int k = 1; k < n; ++k) {
        Mat d = Mat::Zero(n, n);
        for (int i = 0; i < k; ++i) d(i, i) = cplx(1, 0);
        d(k, k) = cplx(-static_cast<double>(k), 0);
        cfg.basis.push_back(d / std::sqrt(static_cast<double>(k) * (k + 1)));
      }
      break;
    }
    case Flavor::SO: {
      cfg.eps = -1.0;
      cfg.isotropic_alpha = true;
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
          cfg.basis.push_back((unit_matrix(n, i, j) - unit_matrix(n, j, i)) * isq2);
      break;
    }
    case Flavor::SP: {
      require(n % 2 == 0, ErrorCode::InvalidArgument, "sp flavor needs even dimension");
      cfg.eps = 1.0;
      cfg.nu_free = true;
      int h = n / 2;
      cfg.sigma = Mat::Zero(n, n);
      for (int i = 0; i < h; ++i) {
        cfg.sigma(i, h + i) = cplx(1, 0);
        cfg.sigma(h + i, i) = cplx(-1, 0);
      }
      cfg.sigma_inv = -cfg.sigma;
      // sigma^{-1} S with S symmetric spans sp(n); sigma is orthogonal, so the
      // images of an orthonormal symmetric basis stay orthonormal.
      for (int i = 0; i < n; ++i) cfg.basis.push_back(cfg.sigma_inv * unit_matrix(n, i, i));
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
          cfg.basis.push_back(cfg.sigma_inv *
                              ((unit_matrix(n, i, j) + unit_matrix(n, j, i)) * isq2));
      break;
    }
  }
  return cfg;
}

Vec AlgebraConfig::algebra_coords(const Mat& X) const {
  require(X.rows() == n && X.cols() == n, ErrorCode::InvalidArgument,
          "matrix dimension mismatch");
  Vec c(dim());
  for (int a = 0; a < dim(); ++a) c(a) = (basis[static_cast<size_t>(a)].transpose() * X).trace();
  return c;
}

Mat AlgebraConfig::from_algebra_coords(const Vec& c) const {
  require(c.size() == dim(), ErrorCode::InvalidArgument, "coordinate length mismatch");
  Mat X = Mat::Zero(n, n);
  for (int a = 0; a < dim(); ++a) X += c(a) * basis[static_cast<size_t>(a)];
  return X;
}

Mat AlgebraConfig::project(const Mat& X) const { return from_algebra_coords(algebra_coords(X)); }

double AlgebraConfig::off_algebra(const Mat& X) const { return max_abs(X - project(X)); }

std::vector<PunctureSpec> normalize_punctures(std::vector<PunctureSpec> punctures) {
  for (const auto& p : punctures)
    require(p.order >= 1, ErrorCode::InvalidArgument, "puncture order must be >= 1");
  std::sort(punctures.begin(), punctures.end(),
            [](const PunctureSpec& a, const PunctureSpec& b) { return a.point.before(b.point); });
  for (size_t i = 1; i < punctures.size(); ++i)
    require(!punctures[i].point.same_as(punctures[i - 1].point), ErrorCode::InvalidArgument,
            "duplicate puncture " + punctures[i].point.str());
  return punctures;
}

int tyurin_pole_order(const AlgebraConfig& config) { return config.nu_free ? 2 : 1; }

RationalMatrixFunction assemble_value(const AlgebraConfig& config,
                                      const RationalMatrixFunction& main_parts,
                                      const std::vector<TyurinPoint>& tyurin) {
  require(main_parts.dim() == config.n, ErrorCode::InvalidArgument, "dimension mismatch");
  RationalMatrixFunction value = main_parts;
  for (const auto& t : tyurin) {
    Mat res = (t.alpha * t.beta.transpose() + cplx(config.eps, 0) * t.beta * t.alpha.transpose()) *
              config.sigma;
    value.add_pole_coeff(t.z, 1, res);
    if (config.nu_free)
      value.add_pole_coeff(t.z, 2, t.nu * (t.alpha * t.alpha.transpose()) * config.sigma);
  }
  return value;
}

// ---------------------------------------------------------------------------
// Validation

bool ValidationReport::ok() const {
  for (const auto& it : items)
    if (!it.pass) return false;
  return true;
}

double ValidationReport::max_defect() const {
  double m = 0.0;
  for (const auto& it : items) m = std::max(m, it.defect);
  return m;
}

double ValidationReport::max_rel_defect() const {
  return max_defect() / (scale < 1.0 ? 1.0 : scale);
}

const CheckItem* ValidationReport::find(const std::string& name) const {
  for (const auto& it : items)
    if (it.name == name) return &it;
  return nullptr;
}

namespace {
void add_check(ValidationReport& rep, const std::string& name, double defect, double threshold) {
  rep.items.push_back({name, defect, threshold, defect <= threshold});
}

// Deterministic off-pole probe points for the pointwise membership check.
std::vector<cplx> probe_points(const RationalMatrixFunction& value, int count) {
  double r = 2.0;
  for (const auto& pp : value.poles()) r = std::max(r, std::abs(pp.location) * 1.3 + 1.0);
  std::vector<cplx> pts;
  for (int s = 0; s < count; ++s) {
    double angle = 2.0 * M_PI * s / count + 0.37;
    cplx z = r * cplx(std::cos(angle), std::sin(angle));
    for (int tries = 0; tries < 8; ++tries) {
      bool clear = true;
      for (const auto& pp : value.poles()) clear = clear && std::abs(z - pp.location) > 1e-2;
      if (clear) break;
      angle += 0.05;
      z = r * cplx(std::cos(angle), std::sin(angle));
    }
    pts.push_back(z);
  }
  return pts;
}
}  // namespace

ValidationReport validate_lax(const LaxOperator& L) {
  const AlgebraConfig& cfg = L.config;
  ValidationReport rep;
  rep.scale = L.value.max_abs_coeff();
  double thr = global_tolerance().mixed(rep.scale);

  // Distinctness of all singular positions.
  {
    std::vector<cplx> pos;
    for (const auto& p : L.punctures)
      if (!p.point.at_inf) pos.push_back(p.point.z);
    for (const auto& t : L.tyurin) pos.push_back(t.z);
    double viol = 0.0;
    for (size_t i = 0; i < pos.size(); ++i)
      for (size_t j = i + 1; j < pos.size(); ++j)
        if (std::abs(pos[i] - pos[j]) < 1e-8) viol = 1.0;
    add_check(rep, "positions.distinct", viol, 0.5);
  }

  // Pointwise membership in the algebra.
  {
    double defect = 0.0;
    for (cplx z : probe_points(L.value, 8))
      defect = std::max(defect, cfg.off_algebra(L.value.evaluate(z)));
    add_check(rep, "algebra.membership", defect, thr);
  }

  // Pole support: every stored pole must sit at a declared position.
  {
    double defect = 0.0;
    for (const auto& pp : L.value.poles()) {
      bool declared = false;
      for (const auto& p : L.punctures)
        if (!p.point.at_inf && std::abs(pp.location - p.point.z) < 1e-9) declared = true;
      for (const auto& t : L.tyurin)
        if (std::abs(pp.location - t.z) < 1e-9) declared = true;
      if (!declared)
        for (const auto& c : pp.coeff) defect = std::max(defect, max_abs(c));
    }
    add_check(rep, "pole.support", defect, thr);
  }

  // Pole orders within declared bounds.
  {
    double defect = 0.0;
    int inf_order = 0;
    for (const auto& p : L.punctures) {
      if (p.point.at_inf) {
        inf_order = p.order;
        continue;
      }
      int stored = L.value.pole_order_at(p.point);
      for (int j = p.order + 1; j <= stored; ++j)
        defect = std::max(defect, max_abs(L.value.pole_coeff(p.point.z, j)));
    }
    for (int k = inf_order + 1; k <= L.value.poly_degree(); ++k)
      defect = std::max(defect, max_abs(L.value.poly_coeff(k)));
    int t_ord = tyurin_pole_order(cfg);
    for (const auto& t : L.tyurin) {
      int stored = L.value.pole_order_at(SpherePoint::finite(t.z));
      for (int j = t_ord + 1; j <= stored; ++j)
        defect = std::max(defect, max_abs(L.value.pole_coeff(t.z, j)));
    }
    add_check(rep, "pole.orders", defect, thr);
  }

  if (!L.tyurin.empty()) {
    double orth = 0.0, iso = 0.0, nu_pol = 0.0, ord2 = 0.0, res1 = 0.0, eig = 0.0, lin = 0.0;
    double alpha_zero = 0.0;
    for (const auto& t : L.tyurin) {
      if (max_abs(t.alpha) < 1e-8) alpha_zero = 1.0;
      orth = std::max(orth, std::abs((t.beta.transpose() * cfg.sigma * t.alpha)(0, 0)));
      if (cfg.isotropic_alpha)
        iso = std::max(iso, std::abs((t.alpha.transpose() * t.alpha)(0, 0)));
      if (!cfg.nu_free) nu_pol = std::max(nu_pol, std::abs(t.nu));

      MatrixLaurentSeries s = L.value.expand_at(SpherePoint::finite(t.z), 2);
      Mat res = (t.alpha * t.beta.transpose() +
                 cplx(cfg.eps, 0) * t.beta * t.alpha.transpose()) *
                cfg.sigma;
      res1 = std::max(res1, max_abs(s.coeff(-1) - res));
      if (cfg.nu_free) {
        Mat o2 = t.nu * (t.alpha * t.alpha.transpose()) * cfg.sigma;
        ord2 = std::max(ord2, max_abs(s.coeff(-2) - o2));
        lin = std::max(lin, std::abs((t.alpha.transpose() * cfg.sigma * s.coeff(1) * t.alpha)(0, 0)));
      }
      eig = std::max(eig, max_abs(s.coeff(0) * t.alpha - t.kappa * t.alpha));
    }
    add_check(rep, "tyurin.alpha_nonzero", alpha_zero, 0.5);
    add_check(rep, "tyurin.orthogonality", orth, thr);
    if (cfg.isotropic_alpha) add_check(rep, "tyurin.isotropy", iso, thr);
    if (!cfg.nu_free) add_check(rep, "tyurin.nu_policy", nu_pol, thr);
    if (cfg.nu_free) add_check(rep, "tyurin.order2_structure", ord2, thr);
    add_check(rep, "tyurin.residue_structure", res1, thr);
    add_check(rep, "tyurin.eigenvector", eig, thr);
    if (cfg.nu_free) add_check(rep, "tyurin.linear_term", lin, thr);
  }

  return rep;
}

// ---------------------------------------------------------------------------
// Structured fits

std::pair<Vec, double> fit_pair_structure(const Mat& X, const Vec& alpha, double eps,
                                          const Mat& sigma) {
  int n = static_cast<int>(alpha.size());
  Mat A(n * n, n);
  for (int j = 0; j < n; ++j) {
    Vec ej = Vec::Zero(n);
    ej(j) = cplx(1, 0);
    Mat col = (alpha * ej.transpose() + cplx(eps, 0) * ej * alpha.transpose()) * sigma;
    A.col(j) = Eigen::Map<const Vec>(col.data(), n * n);
  }
  Vec rhs = Eigen::Map<const Vec>(X.data(), n * n);
  Eigen::CompleteOrthogonalDecomposition<Mat> cod(A);
  Vec u = cod.solve(rhs);
  Mat fit = (alpha * u.transpose() + cplx(eps, 0) * u * alpha.transpose()) * sigma;
  return {u, max_abs(X - fit)};
}

std::pair<cplx, double> fit_scaled_projector(const Mat& X, const Vec& alpha, const Mat& sigma) {
  Mat P = (alpha * alpha.transpose()) * sigma;
  double nrm = P.squaredNorm();
  require(nrm > 0.0, ErrorCode::InvalidArgument, "alpha must be nonzero");
  cplx c = (P.conjugate().cwiseProduct(X)).sum() / nrm;
  return {c, max_abs(X - c * P)};
}

std::vector<TyurinPoint> extract_tyurin(const AlgebraConfig& config,
                                        const RationalMatrixFunction& value,
                                        const std::vector<TyurinPoint>& support) {
  std::vector<TyurinPoint> out;
  out.reserve(support.size());
  for (const auto& t : support) {
    MatrixLaurentSeries s = value.expand_at(SpherePoint::finite(t.z), 1);
    TyurinPoint r;
    r.z = t.z;
    r.alpha = t.alpha;
    r.beta = fit_pair_structure(s.coeff(-1), t.alpha, config.eps, config.sigma).first;
    double a2 = t.alpha.squaredNorm();
    r.kappa = (t.alpha.adjoint() * s.coeff(0) * t.alpha)(0, 0) / a2;
    r.nu = config.nu_free ? fit_scaled_projector(s.coeff(-2), t.alpha, config.sigma).first
                          : cplx(0, 0);
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Commutator and cocycle

LaxOperator commutator(const LaxOperator& a, const LaxOperator& b) {
  require(a.config.flavor == b.config.flavor && a.config.n == b.config.n,
          ErrorCode::InvalidArgument, "commutator needs identical algebra configs");
  require(a.tyurin.size() == b.tyurin.size(), ErrorCode::InvalidArgument,
          "commutator needs shared Tyurin support");
  for (size_t i = 0; i < a.tyurin.size(); ++i) {
    require(std::abs(a.tyurin[i].z - b.tyurin[i].z) < 1e-10, ErrorCode::InvalidArgument,
            "Tyurin positions differ");
    require(max_abs(a.tyurin[i].alpha - b.tyurin[i].alpha) < 1e-10, ErrorCode::InvalidArgument,
            "Tyurin alpha vectors differ");
  }

  LaxOperator out;
  out.config = a.config;
  out.value = RationalMatrixFunction::commutator(a.value, b.value);

  std::vector<PunctureSpec> merged = a.punctures;
  for (const auto& pb : b.punctures) {
    bool found = false;
    for (auto& pa : merged)
      if (pa.point.same_as(pb.point)) {
        pa.order += pb.order;
        found = true;
      }
    if (!found) merged.push_back(pb);
  }
  out.punctures = normalize_punctures(std::move(merged));
  out.tyurin = extract_tyurin(out.config, out.value, a.tyurin);
  return out;
}

cplx cocycle(const LaxOperator& a, const LaxOperator& b, const RationalMatrixFunction* theta) {
  SpherePoint inf = SpherePoint::infinity();
  int da = std::max(a.value.poly_degree(), 0);
  int db = std::max(b.value.poly_degree(), 0);
  MatrixLaurentSeries sa = a.value.expand_at(inf, db + 4);
  MatrixLaurentSeries sb = b.value.expand_at(inf, da + 4);
  cplx residue = (sa * sb.derivative()).trace().residue();
  if (theta) {
    RationalMatrixFunction c = RationalMatrixFunction::commutator(a.value, b.value);
    RationalMatrixFunction ct = c * (*theta);
    // theta stands for theta(z) dz = -w^{-2} theta dw in the chart at
    // infinity, so the w^1 coefficient carries the residue.
    residue -= (-ct.trace().expand_at(inf, 2).coeff(1)(0, 0));
  }
  return -residue;
}

// ---------------------------------------------------------------------------
// Flat phase coordinates

namespace {
int main_slot_count(const LaxOperator& L) {
  int slots = 1;  // constant term
  for (const auto& p : L.punctures) slots += p.order;
  return slots;
}
}  // namespace

int phase_dim(const LaxOperator& templ) {
  const AlgebraConfig& cfg = templ.config;
  int per_tyurin = 2 + (cfg.nu_free ? 1 : 0) + 2 * cfg.n;
  return main_slot_count(templ) * cfg.dim() +
         static_cast<int>(templ.tyurin.size()) * per_tyurin;
}

Vec constraint_residuals(const LaxOperator& L) {
  const AlgebraConfig& cfg = L.config;
  const int per = 1 + cfg.n + (cfg.isotropic_alpha ? 1 : 0) + (cfg.nu_free ? 1 : 0);
  Vec out = Vec::Zero(per * static_cast<int>(L.tyurin.size()));
  int at = 0;
  for (const auto& t : L.tyurin) {
    const MatrixLaurentSeries s = L.value.expand_at(SpherePoint::finite(t.z), 2);
    out(at++) = (t.beta.transpose() * cfg.sigma * t.alpha)(0, 0);
    out.segment(at, cfg.n) = s.coeff(0) * t.alpha - t.kappa * t.alpha;
    at += cfg.n;
    if (cfg.isotropic_alpha) out(at++) = (t.alpha.transpose() * t.alpha)(0, 0);
    if (cfg.nu_free)
      out(at++) = (t.alpha.transpose() * cfg.sigma * s.coeff(1) * t.alpha)(0, 0);
  }
  return out;
}

Vec to_coords(const LaxOperator& L) {
  const AlgebraConfig& cfg = L.config;
  Vec out(phase_dim(L));
  int at = 0;
  auto push_mat = [&](const Mat& X) {
    Vec c = cfg.algebra_coords(X);
    out.segment(at, cfg.dim()) = c;
    at += cfg.dim();
  };
  for (const auto& p : L.punctures) {
    if (p.point.at_inf) continue;
    for (int k = 1; k <= p.order; ++k) push_mat(L.value.pole_coeff(p.point.z, k));
  }
  for (const auto& p : L.punctures) {
    if (!p.point.at_inf) continue;
    for (int k = 1; k <= p.order; ++k) push_mat(L.value.poly_coeff(k));
  }
  push_mat(L.value.poly_coeff(0));
  for (const auto& t : L.tyurin) {
    out(at++) = t.z;
    out(at++) = t.kappa;
    if (cfg.nu_free) out(at++) = t.nu;
    out.segment(at, cfg.n) = t.alpha;
    at += cfg.n;
    out.segment(at, cfg.n) = t.beta;
    at += cfg.n;
  }
  return out;
}

LaxOperator from_coords(const LaxOperator& templ, const Vec& coords) {
  const AlgebraConfig& cfg = templ.config;
  require(coords.size() == phase_dim(templ), ErrorCode::InvalidArgument,
          "coordinate vector length mismatch");
  int at = 0;
  auto pull_mat = [&]() {
    Mat X = cfg.from_algebra_coords(coords.segment(at, cfg.dim()));
    at += cfg.dim();
    return X;
  };

  RationalMatrixFunction main(cfg.n);
  for (const auto& p : templ.punctures) {
    if (p.point.at_inf) continue;
    for (int k = 1; k <= p.order; ++k) main.add_pole_coeff(p.point.z, k, pull_mat());
  }
  for (const auto& p : templ.punctures) {
    if (!p.point.at_inf) continue;
    for (int k = 1; k <= p.order; ++k) main.set_poly_coeff(k, pull_mat());
  }
  main.set_poly_coeff(0, pull_mat());

  std::vector<TyurinPoint> tyurin;
  tyurin.reserve(templ.tyurin.size());
  for (size_t g = 0; g < templ.tyurin.size(); ++g) {
    TyurinPoint t;
    t.z = coords(at++);
    t.kappa = coords(at++);
    t.nu = cfg.nu_free ? coords(at++) : cplx(0, 0);
    t.alpha = coords.segment(at, cfg.n);
    at += cfg.n;
    t.beta = coords.segment(at, cfg.n);
    at += cfg.n;
    tyurin.push_back(std::move(t));
  }

  LaxOperator out;
  out.config = cfg;
  out.punctures = templ.punctures;
  out.tyurin = std::move(tyurin);
  out.value = assemble_value(cfg, main, out.tyurin);
  return out;
}

// ---------------------------------------------------------------------------
// Sampling

namespace {
Vec isotropic_vector(int n, RandomStream& rng) {
  for (int tries = 0; tries < 32; ++tries) {
    Vec a = rng.cgaussian_vec(n);
    Vec b = rng.cgaussian_vec(n);
    cplx A = (b.transpose() * b)(0, 0);
    cplx B = (a.transpose() * b)(0, 0);
    cplx C = (a.transpose() * a)(0, 0);
    if (std::abs(A) < 1e-6) continue;
    cplx t = (-B + std::sqrt(B * B - A * C)) / A;
    Vec alpha = a + t * b;
    if (alpha.norm() > 1e-3) return alpha / alpha.norm();
  }
  fail(ErrorCode::DegenerateDraw, "could not draw an isotropic vector");
}
}  // namespace

std::vector<TyurinSeed> draw_tyurin_seeds(const AlgebraConfig& config,
                                          const std::vector<PunctureSpec>& punctures,
                                          int count, RandomStream& rng) {
  require(count >= 0, ErrorCode::InvalidArgument, "negative Tyurin count");
  if (count > 0 && config.isotropic_alpha)
    require(config.n >= 4, ErrorCode::InvalidArgument,
            "orthogonal flavor needs n >= 4 for nonzero isotropic data");
  std::vector<TyurinSeed> seeds;
  for (int g = 0; g < count; ++g) {
    cplx z;
    bool placed = false;
    for (int tries = 0; tries < 64 && !placed; ++tries) {
      z = cplx(rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2));
      placed = true;
      for (const auto& p : punctures)
        if (!p.point.at_inf && std::abs(z - p.point.z) < 0.45) placed = false;
      for (const auto& s : seeds)
        if (std::abs(z - s.z) < 0.45) placed = false;
    }
    require(placed, ErrorCode::DegenerateDraw, "could not place a Tyurin point");
    TyurinSeed s;
    s.z = z;
    if (config.isotropic_alpha) {
      s.alpha = isotropic_vector(config.n, rng);
    } else {
      s.alpha = rng.cgaussian_vec(config.n);
      require(s.alpha.norm() > 1e-3, ErrorCode::DegenerateDraw, "alpha draw degenerate");
      s.alpha /= s.alpha.norm();
    }
    seeds.push_back(std::move(s));
  }
  return seeds;
}

namespace {
// Value of the main-part shape function for one coefficient slot at z.
struct MainSlot {
  bool at_inf = false;  // polynomial coefficient z^k (k = 0 means constant)
  cplx pole;            // finite pole location when !at_inf
  int k = 0;            // order: (z-pole)^{-k} or z^k
};

std::vector<MainSlot> main_slots(const std::vector<PunctureSpec>& punctures) {
  std::vector<MainSlot> slots;
  for (const auto& p : punctures) {
    if (p.point.at_inf) continue;
    for (int k = 1; k <= p.order; ++k) slots.push_back({false, p.point.z, k});
  }
  for (const auto& p : punctures) {
    if (!p.point.at_inf) continue;
    for (int k = 1; k <= p.order; ++k) slots.push_back({true, cplx(0, 0), k});
  }
  slots.push_back({true, cplx(0, 0), 0});
  return slots;
}

cplx slot_value(const MainSlot& s, cplx z) {
  return s.at_inf ? ipow(z, s.k) : ipow(z - s.pole, -s.k);
}

cplx slot_slope(const MainSlot& s, cplx z) {
  if (s.at_inf) return s.k == 0 ? cplx(0, 0) : cplx(s.k, 0) * ipow(z, s.k - 1);
  return cplx(-s.k, 0) * ipow(z - s.pole, -s.k - 1);
}

LaxOperator try_sample(const AlgebraConfig& cfg, const std::vector<PunctureSpec>& punctures,
                       const std::vector<TyurinSeed>& shared, RandomStream& rng) {
  // Tyurin data around the shared (z, alpha): beta orthogonal to sigma*alpha,
  // kappa and (SP) nu free.
  std::vector<TyurinPoint> tyurin;
  for (const auto& s : shared) {
    TyurinPoint t;
    t.z = s.z;
    t.alpha = s.alpha;
    Vec raw = rng.cgaussian_vec(cfg.n);
    Vec sa = cfg.sigma * t.alpha;
    cplx overlap = (raw.transpose() * sa)(0, 0);
    t.beta = raw - (overlap / sa.squaredNorm()) * sa.conjugate();
    t.kappa = rng.cgaussian();
    t.nu = cfg.nu_free ? rng.cgaussian() : cplx(0, 0);
    tyurin.push_back(std::move(t));
  }

  std::vector<MainSlot> slots = main_slots(punctures);
  int S = static_cast<int>(slots.size());
  int D = cfg.dim();
  Vec x0(S * D);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < D; ++a) x0(s * D + a) = rng.cgaussian();

  if (!tyurin.empty()) {
    // Fixed contribution of the structured Tyurin parts to the regular value
    // and the first Taylor coefficient at each Tyurin position.
    RationalMatrixFunction typarts = assemble_value(cfg, RationalMatrixFunction(cfg.n), tyurin);
    int G = static_cast<int>(tyurin.size());
    int rows = G * cfg.n + (cfg.nu_free ? G : 0);
    Mat A = Mat::Zero(rows, S * D);
    Vec rhs = Vec::Zero(rows);

    for (int g = 0; g < G; ++g) {
      const TyurinPoint& t = tyurin[static_cast<size_t>(g)];
      MatrixLaurentSeries fixed = typarts.expand_at(SpherePoint::finite(t.z), 2);
      Vec fixed_va = fixed.coeff(0) * t.alpha;
      for (int i = 0; i < cfg.n; ++i) rhs(g * cfg.n + i) = t.kappa * t.alpha(i) - fixed_va(i);
      for (int s = 0; s < S; ++s) {
        cplx phi = slot_value(slots[static_cast<size_t>(s)], t.z);
        for (int a = 0; a < D; ++a) {
          Vec ba = cfg.basis[static_cast<size_t>(a)] * t.alpha;
          for (int i = 0; i < cfg.n; ++i) A(g * cfg.n + i, s * D + a) = phi * ba(i);
        }
      }
      if (cfg.nu_free) {
        int row = G * cfg.n + g;
        Vec sa = cfg.sigma.transpose() * t.alpha;  // alpha^t sigma X alpha = sa^t X alpha
        rhs(row) = -(t.alpha.transpose() * cfg.sigma * fixed.coeff(1) * t.alpha)(0, 0);
        for (int s = 0; s < S; ++s) {
          cplx dphi = slot_slope(slots[static_cast<size_t>(s)], t.z);
          for (int a = 0; a < D; ++a)
            A(row, s * D + a) =
                dphi * (sa.transpose() * cfg.basis[static_cast<size_t>(a)] * t.alpha)(0, 0);
        }
      }
    }

    Eigen::CompleteOrthogonalDecomposition<Mat> cod(A);
    Vec delta = cod.solve(rhs - A * x0);
    require(max_abs(A * (x0 + delta) - rhs) < 1e-9, ErrorCode::DegenerateDraw,
            "eigenvector matching system degenerate");
    x0 += delta;
  }

  RationalMatrixFunction main(cfg.n);
  main.set_poly_coeff(0, Mat::Zero(cfg.n, cfg.n));
  for (int s = 0; s < S; ++s) {
    Mat X = cfg.from_algebra_coords(x0.segment(s * D, D));
    const MainSlot& sl = slots[static_cast<size_t>(s)];
    if (sl.at_inf)
      main.add_poly_coeff(sl.k, X);
    else
      main.add_pole_coeff(sl.pole, sl.k, X);
  }

  LaxOperator out;
  out.config = cfg;
  out.punctures = punctures;
  out.tyurin = std::move(tyurin);
  out.value = assemble_value(cfg, main, out.tyurin);
  return out;
}
}  // namespace

LaxOperator sample_lax_with(const AlgebraConfig& config,
                            const std::vector<PunctureSpec>& punctures,
                            const std::vector<TyurinSeed>& shared, RandomStream& rng,
                            int max_retries) {
  std::vector<PunctureSpec> ps = normalize_punctures(punctures);
  for (const auto& s : shared)
    for (const auto& p : ps)
      require(p.point.at_inf || std::abs(s.z - p.point.z) > 1e-6, ErrorCode::InvalidArgument,
              "Tyurin position collides with a puncture");
  for (int attempt = 0; attempt < max_retries; ++attempt) {
    try {
      LaxOperator L = try_sample(config, ps, shared, rng);
      if (validate_lax(L).ok()) return L;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateDraw) throw;
    }
  }
  fail(ErrorCode::DegenerateDraw, "sampling failed after retries");
}

LaxOperator sample_lax(const AlgebraConfig& config, const std::vector<PunctureSpec>& punctures,
                       int tyurin_count, RandomStream& rng, int max_retries) {
  std::vector<PunctureSpec> ps = normalize_punctures(punctures);
  for (int attempt = 0; attempt < max_retries; ++attempt) {
    try {
      std::vector<TyurinSeed> seeds = draw_tyurin_seeds(config, ps, tyurin_count, rng);
      return sample_lax_with(config, ps, seeds, rng, 1);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateDraw) throw;
    }
  }
  fail(ErrorCode::DegenerateDraw, "sampling failed after retries");
}

}  // namespace laxflow
