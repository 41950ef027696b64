#include "laxflow/spectral.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace laxflow {

namespace {

// det(lambda I - A) = sum_k a[k] lambda^k with a[n] = 1, by the trace
// recurrence a[n-k] = -tr(A M_{k-1}) / k, M_k = A M_{k-1} + a[n-k] I.
std::vector<cplx> monic_char_poly(const Mat& A) {
  int n = static_cast<int>(A.rows());
  std::vector<cplx> a(static_cast<size_t>(n) + 1);
  a[static_cast<size_t>(n)] = cplx(1, 0);
  Mat M = Mat::Identity(n, n);
  for (int k = 1; k <= n; ++k) {
    Mat AM = A * M;
    cplx c = -AM.trace() / static_cast<double>(k);
    a[static_cast<size_t>(n - k)] = c;
    M = AM + c * Mat::Identity(n, n);
  }
  return a;
}

struct ScalarBasisFn {
  bool at_inf = false;  // z^j when true, (z - pole)^{-j} otherwise
  cplx pole;
  int j = 0;

  cplx eval(cplx z) const { return at_inf ? ipow(z, j) : ipow(z - pole, -j); }
};

std::vector<cplx> curve_sample_points(const LaxOperator& L, double ring) {
  std::vector<cplx> sing;
  for (const auto& pp : L.value.poles()) sing.push_back(pp.location);

  int max_basis = 1;
  for (const auto& p : L.punctures) max_basis += L.config.n * p.order;
  int on_ring = 2 * max_basis + 17;

  std::vector<cplx> pts;
  for (int s = 0; s < on_ring; ++s) {
    double th = 2.0 * M_PI * s / on_ring + 0.23;
    pts.push_back(ring * cplx(std::cos(th), std::sin(th)));
  }
  for (const auto& t : L.tyurin) {
    double d = 1e30;
    for (cplx s : sing)
      if (std::abs(s - t.z) > 1e-9) d = std::min(d, std::abs(s - t.z));
    if (d > 1e29) d = 1.0;
    double rho = 0.12 * d;
    for (int s = 0; s < 8; ++s) {
      double th = 2.0 * M_PI * s / 8 + 0.41;
      pts.push_back(t.z + rho * cplx(std::cos(th), std::sin(th)));
    }
  }
  return pts;
}
}  // namespace

cplx SpectralCurveData::evaluate(cplx z, cplx lambda) const {
  cplx acc(0, 0);
  for (int k = 0; k <= n; ++k) acc += coeffs[static_cast<size_t>(k)].evaluate(z)(0, 0) * ipow(lambda, k);
  return acc;
}

SpectralCurveData spectral_curve(const LaxOperator& L) {
  const int n = L.config.n;
  SpectralCurveData out;
  out.n = n;
  out.coeffs.assign(static_cast<size_t>(n) + 1, RationalMatrixFunction(1));
  cplx top((n % 2 == 0) ? 1 : -1, 0);
  out.coeffs[static_cast<size_t>(n)].set_poly_coeff(0, top * Mat::Identity(1, 1));

  double base_ring = 2.0;
  for (const auto& pp : L.value.poles())
    base_ring = std::max(base_ring, std::abs(pp.location) * 1.4 + 1.0);

  std::string last_error;
  for (int attempt = 0; attempt < 2; ++attempt) {
    double ring = base_ring * (attempt == 0 ? 1.0 : 1.6);
    std::vector<cplx> pts = curve_sample_points(L, ring);
    int S = static_cast<int>(pts.size());

    // characteristic coefficients at every sample, r_k = (-1)^n a_k
    Mat rhs_all(S, n);
    double rhs_scale = 1.0;
    for (int s = 0; s < S; ++s) {
      std::vector<cplx> a = monic_char_poly(L.value.evaluate(pts[static_cast<size_t>(s)]));
      for (int k = 0; k < n; ++k) {
        rhs_all(s, k) = top * a[static_cast<size_t>(k)];
        rhs_scale = std::max(rhs_scale, std::abs(rhs_all(s, k)));
      }
    }

    bool good = true;
    double worst = 0.0;
    for (int k = 0; k < n && good; ++k) {
      std::vector<ScalarBasisFn> basis;
      basis.push_back({true, cplx(0, 0), 0});
      for (const auto& p : L.punctures) {
        int bound = (n - k) * p.order;
        for (int j = 1; j <= bound; ++j) {
          if (p.point.at_inf)
            basis.push_back({true, cplx(0, 0), j});
          else
            basis.push_back({false, p.point.z, j});
        }
      }
      int B = static_cast<int>(basis.size());
      Mat A(S, B);
      for (int s = 0; s < S; ++s)
        for (int b = 0; b < B; ++b) A(s, b) = basis[static_cast<size_t>(b)].eval(pts[static_cast<size_t>(s)]);
      Vec col_scale(B);
      for (int b = 0; b < B; ++b) {
        double m = max_abs(Vec(A.col(b)));
        col_scale(b) = cplx(m > 0 ? 1.0 / m : 1.0, 0);
        A.col(b) *= col_scale(b);
      }
      Eigen::ColPivHouseholderQR<Mat> qr(A);
      if (qr.rank() < B) {
        good = false;
        last_error = "interpolation basis rank-deficient";
        break;
      }
      Vec y = qr.solve(rhs_all.col(k));
      worst = std::max(worst, max_abs(Vec(A * y - rhs_all.col(k))) / rhs_scale);
      if (worst > 1e-8) {
        good = false;
        last_error = "interpolation residual too large";
        break;
      }
      RationalMatrixFunction& rk = out.coeffs[static_cast<size_t>(k)];
      rk = RationalMatrixFunction(1);
      for (int b = 0; b < B; ++b) {
        Mat v = y(b) * col_scale(b) * Mat::Identity(1, 1);
        const ScalarBasisFn& f = basis[static_cast<size_t>(b)];
        if (f.at_inf)
          rk.add_poly_coeff(f.j, v);
        else
          rk.add_pole_coeff(f.pole, f.j, v);
      }
    }
    if (good) {
      out.fit_residual = worst;
      return out;
    }
  }
  fail(ErrorCode::InterpolationIllConditioned, last_error);
}

SpectralCurveData spectral_curve_by_traces(const LaxOperator& L) {
  const int n = L.config.n;
  SpectralCurveData out;
  out.n = n;
  out.coeffs.assign(static_cast<size_t>(n) + 1, RationalMatrixFunction(1));

  std::vector<RationalMatrixFunction> p(static_cast<size_t>(n) + 1, RationalMatrixFunction(1));
  RationalMatrixFunction pw = RationalMatrixFunction::constant(Mat::Identity(n, n));
  for (int i = 1; i <= n; ++i) {
    pw = pw * L.value;
    p[static_cast<size_t>(i)] = pw.trace();
  }
  std::vector<RationalMatrixFunction> e(static_cast<size_t>(n) + 1, RationalMatrixFunction(1));
  e[0] = RationalMatrixFunction::constant(Mat::Identity(1, 1));
  for (int j = 1; j <= n; ++j) {
    RationalMatrixFunction acc(1);
    for (int i = 1; i <= j; ++i) {
      RationalMatrixFunction term = e[static_cast<size_t>(j - i)] * p[static_cast<size_t>(i)];
      acc += term * cplx((i % 2 == 1) ? 1.0 : -1.0, 0);
    }
    e[static_cast<size_t>(j)] = acc * cplx(1.0 / j, 0);
  }
  for (int j = 0; j <= n; ++j)
    out.coeffs[static_cast<size_t>(n - j)] =
        e[static_cast<size_t>(j)] * cplx(((n + j) % 2 == 0) ? 1.0 : -1.0, 0);
  return out;
}

// ---------------------------------------------------------------------------
// Contour eigen-expansion

namespace {

double contour_distance(const LaxOperator& L, const SpherePoint& base) {
  double d = 1e30;
  for (const auto& pp : L.value.poles()) {
    if (base.at_inf) {
      if (std::abs(pp.location) > 1e-9) d = std::min(d, 1.0 / std::abs(pp.location));
    } else if (std::abs(pp.location - base.z) > 1e-9) {
      d = std::min(d, std::abs(pp.location - base.z));
    }
  }
  return d > 1e29 ? 2.0 : d;
}

std::vector<std::vector<int>> all_permutations(int n) {
  std::vector<int> idx(static_cast<size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<std::vector<int>> out;
  do {
    out.push_back(idx);
  } while (std::next_permutation(idx.begin(), idx.end()));
  return out;
}

// Fourier coefficient c_k of f(w) = sum c_k w^k from uniform samples on |w|=r.
cplx fourier_coeff(const std::vector<cplx>& f, double r, int k) {
  int m = static_cast<int>(f.size());
  cplx acc(0, 0);
  for (int j = 0; j < m; ++j) {
    double th = -2.0 * M_PI * j * k / m;
    acc += f[static_cast<size_t>(j)] * cplx(std::cos(th), std::sin(th));
  }
  return acc / (static_cast<double>(m) * ipow(cplx(r, 0), k));
}

bool lex_less(cplx a, cplx b) {
  if (a.real() != b.real()) return a.real() < b.real();
  return a.imag() < b.imag();
}

struct BranchLead {
  int exponent;
  cplx coeff;
};

}  // namespace

namespace {

// One expansion attempt at a fixed contour radius. Throws when the contour
// is unusable (branch exchange, collisions, degenerate normalization); the
// caller shrinks the radius and retries, because every one of these can be
// caused by a discriminant zero lying between the base point and the contour.
EigenExpansion eigen_expand_at_radius(const LaxOperator& L, const SpherePoint& base, int lo,
                                      int hi, int k_floor, double radius,
                                      const EigenOptions& options,
                                      const std::vector<std::vector<int>>& perms) {
  const AlgebraConfig& cfg = L.config;
  const int n = cfg.n;
  const int m = options.samples;
  const int h = n / 2;

  EigenExpansion out;
  out.base = base;
  out.contour_radius = radius;

  // dense eigen-solves around the contour
  std::vector<Vec> lam(static_cast<size_t>(m));
  std::vector<Mat> rows(static_cast<size_t>(m));
  for (int j = 0; j < m; ++j) {
    double th = 2.0 * M_PI * j / m;
    cplx w = radius * cplx(std::cos(th), std::sin(th));
    cplx z = base.at_inf ? cplx(1, 0) / w : base.z + w;
    Mat A = L.value.evaluate(z);
    Eigen::ComplexEigenSolver<Mat> es(A, true);
    require(es.info() == Eigen::Success, ErrorCode::EigenvalueCollision,
            "dense eigenvalue solve failed on the contour");
    lam[static_cast<size_t>(j)] = es.eigenvalues();
    rows[static_cast<size_t>(j)] = es.eigenvectors().partialPivLu().inverse();

    double scale = max_abs(lam[static_cast<size_t>(j)]) + 1e-300;
    for (int i = 0; i < n; ++i)
      for (int k = i + 1; k < n; ++k)
        require(std::abs(lam[static_cast<size_t>(j)](i) - lam[static_cast<size_t>(j)](k)) >=
                    options.gap_threshold * scale,
                ErrorCode::EigenvalueCollision, "eigenvalue gap below threshold on the contour");
  }

  // branch matching sample to sample; loop closure must be the identity
  auto best_perm = [&](const Vec& prev, const Vec& cur) {
    double best = 1e300;
    const std::vector<int>* arg = nullptr;
    for (const auto& p : perms) {
      double cost = 0.0;
      for (int i = 0; i < n; ++i) cost += std::abs(cur(p[static_cast<size_t>(i)]) - prev(i));
      if (cost < best) {
        best = cost;
        arg = &p;
      }
    }
    return *arg;
  };
  auto apply_perm = [&](int j, const std::vector<int>& p) {
    Vec l = lam[static_cast<size_t>(j)];
    Mat r = rows[static_cast<size_t>(j)];
    for (int i = 0; i < n; ++i) {
      lam[static_cast<size_t>(j)](i) = l(p[static_cast<size_t>(i)]);
      rows[static_cast<size_t>(j)].row(i) = r.row(p[static_cast<size_t>(i)]);
    }
  };

  for (int j = 1; j < m; ++j)
    apply_perm(j, best_perm(lam[static_cast<size_t>(j - 1)], lam[static_cast<size_t>(j)]));
  std::vector<int> closure = best_perm(lam[static_cast<size_t>(m - 1)], lam[0]);
  bool closed = true;
  for (int i = 0; i < n; ++i) closed = closed && closure[static_cast<size_t>(i)] == i;

  if (!closed) {
    if (!options.tolerate_branch_defect) {
      std::string perm;
      for (int i = 0; i < n; ++i) perm += std::to_string(closure[static_cast<size_t>(i)]);
      fail(ErrorCode::BranchMatchFailed,
           "eigenvalue branches exchange around the contour (closure " + perm + ")");
    }
    out.branch_defect = true;
    for (int j = 0; j < m; ++j) {
      std::vector<int> idx(static_cast<size_t>(n));
      std::iota(idx.begin(), idx.end(), 0);
      std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
        return lex_less(lam[static_cast<size_t>(j)](a), lam[static_cast<size_t>(j)](b));
      });
      apply_perm(j, idx);
    }
  }

  // leading series coefficient per branch fixes the global row order
  auto branch_samples = [&](int i) {
    std::vector<cplx> f(static_cast<size_t>(m));
    for (int j = 0; j < m; ++j) f[static_cast<size_t>(j)] = lam[static_cast<size_t>(j)](i);
    return f;
  };
  std::vector<BranchLead> lead(static_cast<size_t>(n));
  {
    // A coefficient counts as the branch lead when it clears the Fourier
    // noise floor for its own order, eps * max|samples| * r^-k; a single
    // window-wide threshold would fail near a close branch point, where the
    // legitimate Taylor tail grows like (convergence radius)^-k and dwarfs
    // the low-order coefficients.
    for (int i = 0; i < n; ++i) {
      std::vector<cplx> f = branch_samples(i);
      double fmax = 0.0;
      for (const cplx& v : f) fmax = std::max(fmax, std::abs(v));
      lead[static_cast<size_t>(i)] = {hi + 1, cplx(0, 0)};
      for (int k = k_floor; k <= hi; ++k) {
        cplx c = fourier_coeff(f, radius, k);
        if (std::abs(c) > 1e-10 * fmax * std::pow(radius, -k) + 1e-300) {
          lead[static_cast<size_t>(i)] = {k, c};
          break;
        }
      }
    }
    if (!out.branch_defect) {
      for (int i = 0; i < n; ++i)
        for (int k = i + 1; k < n; ++k)
          if (lead[static_cast<size_t>(i)].exponent == lead[static_cast<size_t>(k)].exponent) {
            const double sep = std::abs(lead[static_cast<size_t>(i)].coeff -
                                        lead[static_cast<size_t>(k)].coeff);
            const double gscale = std::max(std::abs(lead[static_cast<size_t>(i)].coeff),
                                           std::abs(lead[static_cast<size_t>(k)].coeff)) +
                                  1e-300;
            require(sep >= options.gap_threshold * gscale, ErrorCode::EigenvalueCollision,
                    "leading eigenvalue coefficients collide (order " +
                        std::to_string(lead[static_cast<size_t>(i)].exponent) + ", separation " +
                        std::to_string(sep / gscale) + " of scale)");
          }
    }
  }

  if (!out.branch_defect) {
    std::vector<int> order_perm(static_cast<size_t>(n));
    std::iota(order_perm.begin(), order_perm.end(), 0);
    auto lead_less = [&](int a, int b) {
      const BranchLead& A = lead[static_cast<size_t>(a)];
      const BranchLead& B = lead[static_cast<size_t>(b)];
      if (A.exponent != B.exponent) return A.exponent < B.exponent;
      return lex_less(A.coeff, B.coeff);
    };
    if (cfg.eps == 0.0) {
      std::stable_sort(order_perm.begin(), order_perm.end(), lead_less);
    } else {
      // split arrangement: pair branches k <-> -k, representatives first
      std::vector<bool> used(static_cast<size_t>(n), false);
      std::vector<std::pair<int, int>> pairs;
      for (int i = 0; i < n; ++i) {
        if (used[static_cast<size_t>(i)]) continue;
        used[static_cast<size_t>(i)] = true;
        int best = -1;
        double bestd = 1e300;
        for (int k = 0; k < n; ++k) {
          if (used[static_cast<size_t>(k)] ||
              lead[static_cast<size_t>(k)].exponent != lead[static_cast<size_t>(i)].exponent)
            continue;
          double d =
              std::abs(lead[static_cast<size_t>(k)].coeff + lead[static_cast<size_t>(i)].coeff);
          if (d < bestd) {
            bestd = d;
            best = k;
          }
        }
        require(best >= 0, ErrorCode::EigenvalueCollision, "eigenvalues do not form +/- pairs");
        used[static_cast<size_t>(best)] = true;
        // representative = the lexicographically greater leading coefficient
        if (lex_less(lead[static_cast<size_t>(best)].coeff, lead[static_cast<size_t>(i)].coeff))
          pairs.push_back({i, best});
        else
          pairs.push_back({best, i});
      }
      std::stable_sort(pairs.begin(), pairs.end(),
                       [&](const std::pair<int, int>& a, const std::pair<int, int>& b) {
                         return lead_less(a.first, b.first);
                       });
      for (int i = 0; i < h; ++i) {
        order_perm[static_cast<size_t>(i)] = pairs[static_cast<size_t>(i)].first;
        order_perm[static_cast<size_t>(h + i)] = pairs[static_cast<size_t>(i)].second;
      }
    }
    for (int j = 0; j < m; ++j) apply_perm(j, order_perm);
  }

  // Row normalization. Representative rows (all rows for eps = 0, the first
  // half for eps != 0) are scaled so that row * xnorm = 1, a meromorphic
  // gauge choice. Each partner row is then fixed by the pairing condition
  // against its representative; the raw per-sample scale cancels in the
  // quotient, so the result is again a meromorphic section.
  //
  // xnorm is the all-ones vector (row-sum normalization) except at a Tyurin
  // point of the eps != 0 flavors, where the rows can carry first-order poles
  // whose leading direction is alpha^t sigma. There xnorm is chosen with
  // alpha^t sigma xnorm = 0, so the scaling functional stays finite and
  // nonvanishing on every row and the structural pole orders survive; the
  // frame then differs from the structured one by an invertible holomorphic
  // diagonal gauge, which the kernel relations do not feel.
  Vec xnorm = Vec::Ones(n);
  if (cfg.eps != 0.0 && !base.at_inf) {
    for (const auto& t : L.tyurin) {
      if (std::abs(t.z - base.z) > 1e-9) continue;
      Vec s = cfg.sigma.transpose() * t.alpha;
      auto project_out = [&](const Vec& v) {
        return Vec(v - s.conjugate() * ((s.transpose() * v)(0, 0) / s.squaredNorm()));
      };
      Vec x = project_out(Vec::Ones(n));
      if (x.norm() < 1e-6) {
        Vec v(n);
        for (int i = 0; i < n; ++i) v(i) = cplx(1 + i, 0);
        x = project_out(v);
      }
      xnorm = x;
    }
  }
  const int reps = (cfg.eps == 0.0) ? n : h;
  for (int j = 0; j < m; ++j) {
    Mat& R = rows[static_cast<size_t>(j)];
    for (int i = 0; i < reps; ++i) {
      cplx s = (R.row(i) * xnorm)(0, 0);
      require(std::abs(s) > 1e-10 * R.row(i).norm() * xnorm.norm(),
              ErrorCode::NormalizationSingular,
              "eigenvector row normalization functional vanishes on the contour");
      R.row(i) /= s;
    }
    if (cfg.eps != 0.0) {
      for (int i = 0; i < h; ++i) {
        cplx p = (R.row(i) * cfg.sigma * R.row(h + i).transpose())(0, 0);
        double rscale = R.row(i).norm() * R.row(h + i).norm();
        require(std::abs(p) > 1e-12 * (rscale + 1e-300), ErrorCode::NormalizationSingular,
                "pairing with the partner row degenerates on the contour");
        // target pairing value: +1 for the symmetric form, -sigma_{i,i+h} = -1
        // for the antisymmetric one
        cplx target = (cfg.eps < 0) ? cplx(1, 0) : cplx(-1, 0);
        R.row(h + i) *= target / p;
      }
    }
  }

  std::vector<Mat> inv(static_cast<size_t>(m));
  for (int j = 0; j < m; ++j)
    inv[static_cast<size_t>(j)] = rows[static_cast<size_t>(j)].partialPivLu().inverse();

  // Fourier extraction of the three series
  auto extract = [&](const std::vector<Mat>& data) {
    MatrixLaurentSeries s(base, n, lo, hi + 1);
    std::vector<cplx> f(static_cast<size_t>(m));
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        for (int j = 0; j < m; ++j) f[static_cast<size_t>(j)] = data[static_cast<size_t>(j)](a, b);
        for (int k = lo; k <= hi; ++k) {
          Mat c = s.coeff(k);
          c(a, b) = fourier_coeff(f, radius, k);
          s.set_coeff(k, c);
        }
      }
    return s;
  };
  out.psi = extract(rows);
  out.psi_inv = extract(inv);
  {
    MatrixLaurentSeries k_s(base, n, lo, hi + 1);
    for (int i = 0; i < n; ++i) {
      std::vector<cplx> f = branch_samples(i);
      for (int k = lo; k <= hi; ++k) {
        Mat c = k_s.coeff(k);
        c(i, i) = fourier_coeff(f, radius, k);
        k_s.set_coeff(k, c);
      }
    }
    out.k_diag = k_s;
  }

  out.beta_tilde = Vec::Zero(n);
  if (!base.at_inf && cfg.eps != 0.0) {
    for (const auto& t : L.tyurin) {
      if (std::abs(t.z - base.z) > 1e-9) continue;
      Vec sa = cfg.sigma.transpose() * t.alpha;
      out.beta_tilde = cfg.eps * (out.psi.coeff(-1) * sa.conjugate()) / sa.squaredNorm();
    }
  }
  return out;
}

double series_gap(const MatrixLaurentSeries& a, const MatrixLaurentSeries& b) {
  int lo = std::max(a.min_order(), b.min_order());
  int hi = std::min(a.trunc_order(), b.trunc_order());
  double worst = 0.0;
  for (int k = lo; k < hi; ++k) worst = std::max(worst, max_abs(a.coeff(k) - b.coeff(k)));
  return worst;
}

}  // namespace

EigenExpansion eigen_expand(const LaxOperator& L, const SpherePoint& base, int order,
                            const EigenOptions& options) {
  const AlgebraConfig& cfg = L.config;
  const int n = cfg.n;
  require(order >= 0, ErrorCode::InvalidArgument, "expansion order must be >= 0");
  require(options.samples >= 16, ErrorCode::InvalidArgument, "too few contour samples");
  require(cfg.eps == 0.0 || n % 2 == 0, ErrorCode::InvalidArgument,
          "split pairing needs even dimension");

  // Structural order floors. At a puncture of order m the eigenvalue
  // branches have poles of order at most m while the normalized eigenvector
  // rows and their inverse matrix are regular; at a Tyurin point the
  // spectral invariants are holomorphic (the pole is a gauge artifact), the
  // rows carry at most a simple pole for the split flavors, and the inverse
  // frame carries one for every flavor. Everything extracted below these
  // floors must vanish; a clean residue there certifies that the contour
  // does not enclose a discriminant zero, which no on-circle identity can
  // detect (sampled values on the circle satisfy every pointwise relation
  // whether or not the Fourier data is a Laurent expansion).
  int k_floor = 0, psi_floor = 0, psi_inv_floor = 0;
  for (const PunctureSpec& P : L.punctures)
    if (P.point.same_as(base, 1e-9)) k_floor = -P.order;
  if (!base.at_inf)
    for (const TyurinPoint& t : L.tyurin)
      if (std::abs(t.z - base.z) <= 1e-9) {
        psi_floor = (cfg.eps != 0.0) ? -1 : 0;
        psi_inv_floor = -1;
      }
  const int lo = std::min({k_floor, psi_floor, psi_inv_floor}) - 2;
  const int hi = order;  // highest exponent included

  const MatrixLaurentSeries Lser = L.value.expand_at(base, hi + 1);
  const std::vector<std::vector<int>> perms = all_permutations(n);

  auto certify = [&](const MatrixLaurentSeries& s, int floor, const char* what) {
    const double scale = 1.0 + s.max_abs_coeff();
    for (int k = s.min_order(); k < floor; ++k)
      require(max_abs(s.coeff(k)) <= options.certificate_tol * scale,
              ErrorCode::BranchMatchFailed,
              std::string(what) + " (order " + std::to_string(k) + ", magnitude " +
                  std::to_string(max_abs(s.coeff(k)) / scale) + " of scale)");
  };
  auto trim = [&](const MatrixLaurentSeries& s, int floor) {
    MatrixLaurentSeries out(base, n, floor, s.trunc_order());
    for (int k = floor; k < s.trunc_order(); ++k) out.set_coeff(k, s.coeff(k));
    return out;
  };

  // Poles of L bound the first contour radius, but eigenvalue branch points
  // (discriminant zeros) can lie anywhere; only the extracted coefficients
  // themselves reveal whether the contour encloses one. Shrink until the
  // eigen identities hold at coefficient level.
  const double radius0 = options.contour_scale * contour_distance(L, base);
  std::string attempts_log;
  ErrorCode last_code = ErrorCode::BranchMatchFailed;
  for (int attempt = 0; attempt < 10; ++attempt) {
    double radius = radius0 * std::pow(0.6, attempt);
    try {
      EigenExpansion out = eigen_expand_at_radius(L, base, lo, hi, k_floor, radius, options, perms);
      if (!out.branch_defect) {
        certify(out.k_diag, k_floor, "eigenvalue coefficients below the structural floor");
        certify(out.psi, psi_floor, "frame coefficients below the structural floor");
        certify(out.psi_inv, psi_inv_floor, "inverse frame coefficients below the structural floor");
        out.k_diag = trim(out.k_diag, k_floor);
        out.psi = trim(out.psi, psi_floor);
        out.psi_inv = trim(out.psi_inv, psi_inv_floor);
        MatrixLaurentSeries lhs = out.psi * Lser;
        MatrixLaurentSeries rhs = out.k_diag * out.psi;
        double scale = 1.0 + std::max(lhs.max_abs_coeff(), rhs.max_abs_coeff());
        require(series_gap(lhs, rhs) <= 1e-8 * scale, ErrorCode::BranchMatchFailed,
                "extracted coefficients fail the eigenvalue identity");
        MatrixLaurentSeries unit = out.psi * out.psi_inv;
        double uscale = 1.0 + unit.max_abs_coeff();
        double udefect = unit.max_abs_below(0);
        if (unit.trunc_order() > 0)
          udefect = std::max(udefect, max_abs(unit.coeff(0) - Mat::Identity(n, n)));
        require(udefect <= 1e-8 * uscale, ErrorCode::BranchMatchFailed,
                "extracted coefficients fail the inverse identity");
      }
      return out;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::EigenvalueCollision && e.code() != ErrorCode::BranchMatchFailed &&
          e.code() != ErrorCode::NormalizationSingular)
        throw;
      attempts_log += "\n  radius " + std::to_string(radius) + ": " + e.what();
      last_code = e.code();
    }
  }
  throw Error(last_code, "contour expansion failed at every radius:" + attempts_log);
}

std::pair<double, double> tyurin_kernel_defects(const EigenExpansion& E, const TyurinPoint& t,
                                                const AlgebraConfig& config) {
  double d1 = (E.psi.coeff(0) * t.alpha).norm();
  double d2 = 0.0;
  if (config.eps != 0.0)
    d2 = ((t.alpha.transpose() * config.sigma * E.psi_inv.coeff(0)).norm());
  return {d1, d2};
}

double check_k_holomorphy(const EigenExpansion& E) { return E.k_diag.max_abs_below(0); }

// ---------------------------------------------------------------------------
// Conjugation

namespace {
RationalMatrixFunction embed_scalar(const RationalMatrixFunction& s, int n) {
  require(s.dim() == 1, ErrorCode::InvalidArgument, "scalar function expected");
  RationalMatrixFunction out(n);
  Mat eye = Mat::Identity(n, n);
  for (const auto& pp : s.poles())
    for (int j = 1; j <= pp.order(); ++j)
      out.add_pole_coeff(pp.location, j, pp.coeff[static_cast<size_t>(j - 1)](0, 0) * eye);
  for (int k = 0; k <= std::max(0, s.poly_degree()); ++k)
    out.add_poly_coeff(k, s.poly_coeff(k)(0, 0) * eye);
  return out;
}

LaurentSeries scalar_series(const MatrixLaurentSeries& mser) {
  LaurentSeries s(mser.center(), mser.min_order(), mser.trunc_order());
  for (int k = mser.min_order(); k < mser.trunc_order(); ++k) s.set_coeff(k, mser.coeff(k)(0, 0));
  return s;
}

void require_pole_support(const RationalMatrixFunction& c,
                          const std::vector<PunctureSpec>& punctures) {
  for (const auto& pp : c.poles()) {
    bool ok = false;
    for (const auto& p : punctures)
      if (!p.point.at_inf && std::abs(pp.location - p.point.z) < 1e-9) ok = true;
    require(ok, ErrorCode::InvalidArgument, "coefficient pole away from the punctures");
  }
  if (c.poly_degree() > 0) {
    bool ok = false;
    for (const auto& p : punctures) ok = ok || p.point.at_inf;
    require(ok, ErrorCode::InvalidArgument, "polynomial coefficient needs the infinite puncture");
  }
}
}  // namespace

CurveCartanElement sample_cartan_element(const AlgebraConfig& config,
                                         const std::vector<PunctureSpec>& punctures,
                                         int max_power, RandomStream& rng) {
  require(max_power >= 1, ErrorCode::InvalidArgument, "max_power must be >= 1");
  CurveCartanElement h;
  h.coeffs.assign(static_cast<size_t>(max_power) + 1, RationalMatrixFunction(1));
  for (int r = 0; r <= max_power; ++r) {
    bool admissible = (config.eps == 0.0) ? true : (r % 2 == 1);
    if (!admissible) continue;
    RationalMatrixFunction& c = h.coeffs[static_cast<size_t>(r)];
    c.set_poly_coeff(0, rng.cgaussian() * Mat::Identity(1, 1));
    for (const auto& p : punctures) {
      if (p.point.at_inf)
        c.add_poly_coeff(1, rng.cgaussian() * Mat::Identity(1, 1));
      else
        c.add_pole_coeff(p.point.z, 1, rng.cgaussian() * Mat::Identity(1, 1));
    }
  }
  return h;
}

LaxOperator conjugate_diagonal(const CurveCartanElement& h, const LaxOperator& L) {
  const AlgebraConfig& cfg = L.config;
  const int n = cfg.n;
  require(!h.coeffs.empty(), ErrorCode::InvalidArgument, "empty curve element");
  int R = static_cast<int>(h.coeffs.size()) - 1;
  for (int r = 0; r <= R; ++r) {
    const RationalMatrixFunction& c = h.coeffs[static_cast<size_t>(r)];
    if (c.max_abs_coeff() == 0.0) continue;
    require_pole_support(c, L.punctures);
    require(cfg.eps == 0.0 || r % 2 == 1, ErrorCode::InvalidArgument,
            "even curve powers leave the algebra for the eps != 0 flavors");
  }

  RationalMatrixFunction value(n);
  RationalMatrixFunction trace_part(1);
  RationalMatrixFunction power = RationalMatrixFunction::constant(Mat::Identity(n, n));
  for (int r = 0; r <= R; ++r) {
    if (r > 0) power = power * L.value;
    const RationalMatrixFunction& c = h.coeffs[static_cast<size_t>(r)];
    if (c.max_abs_coeff() == 0.0) continue;
    value += embed_scalar(c, n) * power;
    if (cfg.flavor == Flavor::SL) trace_part += c * power.trace();
  }
  if (cfg.flavor == Flavor::SL) value -= embed_scalar(trace_part, n) * cplx(1.0 / n, 0);

  std::vector<PunctureSpec> punctures;
  for (const auto& p : L.punctures) {
    int ord = 0;
    for (int r = 0; r <= R; ++r) {
      const RationalMatrixFunction& c = h.coeffs[static_cast<size_t>(r)];
      if (c.max_abs_coeff() == 0.0) continue;
      int c_ord = std::max(0, c.pole_order_at(p.point));
      ord = std::max(ord, c_ord + r * p.order);
    }
    if (ord >= 1) punctures.push_back({p.point, ord});
  }

  LaxOperator out;
  out.config = cfg;
  out.punctures = normalize_punctures(std::move(punctures));
  out.tyurin = extract_tyurin(cfg, value, L.tyurin);
  out.value = std::move(value);
  return out;
}

double conjugation_series_defect(const CurveCartanElement& h, const LaxOperator& L,
                                 const LaxOperator& exact, const EigenExpansion& E) {
  const AlgebraConfig& cfg = L.config;
  const int n = cfg.n;
  MatrixLaurentSeries psi = E.psi.normalized();
  MatrixLaurentSeries psi_inv = E.psi_inv.normalized();
  MatrixLaurentSeries kd = E.k_diag.normalized();
  int T = E.psi.trunc_order();

  MatrixLaurentSeries H = MatrixLaurentSeries::constant(E.base, Mat::Zero(n, n), T);
  LaurentSeries tr(E.base, 0, T);
  bool have_trace = false;
  for (int r = 0; r < static_cast<int>(h.coeffs.size()); ++r) {
    const RationalMatrixFunction& c = h.coeffs[static_cast<size_t>(r)];
    if (c.max_abs_coeff() == 0.0) continue;
    LaurentSeries cs = scalar_series(c.expand_at(E.base, T));
    MatrixLaurentSeries kr = kd.pow(r);
    H += cs * kr;
    if (cfg.flavor == Flavor::SL) {
      LaurentSeries t2 = cs * kr.trace();
      tr = have_trace ? tr + t2 : t2;
      have_trace = true;
    }
  }
  if (have_trace)
    H -= (tr * MatrixLaurentSeries::constant(E.base, Mat::Identity(n, n), T)) *
         cplx(1.0 / n, 0);

  MatrixLaurentSeries S = psi_inv * H * psi;
  MatrixLaurentSeries X = exact.value.expand_at(E.base, S.trunc_order());
  int klo = std::max(S.min_order(), -(std::max(0, exact.value.pole_order_at(E.base)) + 2));
  int khi = std::min(S.trunc_order(), X.trunc_order());
  double defect = 0.0;
  for (int k = klo; k < khi; ++k) defect = std::max(defect, max_abs(S.coeff(k) - X.coeff(k)));
  double scale = std::max(1.0, exact.value.max_abs_coeff());
  return defect / scale;
}

}  // namespace laxflow
