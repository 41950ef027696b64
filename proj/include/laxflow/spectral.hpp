#ifndef LAXFLOW_SPECTRAL_HPP
#define LAXFLOW_SPECTRAL_HPP

#include <utility>
#include <vector>

#include "laxflow/algebra.hpp"

namespace laxflow {

// Coefficients r_k(z) of det(L(z) - lambda) = sum_k r_k(z) lambda^k as scalar
// rational functions. r_n = (-1)^n; the r_k have poles only at the punctures
// (holomorphy at the Tyurin points is a consequence of the constraints and is
// measured by the interpolation residual, not assumed).
struct SpectralCurveData {
  int n = 0;
  std::vector<RationalMatrixFunction> coeffs;  // size n+1, 1x1 entries
  double fit_residual = 0.0;

  cplx evaluate(cplx z, cplx lambda) const;
};

// Sample-and-interpolate construction: characteristic coefficients evaluated
// on a ring (plus small circles around each Tyurin point) are fit to the
// pole-bounded basis ((z-P_i)^{-j} for j <= (n-k) m_i, z^j for j <= (n-k)
// m_inf). Retries once with a rescaled ring, then throws
// InterpolationIllConditioned.
SpectralCurveData spectral_curve(const LaxOperator& L);

// Independent construction through traces of powers and the symmetric-power
// recurrence, exact in rational arithmetic. Used as a cross-check oracle.
SpectralCurveData spectral_curve_by_traces(const LaxOperator& L);

// ---------------------------------------------------------------------------
// Local eigen-expansion

struct EigenOptions {
  int samples = 256;           // contour sample count (power of two not required)
  double contour_scale = 0.4;  // radius as a fraction of the distance to the
                               // nearest other singularity
  double gap_threshold = 1e-6; // relative eigenvalue-gap floor
  // A contour that encloses a discriminant zero with trivial monodromy still
  // yields circle data whose Fourier coefficients are not the Laurent
  // coefficients at the center; every identity that only sees values on the
  // circle is blind to this. The one observable symptom is nonzero extracted
  // coefficients below the structural order floor of the series, so those are
  // required to vanish to this relative tolerance before a radius is trusted.
  double certificate_tol = 1e-9;
  // Instead of failing on contour monodromy (branch exchange), fall back to a
  // per-sample lexicographic eigenvalue order. The resulting coefficients are
  // honest but carry large defects; used to measure constructed
  // counterexamples.
  bool tolerate_branch_defect = false;
};

// Left eigen-data of L as local series at `base`: psi rows are normalized
// left eigenvectors (psi L = k_diag psi), psi_inv the pointwise inverse,
// k_diag the diagonal eigenvalue matrix. Row order: eigenvalue branches
// sorted (Re, Im)-lexicographically by their leading series coefficient; for
// SO/SP the branches come in +/- pairs and are arranged split-style
// (k_1..k_h, -k_1..-k_h) so that the bilinear normalization target is the
// split pairing form. beta_tilde carries the order -1 row structure of psi
// at a Tyurin point for the eps != 0 flavors.
struct EigenExpansion {
  SpherePoint base;
  MatrixLaurentSeries psi;
  MatrixLaurentSeries psi_inv;
  MatrixLaurentSeries k_diag;
  Vec beta_tilde;
  double contour_radius = 0.0;
  bool branch_defect = false;  // set when tolerate_branch_defect engaged
};

// Contour-based expansion: dense eigen-solves on a circle around `base`,
// branch matching around the loop, per-flavor row normalization at every
// sample, then discrete Fourier extraction of the Laurent coefficients
// through exponent `order` inclusive.
//
// Flavor normalization: GL/SL rows are scaled to row-sum 1
// (NormalizationSingular when a row sum vanishes); SO rows satisfy
// psi psi^t = J (the split pairing form), SP rows satisfy
// psi sigma psi^t = -sigma, equivalently psi^t = -eps sigma psi^{-1}
// sigma^{-1}. Errors: EigenvalueCollision (leading eigenvalue gap below
// threshold), BranchMatchFailed (contour monodromy without tolerate),
// NormalizationSingular.
EigenExpansion eigen_expand(const LaxOperator& L, const SpherePoint& base, int order,
                            const EigenOptions& options = {});

// Kernel structure of the eigenvector matrix at a Tyurin point: returns
// (|psi_0 alpha|, |eps alpha^t sigma psi~_0|) where psi_0 and psi~_0 are the
// order-0 coefficients of psi and psi_inv. Both vanish for valid operators;
// the second is identically zero for eps = 0 flavors.
std::pair<double, double> tyurin_kernel_defects(const EigenExpansion& E, const TyurinPoint& t,
                                                const AlgebraConfig& config);

// Largest coefficient magnitude of k_diag at negative exponents; zero for
// expansions at points where the eigenvalues are holomorphic (in particular
// at every Tyurin point of a valid operator).
double check_k_holomorphy(const EigenExpansion& E);

// ---------------------------------------------------------------------------
// Conjugation by the eigenvector frame

// An element of the commutative function algebra of the spectral curve,
// pushed down to the diagonal frame: h(z) = sum_r coeffs[r](z) K(z)^r with
// scalar rational coefficients whose poles lie at the punctures. For the
// eps != 0 flavors only odd powers r are admissible (even powers of the
// eigenvalues leave the algebra); for SL the trace part is projected out.
struct CurveCartanElement {
  std::vector<RationalMatrixFunction> coeffs;  // 1x1; coeffs[r] multiplies K^r
};

// Random admissible element with pole order <= 1 at each puncture.
CurveCartanElement sample_cartan_element(const AlgebraConfig& config,
                                         const std::vector<PunctureSpec>& punctures,
                                         int max_power, RandomStream& rng);

// Conjugation psi^{-1} h psi computed exactly in rational arithmetic as
// sum_r coeffs[r](z) L(z)^r (minus the trace part for SL). That the result
// satisfies the Lax constraints on the same Tyurin support is the membership
// statement under test; callers measure it with validate_lax.
LaxOperator conjugate_diagonal(const CurveCartanElement& h, const LaxOperator& L);

// Series-level cross-check of the same conjugation at one expansion base:
// max coefficient difference between psi_inv * h(K) * psi and the exact
// rational result, over the common exponent window, relative to scale.
double conjugation_series_defect(const CurveCartanElement& h, const LaxOperator& L,
                                 const LaxOperator& exact, const EigenExpansion& E);

}  // namespace laxflow

#endif
