#ifndef LAXFLOW_ALGEBRA_HPP
#define LAXFLOW_ALGEBRA_HPP

#include <string>
#include <utility>
#include <vector>

#include "laxflow/rational.hpp"

namespace laxflow {

enum class Flavor { GL, SL, SO, SP };

const char* flavor_name(Flavor f);
Flavor flavor_from_name(const std::string& s);

// One classical matrix Lie algebra together with the parameters that shape
// the constrained pole data: the symmetry sign eps (0 for GL/SL, -1 for SO,
// +1 for SP), whether the order-2 pole coefficient nu is allowed (SP only),
// the bilinear form sigma (identity except SP), and a Frobenius-orthonormal
// basis of the algebra used as the flat coordinate frame.
struct AlgebraConfig {
  Flavor flavor = Flavor::GL;
  int n = 0;
  double eps = 0.0;
  bool nu_free = false;
  bool isotropic_alpha = false;  // SO: alpha^t alpha = 0 required
  Mat sigma;
  Mat sigma_inv;
  std::vector<Mat> basis;

  int dim() const { return static_cast<int>(basis.size()); }

  // Coordinates of X in the orthonormal basis (exact for X in the algebra).
  Vec algebra_coords(const Mat& X) const;
  Mat from_algebra_coords(const Vec& c) const;
  Mat project(const Mat& X) const;
  double off_algebra(const Mat& X) const;  // max-abs of X minus its projection
};

AlgebraConfig algebra_config(Flavor flavor, int n);

struct PunctureSpec {
  SpherePoint point;
  int order = 1;
};

// Sorts finite punctures by (Re, Im) with infinity last; rejects duplicates
// and non-positive orders.
std::vector<PunctureSpec> normalize_punctures(std::vector<PunctureSpec> punctures);

// Constrained pole datum at one point z: the operator has
//   L = nu*a*a^t*sigma/(z-z_g)^2 + (a*b^t + eps*b*a^t)*sigma/(z-z_g) + L_0 + ...
// with b^t*sigma*a = 0 and L_0*a = kappa*a (a = alpha, b = beta, z_g = z).
struct TyurinPoint {
  cplx z{0, 0};
  Vec alpha;
  Vec beta;
  cplx kappa{0, 0};
  cplx nu{0, 0};
};

// A Lax operator: a rational matrix function together with the declared
// singularity structure it is supposed to satisfy. `value` is the source of
// truth; validate_lax measures how well it honors the declaration, so
// operator-producing operations (commutator, conjugation) stay honest.
struct LaxOperator {
  AlgebraConfig config;
  std::vector<PunctureSpec> punctures;
  std::vector<TyurinPoint> tyurin;
  RationalMatrixFunction value;
};

// Maximum declared pole order at a Tyurin point for this flavor.
int tyurin_pole_order(const AlgebraConfig& config);

// Builds the rational function from main parts (poles at punctures plus
// polynomial part) and the structured Tyurin pole parts.
RationalMatrixFunction assemble_value(const AlgebraConfig& config,
                                      const RationalMatrixFunction& main_parts,
                                      const std::vector<TyurinPoint>& tyurin);

// ---------------------------------------------------------------------------
// Validation

struct CheckItem {
  std::string name;
  double defect = 0.0;
  double threshold = 0.0;
  bool pass = true;
};

struct ValidationReport {
  std::vector<CheckItem> items;
  double scale = 0.0;  // largest coefficient magnitude of the operator

  bool ok() const;
  double max_defect() const;
  // Largest defect divided by max(1, scale); the scale-free quality number.
  double max_rel_defect() const;
  const CheckItem* find(const std::string& name) const;
};

// Measures every declared invariant of L numerically: pointwise membership of
// the value in the algebra, pole support and orders, the structured pole
// coefficients at each Tyurin point, the bilinear Tyurin constraints, and
// position distinctness. Failures are report entries, never exceptions.
ValidationReport validate_lax(const LaxOperator& L);

// ---------------------------------------------------------------------------
// Sampling

struct TyurinSeed {
  cplx z;
  Vec alpha;
};

// Draws positions distinct from the punctures and from each other, and alpha
// vectors (isotropic for SO).
std::vector<TyurinSeed> draw_tyurin_seeds(const AlgebraConfig& config,
                                          const std::vector<PunctureSpec>& punctures,
                                          int count, RandomStream& rng);

// Draws a random operator: free main parts in the algebra at each puncture,
// Tyurin data satisfying the bilinear constraints, then a minimum-norm linear
// correction of the main-part coordinates enforcing the eigenvector condition
// at every Tyurin point (and the order-1 Taylor constraint for SP). Retries
// with fresh draws when the correction system is degenerate.
LaxOperator sample_lax(const AlgebraConfig& config, const std::vector<PunctureSpec>& punctures,
                       int tyurin_count, RandomStream& rng, int max_retries = 16);

// Same, but with externally fixed Tyurin positions and alpha vectors, so that
// several operators can share them (the setting of the commutator closure).
LaxOperator sample_lax_with(const AlgebraConfig& config,
                            const std::vector<PunctureSpec>& punctures,
                            const std::vector<TyurinSeed>& shared, RandomStream& rng,
                            int max_retries = 16);

// ---------------------------------------------------------------------------
// Structured fits shared by the commutator, M-operators, and flow extraction.

// Minimizes |X - (alpha u^t + eps u alpha^t) sigma| over u; returns (u, residual).
std::pair<Vec, double> fit_pair_structure(const Mat& X, const Vec& alpha, double eps,
                                          const Mat& sigma);

// Minimizes |X - c alpha alpha^t sigma| over the scalar c; returns (c, residual).
std::pair<cplx, double> fit_scaled_projector(const Mat& X, const Vec& alpha, const Mat& sigma);

// Rebuilds the Tyurin data of `value` on a known support: keeps each (z,
// alpha), refits beta from the order -1 coefficient, kappa from the regular
// part, and nu (SP) from the order -2 coefficient.
std::vector<TyurinPoint> extract_tyurin(const AlgebraConfig& config,
                                        const RationalMatrixFunction& value,
                                        const std::vector<TyurinPoint>& support);

// ---------------------------------------------------------------------------
// Algebra operations

// Pointwise commutator [a, b]. Requires identical configs and shared Tyurin
// supports (same positions and alpha vectors); the result's punctures take
// the union with summed orders and its Tyurin data are refit from the
// product expansion. That the result satisfies the Lax constraints is the
// closure property, measured by validate_lax rather than assumed.
LaxOperator commutator(const LaxOperator& a, const LaxOperator& b);

// Central-extension pairing: minus the residue at infinity of
// tr(a * d b - [a, b] * theta), with d taken in the w = 1/z chart and theta
// a global rational function standing for the 1-form theta(z) dz (null means
// zero, a valid normalization in the Tyurin-free case).
cplx cocycle(const LaxOperator& a, const LaxOperator& b,
             const RationalMatrixFunction* theta = nullptr);

// ---------------------------------------------------------------------------
// Flat phase coordinates
//
// Layout, in order:
//   for each finite puncture (in stored order): for k = 1..m_i the
//     algebra-basis coordinates of the (z-P_i)^{-k} coefficient;
//   if infinity is a puncture: for k = 1..m_inf the coordinates of the z^k
//     coefficient;
//   the coordinates of the constant term (value at infinity);
//   for each Tyurin point (in stored order): z, kappa, nu (SP only),
//     the n entries of alpha, the n entries of beta.
// from_coords rebuilds `value` structurally from the coordinates, so the
// bilinear constraints are properties of the coordinates, not of the layout.

int phase_dim(const LaxOperator& templ);
Vec to_coords(const LaxOperator& L);
LaxOperator from_coords(const LaxOperator& templ, const Vec& coords);

// Signed residuals of the constraints that from_coords cannot absorb into
// the assembly, stacked per Tyurin point in stored order: the pairing
// beta^t sigma alpha, the n kernel entries (L_0 - kappa) alpha, the isotropy
// alpha^t alpha when the flavor declares it, and the linear-term pairing
// alpha^t sigma L_1 alpha when the order-2 coefficient is free. Members of
// the constrained family sit at zero; the map is polynomial in the phase
// coordinates, so central differences recover its exact Jacobian.
Vec constraint_residuals(const LaxOperator& L);

}  // namespace laxflow

#endif
