#ifndef LAXFLOW_HIERARCHY_HPP
#define LAXFLOW_HIERARCHY_HPP

#include <cstddef>
#include <string>
#include <vector>

#include "laxflow/algebra.hpp"

namespace laxflow {

// One member of the commuting family: the puncture it is attached to (index
// into LaxOperator::punctures), the matrix power n >= 1, and the chart
// exponent m > -m_i of the local factor w^{-m}.
struct FlowIndex {
  int puncture = 0;
  int n = 1;
  int m = 0;

  bool operator==(const FlowIndex& o) const {
    return puncture == o.puncture && n == o.n && m == o.m;
  }
};

std::string flow_label(const FlowIndex& a);

// Rejects out-of-range indices, n < 1, m <= -m_i, and even n for SO/SP
// (even powers of an SO/SP operator leave the algebra, so those flows do
// not act on the constrained space).
void require_flow(const LaxOperator& L, const FlowIndex& a);

// Structured pole data of a generator at one Tyurin point:
//   M = lambda*a*a^t*sigma/(z-z_g)^2 + (a*mu^t + eps*mu*a^t)*sigma/(z-z_g) + O(1).
struct MOperatorAux {
  cplx lambda{0, 0};
  Vec mu;
};

// Generator of one flow: poles only at the flow's puncture and the Tyurin
// points, M - w^{-m} L^n = O(1) at the puncture, structured order <= 2 parts
// at each Tyurin point. Normalization: at a finite puncture the generator is
// the strict pole part (zero polynomial part); at infinity it is the whole
// polynomial part including the constant. Constants must sit on the infinity
// side of the splitting or distinct flows stop commuting.
struct MOperator {
  RationalMatrixFunction value;
  FlowIndex flow;
  std::vector<MOperatorAux> tyurin_aux;  // parallel to L.tyurin

  // Diagnostics, relative to the local coefficient scale: expansion gap of
  // M - w^{-m} L^n below exponent 0 at the puncture, and the worst residual
  // of the structured Tyurin fits.
  double puncture_defect = 0.0;
  double structure_defect = 0.0;

  // Worst |alpha^t sigma M_1 alpha| / scale over the Tyurin points, where
  // M_1 is the Taylor coefficient of the generator at the point. For the
  // symplectic flavor sigma*M_1 is symmetric, so this quadratic form is an
  // obstruction: the flow drives the operator's own linear-term constraint
  // at rate 2|kappa| times this value, and no admissible renormalization of
  // the generator (structured pole shifts, constant shifts) can change it.
  // It vanishes identically for GL/SL (no linear-term constraint to drive)
  // and for SO (alpha^t X alpha = 0 for every antisymmetric X), and for any
  // flow whose regular remainder w^{-m} L^n - M is constant.
  double linear_term_defect = 0.0;
};

// Builds the generator from the exact principal parts of w^{-m} L^n: the
// full singular part at the flow's puncture, plus the structured least-
// squares fit of the order <= 2 parts at every Tyurin point (the matching
// conditions in closed form; rank failure of the fit surfaces in
// structure_defect rather than as an exception).
MOperator build_m_operator(const LaxOperator& L, const FlowIndex& a);

// Offsets of the phase-coordinate slots of to_coords / from_coords, so that
// callers can address individual Tyurin coordinates inside the flat vector.
struct PhaseLayout {
  int total = 0;
  int main_len = 0;  // puncture main parts + constant term
  struct TyurinSlots {
    int z = 0;
    int kappa = 0;
    int nu = -1;  // -1 when the flavor has no nu coordinate
    int alpha = 0;
    int beta = 0;
  };
  std::vector<TyurinSlots> tyurin;
};

PhaseLayout phase_layout(const LaxOperator& templ);

// The phase chart is redundant: a coordinate vector is a family member only
// when constraint_residuals vanishes, so a tangent must sit in the kernel of
// the linearized residual map. This corrects y by least squares so it does,
// loading the correction entirely on the Tyurin slots (main-part blocks pass
// through unchanged). Tyurin-free operators return y as given.
Vec constrained_tangent(const LaxOperator& L, const Vec& y, double fd_step = 1e-6);

// Random family tangent of the structure-preserving kind: the local jet at
// every puncture moves by a commutator with a random algebra-valued jet (at
// infinity the jet also drives the constant block), the Tyurin slots move
// freely, and the result passes through constrained_tangent. Tangents of
// this kind span the directions along which the two-form identities hold.
Vec sample_orbit_tangent(const LaxOperator& L, RandomStream& rng);

// Which alpha velocity accompanies the eigenvector normalization:
// Shifted uses -M_0 alpha + kappa alpha, Plain uses -M_0 alpha.
enum class AlphaDotRule { Shifted, Plain };

// The vector field of one flow in phase coordinates: main-part and constant
// velocities are the algebra coordinates of [L, M]; each Tyurin point moves
// with zdot = -mu^t sigma alpha, alpha per the rule above, and the remaining
// velocities (beta, kappa, nu) follow from the Laurent coefficients of
// [L, M] at the moving pole. projection_defect reports how well the
// structured velocities reassemble those Laurent coefficients, relative to
// the coefficient scale of [L, M].
struct FlowTangent {
  Vec coords;
  double projection_defect = 0.0;
};

FlowTangent lax_rhs(const LaxOperator& L, const MOperator& M,
                    AlphaDotRule rule = AlphaDotRule::Shifted);

// Fixed-step classical Runge-Kutta orbit of one flow. States are phase
// coordinate vectors in the layout above; `frame` is the t = 0 operator used
// to rebuild states. A stage failure stops the integration and leaves the
// partial trajectory with completed = false and the failure note in
// `diagnostic`.
struct Trajectory {
  FlowIndex flow;
  double step = 0.0;
  std::string integrator_id = "rk4";
  std::vector<double> times;
  std::vector<Vec> states;
  LaxOperator frame;

  double max_validation_defect = 0.0;  // worst validate_lax rel. defect over states
  double max_projection_defect = 0.0;  // worst lax_rhs reassembly gap seen
  bool completed = true;
  std::string diagnostic;

  LaxOperator state_operator(std::size_t i) const;
};

Trajectory integrate_flow(const LaxOperator& L0, const FlowIndex& a, double t_end, double step,
                          AlphaDotRule rule = AlphaDotRule::Shifted);

// Max-abs coordinate distance between (flow_b after flow_a) and
// (flow_a after flow_b) run from L0 for time t each, with the given step.
double flow_commutativity_defect(const LaxOperator& L0, const FlowIndex& a, const FlowIndex& b,
                                 double t, double step,
                                 AlphaDotRule rule = AlphaDotRule::Shifted);

}  // namespace laxflow

#endif
