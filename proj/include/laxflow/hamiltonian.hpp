#ifndef LAXFLOW_HAMILTONIAN_HPP
#define LAXFLOW_HAMILTONIAN_HPP

#include <string>
#include <vector>

#include "laxflow/hierarchy.hpp"
#include "laxflow/spectral.hpp"

namespace laxflow {

// Conserved quantity attached to one flow of the family.
struct ObservableValue {
  FlowIndex flow;
  cplx value{0, 0};
};

// H_a = -1/(n+1) * res_{P_i} tr(w^{-m} L^{n+1}) dz, taken against the same
// rational measure dz that defines kp_form. At a finite puncture dz equals the
// chart differential dw, so this is -1/(n+1) times the w^{m-1} coefficient of
// the local expansion of tr(L^{n+1}); at infinity dz = -w^{-2} dw shifts the
// extracted coefficient to w^{m+1} and flips its sign. With this pairing the
// flow of index a is the Hamiltonian vector field of H_a for kp_form.
ObservableValue hamiltonian(const LaxOperator& L, const FlowIndex& a);

// Central-difference directional derivative of H_a at L along the phase
// tangent y; the independent oracle for the Hamiltonian identity.
cplx hamiltonian_differential(const LaxOperator& L, const FlowIndex& a, const Vec& y,
                              double fd_step = 1e-6);

// Drift of one observable along a trajectory.
struct ConservationEntry {
  FlowIndex flow;
  cplx base_value{0, 0};
  double max_drift = 0.0;  // max over states of |H(state) - H(state_0)|
};

struct ConservationReport {
  std::vector<ConservationEntry> entries;
  // Drift of the characteristic-polynomial coefficients of L(z) at the fixed
  // z samples, and the largest base coefficient magnitude for scaling.
  double spectral_drift = 0.0;
  double spectral_scale = 1.0;
};

std::vector<cplx> default_spectral_samples();

ConservationReport conservation_report(const Trajectory& tr, const std::vector<FlowIndex>& flows,
                                       const std::vector<cplx>& z_samples = default_spectral_samples());

// One evaluation of the eigenvector-frame 2-form
//   Omega = tr(dPsi ^ dL Psi^{-1} - dK ^ dPsi Psi^{-1}),
//   omega = -1/2 (sum_gamma res Omega dz + sum_P res Omega dz)
// at a phase point, contracted with two tangent vectors. All delta-series
// are central differences of contour eigen-expansions at the displaced
// operators, branch-matched to the base expansion; around a Tyurin point the
// expansions ride the moving center and the fixed-z variation is recovered
// with the transport term -(delta z) d/dw of the base series. dz is the
// affine-chart form, so the infinity puncture contributes -coeff(+1) of
// Omega while finite points contribute coeff(-1). The wedge assembly is
// antisymmetric in (x, y) by construction; `asymmetry` reports the raw
// residual |omega(x,y) + omega(y,x)| actually measured.
struct TwoFormSample {
  Vec at;  // phase coordinates of the base point
  Vec x;
  Vec y;
  cplx value{0, 0};
  double fd_step = 0.0;
  double asymmetry = 0.0;
};

TwoFormSample kp_form(const LaxOperator& atL, const Vec& x, const Vec& y,
                      double fd_step = 1e-6);

// {H_a, H_b} = d/dt H_b(flow_a(L, t)) at t = 0, central difference with one
// Runge-Kutta step of size fd_step per side.
cplx poisson_bracket(const LaxOperator& L, const FlowIndex& a, const FlowIndex& b,
                     double fd_step = 1e-6);

}  // namespace laxflow

#endif
