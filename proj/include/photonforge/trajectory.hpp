#pragma once

#include <ostream>
#include <vector>

#include "photonforge/cascade.hpp"
#include "photonforge/pulses.hpp"

namespace pf {

class TrajectoryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// No-jump amplitudes on |n,g,0⟩, |n−1,e,0⟩, |n−1,g,1⟩.
struct TruncatedAmplitudes {
  TimeGrid grid;
  Vector c1, c2, c3;
  int n = 0;
  double emitted = 0.0;  // ∫|φ̃_b|², integrated alongside the amplitudes

  void write_csv(std::ostream& os) const;
};

struct JumpResult {
  TemporalMode raw;             // φ̃_b, unnormalized
  double probability = 0.0;     // P = ∫|φ̃_b|², at the integrator's order
  TemporalMode mode;            // φ_b, compensated and normalized
  cplx no_jump = 0.0;           // ⟨n,g,0|U_eff(∞,0)|n,g,0⟩
  double residual_norm2 = 0.0;  // ‖U_eff(∞,0)|n,g,0⟩‖² − |no_jump|²
  double other_weight = 0.0;    // 1 − |no_jump|² − P (multi-jump and other single jumps)
};

Eigen::Matrix3cd heff_truncated(int n, const TemporalMode& mode, double gamma, double t);
TruncatedAmplitudes evolve_no_jump(int n, const TemporalMode& mode, double gamma);
JumpResult jump_wavefunction(const TruncatedAmplitudes& amps, const TemporalMode& mode, double gamma);

// Forward no-jump propagation in sector n and backward adjoint propagation in
// sector n−1 of the interaction-picture space, contracted through L.
JumpResult general_jump(int n, const TemporalMode& mode, const EmitterParams& params, int aux_dim = -1);

// Normalized subtracted mode from an unnormalized jump wavefunction:
// φ_b = [φ̃_b − φ_a ∫_t^∞ φ_a* φ̃_b / sin²θ dξ] / ‖·‖.
TemporalMode compensate_dispersion(const TemporalMode& raw, const TemporalMode& mode);

struct FilterRow {
  int n;
  double probability;
  cplx overlap;   // ⟨φ_b^(1)|φ_b^(n)⟩
  cplx f;         // √P_n ⟨φ_b^(1)|φ_b^(n)⟩
  double analytic;
  bool ill_conditioned;
};

struct FilterTable {
  double gamma_tau = 0.0;
  std::vector<FilterRow> rows;

  double max_deviation(bool skip_ill_conditioned = true) const;
  void write_csv(std::ostream& os) const;
};

double analytic_filter(int n, double gamma_tau);
FilterTable filter_function(const TemporalMode& mode, double gamma, int n_max, double tau = 0.0);
double tau_pi(int n, double gamma = 1.0);

}  // namespace pf
