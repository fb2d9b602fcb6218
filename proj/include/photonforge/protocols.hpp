#pragma once

#include <functional>
#include <string>
#include <vector>

#include "photonforge/cascade.hpp"
#include "photonforge/hilbert.hpp"
#include "photonforge/mode_analysis.hpp"
#include "photonforge/pulses.hpp"
#include "photonforge/trajectory.hpp"

namespace pf {

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct NumericOptions {
  int resolution = 200;  // samples per min(τ, 1/Γ)
  double tail = 20.0;    // trailing time in units of 1/Γ
  int aux_dim = -1;      // auxiliary / extra cavity dimension (−1: n+1)
};

// Runs `fn(i)` for i in [0, count) on up to `threads` workers.
void parallel_for(int count, int threads, const std::function<void(int)>& fn);

// ρ^a_{n−1,n−1} after an interaction-picture run with a Gaussian Fock-n pulse.
double subtraction_success(int n, double tau, const EmitterParams& params, const NumericOptions& opt = {});
// Same quantity from the 1-in/1-out Schrödinger cascade with a catching cavity.
double subtraction_success_cascade(int n, double tau, const EmitterParams& params, const NumericOptions& opt = {});
// Reduced input-mode state after the interaction-picture run.
StateMatrix subtraction_mode_state(int n, double tau, const EmitterParams& params, const NumericOptions& opt = {});

struct TauOptimum {
  double tau;
  double value;
  bool widened = false;
};
// Maximizes f over τ around τ_π(n) (bracket [τ_π/3, 3τ_π], widened if the
// maximum sits at an edge).
TauOptimum maximize_over_tau(int n, double gamma, const std::function<double(double)>& f, double rel_tol = 1e-3);
TauOptimum optimize_tau_sub(int n, const EmitterParams& params, const NumericOptions& opt = {});
// Optimum of the truncated 3×3 model's subtraction probability.
TauOptimum optimize_tau_truncated(int n, double gamma, const NumericOptions& opt = {});

struct AdditionResult {
  double P_a;
  double tau;
  double oracle_error;  // two-mode emission oracle
  JumpResult jump;
};
AdditionResult addition_success(int n, double tau, const EmitterParams& params, const NumericOptions& opt = {});

struct FockStep {
  int n;
  double tau;
  double P_s;
  double P_a;
  double cumulative;
};
struct FockCascadeResult {
  std::vector<FockStep> steps;
  double P_M = 1.0;
};
FockCascadeResult fock_cascade(int M, const EmitterParams& params, const NumericOptions& opt = {}, int threads = 1);

struct ScalingFit {
  double beta;
  double prefactor;
  int n_lo, n_hi;
  double residual;  // RMS log-log residual
  int points;
};
ScalingFit scaling_fit(const std::vector<double>& ns, const std::vector<double>& failures);

struct ModeSplitting {
  double tau;
  int n;
  std::vector<double> nbar_exact;      // KL occupations of the exact G1
  std::vector<double> nbar_truncated;  // truncated-model covariance eigenvalues
  double emitted;                      // Σ_k w_k G1(t_k,t_k)
  double overlap_phi_a;                // |⟨φ_1, φ_a⟩|²
  ModeDecomposition exact;
  ModeDecomposition truncated;
};
// Exact decomposition from G1 sampled at resolution/`substeps` with `substeps`
// RK4 steps per sample interval.
ModeSplitting mode_splitting(int n, double tau, double gamma = 1.0, int sample_resolution = 20, int substeps = 10,
                             double tail = 20.0);

// Occupations (n̄₁, n̄₂) of the truncated model alone; cheap enough for sweeps.
std::vector<double> truncated_occupations(int n, double tau, double gamma = 1.0, int resolution = 200,
                                          double tail = 20.0);

struct SubtractionOutcome {
  double P_s;
  StateMatrix rho_click;    // unnormalized
  StateMatrix rho_noclick;  // unnormalized
  double tau;
};

// Auxiliary dimension 3: going to 4 changes click probabilities by < 1e-8 at
// Γτ = 0.04 up to n ≈ 16, whereas 2 → 3 changes them by up to ~4e-5.
struct HeraldOptions {
  int resolution = 200;
  int aux_dim = 3;
};
SubtractionOutcome heralded_subtract(const StateMatrix& rho_in, double gamma_tau, const HeraldOptions& opt = {});
SubtractionOutcome linear_subtract(const StateMatrix& rho_in, double R);

struct WignerGrid {
  Eigen::VectorXd x, p;
  Eigen::MatrixXd W;  // W(p_i, x_j): rows follow p

  double integral() const;
};
WignerGrid wigner(const StateMatrix& rho, const Eigen::VectorXd& x, const Eigen::VectorXd& p);
double negativity(const WignerGrid& w);
// Analytic Wigner function of the normalized cat |α⟩ + s|−α⟩ for real α.
double cat_wigner(double x, double p, double alpha, int sign);

struct CatRunConfig {
  int M = 6;
  double r = 1.15;
  double gamma_tau = 0.04;
  int cutoff = 0;  // 0: automatic, see auto_cutoff
  int aux_dim = 3;
  int resolution = 200;
  double phi_lo = -1.0, phi_hi = 0.0;
  int wigner_points = 481;  // negativity changes < 1e-4 on doubling
  double wigner_extent = 6.0;
};

struct CatResult {
  int cutoff;
  double phi_opt;
  double fidelity;
  double fidelity_unsqueezed;  // at φ = 0
  double success_probability;
  std::vector<double> step_probabilities;
  std::vector<double> tail_masses;
  double negativity;
  StateMatrix state;  // final normalized state after anti-squeezing
  WignerGrid wigner;
};

inline constexpr int kMaxCutoff = 400;
// Smallest even cutoff ≥ 40 whose top two levels carry < tail_tol of the squeezed
// vacuum Ŝ(r)|0⟩. Pipelines with an automatic cutoff grow it by 25% whenever a
// later step violates the same test.
int auto_cutoff(double r, double tail_tol = 1e-8);
double tail_mass(const StateMatrix& rho, int window = 2);
Vector cat_state(int dim, double alpha, int sign);
Vector squeezed_vacuum(double r, int cutoff);

// Heralding step applied repeatedly to a normalized mode state.
using Subtractor = std::function<SubtractionOutcome(const StateMatrix&)>;
CatResult cat_pipeline(const CatRunConfig& cfg);
CatResult cat_pipeline_with(const CatRunConfig& cfg, const Subtractor& sub);

}  // namespace pf
