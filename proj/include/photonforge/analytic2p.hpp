#pragma once

#include <ostream>
#include <vector>

#include "photonforge/hilbert.hpp"

namespace pf {

class AnalyticError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// w(z) = e^{−z²} erfc(−iz).
cplx faddeeva(cplx z);

struct FrequencyGrid {
  Eigen::VectorXd omega, weights;

  // Uniform symmetric grid over ±span/τ with `points` samples.
  static FrequencyGrid symmetric(double tau, int points = 401, double span = 10.0);
  int size() const { return static_cast<int>(omega.size()); }
  double step() const { return omega(1) - omega(0); }
};

struct TwoPhotonAmplitude {
  FrequencyGrid grid;
  Matrix psi;  // Ψ(ω₁, ω₂)

  double norm2() const;
  void write_csv(std::ostream& os) const;
};

enum class TwoPhotonForm { Exact, Approximate };

TwoPhotonAmplitude two_photon_input(double tau, const FrequencyGrid& grid);
TwoPhotonAmplitude two_photon_linear(double gamma, double tau, const FrequencyGrid& grid);
TwoPhotonAmplitude two_photon_output(double gamma, double tau, const FrequencyGrid& grid, TwoPhotonForm form);

struct SchmidtResult {
  std::vector<double> lambdas;  // descending, Σ = 1
  Matrix modes;                 // columns: orthonormal under the grid quadrature
};

SchmidtResult schmidt(const TwoPhotonAmplitude& psi, int keep = 4);

// Root of 2√π β Γτ w(iΓτ/2) = 1 on τ ∈ (0, 5/Γ].
double solve_degeneracy(double beta, double gamma = 1.0);
double degeneracy_residual(double tau, double beta, double gamma = 1.0);

struct DegeneracyScan {
  double tau_opt;
  double ratio;  // λ₁/λ₂ at tau_opt
};
// Minimizes λ₁/λ₂ of the exact output over τ ∈ [lo, hi] by golden section.
DegeneracyScan exact_degeneracy(double gamma = 1.0, double lo = 0.3, double hi = 0.5, int points = 401,
                                double tol = 1e-5);

}  // namespace pf
