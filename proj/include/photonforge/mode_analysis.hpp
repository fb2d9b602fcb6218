#pragma once

#include <ostream>
#include <vector>

#include "photonforge/hilbert.hpp"
#include "photonforge/pulses.hpp"

namespace pf {

class ModeAnalysisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Truncated-model covariance over the modes (a, b).
struct CovarianceMatrix {
  Eigen::Matrix2cd G;
  Eigen::Vector2d occupations;  // descending
  Eigen::Matrix2cd vectors;     // columns: eigenvectors in the (a, b) basis
};

struct ModeDecomposition {
  std::vector<TemporalMode> modes;
  std::vector<double> occupations;  // descending
  double discarded = 0.0;           // occupation mass of modes below the retention cutoff

  double total() const;
  void write_csv(std::ostream& os) const;
};

struct PhotonStatistics {
  std::vector<double> probabilities;
  double leakage = 0.0;  // Frobenius norm of the off-diagonal part
};

// G = [⟨â†â⟩ ⟨â†b̂⟩; ⟨b̂†â⟩ ⟨b̂†b̂⟩] for the output C1|n,0⟩ + √P|n−1,1⟩.
CovarianceMatrix covariance_truncated(int n, cplx c1_inf, double P);
// Occupations and modes implied by the truncated model for modes φ_a, φ_b.
ModeDecomposition truncated_decomposition(int n, cplx c1_inf, double P, const TemporalMode& phi_a,
                                          const TemporalMode& phi_b);
ModeDecomposition kl_decompose(const Matrix& G1, const TimeGrid& grid, double keep_threshold = 1e-6);
PhotonStatistics photon_statistics(const StateMatrix& rho_a);

}  // namespace pf
