#include "photonforge/mode_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>

namespace pf {

namespace {

// Global phase fixed so that the largest-magnitude sample is real positive.
Vector fix_phase(Vector v) {
  Eigen::Index k;
  v.cwiseAbs().maxCoeff(&k);
  if (std::abs(v(k)) > 0) v *= std::conj(v(k)) / std::abs(v(k));
  return v;
}

}  // namespace

double ModeDecomposition::total() const {
  double s = 0.0;
  for (double x : occupations) s += x;
  return s;
}

void ModeDecomposition::write_csv(std::ostream& os) const {
  if (modes.empty()) return;
  os << "t";
  for (size_t i = 0; i < modes.size(); ++i) os << ",mode" << i + 1 << "_re,mode" << i + 1 << "_im";
  os << '\n' << std::setprecision(12);
  const TimeGrid& g = modes.front().grid();
  for (int k = 0; k < g.size(); ++k) {
    os << g[k];
    for (const auto& m : modes) os << ',' << m.samples()(k).real() << ',' << m.samples()(k).imag();
    os << '\n';
  }
}

CovarianceMatrix covariance_truncated(int n, cplx c1_inf, double P) {
  if (std::abs(std::norm(c1_inf) + P - 1.0) > 1e-6)
    throw ModeAnalysisError("probability bookkeeping violated: |C1|² + P differs from 1");
  CovarianceMatrix c;
  double cross = std::sqrt(n * P);
  c.G << n * std::norm(c1_inf) + (n - 1) * P, std::conj(c1_inf) * cross, c1_inf * cross, P;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(c.G);
  c.occupations << es.eigenvalues()(1), es.eigenvalues()(0);
  c.vectors.col(0) = es.eigenvectors().col(1);
  c.vectors.col(1) = es.eigenvectors().col(0);
  return c;
}

ModeDecomposition truncated_decomposition(int n, cplx c1_inf, double P, const TemporalMode& phi_a,
                                          const TemporalMode& phi_b) {
  auto c = covariance_truncated(n, c1_inf, P);
  ModeDecomposition d;
  for (int i = 0; i < 2; ++i) {
    Vector s = std::conj(c.vectors(0, i)) * phi_a.samples() + std::conj(c.vectors(1, i)) * phi_b.samples();
    d.modes.emplace_back(phi_a.grid(), fix_phase(s));
    d.occupations.push_back(c.occupations(i));
  }
  return d;
}

ModeDecomposition kl_decompose(const Matrix& G1, const TimeGrid& grid, double keep_threshold) {
  int K = grid.size();
  if (G1.rows() != K || G1.cols() != K) throw ModeAnalysisError("correlation matrix does not match the grid");
  double scale = std::max(1.0, G1.cwiseAbs().maxCoeff());
  if ((G1 - G1.adjoint()).cwiseAbs().maxCoeff() > 1e-8 * scale)
    throw ModeAnalysisError("correlation matrix is not Hermitian");
  Eigen::VectorXd sw(K);
  for (int k = 0; k < K; ++k) sw(k) = std::sqrt(grid.weights()[k]);
  Matrix A = sw.asDiagonal() * (0.5 * (G1 + G1.adjoint())) * sw.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Matrix> es(A);
  ModeDecomposition d;
  for (int i = K - 1; i >= 0; --i) {
    double lam = es.eigenvalues()(i);
    if (lam <= keep_threshold) {
      d.discarded += std::max(lam, 0.0);
      continue;
    }
    Vector v(K);
    for (int k = 0; k < K; ++k) v(k) = std::conj(es.eigenvectors()(k, i)) / sw(k);
    d.modes.emplace_back(grid, fix_phase(v));
    d.occupations.push_back(lam);
  }
  return d;
}

PhotonStatistics photon_statistics(const StateMatrix& rho_a) {
  const Matrix& m = rho_a.matrix();
  PhotonStatistics s;
  double off = 0.0;
  for (int i = 0; i < m.rows(); ++i) {
    s.probabilities.push_back(m(i, i).real());
    for (int j = 0; j < m.cols(); ++j)
      if (i != j) off += std::norm(m(i, j));
  }
  s.leakage = std::sqrt(off);
  return s;
}

}  // namespace pf
