#include "photonforge/trajectory.hpp"

#include <cmath>
#include <iomanip>
#include <numbers>

namespace pf {

Eigen::Matrix3cd heff_truncated(int n, const TemporalMode& mode, double gamma, double t) {
  if (n < 1) throw TrajectoryError("photon number must be at least 1");
  auto p = mode.eval(t);
  auto f = angle_factors(p);
  double sg = std::sqrt(gamma), sn = std::sqrt(static_cast<double>(n) * gamma);
  Eigen::Matrix3cd H = Eigen::Matrix3cd::Zero();
  H(0, 1) = I * sn * std::conj(p.phi);
  H(1, 0) = -I * sn * p.phi;
  H(1, 1) = -0.5 * I * gamma;
  H(1, 2) = I * sg * p.phi * f.tan1;
  H(2, 1) = I * sg * std::conj(p.phi) * f.cot1;
  H(2, 2) = -2.0 * I * std::norm(p.phi * f.csc2);
  return H;
}

namespace {

// φ̃_b(t) = L(t)·c(t)
Eigen::RowVector3cd jump_row(const TemporalMode& mode, double gamma, double t) {
  auto p = mode.eval(t);
  return {0.0, std::sqrt(gamma), -2.0 * p.phi * angle_factors(p).csc2};
}

}  // namespace

TruncatedAmplitudes evolve_no_jump(int n, const TemporalMode& mode, double gamma) {
  const TimeGrid& g = mode.grid();
  int K = g.size();
  TruncatedAmplitudes out{g, Vector(K), Vector(K), Vector(K), n};
  Eigen::Vector3cd c(1.0, 0.0, 0.0);
  out.c1(0) = 1.0;
  out.c2(0) = out.c3(0) = 0.0;
  Eigen::Matrix3cd Hn = heff_truncated(n, mode, gamma, g[0]);
  Eigen::RowVector3cd Ln = jump_row(mode, gamma, g[0]);
  for (int k = 0; k + 1 < K; ++k) {
    double t0 = g[k], t1 = g[k + 1], h = t1 - t0;
    Eigen::Matrix3cd H0 = Hn, Hm = heff_truncated(n, mode, gamma, t0 + 0.5 * h);
    Eigen::RowVector3cd L0 = Ln, Lm = jump_row(mode, gamma, t0 + 0.5 * h);
    Hn = heff_truncated(n, mode, gamma, t1);
    Ln = jump_row(mode, gamma, t1);
    auto rate = [](const Eigen::RowVector3cd& L, const Eigen::Vector3cd& y) { return std::norm((L * y).value()); };
    Eigen::Vector3cd k1 = -I * (H0 * c);
    Eigen::Vector3cd y2 = c + 0.5 * h * k1;
    Eigen::Vector3cd k2 = -I * (Hm * y2);
    Eigen::Vector3cd y3 = c + 0.5 * h * k2;
    Eigen::Vector3cd k3 = -I * (Hm * y3);
    Eigen::Vector3cd y4 = c + h * k3;
    Eigen::Vector3cd k4 = -I * (Hn * y4);
    out.emitted += h / 6.0 * (rate(L0, c) + 2.0 * rate(Lm, y2) + 2.0 * rate(Lm, y3) + rate(Ln, y4));
    c += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    out.c1(k + 1) = c(0);
    out.c2(k + 1) = c(1);
    out.c3(k + 1) = c(2);
  }
  if (std::norm(c(1)) + std::norm(c(2)) > 1e-6)
    throw TrajectoryError("residual transient amplitude at the grid end: extend the tail");
  return out;
}

TemporalMode compensate_dispersion(const TemporalMode& raw, const TemporalMode& mode) {
  TemporalMode b = catch_transfer_adjoint(mode, raw);
  return b.normalized();
}

JumpResult jump_wavefunction(const TruncatedAmplitudes& amps, const TemporalMode& mode, double gamma) {
  const TimeGrid& g = mode.grid();
  if (!g.same_as(amps.grid)) throw TrajectoryError("amplitudes and mode use different grids");
  int K = g.size();
  Vector raw(K);
  double sg = std::sqrt(gamma);
  for (int k = 0; k < K; ++k) {
    cplx phi = mode.samples()(k);
    auto f = angle_factors({phi, mode.cumulative_at(k), mode.remaining_at(k)});
    raw(k) = sg * amps.c2(k) - 2.0 * phi * f.csc2 * amps.c3(k);
  }
  JumpResult r;
  r.raw = TemporalMode(g, raw);
  r.probability = amps.emitted;
  if (r.probability < 1e-12) throw TrajectoryError("degenerate normalization: subtraction probability below 1e-12");
  r.mode = compensate_dispersion(r.raw, mode);
  r.no_jump = amps.c1(K - 1);
  r.residual_norm2 = std::norm(amps.c2(K - 1)) + std::norm(amps.c3(K - 1));
  r.other_weight = 1.0 - std::norm(r.no_jump) - r.probability;
  return r;
}

JumpResult general_jump(int n, const TemporalMode& mode, const EmitterParams& params, int aux_dim) {
  if (n < 1) throw TrajectoryError("photon number must be at least 1");
  if (aux_dim < 0) aux_dim = n + 1;
  Generator gen = interaction_generator(mode, params, n + 1, aux_dim);
  BlockEvolver ev(gen, n - 1, n);
  const TimeGrid& g = mode.grid();
  int K = g.size();
  TensorSpace sp = gen.space;
  std::vector<int> top{n, 0, 0}, low{n - 1, 0, 0};
  Vector psi = ev.sector_vector(n, product_state(sp, top).vector());
  Vector chi = ev.sector_vector(n - 1, product_state(sp, low).vector());
  Vector psi0 = psi, chi_end = chi;

  std::vector<Vector> fwd(K);
  fwd[0] = psi;
  for (int k = 0; k + 1 < K; ++k) {
    ev.step_vectors(g[k], g[k + 1], n, {&psi});
    fwd[k + 1] = psi;
  }
  Vector raw(K);
  for (int k = K - 1; k >= 0; --k) {
    raw(k) = chi.dot(ev.channel_block(0, n, g[k]) * fwd[k]);
    if (k > 0) ev.step_vectors(g[k], g[k - 1], n - 1, {&chi}, true);
  }
  JumpResult r;
  r.raw = TemporalMode(g, raw);
  r.probability = r.raw.norm2();
  if (r.probability < 1e-12) throw TrajectoryError("degenerate normalization: subtraction probability below 1e-12");
  r.mode = compensate_dispersion(r.raw, mode);
  r.no_jump = psi0.dot(psi);
  r.residual_norm2 = psi.squaredNorm() - std::norm(r.no_jump);
  r.other_weight = 1.0 - std::norm(r.no_jump) - r.probability;
  return r;
}

double analytic_filter(int n, double gamma_tau) {
  return std::sin(std::sqrt(2.0 * std::sqrt(std::numbers::pi) * n * gamma_tau));
}

double FilterTable::max_deviation(bool skip_ill_conditioned) const {
  double m = 0.0;
  for (const auto& r : rows) {
    if (skip_ill_conditioned && r.ill_conditioned) continue;
    m = std::max(m, std::abs(r.f - r.analytic));
  }
  return m;
}

void FilterTable::write_csv(std::ostream& os) const {
  os << "n,P,overlap_re,overlap_im,f_re,f_im,analytic,ill_conditioned\n" << std::setprecision(12);
  for (const auto& r : rows)
    os << r.n << ',' << r.probability << ',' << r.overlap.real() << ',' << r.overlap.imag() << ',' << r.f.real()
       << ',' << r.f.imag() << ',' << r.analytic << ',' << (r.ill_conditioned ? 1 : 0) << '\n';
}

FilterTable filter_function(const TemporalMode& mode, double gamma, int n_max, double tau) {
  if (n_max < 1) throw TrajectoryError("n_max must be at least 1");
  FilterTable table;
  table.gamma_tau = gamma * tau;
  EmitterParams p{gamma, 0.0, 0.0};
  std::vector<JumpResult> jr;
  for (int n = 1; n <= n_max; ++n) jr.push_back(general_jump(n, mode, p));
  const TemporalMode& ref = jr.front().mode;
  for (int n = 1; n <= n_max; ++n) {
    const auto& j = jr[n - 1];
    FilterRow row;
    row.n = n;
    row.probability = j.probability;
    row.overlap = ref.overlap(j.mode);
    row.f = std::sqrt(j.probability) * row.overlap;
    row.analytic = analytic_filter(n, table.gamma_tau);
    row.ill_conditioned = j.probability < 1e-6;
    table.rows.push_back(row);
  }
  return table;
}

double tau_pi(int n, double gamma) {
  if (n < 1) throw TrajectoryError("photon number must be at least 1");
  return std::pow(std::numbers::pi, 1.5) / (8.0 * gamma * n);
}

void TruncatedAmplitudes::write_csv(std::ostream& os) const {
  os << "t,c1_re,c1_im,c2_re,c2_im,c3_re,c3_im\n" << std::setprecision(12);
  for (int k = 0; k < grid.size(); ++k)
    os << grid[k] << ',' << c1(k).real() << ',' << c1(k).imag() << ',' << c2(k).real() << ',' << c2(k).imag() << ','
       << c3(k).real() << ',' << c3(k).imag() << '\n';
}

}  // namespace pf
