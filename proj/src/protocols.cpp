#include "photonforge/protocols.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <iostream>
#include <mutex>
#include <numbers>
#include <thread>

#include <boost/math/tools/minima.hpp>

namespace pf {

void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
  threads = std::max(1, std::min(threads, count));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr err;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (int w = 0; w < threads; ++w)
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lk(mu);
          if (!err) err = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

namespace {

void require_photons(int n) {
  if (n < 1) throw ProtocolError("photon number must be at least 1");
}

// Grid over the pulse support only; the input mode is decoupled afterwards.
TimeGrid pulse_grid(double tau, double gamma, int resolution) {
  double h = std::min(tau, gamma > 0 ? 1.0 / gamma : tau) / resolution;
  return TimeGrid::piecewise({0.0, kPulseSpan * tau}, {h});
}

int aux_for(int n, const NumericOptions& opt) { return opt.aux_dim > 0 ? opt.aux_dim : n + 1; }

}  // namespace

StateMatrix subtraction_mode_state(int n, double tau, const EmitterParams& params, const NumericOptions& opt) {
  require_photons(n);
  TimeGrid g = pulse_grid(tau, params.gamma_wg, opt.resolution);
  TemporalMode mode = gaussian_mode(tau, g, 0.0);
  CascadeNetwork net(params, Picture::Interaction);
  net.add_input("a", mode, n + 1).set_aux_dim(aux_for(n, opt));
  TensorSpace sp = net.space();
  std::vector<int> d{n, 0, 0};
  StateMatrix rho0 = product_state(sp, d).density();
  EvolveOptions eo;
  eo.min_sector = n - 1;
  eo.max_sector = n;
  eo.check_trace = false;
  auto traj = evolve_me(net, rho0, g, eo);
  return partial_trace(traj.final_state(), {"a"});
}

double subtraction_success(int n, double tau, const EmitterParams& params, const NumericOptions& opt) {
  return subtraction_mode_state(n, tau, params, opt).matrix()(n - 1, n - 1).real();
}

double subtraction_success_cascade(int n, double tau, const EmitterParams& params, const NumericOptions& opt) {
  require_photons(n);
  TimeGrid g = pulse_grid(tau, params.gamma_wg, opt.resolution);
  TemporalMode mode = gaussian_mode(tau, g, 0.0);
  CascadeNetwork net(params);
  net.add_input("a", mode, n + 1).add_output("out", mode, n + 1);
  std::vector<int> d{n, 0, 0};
  StateMatrix rho0 = product_state(net.space(), d).density();
  EvolveOptions eo;
  eo.min_sector = n - 1;
  eo.max_sector = n;
  eo.check_trace = false;
  auto traj = evolve_me(net, rho0, g, eo);
  return partial_trace(traj.final_state(), {"out"}).matrix()(n - 1, n - 1).real();
}

TauOptimum maximize_over_tau(int n, double gamma, const std::function<double(double)>& f, double rel_tol) {
  require_photons(n);
  double tp = tau_pi(n, gamma);
  double lo = tp / 3.0, hi = 3.0 * tp;
  TauOptimum best{0.0, -1.0, false};
  constexpr int kScan = 13;
  for (int attempt = 0; attempt < 4; ++attempt) {
    std::vector<double> ts(kScan), vs(kScan);
    for (int i = 0; i < kScan; ++i) {
      ts[i] = lo * std::pow(hi / lo, double(i) / (kScan - 1));
      vs[i] = f(ts[i]);
    }
    int k = static_cast<int>(std::max_element(vs.begin(), vs.end()) - vs.begin());
    if ((k == 0 || k == kScan - 1) && attempt < 3) {
      std::cerr << "warning: optimum at the edge of the τ bracket for n=" << n << "; widening the search\n";
      best.widened = true;
      if (k == 0)
        lo /= 3.0;
      else
        hi *= 3.0;
      continue;
    }
    k = std::clamp(k, 1, kScan - 2);
    int bits = static_cast<int>(std::ceil(-std::log2(rel_tol))) + 1;
    boost::uintmax_t it = 100;
    auto r = boost::math::tools::brent_find_minima([&](double t) { return -f(t); }, ts[k - 1], ts[k + 1], bits, it);
    best.tau = r.first;
    best.value = -r.second;
    return best;
  }
  throw ProtocolError("τ optimization failed to bracket a maximum");
}

TauOptimum optimize_tau_sub(int n, const EmitterParams& params, const NumericOptions& opt) {
  return maximize_over_tau(n, params.gamma_wg, [&](double t) { return subtraction_success(n, t, params, opt); });
}

TauOptimum optimize_tau_truncated(int n, double gamma, const NumericOptions& opt) {
  return maximize_over_tau(n, gamma, [&](double t) {
    TemporalMode m = gaussian_mode(t, TimeGrid::for_pulse(t, gamma, opt.resolution, opt.tail));
    return jump_wavefunction(evolve_no_jump(n, m, gamma), m, gamma).probability;
  });
}

AdditionResult addition_success(int n, double tau, const EmitterParams& params, const NumericOptions& opt) {
  require_photons(n);
  TimeGrid g = TimeGrid::for_pulse(tau, params.gamma_wg, opt.resolution, opt.tail);
  TemporalMode phi_a = gaussian_mode(tau, g);
  AdditionResult res;
  res.tau = tau;
  res.jump = general_jump(n, phi_a, params);
  double T = g.t_end();
  TemporalMode a_rev = time_reverse(phi_a, T), b_rev = time_reverse(res.jump.mode, T);
  // The Gaussian's hard edge at t = 0 becomes a trailing edge after reversal, so
  // it is emitted by the upstream cavity where no division by its remaining norm occurs.
  auto [ga, gb] = two_mode_emission_couplings(a_rev, b_rev, false);
  res.oracle_error = two_mode_emission_error(ga, gb, a_rev, b_rev);
  if (!(res.oracle_error <= 1e-4))
    throw ProtocolError("two-mode emission oracle failed: error " + std::to_string(res.oracle_error));

  // Upstream photons pass through the b cavity, which therefore needs the full
  // photon-number range rather than a single excitation.
  CascadeNetwork net(params);
  std::vector<int> d;
  if (n > 1) {
    net.add_input("a", ga, n);
    d.push_back(n - 1);
  }
  net.add_input("b", gb, n + 1).add_output("out", a_rev, n + 1);
  d.insert(d.end(), {1, 0, 0});
  TensorSpace sp = net.space();
  const TimeGrid& rg = a_rev.grid();
  if (params.dephasing > 0) {
    EvolveOptions eo;
    eo.min_sector = eo.max_sector = n;
    eo.check_trace = false;
    auto traj = evolve_me(net, product_state(sp, d).density(), rg, eo);
    res.P_a = partial_trace(traj.final_state(), {"out"}).matrix()(n, n).real();
    return res;
  }
  // Without dephasing every jump leaves sector n, so the sector-n part stays pure.
  BlockEvolver ev(net.generator(), n, n);
  Vector psi = ev.sector_vector(n, product_state(sp, d).vector());
  for (int k = 0; k + 1 < rg.size(); ++k) ev.step_vectors(rg[k], rg[k + 1], n, {&psi});
  Vector full = ev.full_vector(n, psi);
  int out_idx = sp.index_of("out");
  res.P_a = 0.0;
  for (int f = 0; f < sp.total_dim(); ++f)
    if (std::norm(full(f)) > 0 && sp.digits(f)[out_idx] == n) res.P_a += std::norm(full(f));
  return res;
}

FockCascadeResult fock_cascade(int M, const EmitterParams& params, const NumericOptions& opt, int threads) {
  if (M < 2) throw ProtocolError("Fock cascade needs M ≥ 2");
  std::vector<FockStep> steps(M - 1);
  parallel_for(M - 1, threads, [&](int i) {
    int n = i + 2;
    auto t = optimize_tau_sub(n, params, opt);
    steps[i] = {n, t.tau, t.value, addition_success(n, t.tau, params, opt).P_a, 0.0};
  });
  FockCascadeResult r;
  for (auto& s : steps) {
    r.P_M *= s.P_a;
    s.cumulative = r.P_M;
  }
  r.steps = std::move(steps);
  return r;
}

ScalingFit scaling_fit(const std::vector<double>& ns, const std::vector<double>& failures) {
  if (ns.size() != failures.size()) throw ProtocolError("scaling fit needs matching n and failure lists");
  if (ns.size() < 5) throw ProtocolError("scaling fit needs at least 5 points");
  int m = static_cast<int>(ns.size());
  Eigen::MatrixXd A(m, 2);
  Eigen::VectorXd y(m);
  for (int i = 0; i < m; ++i) {
    if (!(failures[i] > 0) || !(ns[i] > 0)) throw ProtocolError("failure values and n must be positive");
    A(i, 0) = 1.0;
    A(i, 1) = std::log(ns[i]);
    y(i) = std::log(failures[i]);
  }
  Eigen::Vector2d c = A.colPivHouseholderQr().solve(y);
  ScalingFit f;
  f.beta = -c(1);
  f.prefactor = std::exp(c(0));
  f.n_lo = static_cast<int>(*std::min_element(ns.begin(), ns.end()));
  f.n_hi = static_cast<int>(*std::max_element(ns.begin(), ns.end()));
  f.residual = std::sqrt((A * c - y).squaredNorm() / m);
  f.points = m;
  return f;
}

ModeSplitting mode_splitting(int n, double tau, double gamma, int sample_resolution, int substeps, double tail) {
  require_photons(n);
  EmitterParams p{gamma, 0.0, 0.0};
  TimeGrid fine = TimeGrid::for_pulse(tau, gamma, sample_resolution * substeps, tail);
  TimeGrid samples = TimeGrid::for_pulse(tau, gamma, sample_resolution, tail);
  TemporalMode phi_fine = gaussian_mode(tau, fine);
  CascadeNetwork net(p);
  net.add_input("a", phi_fine, n + 1);
  std::vector<int> d{n, 0};
  Matrix G = output_correlation(net, product_state(net.space(), d).density(), samples, substeps);

  ModeSplitting r;
  r.tau = tau;
  r.n = n;
  r.exact = kl_decompose(G, samples);
  r.nbar_exact = r.exact.occupations;
  r.emitted = 0.0;
  for (int k = 0; k < samples.size(); ++k) r.emitted += samples.weights()[k] * G(k, k).real();
  TemporalMode phi_s = gaussian_mode(tau, samples);
  if (!r.exact.modes.empty()) r.overlap_phi_a = std::norm(r.exact.modes.front().overlap(phi_s));

  auto jr = jump_wavefunction(evolve_no_jump(n, phi_fine, gamma), phi_fine, gamma);
  r.truncated = truncated_decomposition(n, jr.no_jump, jr.probability, phi_fine, jr.mode);
  r.nbar_truncated = r.truncated.occupations;
  return r;
}

std::vector<double> truncated_occupations(int n, double tau, double gamma, int resolution, double tail) {
  require_photons(n);
  TimeGrid g = TimeGrid::for_pulse(tau, gamma, resolution, tail);
  TemporalMode phi = gaussian_mode(tau, g);
  auto jr = jump_wavefunction(evolve_no_jump(n, phi, gamma), phi, gamma);
  auto c = covariance_truncated(n, jr.no_jump, jr.probability);
  return {c.occupations(0), c.occupations(1)};
}

namespace {

const TensorSpace& mode_space_check(const StateMatrix& rho) {
  if (rho.space().size() != 1) throw ProtocolError("heralded subtraction acts on a single-mode state");
  return rho.space();
}

}  // namespace

double tail_mass(const StateMatrix& rho, int window) {
  int D = rho.dim();
  double s = 0.0;
  for (int i = std::max(0, D - window); i < D; ++i) s += rho.matrix()(i, i).real();
  return s / rho.trace();
}

SubtractionOutcome heralded_subtract(const StateMatrix& rho_in, double gamma_tau, const HeraldOptions& opt) {
  const TensorSpace& ms = mode_space_check(rho_in);
  if (!(gamma_tau > 0)) throw ProtocolError("Γτ must be positive");
  if (tail_mass(rho_in, 1) > 1e-8) throw ProtocolError("cutoff violation: top Fock level population exceeds 1e-8");
  int D = rho_in.dim();
  double tau = gamma_tau;  // Γ = 1
  TimeGrid g = pulse_grid(tau, 1.0, opt.resolution);
  TemporalMode mode = gaussian_mode(tau, g, 0.0);
  Generator gen = interaction_generator(mode, EmitterParams{}, D, opt.aux_dim);
  BlockEvolver ev(gen);

  int local = 2 * opt.aux_dim;
  Matrix rho0 = Matrix::Zero(D * local, D * local);
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) rho0(i * local, j * local) = rho_in.matrix()(i, j);
  BlockState x = upper_blocks(ev.from_dense(rho0));

  // No-click amplitudes ⟨m,g,0|U_eff|m,g,0⟩, one pure vector per sector.
  std::vector<Vector> psi(D);
  for (int m = 0; m < D; ++m) psi[m] = ev.sector_vector(m, Vector::Unit(D * local, m * local));
  std::vector<Vector> psi0 = psi;
  for (int k = 0; k + 1 < g.size(); ++k) {
    ev.step(g[k], g[k + 1], {&x});
    for (int m = 0; m < D; ++m) ev.step_vectors(g[k], g[k + 1], m, {&psi[m]});
  }
  Vector A(D);
  for (int m = 0; m < D; ++m) A(m) = psi0[m].dot(psi[m]);

  StateMatrix full(gen.space, ev.to_dense(x, true));
  Matrix rho_a = partial_trace(full, {"a"}).matrix();
  Matrix noclick = A.asDiagonal() * rho_in.matrix() * A.conjugate().asDiagonal();
  Matrix click = rho_a - noclick;
  SubtractionOutcome out;
  out.tau = tau;
  out.P_s = click.trace().real();
  out.rho_click = StateMatrix(ms, click, out.P_s);
  out.rho_noclick = StateMatrix(ms, noclick, noclick.trace().real());
  if (std::abs(out.P_s + noclick.trace().real() - rho_in.trace()) > 1e-6)
    throw IntegrationError("herald bookkeeping violated: click and no-click traces do not add up");
  return out;
}

SubtractionOutcome linear_subtract(const StateMatrix& rho_in, double R) {
  const TensorSpace& ms = mode_space_check(rho_in);
  if (!(R > 0 && R < 1)) throw ProtocolError("reflectivity must lie in (0, 1)");
  int D = rho_in.dim();
  const Matrix& rho = rho_in.matrix();
  // K_k|m⟩ = √(C(m,k) R^k (1−R)^{m−k}) |m−k⟩
  auto amp = [&](int m, int k) {
    double lc = std::lgamma(m + 1.0) - std::lgamma(k + 1.0) - std::lgamma(m - k + 1.0);
    return std::exp(0.5 * (lc + k * std::log(R) + (m - k) * std::log1p(-R)));
  };
  Matrix click = Matrix::Zero(D, D), noclick(D, D);
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) {
      noclick(i, j) = amp(i, 0) * amp(j, 0) * rho(i, j);
      for (int k = 1; k <= std::min(i, j); ++k) click(i - k, j - k) += amp(i, k) * amp(j, k) * rho(i, j);
    }
  SubtractionOutcome out;
  out.tau = 0.0;
  out.P_s = click.trace().real();
  out.rho_click = StateMatrix(ms, click, out.P_s);
  out.rho_noclick = StateMatrix(ms, noclick, noclick.trace().real());
  return out;
}

double WignerGrid::integral() const {
  double dx = x.size() > 1 ? x(1) - x(0) : 1.0, dp = p.size() > 1 ? p(1) - p(0) : 1.0;
  return W.sum() * dx * dp;
}

namespace {

using CArray = Eigen::ArrayXXcd;

// Σ_k c_k (−1)^k √(L! k!/(L+k)!) L_k^{(L)}(B) by Clenshaw recursion.
CArray laguerre_series(int L, const Eigen::ArrayXXd& B, const Vector& c) {
  int K = static_cast<int>(c.size());
  CArray y0 = CArray::Constant(B.rows(), B.cols(), c(K - 1)), y1 = CArray::Zero(B.rows(), B.cols());
  if (K == 1) return y0;
  y0.setConstant(c(K - 2));
  y1.setConstant(c(K - 1));
  for (int k = K - 1; k >= 2; --k) {
    double a = std::sqrt(double(k - 1) * (L + k - 1) / (double(L + k) * k));
    double b = 1.0 / std::sqrt(double(L + k) * k);
    CArray next0 = c(k - 2) - y1 * a;
    y1 = y0 - y1 * ((L + 2 * k - 1) - B) * b;
    y0 = std::move(next0);
  }
  return y0 - y1 * ((L + 1) - B) / std::sqrt(double(L + 1));
}

}  // namespace

WignerGrid wigner(const StateMatrix& rho, const Eigen::VectorXd& x, const Eigen::VectorXd& p) {
  int M = rho.dim();
  const Matrix& r = rho.matrix();
  int nx = static_cast<int>(x.size()), np = static_cast<int>(p.size());
  // Horner sum over the diagonals ρ_{k,k+L}, each a Clenshaw-evaluated Laguerre series;
  // stable for the high photon numbers where direct Laguerre recursion cancels badly.
  CArray A(np, nx);
  for (int i = 0; i < np; ++i)
    for (int j = 0; j < nx; ++j) A(i, j) = std::sqrt(2.0) * cplx(x(j), p(i));
  Eigen::ArrayXXd B = A.abs2();
  CArray w = CArray::Constant(np, nx, 2.0 * r(0, M - 1));
  for (int L = M - 2; L >= 0; --L) {
    Vector c = r.diagonal(L) * (L == 0 ? 1.0 : 2.0);
    w = laguerre_series(L, B, c) + w * A / std::sqrt(double(L + 1));
  }
  WignerGrid g{x, p, (w.real() * (-0.5 * B).exp() / std::numbers::pi).matrix()};
  return g;
}

double negativity(const WignerGrid& w) {
  double dx = w.x.size() > 1 ? w.x(1) - w.x(0) : 1.0, dp = w.p.size() > 1 ? w.p(1) - w.p(0) : 1.0;
  if (std::abs(w.integral() - 1.0) > 1e-3) throw ProtocolError("Wigner grid too coarse: normalization off by > 1e-3");
  return 0.5 * (w.W.cwiseAbs() - w.W).sum() * dx * dp;
}

double cat_wigner(double x, double p, double alpha, int sign) {
  double x0 = std::sqrt(2.0) * alpha;
  double n2 = 1.0 / (2.0 * (1.0 + sign * std::exp(-2.0 * alpha * alpha)));
  double lobes = std::exp(-(x - x0) * (x - x0) - p * p) + std::exp(-(x + x0) * (x + x0) - p * p);
  double fringe = 2.0 * sign * std::exp(-x * x - p * p) * std::cos(2.0 * p * x0);
  return n2 * (lobes + fringe) / std::numbers::pi;
}

Vector cat_state(int dim, double alpha, int sign) {
  Vector v = coherent(dim, alpha) + double(sign) * coherent(dim, -alpha);
  return v.normalized();
}

Vector squeezed_vacuum(double r, int cutoff) { return squeeze(r, cutoff).col(0); }

int auto_cutoff(double r, double tail_tol) {
  for (int c = 40; c <= kMaxCutoff; c += 2)
    if (squeezed_vacuum_tail(r, c) < tail_tol) return c;
  throw ProtocolError("no cutoff up to " + std::to_string(kMaxCutoff) + " satisfies the tail test");
}

namespace {

double cat_fidelity(const StateMatrix& rho, const Vector& target, double phi) {
  Vector v = squeeze(phi, rho.dim() - 1).adjoint() * target;
  return (v.adjoint() * rho.matrix() * v)(0, 0).real();
}

}  // namespace

CatResult cat_pipeline_with(const CatRunConfig& cfg, const Subtractor& sub) {
  if (cfg.M < 0) throw ProtocolError("subtraction count must be nonnegative");
  CatResult res;
  res.cutoff = cfg.cutoff > 0 ? cfg.cutoff : auto_cutoff(cfg.r);
  StateMatrix rho;
  Vector sv;
  // With an automatic cutoff a tail violation enlarges the space and restarts.
  for (;;) {
    TensorSpace ms({{"a", res.cutoff + 1}});
    sv = squeezed_vacuum(cfg.r, res.cutoff);
    rho = StateMatrix(ms, sv * sv.adjoint());
    res.success_probability = 1.0;
    res.step_probabilities.clear();
    res.tail_masses.clear();
    double violation = 0.0;
    for (int m = 0; m < cfg.M && violation == 0.0; ++m) {
      auto out = sub(rho);
      if (!(out.P_s > 1e-300)) throw ProtocolError("herald probability underflow");
      res.step_probabilities.push_back(out.P_s);
      res.success_probability *= out.P_s;
      rho = out.rho_click.normalized();
      double tm = tail_mass(rho);
      res.tail_masses.push_back(tm);
      if (tm > 1e-8) violation = tm;
    }
    if (violation == 0.0) break;
    int next = (res.cutoff + res.cutoff / 4 + 1) / 2 * 2;
    if (cfg.cutoff > 0 || next > kMaxCutoff)
      throw ProtocolError("cutoff violation: tail mass " + std::to_string(violation) + " after a subtraction at cutoff " +
                          std::to_string(res.cutoff));
    res.cutoff = next;
  }
  int D = res.cutoff + 1;
  const TensorSpace& ms = rho.space();

  Vector target = cfg.M == 0 ? sv : cat_state(D, std::sqrt(double(cfg.M)), cfg.M % 2 == 0 ? 1 : -1);
  auto negf = [&](double phi) { return -cat_fidelity(rho, target, phi); };
  boost::uintmax_t it = 100;
  auto best = boost::math::tools::brent_find_minima(negf, cfg.phi_lo, cfg.phi_hi, 30, it);
  res.phi_opt = best.first;
  res.fidelity = -best.second;
  res.fidelity_unsqueezed = cat_fidelity(rho, target, 0.0);
  Matrix S = squeeze(res.phi_opt, res.cutoff);
  res.state = StateMatrix(ms, S * rho.matrix() * S.adjoint());

  int np = cfg.wigner_points;
  Eigen::VectorXd axis = Eigen::VectorXd::LinSpaced(np, -cfg.wigner_extent, cfg.wigner_extent);
  res.wigner = wigner(res.state, axis, axis);
  res.negativity = negativity(res.wigner);
  return res;
}

CatResult cat_pipeline(const CatRunConfig& cfg) {
  HeraldOptions ho{cfg.resolution, cfg.aux_dim};
  return cat_pipeline_with(cfg, [&](const StateMatrix& r) { return heralded_subtract(r, cfg.gamma_tau, ho); });
}

}  // namespace pf
