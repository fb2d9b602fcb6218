#include <doctest.h>

#include <cmath>
#include <numbers>

#include "photonforge/trajectory.hpp"

using namespace pf;

namespace {

struct Setup {
  TimeGrid grid;
  TemporalMode phi;
  Setup(double tau, int res = 200) : grid(TimeGrid::for_pulse(tau, 1.0, res)), phi(gaussian_mode(tau, grid)) {}
};

double time_of_angle(const TemporalMode& phi, double target) {
  const auto& g = phi.grid();
  double lo = g.t_start(), hi = g.t_end();
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    (theta(phi, mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_SUITE("trajectory") {
  TEST_CASE("effective Hamiltonian identities") {
    Setup s(0.3);
    double tq = time_of_angle(s.phi, std::numbers::pi / 4);
    cplx phi = s.phi.at(tq);
    auto H = heff_truncated(4, s.phi, 1.0, tq);
    CHECK(std::abs(H(1, 2) - I * phi) < 1e-9);
    CHECK(std::abs(H(2, 2) + 2.0 * I * std::norm(phi)) < 1e-9);
    for (double t : {0.3, 1.0, 1.2, 2.0, 3.0}) {
      auto h1 = heff_truncated(1, s.phi, 1.0, t), h4 = heff_truncated(4, s.phi, 1.0, t);
      if (std::abs(h1(0, 1)) > 1e-12) CHECK(std::abs(h4(0, 1) / h1(0, 1) - 2.0) < 1e-12);
      Eigen::Matrix3cd A = (h4 - h4.adjoint()) / (2.0 * I);
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix3cd> es(A);
      CHECK(es.eigenvalues().maxCoeff() < 1e-12);
    }
  }

  TEST_CASE("effective Hamiltonian matches the full interaction-picture generator") {
    Setup s(0.3);
    int n = 3;
    for (double t : {0.9, 1.2, 1.6}) {
      auto snap = build_interaction_generator(s.phi, EmitterParams{}, t, n + 1, n + 1);
      Matrix heff = snap.H.matrix();
      for (const auto& [name, L] : snap.jumps) heff -= 0.5 * I * L.matrix().adjoint() * L.matrix();
      const TensorSpace& sp = snap.H.space();
      std::vector<std::vector<int>> basis{{n, 0, 0}, {n - 1, 1, 0}, {n - 1, 0, 1}};
      auto h3 = heff_truncated(n, s.phi, 1.0, t);
      double worst = 0;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          worst = std::max(worst, std::abs(heff(sp.flat(basis[i]), sp.flat(basis[j])) - h3(i, j)));
      CHECK(worst < 1e-12);
    }
  }

  TEST_CASE("no-jump evolution") {
    Setup weak(1e-5, 50);
    auto a = evolve_no_jump(3, weak.phi, 1.0);
    CHECK(std::norm(a.c1(a.c1.size() - 1)) > 1 - 1e-3);

    Setup s(0.18);
    auto b = evolve_no_jump(4, s.phi, 1.0);
    double prev = 1.0;
    bool monotone = true;
    for (int k = 0; k < b.c1.size(); ++k) {
      double nrm = std::norm(b.c1(k)) + std::norm(b.c2(k)) + std::norm(b.c3(k));
      monotone = monotone && nrm <= prev + 1e-12;
      prev = nrm;
    }
    CHECK(monotone);
    int last = b.c1.size() - 1;
    CHECK(std::abs(b.c2(last)) < 1e-4);
    CHECK(std::abs(b.c3(last)) < 1e-4);
    CHECK(1 - std::norm(b.c1(last)) >= 0.99);

    TimeGrid short_tail = TimeGrid::for_pulse(0.18, 1.0, 200, 2.0);
    CHECK_THROWS_AS(evolve_no_jump(4, gaussian_mode(0.18, short_tail, 2.0), 1.0), TrajectoryError);
  }

  TEST_CASE("jump wavefunction") {
    Setup s(0.2);
    auto amps = evolve_no_jump(2, s.phi, 1.0);
    auto j = jump_wavefunction(amps, s.phi, 1.0);
    CHECK(std::abs(j.probability - (1 - std::norm(j.no_jump))) < 1e-6);
    // Norm lost by the no-jump state is exactly the emitted probability.
    CHECK(std::abs(1 - std::norm(j.no_jump) - j.residual_norm2 - j.probability) < 1e-10);
    // Trapezoidal norm of the sampled wavefunction agrees to quadrature order.
    CHECK(std::abs(j.raw.norm2() - j.probability) < 1e-5);
    CHECK(std::abs(j.mode.norm2() - 1.0) < 1e-8);
    CHECK(std::abs(s.phi.overlap(j.mode)) < 1e-6);

    // Late-time emission decays at Γ/2 in amplitude.
    const auto& g = s.grid;
    double t1 = g.t_end() - 12.0, t2 = g.t_end() - 4.0;
    double slope = (std::log(std::abs(j.mode.at(t2))) - std::log(std::abs(j.mode.at(t1)))) / (t2 - t1);
    CHECK(std::abs(slope + 0.5) < 0.01);

    // Weak single-photon pulse follows the analytic filter.
    Setup w(0.01);
    auto j1 = jump_wavefunction(evolve_no_jump(1, w.phi, 1.0), w.phi, 1.0);
    CHECK(std::abs(j1.probability - std::pow(analytic_filter(1, 0.01), 2)) < 0.01);
  }

  TEST_CASE("general jump against the truncated model") {
    Setup s(0.04);
    auto t = jump_wavefunction(evolve_no_jump(4, s.phi, 1.0), s.phi, 1.0);
    auto gj = general_jump(4, s.phi, EmitterParams{});
    CHECK(std::abs(t.mode.overlap(gj.mode)) >= 0.999);
    CHECK(gj.other_weight >= -1e-8);

    Setup l(0.5);
    auto t10 = jump_wavefunction(evolve_no_jump(10, l.phi, 1.0), l.phi, 1.0);
    auto g10 = general_jump(10, l.phi, EmitterParams{});
    CHECK(std::abs(t10.mode.overlap(g10.mode)) < 0.99);
    CHECK(std::abs(g10.mode.overlap(l.phi)) < 1e-6);

    // Overlap approaches unity as the pulse shortens.
    double prev = 0;
    for (double tau : {0.2, 0.08, 0.03}) {
      Setup q(tau);
      double ov = std::abs(jump_wavefunction(evolve_no_jump(3, q.phi, 1.0), q.phi, 1.0)
                               .mode.overlap(general_jump(3, q.phi, EmitterParams{}).mode));
      CHECK(ov > prev);
      prev = ov;
    }
  }

  TEST_CASE("filter function") {
    Setup s(0.04);
    auto table = filter_function(s.phi, 1.0, 8, 0.04);
    for (const auto& r : table.rows) {
      CHECK(std::abs(r.f) <= std::sqrt(r.probability) + 1e-12);
      CHECK(r.probability <= 1.0);
    }
    CHECK(table.max_deviation() <= 0.05);

    Setup l(0.5);
    auto wide = filter_function(l.phi, 1.0, 4, 0.5);
    CHECK(wide.max_deviation(false) > 0.1);
  }

  TEST_CASE("pi-pulse duration") {
    CHECK(tau_pi(1) == doctest::Approx(std::pow(std::numbers::pi, 1.5) / 8).epsilon(1e-15));
    CHECK(tau_pi(6) == doctest::Approx(tau_pi(3) / 2).epsilon(1e-15));
    for (int n : {1, 4}) {
      double tau = tau_pi(n);
      // Full Gaussian: the area condition holds to quadrature accuracy.
      TimeGrid u = TimeGrid::uniform(0.0, 16 * tau, 4000);
      Eigen::VectorXd full(u.size());
      for (int k = 0; k < u.size(); ++k) full(k) = std::exp(-0.5 * std::pow(u[k] / tau - 8.0, 2));
      full /= std::sqrt(u.integrate(Eigen::VectorXd(full.cwiseAbs2())));
      CHECK(std::abs(2 * std::sqrt(double(n)) * u.integrate(full) - std::numbers::pi) < 1e-6);
      // The library pulse starts at t = 0, four widths before its peak; the
      // missing leading edge removes a fraction erfc(2√2)/2 ≈ 3e-5 of the area.
      Setup s(tau);
      Eigen::VectorXd amp = s.phi.samples().real();
      double area = 2 * std::sqrt(double(n)) * s.grid.integrate(amp);
      CHECK(std::abs(area / std::numbers::pi - 1.0 + 0.5 * std::erfc(2 * std::sqrt(2.0))) < 1e-6);
    }
    CHECK_THROWS_AS(tau_pi(0), TrajectoryError);
  }
}
