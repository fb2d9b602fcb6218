#include <doctest.h>

#include <cmath>
#include <numbers>

#include "photonforge/cascade.hpp"
#include "photonforge/pulses.hpp"

using namespace pf;

namespace {

TemporalMode centered_gaussian(const TimeGrid& g, double center, double width) {
  Vector s(g.size());
  for (int k = 0; k < g.size(); ++k) s(k) = std::exp(-0.5 * std::pow((g[k] - center) / width, 2));
  return TemporalMode(g, s).normalized();
}

}  // namespace

TEST_SUITE("pulses") {
  TEST_CASE("Gaussian mode") {
    double tau = 0.3;
    TimeGrid g = TimeGrid::for_pulse(tau);
    TemporalMode phi = gaussian_mode(tau, g);
    CHECK(phi.norm2() == doctest::Approx(1.0).epsilon(1e-8));
    int arg = 0;
    phi.samples().cwiseAbs().maxCoeff(&arg);
    CHECK(std::abs(g[arg] - 4 * tau) <= (g[arg + 1] - g[arg]) + 1e-12);

    // Closed-form overlap of normalized Gaussians with widths τ and 2τ: √(2·1·2/(1+4)).
    TimeGrid u = TimeGrid::uniform(0.0, 20.0, 4000);
    TemporalMode a = centered_gaussian(u, 10.0, 1.0), b = centered_gaussian(u, 10.0, 2.0);
    CHECK(std::abs(a.overlap(b) - std::sqrt(4.0 / 5.0)) < 1e-6);
    CHECK_THROWS_AS(gaussian_mode(-1.0, g), PulseError);
  }

  TEST_CASE("rotation angle") {
    double tau = 0.2;
    TimeGrid g = TimeGrid::for_pulse(tau);
    TemporalMode phi = gaussian_mode(tau, g);
    CHECK(theta(phi, g.t_start()) == doctest::Approx(0.0));
    CHECK(std::abs(theta(phi, g.t_end()) - std::numbers::pi / 2) < 1e-4);
    CHECK(std::abs(theta(phi, 4 * tau) - std::numbers::pi / 4) < 1e-4);
    // d(sin²θ)/dt = |φ|²
    for (double t : {3.0 * tau, 4.0 * tau, 5.5 * tau}) {
      double h = 1e-5;
      double d = (std::pow(std::sin(theta(phi, t + h)), 2) - std::pow(std::sin(theta(phi, t - h)), 2)) / (2 * h);
      CHECK(std::abs(d - std::norm(phi.at(t))) < 1e-4 * std::norm(phi.at(4 * tau)));
    }
  }

  TEST_CASE("coupling identities") {
    double tau = 0.25;
    TimeGrid g = TimeGrid::for_pulse(tau);
    TemporalMode phi = gaussian_mode(tau, g);
    CouplingFunction ge = emit_coupling(phi), gc = catch_coupling(phi);
    double worst_e = 0, worst_c = 0;
    for (int k = 0; k < g.size(); ++k) {
      auto p = phi.eval(g[k]);
      if (p.S < 1e-6 || p.R < 1e-6) continue;
      double s2 = p.S / (p.S + p.R);
      worst_e = std::max(worst_e, std::abs(std::norm(ge.at(g[k])) * (1 - s2) - std::norm(p.phi)));
      worst_c = std::max(worst_c, std::abs(std::norm(gc.at(g[k])) * s2 - std::norm(p.phi)));
    }
    CHECK(worst_e < 1e-10);
    CHECK(worst_c < 1e-10);
    Vector se = ge.samples();
    for (int k : {g.size() / 10, g.size() / 5, g.size() / 3}) CHECK(std::abs(se(k) - ge.at(g[k])) < 1e-12);
    // Catching coupling carries the opposite sign of the emission coupling.
    double t = 5 * tau;
    CHECK(std::arg(-gc.at(t) / ge.at(t)) == doctest::Approx(0.0));
  }

  TEST_CASE("time reversal") {
    double tau = 0.5;
    TimeGrid g = TimeGrid::uniform(0.0, 8 * tau, 800);
    TemporalMode phi = centered_gaussian(g, 4 * tau, tau);
    TemporalMode rev = time_reverse(phi, 8 * tau);
    CHECK((rev.samples() - phi.samples()).cwiseAbs().maxCoeff() < 1e-12);

    TimeGrid h = TimeGrid::for_pulse(0.2);
    TemporalMode u = gaussian_mode(0.2, h);
    Vector chirp(h.size());
    for (int k = 0; k < h.size(); ++k) chirp(k) = u.samples()(k) * std::exp(I * (3.0 * h[k] * h[k]));
    TemporalMode v(h, chirp);
    double T = h.t_end();
    TemporalMode uu = time_reverse(time_reverse(v, T), T);
    CHECK((uu.samples() - v.samples()).cwiseAbs().maxCoeff() < 1e-8);
    TemporalMode w = centered_gaussian(h, 1.0, 0.4);
    CHECK(std::abs(std::abs(v.overlap(w)) - std::abs(time_reverse(v, T).overlap(time_reverse(w, T)))) < 1e-8);
  }

  TEST_CASE("orthonormalization") {
    TimeGrid g = TimeGrid::uniform(0.0, 10.0, 2000);
    std::vector<TemporalMode> modes{centered_gaussian(g, 3.0, 0.7), centered_gaussian(g, 4.0, 1.1),
                                    centered_gaussian(g, 5.0, 0.9)};
    auto on = orthonormalize(modes);
    REQUIRE(on.size() == 3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) CHECK(std::abs(on[i].overlap(on[j]) - (i == j ? 1.0 : 0.0)) < 1e-8);
    auto same = orthonormalize({on[0], on[1]});
    CHECK((same[0].samples() - on[0].samples()).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((same[1].samples() - on[1].samples()).cwiseAbs().maxCoeff() < 1e-10);
    CHECK_THROWS_AS(orthonormalize({modes[0], modes[0]}), PulseError);
  }

  TEST_CASE("emission and catching without a scatterer") {
    double tau = 0.3;
    TimeGrid g = TimeGrid::for_pulse(tau);
    TemporalMode phi = gaussian_mode(tau, g);
    Vector odd(g.size());
    for (int k = 0; k < g.size(); ++k) odd(k) = phi.samples()(k) * (g[k] - 4 * tau) / tau;
    TemporalMode ortho = TemporalMode(g, odd).normalized();
    for (bool same : {true, false}) {
      CascadeNetwork net(EmitterParams{0.0, 0.0, 0.0});
      net.add_input("a", phi, 2).add_output("o", same ? phi : ortho, 2);
      std::vector<int> d{1, 0, 0};
      auto traj = evolve_me(net, product_state(net.space(), d).density(), g);
      double caught = partial_trace(traj.final_state(), {"o"}).matrix()(1, 1).real();
      if (same)
        CHECK(caught >= 1 - 1e-4);
      else
        CHECK(caught <= 1e-4);
    }
  }
}
