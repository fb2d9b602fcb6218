#include <doctest.h>

#include <cmath>

#include "photonforge/cascade.hpp"

using namespace pf;

namespace {

double emitter_population(const StateMatrix& rho) { return partial_trace(rho, {kEmitter}).matrix()(1, 1).real(); }

}  // namespace

TEST_SUITE("cascade") {
  TEST_CASE("bare emitter generator") {
    CascadeNetwork net(EmitterParams{1.0, 0.0, 0.0});
    auto snap = build_generator(net, 0.3);
    CHECK(snap.H.matrix().norm() < 1e-15);
    REQUIRE(snap.jumps.size() == 1);
    CHECK((snap.jump("waveguide").matrix() - sigma_minus()).norm() < 1e-15);

    CascadeNetwork lossy(EmitterParams{1.0, 0.5, 0.2});
    auto s2 = build_generator(lossy, 0.0);
    CHECK(s2.jumps.size() == 3);
    CHECK_THROWS_AS(CascadeNetwork(EmitterParams{1.0, -0.1, 0.0}), ConfigurationError);
  }

  TEST_CASE("Hamiltonian is Hermitian") {
    double tau = 0.4;
    TimeGrid g = TimeGrid::for_pulse(tau);
    TemporalMode phi = gaussian_mode(tau, g);
    CascadeNetwork net(EmitterParams{});
    net.add_input("a", phi, 3).add_output("b", phi, 3);
    for (double t : {0.5, 1.6, 3.0, 5.0}) {
      auto s = build_generator(net, t);
      CHECK(s.H.is_hermitian(1e-12));
      auto si = build_interaction_generator(phi, EmitterParams{}, t, 3);
      CHECK(si.H.is_hermitian(1e-12));
    }
  }

  TEST_CASE("spontaneous decay") {
    CascadeNetwork net(EmitterParams{1.0, 0.0, 0.0});
    TimeGrid g = TimeGrid::uniform(0.0, 5.0, 500);
    std::vector<int> d{1};
    EvolveOptions opt;
    opt.record = {100, 250, 500};
    auto traj = evolve_me(net, product_state(net.space(), d).density(), g, opt);
    REQUIRE(traj.states.size() == 3);
    for (size_t i = 0; i < 3; ++i)
      CHECK(std::abs(emitter_population(traj.states[i]) - std::exp(-traj.times[i])) < 1e-8);

    CascadeNetwork lossy(EmitterParams{1.0, 0.5, 0.0});
    auto t2 = evolve_me(lossy, product_state(lossy.space(), d).density(), g);
    CHECK(std::abs(emitter_population(t2.final_state()) - std::exp(-7.5)) < 1e-8);
  }

  TEST_CASE("Schrodinger and interaction pictures agree") {
    double tau = 0.2;
    TimeGrid g = TimeGrid::for_pulse(tau);
    TemporalMode phi = gaussian_mode(tau, g);
    EvolveOptions opt;
    for (int k = 0; k < g.size(); k += g.size() / 12) opt.record.push_back(k);

    CascadeNetwork s(EmitterParams{});
    s.add_input("a", phi, 3);
    std::vector<int> ds{2, 0};
    auto ts = evolve_me(s, product_state(s.space(), ds).density(), g, opt);

    CascadeNetwork i(EmitterParams{}, Picture::Interaction);
    i.add_input("a", phi, 3).set_aux_dim(3);
    std::vector<int> di{2, 0, 0};
    auto ti = evolve_me(i, product_state(i.space(), di).density(), g, opt);

    REQUIRE(ts.states.size() == ti.states.size());
    double worst = 0;
    for (size_t k = 0; k < ts.states.size(); ++k)
      worst = std::max(worst, std::abs(emitter_population(ts.states[k]) - emitter_population(ti.states[k])));
    CHECK(worst < 1e-4);
  }

  TEST_CASE("two-mode emission") {
    TimeGrid g = TimeGrid::for_pulse(0.5);
    TemporalMode u1 = gaussian_mode(0.5, g);
    Vector odd(g.size());
    for (int k = 0; k < g.size(); ++k) odd(k) = u1.samples()(k) * (g[k] - 2.0);
    TemporalMode u2 = TemporalMode(g, odd).normalized();
    auto [g1, g2] = two_mode_emission_couplings(u1, u2);
    CHECK(two_mode_emission_error(g1, g2, u1, u2) < 1e-4);
    auto [h1, h2] = two_mode_emission_couplings(u2, u1);
    CHECK(two_mode_emission_error(h1, h2, u2, u1) < 1e-4);

    // A later, non-overlapping second mode leaves the first cavity's coupling unchanged.
    Vector late(g.size());
    for (int k = 0; k < g.size(); ++k) late(k) = std::exp(-0.5 * std::pow((g[k] - 9.0) / 0.5, 2));
    TemporalMode u3 = TemporalMode(g, late).normalized();
    auto [l1, l2] = two_mode_emission_couplings(u1, u3);
    CouplingFunction single = emit_coupling(u1);
    for (double t : {1.0, 2.0, 3.0}) CHECK(std::abs(l1.at(t) - single.at(t)) < 1e-6 * std::abs(single.at(2.0)));
    CHECK_THROWS_AS(two_mode_emission_couplings(u1, u1), ConfigurationError);
  }

  TEST_CASE("output correlation of a scattered photon") {
    double tau = 0.5;
    TimeGrid g = TimeGrid::for_pulse(tau, 1.0, 20, 10.0);
    TemporalMode phi = gaussian_mode(tau, g);
    CascadeNetwork net(EmitterParams{});
    net.add_input("a", phi, 2);
    std::vector<int> d{1, 0};
    Matrix G = output_correlation(net, product_state(net.space(), d).density(), g, 4);
    CHECK((G - G.adjoint()).cwiseAbs().maxCoeff() < 1e-10);

    Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(g.weights().data(), g.size()).cwiseSqrt();
    Matrix Gw = w.asDiagonal() * G * w.asDiagonal();
    CHECK(std::abs(Gw.trace().real() - 1.0) < 1e-3);
    Eigen::SelfAdjointEigenSolver<Matrix> es(Gw);
    double top = es.eigenvalues().maxCoeff();
    CHECK(top > 0.999 * Gw.trace().real());

    CascadeNetwork two(EmitterParams{});
    two.add_input("a", phi, 3);
    std::vector<int> d2{2, 0};
    Matrix G2 = output_correlation(two, product_state(two.space(), d2).density(), g, 4);
    double n2 = 0;
    for (int k = 0; k < g.size(); ++k) n2 += g.weights()[k] * G2(k, k).real();
    CHECK(std::abs(n2 - 2.0) < 1e-3);
  }
}
