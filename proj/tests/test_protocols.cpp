#include <doctest.h>

#include <cmath>
#include <numbers>

#include "photonforge/io.hpp"
#include "photonforge/protocols.hpp"

using namespace pf;

namespace {

StateMatrix pure(const Vector& v) { return StateVector(TensorSpace({{"a", int(v.size())}}), v).density(); }

Eigen::VectorXd axis(double extent, int points) { return Eigen::VectorXd::LinSpaced(points, -extent, extent); }

}  // namespace

TEST_SUITE("protocols") {
  TEST_CASE("power-law fit") {
    std::vector<double> ns, fs;
    for (int n = 4; n <= 12; ++n) {
      ns.push_back(n);
      fs.push_back(0.07 * std::pow(n, -1.23));
    }
    auto fit = scaling_fit(ns, fs);
    CHECK(std::abs(fit.beta - 1.23) < 1e-6);
    CHECK(std::abs(fit.prefactor - 0.07) < 1e-8);
    CHECK(fit.residual < 1e-10);
    CHECK(fit.points == 9);
    CHECK_THROWS_AS(scaling_fit({1, 2, 3}, {0.1, 0.05, 0.03}), ProtocolError);
  }

  TEST_CASE("maximization over the pulse duration") {
    double peak = 1.7 * tau_pi(3);
    auto opt = maximize_over_tau(3, 1.0, [&](double t) { return -std::pow(std::log(t / peak), 2); }, 1e-6);
    CHECK(std::abs(opt.tau / peak - 1) < 1e-4);
    CHECK_FALSE(opt.widened);
    double edge = 5.0 * tau_pi(3);
    auto w = maximize_over_tau(3, 1.0, [&](double t) { return -std::pow(std::log(t / edge), 2); }, 1e-6);
    CHECK(w.widened);
    CHECK(std::abs(w.tau / edge - 1) < 1e-3);
  }

  TEST_CASE("linear subtraction") {
    int D = 60;
    double R = 0.05;
    Vector a = coherent(D, 2.0);
    auto c = linear_subtract(pure(a), R);
    CHECK(std::abs(c.P_s - (1 - std::exp(-R * 4.0))) < 1e-10);
    CHECK(std::abs(c.P_s + c.rho_noclick.trace() - 1.0) < 1e-10);

    for (int n : {1, 3, 5}) {
      auto f = linear_subtract(pure(fock(8, n)), R);
      CHECK(std::abs(f.P_s - (1 - std::pow(1 - R, n))) < 1e-12);
    }

    // Weak reflection: the click state approaches âρâ†/⟨n̂⟩.
    Vector sq = squeezed_vacuum(0.5, D) + 0.3 * fock(D + 1, 1);
    sq.normalize();
    StateMatrix rho = pure(sq);
    auto weak = linear_subtract(rho, 1e-5);
    Matrix A = ladder(D + 1);
    Matrix ideal = A * rho.matrix() * A.adjoint();
    ideal /= ideal.trace();
    CHECK(weak.P_s < 1e-4);
    CHECK(trace_distance(weak.rho_click.matrix() / weak.P_s, ideal) < 1e-3);
  }

  TEST_CASE("heralded subtraction") {
    auto vac = heralded_subtract(pure(fock(6, 0)), 0.1);
    CHECK(vac.P_s < 1e-14);
    CHECK(std::abs(vac.rho_noclick.matrix()(0, 0) - 1.0) < 1e-12);

    double tau = 0.3;
    HeraldOptions full;
    full.aux_dim = 4;
    auto f = heralded_subtract(pure(fock(5, 3)), tau, full);
    CHECK(std::abs(f.rho_click.matrix()(2, 2).real() - subtraction_success(3, tau, EmitterParams{})) < 1e-8);

    // Default auxiliary truncation is converged at the cat-state pulse duration.
    HeraldOptions bigger;
    bigger.aux_dim = 4;
    auto d3 = heralded_subtract(pure(fock(12, 10)), 0.04), d4 = heralded_subtract(pure(fock(12, 10)), 0.04, bigger);
    CHECK(std::abs(d3.P_s - d4.P_s) < 1e-6);

    int D = 40;
    Vector alpha = coherent(D, std::sqrt(10.0));
    StateMatrix in = pure(alpha);
    double F_prev = 2.0;
    for (double gt : {0.02, 0.04, 0.1}) {
      auto o = heralded_subtract(in, gt);
      double F = fidelity(StateMatrix(in.space(), o.rho_click.matrix() / o.P_s), in);
      if (gt == 0.04) CHECK(F > 0.99);  // ≈0.993
      CHECK(F < F_prev);
      F_prev = F;
    }
    CHECK_THROWS_AS(heralded_subtract(pure(fock(6, 5)), 0.1), ProtocolError);
  }

  TEST_CASE("Wigner function") {
    Eigen::VectorXd o = Eigen::VectorXd::Zero(1);
    CHECK(std::abs(wigner(pure(fock(4, 0)), o, o).W(0, 0) - 1 / std::numbers::pi) < 1e-14);
    CHECK(std::abs(wigner(pure(fock(4, 1)), o, o).W(0, 0) + 1 / std::numbers::pi) < 1e-14);

    double a = std::sqrt(6.0);
    int D = 50;
    auto x = axis(6.0, 121);
    auto w = wigner(pure(cat_state(D, a, 1)), x, x);
    double worst = 0;
    for (int i = 0; i < x.size(); ++i)
      for (int j = 0; j < x.size(); ++j) worst = std::max(worst, std::abs(w.W(i, j) - cat_wigner(x(j), x(i), a, 1)));
    CHECK(worst < 1e-10);
    CHECK(std::abs(w.integral() - 1.0) < 1e-3);
    CHECK(negativity(w) > 0.1);
    CHECK(negativity(wigner(pure(coherent(D, 1.5)), x, x)) < 1e-6);
  }

  TEST_CASE("cat pipeline without subtraction") {
    CatRunConfig cfg;
    cfg.M = 0;
    cfg.r = 0.6;
    cfg.wigner_points = 41;
    auto res = cat_pipeline(cfg);
    CHECK(res.success_probability == doctest::Approx(1.0));
    CHECK(res.fidelity_unsqueezed == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(res.step_probabilities.empty());
    CHECK(auto_cutoff(1.15) == 82);
    CHECK(auto_cutoff(0.6) == 40);
  }

  TEST_CASE("number formatting") {
    CHECK(round_sig(0.1234567890123456) == 0.123456789012);
    CHECK(round_sig(-2.5e-9, 3) == -2.5e-9);
    CHECK(round_sig(0.0) == 0.0);
    CHECK(csv_table({"a", "b"}, {{1.0, 0.5}}) == "a,b\n1,0.5\n");
  }
}
