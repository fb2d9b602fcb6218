// One PASS/FAIL line per acceptance criterion. Arguments select a subset of
// criteria by number (default: all). Exit status is nonzero if any check fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "faddeeva_table.hpp"
#include "photonforge/analytic2p.hpp"
#include "photonforge/protocols.hpp"

using namespace pf;

namespace {

double now() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

std::string g(double x) {
  char b[32];
  std::snprintf(b, sizeof b, "%.6g", x);
  return b;
}

// Tolerance for the doubling checks and the optimizer precision behind them.
constexpr double kDoublingTol = 1e-4;
constexpr double kTauRelTol = 1e-5;

const EmitterParams kIdeal{};
const NumericOptions kBase{};
const NumericOptions kDoubled{400, 40.0, -1};

// Results shared between criteria, computed on first use.
struct Cache {
  std::map<int, TauOptimum> tau_sub;
  std::map<int, double> P_a;
  std::map<int, TauOptimum> tau_sub_fine;

  TauOptimum sub(int n) {
    auto it = tau_sub.find(n);
    if (it != tau_sub.end()) return it->second;
    auto f = [n](double t) { return subtraction_success(n, t, kIdeal, kBase); };
    return tau_sub[n] = maximize_over_tau(n, 1.0, f, kTauRelTol);
  }
  TauOptimum sub_fine(int n) {
    auto it = tau_sub_fine.find(n);
    if (it != tau_sub_fine.end()) return it->second;
    auto f = [n](double t) { return subtraction_success(n, t, kIdeal, kDoubled); };
    return tau_sub_fine[n] = maximize_over_tau(n, 1.0, f, kTauRelTol);
  }
  std::map<int, double> P_a_fine;
  double add_fine(int n) {
    auto it = P_a_fine.find(n);
    if (it != P_a_fine.end()) return it->second;
    return P_a_fine[n] = addition_success(n, sub(n).tau, kIdeal, kDoubled).P_a;
  }
  double add(int n) {
    auto it = P_a.find(n);
    if (it != P_a.end()) return it->second;
    return P_a[n] = addition_success(n, sub(n).tau, kIdeal, kBase).P_a;
  }
} cache;

struct Outcome {
  bool pass;
  std::string detail;
};

// Observables re-evaluated on doubled grids/cutoffs; run by the infrastructure
// criterion so that the other criteria time only their own runs.
struct DoublingJob {
  std::string label;
  double base;
  std::function<double()> doubled;
};
std::vector<DoublingJob> doubling;
void record_doubling(const std::string& label, double base, std::function<double()> doubled) {
  doubling.push_back({label, base, std::move(doubled)});
}

CatRunConfig cat_cfg() { return CatRunConfig{}; }

Outcome c1() {
  double worst = 1.0;
  std::ostringstream os;
  for (int n : {4, 6, 8, 10}) {
    auto t = cache.sub(n);
    worst = std::min(worst, t.value);
    os << "n=" << n << ": P_s=" << g(t.value) << " at Γτ=" << g(t.tau) << "; ";
    record_doubling("P_s(" + std::to_string(n) + ") resolution+tail", t.value,
                    [n, t] { return subtraction_success(n, t.tau, kIdeal, kDoubled); });
  }
  os << "min " << g(worst) << " (floor 0.994)";
  return {worst >= 0.994, os.str()};
}

Outcome c2() {
  double tau = cache.sub(4).tau;
  ModeSplitting m = mode_splitting(4, tau);
  double rest = m.exact.discarded;
  for (size_t i = 2; i < m.nbar_exact.size(); ++i) rest += m.nbar_exact[i];
  bool ok = std::abs(m.nbar_exact[0] - 3) <= 0.05 && std::abs(m.nbar_exact[1] - 1) <= 0.05 && rest <= 0.05;
  std::ostringstream os;
  os << "at Γτ_sub: n̄=(" << g(m.nbar_exact[0]) << ", " << g(m.nbar_exact[1]) << "), rest " << g(rest)
     << "; truncated vs exact max |Δn̄| over Γτ∈{0.02,0.05,0.1,τ_sub,0.3}: ";
  auto fine = std::make_shared<std::vector<double>>();
  auto fine_nbar = [fine, tau](int i) {
    if (fine->empty()) *fine = mode_splitting(4, tau, 1.0, 40, 10, 40.0).nbar_exact;
    return (*fine)[i];
  };
  record_doubling("n̄1(4) sample grid+tail", m.nbar_exact[0], [=] { return fine_nbar(0); });
  record_doubling("n̄2(4) sample grid+tail", m.nbar_exact[1], [=] { return fine_nbar(1); });
  double worst = 0.0;
  for (double gt : {0.02, 0.05, 0.1, tau, 0.3}) {
    ModeSplitting s = gt == tau ? m : mode_splitting(4, gt);
    for (int i = 0; i < 2; ++i) worst = std::max(worst, std::abs(s.nbar_exact[i] - s.nbar_truncated[i]));
  }
  os << g(worst) << " (≤ 0.05)";
  return {ok && worst <= 0.05, os.str()};
}

Outcome c3() {
  double worst = 0.0;
  std::ostringstream os;
  double ex10 = 0, tr10 = 0;
  for (int n = 4; n <= 10; ++n) {
    double ex = cache.sub(n).tau;
    double tr = optimize_tau_truncated(n, 1.0, kBase).tau;
    worst = std::max(worst, std::abs(tr / ex - 1));
    if (n == 10) ex10 = ex, tr10 = tr;
    record_doubling("τ_sub(" + std::to_string(n) + ") resolution+tail", ex, [n] { return cache.sub_fine(n).tau; });
  }
  double tp = tau_pi(10);
  double d_ex = std::abs(ex10 / tp - 1), d_tr = std::abs(tr10 / tp - 1);
  os << "max |τ_trunc/τ_exact − 1| over n=4..10: " << g(worst) << " (≤ 0.05); n=10: τ_exact/τ_π − 1 = " << g(d_ex)
     << ", τ_trunc/τ_π − 1 = " << g(d_tr) << " (≤ 0.3)";
  return {worst <= 0.05 && d_ex <= 0.3 && d_tr <= 0.3, os.str()};
}

Outcome c4() {
  double root = solve_degeneracy(1.0);
  DegeneracyScan ex = exact_degeneracy();
  record_doubling("exact degeneracy τ frequency grid", ex.tau_opt,
                  [] { return exact_degeneracy(1.0, 0.3, 0.5, 801).tau_opt; });
  std::ostringstream os;
  os << "approximate root " << g(root) << " (0.34 ± 0.01); exact optimum " << g(ex.tau_opt)
     << " (0.38 ± 0.02); gap " << g(ex.tau_opt - root);
  bool ok = std::abs(root - 0.34) <= 0.01 && std::abs(ex.tau_opt - 0.38) <= 0.02 && ex.tau_opt - root > 0.02;
  return {ok, os.str()};
}

Outcome c5() {
  double worst = 0.0;
  std::ostringstream os;
  for (int n = 2; n <= 6; ++n) {
    double d = std::abs(cache.add(n) - cache.sub(n).value);
    worst = std::max(worst, d);
    os << "n=" << n << ": " << g(d) << "; ";
    record_doubling("P_a(" + std::to_string(n) + ") resolution+tail", cache.add(n),
                    [n] { return cache.add_fine(n); });
  }
  os << "max |P_a − P_s| " << g(worst) << " (≤ 1e-3)";
  return {worst <= 1e-3, os.str()};
}

ScalingFit fit_range(int lo, int hi, bool fine = false) {
  std::vector<double> ns, fails;
  for (int n = lo; n <= hi; ++n) {
    double Pa = fine ? cache.add_fine(n) : cache.add(n);
    ns.push_back(n);
    fails.push_back(1.0 - Pa);
  }
  return scaling_fit(ns, fails);
}

Outcome c6() {
  ScalingFit f = fit_range(4, 12);
  std::ostringstream os;
  os << "β=" << g(f.beta) << " over n=4..12 (1.23 ± 0.15, > 1); range sensitivity:";
  for (auto [lo, hi] : std::vector<std::pair<int, int>>{{4, 8}, {6, 10}, {8, 12}, {5, 12}, {4, 10}})
    os << " " << lo << ".." << hi << "→" << g(fit_range(lo, hi).beta);
  record_doubling("β(4..12) resolution+tail", f.beta, [] { return fit_range(4, 12, true).beta; });
  return {std::abs(f.beta - 1.23) <= 0.15 && f.beta > 1.0, os.str()};
}

Outcome c7() {
  double P = 1.0, prev = 1.0, minP = 1.0;
  bool monotone = true;
  for (int n = 2; n <= 10; ++n) {
    P *= cache.add(n);
    monotone = monotone && P <= prev;
    prev = P;
    minP = std::min(minP, P);
  }
  ScalingFit f = fit_range(4, 12);
  // Per-step failures c·n^{−β} beyond n=10 sum to a finite tail when β > 1.
  double tail = 0.0;
  constexpr int kTerms = 100000;
  for (int n = 11; n < kTerms; ++n) tail += f.prefactor * std::pow(n, -f.beta);
  if (f.beta > 1.0) tail += f.prefactor * std::pow(kTerms - 0.5, 1.0 - f.beta) / (f.beta - 1.0);
  record_doubling("P_10 resolution+tail", P, [] {
    double Pf = 1.0;
    for (int n = 2; n <= 10; ++n) Pf *= cache.add_fine(n);
    return Pf;
  });
  std::ostringstream os;
  os << "P_M for M=2..10: min " << g(minP) << " (≥ 0.967), monotone " << (monotone ? "yes" : "no")
     << "; fitted failure tail Σ_{n>10} c·n^−β = " << g(tail) << " (finite, β=" << g(f.beta) << ")";
  return {minP >= 0.967 && monotone && f.beta > 1.0, os.str()};
}

Outcome c8() {
  double t0 = now();
  CatRunConfig cfg = cat_cfg();
  CatResult r = cat_pipeline(cfg);
  double elapsed = now() - t0;
  CatRunConfig lcfg = cfg;
  lcfg.wigner_extent = 10;
  lcfg.wigner_points = 201;
  CatResult lin = cat_pipeline_with(lcfg, [](const StateMatrix& s) { return linear_subtract(s, 0.01); });
  double ratio = r.success_probability / lin.success_probability;
  bool per_step = true;
  for (size_t i = 0; i < r.step_probabilities.size(); ++i)
    per_step = per_step && r.step_probabilities[i] > lin.step_probabilities[i];

  CatRunConfig fine = cfg;
  fine.resolution *= 2;
  fine.cutoff = r.cutoff;
  fine.wigner_points = 2 * cfg.wigner_points - 1;
  auto rf = std::make_shared<CatResult>();
  auto get = [rf, fine] {
    if (rf->step_probabilities.empty()) *rf = cat_pipeline(fine);
    return rf;
  };
  record_doubling("cat φ_opt time grid", r.phi_opt, [=] { return get()->phi_opt; });
  record_doubling("cat fidelity time grid", r.fidelity, [=] { return get()->fidelity; });
  record_doubling("cat success probability time grid", r.success_probability,
                  [=] { return get()->success_probability; });
  record_doubling("cat negativity time+Wigner grid", r.negativity, [=] { return get()->negativity; });
  CatRunConfig big = lcfg;
  big.cutoff = 2 * lin.cutoff;
  record_doubling("linear baseline log10 P cutoff", std::log10(lin.success_probability), [big] {
    auto lb = cat_pipeline_with(big, [](const StateMatrix& s) { return linear_subtract(s, 0.01); });
    return std::log10(lb.success_probability);
  });

  std::ostringstream os;
  os << "cutoff " << r.cutoff << ", φ_opt=" << g(r.phi_opt) << " (−0.23 ± 0.05), F=" << g(r.fidelity)
     << " (≥ 0.9), negativity " << g(r.negativity) << " (> 0.1), P=" << g(r.success_probability) << " vs linear "
     << g(lin.success_probability) << " (ratio " << g(ratio) << ", ≥ 1e3), per-step TLE > linear: "
     << (per_step ? "yes" : "no") << ", pipeline time " << g(elapsed) << " s (≤ 1200)";
  bool ok = std::abs(r.phi_opt + 0.23) <= 0.05 && r.fidelity >= 0.9 && r.negativity > 0.1 && ratio >= 1e3 &&
            per_step && elapsed <= 1200;
  return {ok, os.str()};
}

FilterTable filter_at(double gt, int resolution) {
  TimeGrid grid = TimeGrid::for_pulse(gt, 1.0, resolution);
  return filter_function(gaussian_mode(gt, grid), 1.0, 20, gt);
}

Outcome c9() {
  double lo = filter_at(0.04, 200).max_deviation(), hi = filter_at(0.5, 200).max_deviation();
  record_doubling("filter max deviation at Γτ=0.04 resolution", lo, [] { return filter_at(0.04, 400).max_deviation(); });
  std::ostringstream os;
  os << "max_{n≤20} |f(n) − analytic|: Γτ=0.04 → " << g(lo) << " (≤ 0.05); Γτ=0.5 → " << g(hi) << " (> 0.1)";
  return {lo <= 0.05 && hi > 0.1, os.str()};
}

Outcome c10() {
  const int n = 6;
  double tau = cache.sub(n).tau;
  std::ostringstream os;
  bool ok = true;
  auto sweep = [&](const char* name, std::function<EmitterParams(double)> make) {
    double prev_s = cache.sub(n).value, prev_a = cache.add(n);
    for (double rate : {0.05, 0.1}) {
      EmitterParams p = make(rate);
      double Ps = subtraction_success(n, tau, p, kBase), Pa = addition_success(n, tau, p, kBase).P_a;
      ok = ok && Ps > Pa && Ps < prev_s && Pa < prev_a;
      os << name << "=" << rate << ": P_s=" << g(Ps) << ", P_a=" << g(Pa) << "; ";
      record_doubling(std::string("P_s(6, ") + name + "=" + g(rate) + ") resolution+tail", Ps,
                      [=] { return subtraction_success(n, tau, p, kDoubled); });
      record_doubling(std::string("P_a(6, ") + name + "=" + g(rate) + ") resolution+tail", Pa,
                      [=] { return addition_success(n, tau, p, kDoubled).P_a; });
      prev_s = Ps;
      prev_a = Pa;
    }
  };
  sweep("γ", [](double r) { return EmitterParams{1.0, r, 0.0}; });
  sweep("κ", [](double r) { return EmitterParams{1.0, 0.0, r}; });
  double Pa_big = addition_success(n, tau, EmitterParams{1.0, 1.0, 0.0}, kBase).P_a;
  os << "γ=Γ: P_a=" << g(Pa_big) << " (≤ 0.55)";
  return {ok && Pa_big <= 0.55, os.str()};
}

Outcome c11() {
  std::ostringstream os;
  bool ok = true;
  // Free propagation: emitter absent, one photon handed from an emitting to a catching cavity.
  {
    double tau = 0.3;
    TimeGrid grid = TimeGrid::for_pulse(tau, 1.0, 200);
    TemporalMode phi = gaussian_mode(tau, grid);
    CascadeNetwork net(EmitterParams{0.0, 0.0, 0.0});
    net.add_input("a", phi, 2).add_output("o", phi, 2);
    std::vector<int> d{1, 0, 0};
    auto traj = evolve_me(net, product_state(net.space(), d).density(), grid);
    double F = partial_trace(traj.final_state(), {"o"}).matrix()(1, 1).real();
    ok = ok && F >= 1 - 1e-4;
    os << "free-propagation catch fidelity " << g(F) << " (≥ 1 − 1e-4); ";
  }
  {
    double worst = 0.0;
    for (const auto& s : kFaddeevaTable) {
      cplx ref(s.re, s.im);
      worst = std::max(worst, std::abs(faddeeva({s.x, s.y}) - ref) / std::max(1.0, std::abs(ref)));
    }
    ok = ok && worst <= 1e-10;
    os << "Faddeeva max error " << g(worst) << " over " << std::size(kFaddeevaTable) << " points (≤ 1e-10); ";
  }
  {
    int n = 4;
    double tau = cache.sub(n).tau;
    TimeGrid grid = TimeGrid::for_pulse(tau, 1.0, 200);
    CascadeNetwork net(kIdeal);
    net.add_input("a", gaussian_mode(tau, grid), n + 1);
    std::vector<int> d{n, 0};
    EvolveOptions eo;
    eo.trace_tol = 1e-8;
    auto traj = evolve_me(net, product_state(net.space(), d).density(), grid, eo);
    ok = ok && traj.max_trace_drift <= 1e-8;
    os << "Lindblad trace drift " << g(traj.max_trace_drift) << " (≤ 1e-8); ";
  }
  double worst = 0.0;
  std::string which, over;
  for (const auto& job : doubling) {
    double d = std::abs(job.doubled() - job.base);
    if (d >= worst) worst = d, which = job.label;
    if (d >= kDoublingTol) over += "; over tolerance: " + job.label + " " + g(d);
  }
  bool dbl = !doubling.empty() && worst < kDoublingTol;
  os << "doubling: " << doubling.size() << " observables, largest change " << g(worst) << " (" << which
     << ", < 1e-4)" << over;
  return {ok && dbl, os.str()};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"optimal subtraction fidelity", c1},  {"mode splitting", c2},
      {"optimal-duration scaling", c3},      {"two-photon analytics", c4},
      {"reciprocity", c5},                   {"failure scaling", c6},
      {"Fock cascade", c7},                  {"cat pipeline", c8},
      {"filter function", c9},               {"imperfection ordering", c10},
      {"infrastructure oracles", c11}};
  const std::map<int, double> budget{{1, 300}, {2, 600}, {4, 60}, {5, 900}};
  int failures = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    double t0 = now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    double dt = now() - t0;
    auto b = budget.find(id);
    if (b != budget.end() && dt > b->second) {
      o.pass = false;
      o.detail += "; runtime " + g(dt) + " s exceeds " + g(b->second) + " s";
    }
    if (!o.pass) ++failures;
    std::printf("%s [%d] %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(),
                o.detail.c_str(), dt);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
