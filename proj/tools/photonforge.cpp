#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "manifest.hpp"
#include "photonforge/analytic2p.hpp"
#include "photonforge/io.hpp"
#include "photonforge/protocols.hpp"

namespace pf::cli {
namespace {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string canonical_key(std::string k) {
  for (char& c : k)
    if (c == '-') c = '_';
  return k;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct Key {
  std::string name;
  std::string def;
  std::string help;
  bool flag = false;
};

// Resolved key/value configuration of one run with typed, bounds-checked access.
class Run {
 public:
  std::string command;
  std::map<std::string, std::string> values;

  const std::string& raw(const std::string& k) const {
    auto it = values.find(k);
    if (it == values.end()) throw std::logic_error("undeclared key " + k);
    return it->second;
  }

  double number(const std::string& k, double lo, double hi) const {
    const std::string& s = raw(k);
    double v;
    try {
      size_t pos = 0;
      v = std::stod(s, &pos);
      if (pos != s.size()) throw std::invalid_argument(s);
    } catch (const std::exception&) {
      throw ConfigError("field '" + k + "': expected a number, got '" + s + "'");
    }
    if (!(v >= lo && v <= hi))
      throw ConfigError("field '" + k + "': " + s + " outside [" + fmt(lo) + ", " + fmt(hi) + "]");
    return v;
  }

  int integer(const std::string& k, int lo, int hi) const {
    double v = number(k, lo, hi);
    if (v != std::floor(v)) throw ConfigError("field '" + k + "': expected an integer, got '" + raw(k) + "'");
    return static_cast<int>(v);
  }

  bool boolean(const std::string& k) const {
    const std::string& s = raw(k);
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw ConfigError("field '" + k + "': expected true or false, got '" + s + "'");
  }

  // "auto" or a number in [lo, hi].
  std::optional<double> auto_number(const std::string& k, double lo, double hi) const {
    if (raw(k) == "auto") return std::nullopt;
    return number(k, lo, hi);
  }

  // "a..b" or a single integer.
  std::vector<int> range(const std::string& k, int lo, int hi) const {
    const std::string& s = raw(k);
    auto dots = s.find("..");
    int a, b;
    try {
      if (dots == std::string::npos) {
        a = b = std::stoi(s);
      } else {
        a = std::stoi(s.substr(0, dots));
        b = std::stoi(s.substr(dots + 2));
      }
    } catch (const std::exception&) {
      throw ConfigError("field '" + k + "': expected an integer range a..b, got '" + s + "'");
    }
    if (a > b || a < lo || b > hi)
      throw ConfigError("field '" + k + "': range " + s + " must lie within " + std::to_string(lo) + ".." +
                        std::to_string(hi));
    std::vector<int> r;
    for (int i = a; i <= b; ++i) r.push_back(i);
    return r;
  }

  std::vector<double> list(const std::string& k, double lo, double hi) const {
    std::vector<double> out;
    std::stringstream ss(raw(k));
    std::string item;
    while (std::getline(ss, item, ',')) {
      Run tmp;
      tmp.values[k] = trim(item);
      out.push_back(tmp.number(k, lo, hi));
    }
    if (out.empty()) throw ConfigError("field '" + k + "': empty list");
    return out;
  }

  Json config_json() const {
    Json j = Json::object();
    for (const auto& [k, v] : values) j[k] = v;
    return j;
  }
};

struct Context {
  Run run;
  int threads = 1;
  OutputSet* out = nullptr;
};

// Keys shared by the emitter-level commands.
std::vector<Key> physics_keys() {
  return {{"gamma", "0", "emitter loss rate γ/Γ into other channels"},
          {"kappa", "0", "pure dephasing rate κ/Γ"},
          {"resolution", "200", "time samples per min(τ, 1/Γ)"},
          {"tail", "20", "trailing integration time in units of 1/Γ"},
          {"aux_dim", "-1", "auxiliary mode dimension (−1: n+1)"}};
}

EmitterParams emitter(const Run& r) {
  EmitterParams p{1.0, r.number("gamma", 0.0, 10.0), r.number("kappa", 0.0, 10.0)};
  p.validate();
  return p;
}

NumericOptions numeric(const Run& r) {
  NumericOptions o;
  o.resolution = r.integer("resolution", 20, 5000);
  o.tail = r.number("tail", 1.0, 200.0);
  o.aux_dim = r.integer("aux_dim", -1, 64);
  if (o.aux_dim == 0 || o.aux_dim == 1) throw ConfigError("field 'aux_dim': must be −1 or ≥ 2");
  return o;
}

Json provenance(const NumericOptions& o, Json cutoffs = Json::object()) {
  cutoffs["aux_dim"] = o.aux_dim;
  return {{"grid", {{"resolution", o.resolution}, {"tail", round_sig(o.tail)}, {"pulse_span", round_sig(kPulseSpan)}}},
          {"cutoffs", cutoffs},
          {"tolerances", {{"tau_rel_tol", 1e-3}, {"coupling_regularization", kEpsReg}}}};
}

void write_record(Context& c, const Json& outputs, const Json& prov) {
  Json rec{{"command", c.run.command}, {"config", c.run.config_json()}, {"outputs", outputs}, {"provenance", prov}};
  c.out->write("result.json", rec.dump(2) + "\n");
}

std::string csv_of(const std::function<void(std::ostream&)>& w) {
  std::ostringstream os;
  w(os);
  return os.str();
}

TauOptimum tau_for(const Run& r, int n, const EmitterParams& p, const NumericOptions& o) {
  if (auto t = r.auto_number("gamma_tau", 1e-3, 10.0)) return {*t, subtraction_success(n, *t, p, o), false};
  return optimize_tau_sub(n, p, o);
}

void cmd_subtract(Context& c) {
  const Run& r = c.run;
  int n = r.integer("n", 1, 40);
  auto p = emitter(r);
  auto o = numeric(r);
  TauOptimum t = tau_for(r, n, p, o);
  TimeGrid g = TimeGrid::for_pulse(t.tau, 1.0, o.resolution, o.tail);
  TemporalMode phi = gaussian_mode(t.tau, g);
  JumpResult jr = general_jump(n, phi, p, o.aux_dim);
  c.out->write("phi_b.csv", mode_csv(jr.mode));
  Json outputs{{"tau_sub", round_sig(t.tau)},
               {"P_s", round_sig(t.value)},
               {"tau_pi", round_sig(tau_pi(n))},
               {"jump_probability", round_sig(jr.probability)},
               {"optimized", r.raw("gamma_tau") == "auto"}};
  if (r.boolean("modes")) {
    if (p.gamma_loss > 0 || p.dephasing > 0)
      throw ConfigError("field 'modes': the output-mode decomposition needs gamma = kappa = 0");
    ModeSplitting ms = mode_splitting(n, t.tau);
    c.out->write("modes.csv", csv_of([&](std::ostream& os) { ms.exact.write_csv(os); }));
    outputs["modes"] = to_json(ms);
  }
  write_record(c, outputs, provenance(o));
  std::cout << "n=" << n << " tau_sub=" << fmt(t.tau) << " P_s=" << fmt(t.value) << "\n";
}

void cmd_add(Context& c) {
  const Run& r = c.run;
  int n = r.integer("n", 1, 40);
  auto p = emitter(r);
  auto o = numeric(r);
  TauOptimum t = tau_for(r, n, p, o);
  AdditionResult a = addition_success(n, t.tau, p, o);
  c.out->write("phi_b.csv", mode_csv(a.jump.mode));
  Json outputs = to_json(a);
  outputs["P_s"] = round_sig(t.value);
  write_record(c, outputs, provenance(o));
  std::cout << "n=" << n << " tau=" << fmt(t.tau) << " P_a=" << fmt(a.P_a) << " P_s=" << fmt(t.value) << "\n";
}

void cmd_sweep_tau(Context& c) {
  const Run& r = c.run;
  auto ns = r.range("n", 1, 40);
  auto p = emitter(r);
  auto o = numeric(r);
  bool exact = r.boolean("exact");
  auto gts = r.list("gamma_tau_list", 1e-3, 10.0);
  struct Row {
    TauOptimum ex, tr;
    std::vector<double> occ;
  };
  std::vector<Row> rows(ns.size());
  parallel_for(static_cast<int>(ns.size()), c.threads, [&](int i) {
    int n = ns[i];
    if (exact) rows[i].ex = optimize_tau_sub(n, p, o);
    rows[i].tr = optimize_tau_truncated(n, p.gamma_wg, o);
    rows[i].occ = truncated_occupations(n, exact ? rows[i].ex.tau : rows[i].tr.tau, p.gamma_wg, o.resolution, o.tail);
  });
  std::vector<std::vector<double>> table, occ;
  Json pts = Json::array();
  for (size_t i = 0; i < ns.size(); ++i) {
    const Row& w = rows[i];
    double te = exact ? w.ex.tau : NAN, pe = exact ? w.ex.value : NAN;
    table.push_back({double(ns[i]), tau_pi(ns[i]), te, pe, w.tr.tau, w.tr.value, w.occ[0], w.occ[1]});
    Json e{{"n", ns[i]}, {"tau_pi", round_sig(tau_pi(ns[i]))}, {"truncated", to_json(w.tr)}};
    if (exact) e["exact"] = to_json(w.ex);
    pts.push_back(e);
  }
  std::vector<std::pair<int, double>> grid;
  for (int n : ns)
    for (double gt : gts) grid.emplace_back(n, gt);
  std::vector<std::vector<double>> occ_rows(grid.size());
  parallel_for(static_cast<int>(grid.size()), c.threads, [&](int i) {
    auto [n, gt] = grid[i];
    auto v = truncated_occupations(n, gt, p.gamma_wg, o.resolution, o.tail);
    occ_rows[i] = {double(n), gt, v[0], v[1]};
  });
  c.out->write("tau_opt.csv", csv_table({"n", "tau_pi", "tau_sub_exact", "P_s_exact", "tau_sub_truncated",
                                         "P_s_truncated", "nbar1_truncated", "nbar2_truncated"},
                                        table));
  c.out->write("occupations.csv", csv_table({"n", "gamma_tau", "nbar1_truncated", "nbar2_truncated"}, occ_rows));
  write_record(c, {{"points", pts}}, provenance(o));
  for (const auto& row : table)
    std::cout << "n=" << row[0] << " tau_sub=" << fmt(row[2]) << " truncated=" << fmt(row[4]) << "\n";
}

void cmd_fock_cascade(Context& c) {
  const Run& r = c.run;
  int M = r.integer("M", 2, 40);
  auto p = emitter(r);
  auto o = numeric(r);
  FockCascadeResult f = fock_cascade(M, p, o, c.threads);
  std::vector<std::vector<double>> rows;
  for (const auto& s : f.steps) rows.push_back({double(s.n), s.tau, s.P_s, s.P_a, s.cumulative});
  c.out->write("steps.csv", csv_table({"n", "tau", "P_s", "P_a", "cumulative"}, rows));
  write_record(c, to_json(f), provenance(o));
  std::cout << "M=" << M << " P_M=" << fmt(f.P_M) << "\n";
}

struct AdditionPoint {
  int n;
  double tau, P_s, P_a;
};

std::vector<AdditionPoint> optimal_additions(const std::vector<int>& ns, const EmitterParams& p,
                                             const NumericOptions& o, int threads) {
  std::vector<AdditionPoint> pts(ns.size());
  parallel_for(static_cast<int>(ns.size()), threads, [&](int i) {
    auto t = optimize_tau_sub(ns[i], p, o);
    pts[i] = {ns[i], t.tau, t.value, addition_success(ns[i], t.tau, p, o).P_a};
  });
  return pts;
}

void cmd_scaling(Context& c) {
  const Run& r = c.run;
  auto ns = r.range("n", 1, 40);
  if (ns.size() < 5) throw ConfigError("field 'n': the fit needs at least 5 photon numbers");
  auto p = emitter(r);
  auto o = numeric(r);
  auto pts = optimal_additions(ns, p, o, c.threads);
  std::vector<std::vector<double>> rows;
  std::vector<double> x, y;
  for (const auto& q : pts) {
    rows.push_back({double(q.n), q.tau, q.P_s, q.P_a, 1.0 - q.P_a});
    x.push_back(q.n);
    y.push_back(1.0 - q.P_a);
  }
  ScalingFit fit = scaling_fit(x, y);
  // Sensitivity to the fit range: every contiguous window of at least 5 points.
  std::vector<std::vector<double>> sens;
  Json sj = Json::array();
  for (size_t a = 0; a < x.size(); ++a)
    for (size_t b = a + 5; b <= x.size(); ++b) {
      ScalingFit s = scaling_fit({x.begin() + a, x.begin() + b}, {y.begin() + a, y.begin() + b});
      sens.push_back({double(s.n_lo), double(s.n_hi), s.beta, s.residual});
      sj.push_back(to_json(s));
    }
  c.out->write("points.csv", csv_table({"n", "tau", "P_s", "P_a", "failure"}, rows));
  c.out->write("sensitivity.csv", csv_table({"n_lo", "n_hi", "beta", "residual"}, sens));
  write_record(c, {{"fit", to_json(fit)}, {"sensitivity", sj}}, provenance(o));
  std::cout << "beta=" << fmt(fit.beta) << " over n=" << fit.n_lo << ".." << fit.n_hi << "\n";
}

void cmd_reciprocity(Context& c) {
  const Run& r = c.run;
  auto ns = r.range("n", 1, 40);
  auto p = emitter(r);
  auto o = numeric(r);
  auto pts = optimal_additions(ns, p, o, c.threads);
  std::vector<std::vector<double>> rows;
  double worst = 0.0;
  for (const auto& q : pts) {
    rows.push_back({double(q.n), q.tau, q.P_s, q.P_a, std::abs(q.P_a - q.P_s)});
    worst = std::max(worst, std::abs(q.P_a - q.P_s));
    std::cout << "n=" << q.n << " P_s=" << fmt(q.P_s) << " P_a=" << fmt(q.P_a) << "\n";
  }
  c.out->write("reciprocity.csv", csv_table({"n", "tau", "P_s", "P_a", "abs_diff"}, rows));
  write_record(c, {{"max_abs_diff", round_sig(worst)}}, provenance(o));
}

std::vector<Key> cat_keys(const char* extent = "6", const char* points = "481") {
  return {{"M", "6", "number of heralded subtractions"},
          {"r", "1.15", "input squeezing parameter"},
          {"gamma_tau", "0.04", "pulse duration Γτ"},
          {"cutoff", "0", "Fock cutoff (0: smallest passing the tail test)"},
          {"aux_dim", "3", "auxiliary mode dimension"},
          {"resolution", "200", "time samples per τ"},
          {"phi_lo", "-1", "anti-squeeze angle search lower bound"},
          {"phi_hi", "0", "anti-squeeze angle search upper bound"},
          {"wigner_points", points, "Wigner grid points per axis"},
          {"wigner_extent", extent, "Wigner grid half-width"}};
}

CatRunConfig cat_config(const Run& r) {
  CatRunConfig cfg;
  cfg.M = r.integer("M", 0, 20);
  cfg.r = r.number("r", 0.0, 3.0);
  cfg.gamma_tau = r.number("gamma_tau", 1e-3, 10.0);
  cfg.cutoff = r.integer("cutoff", 0, 400);
  cfg.aux_dim = r.integer("aux_dim", 3, 16);
  cfg.resolution = r.integer("resolution", 20, 5000);
  cfg.phi_lo = r.number("phi_lo", -3.0, 3.0);
  cfg.phi_hi = r.number("phi_hi", -3.0, 3.0);
  if (!(cfg.phi_lo < cfg.phi_hi)) throw ConfigError("field 'phi_lo': must be below phi_hi");
  cfg.wigner_points = r.integer("wigner_points", 11, 1001);
  cfg.wigner_extent = r.number("wigner_extent", 1.0, 20.0);
  return cfg;
}

void emit_cat(Context& c, const CatRunConfig& cfg, const CatResult& res, Json extra) {
  std::vector<std::vector<double>> rows;
  for (size_t i = 0; i < res.step_probabilities.size(); ++i)
    rows.push_back({double(i + 1), res.step_probabilities[i], res.tail_masses[i]});
  c.out->write("steps.csv", csv_table({"step", "P_step", "tail_mass"}, rows));
  c.out->write("wigner.csv", wigner_csv(res.wigner));
  Json outputs = to_json(res);
  for (auto& [k, v] : extra.items()) outputs[k] = v;
  Json prov{{"grid", {{"resolution", cfg.resolution}, {"wigner_points", cfg.wigner_points},
                      {"wigner_extent", round_sig(cfg.wigner_extent)}}},
            {"cutoffs", {{"fock", res.cutoff}, {"aux_dim", cfg.aux_dim}}},
            {"tolerances", {{"tail_mass", 1e-8}, {"wigner_normalization", 1e-3}}}};
  write_record(c, outputs, prov);
  std::cout << "cutoff=" << res.cutoff << " phi=" << fmt(res.phi_opt) << " F=" << fmt(res.fidelity)
            << " P=" << fmt(res.success_probability) << " negativity=" << fmt(res.negativity) << "\n";
}

void cmd_cat(Context& c) {
  CatRunConfig cfg = cat_config(c.run);
  emit_cat(c, cfg, cat_pipeline(cfg), Json::object());
}

void cmd_linear_baseline(Context& c) {
  CatRunConfig cfg = cat_config(c.run);
  double R = c.run.number("R", 1e-6, 0.999);
  auto res = cat_pipeline_with(cfg, [R](const StateMatrix& s) { return linear_subtract(s, R); });
  emit_cat(c, cfg, res, {{"R", round_sig(R)}});
}

void cmd_two_photon(Context& c) {
  const Run& r = c.run;
  double beta = r.number("beta", 1e-3, 100.0);
  int points = r.integer("points", 51, 2001);
  double lo = r.number("lo", 0.01, 5.0), hi = r.number("hi", 0.01, 5.0);
  if (!(lo < hi)) throw ConfigError("field 'lo': must be below hi");
  Json outputs = Json::object();
  if (r.boolean("solve_degeneracy")) {
    double root = solve_degeneracy(beta);
    outputs["degeneracy_root"] = round_sig(root);
    std::cout << "approximate degeneracy root: tau = " << fmt(root) << " /Γ\n";
  }
  DegeneracyScan d = exact_degeneracy(1.0, lo, hi, points);
  outputs["exact"] = to_json(d);
  FrequencyGrid fg = FrequencyGrid::symmetric(d.tau_opt, points);
  auto psi = two_photon_output(1.0, d.tau_opt, fg, TwoPhotonForm::Exact);
  SchmidtResult s = schmidt(psi);
  outputs["exact"]["schmidt"] = occupations_json(s.lambdas);
  c.out->write("amplitude.csv", csv_of([&](std::ostream& os) { psi.write_csv(os); }));
  write_record(c, outputs,
               {{"grid", {{"points", points}, {"span", 10.0}}},
                {"cutoffs", Json::object()},
                {"tolerances", {{"golden_section", 1e-5}}}});
  std::cout << "exact Schmidt-degeneracy optimum: tau = " << fmt(d.tau_opt) << " /Γ (λ1/λ2 = " << fmt(d.ratio)
            << ")\n";
}

struct Command {
  std::string name, help;
  std::vector<Key> keys;
  std::function<void(Context&)> run;
};

std::vector<Command> commands() {
  auto with = [](std::vector<Key> a, const std::vector<Key>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
  };
  Key n{"n", "4", "photon number"};
  Key gt{"gamma_tau", "auto", "pulse duration Γτ, or auto for the optimum"};
  auto cat = cat_keys();
  return {
      {"subtract", "optimal single-photon subtraction from a Fock pulse",
       with({n, gt, {"modes", "true", "emit the output-mode decomposition", true}}, physics_keys()), cmd_subtract},
      {"add", "single-photon addition at the subtraction optimum", with({n, gt}, physics_keys()), cmd_add},
      {"sweep-tau", "optimal durations and mode occupations over a photon-number range",
       with({{"n", "4..10", "photon-number range a..b"},
             {"exact", "true", "also run the exact master-equation optimization", true},
             {"gamma_tau_list", "0.02,0.05,0.1,0.2,0.3", "Γτ values for the occupation table"}},
            physics_keys()),
       cmd_sweep_tau},
      {"fock-cascade", "Fock-state composition by repeated addition",
       with({{"M", "10", "target photon number"}}, physics_keys()), cmd_fock_cascade},
      {"scaling", "power-law fit of the addition failure probability",
       with({{"n", "4..12", "photon-number range a..b"}}, physics_keys()), cmd_scaling},
      {"reciprocity", "subtraction versus addition success probabilities",
       with({{"n", "2..6", "photon-number range a..b"}}, physics_keys()), cmd_reciprocity},
      {"cat", "cat-state distillation by repeated heralded subtraction", cat, cmd_cat},
      {"linear-baseline", "cat distillation with a weak beam-splitter tap",
       // The linearly subtracted state stays broader after anti-squeezing.
       with(cat_keys("10", "201"), {{"R", "0.01", "beam-splitter reflectivity"}}), cmd_linear_baseline},
      {"two-photon", "analytic two-photon Schmidt degeneracy",
       {{"beta", "1", "degeneracy condition parameter"},
        {"points", "401", "frequency samples per axis"},
        {"lo", "0.3", "exact scan lower bound (1/Γ)"},
        {"hi", "0.5", "exact scan upper bound (1/Γ)"},
        {"solve_degeneracy", "true", "solve the approximate degeneracy condition", true}},
       cmd_two_photon},
  };
}

std::map<std::string, std::string> read_config(const std::string& path, const std::vector<Key>& keys) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file '" + path + "'");
  std::map<std::string, std::string> kv;
  std::vector<std::string> errors;
  std::string line;
  int ln = 0;
  while (std::getline(f, line)) {
    ++ln;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      errors.push_back(path + ":" + std::to_string(ln) + ": expected key = value");
      continue;
    }
    std::string k = canonical_key(trim(line.substr(0, eq)));
    bool known = k == "out" || k == "threads";
    for (const auto& key : keys) known = known || key.name == k;
    if (!known) {
      errors.push_back(path + ":" + std::to_string(ln) + ": unknown key '" + k + "'");
      continue;
    }
    kv[k] = trim(line.substr(eq + 1));
  }
  if (!errors.empty()) {
    std::string msg;
    for (const auto& e : errors) msg += (msg.empty() ? "" : "\n") + e;
    throw ConfigError(msg);
  }
  return kv;
}

}  // namespace
}  // namespace pf::cli

int main(int argc, char** argv) {
  using namespace pf::cli;
  CLI::App app{"Photon subtraction and addition by a two-level emitter"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path, out_flag, threads_flag;
  auto* o_config = app.add_option("--config", config_path, "key = value configuration file");
  auto* o_out = app.add_option("--out", out_flag, "output directory (default: results/<command>)");
  auto* o_threads = app.add_option("--threads", threads_flag, "worker threads for sweeps");

  auto cmds = commands();
  std::vector<std::vector<std::pair<CLI::Option*, std::string>>> flags(cmds.size());
  std::vector<std::vector<std::string>> storage(cmds.size());
  std::vector<CLI::App*> subs;
  for (size_t i = 0; i < cmds.size(); ++i) {
    auto* sub = app.add_subcommand(cmds[i].name, cmds[i].help);
    storage[i].resize(cmds[i].keys.size());
    for (size_t k = 0; k < cmds[i].keys.size(); ++k) {
      const Key& key = cmds[i].keys[k];
      std::string flag = "--" + key.name;
      for (char& ch : flag)
        if (ch == '_') ch = '-';
      std::string help = key.help + " [" + key.def + "]";
      CLI::Option* opt = key.flag ? sub->add_flag(flag + "{true}", storage[i][k], help)
                                  : sub->add_option(flag, storage[i][k], help);
      flags[i].emplace_back(opt, key.name);
    }
    subs.push_back(sub);
  }
  CLI11_PARSE(app, argc, argv);

  size_t ci = 0;
  while (!subs[ci]->parsed()) ++ci;
  const Command& cmd = cmds[ci];
  try {
    Context ctx;
    ctx.run.command = cmd.name;
    for (const auto& k : cmd.keys) ctx.run.values[k.name] = k.def;
    std::map<std::string, std::string> file;
    if (o_config->count()) file = read_config(config_path, cmd.keys);
    std::string out_dir = "results/" + cmd.name, threads = "1";
    for (const auto& [k, v] : file) {
      if (k == "out")
        out_dir = v;
      else if (k == "threads")
        threads = v;
      else
        ctx.run.values[k] = v;
    }
    for (size_t k = 0; k < flags[ci].size(); ++k)
      if (flags[ci][k].first->count()) ctx.run.values[flags[ci][k].second] = storage[ci][k];
    if (const char* env = std::getenv("PHOTONFORGE_OUT")) out_dir = env;
    if (o_out->count()) out_dir = out_flag;
    if (o_threads->count()) threads = threads_flag;
    {
      Run t;
      t.values["threads"] = threads;
      ctx.threads = t.integer("threads", 1, 256);
    }
    OutputSet out(out_dir);
    ctx.out = &out;
    cmd.run(ctx);
    out.write_manifest();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << cmd.name << ": " << e.what() << "\n";
    return 1;
  }
  return 0;
}
