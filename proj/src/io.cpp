#include "photonforge/io.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace pf {

double round_sig(double x, int digits) {
  if (!std::isfinite(x) || x == 0.0) return x;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return std::strtod(buf, nullptr);
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

Json matrix_json(const Matrix& m) {
  Json re = Json::array(), im = Json::array();
  for (int i = 0; i < m.rows(); ++i) {
    Json r = Json::array(), c = Json::array();
    for (int j = 0; j < m.cols(); ++j) {
      r.push_back(round_sig(m(i, j).real()));
      c.push_back(round_sig(m(i, j).imag()));
    }
    re.push_back(r);
    im.push_back(c);
  }
  return {{"re", re}, {"im", im}};
}

Json occupations_json(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(round_sig(x));
  return a;
}

Json to_json(const TauOptimum& t) {
  return {{"tau", round_sig(t.tau)}, {"value", round_sig(t.value)}, {"widened", t.widened}};
}

Json to_json(const AdditionResult& a) {
  return {{"tau", round_sig(a.tau)},
          {"P_a", round_sig(a.P_a)},
          {"oracle_error", round_sig(a.oracle_error)},
          {"subtraction_probability", round_sig(a.jump.probability)}};
}

Json to_json(const FockCascadeResult& f) {
  Json steps = Json::array();
  for (const auto& s : f.steps)
    steps.push_back({{"n", s.n},
                     {"tau", round_sig(s.tau)},
                     {"P_s", round_sig(s.P_s)},
                     {"P_a", round_sig(s.P_a)},
                     {"cumulative", round_sig(s.cumulative)},
                     {"n_tau", round_sig(s.n * s.tau)}});
  return {{"P_M", round_sig(f.P_M)}, {"steps", steps}};
}

Json to_json(const ScalingFit& s) {
  return {{"beta", round_sig(s.beta)},
          {"prefactor", round_sig(s.prefactor)},
          {"n_lo", s.n_lo},
          {"n_hi", s.n_hi},
          {"residual", round_sig(s.residual)},
          {"points", s.points}};
}

Json to_json(const ModeSplitting& m) {
  return {{"tau", round_sig(m.tau)},
          {"n", m.n},
          {"nbar_exact", occupations_json(m.nbar_exact)},
          {"nbar_truncated", occupations_json(m.nbar_truncated)},
          {"discarded", round_sig(m.exact.discarded)},
          {"emitted", round_sig(m.emitted)},
          {"overlap_phi_a", round_sig(m.overlap_phi_a)}};
}

Json to_json(const CatResult& c) {
  return {{"cutoff", c.cutoff},
          {"phi_opt", round_sig(c.phi_opt)},
          {"fidelity", round_sig(c.fidelity)},
          {"fidelity_unsqueezed", round_sig(c.fidelity_unsqueezed)},
          {"success_probability", round_sig(c.success_probability)},
          {"step_probabilities", occupations_json(c.step_probabilities)},
          {"tail_masses", occupations_json(c.tail_masses)},
          {"negativity", round_sig(c.negativity)}};
}

Json to_json(const FilterTable& f) {
  Json rows = Json::array();
  for (const auto& r : f.rows)
    rows.push_back({{"n", r.n},
                    {"P", round_sig(r.probability)},
                    {"f_re", round_sig(r.f.real())},
                    {"f_im", round_sig(r.f.imag())},
                    {"analytic", round_sig(r.analytic)},
                    {"ill_conditioned", r.ill_conditioned}});
  return {{"gamma_tau", round_sig(f.gamma_tau)}, {"max_deviation", round_sig(f.max_deviation())}, {"rows", rows}};
}

Json to_json(const DegeneracyScan& d) { return {{"tau_opt", round_sig(d.tau_opt)}, {"ratio", round_sig(d.ratio)}}; }

std::string csv_table(const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows) {
  std::ostringstream os;
  for (size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
  os << '\n';
  for (const auto& r : rows) {
    for (size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << fmt(r[i]);
    os << '\n';
  }
  return os.str();
}

std::string wigner_csv(const WignerGrid& w) {
  std::ostringstream os;
  os << "p\\x";
  for (int j = 0; j < w.x.size(); ++j) os << ',' << fmt(w.x(j));
  os << '\n';
  for (int i = 0; i < w.p.size(); ++i) {
    os << fmt(w.p(i));
    for (int j = 0; j < w.x.size(); ++j) os << ',' << fmt(w.W(i, j));
    os << '\n';
  }
  return os.str();
}

std::string mode_csv(const TemporalMode& m) {
  std::ostringstream os;
  m.write_csv(os);
  return os.str();
}

}  // namespace pf
