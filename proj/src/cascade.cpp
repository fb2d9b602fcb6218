#include "photonforge/cascade.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

namespace pf {

void EmitterParams::validate() const {
  if (gamma_wg < 0 || gamma_loss < 0 || dephasing < 0) throw ConfigurationError("emitter rates must be nonnegative");
}

CascadeNetwork::CascadeNetwork(EmitterParams params, Picture picture) : params_(params), picture_(picture) {
  params_.validate();
}

CascadeNetwork& CascadeNetwork::add_input(std::string label, const TemporalMode& mode, int dim) {
  return add_input(std::move(label), emit_coupling(mode), dim);
}

CascadeNetwork& CascadeNetwork::add_input(std::string label, CouplingFunction coupling, int dim) {
  if (picture_ == Picture::Interaction && !inputs_.empty())
    throw ConfigurationError("unsupported configuration: interaction picture takes exactly one input mode");
  if (coupling.kind() != CouplingFunction::Kind::Emit) throw ConfigurationError("input cavities need emit couplings");
  if (dim < 1) throw ConfigurationError("cavity dimension must be positive");
  inputs_.push_back({std::move(label), std::move(coupling), dim});
  return *this;
}

CascadeNetwork& CascadeNetwork::add_output(std::string label, const TemporalMode& mode, int dim) {
  if (picture_ == Picture::Interaction)
    throw ConfigurationError("unsupported configuration: interaction picture has no output cavities");
  if (dim < 1) throw ConfigurationError("cavity dimension must be positive");
  outputs_.push_back({std::move(label), catch_coupling(mode), dim});
  return *this;
}

CascadeNetwork& CascadeNetwork::set_aux_dim(int dim) {
  if (dim < 2) throw ConfigurationError("auxiliary mode dimension must be at least 2");
  aux_dim_ = dim;
  return *this;
}

TensorSpace CascadeNetwork::space() const {
  std::vector<TensorSpace::Subsystem> subs;
  for (const auto& c : inputs_) subs.push_back({c.label, c.dim});
  subs.push_back({kEmitter, 2});
  if (picture_ == Picture::Interaction) subs.push_back({kAux, aux_dim_});
  for (const auto& c : outputs_) subs.push_back({c.label, c.dim});
  return TensorSpace(subs);
}

namespace {

void append_incoherent(Generator& g, const EmitterParams& p, int emitter_idx) {
  if (p.gamma_loss > 0) {
    int k = g.n_coeffs++;
    g.channels.push_back({"loss", {{k, {{{emitter_idx, sigma_minus()}}}}}});
  }
  if (p.dephasing > 0) {
    int k = g.n_coeffs++;
    g.channels.push_back({"dephasing", {{k, {{{emitter_idx, sigma_ee()}}}}}});
  }
}

void fill_incoherent(const EmitterParams& p, std::vector<cplx>& c, int first) {
  if (p.gamma_loss > 0) c[first++] = std::sqrt(p.gamma_loss);
  if (p.dephasing > 0) c[first++] = std::sqrt(p.dephasing);
}

}  // namespace

Generator interaction_generator(const TemporalMode& mode, const EmitterParams& params, int mode_dim, int aux_dim) {
  params.validate();
  if (aux_dim < 2) throw ConfigurationError("auxiliary mode dimension must be at least 2");
  Generator g;
  g.space = TensorSpace({{"a", mode_dim}, {kEmitter, 2}, {kAux, aux_dim}});
  Matrix a = ladder(mode_dim), c = ladder(aux_dim), sm = sigma_minus();
  Matrix sp = sm.adjoint();
  // coefficients: 0 a†σ−, 1 σ+a, 2 c†σ−, 3 σ+c, 4 √Γσ−, 5 c in L
  g.n_coeffs = 6;
  g.hamiltonian = {{0, {{{0, a.adjoint()}, {1, sm}}}},
                   {1, {{{0, a}, {1, sp}}}},
                   {2, {{{2, c.adjoint()}, {1, sm}}}},
                   {3, {{{2, c}, {1, sp}}}}};
  g.channels.push_back({"waveguide", {{4, {{{1, sm}}}}, {5, {{{2, c}}}}}});
  append_incoherent(g, params, 1);
  auto m = std::make_shared<const TemporalMode>(mode);
  double G = params.gamma_wg;
  EmitterParams p = params;
  g.coefficients = [m, G, p](double t, std::vector<cplx>& k) {
    auto pt = m->eval(t);
    auto f = angle_factors(pt);
    double sg = std::sqrt(G);
    cplx h = I * sg * std::conj(pt.phi);
    k[0] = h;
    k[1] = std::conj(h);
    k[2] = h * f.cot2;
    k[3] = std::conj(k[2]);
    k[4] = sg;
    k[5] = -2.0 * pt.phi * f.csc2;
    fill_incoherent(p, k, 6);
  };
  return g;
}

Generator CascadeNetwork::generator() const {
  if (picture_ == Picture::Interaction) {
    if (inputs_.size() != 1) throw ConfigurationError("interaction picture requires exactly one input mode");
    return interaction_generator(inputs_.front().coupling.mode(), params_, inputs_.front().dim, aux_dim_);
  }
  Generator g;
  g.space = space();
  struct Node {
    int sub;
    Matrix op;
    const CouplingFunction* coupling;  // null: emitter
  };
  std::vector<Node> nodes;
  int idx = 0;
  for (const auto& c : inputs_) nodes.push_back({idx++, ladder(c.dim), &c.coupling});
  int emitter_idx = idx++;
  if (params_.gamma_wg > 0) nodes.push_back({emitter_idx, sigma_minus(), nullptr});
  for (const auto& c : outputs_) nodes.push_back({idx++, ladder(c.dim), &c.coupling});

  int m = static_cast<int>(nodes.size());
  g.n_coeffs = m + m * (m - 1);
  int p = m;
  for (int j = 0; j < m; ++j)
    for (int k = j + 1; k < m; ++k) {
      // (1/2i)(ℓ_k†ℓ_j − ℓ_j†ℓ_k)
      g.hamiltonian.push_back({p++, {{{nodes[k].sub, nodes[k].op.adjoint()}, {nodes[j].sub, nodes[j].op}}}});
      g.hamiltonian.push_back({p++, {{{nodes[j].sub, nodes[j].op.adjoint()}, {nodes[k].sub, nodes[k].op}}}});
    }
  Channel wg{"waveguide", {}};
  for (int j = 0; j < m; ++j) wg.terms.push_back({j, {{{nodes[j].sub, nodes[j].op}}}});
  if (m > 0) g.channels.push_back(std::move(wg));
  int first_incoherent = g.n_coeffs;
  append_incoherent(g, params_, emitter_idx);

  std::vector<const CouplingFunction*> couplings;
  for (const auto& n : nodes) couplings.push_back(n.coupling);
  // CouplingFunction holds its mode by shared pointer; copy to keep the lambda self-contained.
  std::vector<std::optional<CouplingFunction>> owned;
  for (auto* c : couplings) owned.push_back(c ? std::optional<CouplingFunction>(*c) : std::nullopt);
  double sg = std::sqrt(params_.gamma_wg);
  EmitterParams prm = params_;
  g.coefficients = [owned, sg, m, prm, first_incoherent](double t, std::vector<cplx>& k) {
    for (int j = 0; j < m; ++j) k[j] = owned[j] ? std::conj(owned[j]->at(t)) : cplx(sg);
    int p = m;
    for (int j = 0; j < m; ++j)
      for (int q = j + 1; q < m; ++q) {
        cplx a = -0.5 * I * std::conj(k[q]) * k[j];
        k[p++] = a;
        k[p++] = std::conj(a);
      }
    fill_incoherent(prm, k, first_incoherent);
  };
  return g;
}

const OperatorMatrix& GeneratorSnapshot::jump(std::string_view name) const {
  for (const auto& [n, op] : jumps)
    if (n == name) return op;
  throw ConfigurationError("no jump operator named '" + std::string(name) + "'");
}

namespace {

GeneratorSnapshot snapshot_of(const Generator& g, double t) {
  GeneratorSnapshot s{OperatorMatrix(g.space, g.hamiltonian_at(t)), {}};
  for (size_t c = 0; c < g.channels.size(); ++c)
    s.jumps.emplace_back(g.channels[c].name, OperatorMatrix(g.space, g.channel_at(static_cast<int>(c), t)));
  return s;
}

}  // namespace

GeneratorSnapshot build_generator(const CascadeNetwork& net, double t) { return snapshot_of(net.generator(), t); }

GeneratorSnapshot build_interaction_generator(const TemporalMode& mode, const EmitterParams& params, double t,
                                              int mode_dim, int aux_dim) {
  return snapshot_of(interaction_generator(mode, params, mode_dim, aux_dim), t);
}

MeTrajectory evolve_me(const CascadeNetwork& net, const StateMatrix& rho0, const TimeGrid& grid,
                       const EvolveOptions& opt) {
  TensorSpace sp = net.space();
  if (!(rho0.space() == sp)) throw ConfigurationError("initial state does not live on the network space");
  if (opt.substeps < 1) throw ConfigurationError("substeps must be positive");
  BlockEvolver ev(net.generator(), opt.min_sector, opt.max_sector);
  BlockState x = ev.from_dense(rho0.matrix());
  double tr0 = x.trace();
  bool full = opt.min_sector <= 0 && opt.max_sector < 0;
  MeTrajectory out;
  std::vector<int> record = opt.record;
  if (record.empty()) record.push_back(grid.size() - 1);
  size_t next = 0;
  auto maybe_record = [&](int k) {
    while (next < record.size() && record[next] == k) {
      out.times.push_back(grid[k]);
      out.states.emplace_back(sp, ev.to_dense(x), tr0);
      ++next;
    }
  };
  maybe_record(0);
  for (int k = 0; k + 1 < grid.size(); ++k) {
    double t0 = grid[k], t1 = grid[k + 1];
    for (int s = 0; s < opt.substeps; ++s) {
      double a = s == 0 ? t0 : t0 + (t1 - t0) * s / opt.substeps;
      double b = s + 1 == opt.substeps ? t1 : t0 + (t1 - t0) * (s + 1) / opt.substeps;
      ev.step(a, b, {&x});
    }
    if (full && opt.check_trace) {
      double drift = std::abs(x.trace() - tr0);
      out.max_trace_drift = std::max(out.max_trace_drift, drift);
      if (drift > opt.trace_tol) {
        std::ostringstream msg;
        msg << "integration error: trace drift " << drift << " at t=" << t1 << " (step " << t1 - t0
            << "); reduce the step size";
        throw IntegrationError(msg.str());
      }
    }
    maybe_record(k + 1);
  }
  return out;
}

double two_mode_emission_error(const CouplingFunction& g1, const CouplingFunction& g2, const TemporalMode& u1,
                               const TemporalMode& u2) {
  CascadeNetwork net(EmitterParams{0.0, 0.0, 0.0});
  net.add_input("u1", g1, 2).add_input("u2", g2, 2);
  BlockEvolver ev(net.generator(), 1, 1);
  TensorSpace sp = net.space();
  const TimeGrid& grid = u1.grid();
  int K = grid.size();
  std::vector<int> d1{1, 0, 0}, d2{0, 1, 0};
  Vector p1 = ev.sector_vector(1, product_state(sp, d1).vector());
  Vector p2 = ev.sector_vector(1, product_state(sp, d2).vector());
  Vector e1(K), e2(K);
  for (int k = 0; k < K; ++k) {
    Matrix L = ev.channel_block(0, 1, grid[k]);
    e1(k) = (L * p1)(0);
    e2(k) = (L * p2)(0);
    if (k + 1 < K) ev.step_vectors(grid[k], grid[k + 1], 1, {&p1, &p2});
  }
  // Beyond its regularization window each coupling is zero by design, so the
  // photons actually launched are the windowed modes; the upstream one is then
  // re-shaped by the downstream cavity. Those targets differ from u1, u2 by norm
  // below ε_reg, which the overlap term below bounds separately.
  if (g1.kind() != CouplingFunction::Kind::Emit || g2.kind() != CouplingFunction::Kind::Emit)
    throw ConfigurationError("two-mode emission requires emission couplings");
  auto windowed = [&](const CouplingFunction& c) {
    Vector s = c.mode().samples();
    double tol = 1e-12 * std::max(1.0, std::abs(c.window_hi()));
    for (int k = 0; k < K; ++k)
      if (grid[k] > c.window_hi() + tol) s(k) = 0.0;
    return TemporalMode(grid, s);
  };
  // u1 minus the image of the upstream tail that is never launched; only the tail
  // goes through the transfer map, so its quadrature error is scaled by √ε_reg.
  TemporalMode tail(grid, g1.mode().samples() - windowed(g1).samples());
  TemporalMode t1(grid, u1.samples() - emission_transfer(g2.mode(), tail).samples()), t2 = windowed(g2);
  double mismatch = (1.0 - std::abs(t1.overlap(u1))) + (1.0 - std::abs(t2.overlap(u2)));
  Matrix V(K, 4);
  for (int k = 0; k < K; ++k) {
    double sw = std::sqrt(grid.weights()[k]);
    V(k, 0) = sw * std::conj(e1(k));
    V(k, 1) = sw * std::conj(e2(k));
    V(k, 2) = sw * std::conj(t1.samples()(k));
    V(k, 3) = sw * std::conj(t2.samples()(k));
  }
  Eigen::HouseholderQR<Matrix> qr(V);
  Matrix R = qr.matrixQR().topRows(4).triangularView<Eigen::Upper>();
  Eigen::Vector4d s(1, 1, -1, -1);
  Matrix D = R * s.cast<cplx>().asDiagonal() * R.adjoint();
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (D + D.adjoint()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().sum() + std::abs(mismatch);
}

std::pair<CouplingFunction, CouplingFunction> two_mode_emission_couplings(const TemporalMode& u1,
                                                                          const TemporalMode& u2, bool verify) {
  if (!u1.grid().same_as(u2.grid())) throw ConfigurationError("modes must share a grid");
  if (std::abs(u1.norm2() - 1.0) > 1e-6 || std::abs(u2.norm2() - 1.0) > 1e-6)
    throw ConfigurationError("two-mode emission requires normalized modes");
  if (std::abs(u1.overlap(u2)) > 1e-6) throw ConfigurationError("orthogonality violation between emission modes");
  // The downstream cavity re-shapes whatever passes it; the upstream cavity must
  // therefore emit the pre-image of u1 under the downstream cavity's transfer map.
  TemporalMode w1 = emission_transfer_adjoint(u2, u1);
  auto out = std::make_pair(emit_coupling(w1), emit_coupling(u2));
  if (verify) {
    double err = two_mode_emission_error(out.first, out.second, u1, u2);
    if (!(err <= 1e-4)) {
      std::ostringstream msg;
      msg << "two-mode emission oracle failed: correlation trace-norm error " << err;
      throw IntegrationError(msg.str());
    }
  }
  return out;
}

Matrix output_correlation(const CascadeNetwork& net, const StateMatrix& rho0, const TimeGrid& samples,
                          int substeps) {
  if (!net.outputs().empty()) throw ConfigurationError("output correlation requires a network without output cavities");
  BlockEvolver ev(net.generator());
  if (ev.channel_shift(0) != 1) throw ConfigurationError("waveguide channel missing");
  BlockState rho = ev.from_dense(rho0.matrix());
  int K = samples.size();
  int S = ev.layout().count();
  Matrix G = Matrix::Zero(K, K);

  std::vector<std::pair<int, int>> xkeys;
  for (auto [N, M] : rho.keys)
    if (M >= 1) xkeys.emplace_back(N, M - 1);
  std::vector<BlockState> X;
  std::vector<int> origin;
  X.reserve(K);

  auto trace_L = [&](const BlockState& x, double t) {
    cplx acc = 0.0;
    for (size_t b = 0; b < x.keys.size(); ++b) {
      auto [r, c] = x.keys[b];
      if (r != c + 1) continue;
      Matrix L = ev.channel_block(0, r, t);
      acc += (L * x.blocks[b]).trace();
    }
    return acc;
  };

  for (int k = 0; k < K; ++k) {
    double t = samples[k];
    for (size_t q = 0; q < X.size(); ++q) G(origin[q], k) = trace_L(X[q], t);
    // X_k = ρ(t_k) L†(t_k)
    BlockState xn = ev.from_keys(xkeys);
    for (size_t b = 0; b < xn.keys.size(); ++b) {
      auto [r, c] = xn.keys[b];
      if (c + 1 >= S) continue;
      int j = rho.find(r, c + 1);
      if (j < 0) continue;
      xn.blocks[b] = rho.blocks[j] * ev.channel_block(0, c + 1, t).adjoint();
    }
    G(k, k) = trace_L(xn, t);
    if (k + 1 == K) break;
    X.push_back(std::move(xn));
    origin.push_back(k);
    std::vector<BlockState*> all{&rho};
    for (auto& x : X) all.push_back(&x);
    double t0 = samples[k], t1 = samples[k + 1];
    for (int s = 0; s < substeps; ++s) {
      double a = s == 0 ? t0 : t0 + (t1 - t0) * s / substeps;
      double b = s + 1 == substeps ? t1 : t0 + (t1 - t0) * (s + 1) / substeps;
      ev.step(a, b, all);
    }
    // regression states that decayed below round-off no longer contribute
    for (size_t q = 0; q < X.size();) {
      double mx = 0.0;
      for (const auto& b : X[q].blocks)
        if (b.size() > 0) mx = std::max(mx, b.cwiseAbs().maxCoeff());
      if (mx < 1e-15) {
        X.erase(X.begin() + q);
        origin.erase(origin.begin() + q);
      } else {
        ++q;
      }
    }
  }
  for (int j = 0; j < K; ++j) {
    G(j, j) = G(j, j).real();
    for (int k = j + 1; k < K; ++k) G(k, j) = std::conj(G(j, k));
  }
  return G;
}

void write_observables_csv(std::ostream& os, const MeTrajectory& traj,
                           const std::vector<std::pair<std::string, OperatorMatrix>>& observables) {
  os << "t";
  for (const auto& [name, op] : observables) os << ',' << name;
  os << '\n' << std::setprecision(12);
  for (size_t i = 0; i < traj.times.size(); ++i) {
    os << traj.times[i];
    for (const auto& [name, op] : observables) os << ',' << traj.states[i].expectation(op);
    os << '\n';
  }
}

}  // namespace pf
