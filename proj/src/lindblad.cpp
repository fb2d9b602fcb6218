#include "photonforge/lindblad.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace pf {

std::vector<cplx> Generator::coeffs_at(double t) const {
  std::vector<cplx> c(n_coeffs, 0.0);
  if (coefficients) coefficients(t, c);
  return c;
}

Matrix Generator::dense(const LocalProduct& op) const {
  Matrix m = Matrix::Identity(space.total_dim(), space.total_dim());
  for (const auto& [idx, local] : op.factors) m = embed(local, space.subsystems()[idx].label, space).matrix() * m;
  return m;
}

Matrix Generator::hamiltonian_at(double t) const {
  auto c = coeffs_at(t);
  Matrix H = Matrix::Zero(space.total_dim(), space.total_dim());
  for (const auto& term : hamiltonian) H += c[term.coeff] * dense(term.op);
  return H;
}

Matrix Generator::channel_at(int ch, double t) const {
  auto c = coeffs_at(t);
  Matrix L = Matrix::Zero(space.total_dim(), space.total_dim());
  for (const auto& term : channels[ch].terms) L += c[term.coeff] * dense(term.op);
  return L;
}

int excitation_shift(const LocalProduct& op) {
  int total = 0;
  for (const auto& [idx, m] : op.factors) {
    (void)idx;
    bool found = false;
    int shift = 0;
    for (int r = 0; r < m.rows(); ++r)
      for (int c = 0; c < m.cols(); ++c) {
        if (m(r, c) == cplx(0.0)) continue;
        if (!found) {
          shift = c - r;
          found = true;
        } else if (c - r != shift) {
          throw IntegrationError("operator factor does not change excitation number uniformly");
        }
      }
    if (!found) throw IntegrationError("operator factor is identically zero");
    total += shift;
  }
  return total;
}

SectorLayout::SectorLayout(const TensorSpace& space) {
  int n = space.total_dim();
  sector_.resize(n);
  pos_.resize(n);
  int max_n = 0;
  for (const auto& s : space.subsystems()) max_n += s.dim - 1;
  members_.assign(max_n + 1, {});
  for (int f = 0; f < n; ++f) {
    auto d = space.digits(f);
    int N = 0;
    for (int x : d) N += x;
    sector_[f] = N;
    pos_[f] = static_cast<int>(members_[N].size());
    members_[N].push_back(f);
  }
}

int BlockState::find(int r, int c) const {
  for (size_t i = 0; i < keys.size(); ++i)
    if (keys[i].first == r && keys[i].second == c) return static_cast<int>(i);
  return -1;
}

void BlockState::axpy(cplx a, const BlockState& x) {
  for (size_t i = 0; i < blocks.size(); ++i) blocks[i] += a * x.blocks[i];
}

double BlockState::trace() const {
  double t = 0.0;
  for (size_t i = 0; i < keys.size(); ++i)
    if (keys[i].first == keys[i].second) t += blocks[i].trace().real();
  return t;
}

namespace {

void add_scaled(Matrix& dst, cplx a, const Eigen::SparseMatrix<cplx>& s) {
  for (int j = 0; j < s.outerSize(); ++j)
    for (Eigen::SparseMatrix<cplx>::InnerIterator it(s, j); it; ++it) dst(it.row(), it.col()) += a * it.value();
}

}  // namespace

BlockEvolver::BlockEvolver(Generator gen, int min_sector, int max_sector)
    : gen_(std::move(gen)), layout_(gen_.space), min_sector_(std::max(0, min_sector)) {
  max_sector_ = max_sector < 0 ? layout_.count() - 1 : std::min(max_sector, layout_.count() - 1);
  int n = gen_.space.total_dim();
  digits_.resize(n);
  for (int f = 0; f < n; ++f) digits_[f] = gen_.space.digits(f);

  for (const auto& term : gen_.hamiltonian)
    if (excitation_shift(term.op) != 0) throw IntegrationError("Hamiltonian term does not conserve excitation number");
  for (const auto& ch : gen_.channels) {
    if (ch.terms.empty()) throw IntegrationError("empty jump channel '" + ch.name + "'");
    int s = excitation_shift(ch.terms.front().op);
    for (const auto& term : ch.terms)
      if (excitation_shift(term.op) != s) throw IntegrationError("mixed excitation shifts in channel '" + ch.name + "'");
    if (s < 0) throw IntegrationError("jump channel raises excitation number");
    shifts_.push_back(s);
  }

  int S = layout_.count();
  hterm_.assign(gen_.hamiltonian.size(), std::vector<SparseOp>(S));
  for (size_t k = 0; k < gen_.hamiltonian.size(); ++k)
    for (int N = min_sector_; N <= max_sector_; ++N) hterm_[k][N] = restrict(gen_.hamiltonian[k].op, N, N).sparseView();
  lterm_.resize(gen_.channels.size());
  for (size_t c = 0; c < gen_.channels.size(); ++c) {
    lterm_[c].assign(gen_.channels[c].terms.size(), std::vector<SparseOp>(S));
    for (size_t k = 0; k < gen_.channels[c].terms.size(); ++k)
      for (int N = min_sector_; N <= max_sector_; ++N)
        if (N - shifts_[c] >= 0)
          lterm_[c][k][N] = restrict(gen_.channels[c].terms[k].op, N - shifts_[c], N).sparseView();
  }
  // Pair products O_k†O_l so that L†L is a linear combination at every time.
  llterm_.resize(gen_.channels.size());
  for (size_t c = 0; c < gen_.channels.size(); ++c) {
    size_t nt = gen_.channels[c].terms.size();
    llterm_[c].assign(nt * nt, std::vector<SparseOp>(S));
    for (size_t k = 0; k < nt; ++k)
      for (size_t l = 0; l < nt; ++l)
        for (int N = min_sector_; N <= max_sector_; ++N) {
          const SparseOp& a = lterm_[c][k][N];
          const SparseOp& b = lterm_[c][l][N];
          if (a.nonZeros() == 0 || b.nonZeros() == 0) continue;
          SparseOp p = SparseOp(a.adjoint()) * b;
          p.prune(cplx(0.0));
          if (p.nonZeros() > 0) llterm_[c][k * nt + l][N] = std::move(p);
        }
  }
}

Matrix BlockEvolver::restrict(const LocalProduct& op, int rs, int cs) const {
  const auto& rows = layout_.members(rs);
  const auto& cols = layout_.members(cs);
  int nsub = gen_.space.size();
  std::vector<const Matrix*> factor(nsub, nullptr);
  for (const auto& [idx, m] : op.factors) factor[idx] = &m;
  Matrix out = Matrix::Zero(rows.size(), cols.size());
  bool any = false;
  for (size_t j = 0; j < cols.size(); ++j) {
    const auto& dc = digits_[cols[j]];
    for (size_t i = 0; i < rows.size(); ++i) {
      const auto& dr = digits_[rows[i]];
      cplx v = 1.0;
      for (int s = 0; s < nsub && v != cplx(0.0); ++s) {
        if (factor[s])
          v *= (*factor[s])(dr[s], dc[s]);
        else if (dr[s] != dc[s])
          v = 0.0;
      }
      if (v != cplx(0.0)) {
        out(i, j) = v;
        any = true;
      }
    }
  }
  return any ? out : Matrix();
}

void BlockEvolver::build(Snapshot& s, double t) const {
  auto c = gen_.coeffs_at(t);
  int S = layout_.count();
  size_t C = gen_.channels.size();
  s.t = t;
  s.valid = true;
  s.heff.assign(S, Matrix());
  s.heff_adj.assign(S, Matrix());
  s.L.assign(C, std::vector<Matrix>(S));
  s.L_adj.assign(C, std::vector<Matrix>(S));
  s.L_nonzero.assign(C, std::vector<bool>(S, false));
  for (int N = min_sector_; N <= max_sector_; ++N) {
    int d = layout_.size(N);
    if (d == 0) continue;
    Matrix H = Matrix::Zero(d, d);
    for (size_t k = 0; k < gen_.hamiltonian.size(); ++k)
      if (hterm_[k][N].nonZeros() > 0 && c[gen_.hamiltonian[k].coeff] != cplx(0.0))
        add_scaled(H, c[gen_.hamiltonian[k].coeff], hterm_[k][N]);
    for (size_t ch = 0; ch < C; ++ch) {
      int tgt = N - shifts_[ch];
      if (tgt < 0 || layout_.size(tgt) == 0) continue;
      Matrix L = Matrix::Zero(layout_.size(tgt), d);
      bool nz = false;
      size_t nt = gen_.channels[ch].terms.size();
      for (size_t k = 0; k < nt; ++k) {
        cplx a = c[gen_.channels[ch].terms[k].coeff];
        if (lterm_[ch][k][N].nonZeros() > 0 && a != cplx(0.0)) {
          add_scaled(L, a, lterm_[ch][k][N]);
          nz = true;
        }
      }
      if (!nz) continue;
      for (size_t k = 0; k < nt; ++k)
        for (size_t l = 0; l < nt; ++l) {
          const SparseOp& p = llterm_[ch][k * nt + l][N];
          if (p.nonZeros() == 0) continue;
          cplx w = std::conj(c[gen_.channels[ch].terms[k].coeff]) * c[gen_.channels[ch].terms[l].coeff];
          if (w != cplx(0.0)) add_scaled(H, -0.5 * I * w, p);
        }
      s.L_adj[ch][N] = L.adjoint();
      s.L[ch][N] = std::move(L);
      s.L_nonzero[ch][N] = true;
    }
    s.heff_adj[N] = H.adjoint();
    s.heff[N] = std::move(H);
  }
}

const BlockEvolver::Snapshot& BlockEvolver::snapshot(double t, const Snapshot* keep1, const Snapshot* keep2) {
  for (auto& s : cache_)
    if (s.valid && s.t == t) return s;
  for (auto& s : cache_) {
    if (&s == keep1 || &s == keep2) continue;
    build(s, t);
    return s;
  }
  throw IntegrationError("generator cache exhausted");
}

Matrix BlockEvolver::heff(int N, double t) {
  if (!tracked(N)) throw IntegrationError("sector not tracked");
  return snapshot(t).heff[N];
}

Matrix BlockEvolver::channel_block(int c, int N, double t) {
  if (!tracked(N)) throw IntegrationError("sector not tracked");
  const auto& s = snapshot(t);
  if (!s.L_nonzero[c][N]) return Matrix::Zero(layout_.size(N - shifts_[c]), layout_.size(N));
  return s.L[c][N];
}

std::vector<std::pair<int, int>> BlockEvolver::closure(std::vector<std::pair<int, int>> keys) const {
  std::set<std::pair<int, int>> set;
  std::vector<std::pair<int, int>> stack;
  for (auto k : keys)
    if (tracked(k.first) && tracked(k.second) && layout_.size(k.first) && layout_.size(k.second)) stack.push_back(k);
  while (!stack.empty()) {
    auto k = stack.back();
    stack.pop_back();
    if (!set.insert(k).second) continue;
    for (int s : shifts_) {
      if (s == 0) continue;
      std::pair<int, int> q{k.first - s, k.second - s};
      if (tracked(q.first) && tracked(q.second) && layout_.size(q.first) && layout_.size(q.second)) stack.push_back(q);
    }
  }
  return {set.begin(), set.end()};
}

BlockState BlockEvolver::from_keys(std::vector<std::pair<int, int>> keys) const {
  BlockState x;
  x.keys = closure(std::move(keys));
  for (auto [r, c] : x.keys) x.blocks.push_back(Matrix::Zero(layout_.size(r), layout_.size(c)));
  return x;
}

BlockState BlockEvolver::from_dense(const Matrix& rho) const {
  int S = layout_.count();
  std::vector<std::pair<int, int>> keys;
  for (int r = 0; r < S; ++r)
    for (int c = 0; c < S; ++c) {
      bool nz = false;
      for (int i : layout_.members(r)) {
        for (int j : layout_.members(c))
          if (rho(i, j) != cplx(0.0)) {
            nz = true;
            break;
          }
        if (nz) break;
      }
      if (nz) keys.emplace_back(r, c);
    }
  BlockState x = from_keys(keys);
  for (size_t b = 0; b < x.keys.size(); ++b) {
    auto [r, c] = x.keys[b];
    const auto& rm = layout_.members(r);
    const auto& cm = layout_.members(c);
    for (size_t i = 0; i < rm.size(); ++i)
      for (size_t j = 0; j < cm.size(); ++j) x.blocks[b](i, j) = rho(rm[i], cm[j]);
  }
  return x;
}

Matrix BlockEvolver::to_dense(const BlockState& x, bool mirror) const {
  int n = gen_.space.total_dim();
  Matrix m = Matrix::Zero(n, n);
  for (size_t b = 0; b < x.keys.size(); ++b) {
    auto [r, c] = x.keys[b];
    const auto& rm = layout_.members(r);
    const auto& cm = layout_.members(c);
    for (size_t i = 0; i < rm.size(); ++i)
      for (size_t j = 0; j < cm.size(); ++j) {
        m(rm[i], cm[j]) = x.blocks[b](i, j);
        if (mirror && r != c) m(cm[j], rm[i]) = std::conj(x.blocks[b](i, j));
      }
  }
  return m;
}

BlockState upper_blocks(const BlockState& x) {
  BlockState u;
  for (size_t b = 0; b < x.keys.size(); ++b)
    if (x.keys[b].first <= x.keys[b].second) {
      u.keys.push_back(x.keys[b]);
      u.blocks.push_back(x.blocks[b]);
    }
  return u;
}

Vector BlockEvolver::sector_vector(int N, const Vector& full) const {
  const auto& mem = layout_.members(N);
  Vector v(mem.size());
  for (size_t i = 0; i < mem.size(); ++i) v(i) = full(mem[i]);
  return v;
}

Vector BlockEvolver::full_vector(int N, const Vector& sec) const {
  Vector v = Vector::Zero(gen_.space.total_dim());
  const auto& mem = layout_.members(N);
  for (size_t i = 0; i < mem.size(); ++i) v(mem[i]) = sec(i);
  return v;
}

void BlockEvolver::rhs(const Snapshot& s, const BlockState& x, BlockState& dx) const {
  int S = layout_.count();
  std::vector<int> lut(static_cast<size_t>(S) * S, -1);
  for (size_t i = 0; i < x.keys.size(); ++i) lut[x.keys[i].first * S + x.keys[i].second] = static_cast<int>(i);
  Matrix tmp;
  for (size_t i = 0; i < x.keys.size(); ++i) {
    auto [N, M] = x.keys[i];
    const Matrix& X = x.blocks[i];
    Matrix& D = dx.blocks[i];
    D.noalias() = -I * (s.heff[N] * X);
    D.noalias() += I * (X * s.heff_adj[M]);
    for (size_t c = 0; c < shifts_.size(); ++c) {
      int sh = shifts_[c], n2 = N + sh, m2 = M + sh;
      if (n2 >= S || m2 >= S) continue;
      int j = lut[n2 * S + m2];
      if (j < 0 || !s.L_nonzero[c][n2] || !s.L_nonzero[c][m2]) continue;
      tmp.noalias() = s.L[c][n2] * x.blocks[j];
      D.noalias() += tmp * s.L_adj[c][m2];
    }
  }
}

void BlockEvolver::step(double t0, double t1, const std::vector<BlockState*>& states) {
  double h = t1 - t0, tm = t0 + 0.5 * h;
  const Snapshot& s0 = snapshot(t0);
  const Snapshot& sm = snapshot(tm, &s0);
  const Snapshot& s1 = snapshot(t1, &s0, &sm);
  if (scratch_.size() < states.size()) scratch_.resize(states.size());
  for (size_t q = 0; q < states.size(); ++q) {
    BlockState& y = *states[q];
    Scratch& sc = scratch_[q];
    if (sc.k.keys != y.keys) sc.k = sc.acc = sc.y = y;
    sc.acc.blocks = y.blocks;
    rhs(s0, y, sc.k);
    sc.acc.axpy(h / 6.0, sc.k);
    sc.y.blocks = y.blocks;
    sc.y.axpy(0.5 * h, sc.k);
    rhs(sm, sc.y, sc.k);
    sc.acc.axpy(h / 3.0, sc.k);
    sc.y.blocks = y.blocks;
    sc.y.axpy(0.5 * h, sc.k);
    rhs(sm, sc.y, sc.k);
    sc.acc.axpy(h / 3.0, sc.k);
    sc.y.blocks = y.blocks;
    sc.y.axpy(h, sc.k);
    rhs(s1, sc.y, sc.k);
    sc.acc.axpy(h / 6.0, sc.k);
    std::swap(y.blocks, sc.acc.blocks);
  }
}

void BlockEvolver::step_vectors(double t0, double t1, int N, const std::vector<Vector*>& vecs, bool adjoint) {
  if (!tracked(N)) throw IntegrationError("sector not tracked");
  double h = t1 - t0, tm = t0 + 0.5 * h;
  const Snapshot& s0 = snapshot(t0);
  const Snapshot& sm = snapshot(tm, &s0);
  const Snapshot& s1 = snapshot(t1, &s0, &sm);
  const Matrix& A0 = adjoint ? s0.heff_adj[N] : s0.heff[N];
  const Matrix& Am = adjoint ? sm.heff_adj[N] : sm.heff[N];
  const Matrix& A1 = adjoint ? s1.heff_adj[N] : s1.heff[N];
  for (Vector* v : vecs) {
    Vector k1 = -I * (A0 * *v);
    Vector k2 = -I * (Am * (*v + 0.5 * h * k1));
    Vector k3 = -I * (Am * (*v + 0.5 * h * k2));
    Vector k4 = -I * (A1 * (*v + h * k3));
    *v += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
}

}  // namespace pf
