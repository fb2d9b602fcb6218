#include "photonforge/hilbert.hpp"

#include <cmath>
#include <set>

#include <unsupported/Eigen/MatrixFunctions>

namespace pf {

TensorSpace::TensorSpace(std::vector<Subsystem> subsystems) : subs_(std::move(subsystems)) {
  if (subs_.empty()) throw HilbertError("tensor space needs at least one subsystem");
  std::set<std::string> seen;
  for (const auto& s : subs_) {
    if (s.dim < 1) throw HilbertError("invalid dimension for subsystem '" + s.label + "'");
    if (!seen.insert(s.label).second) throw HilbertError("duplicate subsystem label '" + s.label + "'");
  }
  strides_.assign(subs_.size(), 1);
  total_ = 1;
  for (int i = size() - 1; i >= 0; --i) {
    strides_[i] = total_;
    total_ *= subs_[i].dim;
  }
}

int TensorSpace::index_of(std::string_view label) const {
  for (int i = 0; i < size(); ++i)
    if (subs_[i].label == label) return i;
  throw HilbertError("unknown subsystem label '" + std::string(label) + "'");
}

std::vector<int> TensorSpace::digits(int flat) const {
  std::vector<int> d(subs_.size());
  for (int i = 0; i < size(); ++i) {
    d[i] = flat / strides_[i];
    flat %= strides_[i];
  }
  return d;
}

int TensorSpace::flat(std::span<const int> digits) const {
  if (static_cast<int>(digits.size()) != size()) throw HilbertError("digit count mismatch");
  int f = 0;
  for (int i = 0; i < size(); ++i) {
    if (digits[i] < 0 || digits[i] >= subs_[i].dim) throw HilbertError("digit out of range");
    f += digits[i] * strides_[i];
  }
  return f;
}

bool TensorSpace::operator==(const TensorSpace& o) const {
  if (subs_.size() != o.subs_.size()) return false;
  for (size_t i = 0; i < subs_.size(); ++i)
    if (subs_[i].label != o.subs_[i].label || subs_[i].dim != o.subs_[i].dim) return false;
  return true;
}

OperatorMatrix::OperatorMatrix(TensorSpace space, Matrix m) : space_(std::move(space)), m_(std::move(m)) {
  if (m_.rows() != m_.cols() || m_.rows() != space_.total_dim())
    throw HilbertError("operator dimension does not match its space");
}

bool OperatorMatrix::is_hermitian(double tol) const { return (m_ - m_.adjoint()).cwiseAbs().maxCoeff() <= tol; }

static void require_same(const TensorSpace& a, const TensorSpace& b) {
  if (!(a == b)) throw HilbertError("operands live on different spaces");
}

OperatorMatrix operator*(const OperatorMatrix& a, const OperatorMatrix& b) {
  require_same(a.space_, b.space_);
  return {a.space_, a.m_ * b.m_};
}
OperatorMatrix operator+(const OperatorMatrix& a, const OperatorMatrix& b) {
  require_same(a.space_, b.space_);
  return {a.space_, a.m_ + b.m_};
}
OperatorMatrix operator-(const OperatorMatrix& a, const OperatorMatrix& b) {
  require_same(a.space_, b.space_);
  return {a.space_, a.m_ - b.m_};
}

StateMatrix::StateMatrix(TensorSpace space, Matrix rho, double declared_trace)
    : space_(std::move(space)), rho_(std::move(rho)), declared_(declared_trace) {
  if (rho_.rows() != rho_.cols() || rho_.rows() != space_.total_dim())
    throw HilbertError("state dimension does not match its space");
}

void StateMatrix::validate(double herm_tol, double trace_tol, double pos_tol) const {
  if ((rho_ - rho_.adjoint()).cwiseAbs().maxCoeff() > herm_tol) throw HilbertError("state is not Hermitian");
  if (std::abs(trace() - declared_) > trace_tol) throw HilbertError("state trace differs from its declared norm");
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (rho_ + rho_.adjoint()), Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -pos_tol) throw HilbertError("state has negative eigenvalues");
}

StateMatrix StateMatrix::normalized() const {
  double t = trace();
  if (t <= 0) throw HilbertError("cannot normalize a state with nonpositive trace");
  return {space_, rho_ / t, 1.0};
}

double StateMatrix::expectation(const OperatorMatrix& op) const {
  require_same(space_, op.space());
  return (op.matrix() * rho_).trace().real();
}

StateVector::StateVector(TensorSpace space, Vector psi) : space_(std::move(space)), psi_(std::move(psi)) {
  if (psi_.size() != space_.total_dim()) throw HilbertError("state vector dimension does not match its space");
}

StateMatrix StateVector::density() const {
  return {space_, psi_ * psi_.adjoint(), psi_.squaredNorm()};
}

Matrix ladder(int dim) {
  if (dim < 1) throw HilbertError("invalid dimension for ladder operator");
  Matrix a = Matrix::Zero(dim, dim);
  for (int m = 1; m < dim; ++m) a(m - 1, m) = std::sqrt(static_cast<double>(m));
  return a;
}

Matrix number_op(int dim) {
  Matrix n = Matrix::Zero(dim, dim);
  for (int m = 0; m < dim; ++m) n(m, m) = m;
  return n;
}

// Emitter basis: index 0 = |g⟩, index 1 = |e⟩, so σ− coincides with ladder(2).
Matrix sigma_minus() { return ladder(2); }

Matrix sigma_ee() {
  Matrix s = Matrix::Zero(2, 2);
  s(1, 1) = 1.0;
  return s;
}

Vector fock(int dim, int n) {
  if (n < 0 || n >= dim) throw HilbertError("Fock level outside truncation");
  Vector v = Vector::Zero(dim);
  v(n) = 1.0;
  return v;
}

Vector coherent(int dim, cplx alpha) {
  Vector v(dim);
  double pref = std::exp(-0.5 * std::norm(alpha));
  cplx c = pref;
  for (int m = 0; m < dim; ++m) {
    v(m) = c;
    c *= alpha / std::sqrt(static_cast<double>(m + 1));
  }
  return v;
}

OperatorMatrix embed(const Matrix& local, std::string_view label, const TensorSpace& space) {
  int idx = space.index_of(label);
  int d = space.subsystems()[idx].dim;
  if (local.rows() != d || local.cols() != d) throw HilbertError("local operator dimension mismatch");
  int outer = space.total_dim() / (d * space.stride(idx));
  int inner = space.stride(idx);
  int n = space.total_dim();
  Matrix m = Matrix::Zero(n, n);
  for (int o = 0; o < outer; ++o)
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) {
        cplx v = local(r, c);
        if (v == cplx(0.0)) continue;
        int base_r = (o * d + r) * inner, base_c = (o * d + c) * inner;
        for (int i = 0; i < inner; ++i) m(base_r + i, base_c + i) = v;
      }
  return {space, std::move(m)};
}

StateVector product_state(const TensorSpace& space, std::span<const int> digits) {
  Vector v = Vector::Zero(space.total_dim());
  v(space.flat(digits)) = 1.0;
  return {space, v};
}

StateMatrix partial_trace(const StateMatrix& rho, const std::vector<std::string>& keep) {
  if (keep.empty()) throw HilbertError("partial trace needs a nonempty keep set");
  const TensorSpace& sp = rho.space();
  std::vector<bool> kept(sp.size(), false);
  for (const auto& l : keep) kept[sp.index_of(l)] = true;
  std::vector<TensorSpace::Subsystem> ks;
  for (int i = 0; i < sp.size(); ++i)
    if (kept[i]) ks.push_back(sp.subsystems()[i]);
  TensorSpace red(ks);

  int n = sp.total_dim();
  std::vector<int> kidx(n), tidx(n);
  for (int f = 0; f < n; ++f) {
    auto d = sp.digits(f);
    int k = 0, t = 0;
    for (int i = 0; i < sp.size(); ++i) {
      if (kept[i])
        k = k * sp.subsystems()[i].dim + d[i];
      else
        t = t * sp.subsystems()[i].dim + d[i];
    }
    kidx[f] = k;
    tidx[f] = t;
  }
  Matrix out = Matrix::Zero(red.total_dim(), red.total_dim());
  const Matrix& m = rho.matrix();
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c)
      if (tidx[r] == tidx[c]) out(kidx[r], kidx[c]) += m(r, c);
  return {red, out, rho.declared_trace()};
}

Matrix psd_sqrt(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (a + a.adjoint()));
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

// Uhlmann fidelity in the squared convention, F = (tr√(√ρ σ √ρ))².
double fidelity(const StateMatrix& rho, const StateMatrix& sigma) {
  require_same(rho.space(), sigma.space());
  for (const auto* s : {&rho, &sigma}) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (s->matrix() + s->matrix().adjoint()), Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-10) throw HilbertError("fidelity argument has negative eigenvalues");
  }
  Matrix sr = psd_sqrt(rho.matrix());
  Matrix inner = sr * sigma.matrix() * sr;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (inner + inner.adjoint()), Eigen::EigenvaluesOnly);
  double f = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  return std::clamp(f * f, 0.0, 1.0);
}

double trace_distance(const Matrix& a, const Matrix& b) {
  Matrix d = a - b;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (d + d.adjoint()), Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

Matrix expm(const Matrix& a) { return a.exp(); }

Matrix squeeze(double r, int cutoff) {
  if (cutoff < 1) throw HilbertError("invalid cutoff for squeeze");
  if (squeezed_vacuum_tail(r, cutoff) > 1e-8)
    throw HilbertError("cutoff too small for squeezing parameter (tail population exceeds 1e-8)");
  Matrix a = ladder(cutoff + 1);
  Matrix gen = -0.5 * r * (a * a - a.adjoint() * a.adjoint());
  return expm(gen);
}

double squeezed_vacuum_tail(double r, int cutoff) {
  // |⟨2m|S(r)|0⟩|² = tanh^{2m} r · (2m)! / (4^m (m!)² cosh r); summed directly above the cutoff
  double t2 = std::tanh(r) * std::tanh(r);
  double p = 1.0 / std::cosh(r), tail = 0.0;
  for (int m = 0; m < 100000; ++m) {
    if (2 * m > cutoff) {
      tail += p;
      if (p < 1e-18 * std::max(tail, 1e-300)) break;
    }
    p *= t2 * (2.0 * m + 1.0) / (2.0 * m + 2.0);
    if (p == 0.0) break;
  }
  return tail;
}

}  // namespace pf
