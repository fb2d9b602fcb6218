#include "photonforge/pulses.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>

namespace pf {

namespace {

constexpr double kG3x = 0.7745966692414834;  // √(3/5)
constexpr double kG3w[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
constexpr double kG2x = 0.5773502691896258;  // 1/√3

// Lagrange interpolation through points xs[0..n) with values fs.
cplx lagrange(const double* xs, const cplx* fs, int n, double t) {
  cplx acc = 0.0;
  for (int i = 0; i < n; ++i) {
    double l = 1.0;
    for (int j = 0; j < n; ++j)
      if (j != i) l *= (t - xs[j]) / (xs[i] - xs[j]);
    acc += l * fs[i];
  }
  return acc;
}

}  // namespace

TimeGrid::TimeGrid(std::vector<double> times) {
  if (times.size() < 2) throw PulseError("time grid needs at least two points");
  for (size_t k = 1; k < times.size(); ++k)
    if (!(times[k] > times[k - 1])) throw PulseError("time grid must be strictly increasing");
  std::vector<double> w(times.size(), 0.0);
  for (size_t k = 0; k + 1 < times.size(); ++k) {
    double h = times[k + 1] - times[k];
    w[k] += 0.5 * h;
    w[k + 1] += 0.5 * h;
  }
  d_ = std::make_shared<const Data>(Data{std::move(times), std::move(w)});
}

TimeGrid TimeGrid::uniform(double t0, double t1, int intervals) {
  if (intervals < 1 || !(t1 > t0)) throw PulseError("invalid uniform grid");
  std::vector<double> t(intervals + 1);
  for (int k = 0; k <= intervals; ++k) t[k] = t0 + (t1 - t0) * k / intervals;
  t.back() = t1;
  return TimeGrid(std::move(t));
}

TimeGrid TimeGrid::piecewise(const std::vector<double>& breaks, const std::vector<double>& max_steps) {
  if (breaks.size() < 2 || max_steps.size() + 1 != breaks.size()) throw PulseError("invalid piecewise grid");
  std::vector<double> t{breaks.front()};
  for (size_t s = 0; s + 1 < breaks.size(); ++s) {
    double a = breaks[s], b = breaks[s + 1];
    if (!(b > a) || !(max_steps[s] > 0)) throw PulseError("invalid piecewise segment");
    int n = std::max(1, static_cast<int>(std::ceil((b - a) / max_steps[s] - 1e-9)));
    for (int j = 1; j <= n; ++j) t.push_back(j == n ? b : a + (b - a) * j / n);
  }
  return TimeGrid(std::move(t));
}

TimeGrid TimeGrid::for_pulse(double tau, double gamma, int resolution, double tail) {
  if (!(tau > 0) || !(gamma > 0) || resolution < 1) throw PulseError("invalid pulse grid parameters");
  double fine = std::min(tau, 1.0 / gamma) / resolution;
  double coarse = (1.0 / gamma) / resolution;
  return piecewise({0.0, kPulseSpan * tau, kPulseSpan * tau + tail / gamma}, {fine, coarse});
}

int TimeGrid::interval(double t) const {
  const auto& ts = d_->t;
  auto it = std::upper_bound(ts.begin(), ts.end(), t);
  int k = static_cast<int>(it - ts.begin()) - 1;
  return std::clamp(k, 0, size() - 2);
}

TimeGrid TimeGrid::reversed(double T) const {
  std::vector<double> t(d_->t.size());
  for (size_t k = 0; k < t.size(); ++k) t[k] = T - d_->t[t.size() - 1 - k];
  return TimeGrid(std::move(t));
}

TimeGrid TimeGrid::refined(int factor) const {
  if (factor < 1) throw PulseError("invalid refinement factor");
  std::vector<double> t{d_->t.front()};
  for (int k = 0; k + 1 < size(); ++k)
    for (int j = 1; j <= factor; ++j)
      t.push_back(j == factor ? d_->t[k + 1] : d_->t[k] + (d_->t[k + 1] - d_->t[k]) * j / factor);
  return TimeGrid(std::move(t));
}

cplx TimeGrid::integrate(const Vector& f) const {
  cplx s = 0.0;
  for (int k = 0; k < size(); ++k) s += d_->w[k] * f(k);
  return s;
}

double TimeGrid::integrate(const Eigen::VectorXd& f) const {
  double s = 0.0;
  for (int k = 0; k < size(); ++k) s += d_->w[k] * f(k);
  return s;
}

bool TimeGrid::same_as(const TimeGrid& o) const {
  if (d_ == o.d_) return true;
  if (!d_ || !o.d_ || size() != o.size()) return false;
  for (int k = 0; k < size(); ++k)
    if (std::abs(d_->t[k] - o.d_->t[k]) > 1e-12 * (1.0 + std::abs(d_->t[k]))) return false;
  return true;
}

Vector interval_integrals(const TimeGrid& grid, const Vector& f) {
  int K = grid.size();
  Vector out(K - 1);
  const auto& t = grid.times();
  for (int k = 0; k + 1 < K; ++k) {
    double h = t[k + 1] - t[k];
    if (K < 4) {
      out(k) = 0.5 * h * (f(k) + f(k + 1));
      continue;
    }
    int s = std::clamp(k - 1, 0, K - 4);
    cplx fs[4] = {f(s), f(s + 1), f(s + 2), f(s + 3)};
    double m = t[k] + 0.5 * h;
    cplx a = lagrange(&t[s], fs, 4, m - 0.5 * h * kG2x);
    cplx b = lagrange(&t[s], fs, 4, m + 0.5 * h * kG2x);
    out(k) = 0.5 * h * (a + b);
  }
  return out;
}

Vector tail_integral(const TimeGrid& grid, const Vector& f) {
  Vector seg = interval_integrals(grid, f);
  Vector F(grid.size());
  F(grid.size() - 1) = 0.0;
  for (int k = grid.size() - 2; k >= 0; --k) F(k) = F(k + 1) + seg(k);
  return F;
}

Vector head_integral(const TimeGrid& grid, const Vector& f) {
  Vector seg = interval_integrals(grid, f);
  Vector F(grid.size());
  F(0) = 0.0;
  for (int k = 0; k + 1 < grid.size(); ++k) F(k + 1) = F(k) + seg(k);
  return F;
}

TemporalMode::TemporalMode(TimeGrid grid, Vector samples) : grid_(std::move(grid)), samples_(std::move(samples)) {
  int K = grid_.size();
  if (samples_.size() != K) throw PulseError("mode samples do not match the grid");
  lo_ = 0;
  while (lo_ < K && samples_(lo_) == cplx(0.0)) ++lo_;
  hi_ = K - 1;
  while (hi_ >= 0 && samples_(hi_) == cplx(0.0)) --hi_;

  seg_.assign(K - 1, 0.0);
  const auto& t = grid_.times();
  for (int k = 0; k + 1 < K; ++k) {
    if (k + 1 < lo_ || k > hi_) continue;
    double h = t[k + 1] - t[k], m = t[k] + 0.5 * h, acc = 0.0;
    for (int q = 0; q < 3; ++q) acc += kG3w[q] * std::norm(interp(k, m + (q - 1) * 0.5 * h * kG3x));
    seg_[k] = 0.5 * h * acc;
  }
  S_.assign(K, 0.0);
  R_.assign(K, 0.0);
  for (int k = 0; k + 1 < K; ++k) S_[k + 1] = S_[k] + seg_[k];
  for (int k = K - 2; k >= 0; --k) R_[k] = R_[k + 1] + seg_[k];
}

int TemporalMode::locate(double t) const { return grid_.interval(t); }

cplx TemporalMode::interp(int k, double t) const {
  if (hi_ < lo_) return 0.0;
  const auto& ts = grid_.times();
  if (t < ts[lo_] || t > ts[hi_]) return 0.0;
  int n = hi_ - lo_ + 1;
  if (n == 1) return samples_(lo_);
  if (n < 4) {
    int a = std::clamp(k, lo_, hi_ - 1);
    double x = (t - ts[a]) / (ts[a + 1] - ts[a]);
    return (1.0 - x) * samples_(a) + x * samples_(a + 1);
  }
  int s = std::clamp(k - 1, lo_, hi_ - 3);
  return lagrange(&ts[s], &samples_(s), 4, t);
}

cplx TemporalMode::at(double t) const { return interp(locate(t), t); }

TemporalMode::Point TemporalMode::eval(double t) const {
  int k = locate(t);
  const auto& ts = grid_.times();
  t = std::clamp(t, ts.front(), ts.back());
  Point p{interp(k, t), S_[k], R_[k + 1]};
  auto gauss = [&](double a, double b) {
    if (b <= a) return 0.0;
    double h = b - a, m = a + 0.5 * h, acc = 0.0;
    for (int q = 0; q < 3; ++q) acc += kG3w[q] * std::norm(interp(k, m + (q - 1) * 0.5 * h * kG3x));
    return 0.5 * h * acc;
  };
  p.S += gauss(ts[k], t);
  p.R += gauss(t, ts[k + 1]);
  return p;
}

double TemporalMode::norm2() const {
  double s = 0.0;
  const auto& w = grid_.weights();
  for (int k = 0; k < samples_.size(); ++k) s += w[k] * std::norm(samples_(k));
  return s;
}

cplx TemporalMode::overlap(const TemporalMode& other) const {
  if (!grid_.same_as(other.grid_)) throw PulseError("overlap requires modes on the same grid");
  const auto& w = grid_.weights();
  cplx s = 0.0;
  for (int k = 0; k < samples_.size(); ++k) s += w[k] * std::conj(samples_(k)) * other.samples_(k);
  return s;
}

TemporalMode TemporalMode::normalized() const {
  double n = norm2();
  if (!(n > 0)) throw PulseError("cannot normalize a zero mode");
  return scaled(1.0 / std::sqrt(n));
}

void TemporalMode::write_csv(std::ostream& os) const {
  os << "t,re,im\n" << std::setprecision(12);
  for (int k = 0; k < samples_.size(); ++k)
    os << grid_[k] << ',' << samples_(k).real() << ',' << samples_(k).imag() << '\n';
}

AngleFactors angle_factors(const TemporalMode::Point& p) {
  AngleFactors f{0, 0, 0, 0, 0};
  double tot = p.S + p.R;
  if (!(tot > 0)) return f;
  double s = p.S / tot, c = p.R / tot;
  f.theta = std::atan2(std::sqrt(s), std::sqrt(c));
  bool s_ok = s >= kEpsReg, c_ok = c >= kEpsReg;
  if (s_ok && c_ok) {
    double sc = std::sqrt(s * c);
    f.cot2 = (c - s) / (2.0 * sc);
    f.csc2 = 1.0 / (2.0 * sc);
  }
  if (c_ok) f.tan1 = std::sqrt(s / c);
  if (s_ok) f.cot1 = std::sqrt(c / s);
  return f;
}

double theta(const TemporalMode& mode, double t) { return angle_factors(mode.eval(t)).theta; }

CouplingFunction::CouplingFunction(std::shared_ptr<const TemporalMode> mode, Kind kind)
    : mode_(std::move(mode)), kind_(kind) {
  const auto& g = mode_->grid();
  int K = g.size();
  if (kind_ == Kind::Emit) {
    t_lo_ = g.t_start();
    int k = K - 1;
    while (k > 0 && mode_->remaining_at(k) < kEpsReg) --k;
    t_hi_ = g[k];
  } else {
    t_hi_ = g.t_end();
    int k = 0;
    while (k < K - 1 && mode_->cumulative_at(k) < kEpsReg) ++k;
    t_lo_ = g[k];
  }
}

cplx CouplingFunction::at(double t) const {
  auto p = mode_->eval(t);
  if (kind_ == Kind::Emit) return p.R >= kEpsReg ? std::conj(p.phi) / std::sqrt(p.R) : cplx(0.0);
  return p.S >= kEpsReg ? -std::conj(p.phi) / std::sqrt(p.S) : cplx(0.0);
}

Vector CouplingFunction::samples() const {
  const auto& g = mode_->grid();
  Vector out(g.size());
  for (int k = 0; k < g.size(); ++k) {
    cplx phi = mode_->samples()(k);
    if (kind_ == Kind::Emit) {
      double R = mode_->remaining_at(k);
      out(k) = R >= kEpsReg ? std::conj(phi) / std::sqrt(R) : cplx(0.0);
    } else {
      double S = mode_->cumulative_at(k);
      out(k) = S >= kEpsReg ? -std::conj(phi) / std::sqrt(S) : cplx(0.0);
    }
  }
  return out;
}

TemporalMode gaussian_mode(double tau, const TimeGrid& grid, double min_tail) {
  if (!(tau > 0)) throw PulseError("Gaussian duration must be positive");
  if (grid.t_start() > 1e-12 || grid.t_end() < 8.0 * tau + min_tail - 1e-9)
    throw PulseError("grid does not cover the Gaussian pulse plus its trailing time");
  Vector s = Vector::Zero(grid.size());
  // truncated where the envelope drops below 1e-10 of its peak
  const double half_width = std::sqrt(2.0 * std::log(1e10));
  for (int k = 0; k < grid.size(); ++k) {
    double x = (grid[k] - 4.0 * tau) / tau;
    if (std::abs(x) <= half_width) s(k) = std::exp(-0.5 * x * x);
  }
  return TemporalMode(grid, s).normalized();
}

CouplingFunction emit_coupling(const TemporalMode& mode) {
  return CouplingFunction(std::make_shared<const TemporalMode>(mode), CouplingFunction::Kind::Emit);
}

CouplingFunction catch_coupling(const TemporalMode& mode) {
  return CouplingFunction(std::make_shared<const TemporalMode>(mode), CouplingFunction::Kind::Catch);
}

TemporalMode time_reverse(const TemporalMode& mode, double T) {
  const auto& g = mode.grid();
  if (mode.support_end() >= 0 && g[mode.support_end()] > T + 1e-9)
    throw PulseError("reversal time precedes the end of the mode support");
  int K = g.size();
  Vector s(K);
  for (int k = 0; k < K; ++k) s(k) = std::conj(mode.samples()(K - 1 - k));
  return TemporalMode(g.reversed(T), s);
}

std::vector<TemporalMode> orthonormalize(const std::vector<TemporalMode>& modes, double tol) {
  std::vector<TemporalMode> out;
  for (const auto& m : modes) {
    TemporalMode v = m;
    double n0 = std::sqrt(v.norm2());
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& u : out) v = TemporalMode(v.grid(), v.samples() - u.overlap(v) * u.samples());
    double n = std::sqrt(v.norm2());
    if (!(n > std::sqrt(tol) * std::max(n0, 1e-300))) throw PulseError("degenerate modes: linearly dependent input");
    out.push_back(v.scaled(1.0 / n));
  }
  return out;
}

namespace {

void require_grid(const TemporalMode& a, const TemporalMode& b) {
  if (!a.grid().same_as(b.grid())) throw PulseError("transfer maps require modes on a common grid");
}

}  // namespace

TemporalMode emission_transfer(const TemporalMode& u, const TemporalMode& f) {
  require_grid(u, f);
  int K = u.grid().size();
  Vector g(K);
  for (int k = 0; k < K; ++k) {
    double R = u.remaining_at(k);
    g(k) = R >= kEpsReg ? std::conj(u.samples()(k)) * f.samples()(k) / R : cplx(0.0);
  }
  Vector H = head_integral(u.grid(), g);
  return TemporalMode(u.grid(), f.samples() - u.samples().cwiseProduct(H));
}

TemporalMode emission_transfer_adjoint(const TemporalMode& u, const TemporalMode& h) {
  require_grid(u, h);
  int K = u.grid().size();
  Vector J = tail_integral(u.grid(), u.samples().conjugate().cwiseProduct(h.samples()));
  Vector out = h.samples();
  for (int k = 0; k < K; ++k) {
    double R = u.remaining_at(k);
    if (R >= kEpsReg) out(k) -= u.samples()(k) / R * J(k);
  }
  return TemporalMode(u.grid(), out);
}

TemporalMode catch_transfer(const TemporalMode& psi, const TemporalMode& f) {
  require_grid(psi, f);
  int K = psi.grid().size();
  Vector H = head_integral(psi.grid(), psi.samples().conjugate().cwiseProduct(f.samples()));
  Vector out = f.samples();
  for (int k = 0; k < K; ++k) {
    double S = psi.cumulative_at(k);
    if (S >= kEpsReg) out(k) -= psi.samples()(k) / S * H(k);
  }
  return TemporalMode(psi.grid(), out);
}

TemporalMode catch_transfer_adjoint(const TemporalMode& psi, const TemporalMode& h) {
  require_grid(psi, h);
  int K = psi.grid().size();
  Vector g(K);
  for (int k = 0; k < K; ++k) {
    double S = psi.cumulative_at(k);
    g(k) = S >= kEpsReg ? std::conj(psi.samples()(k)) * h.samples()(k) / S : cplx(0.0);
  }
  Vector J = tail_integral(psi.grid(), g);
  return TemporalMode(psi.grid(), h.samples() - psi.samples().cwiseProduct(J));
}

}  // namespace pf
