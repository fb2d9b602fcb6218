#include "photonforge/analytic2p.hpp"

#include <array>
#include <cmath>
#include <iomanip>
#include <numbers>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

namespace pf {

namespace {

constexpr double kSqrtPi = 1.7724538509055160273;

// Taylor series w(z) = Σ (iz)^k / Γ(k/2 + 1).
cplx faddeeva_series(cplx z) {
  cplx iz = I * z, term = 1.0, sum = 0.0;
  double g_even = 1.0;                 // Γ(m + 1)
  double g_odd = 0.5 * kSqrtPi;        // Γ(m + 3/2)
  cplx pw = 1.0;
  for (int k = 0; k < 200; ++k) {
    double g = (k % 2 == 0) ? g_even : g_odd;
    term = pw / g;
    sum += term;
    if (k > 8 && std::abs(term) < 1e-17 * std::abs(sum)) break;
    pw *= iz;
    if (k % 2 == 0)
      g_even *= (k / 2 + 1);
    else
      g_odd *= (k / 2 + 1.5);
  }
  return sum;
}

// Weideman's rational approximation with N = 40 terms (upper half plane).
struct Weideman {
  static constexpr int N = 40;
  double L;
  std::array<double, N> a;  // highest degree first

  Weideman() {
    const int M = 2 * N, M2 = 2 * M;
    L = std::sqrt(N / std::sqrt(2.0));
    std::vector<double> f(M2, 0.0);
    for (int k = -M + 1; k <= M - 1; ++k) {
      double t = L * std::tan(k * std::numbers::pi / (2.0 * M));
      f[k + M] = std::exp(-t * t) * (L * L + t * t);
    }
    // fftshift then the real part of the DFT, coefficients 1..N reversed
    std::vector<double> g(M2);
    for (int i = 0; i < M2; ++i) g[i] = f[(i + M) % M2];
    for (int j = 1; j <= N; ++j) {
      double re = 0.0;
      for (int m = 0; m < M2; ++m) re += g[m] * std::cos(2.0 * std::numbers::pi * j * m / M2);
      a[N - j] = re / M2;
    }
  }

  cplx operator()(cplx z) const {
    cplx d = L - I * z;
    cplx Z = (L + I * z) / d;
    cplx p = 0.0;
    for (double c : a) p = p * Z + c;
    return 2.0 * p / (d * d) + (1.0 / kSqrtPi) / d;
  }
};

const Weideman& weideman() {
  static const Weideman w;
  return w;
}

cplx faddeeva_cf(cplx z) {
  cplx f = z;
  for (int k = 60; k >= 1; --k) f = z - (0.5 * k) / f;
  return I / (kSqrtPi * f);
}

cplx faddeeva_asymptotic(cplx z) {
  cplx inv2z2 = 1.0 / (2.0 * z * z), term = 1.0, sum = 1.0;
  for (int k = 1; k < 30; ++k) {
    cplx next = term * (2.0 * k - 1.0) * inv2z2;
    if (std::abs(next) > std::abs(term)) break;
    term = next;
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum)) break;
  }
  return I / (kSqrtPi * z) * sum;
}

cplx faddeeva_upper(cplx z) {
  double r = std::abs(z);
  if (r < 2.0) return faddeeva_series(z);
  if (r < 8.0) return weideman()(z);
  if (r < 50.0) return faddeeva_cf(z);
  return faddeeva_asymptotic(z);
}

}  // namespace

cplx faddeeva(cplx z) {
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) throw AnalyticError("faddeeva argument must be finite");
  if (z.imag() >= 0) return faddeeva_upper(z);
  cplx z2 = z * z;
  if (-z2.real() > 700.0) throw AnalyticError("faddeeva overflow in the lower half plane");
  return 2.0 * std::exp(-z2) - faddeeva_upper(-z);
}

FrequencyGrid FrequencyGrid::symmetric(double tau, int points, double span) {
  if (!(tau > 0) || points < 3 || !(span > 0)) throw AnalyticError("invalid frequency grid");
  FrequencyGrid g;
  g.omega = Eigen::VectorXd::LinSpaced(points, -span / tau, span / tau);
  double h = g.omega(1) - g.omega(0);
  g.weights = Eigen::VectorXd::Constant(points, h);
  g.weights(0) = g.weights(points - 1) = 0.5 * h;
  return g;
}

double TwoPhotonAmplitude::norm2() const {
  return (grid.weights.transpose() * psi.cwiseAbs2() * grid.weights)(0, 0);
}

void TwoPhotonAmplitude::write_csv(std::ostream& os) const {
  os << "omega1,omega2,re,im\n" << std::setprecision(12);
  for (int i = 0; i < grid.size(); ++i)
    for (int j = 0; j < grid.size(); ++j)
      os << grid.omega(i) << ',' << grid.omega(j) << ',' << psi(i, j).real() << ',' << psi(i, j).imag() << '\n';
}

namespace {

void require_resolved(double gamma, double tau, const FrequencyGrid& grid) {
  // Features of width Γ carry relative weight of order Γτ; below 1e-6 they need not be resolved.
  double scale = gamma * tau > 1e-6 ? std::min(1.0 / tau, gamma) : 1.0 / tau;
  if (grid.step() > 0.5 * scale + 1e-12) throw AnalyticError("frequency grid does not resolve the 1/τ and Γ scales");
  if (grid.omega(grid.size() - 1) < 8.0 / tau - 1e-9) throw AnalyticError("frequency grid must cover ±8/τ");
}

}  // namespace

TwoPhotonAmplitude two_photon_input(double tau, const FrequencyGrid& grid) {
  int n = grid.size();
  TwoPhotonAmplitude a{grid, Matrix(n, n)};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double w1 = grid.omega(i), w2 = grid.omega(j);
      a.psi(i, j) = tau * std::exp(-(w1 * w1 + w2 * w2) * tau * tau / 2.0) / kSqrtPi;
    }
  return a;
}

TwoPhotonAmplitude two_photon_linear(double gamma, double tau, const FrequencyGrid& grid) {
  TwoPhotonAmplitude a = two_photon_input(tau, grid);
  int n = grid.size();
  auto t = [&](double w) { return (w - 0.5 * I * gamma) / (w + 0.5 * I * gamma); };
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a.psi(i, j) *= t(grid.omega(i)) * t(grid.omega(j));
  return a;
}

TwoPhotonAmplitude two_photon_output(double gamma, double tau, const FrequencyGrid& grid, TwoPhotonForm form) {
  require_resolved(gamma, tau, grid);
  int n = grid.size();
  TwoPhotonAmplitude out = two_photon_linear(gamma, tau, grid);
  if (gamma == 0.0) return out;
  std::vector<cplx> pole(n);
  for (int i = 0; i < n; ++i) pole[i] = grid.omega(i) + 0.5 * I * gamma;
  if (form == TwoPhotonForm::Exact) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double s = grid.omega(i) + grid.omega(j);
        cplx nl = tau * gamma * gamma * std::exp(-s * s * tau * tau / 4.0) * faddeeva((s + I * gamma) * tau / 2.0) /
                  (kSqrtPi * pole[i] * pole[j]);
        out.psi(i, j) += nl;
      }
    return out;
  }
  cplx wi = faddeeva(I * gamma * tau / 2.0);
  cplx norm = 1.0 / std::sqrt(1.0 + 2.0 * std::numbers::pi * std::pow(gamma * tau, 2) * wi * wi);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double w1 = grid.omega(i), w2 = grid.omega(j);
      cplx nl = gamma * gamma * tau * std::exp(-(w1 * w1 + w2 * w2) * tau * tau / 2.0) / (kSqrtPi * pole[i] * pole[j]);
      out.psi(i, j) = norm * (out.psi(i, j) + nl);
    }
  return out;
}

SchmidtResult schmidt(const TwoPhotonAmplitude& a, int keep) {
  int n = a.grid.size();
  double scale = a.psi.cwiseAbs().maxCoeff();
  if ((a.psi - a.psi.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(scale, 1e-300))
    throw AnalyticError("two-photon amplitude is not symmetric");
  Eigen::VectorXd sw = a.grid.weights.cwiseSqrt();
  Matrix M = sw.asDiagonal() * a.psi * sw.asDiagonal();
  Eigen::BDCSVD<Matrix> svd(M, Eigen::ComputeThinU);
  Eigen::VectorXd s2 = svd.singularValues().cwiseAbs2();
  double tot = s2.sum();
  SchmidtResult r;
  keep = std::min(keep, n);
  r.modes = Matrix(n, keep);
  for (int i = 0; i < keep; ++i) {
    r.lambdas.push_back(s2(i) / tot);
    Vector v = svd.matrixU().col(i);
    for (int k = 0; k < n; ++k) v(k) /= sw(k);
    Eigen::Index m;
    v.cwiseAbs().maxCoeff(&m);
    v *= std::conj(v(m)) / std::abs(v(m));
    r.modes.col(i) = v;
  }
  return r;
}

double degeneracy_residual(double tau, double beta, double gamma) {
  return 2.0 * kSqrtPi * beta * gamma * tau * faddeeva(I * gamma * tau / 2.0).real() - 1.0;
}

double solve_degeneracy(double beta, double gamma) {
  if (!(beta > 0 && beta <= 1)) throw AnalyticError("branching ratio must lie in (0, 1]");
  auto f = [&](double t) { return degeneracy_residual(t, beta, gamma); };
  double a = 1e-6 / gamma, fa = f(a);
  double b = a;
  const double tmax = 5.0 / gamma;
  bool found = false;
  for (int i = 1; i <= 500; ++i) {
    double x = tmax * i / 500.0, fx = f(x);
    if ((fa < 0) != (fx < 0)) {
      b = x;
      found = true;
      break;
    }
    a = x;
    fa = fx;
  }
  if (!found) throw AnalyticError("no bracket found for the degeneracy condition");
  boost::uintmax_t it = 200;
  auto r = boost::math::tools::toms748_solve(f, a, b, [](double l, double u) { return std::abs(u - l) < 1e-15; }, it);
  double root = 0.5 * (r.first + r.second);
  if (std::abs(f(root)) >= 1e-10) throw AnalyticError("degeneracy root did not converge");
  return root;
}

DegeneracyScan exact_degeneracy(double gamma, double lo, double hi, int points, double tol) {
  auto ratio = [&](double tau) {
    FrequencyGrid g = FrequencyGrid::symmetric(tau, points);
    auto s = schmidt(two_photon_output(gamma, tau, g, TwoPhotonForm::Exact), 2);
    return s.lambdas[0] / s.lambdas[1];
  };
  int bits = static_cast<int>(std::ceil(-std::log2(tol / hi))) + 1;
  boost::uintmax_t it = 200;
  auto r = boost::math::tools::brent_find_minima(ratio, lo, hi, bits, it);
  return {r.first, r.second};
}

}  // namespace pf
