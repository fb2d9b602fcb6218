#pragma once

#include <memory>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "photonforge/hilbert.hpp"

namespace pf {

inline constexpr double kEpsReg = 1e-8;
// Gaussian support [0, 4τ + √(2 ln 10¹⁰) τ] rounded up, in units of τ.
inline constexpr double kPulseSpan = 11.0;

class PulseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Immutable sample points with trapezoid weights; copies share storage.
class TimeGrid {
 public:
  TimeGrid() = default;
  explicit TimeGrid(std::vector<double> times);

  static TimeGrid uniform(double t0, double t1, int intervals);
  // Consecutive segments [breaks[i], breaks[i+1]] sampled with step ≤ max_steps[i].
  static TimeGrid piecewise(const std::vector<double>& breaks, const std::vector<double>& max_steps);
  // Fine step min(τ,1/Γ)/resolution over [0, 11τ], step (1/Γ)/resolution over a tail of `tail`/Γ.
  static TimeGrid for_pulse(double tau, double gamma = 1.0, int resolution = 200, double tail = 20.0);

  int size() const { return static_cast<int>(d_->t.size()); }
  double t_start() const { return d_->t.front(); }
  double t_end() const { return d_->t.back(); }
  double operator[](int k) const { return d_->t[k]; }
  const std::vector<double>& times() const { return d_->t; }
  const std::vector<double>& weights() const { return d_->w; }

  // Interval index k with t_k ≤ t ≤ t_{k+1} (clamped to the grid).
  int interval(double t) const;
  // Samples T − t_k in increasing order.
  TimeGrid reversed(double T) const;
  // Every interval split into `factor` equal parts.
  TimeGrid refined(int factor) const;

  cplx integrate(const Vector& f) const;
  double integrate(const Eigen::VectorXd& f) const;

  bool same_as(const TimeGrid& o) const;

 private:
  struct Data {
    std::vector<double> t, w;
  };
  std::shared_ptr<const Data> d_;
};

// Per-interval integrals of the cubic Lagrange interpolant of f (4th order).
Vector interval_integrals(const TimeGrid& grid, const Vector& f);
// F_k = ∫_{t_k}^{t_end} f dt.
Vector tail_integral(const TimeGrid& grid, const Vector& f);
// F_k = ∫_{t_start}^{t_k} f dt.
Vector head_integral(const TimeGrid& grid, const Vector& f);

class TemporalMode {
 public:
  struct Point {
    cplx phi;
    double S;  // ∫_{t_start}^t |φ|²
    double R;  // ∫_t^{t_end} |φ|²
  };

  TemporalMode() = default;
  TemporalMode(TimeGrid grid, Vector samples);

  const TimeGrid& grid() const { return grid_; }
  const Vector& samples() const { return samples_; }
  int support_begin() const { return lo_; }
  int support_end() const { return hi_; }

  cplx at(double t) const;
  Point eval(double t) const;
  double cumulative(double t) const { return eval(t).S; }
  double remaining(double t) const { return eval(t).R; }
  double cumulative_at(int k) const { return S_[k]; }
  double remaining_at(int k) const { return R_[k]; }
  // Quadrature (trapezoid) norm ∫|φ|².
  double norm2() const;
  // ∫ φ* ψ by trapezoid quadrature; grids must coincide.
  cplx overlap(const TemporalMode& other) const;
  TemporalMode scaled(cplx s) const { return {grid_, s * samples_}; }
  TemporalMode normalized() const;

  void write_csv(std::ostream& os) const;

 private:
  int locate(double t) const;
  cplx interp(int k, double t) const;

  TimeGrid grid_;
  Vector samples_;
  int lo_ = 0, hi_ = -1;
  std::vector<double> S_, R_, seg_;
};

// sin²θ(t) = S/(S+R), both regularized sides evaluated with the backward-accurate R.
struct AngleFactors {
  double theta;
  double cot2;  // cot 2θ
  double csc2;  // csc 2θ
  double tan1;  // tan θ
  double cot1;  // cot θ
};
AngleFactors angle_factors(const TemporalMode::Point& p);
double theta(const TemporalMode& mode, double t);

class CouplingFunction {
 public:
  enum class Kind { Emit, Catch };

  CouplingFunction() = default;
  CouplingFunction(std::shared_ptr<const TemporalMode> mode, Kind kind);

  Kind kind() const { return kind_; }
  const TemporalMode& mode() const { return *mode_; }
  cplx at(double t) const;
  Vector samples() const;
  double window_lo() const { return t_lo_; }
  double window_hi() const { return t_hi_; }

 private:
  std::shared_ptr<const TemporalMode> mode_;
  Kind kind_ = Kind::Emit;
  double t_lo_ = 0, t_hi_ = 0;
};

TemporalMode gaussian_mode(double tau, const TimeGrid& grid, double min_tail = 8.0);
CouplingFunction emit_coupling(const TemporalMode& mode);
CouplingFunction catch_coupling(const TemporalMode& mode);
TemporalMode time_reverse(const TemporalMode& mode, double T);
std::vector<TemporalMode> orthonormalize(const std::vector<TemporalMode>& modes, double tol = 1e-8);

// Single-excitation input→output maps of virtual cavities and their adjoints.
// Emission cavity for mode u: (T f)(t) = f(t) − u(t)∫_0^t u* f / R_u ds.
TemporalMode emission_transfer(const TemporalMode& u, const TemporalMode& f);
TemporalMode emission_transfer_adjoint(const TemporalMode& u, const TemporalMode& h);
// Catch cavity for mode ψ: (T f)(t) = f(t) − ψ(t)/S_ψ(t) ∫_0^t ψ* f ds.
TemporalMode catch_transfer(const TemporalMode& psi, const TemporalMode& f);
TemporalMode catch_transfer_adjoint(const TemporalMode& psi, const TemporalMode& h);

}  // namespace pf
