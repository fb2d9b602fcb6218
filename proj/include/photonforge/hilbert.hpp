#pragma once

#include <complex>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace pf {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

inline constexpr cplx I{0.0, 1.0};

class HilbertError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Ordered tensor product of labelled subsystems; the first subsystem is the
// most significant digit of the flat index.
class TensorSpace {
 public:
  struct Subsystem {
    std::string label;
    int dim;
  };

  TensorSpace() = default;
  explicit TensorSpace(std::vector<Subsystem> subsystems);

  int total_dim() const { return total_; }
  int size() const { return static_cast<int>(subs_.size()); }
  const std::vector<Subsystem>& subsystems() const { return subs_; }
  int index_of(std::string_view label) const;
  int dim(std::string_view label) const { return subs_[index_of(label)].dim; }
  int stride(int subsystem) const { return strides_[subsystem]; }

  std::vector<int> digits(int flat) const;
  int flat(std::span<const int> digits) const;

  bool operator==(const TensorSpace& o) const;

 private:
  std::vector<Subsystem> subs_;
  std::vector<int> strides_;
  int total_ = 1;
};

class OperatorMatrix {
 public:
  OperatorMatrix() = default;
  OperatorMatrix(TensorSpace space, Matrix m);

  const TensorSpace& space() const { return space_; }
  const Matrix& matrix() const { return m_; }
  int dim() const { return static_cast<int>(m_.rows()); }
  bool is_hermitian(double tol = 1e-12) const;
  OperatorMatrix adjoint() const { return {space_, m_.adjoint()}; }

  friend OperatorMatrix operator*(const OperatorMatrix& a, const OperatorMatrix& b);
  friend OperatorMatrix operator+(const OperatorMatrix& a, const OperatorMatrix& b);
  friend OperatorMatrix operator-(const OperatorMatrix& a, const OperatorMatrix& b);
  friend OperatorMatrix operator*(cplx s, const OperatorMatrix& a) { return {a.space_, s * a.m_}; }

 private:
  TensorSpace space_;
  Matrix m_;
};

class StateMatrix {
 public:
  StateMatrix() = default;
  // declared_trace is 1 for normalized states and ≤ 1 for conditional ones.
  StateMatrix(TensorSpace space, Matrix rho, double declared_trace = 1.0);

  const TensorSpace& space() const { return space_; }
  const Matrix& matrix() const { return rho_; }
  int dim() const { return static_cast<int>(rho_.rows()); }
  double trace() const { return rho_.trace().real(); }
  double declared_trace() const { return declared_; }

  // Throws HilbertError when Hermiticity, trace or positivity tolerances fail.
  void validate(double herm_tol = 1e-12, double trace_tol = 1e-10, double pos_tol = 1e-10) const;
  StateMatrix normalized() const;
  double expectation(const OperatorMatrix& op) const;

 private:
  TensorSpace space_;
  Matrix rho_;
  double declared_ = 1.0;
};

class StateVector {
 public:
  StateVector() = default;
  StateVector(TensorSpace space, Vector psi);

  const TensorSpace& space() const { return space_; }
  const Vector& vector() const { return psi_; }
  double norm() const { return psi_.norm(); }
  StateMatrix density() const;

 private:
  TensorSpace space_;
  Vector psi_;
};

Matrix ladder(int dim);
Matrix number_op(int dim);
Matrix sigma_minus();
Matrix sigma_ee();
Vector fock(int dim, int n);
Vector coherent(int dim, cplx alpha);

OperatorMatrix embed(const Matrix& local, std::string_view label, const TensorSpace& space);
StateVector product_state(const TensorSpace& space, std::span<const int> digits);
StateMatrix partial_trace(const StateMatrix& rho, const std::vector<std::string>& keep);

double fidelity(const StateMatrix& rho, const StateMatrix& sigma);
double trace_distance(const Matrix& a, const Matrix& b);

Matrix expm(const Matrix& a);
// Ŝ(r) = exp(−r(a² − a†²)/2) on Fock levels 0..cutoff.
Matrix squeeze(double r, int cutoff);
// Exact population of Ŝ(r)|0⟩ above the cutoff.
double squeezed_vacuum_tail(double r, int cutoff);
// Positive square root of a Hermitian positive semidefinite matrix.
Matrix psd_sqrt(const Matrix& a);

}  // namespace pf
