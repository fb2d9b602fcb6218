#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Sparse>

#include "photonforge/hilbert.hpp"
#include "photonforge/pulses.hpp"

namespace pf {

class IntegrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor product of local factors on selected subsystems, identity elsewhere.
struct LocalProduct {
  std::vector<std::pair<int, Matrix>> factors;
};

struct Term {
  int coeff;  // index into the coefficient vector
  LocalProduct op;
};

struct Channel {
  std::string name;
  std::vector<Term> terms;  // L(t) = Σ c_k(t) O_k
};

// Time-dependent Lindblad generator: H(t) = Σ c_k(t) O_k plus jump channels,
// all coefficients produced together by `coefficients`.
struct Generator {
  TensorSpace space;
  int n_coeffs = 0;
  std::function<void(double, std::vector<cplx>&)> coefficients;
  std::vector<Term> hamiltonian;
  std::vector<Channel> channels;

  std::vector<cplx> coeffs_at(double t) const;
  Matrix dense(const LocalProduct& op) const;
  Matrix hamiltonian_at(double t) const;
  Matrix channel_at(int c, double t) const;
};

// Lowering shift of a product term in total excitation number (digit sum).
int excitation_shift(const LocalProduct& op);

class SectorLayout {
 public:
  explicit SectorLayout(const TensorSpace& space);
  int count() const { return static_cast<int>(members_.size()); }
  int size(int N) const { return N >= 0 && N < count() ? static_cast<int>(members_[N].size()) : 0; }
  const std::vector<int>& members(int N) const { return members_[N]; }
  int sector_of(int flat) const { return sector_[flat]; }
  int position(int flat) const { return pos_[flat]; }

 private:
  std::vector<std::vector<int>> members_;
  std::vector<int> sector_, pos_;
};

// Density-matrix-like object stored as excitation-sector blocks (N, M).
struct BlockState {
  std::vector<std::pair<int, int>> keys;
  std::vector<Matrix> blocks;

  int find(int r, int c) const;
  void axpy(cplx a, const BlockState& x);  // this += a·x (same key layout)
  double trace() const;
};

// Blocks with row sector ≤ column sector. Jump terms shift both sectors equally,
// so this subset evolves on its own.
BlockState upper_blocks(const BlockState& x);

class BlockEvolver {
 public:
  // Only sectors in [min_sector, max_sector] are tracked (max_sector < 0: all);
  // feeding into untracked sectors is dropped.
  explicit BlockEvolver(Generator gen, int min_sector = 0, int max_sector = -1);

  const Generator& generator() const { return gen_; }
  const SectorLayout& layout() const { return layout_; }
  int min_sector() const { return min_sector_; }
  int max_sector() const { return max_sector_; }
  bool tracked(int N) const { return N >= min_sector_ && N <= max_sector_; }

  BlockState from_dense(const Matrix& rho) const;
  BlockState from_keys(std::vector<std::pair<int, int>> keys) const;
  // mirror: x holds only blocks with row sector ≤ column sector of a Hermitian state.
  Matrix to_dense(const BlockState& x, bool mirror = false) const;
  Vector sector_vector(int N, const Vector& full) const;
  Vector full_vector(int N, const Vector& sec) const;

  // One RK4 step of every state from t0 to t1 (generator blocks shared).
  void step(double t0, double t1, const std::vector<BlockState*>& states);
  // One RK4 step of sector-N pure vectors under −iH_eff (or −iH_eff† when adjoint); t1 < t0 allowed.
  void step_vectors(double t0, double t1, int N, const std::vector<Vector*>& vecs, bool adjoint = false);

  // Sector blocks at time t.
  Matrix heff(int N, double t);
  Matrix channel_block(int c, int N, double t);  // maps sector N → N − shift
  int channel_shift(int c) const { return shifts_[c]; }

 private:
  struct Snapshot {
    double t = 0;
    bool valid = false;
    std::vector<Matrix> heff, heff_adj;           // per sector
    std::vector<std::vector<Matrix>> L, L_adj;    // [channel][source sector]
    std::vector<std::vector<bool>> L_nonzero;
  };
  const Snapshot& snapshot(double t, const Snapshot* keep1 = nullptr, const Snapshot* keep2 = nullptr);
  void build(Snapshot& s, double t) const;
  void rhs(const Snapshot& s, const BlockState& x, BlockState& dx) const;
  std::vector<std::pair<int, int>> closure(std::vector<std::pair<int, int>> keys) const;
  Matrix restrict(const LocalProduct& op, int row_sector, int col_sector) const;

  Generator gen_;
  SectorLayout layout_;
  int min_sector_, max_sector_;
  std::vector<std::vector<int>> digits_;
  std::vector<int> shifts_;
  using SparseOp = Eigen::SparseMatrix<cplx>;
  std::vector<std::vector<SparseOp>> hterm_;               // [term][sector]
  std::vector<std::vector<std::vector<SparseOp>>> lterm_;  // [channel][term][source sector]
  std::vector<std::vector<std::vector<SparseOp>>> llterm_; // [channel][k·terms + l][sector]: O_k†O_l
  Snapshot cache_[3];
  struct Scratch {
    BlockState k, acc, y;
  };
  std::vector<Scratch> scratch_;
};

}  // namespace pf
