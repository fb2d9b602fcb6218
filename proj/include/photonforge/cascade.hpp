#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "photonforge/hilbert.hpp"
#include "photonforge/lindblad.hpp"
#include "photonforge/pulses.hpp"

namespace pf {

struct EmitterParams {
  double gamma_wg = 1.0;    // Γ: decay into the waveguide
  double gamma_loss = 0.0;  // γ: decay into other channels
  double dephasing = 0.0;   // κ: pure dephasing rate

  void validate() const;
};

enum class Picture { Schrodinger, Interaction };

class ConfigurationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CavityNode {
  std::string label;
  CouplingFunction coupling;
  int dim;
};

// Virtual input cavities → emitter → virtual output cavities, in cascade order.
// In the interaction picture there is exactly one input mode and an implicit
// auxiliary mode "c".
class CascadeNetwork {
 public:
  explicit CascadeNetwork(EmitterParams params, Picture picture = Picture::Schrodinger);

  CascadeNetwork& add_input(std::string label, const TemporalMode& mode, int dim);
  CascadeNetwork& add_input(std::string label, CouplingFunction coupling, int dim);
  CascadeNetwork& add_output(std::string label, const TemporalMode& mode, int dim);
  CascadeNetwork& set_aux_dim(int dim);

  Picture picture() const { return picture_; }
  const EmitterParams& params() const { return params_; }
  const std::vector<CavityNode>& inputs() const { return inputs_; }
  const std::vector<CavityNode>& outputs() const { return outputs_; }
  int aux_dim() const { return aux_dim_; }

  TensorSpace space() const;
  Generator generator() const;

 private:
  EmitterParams params_;
  Picture picture_;
  std::vector<CavityNode> inputs_, outputs_;
  int aux_dim_ = 2;
};

inline const std::string kEmitter = "emitter";
inline const std::string kAux = "c";

struct GeneratorSnapshot {
  OperatorMatrix H;
  std::vector<std::pair<std::string, OperatorMatrix>> jumps;  // "waveguide" first

  const OperatorMatrix& jump(std::string_view name) const;
};

GeneratorSnapshot build_generator(const CascadeNetwork& net, double t);
GeneratorSnapshot build_interaction_generator(const TemporalMode& mode, const EmitterParams& params, double t,
                                              int mode_dim, int aux_dim = 2);
// The interaction-picture generator as a block-evolvable Generator.
Generator interaction_generator(const TemporalMode& mode, const EmitterParams& params, int mode_dim, int aux_dim);

struct EvolveOptions {
  int substeps = 1;               // RK4 steps per grid interval
  int min_sector = 0;             // lowest tracked excitation sector
  int max_sector = -1;            // highest tracked sector (−1: all)
  std::vector<int> record;        // grid indices to record (empty: final only)
  double trace_tol = 1e-6;        // drift bound before an IntegrationError
  bool check_trace = true;
};

struct MeTrajectory {
  std::vector<double> times;
  std::vector<StateMatrix> states;
  double max_trace_drift = 0.0;
  const StateMatrix& final_state() const { return states.back(); }
};

MeTrajectory evolve_me(const CascadeNetwork& net, const StateMatrix& rho0, const TimeGrid& grid,
                       const EvolveOptions& opt = {});

// Couplings (upstream, downstream) for two cascaded input cavities emitting the
// orthogonal modes u1 and u2; checked against a single-excitation propagation.
std::pair<CouplingFunction, CouplingFunction> two_mode_emission_couplings(const TemporalMode& u1,
                                                                          const TemporalMode& u2,
                                                                          bool verify = true);
// Trace-norm distance between the weighted correlation matrices produced by the
// two couplings for single excitations and Σ_i u_i* u_iᵀ.
double two_mode_emission_error(const CouplingFunction& g1, const CouplingFunction& g2, const TemporalMode& u1,
                               const TemporalMode& u2);

// First-order correlation G1(t_j,t_k) = ⟨E†(t_j)E(t_k)⟩ of the waveguide output on
// `samples`, integrated with `substeps` RK4 steps per sample interval.
Matrix output_correlation(const CascadeNetwork& net, const StateMatrix& rho0, const TimeGrid& samples,
                          int substeps = 1);

// Trajectory dump: t followed by the listed expectation values.
void write_observables_csv(std::ostream& os, const MeTrajectory& traj,
                           const std::vector<std::pair<std::string, OperatorMatrix>>& observables);

}  // namespace pf
