#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gmfc/controls.hpp"
#include "gmfc/errors.hpp"
#include "gmfc/kernels.hpp"
#include "gmfc/metrics.hpp"
#include "gmfc/rng.hpp"

// The n-particle controlled system: explicit Euler-Maruyama with the
// interaction measures rebuilt from the pre-step state, per-agent counter
// RNG streams keyed by (seed, replication, agent, step), and the planner
// cost J_n accumulated by left-endpoint quadrature.

namespace gmfc {

struct ParticleEnsemble {
  int n = 0;
  int d = 1;
  double t = 0;
  std::vector<double> states;  // n*d row-major
  std::vector<double> labels;  // u_i = (i+1)/n for 0-based i; never mutated

  static ParticleEnsemble zeros(int n, int d = 1);

  std::span<const double> state(int i) const {
    return {states.data() + (size_t)i * d, (size_t)d};
  }
  std::span<double> state(int i) { return {states.data() + (size_t)i * d, (size_t)d}; }
  std::vector<double> state_mean() const;
  void require_finite() const;  // NonFiniteState
};

// Equal-weight atom list (action_j, state_j, label_j, mark_j) viewed over
// shared columns; the outgoing set of agent i carries gamma_ij, the
// incoming set gamma_ji, and both share the same state/label/mark columns.
struct InteractionSampleSet {
  int n = 0, d = 1, adim = 1, mdim = 1;
  std::span<const double> actions;  // n*adim
  std::span<const double> states;   // n*d
  std::span<const double> labels;   // n
  std::span<const double> marks;    // n*mdim (kernel row of the owning agent)

  std::span<const double> action(int j) const {
    return {actions.data() + (size_t)j * adim, (size_t)adim};
  }
  std::span<const double> state(int j) const {
    return {states.data() + (size_t)j * d, (size_t)d};
  }
  std::span<const double> mark(int j) const {
    return {marks.data() + (size_t)j * mdim, (size_t)mdim};
  }
};

// Owning materialization of every agent's pair of sample sets; used by the
// fully general coefficient path and by tests.  The integrator's separable
// path streams rows instead and never builds this.
struct InteractionSets {
  int n = 0, d = 1, adim = 1, mdim = 1;
  std::vector<double> out_actions;  // n*n*adim, [i][j] = gamma_ij
  std::vector<double> in_actions;   // n*n*adim, [i][j] = gamma_ji
  std::vector<double> states;       // n*d copy
  std::vector<double> labels;       // n copy
  std::vector<double> marks;        // n*n*mdim copy of the kernel rows

  InteractionSampleSet m1(int i) const;  // outgoing
  InteractionSampleSet m2(int i) const;  // incoming
};

InteractionSets build_interaction_sets(const ParticleEnsemble& ens,
                                       const PairControlMatrix& pairs,
                                       const StepKernel& kernel);

// Terminal neighborhood samples of agent i: atoms (X_j_T, xi_ij).
struct TerminalSamples {
  int n = 0, d = 1, mdim = 1;
  std::span<const double> states;  // n*d
  std::span<const double> marks;   // n*mdim

  std::span<const double> state(int j) const {
    return {states.data() + (size_t)j * d, (size_t)d};
  }
  std::span<const double> mark(int j) const {
    return {marks.data() + (size_t)j * mdim, (size_t)mdim};
  }
};

TerminalSamples terminal_measure(const ParticleEnsemble& ens, const StepKernel& kernel, int i);

// Coefficients of the controlled SDE and running/terminal costs.  The
// separable form is
//   b = b0(t,x,a) + (1/n) sum_j gamma_ij*b1(t,xi_ij,x,X_j,u_j)
//                 + (1/n) sum_j gamma_ji*b2(t,xi_ij,x,X_j,u_j)
// with a scalar interaction action; the general form takes the raw sample
// sets and replaces the separable parts entirely.  Running costs follow the
// same split, with the interaction action passed as an argument so the
// per-pair cost may be nonlinear in it.
struct ModelSpec {
  std::string id = "custom";
  int d = 1;
  ActionBox gamma_box = ActionBox::interval(0, 1);
  ActionBox alpha_box = ActionBox::interval(0, 1);

  using OwnDrift = std::function<void(double t, std::span<const double> x,
                                      std::span<const double> a, std::span<double> out)>;
  using PairDrift =
      std::function<void(double t, std::span<const double> mark, std::span<const double> x,
                         std::span<const double> xj, double uj, std::span<double> out)>;
  using GeneralDrift = std::function<void(
      double t, std::span<const double> x, double u, const InteractionSampleSet& m1,
      const InteractionSampleSet& m2, std::span<const double> a, std::span<double> out)>;
  using Diffusion =
      std::function<void(double t, std::span<const double> x, std::span<double> out)>;
  using OwnCost =
      std::function<double(double t, std::span<const double> x, std::span<const double> a)>;
  using PairCost = std::function<double(double t, std::span<const double> action,
                                        std::span<const double> mark,
                                        std::span<const double> x, std::span<const double> xj,
                                        double uj)>;
  using GeneralCost = std::function<double(
      double t, std::span<const double> x, double u, const InteractionSampleSet& m1,
      const InteractionSampleSet& m2, std::span<const double> a)>;
  using TerminalCost =
      std::function<double(std::span<const double> x, const TerminalSamples& r)>;
  // out = averaged interaction drift of agent i in one pass; installed by
  // callers that can fuse the control into the coefficient (for instance a
  // bang-bang control whose coefficient is its own switching potential)
  using FusedRow = std::function<void(int i, const PopulationContext& ctx,
                                      const StepKernel& kernel, std::span<double> out)>;

  OwnDrift b0;           // null = 0
  PairDrift b1, b2;      // null = 0; scaled by the scalar interaction action
  GeneralDrift b_general;  // exclusive with b0/b1/b2/fused_drift
  FusedRow fused_drift;  // optional accelerator replacing the b1/b2 loops
  Diffusion sigma;       // d*d row-major; null = no noise
  OwnCost l0;
  PairCost l1, l2;       // averaged over j with gamma_ij resp. gamma_ji
  GeneralCost l_general;  // exclusive with l0/l1/l2
  TerminalCost g;        // null = 0

  double drift_bound = 0;      // declared |b| bound; 0 = undeclared
  double diffusion_floor = 0;  // declared lower bound on z'ss'z; 0 = undeclared
  bool cost_concave_in_gamma = false;  // declared, not verified symbolically
  bool monotone_example = false;       // declared monotone-structure hypotheses

  void validate() const;
};

// Randomized spot-check of the declared bounds: |b| at sampled one-atom
// measures against drift_bound, directional s s' mass against
// diffusion_floor.  Throws DomainViolation on a violated declaration.
void check_model_bounds(const ModelSpec& model, const MarkSpace& marks, double state_range,
                        int trials, std::uint64_t seed);

struct SimConfig {
  int n = 0;
  double T = 0;
  double dt = 0;
  int reps = 1;
  std::uint64_t seed = 1;
  int store_stride = 0;  // 0: initial+terminal only; k>0: also every k-th step
  int workers = 1;

  int steps() const;
  void validate() const;
};

// Initial state sampler; labels are always the fixed grid.
struct InitSpec {
  enum class Family { Dirac, Gaussian, Uniform, PerLabelTable };
  Family family = Family::Dirac;
  std::vector<double> point{0.0};          // dirac
  double mean = 0, stddev = 1;             // gaussian, iid per component
  double lo = 0, hi = 1;                   // uniform, iid per component
  std::vector<std::vector<double>> table;  // K rows of d entries, indexed by label block

  static InitSpec dirac(std::vector<double> point);
  static InitSpec gaussian(double mean, double stddev);
  static InitSpec uniform(double lo, double hi);
  static InitSpec per_label_table(std::vector<std::vector<double>> rows);
  void validate(int d) const;
};

ParticleEnsemble initial_ensemble(const InitSpec& init, int n, int d, std::uint64_t seed,
                                  int rep);

struct Trajectory {
  int rep = 0;
  std::vector<double> snap_times;
  std::vector<std::vector<double>> snapshots;  // n*d each, aligned with snap_times
  double running_cost = 0;
  double terminal_cost = 0;

  double total_cost() const { return running_cost + terminal_cost; }
  const std::vector<double>& terminal_states() const;
};

struct TrajectoryBundle {
  int n = 0, d = 1;
  double T = 0, dt = 0;
  std::vector<Trajectory> reps;
};

// Controls driving one simulation: either a lifted deterministic pair
// (gamma, alpha) or a relaxed control realized afresh every step.
struct ControlLaw {
  InteractionControl gamma;
  RegularControl alpha;
  bool use_relaxed = false;
  RelaxedInteractionControl relaxed;

  static ControlLaw lifted(InteractionControl g, RegularControl a);
  static ControlLaw relaxed_law(RelaxedInteractionControl gbar, RegularControl a);
};

// Noise key of one explicit step; agent streams are derived per agent.
struct StepKey {
  std::uint64_t seed = 0;
  int rep = 0;
  int step = 0;
};

// Scratch reused across steps of one replication.
struct StepWorkspace {
  std::vector<double> next_states, gamma_row, gamma_col, coef, accum, drift, act, sigma_mat,
      noise;
};

// One explicit step from the pre-step state; when cost is non-null the
// left-endpoint running-cost integrand dt*(1/n) sum_i L_i is added to it.
void euler_step(ParticleEnsemble& ens, const ModelSpec& model,
                const PairControlMatrix& pairs, const StepKernel& kernel, double dt,
                const StepKey& key, StepWorkspace* ws = nullptr, double* cost = nullptr);

TrajectoryBundle simulate(const ModelSpec& model, const ControlLaw& law,
                          const StepKernel& kernel, const InitSpec& init,
                          const SimConfig& cfg);

// Monte Carlo summary of the per-replication totals J_n.
McSummary evaluate_cost(const TrajectoryBundle& bundle);

// CSV writers.  Trajectory: t,rep,agent,x_1..x_d in (rep, time, agent)
// order.  Cost summary: model,n,dt,M,J_mean,J_stderr, one row.
void write_trajectory_csv(const TrajectoryBundle& bundle, const std::string& path);
void write_cost_summary_csv(const std::string& model_id, const SimConfig& cfg,
                            const McSummary& cost, const std::string& path);

}  // namespace gmfc
