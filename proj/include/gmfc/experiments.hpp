#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gmfc/dynamics.hpp"
#include "gmfc/report.hpp"

// Experiment drivers.  Each driver runs a numerical check of a structural
// property of the controlled-interaction model at a configurable scale and
// returns a report whose verdict is computed from declared criteria with
// tolerances in Monte Carlo stderr multiples.

namespace gmfc {

// Named scalar pair potentials Phi(t, x, y, mu); the measure argument is
// the population context.  ids: tanh_diff (tanh(y-x)), linear_diff (y-x),
// mean_gap (y - mean(mu)), const_neg (-1), const_pos (+1).
PhiFn phi_registry(const std::string& id);

// Named graphons; ids: constant (0.5), product (u*v), sbm2 (two blocks,
// 0.8 within / 0.2 across), min (min(u,v)).
AnalyticGraphon graphon_registry(const std::string& id);

// Attraction model: d = 1, sigma = 1, no running cost, terminal reward =
// population mean, and interaction drift (1/n) sum_j gamma_ij
// Phi(t,X_i,X_j,mu_n) with the named gamma rule fused into the coefficient.
// rules: bang_bang (1{Phi >= 0}), zero, one, flipped (1{Phi < 0}),
// random_pair (iid uniform per pair and step).
ModelSpec attraction_model(const std::string& phi_id, const std::string& rule);

// The lifted bang-bang law 1{Phi >= 0} matching attraction_model boxes.
ControlLaw bang_bang_law(const std::string& phi_id);

// Pair-coefficient twin of attraction_model: b1 = Phi so any interaction
// control can drive it through the generic path.  Measure-dependent
// potentials are refused (the pair coefficient sees no population law).
ModelSpec attraction_pair_model(const std::string& phi_id);

struct Example1Config {
  std::string phi = "tanh_diff";
  int n = 200;
  double T = 1.0;
  double dt = 0.01;
  int reps = 64;
  std::uint64_t seed = 1;
  int workers = 1;
  InitSpec init = InitSpec::gaussian(0.0, 1.0);
  double tol_stderr = 3.0;
  bool monotone_declared = true;
};

// Bang-bang rule against the four baselines under common random numbers;
// pass iff the bang-bang cost is within tol_stderr of at least every
// baseline's (i.e. J_hat >= J_base - tol*stderr of the paired difference).
ExperimentReport run_example1(const Example1Config& cfg);

// Social-attention model: drift (1/n) sum_j gamma_ij * scale * xi_ij *
// tanh(X_j), sigma = 1, running reward (1/n) sum_j L(gamma_ij) with
// L(e) = -e^2 (id "quadratic") or L(e) = e ("linear"), no terminal reward.
ModelSpec social_model(const std::string& cost_id, double b1_scale);

// gbar(v) = v: the uniform-action randomized control on [0,1]
RelaxedInteractionControl uniform_relaxed_control();

struct Example2Config {
  std::string cost = "quadratic";
  std::string graphon = "constant";
  double b1_scale = 0.2;
  int n = 100;
  double T = 1.0;
  double dt = 0.02;
  int reps = 32;
  std::uint64_t seed = 1;
  int workers = 1;
  int quad_points = 64;
  InitSpec init = InitSpec::gaussian(0.0, 1.0);
  double tol_stderr = 3.0;
  bool declare_concave = true;
};

// Randomized control versus its barycentric projection: the Jensen cost
// gap must be nonnegative up to tolerance, and the terminal state flows
// must agree up to an independently simulated sampling floor.
ExperimentReport run_example2(const RelaxedInteractionControl& gbar,
                              const Example2Config& cfg);

struct SweepConfig {
  double T = 1.0;
  double dt = 0.01;
  int reps = 32;
  std::uint64_t seed = 1;
  int workers = 1;
  InitSpec init = InitSpec::gaussian(0.0, 1.0);
  double slack_stderr = 2.0;
};

// For each n: sample the kernel, simulate under the same law and seed, and
// record the label-stratified terminal W1 against the reference run at
// ref_n plus the paired cost gap |J_n - J_ref|.  Pass iff both sequences
// decrease up to slack_stderr slack and the distance curve ends strictly
// below its first value.
ExperimentReport convergence_sweep(const ModelSpec& model, const ControlLaw& law,
                                   const AnalyticGraphon& graphon, std::span<const int> ns,
                                   int ref_n, const SweepConfig& cfg);

// Cut distance between kernels sampled at each n and a reference sampled
// at twice the largest n, under the Lipschitz test map f.  Pass iff the
// distances are nonincreasing and, when the graphon declares a Lipschitz
// bound, every value is <= f_lipschitz * lipschitz * 2/n.
ExperimentReport kernel_convergence_check(
    const AnalyticGraphon& g, std::span<const int> ns,
    const std::function<double(std::span<const double>)>& f, double f_lipschitz = 1.0);

// Parameterized control family for the derivative-free optimizer.
struct ControlFamily {
  std::string id;
  std::vector<double> init_mean, init_sd;  // one entry per parameter
  std::vector<double> lo, hi;              // parameter box, samples clamped
  std::function<ControlLaw(std::span<const double>)> make;

  static ControlFamily constant_gamma(double mean = 0.5, double sd = 0.25);
  static ControlFamily threshold_phi(const std::string& phi_id, double mean = 0.0,
                                     double sd = 0.5);
};

struct OptimizeResult {
  std::vector<double> best_params;
  double best_cost = 0;
  ExperimentReport report;
};

// Cross-entropy search over the family parameters: per round, sample
// `population` parameter vectors from a diagonal Gaussian, evaluate J under
// common random numbers, refit on the elite fraction.  budget counts cost
// evaluations and must cover at least one round.  The first candidate of
// the first round is the initial mean, so the result never falls below it.
OptimizeResult optimize_control(const ModelSpec& model, const ControlFamily& family,
                                const StepKernel& kernel, const InitSpec& init,
                                const SimConfig& sim, int budget,
                                double elite_fraction = 0.25, int population = 16);

}  // namespace gmfc
