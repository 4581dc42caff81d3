#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gmfc/errors.hpp"

// Distances between equal-weight empirical measures and Monte Carlo
// summaries.  Only uniform weights exist in this codebase: every measure in
// scope is an n-atom empirical law.

namespace gmfc {

struct EmpiricalMeasure {
  int m = 0;  // atoms
  int k = 0;  // coordinates per atom
  std::vector<double> atoms;  // m*k row-major

  static EmpiricalMeasure from_atoms(int m, int k, std::vector<double> atoms);
  // uniform weights only; anything else is rejected
  static EmpiricalMeasure from_atoms(int m, int k, std::vector<double> atoms,
                                     const std::vector<double>& weights);
  std::span<const double> atom(int i) const { return {atoms.data() + (size_t)i * k, (size_t)k}; }
};

// exact W1 between equal-length 1-d samples: mean absolute difference of
// the sorted sequences
double w1_sorted(std::span<const double> a, std::span<const double> b);

// exact W1 between 1-d samples of possibly different lengths, via the
// merged quantile grid; reduces to w1_sorted when lengths match
double w1_quantile(std::span<const double> a, std::span<const double> b);

inline constexpr int kAssignmentCap = 512;

// exact W1 between two m-point sets in R^k: minimum-cost perfect matching
// (shortest augmenting path) on the Euclidean cost matrix; k=1 reduces to
// the sorted coupling, agrees with w1_sorted bitwise, and ignores the cap
double w1_assignment(std::span<const double> a, std::span<const double> b, int m, int k,
                     int cap = kAssignmentCap);

struct McSummary {
  double mean = 0;
  double stderror = 0;
  int count = 0;
};
McSummary mc_summary(std::span<const double> values);

struct TrajectoryBundle;  // dynamics

// Distance between two simulated state flows at the requested times.
// Replication r of one bundle is compared against replication r of the
// other (pairing preserves common-random-number coupling) and the mean and
// stderr over replications are reported.  state_marginal compares the full
// state samples of a snapshot; label_stratified splits agents into
// B = ceil(sqrt(min(n_a,n_b))) equal label bins, compares states within
// each bin, and averages over bins.  1-d states use the exact quantile W1;
// higher dimensions use the assignment solver on a seeded subsample when a
// side exceeds the cap.
enum class FlowMode { StateMarginal, LabelStratified };

struct FlowPoint {
  double t = 0;
  double distance = 0;
  double stderror = 0;
};

std::vector<FlowPoint> flow_distance(const TrajectoryBundle& a, const TrajectoryBundle& b,
                                     std::span<const double> times, FlowMode mode,
                                     double time_tol = 1e-9);

// CSV: t,distance,mode,n_a,n_b
void write_distance_curve_csv(const std::vector<FlowPoint>& curve, FlowMode mode, int n_a,
                              int n_b, const std::string& path);

}  // namespace gmfc
